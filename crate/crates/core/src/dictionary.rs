//! Epistemological classification of annotations.
//!
//! Every annotation is classified along four independent dimensions:
//! purpose, knowledge domain, biological scale and (optionally) method of
//! acquisition. Labels are matched after [`normalize_label`], so
//! `"Variant in Transcript"`, `variant_in_transcript` and `'variant in
//! transcript'` all denote the same scale.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};
use thiserror::Error;

/// Built-in dictionary covering every annotation used by the shipped scripts.
pub const SAMPLE_DICTIONARY: &str = include_str!("../data/sample_dictionary.yaml");

const PURPOSES: &[&str] = &["phenotype", "provenance", "evidence"];
const SCALES: &[&str] =
    &["variant", "position", "transcript", "variant_in_transcript", "gene", "window"];
const METHODS: &[&str] = &[
    "Clinical Evidence",
    "Statistical Genetics Evidence",
    "Bioinformatics Inference",
    "Experimental in Vivo",
    "Experimental in Vitro",
    "Experimental Other",
];
const EVIDENCE_DOMAINS: &[&str] = &[
    "Human Genetics",
    "Animal Genetics",
    "Population Genetics",
    "Functional Genetics",
    "Epigenetics",
];
const PROVENANCE_DOMAINS: &[&str] = &["Call Annotations"];
const PHENOTYPE_DOMAINS: &[&str] = &["Phenotypic Data", "Inheritance Mode"];

/// A classification dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Purpose,
    KnowledgeDomain,
    Scale,
    Method,
}

impl Dimension {
    pub const ALL: [Dimension; 4] =
        [Dimension::Purpose, Dimension::KnowledgeDomain, Dimension::Scale, Dimension::Method];

    /// The keyword used in `@dimension(value)` directives and config files.
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Purpose => "purpose",
            Dimension::KnowledgeDomain => "knowledge_domain",
            Dimension::Scale => "scale",
            Dimension::Method => "method",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown classification dimension {s:?}"))
    }
}

/// Canonical form used when matching classification labels: lowercased,
/// underscores mapped to spaces, surrounding quotes and whitespace removed,
/// inner whitespace runs collapsed. Idempotent.
pub fn normalize_label(raw: &str) -> String {
    let lowered = raw.to_lowercase().replace('_', " ");
    let trimmed = lowered.trim_matches(|c: char| c.is_whitespace() || c == '"' || c == '\'');
    trimmed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A classification label as written plus its normalized form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    raw: String,
    norm: String,
}

impl Label {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let norm = normalize_label(&raw);
        Label { raw, norm }
    }

    /// Spelling as it appears in the configuration.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn norm(&self) -> &str {
        &self.norm
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationEntry {
    pub annotation: String,
    pub purpose: Label,
    pub knowledge_domain: Label,
    pub scale: Label,
    pub method: Option<Label>,
}

impl ClassificationEntry {
    pub fn label(&self, dimension: Dimension) -> Option<&Label> {
        match dimension {
            Dimension::Purpose => Some(&self.purpose),
            Dimension::KnowledgeDomain => Some(&self.knowledge_domain),
            Dimension::Scale => Some(&self.scale),
            Dimension::Method => self.method.as_ref(),
        }
    }
}

/// Allowed values per dimension. Knowledge domains are keyed by the
/// normalized purpose they belong to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabularies {
    pub purpose: Vec<Label>,
    pub scale: Vec<Label>,
    pub method: Vec<Label>,
    pub knowledge_domain: BTreeMap<String, Vec<Label>>,
}

impl Default for Vocabularies {
    fn default() -> Self {
        let labels = |xs: &[&str]| xs.iter().map(|x| Label::new(*x)).collect::<Vec<_>>();
        let knowledge_domain = [
            ("evidence", EVIDENCE_DOMAINS),
            ("provenance", PROVENANCE_DOMAINS),
            ("phenotype", PHENOTYPE_DOMAINS),
        ]
        .into_iter()
        .map(|(p, ds)| (p.to_string(), labels(ds)))
        .collect();
        Vocabularies {
            purpose: labels(PURPOSES),
            scale: labels(SCALES),
            method: labels(METHODS),
            knowledge_domain,
        }
    }
}

fn contains(list: &[Label], norm: &str) -> bool {
    list.iter().any(|l| l.norm == norm)
}

fn push_unique(list: &mut Vec<Label>, label: Label) {
    if !contains(list, &label.norm) {
        list.push(label);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DictionaryError {
    #[error("annotation {name:?} is classified more than once")]
    DuplicateAnnotation { name: String },
    #[error("annotation {annotation:?}: {value:?} is not a known {dimension} value")]
    UnknownDimensionValue { annotation: String, dimension: Dimension, value: String },
    #[error("annotation {annotation:?}: knowledge domain {knowledge_domain:?} is not allowed for purpose {purpose:?}")]
    DomainPurposeMismatch { annotation: String, purpose: String, knowledge_domain: String },
    #[error("dictionary schema error: {0}")]
    Schema(String),
}

/// Per-annotation classifications plus the vocabularies they are checked
/// against. Immutable once loaded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassificationDictionary {
    entries: BTreeMap<String, ClassificationEntry>,
    vocabularies: Vocabularies,
}

impl ClassificationDictionary {
    pub fn new(vocabularies: Vocabularies) -> Self {
        ClassificationDictionary { entries: BTreeMap::new(), vocabularies }
    }

    /// The shipped sample dictionary.
    pub fn sample() -> Self {
        load_dictionary(SAMPLE_DICTIONARY).expect("sample dictionary is consistent")
    }

    /// Inserts an entry without checking it; returns the displaced entry.
    pub fn insert(&mut self, entry: ClassificationEntry) -> Option<ClassificationEntry> {
        self.entries.insert(entry.annotation.clone(), entry)
    }

    pub fn entry(&self, annotation: &str) -> Option<&ClassificationEntry> {
        self.entries.get(annotation)
    }

    pub fn entries(&self) -> impl Iterator<Item = &ClassificationEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vocabularies(&self) -> &Vocabularies {
        &self.vocabularies
    }

    /// Normalized classification of `annotation` along `dimension`; `None`
    /// for unknown annotations and for entries without a method.
    pub fn classify(&self, annotation: &str, dimension: Dimension) -> Option<&str> {
        self.entry(annotation)?.label(dimension).map(Label::norm)
    }
}

/// Free-function form of [`ClassificationDictionary::classify`].
pub fn classify<'a>(
    dict: &'a ClassificationDictionary,
    annotation: &str,
    dimension: Dimension,
) -> Option<&'a str> {
    dict.classify(annotation, dimension)
}

/// Checks every entry against the vocabularies. An empty result means the
/// dictionary is internally consistent.
pub fn check_dictionary(dict: &ClassificationDictionary) -> Vec<DictionaryError> {
    let vocab = &dict.vocabularies;
    let mut issues = Vec::new();
    for entry in dict.entries.values() {
        let unknown = |dimension, label: &Label| DictionaryError::UnknownDimensionValue {
            annotation: entry.annotation.clone(),
            dimension,
            value: label.raw.clone(),
        };
        let purpose_known = contains(&vocab.purpose, &entry.purpose.norm);
        if !purpose_known {
            issues.push(unknown(Dimension::Purpose, &entry.purpose));
        }
        let domain_norm = &entry.knowledge_domain.norm;
        if !vocab.knowledge_domain.values().any(|ds| contains(ds, domain_norm)) {
            issues.push(unknown(Dimension::KnowledgeDomain, &entry.knowledge_domain));
        } else if purpose_known {
            let allowed = vocab.knowledge_domain.get(&entry.purpose.norm);
            if !allowed.is_some_and(|ds| contains(ds, domain_norm)) {
                issues.push(DictionaryError::DomainPurposeMismatch {
                    annotation: entry.annotation.clone(),
                    purpose: entry.purpose.raw.clone(),
                    knowledge_domain: entry.knowledge_domain.raw.clone(),
                });
            }
        }
        if !contains(&vocab.scale, &entry.scale.norm) {
            issues.push(unknown(Dimension::Scale, &entry.scale));
        }
        if let Some(method) = &entry.method {
            if !contains(&vocab.method, &method.norm) {
                issues.push(unknown(Dimension::Method, method));
            }
        }
    }
    issues
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDictionary {
    #[serde(default)]
    vocabularies: Option<RawVocabularies>,
    #[serde(default)]
    annotations: Option<RawAnnotations>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawVocabularies {
    #[serde(default)]
    extends: bool,
    #[serde(default)]
    purpose: Vec<String>,
    #[serde(default)]
    scale: Vec<String>,
    #[serde(default)]
    method: Vec<String>,
    #[serde(default)]
    knowledge_domain: BTreeMap<String, Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    purpose: String,
    knowledge_domain: String,
    scale: String,
    #[serde(default)]
    method: Option<String>,
}

/// Annotation entries in file order, duplicates preserved.
struct RawAnnotations(Vec<(String, RawEntry)>);

impl<'de> Deserialize<'de> for RawAnnotations {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = RawAnnotations;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from annotation name to classification")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawAnnotations, A::Error> {
                let mut entries = Vec::new();
                while let Some(pair) = map.next_entry::<String, RawEntry>()? {
                    entries.push(pair);
                }
                Ok(RawAnnotations(entries))
            }

            fn visit_unit<E>(self) -> Result<RawAnnotations, E> {
                Ok(RawAnnotations(Vec::new()))
            }
        }

        deserializer.deserialize_any(EntriesVisitor)
    }
}

fn build_vocabularies(raw: Option<RawVocabularies>) -> Result<Vocabularies, DictionaryError> {
    let mut vocab = Vocabularies::default();
    let Some(raw) = raw else { return Ok(vocab) };

    for (name, additions, list) in
        [("purpose", raw.purpose, &mut vocab.purpose), ("scale", raw.scale, &mut vocab.scale)]
    {
        for value in additions {
            let label = Label::new(value);
            if !contains(list, &label.norm) && !raw.extends {
                return Err(DictionaryError::Schema(format!(
                    "adding {name} value {:?} requires `extends: true`",
                    label.raw
                )));
            }
            push_unique(list, label);
        }
    }
    for value in raw.method {
        push_unique(&mut vocab.method, Label::new(value));
    }
    for (purpose, domains) in raw.knowledge_domain {
        let purpose = normalize_label(&purpose);
        if !contains(&vocab.purpose, &purpose) {
            return Err(DictionaryError::Schema(format!(
                "knowledge domains declared for unknown purpose {purpose:?}"
            )));
        }
        let list = vocab.knowledge_domain.entry(purpose).or_default();
        for d in domains {
            push_unique(list, Label::new(d));
        }
    }
    Ok(vocab)
}

fn is_absent_method(raw: &str) -> bool {
    let norm = normalize_label(raw);
    norm.is_empty() || norm == "n/a"
}

/// Parses a dictionary file and collects every consistency problem instead
/// of stopping at the first. Only schema errors abort. When an annotation is
/// repeated, its first entry is kept.
pub fn audit_dictionary(
    config_text: &str,
) -> Result<(ClassificationDictionary, Vec<DictionaryError>), DictionaryError> {
    let raw: RawDictionary = if config_text.trim().is_empty() {
        RawDictionary { vocabularies: None, annotations: None }
    } else {
        serde_yaml::from_str(config_text).map_err(|e| DictionaryError::Schema(e.to_string()))?
    };
    let mut dict = ClassificationDictionary::new(build_vocabularies(raw.vocabularies)?);
    let mut issues = Vec::new();
    for (name, entry) in raw.annotations.map(|a| a.0).unwrap_or_default() {
        if name.trim().is_empty() {
            return Err(DictionaryError::Schema("empty annotation name".into()));
        }
        if dict.entries.contains_key(&name) {
            issues.push(DictionaryError::DuplicateAnnotation { name });
            continue;
        }
        dict.insert(ClassificationEntry {
            annotation: name,
            purpose: Label::new(entry.purpose),
            knowledge_domain: Label::new(entry.knowledge_domain),
            scale: Label::new(entry.scale),
            method: entry.method.filter(|m| !is_absent_method(m)).map(Label::new),
        });
    }
    issues.extend(check_dictionary(&dict));
    Ok((dict, issues))
}

/// Loads a dictionary, failing on the first consistency problem.
pub fn load_dictionary(config_text: &str) -> Result<ClassificationDictionary, DictionaryError> {
    let (dict, mut issues) = audit_dictionary(config_text)?;
    if issues.is_empty() {
        Ok(dict)
    } else {
        Err(issues.swap_remove(0))
    }
}

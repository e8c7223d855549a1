//! Static meta-predicate validation.
//!
//! A statement is valid when every meta-predicate in its validation block is
//! satisfied by at least one variable of its predicate, and every variable is
//! classified in the dictionary. Validation never looks at records.

use std::fmt::Write;

use serde::Serialize;

use crate::dictionary::{ClassificationDictionary, Dimension};
use crate::dsl::{MetaPredicate, Script, Statement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DiagnosticKind {
    UnsatisfiedMetaPredicate,
    UnclassifiedAnnotation,
    EmptyValidationBlock,
}

/// Classification of one predicate variable, as spelled in the dictionary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableClass {
    pub name: String,
    pub purpose: String,
    pub knowledge_domain: String,
    pub scale: String,
    pub method: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub statement_index: usize,
    pub line: usize,
    pub kind: DiagnosticKind,
    pub message: String,
    /// The offending meta-predicate, for `UnsatisfiedMetaPredicate`.
    pub meta_predicate: Option<MetaPredicate>,
    /// The offending annotation, for `UnclassifiedAnnotation`.
    pub annotation: Option<String>,
    pub variables_found: Vec<VariableClass>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub script_hash: String,
    pub diagnostics: Vec<Diagnostic>,
    pub valid: bool,
}

impl ValidationReport {
    pub fn errors(&self) -> usize {
        self.count(Severity::Error)
    }

    pub fn warnings(&self) -> usize {
        self.count(Severity::Warning)
    }

    fn count(&self, severity: Severity) -> usize {
        self.diagnostics.iter().filter(|d| d.severity == severity).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Severity of annotations missing from the dictionary. `Warning` is
    /// meant for exploratory work only.
    pub unclassified: Severity,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions { unclassified: Severity::Error }
    }
}

fn variables_found(stmt: &Statement, dict: &ClassificationDictionary) -> Vec<VariableClass> {
    stmt.predicate
        .variables()
        .into_iter()
        .filter_map(|name| {
            let e = dict.entry(&name)?;
            Some(VariableClass {
                purpose: e.purpose.raw().to_string(),
                knowledge_domain: e.knowledge_domain.raw().to_string(),
                scale: e.scale.raw().to_string(),
                method: e.method.as_ref().map(|m| m.raw().to_string()),
                name,
            })
        })
        .collect()
}

pub fn validate_statement(stmt: &Statement, dict: &ClassificationDictionary) -> Vec<Diagnostic> {
    validate_statement_with(stmt, dict, ValidationOptions::default())
}

/// Diagnostics for one statement: unsatisfied meta-predicates in source
/// order, then unclassified annotations by name, then the empty-block warning.
pub fn validate_statement_with(
    stmt: &Statement,
    dict: &ClassificationDictionary,
    options: ValidationOptions,
) -> Vec<Diagnostic> {
    let vars = stmt.predicate.variables();
    let found = variables_found(stmt, dict);
    let diag = |severity, kind, message: String| Diagnostic {
        severity,
        statement_index: stmt.index,
        line: stmt.span.if_line,
        kind,
        message,
        meta_predicate: None,
        annotation: None,
        variables_found: found.clone(),
    };

    let mut out = Vec::new();
    for meta in &stmt.meta_predicates {
        let satisfied =
            vars.iter().any(|v| dict.classify(v, meta.dimension) == Some(meta.value.as_str()));
        if !satisfied {
            out.push(Diagnostic {
                meta_predicate: Some(meta.clone()),
                ..diag(
                    Severity::Error,
                    DiagnosticKind::UnsatisfiedMetaPredicate,
                    format!("No variable satisfies {}", meta.verbatim()),
                )
            });
        }
    }
    for v in vars.iter().filter(|v| dict.entry(v).is_none()) {
        out.push(Diagnostic {
            annotation: Some(v.clone()),
            ..diag(
                options.unclassified,
                DiagnosticKind::UnclassifiedAnnotation,
                format!("Annotation {v} has no classification"),
            )
        });
    }
    if stmt.meta_predicates.is_empty() {
        out.push(diag(
            Severity::Warning,
            DiagnosticKind::EmptyValidationBlock,
            "Statement has no validation block".to_string(),
        ));
    }
    out
}

pub fn validate_script(script: &Script, dict: &ClassificationDictionary) -> ValidationReport {
    validate_script_with(script, dict, ValidationOptions::default())
}

pub fn validate_script_with(
    script: &Script,
    dict: &ClassificationDictionary,
    options: ValidationOptions,
) -> ValidationReport {
    let diagnostics: Vec<Diagnostic> = script
        .statements()
        .iter()
        .flat_map(|s| validate_statement_with(s, dict, options))
        .collect();
    let valid = !diagnostics.iter().any(|d| d.severity == Severity::Error);
    ValidationReport { script_hash: script.source_hash().to_string(), diagnostics, valid }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Human,
    Structured,
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

pub fn render_report(report: &ValidationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Human => render_human(report),
        ReportFormat::Structured => render_structured(report),
    }
}

fn render_human(report: &ValidationReport) -> String {
    let mut out = String::new();
    let status = if report.valid { "OK" } else { "FAILED" };
    let _ = writeln!(
        out,
        "{status}: {}, {}",
        plural(report.errors(), "error"),
        plural(report.warnings(), "warning")
    );

    let mut rest = report.diagnostics.as_slice();
    while let Some(first) = rest.first() {
        let n = rest.iter().take_while(|d| d.statement_index == first.statement_index).count();
        let (group, tail) = rest.split_at(n);
        rest = tail;
        for severity in [Severity::Error, Severity::Warning] {
            let items: Vec<&Diagnostic> = group.iter().filter(|d| d.severity == severity).collect();
            if items.is_empty() {
                continue;
            }
            let title = match severity {
                Severity::Error => "ValidationError",
                Severity::Warning => "ValidationWarning",
            };
            let _ = writeln!(out, "{title} in statement at line {}:", first.line);
            for d in &items {
                let _ = writeln!(out, "- {}", d.message);
            }
            if severity == Severity::Error {
                let vars: Vec<String> = first
                    .variables_found
                    .iter()
                    .map(|v| format!("{} ({}, {})", v.name, v.knowledge_domain, v.scale))
                    .collect();
                let vars = if vars.is_empty() { "(none)".to_string() } else { vars.join(", ") };
                let _ = writeln!(out, "Variables found: {vars}");
            }
        }
    }
    out
}

#[derive(Serialize)]
struct DiagnosticRow<'a> {
    severity: Severity,
    statement_index: usize,
    line: usize,
    kind: DiagnosticKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    dimension: Option<Dimension>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    annotation: Option<&'a str>,
    message: &'a str,
    variables_found: &'a [VariableClass],
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    script_hash: &'a str,
    errors: usize,
    warnings: usize,
    valid: bool,
}

impl Serialize for Dimension {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// One JSON object per line: each diagnostic, then a summary object.
fn render_structured(report: &ValidationReport) -> String {
    let mut out = String::new();
    for d in &report.diagnostics {
        let row = DiagnosticRow {
            severity: d.severity,
            statement_index: d.statement_index,
            line: d.line,
            kind: d.kind,
            dimension: d.meta_predicate.as_ref().map(|m| m.dimension),
            value: d.meta_predicate.as_ref().map(|m| m.display_value()),
            annotation: d.annotation.as_deref(),
            message: &d.message,
            variables_found: &d.variables_found,
        };
        out.push_str(&serde_json::to_string(&row).expect("diagnostic serializes"));
        out.push('\n');
    }
    let summary = SummaryRow {
        script_hash: &report.script_hash,
        errors: report.errors(),
        warnings: report.warnings(),
        valid: report.valid,
    };
    out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
    out.push('\n');
    out
}

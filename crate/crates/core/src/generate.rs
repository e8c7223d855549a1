//! Seeded synthetic records for desk-scale and performance runs.
//!
//! Known annotations get value profiles shaped like real variant data;
//! anything else falls back on its purpose classification. The same
//! dictionary, count and seed always give the same records.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dictionary::{ClassificationDictionary, Dimension};
use crate::record::{Record, Value};

const CONSEQUENCES: &[&str] = &[
    "missense_variant",
    "missense_variant",
    "synonymous_variant",
    "intron_variant",
    "intron_variant",
    "3_prime_UTR_variant",
    "5_prime_UTR_variant",
    "splice_region_variant",
    "stop_gained",
    "frameshift_variant",
    "splice_donor_variant",
    "splice_acceptor_variant",
    "start_lost",
    "inframe_deletion",
    "intergenic_variant",
    "upstream_gene_variant",
];
const TISSUES: &[&str] = &["Brain", "Heart", "Liver", "Muscle", "Kidney", "Testis", "Blood"];
const CLINVAR: &[&str] = &["Pathogenic", "Likely pathogenic", "VUS", "Likely benign", "Benign"];
const INHERITANCE: &[&str] =
    &["Heterozygous", "Heterozygous", "Homozygous Recessive", "X-linked", "Compound Heterozygous"];

fn round(x: f64, digits: i32) -> f64 {
    let f = 10f64.powi(digits);
    (x * f).round() / f
}

fn pick(rng: &mut ChaCha8Rng, options: &[&str]) -> Value {
    Value::Text(options[rng.gen_range(0..options.len())].to_string())
}

fn maybe(rng: &mut ChaCha8Rng, present: f64, v: impl FnOnce(&mut ChaCha8Rng) -> Value) -> Value {
    if rng.gen_bool(present) {
        v(rng)
    } else {
        Value::Missing
    }
}

fn quality(rng: &mut ChaCha8Rng) -> Value {
    if rng.gen_bool(0.12) {
        Value::Integer(rng.gen_range(0..40))
    } else {
        Value::Integer(rng.gen_range(40..100))
    }
}

fn frequency(rng: &mut ChaCha8Rng) -> Value {
    Value::Real(round(10f64.powf(rng.gen_range(-6.0..-0.3)), 7))
}

fn count(rng: &mut ChaCha8Rng, nonzero: f64) -> Value {
    if rng.gen_bool(nonzero) {
        Value::Integer(rng.gen_range(1..60))
    } else {
        Value::Integer(0)
    }
}

fn unit(rng: &mut ChaCha8Rng) -> Value {
    Value::Real(round(rng.gen_range(0.0..1.0), 3))
}

fn known(name: &str, rng: &mut ChaCha8Rng) -> Option<Value> {
    Some(match name {
        "Proband_GQ" | "Min_GQ" => quality(rng),
        "QD" => Value::Real(round(rng.gen_range(0.0..35.0), 2)),
        "QUAL" => Value::Real(round(rng.gen_range(10.0..3000.0), 1)),
        "Region_Masked" => Value::Boolean(rng.gen_bool(0.05)),
        "Called_By_Denovo" | "Called_By_CNV" => Value::Boolean(rng.gen_bool(0.01)),
        "gnomAD_AF" | "gnomAD_PopMax_AF" => maybe(rng, 0.7, frequency),
        "gnomAD_Hom" => maybe(rng, 0.7, |r| count(r, 0.08)),
        "gnomAD_Hem" => maybe(rng, 0.7, |r| count(r, 0.03)),
        "gnomAD_PopMax_AN" => maybe(rng, 0.7, |r| Value::Integer(r.gen_range(0..60_000))),
        "pLI" => maybe(rng, 0.9, unit),
        "REVEL_score" => maybe(rng, 0.5, unit),
        "PolyPhen" | "Polyphen_2_HVAR" => maybe(rng, 0.6, |r| pick(r, &["B", "P", "D"])),
        "Most_Severe_Consequence" | "Canonical_Annotation" | "Transcript_consequence" => {
            pick(rng, CONSEQUENCES)
        }
        "Mostly_Expressed_In" => maybe(rng, 0.8, |r| pick(r, TISSUES)),
        "HGMD_Tags" => maybe(rng, 0.1, |r| pick(r, &["DM", "DM?", "DP", "FP"])),
        "ClinVar_Status" => maybe(rng, 0.4, |r| pick(r, CLINVAR)),
        "Clinvar_Benign" => maybe(rng, 0.3, |r| pick(r, &["Benign", "Likely benign", "Uncertain"])),
        "Clinvar_stars" => maybe(rng, 0.3, |r| pick(r, &["0", "1", "2", "3", "4"])),
        "Clinvar_Trusted_Simplified" => {
            maybe(rng, 0.2, |r| pick(r, &["benign", "pathogenic", "not provided"]))
        }
        "Inheritance_Mode" => pick(rng, INHERITANCE),
        "Compound_Het" => Value::Boolean(rng.gen_bool(0.05)),
        _ => return None,
    })
}

fn fallback(purpose: &str, rng: &mut ChaCha8Rng) -> Value {
    match purpose {
        "provenance" => Value::Integer(rng.gen_range(0..100)),
        "phenotype" => Value::Boolean(rng.gen_bool(0.1)),
        _ => maybe(rng, 0.8, unit),
    }
}

/// Infinite-capable record stream; use [`generate_records`] for a bounded one.
pub struct RecordGenerator<'a> {
    dict: &'a ClassificationDictionary,
    rng: ChaCha8Rng,
    next: u64,
    remaining: u64,
}

pub fn generate_records(
    dict: &ClassificationDictionary,
    count: u64,
    seed: u64,
) -> RecordGenerator<'_> {
    RecordGenerator { dict, rng: ChaCha8Rng::seed_from_u64(seed), next: 0, remaining: count }
}

impl Iterator for RecordGenerator<'_> {
    type Item = Record;

    fn next(&mut self) -> Option<Record> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let id = format!("gen:{}", self.next);
        self.next += 1;
        let rng = &mut self.rng;
        let entries: Vec<(String, Value)> = self
            .dict
            .entries()
            .map(|e| {
                let v = known(&e.annotation, rng).unwrap_or_else(|| {
                    fallback(e.label(Dimension::Purpose).map(|l| l.norm()).unwrap_or(""), rng)
                });
                (e.annotation.clone(), v)
            })
            .collect();
        Some(Record::new(id, entries))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// Writes `count` generated records as JSON lines.
pub fn write_records<W: Write>(
    dict: &ClassificationDictionary,
    count: u64,
    seed: u64,
    mut out: W,
) -> io::Result<()> {
    for r in generate_records(dict, count, seed) {
        out.write_all(r.to_json_line().as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{load_records, ValueKind};

    #[test]
    fn deterministic_and_parseable() {
        let dict = ClassificationDictionary::sample();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_records(&dict, 500, 42, &mut a).unwrap();
        write_records(&dict, 500, 42, &mut b).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        write_records(&dict, 500, 43, &mut c).unwrap();
        assert_ne!(a, c);

        let parsed: Vec<Record> = load_records(&a[..]).collect::<Result<_, _>>().unwrap();
        let direct: Vec<Record> = generate_records(&dict, 500, 42).collect();
        assert_eq!(parsed, direct);
        assert_eq!(parsed[0].id(), "gen:0");
        assert_eq!(parsed[499].id(), "gen:499");
    }

    #[test]
    fn zero_count_is_empty() {
        let mut out = Vec::new();
        write_records(&ClassificationDictionary::sample(), 0, 1, &mut out).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn kinds_are_stable_per_annotation() {
        let dict = ClassificationDictionary::sample();
        let mut kinds = std::collections::BTreeMap::new();
        for r in generate_records(&dict, 2000, 9) {
            for (k, v) in r.entries() {
                let prev = kinds.insert(k.clone(), v.kind());
                assert!(prev.is_none() || prev == Some(v.kind()), "{k}");
                assert_ne!(v.kind(), ValueKind::Missing);
            }
        }
        assert_eq!(kinds["Clinvar_stars"], ValueKind::Text);
        assert_eq!(kinds["Compound_Het"], ValueKind::Boolean);
    }
}

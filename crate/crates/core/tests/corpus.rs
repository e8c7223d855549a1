use std::fs;
use std::path::PathBuf;

use cascade_core::dictionary::ClassificationDictionary;
use cascade_core::dsl::{parse_script, render_script, Script};
use cascade_core::validate::{render_report, validate_script, DiagnosticKind, ReportFormat};

fn scripts_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/scripts")
}

fn load(name: &str) -> Script {
    let text = fs::read_to_string(scripts_dir().join(name)).unwrap();
    parse_script(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn every_script_parses_and_round_trips() {
    let mut seen = 0;
    for entry in fs::read_dir(scripts_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("cascade") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let script = parse_script(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let rendered = render_script(&script);
        let again = parse_script(&rendered).unwrap();
        assert_eq!(script, again, "{}", path.display());
        assert_eq!(render_script(&again), rendered);
        assert_eq!(script.source_hash(), again.source_hash());
        seen += 1;
    }
    assert!(seen >= 10);
}

#[test]
fn passing_block_is_clean() {
    let report =
        validate_script(&load("validation_pass.cascade"), &ClassificationDictionary::sample());
    assert!(report.valid);
    assert!(report.diagnostics.is_empty());
}

#[test]
fn failing_block_reports_two_errors() {
    let report =
        validate_script(&load("validation_fail.cascade"), &ClassificationDictionary::sample());
    assert!(!report.valid);
    assert_eq!(report.errors(), 2);
    let text = render_report(&report, ReportFormat::Human);
    let expected = "\
FAILED: 2 errors, 0 warnings
ValidationError in statement at line 7:
- No variable satisfies @knowledge_domain(\"Human Genetics\")
- No variable satisfies @scale(variant)
Variables found: pLI (Population Genetics, gene)
";
    assert_eq!(text, expected);
}

#[test]
fn substituted_annotations_are_caught() {
    let dict = ClassificationDictionary::sample();
    for name in ["hgmd_original.cascade", "lof_original.cascade"] {
        let report = validate_script(&load(name), &dict);
        assert!(report.valid, "{name}: {:?}", report.diagnostics);
    }

    let report = validate_script(&load("hgmd_polyphen_swap.cascade"), &dict);
    assert_eq!(report.errors(), 3);
    let dims: Vec<String> = report
        .diagnostics
        .iter()
        .map(|d| d.meta_predicate.as_ref().unwrap().dimension.to_string())
        .collect();
    assert_eq!(dims, ["knowledge_domain", "scale", "method"]);

    let report = validate_script(&load("lof_canonical_swap.cascade"), &dict);
    assert_eq!(report.errors(), 1);
    let d = &report.diagnostics[0];
    assert_eq!(d.kind, DiagnosticKind::UnsatisfiedMetaPredicate);
    assert_eq!(d.meta_predicate.as_ref().unwrap().verbatim(), "@scale(\"Variant in Transcript\")");
}

#[test]
fn demo_scripts_validate() {
    let dict = ClassificationDictionary::sample();
    for name in [
        "allele_frequency.cascade",
        "call_quality.cascade",
        "bgm_red_button.cascade",
        "pathogenicity_cascade.cascade",
    ] {
        let report = validate_script(&load(name), &dict);
        assert!(report.valid, "{name}:\n{}", render_report(&report, ReportFormat::Human));
    }
    assert_eq!(load("bgm_red_button.cascade").statements().len(), 14);
}

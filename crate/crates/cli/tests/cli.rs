use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(rel).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade-verify")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

const DEMO: &str = "scripts/bgm_red_button.cascade";
const FIXTURE: &str = "records/red_button_fixture.jsonl";

#[test]
fn validate_reports_and_exit_codes() {
    let o = run(&["validate", &data("scripts/validation_pass.cascade")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(text(&o.stdout), "OK: 0 errors, 0 warnings\n");

    let o = run(&["validate", &data("scripts/validation_fail.cascade")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stdout).contains("ValidationError in statement at line 7:"));

    let o = run(&["validate", "/nonexistent.cascade"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).starts_with("error: /nonexistent.cascade"));
}

#[test]
fn human_and_structured_reports_agree() {
    let script = data("scripts/hgmd_polyphen_swap.cascade");
    let human = text(&run(&["validate", &script]).stdout);
    let structured = text(&run(&["validate", &script, "--format", "structured"]).stdout);
    let rows: Vec<serde_json::Value> =
        structured.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let (summary, diags) = rows.split_last().unwrap();
    assert_eq!(summary["errors"], 3);
    assert_eq!(summary["valid"], false);
    for d in diags {
        let line = format!("- {}", d["message"].as_str().unwrap());
        assert!(human.lines().any(|l| l == line), "{line}");
    }
}

#[test]
fn syntax_error_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cascade", "if x >:\n    return True\nreturn False\n");
    let o = run(&["validate", arg(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("line 1"), "{}", text(&o.stderr));
}

#[test]
fn custom_dictionary_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let dict = write(
        dir.path(),
        "dict.yaml",
        "annotations:\n  pLI: {purpose: evidence, knowledge_domain: Human Genetics, scale: variant}\n",
    );
    let o = run(&["validate", &data("scripts/validation_fail.cascade"), "--dict", arg(&dict)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stdout));
}

#[test]
fn run_writes_outcomes_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    let stats = dir.path().join("stats.tsv");
    let o = run(&[
        "run",
        &data(DEMO),
        "--records",
        &data(FIXTURE),
        "--out",
        arg(&out),
        "--stats",
        arg(&stats),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(text(&o.stdout), "records: 3, accepted: 1, rejected: 2, by default: 1\n");
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        "{\"record_id\":\"chr1:228287879 C>T\",\"outcome\":true,\"decided_by\":13}\n\
         {\"record_id\":\"chr2:47403199 G>A\",\"outcome\":false,\"decided_by\":0}\n\
         {\"record_id\":\"chr7:117559590 ATCT>A\",\"outcome\":false,\"decided_by\":\"Default\"}\n"
    );
    let tsv = fs::read_to_string(&stats).unwrap();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[0], "step_index\tlabel\tevaluated\tmatched\tpassed\tunknown");
    assert_eq!(lines[1], "0\tCall Quality is poor\t3\t1\t2\t0");
    assert_eq!(lines[14], "13\tSelect compound heterozygous variants\t2\t1\t1\t0");
    assert_eq!(
        &lines[15..],
        ["DEFAULT\treturn False\t1\t1\t0\t0", "ACCEPTED\t\t\t1\t\t", "REJECTED\t\t\t2\t\t"]
    );
}

#[test]
fn trace_all_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traces.jsonl");
    let o =
        run(&["run", &data(DEMO), "--records", &data(FIXTURE), "--trace-all", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let traces: Vec<serde_json::Value> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let lens: Vec<usize> = traces.iter().map(|t| t["steps"].as_array().unwrap().len()).collect();
    assert_eq!(lens, [14, 1, 14]);
    assert_eq!(traces[2]["decided_by"], "Default");
}

#[test]
fn run_refuses_invalid_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    let script = data("scripts/validation_fail.cascade");
    let records = write(dir.path(), "r.jsonl", "{\"_id\": \"a\", \"pLI\": 0.95}\n");
    let o = run(&["run", &script, "--records", arg(&records), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("No variable satisfies"));
    assert!(!out.exists());

    let o = run(&["run", &script, "--records", arg(&records), "--out", arg(&out), "--no-validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(out.exists());
}

#[test]
fn malformed_records_and_lenient_mode() {
    let dir = tempfile::tempdir().unwrap();
    let script = write(dir.path(), "s.cascade", "if x > 1:\n    return True\nreturn False\n");
    let records = write(
        dir.path(),
        "r.jsonl",
        "{\"_id\": \"a\", \"x\": 2}\nnot json\n{\"_id\": \"b\", \"x\": \"high\"}\n{\"_id\": \"c\", \"x\": 0}\n",
    );
    let base = ["run", arg(&script), "--records", arg(&records), "--no-validate"];

    let o = run(&base);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("line 2"), "{}", text(&o.stderr));

    let stats = dir.path().join("stats.tsv");
    let mut lenient = base.to_vec();
    lenient.extend(["--lenient", "--stats", arg(&stats)]);
    let o = run(&lenient);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert_eq!(
        text(&o.stdout),
        "records: 3, accepted: 1, rejected: 2, by default: 2, skipped lines: 1, type mismatches: 1\n"
    );
    assert!(fs::read_to_string(&stats).unwrap().ends_with("TYPE_MISMATCHES\t\t\t1\t\t\n"));
}

#[test]
fn strict_type_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let script = write(dir.path(), "s.cascade", "if x > 1:\n    return True\nreturn False\n");
    let records = write(
        dir.path(),
        "r.jsonl",
        "{\"_id\": \"a\", \"x\": 2}\n{\"_id\": \"b\", \"x\": \"high\"}\n",
    );
    let o = run(&["run", arg(&script), "--records", arg(&records), "--no-validate"]);
    assert_eq!(o.status.code(), Some(3));
    let err = text(&o.stderr);
    assert!(err.contains("record b") && err.contains("step 1"), "{err}");
}

#[test]
fn trace_formats_and_missing_record() {
    let o = run(&["trace", &data(DEMO), "chr7:117559590 ATCT>A", "--records", &data(FIXTURE)]);
    assert_eq!(o.status.code(), Some(0));
    let table = text(&o.stdout);
    assert!(table.starts_with("Decision trace for chr7:117559590 ATCT>A\n"));
    assert!(table.contains("No rule fired"));
    assert!(table.contains("Outcome: False"));

    let o = run(&["trace", &data(DEMO), "nope", "--records", &data(FIXTURE)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("record not found: nope"));
}

#[test]
fn transform_outputs_and_check() {
    let tree = data("trees/pathogenicity_tree.json");
    let o = run(&["transform", &tree]);
    assert_eq!(o.status.code(), Some(0));
    let plain = text(&o.stdout);
    assert_eq!(plain.matches("\nif ").count(), 5);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("simple.cascade");
    let o = run(&["transform", &tree, "--simplify", "--check", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        text(&o.stdout),
        "equivalent: 432 points checked\n1-decision list: no (statements 1, 2, 3)\n"
    );
    let simple = fs::read_to_string(&out).unwrap();
    assert_eq!(simple.matches("\nif ").count(), 4);

    let bad = write(
        dir.path(),
        "bad.json",
        "{\"if\": \"x >\", \"then\": {\"return\": true}, \"else\": {\"return\": false}}",
    );
    assert_eq!(run(&["transform", arg(&bad)]).status.code(), Some(2));
}

#[test]
fn check_dict_reports_issues() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "good.yaml",
        "annotations:\n  pLI: {purpose: evidence, knowledge_domain: Population Genetics, scale: gene}\n",
    );
    let o = run(&["check-dict", "--dict", arg(&good)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(text(&o.stdout), "OK: 1 annotations, 0 issues\n");

    let bad = write(
        dir.path(),
        "bad.yaml",
        "annotations:\n  X: {purpose: provenance, knowledge_domain: Human Genetics, scale: variant}\n  Y: {purpose: evidence, knowledge_domain: Astrology, scale: gene}\n",
    );
    let o = run(&["check-dict", "--dict", arg(&bad), "--format", "structured"]);
    assert_eq!(o.status.code(), Some(1));
    let rows: Vec<serde_json::Value> =
        text(&o.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let kinds: Vec<&str> = rows[..2].iter().map(|r| r["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"DomainPurposeMismatch") && kinds.contains(&"UnknownDimensionValue"));
    assert_eq!(rows[2]["issues"], 2);

    let schema =
        write(dir.path(), "schema.yaml", "annotations:\n  X: {purpose: evidence, colour: red}\n");
    assert_eq!(run(&["check-dict", "--dict", arg(&schema)]).status.code(), Some(2));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    assert!(run(&["gen", "--count", "1000", "--seed", "42", "--out", arg(&a)]).status.success());
    assert!(run(&["gen", "--count", "1000", "--seed", "42", "--out", arg(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 1000);

    let o = run(&["gen", "--count", "0"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["run", &data(DEMO)]).status.code(), Some(2));
    assert_eq!(run(&["validate", &data(DEMO), "--format", "xml"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let o = run(&["run", &data(DEMO), "--records", &data(FIXTURE), "--jobs", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

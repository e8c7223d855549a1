use std::fs;
use std::io::BufReader;
use std::path::PathBuf;

use cascade_core::dsl::{parse_script, Script};
use cascade_core::engine::{
    render_stats_tsv, render_trace_table, run_batch, run_record, trace_query, DecidedBy, EvalError,
    EvalMode, TriState,
};
use cascade_core::record::{load_records, Record, Value};

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

fn script(name: &str) -> Script {
    parse_script(&fs::read_to_string(data(&format!("scripts/{name}"))).unwrap()).unwrap()
}

fn records(name: &str) -> Vec<Record> {
    let file = fs::File::open(data(&format!("records/{name}"))).unwrap();
    load_records(BufReader::new(file)).collect::<Result<_, _>>().unwrap()
}

#[test]
fn pathogenicity_examples() {
    let s = script("pathogenicity_cascade.cascade");
    let recs = records("pathogenicity_five.jsonl");

    let t = run_record(&s, &recs[0]).unwrap();
    assert_eq!((t.outcome, t.decided_by, t.steps.len()), (false, DecidedBy::Step(0), 1));

    let t = run_record(&s, &recs[1]).unwrap();
    assert_eq!((t.outcome, t.decided_by, t.steps.len()), (true, DecidedBy::Step(1), 2));
    assert_eq!(t.steps[0].result, TriState::False);
    assert!(t.steps[1].fired);

    let t = run_record(&s, &recs[4]).unwrap();
    assert_eq!((t.outcome, t.decided_by, t.steps.len()), (false, DecidedBy::Default, 4));
    assert!(t.steps.iter().all(|st| !st.fired));
}

#[test]
fn pathogenicity_waterfall() {
    let s = script("pathogenicity_cascade.cascade");
    let batch = run_batch(&s, &records("pathogenicity_five.jsonl"), EvalMode::Strict).unwrap();
    let counts: Vec<(u64, u64, u64, u64)> =
        batch.stats.steps.iter().map(|x| (x.evaluated, x.matched, x.passed, x.unknown)).collect();
    assert_eq!(counts, [(5, 1, 4, 0), (4, 1, 3, 0), (3, 1, 2, 0), (2, 1, 1, 0)]);
    assert_eq!(batch.stats.default_count, 1);
    assert_eq!((batch.stats.accepted_total, batch.stats.rejected_total), (3, 2));
    assert_eq!(batch.caught_at(2), ["lof_clinvar"]);
    assert_eq!(batch.decided_by_default(), ["no_match"]);

    let tsv = render_stats_tsv(&batch.stats, false);
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines.len(), 1 + 4 + 3);
    assert_eq!(lines[0], "step_index\tlabel\tevaluated\tmatched\tpassed\tunknown");
    assert_eq!(lines[1], "0\tRule 1: Exclude common variants\t5\t1\t4\t0");
    assert_eq!(lines[5], "DEFAULT\treturn False\t1\t1\t0\t0");
    assert!(lines[6].starts_with("ACCEPTED\t\t\t3"));
    assert!(lines[7].starts_with("REJECTED\t\t\t2"));
}

#[test]
fn small_batches() {
    let one = parse_script("if X > 1:\n    return True\nreturn False\n").unwrap();
    let recs: Vec<Record> = [0, 2, 1]
        .iter()
        .enumerate()
        .map(|(i, x)| Record::new(format!("r{i}"), [("X".to_string(), Value::Integer(*x))]))
        .collect();
    let b = run_batch(&one, &recs, EvalMode::Strict).unwrap();
    let st = &b.stats.steps[0];
    assert_eq!((st.evaluated, st.matched, st.passed), (3, 1, 2));
    assert_eq!(b.stats.default_count, 2);

    let b = run_batch(&one, &[], EvalMode::Strict).unwrap();
    assert_eq!(b.stats.steps[0].evaluated, 0);
    assert_eq!(b.stats.total(), 0);

    let empty = parse_script("return True").unwrap();
    let b = run_batch(&empty, &recs, EvalMode::Strict).unwrap();
    assert_eq!(b.stats.default_count, 3);
    assert!(b.outcomes.iter().all(|d| d.outcome && d.decided_by == DecidedBy::Default));
}

#[test]
fn red_button_trace() {
    let s = script("bgm_red_button.cascade");
    let recs = records("red_button_fixture.jsonl");
    let t = trace_query(&s, &recs, "chr1:228287879 C>T", EvalMode::Strict).unwrap();
    assert_eq!(t.steps.len(), 14);
    assert!(t.steps[..13].iter().all(|st| st.result == TriState::False && !st.fired));
    assert!(t.steps[13].fired);
    assert!(t.outcome);
    assert_eq!(t.decided_by, DecidedBy::Step(13));

    let table = render_trace_table(&t, s.final_action());
    let rows: Vec<&str> = table.lines().skip(2).take(14).collect();
    assert!(rows[..13].iter().all(|r| r.ends_with("False → Skip")));
    assert!(rows[13].ends_with("True → Selected"));
    assert!(rows[13].contains("Select compound heterozygous variants"));

    let t = trace_query(&s, &recs, "chr2:47403199 G>A", EvalMode::Strict).unwrap();
    assert_eq!((t.outcome, t.decided_by), (false, DecidedBy::Step(0)));

    let t = trace_query(&s, &recs, "chr7:117559590 ATCT>A", EvalMode::Strict).unwrap();
    assert_eq!(t.decided_by, DecidedBy::Default);
    let table = render_trace_table(&t, s.final_action());
    assert!(table.lines().any(|l| l.starts_with("DEFAULT")));

    let err = trace_query(&s, &recs, "nope", EvalMode::Strict).unwrap_err();
    assert_eq!(err, EvalError::RecordNotFound { record_id: "nope".into() });
}

#[test]
fn strict_error_is_earliest_record() {
    let s = parse_script("if X > 1:\n    return True\nreturn False\n").unwrap();
    let recs: Vec<Record> = (0..10_000)
        .map(|i| {
            let v = if i % 3000 == 2999 { Value::Text("bad".into()) } else { Value::Integer(i) };
            Record::new(format!("r{i}"), [("X".to_string(), v)])
        })
        .collect();
    match run_batch(&s, &recs, EvalMode::Strict).unwrap_err() {
        EvalError::TypeMismatch { record_id, step, .. } => {
            assert_eq!(record_id, "r2999");
            assert_eq!(step, Some(0));
        }
        other => panic!("{other:?}"),
    }
    let b = run_batch(&s, &recs, EvalMode::Lenient).unwrap();
    assert_eq!(b.stats.type_mismatches, 3);
    assert_eq!(b.stats.steps[0].unknown, 3);
    assert!(render_stats_tsv(&b.stats, true).ends_with("TYPE_MISMATCHES\t\t\t3\t\t\n"));
}

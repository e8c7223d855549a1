use cascade_core::dictionary::{ClassificationDictionary, Dimension};
use cascade_core::dsl::{
    parse_script, render_script, CompareOp, Constants, MetaPredicate, Operand, PredicateExpr,
    Script, SetExpr, Statement,
};
use cascade_core::engine::{
    eval_predicate_with, run_batch, run_record_with, DecidedBy, EvalMode, TriState,
};
use cascade_core::record::{Record, Value};
use cascade_core::validate::{validate_script, validate_statement, Severity};
use proptest::prelude::*;

const NUMS: [&str; 3] = ["A", "B", "QD"];

fn arb_op() -> impl Strategy<Value = CompareOp> {
    prop_oneof![
        Just(CompareOp::Lt),
        Just(CompareOp::Gt),
        Just(CompareOp::Le),
        Just(CompareOp::Ge),
        Just(CompareOp::Eq),
        Just(CompareOp::Ne),
    ]
}

fn arb_num() -> impl Strategy<Value = Value> {
    prop_oneof![
        (-3i64..4).prop_map(Value::Integer),
        (-6i32..8).prop_map(|h| Value::Real(h as f64 / 2.0))
    ]
}

fn arb_atom() -> impl Strategy<Value = PredicateExpr> {
    let var = prop::sample::select(NUMS.to_vec()).prop_map(|s| Operand::Var(s.to_string()));
    prop_oneof![
        (var.clone(), arb_op(), arb_num()).prop_map(|(v, op, c)| PredicateExpr::compare(
            v,
            op,
            Operand::Const(c)
        )),
        (arb_num(), var, arb_num()).prop_map(|(lo, v, hi)| PredicateExpr::Compare {
            operands: vec![Operand::Const(lo), v, Operand::Const(hi)],
            ops: vec![CompareOp::Lt, CompareOp::Lt],
        }),
        (prop::sample::subsequence(vec!["a", "b", "c"], 0..3), any::<bool>(), any::<bool>())
            .prop_map(|(vals, negated, named)| PredicateExpr::Membership {
                operand: Operand::Var("S".into()),
                set: if named {
                    SetExpr::Ref("CODES".into())
                } else {
                    SetExpr::Literal(vals.into_iter().map(|v| Value::Text(v.into())).collect())
                },
                negated,
            }),
        Just(PredicateExpr::Var("F".into())),
        any::<bool>().prop_map(|b| PredicateExpr::compare(
            Operand::Var("F".into()),
            CompareOp::Eq,
            Operand::Const(Value::Boolean(b))
        )),
    ]
}

fn arb_predicate() -> impl Strategy<Value = PredicateExpr> {
    arb_atom().prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| PredicateExpr::Not(Box::new(e))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(PredicateExpr::and),
            prop::collection::vec(inner, 2..4).prop_map(PredicateExpr::or),
        ]
    })
}

fn arb_meta() -> impl Strategy<Value = MetaPredicate> {
    prop::sample::select(vec![
        (Dimension::Purpose, "evidence"),
        (Dimension::Purpose, "provenance"),
        (Dimension::KnowledgeDomain, "\"Human Genetics\""),
        (Dimension::KnowledgeDomain, "'Call Annotations'"),
        (Dimension::Scale, "variant"),
        (Dimension::Scale, "\"Variant in Transcript\""),
        (Dimension::Method, "\"Clinical Evidence\""),
    ])
    .prop_map(|(d, w)| MetaPredicate::new(d, w))
}

fn arb_statement() -> impl Strategy<Value = Statement> {
    (
        arb_predicate(),
        any::<bool>(),
        prop::option::of("[A-Za-z][A-Za-z0-9 ,()>=.]{0,30}[a-z]"),
        prop::collection::vec(arb_meta(), 0..4),
    )
        .prop_map(|(p, a, label, meta)| {
            Statement::new(p, a).with_label(label.unwrap_or_default()).with_meta(meta)
        })
}

fn constants() -> Constants {
    let mut c = Constants::new();
    c.insert("CODES".into(), vec![Value::Text("a".into()), Value::Text("c".into())]);
    c
}

fn arb_script() -> impl Strategy<Value = Script> {
    (prop::collection::vec(arb_statement(), 0..6), any::<bool>())
        .prop_map(|(s, f)| Script::new(constants(), s, f))
}

fn arb_record() -> impl Strategy<Value = Record> {
    let num = prop_oneof![Just(Value::Missing), arb_num()];
    let text = prop_oneof![
        Just(Value::Missing),
        prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(|s| Value::Text(s.into()))
    ];
    let flag = prop_oneof![Just(Value::Missing), any::<bool>().prop_map(Value::Boolean)];
    (num.clone(), num.clone(), num, text, flag).prop_map(|(a, b, qd, s, f)| {
        Record::new(
            "r",
            [("A", a), ("B", b), ("QD", qd), ("S", s), ("F", f)].map(|(k, v)| (k.to_string(), v)),
        )
    })
}

fn decided_rank(d: DecidedBy) -> usize {
    match d {
        DecidedBy::Step(i) => i,
        DecidedBy::Default => usize::MAX,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn render_then_parse_is_identity(script in arb_script()) {
        let text = render_script(&script);
        let parsed = parse_script(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&parsed, &script);
        prop_assert_eq!(render_script(&parsed), text);
        prop_assert_eq!(parsed.source_hash(), script.source_hash());
    }

    #[test]
    fn negate_is_involutive_and_complementary(p in arb_predicate(), r in arb_record()) {
        let n = p.negate();
        prop_assert_eq!(n.negate().negate(), n.clone());
        let c = constants();
        let (t, _) = eval_predicate_with(&p, &r, &c, EvalMode::Strict).unwrap();
        let (nt, _) = eval_predicate_with(&n, &r, &c, EvalMode::Strict).unwrap();
        let (nnt, _) = eval_predicate_with(&n.negate(), &r, &c, EvalMode::Strict).unwrap();
        prop_assert_eq!(nt, !t);
        prop_assert_eq!(nnt, t);
    }

    #[test]
    fn first_true_statement_decides(script in arb_script(), r in arb_record()) {
        let (trace, _) = run_record_with(&script, &r, EvalMode::Strict).unwrap();
        let first = script.statements().iter().position(|s| {
            eval_predicate_with(&s.predicate, &r, script.constants(), EvalMode::Strict).unwrap().0
                == TriState::True
        });
        match first {
            Some(i) => {
                prop_assert_eq!(trace.decided_by, DecidedBy::Step(i));
                prop_assert_eq!(trace.outcome, script.statements()[i].action);
                prop_assert_eq!(trace.steps.len(), i + 1);
            }
            None => {
                prop_assert_eq!(trace.decided_by, DecidedBy::Default);
                prop_assert_eq!(trace.outcome, script.final_action());
            }
        }
        let fired = trace.steps.iter().filter(|s| s.fired).count();
        prop_assert!(fired <= 1);
        prop_assert!(trace.steps.iter().all(|s| s.fired == (s.result == TriState::True)));
    }

    #[test]
    fn waterfall_conserves_records(script in arb_script(), records in prop::collection::vec(arb_record(), 0..40)) {
        let records: Vec<Record> = records
            .into_iter()
            .enumerate()
            .map(|(i, r)| Record::new(format!("r{i}"), r.entries().clone()))
            .collect();
        let batch = run_batch(&script, &records, EvalMode::Strict).unwrap();
        let st = &batch.stats;
        let n = records.len() as u64;
        prop_assert_eq!(st.accepted_total + st.rejected_total, n);
        let matched: u64 = st.steps.iter().map(|s| s.matched).sum();
        prop_assert_eq!(matched + st.default_count, n);
        for (i, s) in st.steps.iter().enumerate() {
            prop_assert_eq!(s.evaluated, s.matched + s.passed + s.unknown);
            if i == 0 {
                prop_assert_eq!(s.evaluated, n);
            } else {
                let prev = &st.steps[i - 1];
                prop_assert_eq!(s.evaluated, prev.passed + prev.unknown);
            }
        }
        for (d, r) in batch.outcomes.iter().zip(&records) {
            let (t, _) = run_record_with(&script, r, EvalMode::Strict).unwrap();
            prop_assert_eq!(&d.record_id, r.id());
            prop_assert_eq!((d.outcome, d.decided_by), (t.outcome, t.decided_by));
        }
        let mut reversed = records.clone();
        reversed.reverse();
        let back = run_batch(&script, &reversed, EvalMode::Strict).unwrap();
        prop_assert_eq!(&back.stats, &batch.stats);
    }

    #[test]
    fn filling_missing_values_only_moves_decision_earlier(
        script in arb_script(),
        r in arb_record(),
        fill in arb_record(),
    ) {
        let mut filled = r.clone();
        for (k, v) in fill.entries() {
            if r.get(k).is_missing() {
                filled.set(k.clone(), v.clone());
            }
        }
        let (a, _) = run_record_with(&script, &r, EvalMode::Lenient).unwrap();
        let (b, _) = run_record_with(&script, &filled, EvalMode::Lenient).unwrap();
        prop_assert!(decided_rank(b.decided_by) <= decided_rank(a.decided_by));
    }

    #[test]
    fn removing_meta_predicates_never_adds_errors(stmt in arb_statement(), drop in any::<prop::sample::Index>()) {
        let dict = ClassificationDictionary::sample();
        let errors = |s: &Statement| {
            validate_statement(s, &dict).iter().filter(|d| d.severity == Severity::Error).count()
        };
        let before = errors(&stmt);
        let mut fewer = stmt.clone();
        if !fewer.meta_predicates.is_empty() {
            fewer.meta_predicates.remove(drop.index(fewer.meta_predicates.len()));
        }
        prop_assert!(errors(&fewer) <= before);
    }

    #[test]
    fn validation_is_deterministic(script in arb_script()) {
        let dict = ClassificationDictionary::sample();
        let a = validate_script(&script, &dict);
        let b = validate_script(&script, &dict);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.valid, a.errors() == 0);
    }
}

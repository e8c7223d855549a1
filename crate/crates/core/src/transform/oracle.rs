use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::dsl::{Constants, Operand, PredicateExpr, Script, SetExpr};
use crate::engine::{decide_record, EvalMode, WaterfallStats};
use crate::record::{Record, Value, ValueKind};

use super::tree::{DecisionTree, TreeNode};
use super::TransformError;

pub const DEFAULT_POINT_CAP: u64 = 1_000_000;

/// How the test values of one annotation are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainEntry {
    /// Exactly these values. May include `Missing`.
    Values(Vec<Value>),
    /// Constants the annotation is compared against. Numbers expand to
    /// values on, between, below and above each constant; text gains one
    /// value outside the set; booleans cover both.
    Thresholds(Vec<Value>),
}

/// Finite test domain for exhaustive comparison.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InputDomainSpec {
    pub entries: BTreeMap<String, DomainEntry>,
}

impl InputDomainSpec {
    pub fn new() -> Self {
        InputDomainSpec::default()
    }

    pub fn values(mut self, name: impl Into<String>, values: Vec<Value>) -> Self {
        self.entries.insert(name.into(), DomainEntry::Values(values));
        self
    }

    pub fn thresholds(mut self, name: impl Into<String>, constants: Vec<Value>) -> Self {
        self.entries.insert(name.into(), DomainEntry::Thresholds(constants));
        self
    }

    /// Concrete test values per annotation.
    pub fn expand(&self) -> BTreeMap<String, Vec<Value>> {
        self.entries
            .iter()
            .map(|(k, e)| {
                let vals = match e {
                    DomainEntry::Values(v) => v.clone(),
                    DomainEntry::Thresholds(c) => expand_thresholds(c),
                };
                (k.clone(), vals)
            })
            .collect()
    }

    /// Number of points in the Cartesian product, saturating.
    pub fn size(&self) -> u64 {
        self.expand().values().fold(1u64, |acc, v| acc.saturating_mul(v.len() as u64))
    }

    fn merge(&mut self, other: InputDomainSpec) {
        for (k, e) in other.entries {
            match (self.entries.get_mut(&k), e) {
                (Some(DomainEntry::Thresholds(a)), DomainEntry::Thresholds(b)) => a.extend(b),
                (None, e) => {
                    self.entries.insert(k, e);
                }
                _ => {}
            }
        }
    }
}

fn as_f64(v: &Value) -> f64 {
    match v {
        Value::Integer(i) => *i as f64,
        Value::Real(r) => *r,
        _ => unreachable!("numeric value"),
    }
}

fn push_unique(out: &mut Vec<Value>, v: Value) {
    if !out.iter().any(|x| x == &v) {
        out.push(v);
    }
}

fn expand_numbers(mut nums: Vec<Value>) -> Vec<Value> {
    nums.sort_by(|a, b| a.compare(b).unwrap());
    nums.dedup_by(|a, b| a.compare(b) == Some(std::cmp::Ordering::Equal));
    let Some(first) = nums.first().cloned() else { return Vec::new() };
    let last = nums.last().cloned().unwrap();
    let integral = nums.iter().all(|v| matches!(v, Value::Integer(_)));
    let below = |v: &Value| match v {
        Value::Integer(i) if integral => Value::Integer(i.saturating_sub(1)),
        _ => {
            let c = as_f64(v);
            Value::Real(if c > 0.0 {
                c / 2.0
            } else if c < 0.0 {
                c * 2.0
            } else {
                -1.0
            })
        }
    };
    let above = |v: &Value| match v {
        Value::Integer(i) if integral => Value::Integer(i.saturating_add(1)),
        _ => {
            let c = as_f64(v);
            Value::Real(if c > 0.0 {
                c * 2.0
            } else if c < 0.0 {
                c / 2.0
            } else {
                1.0
            })
        }
    };
    let mut out = vec![below(&first)];
    for (i, c) in nums.iter().enumerate() {
        out.push(c.clone());
        if let Some(next) = nums.get(i + 1) {
            push_unique(&mut out, Value::Real((as_f64(c) + as_f64(next)) / 2.0));
        }
    }
    out.push(above(&last));
    out
}

fn other_text(taken: &[Value]) -> Value {
    let mut s = String::from("other");
    while taken.iter().any(|v| matches!(v, Value::Text(t) if *t == s)) {
        s.push('_');
    }
    Value::Text(s)
}

fn expand_thresholds(constants: &[Value]) -> Vec<Value> {
    let nums: Vec<Value> =
        constants.iter().filter(|v| v.kind() == ValueKind::Number).cloned().collect();
    let texts: Vec<Value> =
        constants.iter().filter(|v| v.kind() == ValueKind::Text).cloned().collect();
    let has_bool = constants.iter().any(|v| v.kind() == ValueKind::Boolean);

    let mut out = expand_numbers(nums);
    if !texts.is_empty() {
        for t in &texts {
            push_unique(&mut out, t.clone());
        }
        out.push(other_text(&texts));
    }
    if has_bool || out.is_empty() {
        out.push(Value::Boolean(false));
        out.push(Value::Boolean(true));
    }
    out
}

fn collect(expr: &PredicateExpr, constants: &Constants, into: &mut BTreeMap<String, Vec<Value>>) {
    expr.visit(&mut |e| match e {
        PredicateExpr::Var(name) => {
            into.entry(name.clone()).or_default().push(Value::Boolean(true))
        }
        PredicateExpr::Compare { operands, .. } => {
            let consts: Vec<Value> = operands
                .iter()
                .filter_map(|o| match o {
                    Operand::Const(v) => Some(v.clone()),
                    Operand::Var(_) => None,
                })
                .collect();
            for o in operands {
                if let Operand::Var(name) = o {
                    into.entry(name.clone()).or_default().extend(consts.iter().cloned());
                }
            }
        }
        PredicateExpr::Membership { operand: Operand::Var(name), set, .. } => {
            let vals = match set {
                SetExpr::Literal(v) => v.clone(),
                SetExpr::Ref(r) => constants.get(r).cloned().unwrap_or_default(),
            };
            into.entry(name.clone()).or_default().extend(vals);
        }
        _ => {}
    });
}

fn spec_from(found: BTreeMap<String, Vec<Value>>) -> InputDomainSpec {
    InputDomainSpec {
        entries: found.into_iter().map(|(k, v)| (k, DomainEntry::Thresholds(v))).collect(),
    }
}

/// Threshold domain over every annotation a script tests.
pub fn derive_domain(script: &Script) -> InputDomainSpec {
    let mut found = BTreeMap::new();
    for s in script.statements() {
        collect(&s.predicate, script.constants(), &mut found);
    }
    spec_from(found)
}

pub fn derive_tree_domain(tree: &DecisionTree) -> InputDomainSpec {
    fn walk(node: &TreeNode, constants: &Constants, found: &mut BTreeMap<String, Vec<Value>>) {
        if let TreeNode::Branch { condition, then, otherwise } = node {
            collect(condition, constants, found);
            walk(then, constants, found);
            walk(otherwise, constants, found);
        }
    }
    let mut found = BTreeMap::new();
    walk(&tree.root, &tree.constants, &mut found);
    spec_from(found)
}

/// Either side of an equivalence check.
#[derive(Debug, Clone, Copy)]
pub enum Artifact<'a> {
    Tree(&'a DecisionTree),
    Script(&'a Script),
}

impl<'a> Artifact<'a> {
    pub fn domain(&self) -> InputDomainSpec {
        match self {
            Artifact::Tree(t) => derive_tree_domain(t),
            Artifact::Script(s) => derive_domain(s),
        }
    }

    fn variables(&self) -> BTreeSet<String> {
        self.domain().entries.into_keys().collect()
    }

    /// Outcome in lenient mode. `None` for a tree whose path hits `Unknown`.
    pub fn evaluate(&self, record: &Record) -> Result<Option<bool>, TransformError> {
        match self {
            Artifact::Tree(t) => Ok(t.evaluate(record, EvalMode::Lenient)?),
            Artifact::Script(s) => {
                let mut stats = WaterfallStats::new(s);
                Ok(Some(decide_record(s, record, EvalMode::Lenient, &mut stats)?.outcome))
            }
        }
    }
}

impl<'a> From<&'a DecisionTree> for Artifact<'a> {
    fn from(t: &'a DecisionTree) -> Self {
        Artifact::Tree(t)
    }
}

impl<'a> From<&'a Script> for Artifact<'a> {
    fn from(s: &'a Script) -> Self {
        Artifact::Script(s)
    }
}

/// Domain covering both artifacts.
pub fn joint_domain(a: Artifact<'_>, b: Artifact<'_>) -> InputDomainSpec {
    let mut d = a.domain();
    d.merge(b.domain());
    d
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleResult {
    Equal { points: u64 },
    Different { counterexample: Record, left: Option<bool>, right: Option<bool> },
}

impl OracleResult {
    pub fn is_equal(&self) -> bool {
        matches!(self, OracleResult::Equal { .. })
    }
}

fn point(names: &[&String], values: &[&Vec<Value>], index_id: u64) -> Record {
    let mut index = index_id;
    let mut entries = Vec::with_capacity(names.len());
    for (name, vals) in names.iter().zip(values).rev() {
        let n = vals.len() as u64;
        entries.push(((*name).clone(), vals[(index % n) as usize].clone()));
        index /= n;
    }
    Record::new(format!("point:{}", index_id), entries)
}

/// Exhaustively compares two artifacts on every point of `domain`.
///
/// Points are enumerated in mixed-radix order over annotation names, last
/// name varying fastest, and the first differing point is returned.
pub fn equivalence_oracle(
    a: Artifact<'_>,
    b: Artifact<'_>,
    domain: &InputDomainSpec,
    cap: u64,
) -> Result<OracleResult, TransformError> {
    let needed: BTreeSet<String> = a.variables().union(&b.variables()).cloned().collect();
    let missing: Vec<String> =
        needed.into_iter().filter(|n| !domain.entries.contains_key(n)).collect();
    if !missing.is_empty() {
        return Err(TransformError::IncompleteDomain { missing });
    }
    let expanded = domain.expand();
    if let Some((name, _)) = expanded.iter().find(|(_, v)| v.is_empty()) {
        return Err(TransformError::IncompleteDomain { missing: vec![name.clone()] });
    }
    let total = expanded.values().fold(1u64, |acc, v| acc.saturating_mul(v.len() as u64));
    if total > cap {
        return Err(TransformError::DomainTooLarge { points: total, cap });
    }
    let names: Vec<&String> = expanded.keys().collect();
    let values: Vec<&Vec<Value>> = expanded.values().collect();

    let found = (0..total).into_par_iter().find_map_first(|i| {
        let r = point(&names, &values, i);
        let outcome = a.evaluate(&r).and_then(|l| Ok((l, b.evaluate(&r)?)));
        match outcome {
            Ok((l, rr)) if l == rr => None,
            Ok((l, rr)) => {
                Some(Ok(OracleResult::Different { counterexample: r, left: l, right: rr }))
            }
            Err(e) => Some(Err(e)),
        }
    });
    match found {
        None => Ok(OracleResult::Equal { points: total }),
        Some(r) => r,
    }
}

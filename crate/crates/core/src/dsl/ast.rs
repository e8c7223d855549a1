use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::dictionary::{normalize_label, Dimension};
use crate::record::Value;

use super::render::render_script;

/// Named set constants declared at the top of a script.
pub type Constants = BTreeMap<String, Vec<Value>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
            CompareOp::Le => "<=",
            CompareOp::Ge => ">=",
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
        }
    }

    /// The operator whose truth value is the complement of this one.
    pub fn complement(self) -> CompareOp {
        match self {
            CompareOp::Lt => CompareOp::Ge,
            CompareOp::Gt => CompareOp::Le,
            CompareOp::Le => CompareOp::Gt,
            CompareOp::Ge => CompareOp::Lt,
            CompareOp::Eq => CompareOp::Ne,
            CompareOp::Ne => CompareOp::Eq,
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CompareOp::Eq | CompareOp::Ne)
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A comparison or membership operand.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Var(String),
    Const(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetExpr {
    Ref(String),
    Literal(Vec<Value>),
}

/// Boolean predicate over record annotations.
///
/// `Or` and `And` are n-ary and kept flat: use [`PredicateExpr::or`] and
/// [`PredicateExpr::and`] to build them.
#[derive(Debug, Clone, PartialEq)]
pub enum PredicateExpr {
    Or(Vec<PredicateExpr>),
    And(Vec<PredicateExpr>),
    Not(Box<PredicateExpr>),
    /// `a op1 b op2 c ...`, read as the conjunction of adjacent pairs.
    Compare {
        operands: Vec<Operand>,
        ops: Vec<CompareOp>,
    },
    Membership {
        operand: Operand,
        set: SetExpr,
        negated: bool,
    },
    Var(String),
    Const(Value),
}

impl PredicateExpr {
    /// Disjunction, flattening nested `Or`s. A single child is returned as is.
    pub fn or(children: impl IntoIterator<Item = PredicateExpr>) -> PredicateExpr {
        Self::flat(children, true)
    }

    /// Conjunction, flattening nested `And`s. An empty conjunction is `True`.
    pub fn and(children: impl IntoIterator<Item = PredicateExpr>) -> PredicateExpr {
        Self::flat(children, false)
    }

    fn flat(children: impl IntoIterator<Item = PredicateExpr>, is_or: bool) -> PredicateExpr {
        let mut out = Vec::new();
        for child in children {
            match (child, is_or) {
                (PredicateExpr::Or(cs), true) | (PredicateExpr::And(cs), false) => out.extend(cs),
                (c, _) => out.push(c),
            }
        }
        match out.len() {
            0 => PredicateExpr::Const(Value::Boolean(!is_or)),
            1 => out.pop().unwrap(),
            _ if is_or => PredicateExpr::Or(out),
            _ => PredicateExpr::And(out),
        }
    }

    pub fn compare(left: Operand, op: CompareOp, right: Operand) -> PredicateExpr {
        PredicateExpr::Compare { operands: vec![left, right], ops: vec![op] }
    }

    /// Logical complement in canonical form: single comparisons flip their
    /// operator, memberships toggle `not in`, double negation cancels,
    /// anything else is wrapped in `Not`. Involutive on its own results.
    pub fn negate(&self) -> PredicateExpr {
        match self.clone().canonical_top() {
            PredicateExpr::Not(inner) => *inner,
            PredicateExpr::Compare { operands, ops } if ops.len() == 1 => {
                PredicateExpr::Compare { operands, ops: vec![ops[0].complement()] }
            }
            PredicateExpr::Membership { operand, set, negated } => {
                PredicateExpr::Membership { operand, set, negated: !negated }
            }
            other => PredicateExpr::Not(Box::new(other)),
        }
    }

    /// Removes double negation and pushes a top-level `Not` into a single
    /// comparison or membership.
    fn canonical_top(self) -> PredicateExpr {
        match self {
            PredicateExpr::Not(inner) => match inner.canonical_top() {
                PredicateExpr::Not(x) => x.canonical_top(),
                PredicateExpr::Compare { operands, ops } if ops.len() == 1 => {
                    PredicateExpr::Compare { operands, ops: vec![ops[0].complement()] }
                }
                PredicateExpr::Membership { operand, set, negated } => {
                    PredicateExpr::Membership { operand, set, negated: !negated }
                }
                other => PredicateExpr::Not(Box::new(other)),
            },
            other => other,
        }
    }

    /// Top-level conjuncts; a non-`And` expression is its own single conjunct.
    pub fn conjuncts(&self) -> &[PredicateExpr] {
        match self {
            PredicateExpr::And(cs) => cs,
            other => std::slice::from_ref(other),
        }
    }

    /// Annotation names referenced anywhere in the expression. Set
    /// constant names are not variables and are excluded.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        let operand = |o: &Operand, out: &mut BTreeSet<String>| {
            if let Operand::Var(name) = o {
                out.insert(name.clone());
            }
        };
        match self {
            PredicateExpr::Or(cs) | PredicateExpr::And(cs) => {
                cs.iter().for_each(|c| c.collect_variables(out))
            }
            PredicateExpr::Not(c) => c.collect_variables(out),
            PredicateExpr::Compare { operands, .. } => {
                operands.iter().for_each(|o| operand(o, out))
            }
            PredicateExpr::Membership { operand: o, .. } => operand(o, out),
            PredicateExpr::Var(name) => {
                out.insert(name.clone());
            }
            PredicateExpr::Const(_) => {}
        }
    }

    /// Names of set constants referenced by the expression.
    pub fn set_refs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let PredicateExpr::Membership { set: SetExpr::Ref(name), .. } = e {
                out.insert(name.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&PredicateExpr)) {
        f(self);
        match self {
            PredicateExpr::Or(cs) | PredicateExpr::And(cs) => cs.iter().for_each(|c| c.visit(f)),
            PredicateExpr::Not(c) => c.visit(f),
            _ => {}
        }
    }
}

/// Free-function form of [`PredicateExpr::variables`].
pub fn extract_variables(predicate: &PredicateExpr) -> BTreeSet<String> {
    predicate.variables()
}

/// `@dimension(value)` assertion attached to a statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaPredicate {
    pub dimension: Dimension,
    /// Normalized value used for matching.
    pub value: String,
    /// The argument exactly as written, quotes included.
    pub written: String,
}

impl MetaPredicate {
    pub fn new(dimension: Dimension, written: impl Into<String>) -> Self {
        let written = written.into().trim().to_string();
        MetaPredicate { dimension, value: normalize_label(&written), written }
    }

    /// Source form, e.g. `@knowledge_domain("Human Genetics")`.
    pub fn verbatim(&self) -> String {
        format!("@{}({})", self.dimension, self.written)
    }

    /// The argument without surrounding quotes.
    pub fn display_value(&self) -> &str {
        self.written.trim_matches(|c| c == '"' || c == '\'')
    }
}

impl fmt::Display for MetaPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.verbatim())
    }
}

/// Source lines covered by a statement (1-based, inclusive).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub start_line: usize,
    pub if_line: usize,
    pub end_line: usize,
}

/// One pipeline step: optional validation block, predicate, action.
///
/// Equality is structural; source positions are ignored.
#[derive(Debug, Clone)]
pub struct Statement {
    pub index: usize,
    pub label: String,
    pub meta_predicates: Vec<MetaPredicate>,
    pub predicate: PredicateExpr,
    pub action: bool,
    pub span: Span,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.index == other.index
            && self.label == other.label
            && self.meta_predicates == other.meta_predicates
            && self.predicate == other.predicate
            && self.action == other.action
    }
}

impl Statement {
    pub fn new(predicate: PredicateExpr, action: bool) -> Self {
        Statement {
            index: 0,
            label: String::new(),
            meta_predicates: Vec::new(),
            predicate,
            action,
            span: Span::default(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_meta(mut self, meta: Vec<MetaPredicate>) -> Self {
        self.meta_predicates = meta;
        self
    }
}

/// A parsed cascade: constants, ordered statements and the default action.
#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    constants: Constants,
    statements: Vec<Statement>,
    final_action: bool,
    source_hash: String,
}

impl Script {
    /// Builds a script, renumbering statements by position and computing
    /// the content hash of the canonical rendering.
    pub fn new(constants: Constants, mut statements: Vec<Statement>, final_action: bool) -> Self {
        for (i, s) in statements.iter_mut().enumerate() {
            s.index = i;
        }
        let mut script = Script { constants, statements, final_action, source_hash: String::new() };
        script.source_hash = hex::encode(Sha256::digest(render_script(&script).as_bytes()));
        script
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    pub fn final_action(&self) -> bool {
        self.final_action
    }

    /// Hex SHA-256 of the canonical rendering.
    pub fn source_hash(&self) -> &str {
        &self.source_hash
    }

    pub fn into_parts(self) -> (Constants, Vec<Statement>, bool) {
        (self.constants, self.statements, self.final_action)
    }
}

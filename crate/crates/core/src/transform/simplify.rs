use crate::dsl::{PredicateExpr, Script, Statement};
use crate::record::Value;

use super::oracle::{equivalence_oracle, joint_domain, OracleResult, DEFAULT_POINT_CAP};
use super::TransformError;

fn is_literal(e: &PredicateExpr) -> bool {
    match e {
        PredicateExpr::Var(_) | PredicateExpr::Const(_) | PredicateExpr::Membership { .. } => true,
        PredicateExpr::Compare { ops, .. } => ops.len() == 1,
        PredicateExpr::Not(inner) => is_literal(inner),
        PredicateExpr::Or(_) | PredicateExpr::And(_) => false,
    }
}

/// Whether every statement tests a single literal: one variable, one
/// comparison or one membership, optionally negated. Also returns the
/// indices of the statements that do not.
pub fn is_one_decision_list(script: &Script) -> (bool, Vec<usize>) {
    let bad: Vec<usize> =
        script.statements().iter().filter(|s| !is_literal(&s.predicate)).map(|s| s.index).collect();
    (bad.is_empty(), bad)
}

fn contains(set: &[PredicateExpr], e: &PredicateExpr) -> bool {
    set.iter().any(|x| x == e)
}

fn subset(a: &[PredicateExpr], b: &[PredicateExpr]) -> bool {
    a.iter().all(|x| contains(b, x))
}

fn same_set(a: &[PredicateExpr], b: &[PredicateExpr]) -> bool {
    subset(a, b) && subset(b, a)
}

fn always_true(e: &PredicateExpr) -> bool {
    matches!(e, PredicateExpr::Const(Value::Boolean(true)))
}

/// Some conjunct of `a` is the complement of some conjunct of `b`.
fn disjoint(a: &[PredicateExpr], b: &[PredicateExpr]) -> bool {
    a.iter().any(|x| contains(b, &x.negate()))
}

struct Rules {
    rules: Vec<(Vec<PredicateExpr>, Statement)>,
    default: bool,
}

impl Rules {
    /// A conjunct implied by the falsity of an earlier rule is dropped: the
    /// earlier rule would have fired had its complement been false. The
    /// narrow form only drops negations of an earlier rule's whole predicate.
    fn drop_implied_conjunct(&mut self, narrow: bool) -> bool {
        for j in 0..self.rules.len() {
            let conj = &self.rules[j].0;
            for (k, c) in conj.iter().enumerate() {
                let mut rest: Vec<PredicateExpr> = conj.clone();
                rest.remove(k);
                let neg = c.negate();
                let neg_conj = neg.conjuncts();
                let implied = self.rules[..j].iter().any(|(earlier, _)| {
                    same_set(earlier, neg_conj)
                        || !narrow && {
                            let mut widened = rest.clone();
                            widened.extend(neg_conj.iter().cloned());
                            subset(earlier, &widened)
                        }
                });
                if implied {
                    self.rules[j].0 = rest;
                    return true;
                }
            }
        }
        false
    }

    /// A rule with the default action can go when no later rule with the
    /// other action can match the same records.
    fn drop_redundant_rule(&mut self) -> bool {
        for j in (0..self.rules.len()).rev() {
            if self.rules[j].1.action != self.default {
                continue;
            }
            let shadowless = self.rules[j + 1..]
                .iter()
                .filter(|(_, s)| s.action != self.default)
                .all(|(later, _)| disjoint(&self.rules[j].0, later));
            if shadowless {
                self.rules.remove(j);
                return true;
            }
        }
        false
    }

    /// Everything after an unconditional rule is unreachable.
    fn truncate_at_unconditional(&mut self) -> bool {
        let Some(pos) = self.rules.iter().position(|(c, _)| c.iter().all(always_true)) else {
            return false;
        };
        self.default = self.rules[pos].1.action;
        self.rules.truncate(pos);
        true
    }
}

/// Removes conjuncts and rules made redundant by first-match evaluation.
///
/// The rewrites assume every tested annotation is present. The result is
/// checked against the input with [`equivalence_oracle`] over a derived
/// threshold domain before it is returned.
pub fn simplify_cascade(script: &Script) -> Result<Script, TransformError> {
    simplify_cascade_with_cap(script, DEFAULT_POINT_CAP)
}

pub fn simplify_cascade_with_cap(script: &Script, cap: u64) -> Result<Script, TransformError> {
    let mut rules = Rules {
        rules: script
            .statements()
            .iter()
            .map(|s| (s.predicate.conjuncts().to_vec(), s.clone()))
            .collect(),
        default: script.final_action(),
    };
    while rules.truncate_at_unconditional()
        || rules.drop_implied_conjunct(true)
        || rules.drop_redundant_rule()
        || rules.drop_implied_conjunct(false)
    {}

    let statements: Vec<Statement> = rules
        .rules
        .into_iter()
        .map(|(conj, mut s)| {
            s.predicate = PredicateExpr::and(conj);
            s
        })
        .collect();
    let out = Script::new(script.constants().clone(), statements, rules.default);

    let domain = joint_domain(script.into(), (&out).into());
    match equivalence_oracle(script.into(), (&out).into(), &domain, cap) {
        Ok(OracleResult::Equal { .. }) => Ok(out),
        Ok(OracleResult::Different { counterexample, .. }) => {
            Err(TransformError::SimplificationUnsound {
                counterexample: counterexample.to_json_line(),
            })
        }
        Err(e) => Err(TransformError::Unverifiable(Box::new(e))),
    }
}

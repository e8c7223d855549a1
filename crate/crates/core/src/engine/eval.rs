use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::dsl::{CompareOp, Constants, Operand, PredicateExpr, SetExpr};
use crate::record::{Record, Value, ValueKind};

use super::EvalError;

/// Kleene three-valued truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TriState {
    True,
    False,
    Unknown,
}

impl std::ops::Not for TriState {
    type Output = TriState;

    fn not(self) -> TriState {
        match self {
            TriState::True => TriState::False,
            TriState::False => TriState::True,
            TriState::Unknown => TriState::Unknown,
        }
    }
}

impl TriState {
    pub fn and(self, other: TriState) -> TriState {
        match (self, other) {
            (TriState::False, _) | (_, TriState::False) => TriState::False,
            (TriState::True, TriState::True) => TriState::True,
            _ => TriState::Unknown,
        }
    }

    pub fn or(self, other: TriState) -> TriState {
        match (self, other) {
            (TriState::True, _) | (_, TriState::True) => TriState::True,
            (TriState::False, TriState::False) => TriState::False,
            _ => TriState::Unknown,
        }
    }

    pub fn is_true(self) -> bool {
        self == TriState::True
    }
}

impl From<bool> for TriState {
    fn from(b: bool) -> Self {
        if b {
            TriState::True
        } else {
            TriState::False
        }
    }
}

impl fmt::Display for TriState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriState::True => "True",
            TriState::False => "False",
            TriState::Unknown => "Unknown",
        })
    }
}

/// How present values of incomparable kinds are handled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EvalMode {
    /// Abort with `TypeMismatch`.
    #[default]
    Strict,
    /// Treat the atom as `Unknown` and count the event.
    Lenient,
}

pub(crate) struct Evaluator<'a> {
    pub record: &'a Record,
    pub constants: &'a Constants,
    pub mode: EvalMode,
    pub mismatches: u64,
}

/// Evaluates a predicate in strict mode.
pub fn eval_predicate(
    predicate: &PredicateExpr,
    record: &Record,
    constants: &Constants,
) -> Result<TriState, EvalError> {
    eval_predicate_with(predicate, record, constants, EvalMode::Strict).map(|(t, _)| t)
}

/// Evaluates a predicate, returning the result and the number of type
/// mismatches absorbed (always 0 in strict mode).
pub fn eval_predicate_with(
    predicate: &PredicateExpr,
    record: &Record,
    constants: &Constants,
    mode: EvalMode,
) -> Result<(TriState, u64), EvalError> {
    let mut ev = Evaluator { record, constants, mode, mismatches: 0 };
    let t = ev.eval(predicate)?;
    Ok((t, ev.mismatches))
}

fn operand_name(o: &Operand) -> String {
    match o {
        Operand::Var(name) => name.clone(),
        Operand::Const(v) => format!("literal {v}"),
    }
}

impl<'a> Evaluator<'a> {
    fn mismatch(
        &mut self,
        annotation: String,
        expected: ValueKind,
        found: ValueKind,
    ) -> Result<TriState, EvalError> {
        match self.mode {
            EvalMode::Strict => Err(EvalError::TypeMismatch {
                record_id: self.record.id().to_string(),
                step: None,
                annotation,
                expected,
                found,
            }),
            EvalMode::Lenient => {
                self.mismatches += 1;
                Ok(TriState::Unknown)
            }
        }
    }

    fn resolve<'b>(&self, o: &'b Operand) -> &'b Value
    where
        'a: 'b,
    {
        match o {
            Operand::Var(name) => self.record.get(name),
            Operand::Const(v) => v,
        }
    }

    /// Every child is evaluated so that a strict mismatch is reported
    /// regardless of operand order.
    pub fn eval(&mut self, e: &PredicateExpr) -> Result<TriState, EvalError> {
        match e {
            PredicateExpr::Or(cs) => {
                let mut acc = TriState::False;
                for c in cs {
                    acc = acc.or(self.eval(c)?);
                }
                Ok(acc)
            }
            PredicateExpr::And(cs) => {
                let mut acc = TriState::True;
                for c in cs {
                    acc = acc.and(self.eval(c)?);
                }
                Ok(acc)
            }
            PredicateExpr::Not(c) => Ok(!self.eval(c)?),
            PredicateExpr::Compare { operands, ops } => {
                let mut acc = TriState::True;
                for (i, op) in ops.iter().enumerate() {
                    acc = acc.and(self.pair(&operands[i], *op, &operands[i + 1])?);
                }
                Ok(acc)
            }
            PredicateExpr::Membership { operand, set, negated } => {
                let t = self.membership(operand, set)?;
                Ok(if *negated { !t } else { t })
            }
            PredicateExpr::Var(name) => match self.record.get(name) {
                Value::Missing => Ok(TriState::Unknown),
                Value::Boolean(b) => Ok((*b).into()),
                other => self.mismatch(name.clone(), ValueKind::Boolean, other.kind()),
            },
            PredicateExpr::Const(v) => match v {
                Value::Boolean(b) => Ok((*b).into()),
                other => {
                    self.mismatch(format!("literal {other}"), ValueKind::Boolean, other.kind())
                }
            },
        }
    }

    fn pair(&mut self, l: &Operand, op: CompareOp, r: &Operand) -> Result<TriState, EvalError> {
        let (lv, rv) = (self.resolve(l), self.resolve(r));
        if lv.is_missing() || rv.is_missing() {
            return Ok(TriState::Unknown);
        }
        let (name, expected, found) = match l {
            Operand::Var(_) => (operand_name(l), rv.kind(), lv.kind()),
            Operand::Const(_) => (operand_name(r), lv.kind(), rv.kind()),
        };
        if lv.kind() != rv.kind() {
            return self.mismatch(name, expected, found);
        }
        if lv.kind() == ValueKind::Boolean && op.is_ordering() {
            return self.mismatch(name, ValueKind::Number, ValueKind::Boolean);
        }
        let Some(ord) = lv.compare(rv) else {
            return self.mismatch(name, expected, found);
        };
        Ok(match op {
            CompareOp::Lt => ord == Ordering::Less,
            CompareOp::Gt => ord == Ordering::Greater,
            CompareOp::Le => ord != Ordering::Greater,
            CompareOp::Ge => ord != Ordering::Less,
            CompareOp::Eq => ord == Ordering::Equal,
            CompareOp::Ne => ord != Ordering::Equal,
        }
        .into())
    }

    fn membership(&mut self, operand: &Operand, set: &SetExpr) -> Result<TriState, EvalError> {
        let values: &[Value] = match set {
            SetExpr::Literal(vs) => vs,
            SetExpr::Ref(name) => match self.constants.get(name) {
                Some(vs) => vs,
                None => return Err(EvalError::UndefinedSet { name: name.clone() }),
            },
        };
        let v = self.resolve(operand);
        if v.is_missing() {
            return Ok(TriState::Unknown);
        }
        if values.is_empty() {
            return Ok(TriState::False);
        }
        let mut comparable = false;
        for m in values {
            if m.kind() == v.kind() {
                comparable = true;
                if v.compare(m) == Some(Ordering::Equal) {
                    return Ok(TriState::True);
                }
            }
        }
        if comparable {
            Ok(TriState::False)
        } else {
            self.mismatch(operand_name(operand), values[0].kind(), v.kind())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_predicate;

    fn rec(pairs: &[(&str, Value)]) -> Record {
        Record::new("r", pairs.iter().map(|(k, v)| (k.to_string(), v.clone())))
    }

    fn eval(src: &str, r: &Record) -> Result<TriState, EvalError> {
        let constants = Constants::new();
        eval_predicate(&parse_predicate(src, &constants).unwrap(), r, &constants)
    }

    #[test]
    fn kleene_tables() {
        use TriState::*;
        assert_eq!(!Unknown, Unknown);
        for x in [True, False, Unknown] {
            assert_eq!(False.and(x), False);
            assert_eq!(True.or(x), True);
        }
        assert_eq!(True.and(Unknown), Unknown);
        assert_eq!(False.or(Unknown), Unknown);
    }

    #[test]
    fn threshold_and_chain() {
        let r = rec(&[("gnomAD_AF", Value::Real(0.00001)), ("QD", Value::Real(4.2))]);
        assert_eq!(eval("gnomAD_AF > 0.01", &r).unwrap(), TriState::False);
        assert_eq!(eval("(0 < QD < 4)", &r).unwrap(), TriState::False);
        assert_eq!(eval("0 < QD < 5", &r).unwrap(), TriState::True);
    }

    #[test]
    fn missing_is_unknown() {
        let r = rec(&[("X", Value::Integer(1))]);
        assert_eq!(eval("pLI > 0.9 and X == 1", &r).unwrap(), TriState::Unknown);
        assert_eq!(eval("pLI > 0.9 and X == 2", &r).unwrap(), TriState::False);
        assert_eq!(eval("pLI > 0.9 or X == 1", &r).unwrap(), TriState::True);
        assert_eq!(eval("not Flag", &r).unwrap(), TriState::Unknown);
        assert_eq!(eval("G not in {\"a\"}", &r).unwrap(), TriState::Unknown);
    }

    #[test]
    fn exact_numeric_comparison() {
        let r = rec(&[("N", Value::Integer(9007199254740993))]);
        assert_eq!(eval("N > 9007199254740992.0", &r).unwrap(), TriState::True);
        assert_eq!(eval("N == 9007199254740993", &r).unwrap(), TriState::True);
        let r = rec(&[("AF", Value::Integer(0))]);
        assert_eq!(eval("AF >= 0.0", &r).unwrap(), TriState::True);
    }

    #[test]
    fn membership_and_booleans() {
        let r = rec(&[
            ("C", Value::Text("stop_gained".into())),
            ("S", Value::Text("2".into())),
            ("B", Value::Boolean(true)),
        ]);
        assert_eq!(eval("C in {\"stop_gained\", \"x\"}", &r).unwrap(), TriState::True);
        assert_eq!(eval("C not in {\"x\"}", &r).unwrap(), TriState::True);
        assert_eq!(eval("S in {\"2\", \"3\"}", &r).unwrap(), TriState::True);
        assert_eq!(eval("C in {}", &r).unwrap(), TriState::False);
        assert_eq!(eval("B", &r).unwrap(), TriState::True);
        assert_eq!(eval("B == False", &r).unwrap(), TriState::False);
        assert_eq!(eval("B != False", &r).unwrap(), TriState::True);
    }

    #[test]
    fn strict_and_lenient_mismatch() {
        let r = rec(&[("S", Value::Text("2".into())), ("B", Value::Boolean(true))]);
        for src in ["S < 3", "S in {2, 3}", "B < True", "S", "1 == S"] {
            let err = eval(src, &r).unwrap_err();
            assert!(matches!(err, EvalError::TypeMismatch { .. }), "{src}");
        }
        let constants = Constants::new();
        let p = parse_predicate("S < 3 or S == \"2\"", &constants).unwrap();
        let (t, n) = eval_predicate_with(&p, &r, &constants, EvalMode::Lenient).unwrap();
        assert_eq!((t, n), (TriState::True, 1));
    }

    #[test]
    fn mismatch_reports_kinds() {
        let r = rec(&[("S", Value::Text("x".into()))]);
        match eval("S > 1", &r).unwrap_err() {
            EvalError::TypeMismatch { annotation, expected, found, .. } => {
                assert_eq!(annotation, "S");
                assert_eq!(expected, ValueKind::Number);
                assert_eq!(found, ValueKind::Text);
            }
            other => panic!("{other:?}"),
        }
    }
}

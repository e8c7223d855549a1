//! Canonical text form of scripts and predicates.

use std::fmt::Write;

use crate::record::Value;

use super::ast::{Operand, PredicateExpr, Script, SetExpr};

const INDENT: &str = "    ";

/// Renders a script in canonical form. Parsing the output yields a script
/// equal to the input.
pub fn render_script(script: &Script) -> String {
    let mut out = String::new();
    for (name, values) in script.constants() {
        let _ = writeln!(out, "{name} = {}", render_set(values));
    }
    if !script.constants().is_empty() {
        out.push('\n');
    }
    for stmt in script.statements() {
        if !stmt.label.is_empty() {
            let _ = writeln!(out, "# {}", stmt.label);
        }
        if !stmt.meta_predicates.is_empty() {
            out.push_str("\"\"\"\n");
            for m in &stmt.meta_predicates {
                let _ = writeln!(out, "{}", m.verbatim());
            }
            out.push_str("\"\"\"\n");
        }
        let _ = writeln!(out, "if {}:", render_predicate(&stmt.predicate));
        let _ = writeln!(out, "{INDENT}return {}", render_bool(stmt.action));
        out.push('\n');
    }
    let _ = writeln!(out, "return {}", render_bool(script.final_action()));
    out
}

pub fn render_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

pub fn render_value(value: &Value) -> String {
    match value {
        Value::Text(s) => {
            let mut out = String::with_capacity(s.len() + 2);
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    '\r' => out.push_str("\\r"),
                    '\0' => out.push_str("\\0"),
                    c => out.push(c),
                }
            }
            out.push('"');
            out
        }
        Value::Integer(i) => i.to_string(),
        Value::Real(r) => format!("{r:?}"),
        Value::Boolean(b) => render_bool(*b).to_string(),
        Value::Missing => "None".to_string(),
    }
}

pub fn render_set(values: &[Value]) -> String {
    let items: Vec<String> = values.iter().map(render_value).collect();
    format!("{{{}}}", items.join(", "))
}

fn render_operand(op: &Operand) -> String {
    match op {
        Operand::Var(name) => name.clone(),
        Operand::Const(v) => render_value(v),
    }
}

/// Renders a predicate with the minimum parentheses needed for
/// `not` > `and` > `or` precedence.
pub fn render_predicate(expr: &PredicateExpr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, 0);
    out
}

fn precedence(expr: &PredicateExpr) -> u8 {
    match expr {
        PredicateExpr::Or(_) => 1,
        PredicateExpr::And(_) => 2,
        PredicateExpr::Not(_) => 3,
        _ => 4,
    }
}

fn write_expr(out: &mut String, expr: &PredicateExpr, min_prec: u8) {
    let prec = precedence(expr);
    let paren = prec < min_prec;
    if paren {
        out.push('(');
    }
    match expr {
        PredicateExpr::Or(cs) | PredicateExpr::And(cs) => {
            let sep = if prec == 1 { " or " } else { " and " };
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                // Same-kind children are parenthesized so the tree shape survives.
                write_expr(out, c, prec + 1);
            }
        }
        PredicateExpr::Not(inner) => {
            out.push_str("not ");
            write_expr(out, inner, 3);
        }
        PredicateExpr::Compare { operands, ops } => {
            out.push_str(&render_operand(&operands[0]));
            for (op, operand) in ops.iter().zip(&operands[1..]) {
                let _ = write!(out, " {op} {}", render_operand(operand));
            }
        }
        PredicateExpr::Membership { operand, set, negated } => {
            out.push_str(&render_operand(operand));
            out.push_str(if *negated { " not in " } else { " in " });
            match set {
                SetExpr::Ref(name) => out.push_str(name),
                SetExpr::Literal(values) => out.push_str(&render_set(values)),
            }
        }
        PredicateExpr::Var(name) => out.push_str(name),
        PredicateExpr::Const(v) => out.push_str(&render_value(v)),
    }
    if paren {
        out.push(')');
    }
}

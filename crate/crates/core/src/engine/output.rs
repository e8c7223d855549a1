use std::fmt::Write;

use crate::dictionary::Dimension;
use crate::record::Value;

use super::eval::TriState;
use super::run::{DecidedBy, Decision, StepTrace, Trace, WaterfallStats};

fn clean(label: &str) -> String {
    label.replace(['\t', '\n', '\r'], " ")
}

fn action_word(action: bool) -> &'static str {
    if action {
        "return True"
    } else {
        "return False"
    }
}

/// Tab-separated waterfall table. The `TYPE_MISMATCHES` row is written only
/// when `lenient` is set.
pub fn render_stats_tsv(stats: &WaterfallStats, lenient: bool) -> String {
    let mut out = String::from("step_index\tlabel\tevaluated\tmatched\tpassed\tunknown\n");
    for (i, s) in stats.steps.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i}\t{}\t{}\t{}\t{}\t{}",
            clean(&s.label),
            s.evaluated,
            s.matched,
            s.passed,
            s.unknown
        );
    }
    let d = stats.default_count;
    let _ = writeln!(out, "DEFAULT\t{}\t{d}\t{d}\t0\t0", action_word(stats.final_action));
    let _ = writeln!(out, "ACCEPTED\t\t\t{}\t\t", stats.accepted_total);
    let _ = writeln!(out, "REJECTED\t\t\t{}\t\t", stats.rejected_total);
    if lenient {
        let _ = writeln!(out, "TYPE_MISMATCHES\t\t\t{}\t\t", stats.type_mismatches);
    }
    out
}

/// One JSON object per line: `record_id`, `outcome`, `decided_by`.
pub fn render_decision(d: &Decision) -> String {
    serde_json::to_string(d).expect("decision serializes")
}

pub fn render_trace_json(trace: &Trace) -> String {
    serde_json::to_string(trace).expect("trace serializes")
}

fn meta_column(step: &StepTrace, dim: Dimension) -> String {
    let vals: Vec<&str> = step
        .meta_predicates
        .iter()
        .filter(|m| m.dimension == dim)
        .map(|m| m.display_value())
        .collect();
    vals.join(", ")
}

fn evaluated_to(step: &StepTrace) -> String {
    match step.result {
        TriState::True if step.action_if_fired => "True → Selected".into(),
        TriState::True => "True → Rejected".into(),
        other => format!("{other} → Skip"),
    }
}

fn action(a: bool) -> &'static str {
    if a {
        "Select"
    } else {
        "Reject"
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::Missing => "(missing)".into(),
        other => other.to_json().to_string(),
    }
}

/// Human-readable trace table with one row per evaluated step, a DEFAULT
/// row when no step fired, and the variable values used by each step.
pub fn render_trace_table(trace: &Trace, final_action: bool) -> String {
    let header =
        ["Step", "Test", "Purpose / Knowledge Domain", "Scale", "Method", "Action", "Evaluated to"];
    let mut rows: Vec<[String; 7]> = trace
        .steps
        .iter()
        .map(|s| {
            let purpose = meta_column(s, Dimension::Purpose);
            let domain = meta_column(s, Dimension::KnowledgeDomain);
            let pd = match (purpose.is_empty(), domain.is_empty()) {
                (false, false) => format!("{purpose} / {domain}"),
                (true, _) => domain,
                (_, true) => purpose,
            };
            [
                (s.step_index + 1).to_string(),
                clean(&s.label),
                pd,
                meta_column(s, Dimension::Scale),
                meta_column(s, Dimension::Method),
                action(s.action_if_fired).to_string(),
                evaluated_to(s),
            ]
        })
        .collect();
    if trace.decided_by == DecidedBy::Default {
        let outcome = if final_action { "Selected" } else { "Rejected" };
        rows.push([
            "DEFAULT".into(),
            "No rule fired".into(),
            String::new(),
            String::new(),
            String::new(),
            action(final_action).to_string(),
            format!("{} → {outcome}", if final_action { "True" } else { "False" }),
        ]);
    }

    let mut widths = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i + 1 == cells.len() {
                s.push_str(cell);
            } else {
                let pad = w - cell.chars().count();
                s.push_str(cell);
                s.extend(std::iter::repeat_n(' ', pad + 2));
            }
        }
        s.push('\n');
        s
    };

    let mut out = format!("Decision trace for {}\n", trace.record_id);
    out.push_str(&line(&header.map(String::from)));
    for row in &rows {
        out.push_str(&line(row));
    }
    let verdict = if trace.outcome { "selected" } else { "rejected" };
    let by = match trace.decided_by {
        DecidedBy::Step(i) => format!("step {}", i + 1),
        DecidedBy::Default => "default".into(),
    };
    let outcome = if trace.outcome { "True" } else { "False" };
    let _ = writeln!(out, "Outcome: {outcome} ({verdict} by {by})");
    out.push_str("Values:\n");
    for s in &trace.steps {
        if s.variables.is_empty() {
            continue;
        }
        let vals: Vec<String> =
            s.variables.iter().map(|(k, v)| format!("{k} = {}", value_text(v))).collect();
        let _ = writeln!(out, "  {}: {}", s.step_index + 1, vals.join(", "));
    }
    out
}

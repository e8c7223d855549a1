use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::dsl::{MetaPredicate, Script};
use crate::record::{Record, Value};

use super::eval::{EvalMode, Evaluator, TriState};
use super::EvalError;

/// The step that determined an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecidedBy {
    Step(usize),
    Default,
}

impl Serialize for DecidedBy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DecidedBy::Step(i) => s.serialize_u64(*i as u64),
            DecidedBy::Default => s.serialize_str("Default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub step_index: usize,
    pub label: String,
    pub meta_predicates: Vec<MetaPredicate>,
    pub result: TriState,
    pub fired: bool,
    /// Every variable referenced by the predicate, `Missing` when absent.
    pub variables: BTreeMap<String, Value>,
    pub action_if_fired: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub record_id: String,
    pub steps: Vec<StepTrace>,
    pub outcome: bool,
    pub decided_by: DecidedBy,
}

impl Serialize for StepTrace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let metas: Vec<String> = self.meta_predicates.iter().map(|m| m.verbatim()).collect();
        let vars: BTreeMap<&str, serde_json::Value> =
            self.variables.iter().map(|(k, v)| (k.as_str(), v.to_json())).collect();
        let mut m = s.serialize_map(Some(7))?;
        m.serialize_entry("step_index", &self.step_index)?;
        m.serialize_entry("label", &self.label)?;
        m.serialize_entry("meta_predicates", &metas)?;
        m.serialize_entry("result", &self.result)?;
        m.serialize_entry("fired", &self.fired)?;
        m.serialize_entry("variables", &vars)?;
        m.serialize_entry("action_if_fired", &self.action_if_fired)?;
        m.end()
    }
}

impl Serialize for Trace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(4))?;
        m.serialize_entry("record_id", &self.record_id)?;
        m.serialize_entry("steps", &self.steps)?;
        m.serialize_entry("outcome", &self.outcome)?;
        m.serialize_entry("decided_by", &self.decided_by)?;
        m.end()
    }
}

/// Outcome of one record without the per-step detail.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Decision {
    pub record_id: String,
    pub outcome: bool,
    pub decided_by: DecidedBy,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepStats {
    pub label: String,
    pub evaluated: u64,
    pub matched: u64,
    /// Records whose predicate was definitely False.
    pub passed: u64,
    pub unknown: u64,
}

/// Per-step waterfall counts. Merging is plain addition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WaterfallStats {
    pub steps: Vec<StepStats>,
    pub final_action: bool,
    pub default_count: u64,
    pub accepted_total: u64,
    pub rejected_total: u64,
    pub type_mismatches: u64,
}

impl WaterfallStats {
    pub fn new(script: &Script) -> Self {
        WaterfallStats {
            steps: script
                .statements()
                .iter()
                .map(|s| StepStats { label: s.label.clone(), ..StepStats::default() })
                .collect(),
            final_action: script.final_action(),
            ..WaterfallStats::default()
        }
    }

    pub fn total(&self) -> u64 {
        self.accepted_total + self.rejected_total
    }

    fn observe(&mut self, step: usize, result: TriState) {
        let s = &mut self.steps[step];
        s.evaluated += 1;
        match result {
            TriState::True => s.matched += 1,
            TriState::False => s.passed += 1,
            TriState::Unknown => s.unknown += 1,
        }
    }

    fn decide(&mut self, d: &Decision) {
        if d.decided_by == DecidedBy::Default {
            self.default_count += 1;
        }
        if d.outcome {
            self.accepted_total += 1;
        } else {
            self.rejected_total += 1;
        }
    }

    /// Adds another partition's counts. Both must come from the same script.
    pub fn merge(&mut self, other: &WaterfallStats) {
        if self.steps.len() < other.steps.len() {
            self.steps.resize(other.steps.len(), StepStats::default());
        }
        for (a, b) in self.steps.iter_mut().zip(&other.steps) {
            if a.label.is_empty() {
                a.label.clone_from(&b.label);
            }
            a.evaluated += b.evaluated;
            a.matched += b.matched;
            a.passed += b.passed;
            a.unknown += b.unknown;
        }
        self.default_count += other.default_count;
        self.accepted_total += other.accepted_total;
        self.rejected_total += other.rejected_total;
        self.type_mismatches += other.type_mismatches;
    }
}

/// Walks the cascade for one record, reporting each evaluated step.
fn walk(
    script: &Script,
    record: &Record,
    mode: EvalMode,
    mut on_step: impl FnMut(usize, TriState),
) -> Result<(Decision, u64), EvalError> {
    let mut ev = Evaluator { record, constants: script.constants(), mode, mismatches: 0 };
    let mut decided = (script.final_action(), DecidedBy::Default);
    for (i, stmt) in script.statements().iter().enumerate() {
        let result = ev.eval(&stmt.predicate).map_err(|e| e.at_step(i))?;
        on_step(i, result);
        if result.is_true() {
            decided = (stmt.action, DecidedBy::Step(i));
            break;
        }
    }
    let decision =
        Decision { record_id: record.id().to_string(), outcome: decided.0, decided_by: decided.1 };
    Ok((decision, ev.mismatches))
}

/// Full trace of one record in strict mode.
pub fn run_record(script: &Script, record: &Record) -> Result<Trace, EvalError> {
    run_record_with(script, record, EvalMode::Strict).map(|(t, _)| t)
}

/// Full trace of one record, plus the number of absorbed type mismatches.
pub fn run_record_with(
    script: &Script,
    record: &Record,
    mode: EvalMode,
) -> Result<(Trace, u64), EvalError> {
    trace_walk(script, record, mode, |_, _| {})
}

/// Full trace of one record, counted into `stats`.
pub fn trace_record(
    script: &Script,
    record: &Record,
    mode: EvalMode,
    stats: &mut WaterfallStats,
) -> Result<Trace, EvalError> {
    let (trace, mismatches) = trace_walk(script, record, mode, |i, r| stats.observe(i, r))?;
    stats.decide(&Decision {
        record_id: String::new(),
        outcome: trace.outcome,
        decided_by: trace.decided_by,
    });
    stats.type_mismatches += mismatches;
    Ok(trace)
}

fn trace_walk(
    script: &Script,
    record: &Record,
    mode: EvalMode,
    mut observe: impl FnMut(usize, TriState),
) -> Result<(Trace, u64), EvalError> {
    let mut steps = Vec::new();
    let (decision, mismatches) = walk(script, record, mode, |i, result| {
        observe(i, result);
        let stmt = &script.statements()[i];
        steps.push(StepTrace {
            step_index: i,
            label: stmt.label.clone(),
            meta_predicates: stmt.meta_predicates.clone(),
            result,
            fired: result.is_true(),
            variables: stmt
                .predicate
                .variables()
                .into_iter()
                .map(|v| {
                    let value = record.get(&v).clone();
                    (v, value)
                })
                .collect(),
            action_if_fired: stmt.action,
        });
    })?;
    let trace = Trace {
        record_id: decision.record_id,
        steps,
        outcome: decision.outcome,
        decided_by: decision.decided_by,
    };
    Ok((trace, mismatches))
}

/// Decision for one record, counted into `stats`.
pub fn decide_record(
    script: &Script,
    record: &Record,
    mode: EvalMode,
    stats: &mut WaterfallStats,
) -> Result<Decision, EvalError> {
    let (d, mismatches) = walk(script, record, mode, |i, r| stats.observe(i, r))?;
    stats.decide(&d);
    stats.type_mismatches += mismatches;
    Ok(d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// One decision per input record, in input order.
    pub outcomes: Vec<Decision>,
    pub stats: WaterfallStats,
}

impl BatchResult {
    /// Identifiers of the records decided by statement `step`.
    pub fn caught_at(&self, step: usize) -> Vec<&str> {
        self.outcomes
            .iter()
            .filter(|d| d.decided_by == DecidedBy::Step(step))
            .map(|d| d.record_id.as_str())
            .collect()
    }

    pub fn decided_by_default(&self) -> Vec<&str> {
        self.outcomes
            .iter()
            .filter(|d| d.decided_by == DecidedBy::Default)
            .map(|d| d.record_id.as_str())
            .collect()
    }
}

const CHUNK: usize = 2048;

/// Evaluates records in parallel on the current rayon pool. Output order
/// follows input order and the reported error, if any, is the one for the
/// earliest failing record, so results do not depend on the worker count.
pub fn run_batch(
    script: &Script,
    records: &[Record],
    mode: EvalMode,
) -> Result<BatchResult, EvalError> {
    let parts: Vec<Result<(Vec<Decision>, WaterfallStats), EvalError>> = records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut stats = WaterfallStats::new(script);
            let mut out = Vec::with_capacity(chunk.len());
            for r in chunk {
                out.push(decide_record(script, r, mode, &mut stats)?);
            }
            Ok((out, stats))
        })
        .collect();
    let mut result = BatchResult {
        outcomes: Vec::with_capacity(records.len()),
        stats: WaterfallStats::new(script),
    };
    for part in parts {
        let (outs, stats) = part?;
        result.outcomes.extend(outs);
        result.stats.merge(&stats);
    }
    Ok(result)
}

/// Like [`run_batch`], keeping the full trace of every record.
pub fn run_batch_traced(
    script: &Script,
    records: &[Record],
    mode: EvalMode,
) -> Result<(Vec<Trace>, WaterfallStats), EvalError> {
    let parts: Vec<Result<(Vec<Trace>, WaterfallStats), EvalError>> = records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut stats = WaterfallStats::new(script);
            let traces = chunk
                .iter()
                .map(|r| trace_record(script, r, mode, &mut stats))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((traces, stats))
        })
        .collect();
    let mut traces = Vec::with_capacity(records.len());
    let mut stats = WaterfallStats::new(script);
    for part in parts {
        let (t, s) = part?;
        traces.extend(t);
        stats.merge(&s);
    }
    Ok((traces, stats))
}

/// Trace of the first record with the given identifier.
pub fn trace_query(
    script: &Script,
    records: &[Record],
    record_id: &str,
    mode: EvalMode,
) -> Result<Trace, EvalError> {
    let record = records
        .iter()
        .find(|r| r.id() == record_id)
        .ok_or_else(|| EvalError::RecordNotFound { record_id: record_id.to_string() })?;
    run_record_with(script, record, mode).map(|(t, _)| t)
}

//! First-match evaluation of scripts over records.
//!
//! Missing annotations make atoms `Unknown` and composition follows Kleene
//! logic. A statement fires only when its predicate is definitely `True`.

mod eval;
mod output;
mod run;

use thiserror::Error;

use crate::record::ValueKind;

pub use eval::{eval_predicate, eval_predicate_with, EvalMode, TriState};
pub use output::{render_decision, render_stats_tsv, render_trace_json, render_trace_table};
pub use run::{
    decide_record, run_batch, run_batch_traced, run_record, run_record_with, trace_query,
    trace_record, BatchResult, DecidedBy, Decision, StepStats, StepTrace, Trace, WaterfallStats,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(
        "type mismatch in record {record_id}{}: {annotation} is {found}, compared with {expected}",
        .step.map(|s| format!(" at step {}", s + 1)).unwrap_or_default()
    )]
    TypeMismatch {
        record_id: String,
        step: Option<usize>,
        annotation: String,
        expected: ValueKind,
        found: ValueKind,
    },
    #[error("undefined set constant {name}")]
    UndefinedSet { name: String },
    #[error("record not found: {record_id}")]
    RecordNotFound { record_id: String },
}

impl EvalError {
    fn at_step(self, i: usize) -> Self {
        match self {
            EvalError::TypeMismatch { record_id, annotation, expected, found, .. } => {
                EvalError::TypeMismatch { record_id, step: Some(i), annotation, expected, found }
            }
            other => other,
        }
    }
}

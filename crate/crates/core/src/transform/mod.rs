//! Decision trees, their conversion to cascades, and exhaustive
//! equivalence checking.

mod oracle;
mod simplify;
mod tree;

use thiserror::Error;

use crate::dsl::ParseError;
use crate::engine::EvalError;

pub use oracle::{
    derive_domain, derive_tree_domain, equivalence_oracle, joint_domain, Artifact, DomainEntry,
    InputDomainSpec, OracleResult, DEFAULT_POINT_CAP,
};
pub use simplify::{is_one_decision_list, simplify_cascade, simplify_cascade_with_cap};
pub use tree::{tree_to_cascade, DecisionTree, TreeNode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("tree file{}: {message}", if .path.is_empty() { String::new() } else { format!(" at {}", .path) })]
    TreeFormat { path: String, message: String },
    #[error("tree file at {path}: {source}")]
    Predicate { path: String, source: ParseError },
    #[error("domain has {points} points, above the cap of {cap}")]
    DomainTooLarge { points: u64, cap: u64 },
    #[error("domain has no values for: {}", .missing.join(", "))]
    IncompleteDomain { missing: Vec<String> },
    #[error("simplified cascade differs from its input at {counterexample}")]
    SimplificationUnsound { counterexample: String },
    #[error("cannot verify simplification: {0}")]
    Unverifiable(Box<TransformError>),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

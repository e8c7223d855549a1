//! Toolchain for cascade-structured decision rules.
//!
//! Scripts are ordered pipelines of `if <predicate>: return <bool>`
//! statements, each optionally guarded by meta-predicates that assert the
//! epistemological classification of the evidence the predicate uses.
//!
//! - [`record`]: flat annotation records and the record file format
//! - [`dictionary`]: the four-dimension classification dictionary
//! - [`dsl`]: lexer, parser and canonical renderer for scripts
//! - [`validate`]: static meta-predicate validation and reports
//! - [`engine`]: first-match evaluation, traces and waterfall statistics
//! - [`transform`]: decision tree to cascade conversion and the equivalence oracle
//! - [`generate`]: seeded synthetic record generation

pub mod dictionary;
pub mod dsl;
pub mod engine;
pub mod generate;
pub mod record;
pub mod transform;
pub mod validate;

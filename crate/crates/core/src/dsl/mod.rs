//! Cascade script language: lexer, parser, AST and canonical renderer.
//!
//! ```text
//! script      := constant_def* statement* "return" bool
//! constant_def:= NAME "=" set_literal
//! statement   := [validation_block] "if" predicate ":" NEWLINE INDENT "return" bool
//! validation_block := '"""' ( "@" dimension "(" value ")" NEWLINE )* '"""'
//! predicate   := or ;  or := and ("or" and)* ;  and := not ("and" not)*
//! not         := "not" not | "(" predicate ")" | atom
//! atom        := operand (cmp operand)+ | operand ["not"] "in" set | operand
//! ```
//!
//! Chained comparisons are conjunctive: `0 < QD < 4` means
//! `0 < QD and QD < 4`.

mod ast;
mod lexer;
mod parser;
mod render;

use thiserror::Error;

pub use ast::{
    extract_variables, CompareOp, Constants, MetaPredicate, Operand, PredicateExpr, Script,
    SetExpr, Span, Statement,
};
pub use parser::{parse_predicate, parse_script};
pub use render::{render_bool, render_predicate, render_script, render_set, render_value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: expected {expected}, found {found}")]
    Syntax { line: usize, column: usize, expected: String, found: String },
    #[error("line {line}: script has no final `return True` or `return False`")]
    MissingFinalAction { line: usize },
    #[error("line {line}: unknown directive `@{name}`; expected purpose, knowledge_domain, scale or method")]
    UnknownDirective { line: usize, name: String },
    #[error("line {line}: set `{name}` is not defined")]
    UndefinedSetRef { line: usize, name: String },
    #[error("line {line}: set `{name}` is defined more than once")]
    DuplicateConstant { line: usize, name: String },
    #[error("line {line}: `{name}` names a set constant and cannot be used as an annotation")]
    ConstantCollision { line: usize, name: String },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::MissingFinalAction { line }
            | ParseError::UnknownDirective { line, .. }
            | ParseError::UndefinedSetRef { line, .. }
            | ParseError::DuplicateConstant { line, .. }
            | ParseError::ConstantCollision { line, .. } => *line,
        }
    }
}

//! SMT-LIB v2 frontend for the Horn fragment.

mod lexer;
mod normalize;
mod parse;
mod script;

use thiserror::Error;

use crate::chc::ChcError;

pub use lexer::{parse_sexps, Atom, Pos, Sexp};
pub use normalize::extract_chc_system;
pub use parse::{parse_sort, parse_sorted_vars, parse_value, Signature, TermParser};
pub use script::{parse_script, ChcScript};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{line}:{col}: unsupported command `{name}`")]
    UnsupportedCommand { name: String, line: usize, col: usize },
    #[error("{pos}: unsupported {what}")]
    Unsupported { pos: Pos, what: String },
    #[error("{pos}: {message}")]
    Sort { pos: Pos, message: String },
    #[error("assert {index} is not a Horn clause: {reason}")]
    NotHorn { index: usize, reason: String },
    #[error(transparent)]
    Chc(#[from] ChcError),
}

impl FrontendError {
    pub(crate) fn parse(pos: Pos, message: impl Into<String>) -> FrontendError {
        FrontendError::Parse(ParseError { line: pos.line, col: pos.col, message: message.into() })
    }
}

/// Parses and normalizes a Horn script in one step.
pub fn parse_chc(text: &str) -> Result<crate::chc::ChcSystem, FrontendError> {
    extract_chc_system(&parse_script(text)?)
}

//! Parsing and serialization: the PRISM-subset model language, reachability
//! property strings, pipeline scripts, the PCFP JSON format and the explicit
//! model text format.

mod explicit;
mod json;
mod lexer;
mod pexpr;
mod pipeline;
mod prism;
mod property;

pub use explicit::export_explicit;
pub use json::{parse_pcfp, serialize_pcfp};
pub use pipeline::{parse_pipeline, Directive};
pub use prism::parse_model;
pub use property::parse_property;

use thiserror::Error;

use crate::pcfp::InvalidPcfp;

use lexer::Pos;

/// Errors raised by any of the parsers in this module.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },

    #[error("{line}:{col}: type error: {msg}")]
    Type { line: u32, col: u32, msg: String },

    #[error("{line}:{col}: only a single module is supported")]
    MultipleModules { line: u32, col: u32 },

    #[error("duplicate variable '{0}'")]
    DuplicateVariable(String),

    #[error("duplicate constant '{0}'")]
    DuplicateConstant(String),

    #[error("{line}:{col}: unknown variable '{name}'")]
    UnknownVariable { line: u32, col: u32, name: String },

    #[error("unknown directive '{0}'")]
    UnknownDirective(String),

    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Invalid(#[from] InvalidPcfp),
}

impl ParseError {
    fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        ParseError::Syntax { line: pos.line, col: pos.col, msg: msg.into() }
    }

    fn type_error(pos: Pos, msg: impl Into<String>) -> Self {
        ParseError::Type { line: pos.line, col: pos.col, msg: msg.into() }
    }

    fn unknown_var(pos: Pos, name: impl Into<String>) -> Self {
        ParseError::UnknownVariable { line: pos.line, col: pos.col, name: name.into() }
    }
}

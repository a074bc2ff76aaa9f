//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Pattern file syntax error with 1-based line and column.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// The pattern or an argument violates a structural requirement
    /// (degenerate basis, zero separation, empty template, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// An input is outside the operation's domain (unknown builtin,
    /// stitch id not on the lattice, bad norm kind, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration guard tripped before the search finished.
    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

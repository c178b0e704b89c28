//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition or value-range violation (bad efficiency, negative
    /// probability, dimension mismatch, insufficient data, ...).
    #[error("{0}")]
    Domain(String),

    /// The scenario cannot herald: the herald outcome has probability below
    /// the 1e-15 floor.
    #[error("scenario cannot herald: outcome probability {0:.3e} is below 1e-15")]
    Unheraldable(f64),

    /// Malformed input data. `line` is 1-based when the source is line-oriented.
    #[error("parse error{}: {msg}", line_tag(*.line))]
    Parse { line: Option<usize>, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn line_tag(line: Option<usize>) -> String {
    match line {
        Some(n) => format!(" at line {n}"),
        None => String::new(),
    }
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn parse(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

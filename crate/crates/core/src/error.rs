use thiserror::Error;

use crate::scalar::Real;
use crate::solver::AttackParameters;

#[derive(Debug, Error)]
pub enum Error<T: Real = f64> {
    /// Block shapes do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An input a routine needs to be invertible or definite is not.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Argument outside the function domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// `line` is 1-based; 0 when the problem is not tied to one line, such
    /// as a missing key.
    #[error("parse error{}: {msg}", at_line(*.line))]
    Parse { line: usize, msg: String },

    /// Fixed-point iteration produced non-finite values; `last` is the last
    /// finite iterate.
    #[error("iteration diverged at step {iteration}: {reason}")]
    Diverged {
        iteration: usize,
        reason: String,
        last: Box<AttackParameters<T>>,
    },

    #[error("wishart draw kept producing a singular [x;z] corner after {0} attempts")]
    ResampleLimit(u32),

    #[error("grid of {0} points exceeds the brute-force limit")]
    GridTooLarge(u128),

    #[error("non-finite cost probing {0}")]
    NonFiniteProbe(String),
}

impl<T: Real> Error<T> {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}")
    }
}

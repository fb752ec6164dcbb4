use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single violated constraint found while validating a probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonSquare { rows: usize, row: usize, len: usize },
    Empty,
    NonFinite { row: usize, col: usize },
    Negative { row: usize, col: usize, value: f64 },
    AboveOne { row: usize, col: usize, value: f64 },
    RowSum { row: usize, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonSquare { rows, row, len } => {
                write!(f, "row {row} has {len} entries, expected {rows}")
            }
            Violation::Empty => write!(f, "matrix is empty"),
            Violation::NonFinite { row, col } => write!(f, "entry ({row}, {col}) is not finite"),
            Violation::Negative { row, col, value } => {
                write!(f, "entry ({row}, {col}) = {value} is negative")
            }
            Violation::AboveOne { row, col, value } => {
                write!(f, "entry ({row}, {col}) = {value} exceeds 1")
            }
            Violation::RowSum { row, sum } => write!(f, "row {row} sums to {sum}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input does not satisfy the documented preconditions.
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("not a stochastic matrix: {}", join(.0))]
    NotStochastic(Vec<Violation>),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A numerical routine failed on inputs that passed validation.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// `true` for errors caused by bad input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

//! Crate-wide error type.
//!
//! Numeric payloads are reported as `f64` regardless of the scalar type the
//! operation ran at, so the error type stays non-generic. Row, column and
//! state indices in messages are 1-based, matching all other I/O.

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows x {cols} columns")]
    NotSquare { rows: usize, cols: usize },

    #[error("negative entry {value:e} at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("entry {value} at row {row}, column {col} exceeds 1")]
    EntryAboveOne { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum:.17} instead of 1")]
    RowSumViolation { row: usize, sum: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("distribution entry {value:e} at position {index} is negative")]
    NegativeProbability { index: usize, value: f64 },

    #[error("distribution sums to {sum:.17} instead of 1")]
    DistributionSumViolation { sum: f64 },

    #[error("state index {state} is out of range for a chain with {n} states")]
    StateOutOfRange { state: usize, n: usize },

    #[error("partition is not a lumping of the chain: max deviation {max_deviation:.6e}")]
    NotLumpable { max_deviation: f64 },

    #[error("zeta must lie in [0, 1), got {zeta}")]
    ZetaOutOfRange { zeta: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenFailure,

    #[error("matrix is numerically non-diagonalizable (condition estimate {condition:e})")]
    NotDiagonalizable { condition: f64 },

    #[error("candidate partition lattice exceeded the cap of {cap}")]
    CandidateOverflow { cap: usize },

    #[error("{bell} partitions of {n} states exceed the guard of {guard}")]
    GuardExceeded { n: usize, bell: u128, guard: u128 },

    #[error("Bell number of {n} overflows 128-bit arithmetic")]
    BellOverflow { n: usize },

    #[error("trajectory of length {len} is too short, need at least {required}")]
    InsufficientData { len: usize, required: usize },

    #[error("parse error at line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

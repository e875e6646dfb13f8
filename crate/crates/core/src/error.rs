//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by data ingestion, estimation, and inference routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (CSV syntax, unknown tokens, duplicates).
    #[error("format error: {0}")]
    Format(String),

    /// A requested estimate cannot be computed from the data at hand,
    /// typically because a (group, time) cell has no observed outcomes.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Invalid argument supplied by the caller (bad horizon, bad quantile,
    /// negative sensitivity parameter, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Data too degenerate for the requested procedure (zero bootstrap
    /// standard error, pathological resampling rejection rate, ...).
    #[error("degenerate data: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

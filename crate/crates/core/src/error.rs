use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Infinite-horizon valuations need `d > 0`; the discounted sums diverge otherwise.
    #[error("discount rate must be positive for an infinite-horizon valuation, got d = {0}")]
    DiscountRate(f64),

    #[error("series does not contract: envelope ratio {0} is not in [0, 1)")]
    Divergence(f64),

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ticket price would be negative: margin {margin} exceeds expected ticket value {value}")]
    NegativePrice { margin: f64, value: f64 },

    #[error("at least {min} trials are required, got {got}")]
    TooFewTrials { min: u64, got: u64 },

    #[error("holder assignment covers {got} tickets, expected {expected}")]
    AssignmentSize { expected: u64, got: u64 },

    #[error("pool of {k} tickets exceeds the {n} outstanding tickets")]
    PoolTooLarge { k: u64, n: u64 },

    #[error("{}:{line}: {reason}", path.display())]
    RewardData {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl ToString) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.to_string(),
        }
    }
}

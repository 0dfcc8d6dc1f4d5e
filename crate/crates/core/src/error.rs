//! Error types shared by the simulator core.

use core::fmt;

/// A run configuration failed validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: &'static str,
}

impl ConfigError {
    pub(crate) fn new(field: &'static str, reason: &'static str) -> Self {
        ConfigError { field, reason }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.reason)
    }
}

impl core::error::Error for ConfigError {}

/// A selection policy was handed inputs it cannot sample from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyError {
    EmptyNodeSet,
    NonPositiveReputation,
    LengthMismatch,
    /// Probability vector has a negative entry or does not sum to one.
    BadDistribution,
}

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyError::EmptyNodeSet => write!(f, "node set is empty"),
            PolicyError::NonPositiveReputation => {
                write!(f, "reputations must be strictly positive")
            }
            PolicyError::LengthMismatch => {
                write!(f, "per-node inputs have mismatched lengths")
            }
            PolicyError::BadDistribution => {
                write!(f, "probabilities must be nonnegative and sum to one")
            }
        }
    }
}

impl core::error::Error for PolicyError {}

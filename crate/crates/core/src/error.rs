//! Crate-wide error type.

use alloc::string::String;

/// Errors produced by the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter violated a documented invariant at construction time.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: String,
    },

    /// A value fell outside the domain of an operation.
    #[error("domain error in {what}: {reason}")]
    Domain { what: &'static str, reason: String },

    /// The sequence has no usable frequency response at the target ω_s.
    #[error("filter-blind at omega_s: |Y| = {y_mag:e} below floor {floor:e}")]
    FilterBlind { y_mag: f64, floor: f64 },

    /// Exhaustive search requested above the configured segment limit.
    #[error("exhaustive oracle limited to N <= {limit} segments (got N = {n}); use incremental mode")]
    OracleLimit { n: usize, limit: usize },

    /// Inputs keyed by (environment, T) did not line up.
    #[error("missing (environment, T) keys: {missing}")]
    MissingKeys { missing: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl core::fmt::Display) -> Self {
        Error::InvalidParameter {
            name,
            reason: alloc::format!("{reason}"),
        }
    }

    pub(crate) fn domain(what: &'static str, reason: impl core::fmt::Display) -> Self {
        Error::Domain {
            what,
            reason: alloc::format!("{reason}"),
        }
    }
}

//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced while validating inputs or running the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration file could not be parsed or is missing required keys.
    #[error("config error: {0}")]
    Config(String),

    /// The lattice admits no risk-neutral measure for the supplied parameters.
    #[error(
        "no risk-neutral measure: need d < exp(r*dt) < u, got u = {u}, d = {d}, exp(r*dt) = {growth}"
    )]
    NoMeasure { u: f64, d: f64, growth: f64 },

    /// The sufficient step-count bound diverges (no dilution, no violation).
    #[error("no finite step count: the step bound diverges when there are no warrants")]
    NoFiniteStepCount,

    /// A requested node lies outside the lattice.
    #[error("node (tau = {tau}, t = {t}) is outside the lattice")]
    NodeOutOfRange { tau: i64, t: usize },

    /// A combinatorial enumeration would exceed the configured cap.
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),

    /// The wealth grid does not cover a required evaluation range.
    #[error("wealth grid coverage failure: {0}")]
    GridCoverage(String),

    /// Bisection could not bracket the indifference wealth.
    #[error(
        "no bracket for indifference wealth in [{lo}, {hi}]: phi spans [{phi_lo}, {phi_hi}] but target is {target}"
    )]
    NoBracket {
        lo: f64,
        hi: f64,
        phi_lo: f64,
        phi_hi: f64,
        target: f64,
    },

    /// A numerical routine failed to produce a usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Config(_) | Error::NodeOutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

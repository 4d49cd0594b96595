use thiserror::Error;

use crate::solver::ConvergenceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation
    /// (zero velocity, point outside Ω̄, non-unit ω, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Picard iteration did not reach the tolerance.
    #[error("picard iteration did not converge after {} iterations (last delta {:.3e}): {reason}",
        report.iterations, report.deltas.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { reason: String, report: Box<ConvergenceReport> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

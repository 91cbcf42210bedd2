use thiserror::Error;

/// Failures shared by every model in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The resonator has no self-consistent Gaussian eigenmode.
    #[error("unstable cavity: {0}")]
    Unstable(String),

    /// Inputs are individually valid but drive the model out of its
    /// physical range (e.g. round-trip loss reaching unity).
    #[error("model validity: {0}")]
    ModelValidity(String),

    #[error("solver did not converge: {0}")]
    Solver(String),

    /// The OPO is pumped at or above its oscillation threshold.
    #[error("pump at or above oscillation threshold (x = {x})")]
    AboveThreshold { x: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    /// A probe gain of one or less carries no threshold information.
    #[error("no parametric gain (G = {gain}); threshold is unbounded")]
    NoGain { gain: f64 },

    /// The objective is identically zero, so no maximizer is meaningful.
    #[error("degenerate optimum: {0}")]
    DegenerateOptimum(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

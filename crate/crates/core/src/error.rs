use thiserror::Error;

/// Errors produced by the solver and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The smallness condition on the potential does not hold, so the Picard
    /// map is not known to be a contraction.
    #[error(
        "refused: smallness condition ||V||_PM^(n-2) < 1/C_(n-2,k) violated \
         (tau = {tau:.6}); pass an explicit override to iterate anyway"
    )]
    Refused { tau: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (last diff {last:.3e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        diffs: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

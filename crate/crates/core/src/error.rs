use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A heralded outcome whose probability is zero for the given input.
    #[error("impossible outcome: {0}")]
    ImpossibleOutcome(String),

    #[error("covariance matrix is not physical: {0}")]
    NonPhysical(String),

    #[error("objective is flat over the scan (variation {variation:e} < {tol:e})")]
    DegenerateObjective { variation: f64, tol: f64 },

    #[error("no enhancement threshold: {0}")]
    NoThreshold(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

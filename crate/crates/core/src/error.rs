use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A covariance matrix violates the uncertainty principle.
    #[error("non-physical state: smallest symplectic eigenvalue {min} is below 1 - {tolerance:e}")]
    NonPhysical { min: f64, tolerance: f64 },

    /// A numerical routine produced something it should not have.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// The key rate stays positive up to the largest excess noise searched.
    #[error("no finite tolerance: key rate still positive at excess noise {searched_to}")]
    NoFiniteTolerance { searched_to: f64 },

    /// The large-modulation procedure hit its cap without settling.
    #[error("large-V evaluation did not converge: f({prev_v:e}) = {prev}, f({last_v:e}) = {last}")]
    NotConverged { prev_v: f64, prev: f64, last_v: f64, last: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

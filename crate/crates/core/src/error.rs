use thiserror::Error;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain an operation is defined on.
    #[error("parameter domain error: {0}")]
    Domain(String),

    /// A covariance matrix could not be factorized even after diagonal jitter.
    #[error("ill-conditioned covariance ({dim}x{dim}) after jitter {jitter:e}")]
    IllConditioned { dim: usize, jitter: f64 },

    /// The circulant embedding produced a negative eigenvalue.
    #[error("circulant embedding failed: eigenvalue {eigenvalue:e} at index {index}")]
    EmbeddingFailure { index: usize, eigenvalue: f64 },

    /// A conditioning step divided by a (numerically) zero variance.
    #[error("degenerate conditioning at t={time}: variance {variance:e}")]
    DegenerateConditioning { time: f64, variance: f64 },

    /// The weighted likelihood ratio of the change of measure exceeded one.
    #[error("likelihood ratio {ratio:e} exceeds 1 at level {level} (offset {offset}); starting level or BCE violated")]
    LikelihoodRatio { ratio: f64, level: u32, offset: u32 },

    /// A rejection loop hit its retry cap.
    #[error("rejection sampler exceeded {0} attempts")]
    RetryCap(u64),

    /// The Euler scheme produced a non-finite state.
    #[error("non-finite state at Euler step {step}")]
    Overflow { step: usize },

    /// The Euler iterate left the region where the field bounds are declared valid.
    #[error("state {value} left the declared field domain (radius {radius}) at step {step}")]
    OutsideDomain { step: usize, value: f64, radius: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cover grid would hold {size} points, cap is {cap}; reduce tau or increase eta")]
    GridTooLarge { size: f64, cap: usize },

    #[error("no Monte Carlo draw landed in the small ball; h is too small for the sample size")]
    ZeroSmallBall,

    #[error("every kernel weight is zero at the evaluation point")]
    EmptyWindow,

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("the Laplace-transform constant zeta does not exist for {0}")]
    ZetaAbsent(String),

    #[error("argument {0} lies outside the function domain")]
    DomainError(f64),

    #[error("contraction coefficients are not summable against the bandwidth weights")]
    NonSummable,

    #[error("contraction coefficients sum to {0}, which exceeds 1")]
    ContractionViolated(f64),

    #[error("no draw fell inside the ball at h = {0}; raise the smallest grid bandwidth")]
    InsufficientHits(f64),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

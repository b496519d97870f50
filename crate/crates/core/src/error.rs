use thiserror::Error;

/// Errors raised by the numerical and symbolic routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("representation error: {0}")]
    Representation(String),

    #[error("integral does not converge: {0}")]
    NonIntegrable(String),

    #[error("quadrature failed to reach tolerance (estimated error {error:.3e}, value {value:.6e})")]
    QuadratureFailure { value: f64, error: f64 },

    #[error("fit quality too low: R^2 = {r_squared:.5} < {threshold}")]
    FitQuality { r_squared: f64, threshold: f64 },

    #[error("no admissible exponent: {0}")]
    Infeasible(String),

    #[error("scan exhausted: {0}")]
    ScanExhausted(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("decay error: {0}")]
    Decay(String),

    #[error("positivity failure: {0}")]
    Positivity(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("missing tail law: {0}")]
    MissingTail(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

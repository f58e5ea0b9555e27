use thiserror::Error;

/// Errors raised by the time-stepping library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-invertible leading weight (q_0 = {0:e})")]
    SingularLeadingWeight(f64),

    #[error("Laplace transform unavailable for kernel `{0}`")]
    TransformUnavailable(String),

    #[error("(j = {j}, t = {t}) is outside the evaluation envelope (j <= {max_j}, t <= {max_t})")]
    OutOfEnvelope {
        j: usize,
        t: f64,
        max_j: usize,
        max_t: f64,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("quadrature failed to reach tolerance {tol:e} on [{a}, {b}] (estimate {estimate:e})")]
    QuadratureNotConverged {
        a: f64,
        b: f64,
        tol: f64,
        estimate: f64,
    },

    #[error("time {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("kernel `{0}` does not give a rational Z-transform; use a p_n scan instead")]
    NotRational(String),
}

pub type Result<T> = std::result::Result<T, Error>;

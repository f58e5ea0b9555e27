use convspline::Error as CoreError;
use convspline_tdbie::TdbieError;

/// Failures mapped onto exit codes: 2 for configuration, 3 for numerics, 1 otherwise.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::SingularLeadingWeight(_) | CoreError::NonFinite(_) | CoreError::QuadratureNotConverged { .. } => {
                CliError::Numerical(e.to_string())
            }
            CoreError::InvalidParameter(_)
            | CoreError::TransformUnavailable(_)
            | CoreError::OutOfEnvelope { .. }
            | CoreError::OutOfRange { .. }
            | CoreError::NotRational(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<TdbieError> for CliError {
    fn from(e: TdbieError) -> Self {
        match e {
            TdbieError::Core(inner) => inner.into(),
            TdbieError::Factorization(_) | TdbieError::NonFinite(_) => CliError::Numerical(e.to_string()),
            TdbieError::Io(_) => CliError::Other(e.to_string()),
            TdbieError::Mesh(_)
            | TdbieError::Parse { .. }
            | TdbieError::InvalidParameter(_)
            | TdbieError::TooManyMatrices { .. }
            | TdbieError::SourceOnSurface(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

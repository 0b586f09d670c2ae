use thiserror::Error;

/// Broad classification used by callers that map failures to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Solver,
    Gate,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("state outside the thermodynamic domain: {0}")]
    Domain(String),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { what: &'static str, iterations: usize, residual: f64 },
    #[error("singular system in {0}")]
    Singular(&'static str),
    #[error("numerical instability: {0}")]
    Unstable(String),
    #[error("generator is not dissipative: spectral abscissa {abscissa:e}")]
    NotDissipative { abscissa: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Invalid(_) => ErrorKind::Validation,
            Error::Domain(_) | Error::NonConvergence { .. } | Error::Singular(_) | Error::Unstable(_) => {
                ErrorKind::Solver
            }
            Error::NotDissipative { .. } => ErrorKind::Gate,
            Error::Io(_) => ErrorKind::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

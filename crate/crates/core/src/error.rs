use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate Lévy driver: brownian variance and jump intensity are both zero")]
    DegenerateDriver,

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("{what} = {value} lies outside its admissible domain {domain}")]
    Domain {
        what: String,
        value: f64,
        domain: String,
    },

    #[error("spectral densities of order {0} are not supported (expected 2, 3 or 4)")]
    UnsupportedOrder(usize),

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("norming factor of coordinate {coordinate} vanishes")]
    SingularNorming { coordinate: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("spectral density is not positive at lambda = {lambda}")]
    ModelPositivity { lambda: f64 },

    #[error("matrix is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("harmonic {harmonic} has zero amplitude")]
    DegenerateHarmonic { harmonic: usize },

    #[error("configuration rejected: {0}")]
    ConfigRejected(String),

    #[error("malformed configuration at `{path}`: {message}")]
    ConfigParse { path: String, message: String },

    #[error("malformed data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(what: impl Into<String>, value: f64, domain: impl Into<String>) -> Self {
        Error::Domain {
            what: what.into(),
            value,
            domain: domain.into(),
        }
    }

    /// Errors caused by the user's input rather than by a numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::ConfigRejected(_)
                | Error::ConfigParse { .. }
                | Error::Data(_)
                | Error::Shape { .. }
                | Error::DegenerateDriver
        )
    }
}

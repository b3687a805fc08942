use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of the Gamma function at z = {re} + {im}i")]
    Pole { re: f64, im: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("lambda = {lambda_re} + {lambda_im}i lies within {distance:e} of the symbol range")]
    NearSpectrum {
        lambda_re: f64,
        lambda_im: f64,
        distance: f64,
    },

    #[error("numerical stability: {0}")]
    Stability(String),

    #[error("symbol does not decay fast enough for the Hille kernel: {0}")]
    InsufficientDecay(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

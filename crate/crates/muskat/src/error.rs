use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("weight e^(lambda*N) would overflow: lambda = {lambda}, N = {cutoff}")]
    OverflowRisk { lambda: f64, cutoff: usize },

    #[error("cutoff mismatch: {left} vs {right}")]
    Shape { left: usize, right: usize },

    #[error("composition pole guard tripped: sup|v| = {sup}")]
    Domain { sup: f64 },

    #[error("solver failure: {message} (contraction factor {factor:.3e})")]
    Solver { message: String, factor: f64 },

    #[error("smallness condition violated: |h|_1 = {value:.6e} exceeds {threshold:.6e}")]
    Smallness { value: f64, threshold: f64 },

    #[error("diffeomorphism lost at t = {t}: margin {margin:.6e}")]
    PinchOff { t: f64, margin: f64 },

    #[error("non-finite state at t = {t}")]
    Blowup { t: f64 },

    #[error("inequality {id} violated: ratio {ratio:.6e}")]
    InequalityViolation { id: String, ratio: f64, counterexample: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

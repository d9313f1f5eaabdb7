use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("non-finite value in {term} (index {index})")]
    Numerical { term: &'static str, index: usize },

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("degenerate reflection: block {0} has zero gradient")]
    DegenerateReflection(usize),

    #[error("target does not support {0}")]
    Capability(&'static str),

    #[error("sampler aborted at t = {time}: {cause}")]
    NonFiniteState {
        time: f64,
        cause: String,
        snapshot: Box<crate::sampler::Checkpoint>,
    },

    #[error("trajectory does not carry {0}")]
    MissingRecord(&'static str),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

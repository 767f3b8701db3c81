use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("site index {index} out of range for {len} sites")]
    SiteOutOfRange { index: usize, len: usize },

    #[error("invalid coupling model: {0}")]
    Model(String),

    #[error("coincident sites {0} and {1}")]
    CoincidentSites(usize, usize),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("propagator did not converge at step {step} (t = {time}): residual {residual:e}")]
    NonConvergence { step: usize, time: f64, residual: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("singular point: {0}")]
    Singular(String),

    #[error("caustic: stationary point k = {k} has |d2| = {d2:e}")]
    Caustic { k: f64, d2: f64 },

    #[error("reciprocal sum not converged: relative tail {tail:e} at cutoff {cutoff}")]
    ReciprocalSum { tail: f64, cutoff: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("scenario `{scenario}` failed in stage `{stage}`: {source}")]
    Stage {
        scenario: String,
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

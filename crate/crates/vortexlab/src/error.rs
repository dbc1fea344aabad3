use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("epsilon {eps:e} not admissible: {reason}")]
    Epsilon { eps: f64, reason: String },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("initial data rejected: {0}")]
    Data(String),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced anywhere in the planning stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("floorplan generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },
    #[error("invalid floorplan: {0}")]
    InvalidFloorplan(String),
    #[error("point ({x:.3}, {z:.3}) is not inside a free cell")]
    NotFree { x: f64, z: f64 },
    #[error("no qualifying episode after {0} attempts")]
    EpisodeSampling(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("need at least {needed} ensemble members, got {got}")]
    TooFewMembers { needed: usize, got: usize },
    #[error("path is empty")]
    EmptyPath,
    #[error("candidate set is empty")]
    NoCandidates,
    #[error("agent cell ({row}, {col}) is not traversable")]
    NotTraversable { row: i32, col: i32 },
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed data: {0}")]
    Format(String),
    #[error("config: {0}")]
    Config(String),
    #[error("unknown baseline {0:?}")]
    UnknownBaseline(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

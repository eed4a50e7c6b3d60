use thiserror::Error;

use crate::model::PathId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed arguments to a pure operation (width mismatch, empty fold, bad dimensions).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration that the protection model cannot express.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unit ({source_id}, {data_index}) is not covered by any parity round")]
    NotCovered {
        source_id: PathId,
        data_index: usize,
    },

    /// More than one path went silent in one session.
    #[error(
        "unsupported failure: paths {0:?} are all missing, only single failures are recoverable"
    )]
    UnsupportedFailure(Vec<PathId>),

    #[error("corrupted trace: {0}")]
    CorruptedTrace(String),
}

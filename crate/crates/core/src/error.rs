use crate::minic::ParseError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("forced point {id} out of range (program has {count} points)")]
    ForcedOutOfRange { id: usize, count: usize },
    #[error("solution has {got} entries, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("solution entry {index} = {value} outside [{min}, {max}]")]
    EntryOutOfRange { index: usize, value: u32, min: u32, max: u32 },
    #[error("solution needs {needed} key bits, key has {available}")]
    Infeasible { needed: usize, available: usize },
    #[error("forced points need {needed} key bits, key has {available}")]
    ForcedTooExpensive { needed: usize, available: usize },
    #[error("program already uses the reserved name KEY")]
    ReservedKeyName,
    #[error("input vector: {0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("golden run on test {test} ended with status {status:?}")]
    Golden { test: usize, status: crate::sim::RunStatus },
    #[error("test set is empty")]
    EmptyTests,
    #[error("wrong-key set is empty")]
    EmptyWrongKeys,
    #[error("cannot draw {requested} wrong keys from a {bits}-bit key space")]
    TooManyWrongKeys { requested: usize, bits: usize },
    #[error("invalid key: {0}")]
    Key(String),
    #[error("cost model has no entry for '{0}'")]
    CostMissing(String),
    #[error("invalid cost model: {0}")]
    CostModel(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

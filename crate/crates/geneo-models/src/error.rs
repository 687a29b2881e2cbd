use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad IDX magic number: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated IDX payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("class {class} has only {count} examples (need at least {needed})")]
    ClassTooSmall { class: usize, count: usize, needed: usize },
    #[error("label {0} out of range 0..=9")]
    LabelOutOfRange(u8),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("bad training configuration: {0}")]
    BadConfig(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}; learning rate likely too high")]
    NonFiniteLoss { epoch: usize, batch: usize },
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest: {0}")]
    Manifest(String),
}

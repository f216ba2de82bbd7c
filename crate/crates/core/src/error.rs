use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SvmError>;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: dataset file is empty")]
    EmptyFile { path: PathBuf },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dataset is already normalized")]
    AlreadyNormalized,

    #[error("class {class} has {available} samples, {requested} requested")]
    NotEnoughSamples {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("gram matrix of {n}x{n} exceeds the cap of {cap} entries; use row-wise kernel evaluation")]
    GramTooLarge { n: usize, cap: usize },

    #[error("binary problem needs samples of both signs")]
    SingleClass,

    #[error("working set is empty: no feasible direction")]
    EmptyWorkingSet,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("class pair ({0}, {1}): {2}")]
    Job(usize, usize, Box<SvmError>),

    #[error("model file parse error at byte {offset}: {msg}")]
    ModelParse { offset: usize, msg: String },

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u64),
}

impl SvmError {
    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        SvmError::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }
}

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("instruction length {0} outside 1..=15")]
    InstructionLength(usize),

    #[error("malformed ELF at offset {offset:#x}: {reason}")]
    Elf { offset: u64, reason: &'static str },

    #[error("{what}: bad magic {found:?}")]
    BadMagic { what: &'static str, found: [u8; 4] },

    #[error("{what}: unsupported version {found}")]
    BadVersion { what: &'static str, found: u8 },

    #[error("dataset: truncated record {index}")]
    TruncatedRecord { index: u64 },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("model file: {0}")]
    Model(String),

    #[error("shape mismatch in {op}: expected {expected:?}, got {actual:?}")]
    Shape {
        op: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("batch normalization needs at least 2 samples in training mode, got {0}")]
    BatchTooSmall(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("both labels are required, only {0:?} present")]
    SingleLabel(crate::dataset::Label),

    #[error("cannot split {n} samples into {k} folds")]
    Folds { n: usize, k: usize },

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("block must be {expected} bytes, got {actual}")]
    BlockSize { expected: usize, actual: usize },

    #[error("input of {len} bytes is shorter than one {window}-byte window")]
    TooShort { len: usize, window: usize },

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("png encoding: {0}")]
    Png(String),
}

impl Error {
    pub fn at_path(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Path { path, source }
    }
}

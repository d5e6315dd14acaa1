use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cut {cut} is outside 1..={len}")]
    OutOfRangeCut { cut: usize, len: usize },

    #[error("cut {0} appears more than once")]
    DuplicateCut(usize),

    #[error("cannot pool an empty token list")]
    EmptyTokenList,

    #[error("empty sequence")]
    EmptySequence,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("cannot compare an atomic slice with a composite slice")]
    MixedFormPair,

    #[error("delta must be positive and finite, got {0}")]
    NonPositiveDelta(f64),

    #[error("sigma must be positive and finite, got {0}")]
    NonPositiveSigma(f64),

    #[error("sequence lengths must be at least 1, got ({0}, {1})")]
    ZeroLength(usize, usize),

    #[error("alignment table of {cells} cells exceeds the cap of {cap}")]
    SequenceTooLong { cells: usize, cap: usize },

    #[error("({n}, {m}) is too large to enumerate alignments (max {max})")]
    TooLargeForEnumeration { n: usize, m: usize, max: usize },

    #[error("alignment path does not fit sequences of lengths ({n}, {m})")]
    PathShapeMismatch { n: usize, m: usize },

    #[error("cosine {0} is outside [-1, 1]")]
    CosineOutOfRange(f64),

    #[error("matrix sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("expected a {expected} matrix")]
    KindMismatch { expected: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector has (near) zero norm")]
    ZeroVector,

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid trainer configuration: {0}")]
    InvalidTrainerConfig(String),

    #[error("loss diverged at step {step}")]
    DivergenceDetected { step: usize, trace: Vec<f64> },

    #[error("duplicate doc id {0:?}")]
    DuplicateDocId(String),

    #[error("index is empty")]
    EmptyIndex,

    #[error("k must be at least 1")]
    InvalidK,

    #[error("gold doc id {0:?} is not in the index")]
    MissingGoldId(String),

    #[error("no evaluation cases")]
    EmptyCaseList,

    #[error("malformed example: {0}")]
    MalformedExample(String),

    #[error("unknown doc id {0:?}")]
    UnknownDocId(String),

    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic bytes")]
    BadMagic,

    #[error("unsupported index version {0}")]
    VersionMismatch(u32),

    #[error("checksum mismatch (file truncated or corrupted)")]
    ChecksumMismatch,

    #[error("corrupt index: {0}")]
    Corrupt(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

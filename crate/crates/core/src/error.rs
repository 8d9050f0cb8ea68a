//! Error types for every stage of the link.

use std::path::PathBuf;
use thiserror::Error;

/// A violated [`FrameConfig`](crate::config::FrameConfig) invariant.
///
/// Each variant corresponds to one rule and names the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("field `{field}` must be at least 1")]
    Zero { field: &'static str },
    #[error("field `mq`: QAM order {0} is not a power of two >= 4")]
    QamOrderNotPowerOfTwo(usize),
    #[error("field `mq`: Mq not square QAM (order {0} has no symmetric I/Q split)")]
    NonSquareQam(usize),
    #[error("field `l`: code length {0} is not a power of two")]
    CodeLengthNotPowerOfTwo(usize),
    #[error("field `n_c`: N_C exceeds L ({codes} codes of length {length})")]
    CodesExceedLength { codes: usize, length: usize },
    #[error("field `n_c`: code count {0} is not a power of two")]
    CodesNotPowerOfTwo(usize),
    #[error("field `n_t`: transmit antenna count {0} is not a power of two")]
    TxAntennasNotPowerOfTwo(usize),
    #[error("field `p`: {taps} taps exceed the N·M = {grid} sample frame")]
    TapsExceedGrid { taps: usize, grid: usize },
    #[error("field `{field}` must be strictly positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("field `speed_kmh` must be non-negative and finite, got {0}")]
    NegativeSpeed(f64),
}

impl ConfigError {
    /// Name of the JSON field the error refers to.
    pub fn field(&self) -> &'static str {
        match self {
            ConfigError::Zero { field } | ConfigError::NonPositive { field, .. } => field,
            ConfigError::QamOrderNotPowerOfTwo(_) | ConfigError::NonSquareQam(_) => "mq",
            ConfigError::CodeLengthNotPowerOfTwo(_) => "l",
            ConfigError::CodesExceedLength { .. } | ConfigError::CodesNotPowerOfTwo(_) => "n_c",
            ConfigError::TxAntennasNotPowerOfTwo(_) => "n_t",
            ConfigError::TapsExceedGrid { .. } => "p",
            ConfigError::NegativeSpeed(_) => "speed_kmh",
        }
    }
}

/// Errors raised while mapping bits to cells and back.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("unsupported QAM order {0}")]
    UnsupportedOrder(usize),
    #[error("payload has {actual} bits, frame needs {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("payload contains a value other than 0 or 1 at position {0}")]
    NotABit(usize),
    #[error("cell {index}: {reason}")]
    OutOfAlphabet { index: usize, reason: String },
}

/// Operand shapes that do not fit together.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
pub struct DimensionError {
    pub context: &'static str,
    pub expected: String,
    pub actual: String,
}

impl DimensionError {
    pub(crate) fn new(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        DimensionError {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

/// Errors from the receiver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error("joint search of {size} hypotheses per cell exceeds the cap of {cap}")]
    SearchTooLarge { size: usize, cap: usize },
}

/// Errors from the closed-form metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("BER {0} outside [0, 1]")]
    BerOutOfRange(f64),
    #[error("symbol duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("efficiencies must be positive, got benchmark {benchmark} and OTFS-CIM {cim}")]
    NonPositiveEfficiency { benchmark: f64, cim: f64 },
    #[error("benchmark efficiency {benchmark} exceeds OTFS-CIM efficiency {cim}")]
    NegativeSaving { benchmark: f64, cim: f64 },
}

/// Crate-wide error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

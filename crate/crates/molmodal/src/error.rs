//! Crate-wide error type.
//!
//! One enum covers every module so pipeline code can bubble errors with `?`
//! without conversion boilerplate. [`Error::class`] buckets each variant into
//! the coarse failure classes the command-line interface maps to exit codes.

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller passed an invalid argument or configuration value.
    Usage,
    /// Input data (file or in-memory dataset) is malformed or inconsistent.
    Data,
    /// A numeric computation failed (divergence, singular system, threshold).
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ---- configuration / argument validation -------------------------------
    #[error("missing rate {rate} for modality '{modality}' is outside [0, 1]")]
    InvalidMissingRate { modality: String, rate: f64 },

    #[error("molecular modality '{modality}' cannot have a positive missing rate")]
    MolecularMissingRate { modality: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("neighbour count k={k} must satisfy 1 <= k <= n-1 (n={n})")]
    InvalidNeighbourCount { k: usize, n: usize },

    #[error("temperature must be finite and positive, got {0}")]
    InvalidTemperature(f64),

    #[error("tree depth must be at least 1")]
    InvalidTreeDepth,

    #[error("latent dimension must be at least 2, got {0}")]
    InvalidLatentDim(usize),

    #[error("ensemble weight gamma={0} is outside [0, 1]")]
    GammaOutOfRange(f64),

    // ---- dataset / file contents -------------------------------------------
    #[error("record {record}: unknown modality '{modality}'")]
    UnknownModality { record: usize, modality: String },

    #[error("record {record}: modality '{modality}' has {actual} entries, expected {expected}")]
    FeatureDimMismatch {
        record: usize,
        modality: String,
        expected: usize,
        actual: usize,
    },

    #[error("record {record}: molecular modality '{modality}' is absent")]
    AbsentMolecular { record: usize, modality: String },

    #[error("record {record}: modality '{modality}' is binary but contains {value}")]
    NonBinaryValue {
        record: usize,
        modality: String,
        value: f64,
    },

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("file format: {0}")]
    FileFormat(String),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("unknown graph node '{0}'")]
    UnknownNode(String),

    #[error("checkpoint is inconsistent: {0}")]
    CheckpointInconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),

    // ---- shape / consistency between in-memory values ----------------------
    #[error("{context}: expected length {expected}, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("row {row} has zero norm; cosine similarity is undefined")]
    ZeroNormRow { row: usize },

    #[error("batch must contain at least {minimum} rows, got {actual}")]
    BatchTooSmall { minimum: usize, actual: usize },

    #[error("no modalities of the required kind: {0}")]
    NoSuchModalities(&'static str),

    #[error("node {node}: decoded vector has {actual} entries, target has {expected}")]
    DecodedTargetMismatch {
        node: usize,
        expected: usize,
        actual: usize,
    },

    #[error("node {node} was visited with a reconstruction target but no decoded vector")]
    MissingDecoded { node: usize },

    // ---- numeric failures ---------------------------------------------------
    #[error("linear system is singular: missing nodes {nodes:?} are disconnected from every observed node")]
    SingularSystem { nodes: Vec<usize> },

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("gradient check failed: max relative error {worst:.3e} exceeds threshold {threshold:.3e}")]
    GradientCheckFailed { worst: f64, threshold: f64 },

    #[error("probe labels contain a single class; AUC is undefined")]
    SingleClassLabels,
}

impl Error {
    /// Bucket this error into the coarse class the CLI maps to exit codes.
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidMissingRate { .. }
            | MolecularMissingRate { .. }
            | InvalidConfig(_)
            | InvalidNeighbourCount { .. }
            | InvalidTemperature(_)
            | InvalidTreeDepth
            | InvalidLatentDim(_)
            | GammaOutOfRange(_) => ErrorClass::Usage,

            UnknownModality { .. }
            | FeatureDimMismatch { .. }
            | AbsentMolecular { .. }
            | NonBinaryValue { .. }
            | MalformedLine { .. }
            | FileFormat(_)
            | UnsupportedVersion(_)
            | UnknownNode(_)
            | CheckpointInconsistent(_)
            | Io(_)
            | Json(_)
            | LengthMismatch { .. }
            | ZeroNormRow { .. }
            | BatchTooSmall { .. }
            | NoSuchModalities(_)
            | DecodedTargetMismatch { .. }
            | MissingDecoded { .. } => ErrorClass::Data,

            SingularSystem { .. }
            | NonFiniteLoss { .. }
            | GradientCheckFailed { .. }
            | SingleClassLabels => ErrorClass::Numeric,
        }
    }
}

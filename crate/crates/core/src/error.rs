use thiserror::Error;

/// Errors produced by metric evaluation, decoding and corpus operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty reference: the metric is undefined without reference content")]
    EmptyReference,

    #[error("corpus length mismatch: {hyps} hypotheses vs {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("unknown utility preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid utility parameter: {0}")]
    InvalidParameter(String),

    #[error("subsample size {requested} out of range for pool of {pool_size} samples")]
    SubsampleOutOfRange { requested: usize, pool_size: usize },

    #[error("grid size {size} exceeds pool size {pool_size}")]
    GridExceedsPool { size: usize, pool_size: usize },

    #[error("empty sample pool")]
    EmptyPool,

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("holdout size {size} out of range for corpus of {corpus_size} pairs")]
    SplitSizeOutOfRange { size: usize, corpus_size: usize },

    #[error("pair {index} has an empty source sentence")]
    EmptySource { index: usize },

    #[error("misaligned inputs: {0}")]
    MisalignedInputs(String),

    #[error("missing reference for pool `{0}`")]
    MissingReference(String),
}

pub type Result<T> = std::result::Result<T, Error>;

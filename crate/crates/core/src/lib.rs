//! Sample-based Minimum Bayes Risk decoding over pools of candidate
//! translations, with sentence-level MT metrics as utility functions
//! and a diagnostic suite for length bias, token-frequency bias,
//! hallucinations and copy noise.
//!
//! The decision rule selects, from a pool of model samples, the
//! candidate with the highest mean pairwise utility against the pool —
//! a consensus translation rather than a mode. Utilities are
//! sentence-level BLEU (four smoothing modes), chrF (β ∈ {0.5, 1, 2, 3})
//! and exact-match METEOR, each optionally symmetrized by a harmonic
//! mean over both evaluation directions.

#![forbid(unsafe_code)]

pub mod analysis;
pub mod error;
pub mod mbr;
pub mod metrics;
pub mod noise;
pub mod seed;
pub mod text;

pub use error::{Error, Result};
pub use mbr::{decode, decode_curve, utility_matrix, DecodeResult, SamplePool, UtilityMatrix};
pub use metrics::{Score, Utility, UtilityConfig};

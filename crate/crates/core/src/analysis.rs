//! Diagnostic procedures: length statistics, token-frequency bias
//! curves, hallucination and copy detection, and per-pool pathology
//! utility reports.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mbr::{DecodeResult, SamplePool, UtilityMatrix};
use crate::metrics::sentence_chrf;
use crate::text::tokenize_13a;

/// chrF2 threshold below which a translation counts as a hallucination.
pub const HALLUCINATION_THRESHOLD: f64 = 0.01;
/// Token-overlap threshold above which a translation counts as a copy.
pub const COPY_THRESHOLD: f64 = 0.9;

// ---------------------------------------------------------------- lengths

/// Mean token counts per named system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthTable {
    pub rows: Vec<LengthRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthRow {
    pub system: String,
    pub mean_tokens: f64,
    pub sentences: usize,
}

/// Mean 13a-token count per corpus, one row per named corpus.
pub fn length_stats(corpora: &[(String, Vec<String>)]) -> LengthTable {
    let rows = corpora
        .iter()
        .map(|(name, sentences)| {
            let total: usize = sentences.iter().map(|s| tokenize_13a(s).len()).sum();
            let mean_tokens = if sentences.is_empty() {
                0.0
            } else {
                total as f64 / sentences.len() as f64
            };
            LengthRow {
                system: name.clone(),
                mean_tokens,
                sentences: sentences.len(),
            }
        })
        .collect();
    LengthTable { rows }
}

// ---------------------------------------------------------------- frequency buckets

/// How training counts map onto buckets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum BucketScheme {
    /// Base-10 logarithmic buckets [1,10), [10,100), ...
    DecadeLog,
    /// Explicit ascending boundaries; bucket i spans
    /// [boundaries[i], boundaries[i+1]) and the last is unbounded.
    Custom { boundaries: Vec<u64> },
}

impl BucketScheme {
    pub fn custom(boundaries: Vec<u64>) -> Result<BucketScheme> {
        if boundaries.first() != Some(&1) {
            return Err(Error::InvalidParameter(
                "bucket boundaries must start at 1 to cover all counts".to_owned(),
            ));
        }
        if !boundaries.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "bucket boundaries must be strictly ascending".to_owned(),
            ));
        }
        Ok(BucketScheme::Custom { boundaries })
    }

    pub fn label(&self) -> String {
        match self {
            BucketScheme::DecadeLog => "decade-log".to_owned(),
            BucketScheme::Custom { boundaries } => format!(
                "custom:{}",
                boundaries
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }
}

/// Bucket membership of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BucketId {
    Range(usize),
    /// Token absent from the training counts.
    Oov,
}

/// Token counts from a training corpus plus the bucket layout.
#[derive(Debug, Clone)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    scheme: BucketScheme,
    /// Lower bound of each bucket, ascending; the last is unbounded.
    bucket_lows: Vec<u64>,
}

impl FrequencyTable {
    pub fn counts(&self) -> &HashMap<String, u64> {
        &self.counts
    }

    pub fn scheme(&self) -> &BucketScheme {
        &self.scheme
    }

    pub fn num_buckets(&self) -> usize {
        self.bucket_lows.len()
    }

    /// [lo, hi) descriptor per bucket; `None` marks the unbounded top.
    pub fn bucket_ranges(&self) -> Vec<(u64, Option<u64>)> {
        (0..self.bucket_lows.len())
            .map(|i| {
                let hi = self.bucket_lows.get(i + 1).copied();
                (self.bucket_lows[i], hi)
            })
            .collect()
    }

    pub fn bucket_of_count(&self, count: u64) -> usize {
        debug_assert!(count >= 1);
        self.bucket_lows.partition_point(|&lo| lo <= count) - 1
    }

    pub fn bucket_of(&self, token: &str) -> BucketId {
        match self.counts.get(token) {
            Some(&c) => BucketId::Range(self.bucket_of_count(c)),
            None => BucketId::Oov,
        }
    }

    /// The training corpus's own probability mass per bucket.
    pub fn training_distribution(&self) -> BucketDistribution {
        let mut per_bucket = vec![0u64; self.num_buckets()];
        let mut total = 0u64;
        for &c in self.counts.values() {
            per_bucket[self.bucket_of_count(c)] += c;
            total += c;
        }
        BucketDistribution::from_counts(per_bucket, 0, total)
    }
}

fn decade_index(count: u64) -> usize {
    debug_assert!(count >= 1);
    let mut index = 0;
    let mut c = count;
    while c >= 10 {
        c /= 10;
        index += 1;
    }
    index
}

/// Counts every token of the training target corpus and lays out the
/// buckets of the chosen scheme.
pub fn build_frequency_table<'a, I>(tokens: I, scheme: BucketScheme) -> FrequencyTable
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    for token in tokens {
        *counts.entry(token.to_owned()).or_insert(0) += 1;
    }
    let bucket_lows = match &scheme {
        BucketScheme::DecadeLog => {
            let max = counts.values().copied().max().unwrap_or(1);
            (0..=decade_index(max)).map(|i| 10u64.pow(i as u32)).collect()
        }
        BucketScheme::Custom { boundaries } => boundaries.clone(),
    };
    FrequencyTable {
        counts,
        scheme,
        bucket_lows,
    }
}

/// Probability mass per bucket, out-of-vocabulary mass included; the
/// entries sum to 1 for any nonempty corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketDistribution {
    pub per_bucket: Vec<f64>,
    pub oov: f64,
    pub bucket_tokens: Vec<u64>,
    pub oov_tokens: u64,
    pub total_tokens: u64,
}

impl BucketDistribution {
    fn from_counts(bucket_tokens: Vec<u64>, oov_tokens: u64, total: u64) -> BucketDistribution {
        let to_prob = |c: u64| if total == 0 { 0.0 } else { c as f64 / total as f64 };
        BucketDistribution {
            per_bucket: bucket_tokens.iter().map(|&c| to_prob(c)).collect(),
            oov: to_prob(oov_tokens),
            bucket_tokens,
            oov_tokens,
            total_tokens: total,
        }
    }
}

/// Fraction of corpus tokens falling into each training-frequency
/// bucket.
pub fn token_probability_by_bucket<'a, I>(table: &FrequencyTable, tokens: I) -> BucketDistribution
where
    I: IntoIterator<Item = &'a str>,
{
    let mut bucket_tokens = vec![0u64; table.num_buckets()];
    let mut oov_tokens = 0u64;
    let mut total = 0u64;
    for token in tokens {
        total += 1;
        match table.bucket_of(token) {
            BucketId::Range(i) => bucket_tokens[i] += 1,
            BucketId::Oov => oov_tokens += 1,
        }
    }
    BucketDistribution::from_counts(bucket_tokens, oov_tokens, total)
}

// ---------------------------------------------------------------- pathologies

/// True when `hyp` scores chrF2 below the threshold against the
/// reference. Errors on an empty reference.
pub fn is_hallucination(hyp: &str, reference: &str) -> Result<bool> {
    is_hallucination_at(hyp, reference, HALLUCINATION_THRESHOLD)
}

pub fn is_hallucination_at(hyp: &str, reference: &str, threshold: f64) -> Result<bool> {
    Ok(sentence_chrf(hyp, reference, 2.0)?.value() < threshold)
}

/// How token overlap is measured for copy detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapMode {
    /// |H ∩ A| / |H ∪ A| over 13a token sets.
    Jaccard,
    /// |H ∩ A| / |A|.
    AnchorCoverage,
}

/// Token-set overlap between hypothesis and anchor. Errors when the
/// anchor has no tokens.
pub fn token_overlap(hyp: &str, anchor: &str, mode: OverlapMode) -> Result<f64> {
    let hyp_seq = tokenize_13a(hyp);
    let anchor_seq = tokenize_13a(anchor);
    if anchor_seq.is_empty() {
        return Err(Error::EmptyReference);
    }
    let hyp_set: HashSet<&str> = hyp_seq.tokens().iter().map(String::as_str).collect();
    let anchor_set: HashSet<&str> = anchor_seq.tokens().iter().map(String::as_str).collect();
    let intersection = hyp_set.intersection(&anchor_set).count() as f64;
    let value = match mode {
        OverlapMode::Jaccard => {
            let union = hyp_set.union(&anchor_set).count() as f64;
            intersection / union
        }
        OverlapMode::AnchorCoverage => intersection / anchor_set.len() as f64,
    };
    Ok(value)
}

/// True when the token overlap strictly exceeds the threshold.
pub fn is_copy(hyp: &str, anchor: &str, threshold: f64) -> Result<bool> {
    is_copy_with(hyp, anchor, threshold, OverlapMode::Jaccard)
}

pub fn is_copy_with(hyp: &str, anchor: &str, threshold: f64, mode: OverlapMode) -> Result<bool> {
    Ok(token_overlap(hyp, anchor, mode)? > threshold)
}

/// Which pathology a report looks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathologyKind {
    Copy,
    Hallucination,
}

/// Side the copy detector compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CopyAnchor {
    Reference,
    Source,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathologyConfig {
    pub kind: PathologyKind,
    pub copy_anchor: CopyAnchor,
    pub copy_threshold: f64,
    pub halluc_threshold: f64,
    pub overlap: OverlapMode,
}

impl PathologyConfig {
    pub fn new(kind: PathologyKind) -> PathologyConfig {
        PathologyConfig {
            kind,
            copy_anchor: CopyAnchor::Reference,
            copy_threshold: COPY_THRESHOLD,
            halluc_threshold: HALLUCINATION_THRESHOLD,
            overlap: OverlapMode::Jaccard,
        }
    }
}

/// Aggregate view of how a pathology fares under MBR: the utility it
/// receives inside pools and how often it survives into selections.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathologyReport {
    pub kind: PathologyKind,
    /// Absent when nothing was flagged.
    pub mean_utility_flagged: Option<f64>,
    pub mean_utility_all: f64,
    pub flagged_rate_in_pools: f64,
    pub flagged_rate_in_selections: f64,
    pub flagged_samples: u64,
    pub total_samples: u64,
    pub flagged_selections: u64,
    pub total_selections: u64,
}

/// Flags every pool sample, aggregates expected utilities of flagged
/// vs all samples, and measures how often flagged texts get selected.
pub fn pathology_report(
    pools: &[SamplePool],
    results: &[DecodeResult],
    matrices: &[UtilityMatrix],
    config: &PathologyConfig,
) -> Result<PathologyReport> {
    if pools.len() != results.len() || pools.len() != matrices.len() {
        return Err(Error::MisalignedInputs(format!(
            "{} pools, {} results, {} matrices",
            pools.len(),
            results.len(),
            matrices.len()
        )));
    }

    let mut flagged_samples = 0u64;
    let mut total_samples = 0u64;
    let mut flagged_selections = 0u64;
    let mut sum_flagged = 0.0;
    let mut sum_all = 0.0;

    for (index, pool) in pools.iter().enumerate() {
        let matrix = &matrices[index];
        if matrix.n() != pool.samples.len() {
            return Err(Error::MisalignedInputs(format!(
                "pool `{}` has {} samples but its matrix is {}x{}",
                pool.id,
                pool.samples.len(),
                matrix.n(),
                matrix.n()
            )));
        }
        let flag = |text: &str| -> Result<bool> {
            match config.kind {
                PathologyKind::Hallucination => {
                    let reference = pool
                        .reference
                        .as_deref()
                        .ok_or_else(|| Error::MissingReference(pool.id.clone()))?;
                    is_hallucination_at(text, reference, config.halluc_threshold)
                }
                PathologyKind::Copy => {
                    let anchor = match config.copy_anchor {
                        CopyAnchor::Source => pool.source.as_str(),
                        CopyAnchor::Reference => pool
                            .reference
                            .as_deref()
                            .ok_or_else(|| Error::MissingReference(pool.id.clone()))?,
                    };
                    is_copy_with(text, anchor, config.copy_threshold, config.overlap)
                }
            }
        };

        let expected = matrix.expected_utilities();
        for (sample, eu) in pool.samples.iter().zip(&expected) {
            total_samples += 1;
            sum_all += eu;
            if flag(sample)? {
                flagged_samples += 1;
                sum_flagged += eu;
            }
        }
        if flag(&results[index].selected_text)? {
            flagged_selections += 1;
        }
    }

    Ok(PathologyReport {
        kind: config.kind,
        mean_utility_flagged: (flagged_samples > 0).then(|| sum_flagged / flagged_samples as f64),
        mean_utility_all: if total_samples > 0 {
            sum_all / total_samples as f64
        } else {
            0.0
        },
        flagged_rate_in_pools: if total_samples > 0 {
            flagged_samples as f64 / total_samples as f64
        } else {
            0.0
        },
        flagged_rate_in_selections: if pools.is_empty() {
            0.0
        } else {
            flagged_selections as f64 / pools.len() as f64
        },
        flagged_samples,
        total_samples,
        flagged_selections,
        total_selections: pools.len() as u64,
    })
}

//! Sentence- and corpus-level similarity metrics used both as MBR
//! utility functions and as evaluation metrics.

mod bleu;
mod chrf;
mod meteor;

pub use bleu::{corpus_bleu, sentence_bleu, BleuSmoothing};
pub use chrf::{chrf_precision_recall, corpus_chrf, sentence_chrf};
pub use meteor::{sentence_meteor, MeteorParams};

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::text::{tokenize_13a, word_ngrams, NGramProfile, WORD_NGRAM_ORDER};

use bleu::{bleu_from_stats, BleuStats};
use chrf::{chrf_from_profiles, chrf_profile};
use meteor::meteor_from_tokens;

/// A similarity score in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Score(f64);

impl Score {
    pub fn new(value: f64) -> Score {
        debug_assert!(
            (0.0..=1.0).contains(&value),
            "score {value} outside [0, 1]"
        );
        Score(value)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The metric behind a utility function, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "metric", rename_all = "kebab-case")]
pub enum MetricFamily {
    Bleu { smoothing: BleuSmoothing },
    Chrf { beta: f64 },
    Meteor { params: MeteorParams },
    /// Word unigram F1; not part of the standard preset table but
    /// useful as a minimal, hand-checkable utility.
    UnigramF1,
}

/// One utility function: a metric family plus the symmetrization flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityConfig {
    pub family: MetricFamily,
    /// Combine both evaluation directions with a harmonic mean.
    pub symmetric: bool,
}

/// Preset names accepted by [`UtilityConfig::preset`], without the
/// optional `-symmetric` suffix.
pub const PRESET_NAMES: [&str; 11] = [
    "bleu",
    "bleu-floor",
    "bleu-add-k",
    "bleu-exp",
    "chrf-0.5",
    "chrf-1",
    "chrf-2",
    "chrf-3",
    "meteor",
    "meteor-0.5",
    "unigram-f1",
];

impl UtilityConfig {
    /// Resolves a preset name, e.g. `chrf-2` or `bleu-floor-symmetric`.
    pub fn preset(name: &str) -> Result<UtilityConfig> {
        let (base, symmetric) = match name.strip_suffix("-symmetric") {
            Some(stripped) => (stripped, true),
            None => (name, false),
        };
        let family = match base {
            "bleu" => MetricFamily::Bleu {
                smoothing: BleuSmoothing::None,
            },
            "bleu-floor" => MetricFamily::Bleu {
                smoothing: BleuSmoothing::Floor(BleuSmoothing::DEFAULT_FLOOR),
            },
            "bleu-add-k" => MetricFamily::Bleu {
                smoothing: BleuSmoothing::AddK(BleuSmoothing::DEFAULT_ADD_K),
            },
            "bleu-exp" => MetricFamily::Bleu {
                smoothing: BleuSmoothing::Exp,
            },
            "chrf-0.5" => MetricFamily::Chrf { beta: 0.5 },
            "chrf-1" => MetricFamily::Chrf { beta: 1.0 },
            "chrf-2" => MetricFamily::Chrf { beta: 2.0 },
            "chrf-3" => MetricFamily::Chrf { beta: 3.0 },
            "meteor" => MetricFamily::Meteor {
                params: MeteorParams::new(0.85, 0.2, 0.6, 0.75)?,
            },
            "meteor-0.5" => MetricFamily::Meteor {
                params: MeteorParams::new(0.50, 0.2, 0.6, 0.75)?,
            },
            "unigram-f1" => MetricFamily::UnigramF1,
            _ => return Err(Error::UnknownPreset(name.to_owned())),
        };
        Ok(UtilityConfig { family, symmetric })
    }

    /// Attaches a function-word lexicon to a METEOR-family config;
    /// other families are unchanged.
    pub fn with_function_words(mut self, words: Arc<HashSet<String>>) -> UtilityConfig {
        if let MetricFamily::Meteor { params } = &mut self.family {
            params.function_words = Some(words);
        }
        self
    }

    /// Canonical name, reconstructing the preset vocabulary.
    pub fn name(&self) -> String {
        let base = match &self.family {
            MetricFamily::Bleu { smoothing } => match smoothing {
                BleuSmoothing::None => "bleu".to_owned(),
                BleuSmoothing::Floor(_) => "bleu-floor".to_owned(),
                BleuSmoothing::AddK(_) => "bleu-add-k".to_owned(),
                BleuSmoothing::Exp => "bleu-exp".to_owned(),
            },
            MetricFamily::Chrf { beta } => format!("chrf-{beta}"),
            MetricFamily::Meteor { params } => {
                if params.alpha == 0.5 {
                    "meteor-0.5".to_owned()
                } else if params.alpha == 0.85 {
                    "meteor".to_owned()
                } else {
                    format!("meteor-a{}", params.alpha)
                }
            }
            MetricFamily::UnigramF1 => "unigram-f1".to_owned(),
        };
        if self.symmetric {
            format!("{base}-symmetric")
        } else {
            base
        }
    }
}

impl fmt::Display for UtilityConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// A sample preprocessed for repeated pairwise evaluation.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    form: PreparedForm,
}

#[derive(Debug, Clone)]
enum PreparedForm {
    Chrf(NGramProfile),
    Bleu { profile: NGramProfile, len: usize },
    Meteor(Vec<String>),
    UnigramF1 { profile: NGramProfile, len: usize },
}

impl PreparedSample {
    /// True when this sample cannot serve as a reference (no content
    /// under the metric's notion of units).
    pub fn is_degenerate(&self) -> bool {
        match &self.form {
            PreparedForm::Chrf(p) => p.total(1) == 0,
            PreparedForm::Bleu { len, .. } => *len == 0,
            PreparedForm::Meteor(tokens) => tokens.is_empty(),
            PreparedForm::UnigramF1 { len, .. } => *len == 0,
        }
    }
}

/// A utility function ready to evaluate candidate pairs.
///
/// Evaluation is pure and stateless; prepared samples are immutable and
/// safe to share across threads.
#[derive(Debug, Clone)]
pub struct Utility {
    config: UtilityConfig,
}

impl Utility {
    pub fn new(config: UtilityConfig) -> Utility {
        Utility { config }
    }

    pub fn from_preset(name: &str) -> Result<Utility> {
        Ok(Utility::new(UtilityConfig::preset(name)?))
    }

    pub fn config(&self) -> &UtilityConfig {
        &self.config
    }

    pub fn name(&self) -> String {
        self.config.name()
    }

    pub fn prepare(&self, text: &str) -> PreparedSample {
        let form = match &self.config.family {
            MetricFamily::Chrf { .. } => PreparedForm::Chrf(chrf_profile(text)),
            MetricFamily::Bleu { .. } => {
                let seq = tokenize_13a(text);
                PreparedForm::Bleu {
                    profile: word_ngrams(&seq, WORD_NGRAM_ORDER),
                    len: seq.len(),
                }
            }
            MetricFamily::Meteor { .. } => PreparedForm::Meteor(tokenize_13a(text).tokens().to_vec()),
            MetricFamily::UnigramF1 => {
                let seq = tokenize_13a(text);
                PreparedForm::UnigramF1 {
                    profile: word_ngrams(&seq, 1),
                    len: seq.len(),
                }
            }
        };
        PreparedSample { form }
    }

    fn directional(&self, hyp: &PreparedSample, reference: &PreparedSample) -> f64 {
        if reference.is_degenerate() {
            return 0.0;
        }
        match (&self.config.family, &hyp.form, &reference.form) {
            (MetricFamily::Chrf { beta }, PreparedForm::Chrf(h), PreparedForm::Chrf(r)) => {
                chrf_from_profiles(h, r, *beta)
            }
            (
                MetricFamily::Bleu { smoothing },
                PreparedForm::Bleu { profile: h, len: hl },
                PreparedForm::Bleu { profile: r, len: rl },
            ) => {
                let stats = BleuStats::from_profiles(h, *hl, r, *rl);
                bleu_from_stats(&stats, *smoothing, true)
            }
            (MetricFamily::Meteor { params }, PreparedForm::Meteor(h), PreparedForm::Meteor(r)) => {
                meteor_from_tokens(h, r, params)
            }
            (
                MetricFamily::UnigramF1,
                PreparedForm::UnigramF1 { profile: h, len: hl },
                PreparedForm::UnigramF1 { profile: r, len: rl },
            ) => unigram_f1(h, *hl, r, *rl),
            _ => unreachable!("prepared sample from a different utility family"),
        }
    }

    /// Pairwise utility on prepared samples. Total: degenerate
    /// candidates score 0 in both directions.
    pub fn score_prepared(&self, hyp: &PreparedSample, reference: &PreparedSample) -> f64 {
        if hyp.is_degenerate() || reference.is_degenerate() {
            return 0.0;
        }
        if self.config.symmetric {
            harmonic_mean(
                self.directional(hyp, reference),
                self.directional(reference, hyp),
            )
        } else {
            self.directional(hyp, reference)
        }
    }

    /// Sentence-level evaluation; errors when the reference is empty
    /// under the metric's notion of content.
    pub fn sentence(&self, hyp: &str, reference: &str) -> Result<Score> {
        let r = self.prepare(reference);
        if r.is_degenerate() {
            return Err(Error::EmptyReference);
        }
        let h = self.prepare(hyp);
        if self.config.symmetric {
            return Ok(Score::new(harmonic_mean(
                self.directional(&h, &r),
                self.directional(&r, &h),
            )));
        }
        Ok(Score::new(self.directional(&h, &r)))
    }
}

fn unigram_f1(hyp: &NGramProfile, hyp_len: usize, reference: &NGramProfile, ref_len: usize) -> f64 {
    if hyp_len == 0 || ref_len == 0 {
        return 0.0;
    }
    let matches = hyp.clipped_matches(reference, 1) as f64;
    if matches == 0.0 {
        return 0.0;
    }
    let p = matches / hyp_len as f64;
    let r = matches / ref_len as f64;
    2.0 * p * r / (p + r)
}

/// Harmonic mean; zero if either side is zero.
pub fn harmonic_mean(x: f64, y: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    2.0 * x * y / (x + y)
}

/// Symmetrized utility: the harmonic mean of `u` evaluated in both
/// argument orders. Propagates `u`'s errors.
pub fn symmetrize<F>(u: F, a: &str, b: &str) -> Result<Score>
where
    F: Fn(&str, &str) -> Result<Score>,
{
    let forward = u(a, b)?.value();
    let backward = u(b, a)?.value();
    Ok(Score::new(harmonic_mean(forward, backward)))
}

/// Corpus-level evaluation metrics with pinned parameterizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusMetric {
    Bleu,
    Chrf1,
    Chrf2,
    Chrf3,
}

impl CorpusMetric {
    pub const ALL: [CorpusMetric; 4] = [
        CorpusMetric::Bleu,
        CorpusMetric::Chrf1,
        CorpusMetric::Chrf2,
        CorpusMetric::Chrf3,
    ];

    pub fn parse(name: &str) -> Result<CorpusMetric> {
        match name {
            "bleu" => Ok(CorpusMetric::Bleu),
            "chrf1" | "chrf-1" => Ok(CorpusMetric::Chrf1),
            "chrf2" | "chrf-2" => Ok(CorpusMetric::Chrf2),
            "chrf3" | "chrf-3" => Ok(CorpusMetric::Chrf3),
            _ => Err(Error::UnknownPreset(name.to_owned())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CorpusMetric::Bleu => "bleu",
            CorpusMetric::Chrf1 => "chrf1",
            CorpusMetric::Chrf2 => "chrf2",
            CorpusMetric::Chrf3 => "chrf3",
        }
    }

    /// Parameter signature string describing the exact configuration.
    pub fn signature(&self) -> &'static str {
        match self {
            CorpusMetric::Bleu => "BLEU+case.mixed+numrefs.1+smooth.exp+tok.13a",
            CorpusMetric::Chrf1 => "chrF1+numchars.6+space.false",
            CorpusMetric::Chrf2 => "chrF2+numchars.6+space.false",
            CorpusMetric::Chrf3 => "chrF3+numchars.6+space.false",
        }
    }
}

/// Corpus score for aligned hypothesis/reference lists.
pub fn corpus_score(hyps: &[String], refs: &[String], metric: CorpusMetric) -> Result<Score> {
    match metric {
        CorpusMetric::Bleu => corpus_bleu(hyps, refs),
        CorpusMetric::Chrf1 => corpus_chrf(hyps, refs, 1.0),
        CorpusMetric::Chrf2 => corpus_chrf(hyps, refs, 2.0),
        CorpusMetric::Chrf3 => corpus_chrf(hyps, refs, 3.0),
    }
}

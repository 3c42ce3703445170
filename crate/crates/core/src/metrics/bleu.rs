//! Sentence- and corpus-level BLEU with the four smoothing modes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::Score;
use crate::text::{tokenize_13a, word_ngrams, NGramProfile, TokenSeq, WORD_NGRAM_ORDER};

/// Smoothing applied to zero-match n-gram precisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", content = "value", rename_all = "kebab-case")]
pub enum BleuSmoothing {
    /// No smoothing: a zero-match order zeroes the whole score.
    None,
    /// Zero-match orders get precision `floor / total`.
    Floor(f64),
    /// `k` is added to numerator and denominator for orders above 1.
    AddK(f64),
    /// Zero-match orders get precision `1 / (2^i * total)` with `i`
    /// doubling at each zero-match order.
    Exp,
}

impl BleuSmoothing {
    /// Default floor value used by the `bleu-floor` preset.
    pub const DEFAULT_FLOOR: f64 = 0.1;
    /// Default k used by the `bleu-add-k` preset.
    pub const DEFAULT_ADD_K: f64 = 1.0;

    pub fn label(&self) -> &'static str {
        match self {
            BleuSmoothing::None => "none",
            BleuSmoothing::Floor(_) => "floor",
            BleuSmoothing::AddK(_) => "add-k",
            BleuSmoothing::Exp => "exp",
        }
    }
}

/// Clipped match and total counts per order, plus lengths.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct BleuStats {
    pub correct: [u64; WORD_NGRAM_ORDER],
    pub total: [u64; WORD_NGRAM_ORDER],
    pub sys_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub(crate) fn from_profiles(
        hyp: &NGramProfile,
        hyp_len: usize,
        reference: &NGramProfile,
        ref_len: usize,
    ) -> BleuStats {
        let mut stats = BleuStats {
            sys_len: hyp_len as u64,
            ref_len: ref_len as u64,
            ..BleuStats::default()
        };
        for k in 1..=WORD_NGRAM_ORDER {
            stats.correct[k - 1] = hyp.clipped_matches(reference, k) as u64;
            stats.total[k - 1] = hyp.total(k) as u64;
        }
        stats
    }

    pub(crate) fn add(&mut self, other: &BleuStats) {
        for k in 0..WORD_NGRAM_ORDER {
            self.correct[k] += other.correct[k];
            self.total[k] += other.total[k];
        }
        self.sys_len += other.sys_len;
        self.ref_len += other.ref_len;
    }
}

/// Geometric mean of (smoothed) modified precisions times brevity
/// penalty. With `use_effective_order` the mean runs over the orders
/// that actually have n-grams, which is the sentence-level convention.
pub(crate) fn bleu_from_stats(
    stats: &BleuStats,
    smoothing: BleuSmoothing,
    use_effective_order: bool,
) -> f64 {
    let mut precisions = [0.0f64; WORD_NGRAM_ORDER];
    let mut exp_denominator = 1.0f64;
    let mut effective_order = WORD_NGRAM_ORDER;
    for (n, precision) in precisions.iter_mut().enumerate() {
        let mut correct = stats.correct[n] as f64;
        let mut total = stats.total[n] as f64;
        if let BleuSmoothing::AddK(k) = smoothing {
            if n > 0 {
                correct += k;
                total += k;
            }
        }
        if total == 0.0 {
            break;
        }
        if use_effective_order {
            effective_order = n + 1;
        }
        *precision = if correct == 0.0 {
            match smoothing {
                BleuSmoothing::Exp => {
                    exp_denominator *= 2.0;
                    1.0 / (exp_denominator * total)
                }
                BleuSmoothing::Floor(floor) => floor / total,
                _ => 0.0,
            }
        } else {
            correct / total
        };
    }

    if stats.sys_len == 0 {
        return 0.0;
    }
    let brevity_penalty = if stats.sys_len >= stats.ref_len {
        1.0
    } else {
        (1.0 - stats.ref_len as f64 / stats.sys_len as f64).exp()
    };

    const LOG_ZERO: f64 = -9_999_999_999.0;
    let log_sum: f64 = precisions[..effective_order]
        .iter()
        .map(|&p| if p > 0.0 { p.ln() } else { LOG_ZERO })
        .sum();
    brevity_penalty * (log_sum / effective_order as f64).exp()
}

/// Sentence-level BLEU up to order 4 with effective-order handling for
/// short hypotheses. Errors on an empty reference; an empty hypothesis
/// scores 0.
pub fn sentence_bleu(hyp: &TokenSeq, reference: &TokenSeq, smoothing: BleuSmoothing) -> Result<Score> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let hyp_profile = word_ngrams(hyp, WORD_NGRAM_ORDER);
    let ref_profile = word_ngrams(reference, WORD_NGRAM_ORDER);
    let stats = BleuStats::from_profiles(&hyp_profile, hyp.len(), &ref_profile, reference.len());
    Ok(Score::new(bleu_from_stats(&stats, smoothing, true)))
}

/// Corpus BLEU over 13a-tokenized segments: exponential smoothing,
/// single reference, counts pooled over the corpus, fixed order 4.
pub fn corpus_bleu(hyps: &[String], refs: &[String]) -> Result<Score> {
    if hyps.len() != refs.len() {
        return Err(Error::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut aggregate = BleuStats::default();
    for (hyp, reference) in hyps.iter().zip(refs) {
        let hyp_seq = tokenize_13a(hyp);
        let ref_seq = tokenize_13a(reference);
        let hyp_profile = word_ngrams(&hyp_seq, WORD_NGRAM_ORDER);
        let ref_profile = word_ngrams(&ref_seq, WORD_NGRAM_ORDER);
        aggregate.add(&BleuStats::from_profiles(
            &hyp_profile,
            hyp_seq.len(),
            &ref_profile,
            ref_seq.len(),
        ));
    }
    Ok(Score::new(bleu_from_stats(&aggregate, BleuSmoothing::Exp, false)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bleu(hyp: &str, reference: &str, smoothing: BleuSmoothing) -> f64 {
        sentence_bleu(&tokenize_13a(hyp), &tokenize_13a(reference), smoothing)
            .unwrap()
            .value()
    }

    #[test]
    fn identity_scores_one() {
        assert_eq!(bleu("a b c d", "a b c d", BleuSmoothing::None), 1.0);
    }

    #[test]
    fn zero_fourgram_matches_zero_the_unsmoothed_score() {
        // precisions 3/4, 2/3, 1/2, 0/1
        assert_eq!(bleu("a b c e", "a b c d", BleuSmoothing::None), 0.0);
    }

    #[test]
    fn smoothed_variants_match_oracle() {
        // frozen from the independent direct-formula oracle
        assert_abs_diff_eq!(
            bleu("a b c e", "a b c d", BleuSmoothing::Floor(0.1)),
            0.3976353643835253,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            bleu("a b c e", "a b c d", BleuSmoothing::AddK(1.0)),
            0.6580370064762462,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            bleu("a b c e", "a b c d", BleuSmoothing::Exp),
            0.5946035575013605,
            epsilon = 1e-12
        );
    }

    #[test]
    fn empty_reference_is_an_error() {
        assert!(sentence_bleu(
            &tokenize_13a("a"),
            &tokenize_13a(""),
            BleuSmoothing::None
        )
        .is_err());
    }

    #[test]
    fn empty_hypothesis_scores_zero() {
        assert_eq!(bleu("", "a b", BleuSmoothing::Exp), 0.0);
    }

    #[test]
    fn corpus_bleu_matches_oracle() {
        let hyps: Vec<String> = ["the cat sat on the mat", "dogs bark loudly at night", "hello beautiful world today"]
            .map(String::from)
            .to_vec();
        let refs: Vec<String> = ["the cat sat on the mat quietly", "dogs bark loudly", "hello there beautiful world today"]
            .map(String::from)
            .to_vec();
        assert_abs_diff_eq!(
            corpus_bleu(&hyps, &refs).unwrap().value(),
            0.6822570396306888,
            epsilon = 1e-12
        );
    }

    #[test]
    fn corpus_identity_scores_one() {
        let a: Vec<String> = ["a b c d e", "f g h i"].map(String::from).to_vec();
        assert_eq!(corpus_bleu(&a, &a).unwrap().value(), 1.0);
    }
}

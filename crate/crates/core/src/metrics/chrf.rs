//! Character n-gram F-score over orders 1..6, whitespace excluded.

use crate::error::{Error, Result};
use crate::metrics::Score;
use crate::text::{char_ngrams, NGramProfile, CHAR_NGRAM_ORDER};

/// Averaged character n-gram precision and recall over orders 1..6.
///
/// Orders where both sides have zero n-grams are skipped from the
/// average; orders where only one side is empty contribute zero to both
/// sums. Returns (0, 0) when every order is skipped.
pub fn chrf_precision_recall(hyp: &NGramProfile, reference: &NGramProfile) -> (f64, f64) {
    let max_order = hyp.max_order().min(reference.max_order());
    let mut sum_p = 0.0;
    let mut sum_r = 0.0;
    let mut effective = 0u32;
    for k in 1..=max_order {
        let total_hyp = hyp.total(k);
        let total_ref = reference.total(k);
        if total_hyp == 0 && total_ref == 0 {
            continue;
        }
        effective += 1;
        let matches = hyp.clipped_matches(reference, k) as f64;
        if total_hyp > 0 {
            sum_p += matches / total_hyp as f64;
        }
        if total_ref > 0 {
            sum_r += matches / total_ref as f64;
        }
    }
    if effective == 0 {
        return (0.0, 0.0);
    }
    (sum_p / effective as f64, sum_r / effective as f64)
}

/// F_beta combination of averaged precision and recall; 0 when the
/// denominator vanishes.
fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    let beta_sq = beta * beta;
    let denom = beta_sq * p + r;
    if denom == 0.0 {
        return 0.0;
    }
    (1.0 + beta_sq) * p * r / denom
}

pub(crate) fn chrf_from_profiles(hyp: &NGramProfile, reference: &NGramProfile, beta: f64) -> f64 {
    let (p, r) = chrf_precision_recall(hyp, reference);
    f_beta(p, r, beta)
}

pub(crate) fn chrf_profile(text: &str) -> NGramProfile {
    char_ngrams(text, CHAR_NGRAM_ORDER, false)
}

/// Sentence-level chrF with parameter `beta` weighting recall.
///
/// Errors when `beta` is not positive or the reference is empty after
/// whitespace removal; an empty hypothesis scores 0.
pub fn sentence_chrf(hyp: &str, reference: &str, beta: f64) -> Result<Score> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "chrf beta must be positive, got {beta}"
        )));
    }
    let ref_profile = chrf_profile(reference);
    if ref_profile.total(1) == 0 {
        return Err(Error::EmptyReference);
    }
    let hyp_profile = chrf_profile(hyp);
    Ok(Score::new(chrf_from_profiles(&hyp_profile, &ref_profile, beta)))
}

/// Corpus-level chrF: n-gram statistics are pooled over all segments
/// before averaging orders and combining.
pub fn corpus_chrf(hyps: &[String], refs: &[String], beta: f64) -> Result<Score> {
    if hyps.len() != refs.len() {
        return Err(Error::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "chrf beta must be positive, got {beta}"
        )));
    }

    let mut matches = [0u64; CHAR_NGRAM_ORDER];
    let mut totals_hyp = [0u64; CHAR_NGRAM_ORDER];
    let mut totals_ref = [0u64; CHAR_NGRAM_ORDER];
    for (hyp, reference) in hyps.iter().zip(refs) {
        let hp = chrf_profile(hyp);
        let rp = chrf_profile(reference);
        for k in 1..=CHAR_NGRAM_ORDER {
            matches[k - 1] += hp.clipped_matches(&rp, k) as u64;
            totals_hyp[k - 1] += hp.total(k) as u64;
            totals_ref[k - 1] += rp.total(k) as u64;
        }
    }

    let mut sum_p = 0.0;
    let mut sum_r = 0.0;
    let mut effective = 0u32;
    for k in 0..CHAR_NGRAM_ORDER {
        if totals_hyp[k] == 0 && totals_ref[k] == 0 {
            continue;
        }
        effective += 1;
        if totals_hyp[k] > 0 {
            sum_p += matches[k] as f64 / totals_hyp[k] as f64;
        }
        if totals_ref[k] > 0 {
            sum_r += matches[k] as f64 / totals_ref[k] as f64;
        }
    }
    if effective == 0 {
        return Ok(Score::new(0.0));
    }
    let p = sum_p / effective as f64;
    let r = sum_r / effective as f64;
    Ok(Score::new(f_beta(p, r, beta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_scores_one() {
        assert_eq!(sentence_chrf("cat", "cat", 2.0).unwrap().value(), 1.0);
    }

    #[test]
    fn cat_vs_cats_matches_oracle() {
        // frozen from the independent hand-enumeration oracle
        let cases = [
            (0.5, 0.673828125),
            (1.0, 0.5847457627118645),
            (2.0, 0.5164670658682634),
            (3.0, 0.49711815561959644),
        ];
        for (beta, expected) in cases {
            let got = sentence_chrf("cat", "cats", beta).unwrap().value();
            assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn disjoint_scores_zero() {
        assert_eq!(sentence_chrf("xyz", "abc", 2.0).unwrap().value(), 0.0);
    }

    #[test]
    fn empty_reference_is_an_error() {
        assert!(sentence_chrf("cat", "", 2.0).is_err());
        assert!(sentence_chrf("cat", "   ", 2.0).is_err());
    }

    #[test]
    fn empty_hypothesis_scores_zero() {
        assert_eq!(sentence_chrf("", "cat", 2.0).unwrap().value(), 0.0);
    }

    #[test]
    fn respacing_does_not_change_the_score() {
        let a = sentence_chrf("the cat", "a cat", 1.0).unwrap().value();
        let b = sentence_chrf("thecat", "ac at", 1.0).unwrap().value();
        assert_eq!(a, b);
    }

    #[test]
    fn corpus_chrf_matches_oracle() {
        let hyps: Vec<String> = ["the cat sat on the mat", "dogs bark loudly at night", "hello beautiful world today"]
            .map(String::from)
            .to_vec();
        let refs: Vec<String> = ["the cat sat on the mat quietly", "dogs bark loudly", "hello there beautiful world today"]
            .map(String::from)
            .to_vec();
        let cases = [
            (1.0, 0.7850295915008593_f64),
            (2.0, 0.7648528884724576),
            (3.0, 0.7583558422529482),
        ];
        for (beta, expected) in cases {
            let got = corpus_chrf(&hyps, &refs, beta).unwrap().value();
            assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn corpus_identity_and_mismatch() {
        let a: Vec<String> = ["abc", "def"].map(String::from).to_vec();
        assert_eq!(corpus_chrf(&a, &a, 2.0).unwrap().value(), 1.0);
        let b: Vec<String> = ["xyz"].map(String::from).to_vec();
        assert!(matches!(
            corpus_chrf(&a, &b, 2.0),
            Err(Error::LengthMismatch { .. })
        ));
    }
}

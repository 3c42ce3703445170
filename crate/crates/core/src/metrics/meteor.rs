//! Exact-match METEOR: unigram alignment with a fragmentation penalty.
//!
//! The alignment maximizes the number of matched words and, among
//! maximum-cardinality alignments, minimizes the number of chunks
//! (maximal runs contiguous in both sentences). Stem, synonym and
//! paraphrase matchers are out of scope.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::Score;
use crate::text::TokenSeq;

/// Parameters of the METEOR scoring formula.
#[derive(Debug, Clone, Serialize)]
pub struct MeteorParams {
    /// Precision/recall balance in the harmonic mean.
    pub alpha: f64,
    /// Fragmentation penalty exponent.
    pub beta: f64,
    /// Fragmentation penalty weight.
    pub gamma: f64,
    /// Content-word weight; function words weigh `1 - delta`.
    pub delta: f64,
    /// Optional function-word lexicon; absent means every token counts
    /// as a content word.
    #[serde(skip)]
    pub function_words: Option<Arc<HashSet<String>>>,
}

impl MeteorParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<MeteorParams> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma), ("delta", delta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "meteor {name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(MeteorParams {
            alpha,
            beta,
            gamma,
            delta,
            function_words: None,
        })
    }

    pub fn with_function_words(mut self, words: Arc<HashSet<String>>) -> MeteorParams {
        self.function_words = Some(words);
        self
    }

    fn token_weight(&self, token: &str) -> f64 {
        match &self.function_words {
            Some(set) if set.contains(token) => 1.0 - self.delta,
            _ => self.delta,
        }
    }
}

impl PartialEq for MeteorParams {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha
            && self.beta == other.beta
            && self.gamma == other.gamma
            && self.delta == other.delta
            && self.function_words == other.function_words
    }
}

/// Node budget for the exact chunk-minimizing search; beyond it the
/// greedy alignment already computed is kept.
const ALIGN_NODE_LIMIT: u64 = 1_000_000;

struct Aligner<'a> {
    hyp: &'a [String],
    candidates: Vec<Vec<usize>>,
    used: Vec<bool>,
    // per word type: remaining hyp occurrences at or after the cursor,
    // and matches still needed to reach the maximum
    remaining: HashMap<&'a str, u32>,
    needed: HashMap<&'a str, u32>,
    best_chunks: u32,
    nodes: u64,
}

impl<'a> Aligner<'a> {
    /// Returns (matches, chunks) of an alignment with maximum matches
    /// and minimum chunks among those.
    fn run(hyp: &'a [String], reference: &'a [String]) -> (u32, u32) {
        let mut hyp_counts: HashMap<&str, u32> = HashMap::new();
        for t in hyp {
            *hyp_counts.entry(t.as_str()).or_insert(0) += 1;
        }
        let mut ref_counts: HashMap<&str, u32> = HashMap::new();
        for t in reference {
            *ref_counts.entry(t.as_str()).or_insert(0) += 1;
        }
        let max_matches: u32 = hyp_counts
            .iter()
            .map(|(t, &c)| c.min(ref_counts.get(t).copied().unwrap_or(0)))
            .sum();
        if max_matches == 0 {
            return (0, 0);
        }

        let mut ref_positions: HashMap<&str, Vec<usize>> = HashMap::new();
        for (j, t) in reference.iter().enumerate() {
            ref_positions.entry(t.as_str()).or_default().push(j);
        }
        let candidates: Vec<Vec<usize>> = hyp
            .iter()
            .map(|t| ref_positions.get(t.as_str()).cloned().unwrap_or_default())
            .collect();

        let needed: HashMap<&str, u32> = hyp_counts
            .iter()
            .map(|(&t, &c)| (t, c.min(ref_counts.get(t).copied().unwrap_or(0))))
            .collect();

        let greedy = greedy_chunks(&candidates);
        let mut aligner = Aligner {
            hyp,
            candidates,
            used: vec![false; reference.len()],
            remaining: hyp_counts,
            needed,
            best_chunks: greedy,
            nodes: 0,
        };
        aligner.search(0, 0, u32::MAX, 0);
        (max_matches, aligner.best_chunks)
    }

    fn search(&mut self, i: usize, chunks: u32, last_ref: u32, last_pos: usize) {
        if chunks >= self.best_chunks {
            return;
        }
        if i == self.hyp.len() {
            self.best_chunks = chunks;
            return;
        }
        self.nodes += 1;
        if self.nodes > ALIGN_NODE_LIMIT {
            return;
        }

        let word = self.hyp[i].as_str();
        // continuation of the current chunk first, then the remaining
        // candidates in ref order
        let continuation = (last_ref != u32::MAX && last_pos + 1 == i)
            .then_some(last_ref as usize + 1)
            .filter(|&j| {
                j < self.used.len() && !self.used[j] && self.candidates[i].contains(&j)
            });
        let mut order: Vec<usize> = Vec::with_capacity(self.candidates[i].len());
        if let Some(j) = continuation {
            order.push(j);
        }
        for &j in &self.candidates[i] {
            if !self.used[j] && Some(j) != continuation {
                order.push(j);
            }
        }

        for j in order {
            let extends = last_ref != u32::MAX && last_pos + 1 == i && j == last_ref as usize + 1;
            let next_chunks = if extends { chunks } else { chunks + 1 };
            self.used[j] = true;
            *self.remaining.get_mut(word).unwrap() -= 1;
            *self.needed.get_mut(word).unwrap() -= 1;
            self.search(i + 1, next_chunks, j as u32, i);
            *self.needed.get_mut(word).unwrap() += 1;
            *self.remaining.get_mut(word).unwrap() += 1;
            self.used[j] = false;
        }

        // skipping hyp[i] is legal only when the maximum stays reachable
        if self.remaining[word] > self.needed[word] {
            *self.remaining.get_mut(word).unwrap() -= 1;
            self.search(i + 1, chunks, last_ref, last_pos);
            *self.remaining.get_mut(word).unwrap() += 1;
        }
    }
}

/// Left-to-right greedy alignment preferring chunk continuations;
/// reaches maximum matches, used as the initial chunk bound.
fn greedy_chunks(candidates: &[Vec<usize>]) -> u32 {
    let ref_len = candidates.iter().flatten().copied().max().map_or(0, |m| m + 1);
    let mut used = vec![false; ref_len];
    let mut chunks = 0u32;
    let mut last: Option<(usize, usize)> = None;
    for (i, cands) in candidates.iter().enumerate() {
        let continuation = last
            .filter(|&(pi, _)| pi + 1 == i)
            .map(|(_, pj)| pj + 1)
            .filter(|&j| j < ref_len && !used[j] && cands.contains(&j));
        let pick = continuation.or_else(|| cands.iter().copied().find(|&j| !used[j]));
        if let Some(j) = pick {
            used[j] = true;
            if last != Some((i.wrapping_sub(1), j.wrapping_sub(1))) {
                chunks += 1;
            }
            last = Some((i, j));
        }
    }
    chunks
}

/// Matches and chunks of the optimal exact-match alignment.
pub(crate) fn align(hyp: &[String], reference: &[String]) -> (u32, u32) {
    Aligner::run(hyp, reference)
}

pub(crate) fn meteor_from_tokens(hyp: &[String], reference: &[String], params: &MeteorParams) -> f64 {
    let (matches, chunks) = align(hyp, reference);
    if matches == 0 {
        return 0.0;
    }

    // matched multiset is alignment-independent: min count per type
    let mut ref_counts: HashMap<&str, u32> = HashMap::new();
    for t in reference {
        *ref_counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut matched_weight = 0.0;
    let mut budget = ref_counts.clone();
    for t in hyp {
        if let Some(c) = budget.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                matched_weight += params.token_weight(t);
            }
        }
    }

    let hyp_weight: f64 = hyp.iter().map(|t| params.token_weight(t)).sum();
    let ref_weight: f64 = reference.iter().map(|t| params.token_weight(t)).sum();
    if hyp_weight == 0.0 || ref_weight == 0.0 {
        return 0.0;
    }
    let precision = matched_weight / hyp_weight;
    let recall = matched_weight / ref_weight;
    let denom = params.alpha * precision + (1.0 - params.alpha) * recall;
    if denom == 0.0 {
        return 0.0;
    }
    let f_mean = precision * recall / denom;
    let penalty = params.gamma * (chunks as f64 / matches as f64).powf(params.beta);
    f_mean * (1.0 - penalty)
}

/// Sentence-level METEOR restricted to exact matching.
pub fn sentence_meteor(hyp: &TokenSeq, reference: &TokenSeq, params: &MeteorParams) -> Result<Score> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    Ok(Score::new(meteor_from_tokens(
        hyp.tokens(),
        reference.tokens(),
        params,
    )))
}

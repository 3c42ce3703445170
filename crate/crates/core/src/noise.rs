//! Controlled corpus perturbation: copy-noise injection and held-out
//! split creation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed::derive_rng;

/// Per-pair provenance after noise injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Clean,
    CopyInjected,
}

/// Aligned sentence pairs, optionally tagged with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelCorpus {
    pub pairs: Vec<(String, String)>,
    pub provenance: Option<Vec<Provenance>>,
}

impl ParallelCorpus {
    /// Builds a corpus, rejecting pairs with an empty source.
    pub fn new(pairs: Vec<(String, String)>) -> Result<ParallelCorpus> {
        for (index, (source, _)) in pairs.iter().enumerate() {
            if source.is_empty() {
                return Err(Error::EmptySource { index });
            }
        }
        Ok(ParallelCorpus {
            pairs,
            provenance: None,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Replaces each target by its source independently with probability
/// `p`, tagging replaced pairs. Order is preserved and untouched pairs
/// stay byte-identical; deterministic per seed.
pub fn inject_copy_noise(corpus: &ParallelCorpus, p: f64, seed: u64) -> Result<ParallelCorpus> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let mut rng = derive_rng(seed, "copy-noise", 0);
    let mut pairs = Vec::with_capacity(corpus.len());
    let mut provenance = Vec::with_capacity(corpus.len());
    for (source, target) in &corpus.pairs {
        let draw: f64 = rand::Rng::random(&mut rng);
        if draw < p {
            pairs.push((source.clone(), source.clone()));
            provenance.push(Provenance::CopyInjected);
        } else {
            pairs.push((source.clone(), target.clone()));
            provenance.push(Provenance::Clean);
        }
    }
    Ok(ParallelCorpus {
        pairs,
        provenance: Some(provenance),
    })
}

/// Exact-count variant: replaces exactly `count` uniformly chosen
/// pairs, for reproducible proportions.
pub fn inject_copy_noise_exact(
    corpus: &ParallelCorpus,
    count: usize,
    seed: u64,
) -> Result<ParallelCorpus> {
    if count > corpus.len() {
        return Err(Error::InvalidParameter(format!(
            "exact copy count {count} exceeds corpus size {}",
            corpus.len()
        )));
    }
    let mut rng = derive_rng(seed, "copy-noise-exact", 0);
    let chosen = rand::seq::index::sample(&mut rng, corpus.len(), count);
    let mut flags = vec![false; corpus.len()];
    for i in chosen {
        flags[i] = true;
    }
    let mut pairs = Vec::with_capacity(corpus.len());
    let mut provenance = Vec::with_capacity(corpus.len());
    for ((source, target), &flag) in corpus.pairs.iter().zip(&flags) {
        if flag {
            pairs.push((source.clone(), source.clone()));
            provenance.push(Provenance::CopyInjected);
        } else {
            pairs.push((source.clone(), target.clone()));
            provenance.push(Provenance::Clean);
        }
    }
    Ok(ParallelCorpus {
        pairs,
        provenance: Some(provenance),
    })
}

/// Uniform random split without replacement into (train, heldout).
/// Both halves preserve the input order; deterministic per seed.
pub fn split_holdout(
    corpus: &ParallelCorpus,
    size: usize,
    seed: u64,
) -> Result<(ParallelCorpus, ParallelCorpus)> {
    let n = corpus.len();
    if size == 0 || size >= n {
        return Err(Error::SplitSizeOutOfRange {
            size,
            corpus_size: n,
        });
    }
    let mut rng = derive_rng(seed, "holdout", 0);
    let mut heldout_flags = vec![false; n];
    for i in rand::seq::index::sample(&mut rng, n, size) {
        heldout_flags[i] = true;
    }

    let mut train = Vec::with_capacity(n - size);
    let mut heldout = Vec::with_capacity(size);
    let mut train_prov = corpus.provenance.as_ref().map(|_| Vec::new());
    let mut heldout_prov = corpus.provenance.as_ref().map(|_| Vec::new());
    for (index, pair) in corpus.pairs.iter().enumerate() {
        let tag = corpus.provenance.as_ref().map(|p| p[index]);
        if heldout_flags[index] {
            heldout.push(pair.clone());
            if let (Some(v), Some(t)) = (heldout_prov.as_mut(), tag) {
                v.push(t);
            }
        } else {
            train.push(pair.clone());
            if let (Some(v), Some(t)) = (train_prov.as_mut(), tag) {
                v.push(t);
            }
        }
    }
    Ok((
        ParallelCorpus {
            pairs: train,
            provenance: train_prov,
        },
        ParallelCorpus {
            pairs: heldout,
            provenance: heldout_prov,
        },
    ))
}

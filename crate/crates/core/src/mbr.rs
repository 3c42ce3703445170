//! The MBR decision rule: pairwise utility matrices, expected
//! utilities, argmax selection and sample-count sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{sentence_chrf, Utility, UtilityConfig};
use crate::seed::{derive_rng, derive_seed};

/// One source sentence with its pool of candidate samples.
///
/// Samples may repeat: pools come from sampling with replacement, and
/// duplicates legitimately concentrate utility mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePool {
    pub id: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub samples: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam: Option<Vec<String>>,
}

/// Pairwise utilities u(s_i, s_j) for one pool; entry (i, j) scores
/// sample i as hypothesis against sample j as pseudo-reference.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    n: usize,
    values: Vec<f64>,
    degenerate_pairs: u64,
}

impl UtilityMatrix {
    /// Builds a matrix from row-major values. Metric-backed matrices
    /// lie in [0, 1]; externally supplied values only need to be
    /// finite.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<UtilityMatrix> {
        if values.len() != n * n {
            return Err(Error::MisalignedInputs(format!(
                "{} values for an {n}x{n} matrix",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix values must be finite".to_owned(),
            ));
        }
        Ok(UtilityMatrix {
            n,
            values,
            degenerate_pairs: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Number of pairs scored 0 because one side was degenerate
    /// (empty under the utility's notion of content).
    pub fn degenerate_pairs(&self) -> u64 {
        self.degenerate_pairs
    }

    /// Row means including the self term j = i.
    pub fn expected_utilities(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().sum::<f64>() / self.n as f64)
            .collect()
    }

    /// Row means excluding the self term, for ablation. A singleton
    /// matrix yields [0.0].
    pub fn expected_utilities_excluding_self(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![0.0];
        }
        (0..self.n)
            .map(|i| {
                let sum: f64 = self
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| v)
                    .sum();
                sum / (self.n - 1) as f64
            })
            .collect()
    }
}

/// Fills the n×n matrix for arbitrary sample texts.
pub(crate) fn matrix_for_samples(utility: &Utility, samples: &[String]) -> UtilityMatrix {
    let n = samples.len();
    let prepared: Vec<_> = if n >= 16 {
        samples.par_iter().map(|s| utility.prepare(s)).collect()
    } else {
        samples.iter().map(|s| utility.prepare(s)).collect()
    };

    let fill_row = |i: usize| -> (Vec<f64>, u64) {
        let mut row = Vec::with_capacity(n);
        let mut degenerate = 0u64;
        for j in 0..n {
            if prepared[i].is_degenerate() || prepared[j].is_degenerate() {
                degenerate += 1;
                row.push(0.0);
            } else {
                row.push(utility.score_prepared(&prepared[i], &prepared[j]));
            }
        }
        (row, degenerate)
    };

    let rows: Vec<(Vec<f64>, u64)> = if n >= 16 {
        (0..n).into_par_iter().map(fill_row).collect()
    } else {
        (0..n).map(fill_row).collect()
    };

    let mut values = Vec::with_capacity(n * n);
    let mut degenerate_pairs = 0u64;
    for (row, degenerate) in rows {
        values.extend(row);
        degenerate_pairs += degenerate;
    }
    UtilityMatrix {
        n,
        values,
        degenerate_pairs,
    }
}

/// All n² pairwise utilities for a pool. Deterministic for fixed
/// inputs regardless of the parallel schedule.
pub fn utility_matrix(pool: &SamplePool, config: &UtilityConfig) -> Result<UtilityMatrix> {
    if pool.samples.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok(matrix_for_samples(&Utility::new(config.clone()), &pool.samples))
}

/// Outcome of one MBR decode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Smallest index attaining the maximum expected utility, in the
    /// order of the (sub)pool that was decoded.
    pub selected_index: usize,
    pub selected_text: String,
    pub expected_utilities: Vec<f64>,
    pub num_samples_used: usize,
    pub utility_name: String,
    pub seed: u64,
}

/// Decode options beyond the spec defaults.
#[derive(Debug, Clone, Copy)]
pub struct MbrOptions {
    /// Include the self term j = i in the expected-utility sum.
    pub include_self_term: bool,
}

impl Default for MbrOptions {
    fn default() -> Self {
        MbrOptions {
            include_self_term: true,
        }
    }
}

/// First index attaining the maximum (ties break to the lowest index).
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_value {
            best_value = v;
            best = i;
        }
    }
    best
}

/// Draws `amount` distinct indices out of `0..n`, returned in ascending
/// order so subpools preserve pool order.
pub(crate) fn draw_indices(n: usize, amount: usize, seed: u64) -> Vec<usize> {
    let mut rng = derive_rng(seed, "subsample", 0);
    let mut indices = rand::seq::index::sample(&mut rng, n, amount).into_vec();
    indices.sort_unstable();
    indices
}

/// MBR decode of one pool: the sample with the highest mean utility
/// against the whole (sub)pool wins.
///
/// With `subsample = Some(k)`, k samples are drawn uniformly without
/// replacement using the seed and the decision applies to the subpool.
pub fn decode(
    pool: &SamplePool,
    config: &UtilityConfig,
    subsample: Option<usize>,
    seed: u64,
) -> Result<DecodeResult> {
    decode_with_options(pool, config, subsample, seed, MbrOptions::default())
}

pub fn decode_with_options(
    pool: &SamplePool,
    config: &UtilityConfig,
    subsample: Option<usize>,
    seed: u64,
    options: MbrOptions,
) -> Result<DecodeResult> {
    Ok(decode_detailed(pool, config, subsample, seed, options)?.result)
}

/// A decode together with the matrix the decision derives from.
#[derive(Debug, Clone)]
pub struct DecodedPool {
    pub result: DecodeResult,
    pub matrix: UtilityMatrix,
}

pub fn decode_detailed(
    pool: &SamplePool,
    config: &UtilityConfig,
    subsample: Option<usize>,
    seed: u64,
    options: MbrOptions,
) -> Result<DecodedPool> {
    let n = pool.samples.len();
    if n == 0 {
        return Err(Error::EmptyPool);
    }
    let utility = Utility::new(config.clone());

    let chosen: Vec<String> = match subsample {
        Some(k) => {
            if k == 0 || k > n {
                return Err(Error::SubsampleOutOfRange {
                    requested: k,
                    pool_size: n,
                });
            }
            let indices = draw_indices(n, k, seed);
            indices.iter().map(|&i| pool.samples[i].clone()).collect()
        }
        None => pool.samples.clone(),
    };

    let matrix = matrix_for_samples(&utility, &chosen);
    let expected = if options.include_self_term {
        matrix.expected_utilities()
    } else {
        matrix.expected_utilities_excluding_self()
    };
    let selected = argmax_first(&expected);

    let result = DecodeResult {
        selected_index: selected,
        selected_text: chosen[selected].clone(),
        expected_utilities: expected,
        num_samples_used: chosen.len(),
        utility_name: utility.name(),
        seed,
    };
    Ok(DecodedPool { result, matrix })
}

/// One repetition of a sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRep {
    pub rep: usize,
    pub result: DecodeResult,
    /// Sentence chrF2 of the selection against the reference, when one
    /// is present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_chrf2: Option<f64>,
}

/// All repetitions at one sample count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub size: usize,
    pub reps: Vec<CurveRep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_std: Option<f64>,
}

/// Sample-count sweep report for one pool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveReport {
    pub pool_id: String,
    pub points: Vec<CurvePoint>,
}

/// Seed for one (size, rep) cell of a sweep, derived from the master
/// seed.
pub fn curve_rep_seed(master: u64, size: usize, rep: usize) -> u64 {
    derive_seed(master, "curve", ((size as u64) << 32) | rep as u64)
}

/// Sample-count sweep: for every grid size, `repetitions` independent
/// subsampled decodes with derived seeds.
///
/// The full pairwise matrix is computed once and subpool decisions read
/// from it; results are bit-identical to calling [`decode`] with the
/// same derived seeds.
pub fn decode_curve(
    pool: &SamplePool,
    config: &UtilityConfig,
    grid: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<CurveReport> {
    let n = pool.samples.len();
    if n == 0 {
        return Err(Error::EmptyPool);
    }
    for &size in grid {
        if size == 0 || size > n {
            return Err(Error::GridExceedsPool {
                size,
                pool_size: n,
            });
        }
    }
    let repetitions = repetitions.max(1);
    let utility = Utility::new(config.clone());
    let full = matrix_for_samples(&utility, &pool.samples);

    let mut points = Vec::with_capacity(grid.len());
    for &size in grid {
        let mut reps = Vec::with_capacity(repetitions);
        for rep in 0..repetitions {
            let rep_seed = curve_rep_seed(seed, size, rep);
            let indices = draw_indices(n, size, rep_seed);
            let expected: Vec<f64> = indices
                .iter()
                .map(|&i| {
                    indices.iter().map(|&j| full.get(i, j)).sum::<f64>() / size as f64
                })
                .collect();
            let selected = argmax_first(&expected);
            let result = DecodeResult {
                selected_index: selected,
                selected_text: pool.samples[indices[selected]].clone(),
                expected_utilities: expected,
                num_samples_used: size,
                utility_name: utility.name(),
                seed: rep_seed,
            };
            let eval_chrf2 = pool
                .reference
                .as_deref()
                .map(|r| sentence_chrf(&result.selected_text, r, 2.0))
                .transpose()?
                .map(|s| s.value());
            reps.push(CurveRep {
                rep,
                result,
                eval_chrf2,
            });
        }
        let scores: Vec<f64> = reps.iter().filter_map(|r| r.eval_chrf2).collect();
        let (eval_mean, eval_std) = if scores.len() == reps.len() && !scores.is_empty() {
            (Some(mean(&scores)), Some(std_dev(&scores)))
        } else {
            (None, None)
        };
        points.push(CurvePoint {
            size,
            reps,
            eval_mean,
            eval_std,
        });
    }
    Ok(CurveReport {
        pool_id: pool.id.clone(),
        points,
    })
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n−1 denominator); 0 for a single value.
/// Identical values give exactly 0 (summing n copies of a value can
/// round, which would otherwise leak into the variance).
pub(crate) fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 || values.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(samples: &[&str]) -> SamplePool {
        SamplePool {
            id: "t".to_owned(),
            source: "src".to_owned(),
            reference: None,
            samples: samples.iter().map(|s| s.to_string()).collect(),
            beam: None,
        }
    }

    fn unigram_f1() -> UtilityConfig {
        UtilityConfig::preset("unigram-f1").unwrap()
    }

    #[test]
    fn singleton_pool_scores_itself() {
        let m = utility_matrix(&pool(&["a b"]), &UtilityConfig::preset("chrf-1").unwrap()).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 1.0);
    }

    #[test]
    fn worked_pool_matrix_and_expected_utilities() {
        let m = utility_matrix(&pool(&["a b", "a b", "a c"]), &unigram_f1()).unwrap();
        let expected_rows = [[1.0, 1.0, 0.5], [1.0, 1.0, 0.5], [0.5, 0.5, 1.0]];
        for (i, row) in expected_rows.iter().enumerate() {
            assert_eq!(m.row(i), row);
        }
        assert_eq!(m.expected_utilities(), vec![5.0 / 6.0, 5.0 / 6.0, 2.0 / 3.0]);
    }

    #[test]
    fn symmetric_config_gives_a_symmetric_matrix() {
        let config = UtilityConfig::preset("chrf-2-symmetric").unwrap();
        let m = utility_matrix(&pool(&["a bc d", "x bc", "a d e f"]), &config).unwrap();
        for i in 0..m.n() {
            for j in 0..m.n() {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn expected_utilities_of_reference_matrices() {
        let all_ones = UtilityMatrix {
            n: 3,
            values: vec![1.0; 9],
            degenerate_pairs: 0,
        };
        assert_eq!(all_ones.expected_utilities(), vec![1.0, 1.0, 1.0]);

        let mut identity = UtilityMatrix {
            n: 4,
            values: vec![0.0; 16],
            degenerate_pairs: 0,
        };
        for i in 0..4 {
            identity.values[i * 4 + i] = 1.0;
        }
        assert_eq!(identity.expected_utilities(), vec![0.25; 4]);
        assert_eq!(identity.expected_utilities_excluding_self(), vec![0.0; 4]);
    }

    #[test]
    fn decode_breaks_ties_to_the_lowest_index() {
        let result = decode(&pool(&["a b", "a b", "a c"]), &unigram_f1(), None, 0).unwrap();
        assert_eq!(result.selected_index, 0);
        assert_eq!(result.selected_text, "a b");
    }

    #[test]
    fn identical_samples_select_index_zero_with_unit_utility() {
        let result = decode(&pool(&["x y", "x y", "x y"]), &unigram_f1(), None, 0).unwrap();
        assert_eq!(result.selected_index, 0);
        assert_eq!(result.expected_utilities, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn subsampling_the_whole_pool_equals_no_subsampling() {
        let p = pool(&["a b", "c d", "a c", "b d"]);
        let config = UtilityConfig::preset("chrf-1").unwrap();
        for seed in [0, 1, 99] {
            let full = decode(&p, &config, None, seed).unwrap();
            let sub = decode(&p, &config, Some(4), seed).unwrap();
            assert_eq!(full, sub);
        }
    }

    #[test]
    fn subsample_out_of_range_is_an_error() {
        let p = pool(&["a", "b"]);
        let config = unigram_f1();
        assert!(matches!(
            decode(&p, &config, Some(3), 0),
            Err(Error::SubsampleOutOfRange { requested: 3, pool_size: 2 })
        ));
        assert!(decode(&p, &config, Some(0), 0).is_err());
    }

    #[test]
    fn degenerate_samples_are_counted_and_scored_zero() {
        let m = utility_matrix(&pool(&["a b", "", "a c"]), &unigram_f1()).unwrap();
        // row and column through the empty sample, 2n - 1 pairs
        assert_eq!(m.degenerate_pairs(), 5);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn decode_matches_an_uncached_double_loop() {
        let p = pool(&["the cat", "a cat", "the cat", "dog", ""]);
        for preset in ["chrf-1", "unigram-f1", "bleu-floor", "meteor"] {
            let config = UtilityConfig::preset(preset).unwrap();
            let utility = Utility::new(config.clone());
            let n = p.samples.len();
            let mut best = 0usize;
            let mut best_eu = f64::NEG_INFINITY;
            for i in 0..n {
                let mut sum = 0.0;
                for j in 0..n {
                    let h = utility.prepare(&p.samples[i]);
                    let r = utility.prepare(&p.samples[j]);
                    sum += utility.score_prepared(&h, &r);
                }
                let eu = sum / n as f64;
                if eu > best_eu {
                    best_eu = eu;
                    best = i;
                }
            }
            let result = decode(&p, &config, None, 0).unwrap();
            assert_eq!(result.selected_index, best, "{preset}");
        }
    }

    #[test]
    fn curve_on_the_full_size_reproduces_the_full_decode() {
        let mut p = pool(&["a b", "a b", "a c"]);
        p.reference = Some("a b".to_owned());
        let config = unigram_f1();
        let report = decode_curve(&p, &config, &[3], 2, 7).unwrap();
        let full = decode(&p, &config, None, 0).unwrap();
        for rep in &report.points[0].reps {
            assert_eq!(rep.result.selected_text, full.selected_text);
            assert_eq!(rep.result.expected_utilities, full.expected_utilities);
        }
        assert_eq!(report.points[0].eval_std, Some(0.0));
    }

    #[test]
    fn curve_of_size_one_returns_single_samples() {
        let p = pool(&["a b", "c d", "e f"]);
        let report = decode_curve(&p, &unigram_f1(), &[1], 3, 11).unwrap();
        for rep in &report.points[0].reps {
            assert_eq!(rep.result.num_samples_used, 1);
            assert_eq!(rep.result.expected_utilities, vec![1.0]);
            assert!(p.samples.contains(&rep.result.selected_text));
        }
    }

    #[test]
    fn curve_grid_must_fit_the_pool() {
        let p = pool(&["a", "b"]);
        let err = decode_curve(&p, &unigram_f1(), &[2, 5], 1, 0).unwrap_err();
        assert!(matches!(err, Error::GridExceedsPool { size: 5, pool_size: 2 }));
    }

    #[test]
    fn curve_is_reproducible_and_matches_direct_decode() {
        let p = pool(&["a b c", "a b", "b c", "a c", "c d"]);
        let config = UtilityConfig::preset("chrf-1").unwrap();
        let a = decode_curve(&p, &config, &[2, 4], 2, 42).unwrap();
        let b = decode_curve(&p, &config, &[2, 4], 2, 42).unwrap();
        assert_eq!(a, b);

        for point in &a.points {
            for rep in &point.reps {
                let direct = decode(&p, &config, Some(point.size), rep.result.seed).unwrap();
                assert_eq!(rep.result, direct);
            }
        }
    }
}

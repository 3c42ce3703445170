//! Command implementations behind the CLI verbs. Each operates on
//! paths plus a parsed argument struct so integration tests can drive
//! them directly.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use mbr_core::analysis::{
    build_frequency_table, length_stats, pathology_report, token_probability_by_bucket,
    BucketScheme, CopyAnchor, OverlapMode, PathologyConfig, PathologyKind, PathologyReport,
};
use mbr_core::mbr::{
    curve_rep_seed, decode_curve, decode_detailed, utility_matrix, CurveReport, MbrOptions,
};
use mbr_core::metrics::{corpus_score, CorpusMetric, UtilityConfig};
use mbr_core::noise::{inject_copy_noise, inject_copy_noise_exact, split_holdout, ParallelCorpus, Provenance};
use mbr_core::seed::derive_seed;
use mbr_core::text::tokenize_13a;

use crate::records::{
    read_decodes, read_lines, read_parallel, read_pools, write_decodes, write_lines, DecodeRecord,
};
use crate::report::{fmt_f64, write_json_report, ConfigStamp, TsvWriter};

/// Default pool size for decoding, per the standard protocol.
pub const DEFAULT_NUM_SAMPLES: usize = 100;

/// Utility choice shared by decode/curve/analyze commands.
#[derive(Debug, Clone)]
pub struct UtilitySelection {
    pub preset: String,
    pub symmetric: bool,
    pub function_words: Option<PathBuf>,
}

impl UtilitySelection {
    pub fn resolve(&self) -> Result<UtilityConfig> {
        let name = if self.symmetric && !self.preset.ends_with("-symmetric") {
            format!("{}-symmetric", self.preset)
        } else {
            self.preset.clone()
        };
        let mut config = UtilityConfig::preset(&name)
            .with_context(|| format!("resolving utility preset `{name}`"))?;
        if let Some(path) = &self.function_words {
            let words: HashSet<String> = read_lines(path)?
                .into_iter()
                .map(|l| l.trim().to_owned())
                .filter(|l| !l.is_empty())
                .collect();
            config = config.with_function_words(Arc::new(words));
        }
        Ok(config)
    }
}

fn utility_stamp(stamp: &mut ConfigStamp, config: &UtilityConfig) {
    stamp.push("utility", config.name());
    stamp.push(
        "utility-config",
        serde_json::to_string(config).expect("utility config serializes"),
    );
}

// ---------------------------------------------------------------- decode

#[derive(Debug, Clone)]
pub struct DecodeArgs {
    pub pools: PathBuf,
    pub utility: UtilitySelection,
    /// Explicit subsample size; strict when given. The default uses
    /// 100 samples, capped at each pool's size.
    pub num_samples: Option<usize>,
    pub seed: u64,
    pub output: PathBuf,
    pub summary: Option<PathBuf>,
    /// Require references and corpus evaluation.
    pub evaluate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecodeSummary {
    pub pools: usize,
    pub utility: String,
    pub seed: u64,
    /// Pairs scored zero because a candidate was empty.
    pub degenerate_pairs: u64,
    pub evaluation: Option<BTreeMap<String, f64>>,
}

pub fn cmd_decode(args: &DecodeArgs) -> Result<DecodeSummary> {
    let pools = read_pools(&args.pools)?;
    let config = args.utility.resolve()?;

    if let Some(k) = args.num_samples {
        for pool in &pools {
            if k > pool.samples.len() {
                bail!(
                    "--num-samples {k} exceeds pool `{}` of {} samples",
                    pool.id,
                    pool.samples.len()
                );
            }
        }
    }

    let decoded: Vec<(DecodeRecord, u64)> = pools
        .par_iter()
        .enumerate()
        .map(|(index, pool)| {
            let subsample = match args.num_samples {
                Some(k) => Some(k),
                None if pool.samples.len() > DEFAULT_NUM_SAMPLES => Some(DEFAULT_NUM_SAMPLES),
                None => None,
            };
            let record_seed = derive_seed(args.seed, "record", index as u64);
            let detailed = decode_detailed(
                pool,
                &config,
                subsample,
                record_seed,
                MbrOptions::default(),
            )
            .with_context(|| format!("decoding pool `{}`", pool.id))?;
            Ok((
                DecodeRecord {
                    id: pool.id.clone(),
                    result: detailed.result,
                },
                detailed.matrix.degenerate_pairs(),
            ))
        })
        .collect::<Result<_>>()?;

    let records: Vec<DecodeRecord> = decoded.iter().map(|(r, _)| r.clone()).collect();
    let degenerate_pairs: u64 = decoded.iter().map(|(_, d)| d).sum();
    write_decodes(&args.output, &records)?;

    let missing_ref: Vec<&str> = pools
        .iter()
        .filter(|p| p.reference.is_none())
        .map(|p| p.id.as_str())
        .collect();
    let evaluation = if missing_ref.is_empty() {
        let hyps: Vec<String> = records.iter().map(|r| r.result.selected_text.clone()).collect();
        let refs: Vec<String> = pools
            .iter()
            .map(|p| p.reference.clone().expect("checked above"))
            .collect();
        let mut scores = BTreeMap::new();
        for metric in CorpusMetric::ALL {
            scores.insert(
                metric.name().to_owned(),
                corpus_score(&hyps, &refs, metric)?.value(),
            );
        }
        Some(scores)
    } else if args.evaluate {
        bail!(
            "evaluation requested but pool `{}` has no reference",
            missing_ref[0]
        );
    } else {
        None
    };

    let summary = DecodeSummary {
        pools: pools.len(),
        utility: config.name(),
        seed: args.seed,
        degenerate_pairs,
        evaluation,
    };
    if let Some(path) = &args.summary {
        let mut stamp = ConfigStamp::new("mbr decode");
        utility_stamp(&mut stamp, &config);
        stamp.push("seed", args.seed);
        stamp.push(
            "num-samples",
            args.num_samples
                .map(|k| k.to_string())
                .unwrap_or_else(|| format!("default:{DEFAULT_NUM_SAMPLES}")),
        );
        stamp.push("pools", args.pools.display());
        write_json_report(path, &stamp, &summary)?;
    }
    Ok(summary)
}

// ---------------------------------------------------------------- curve

#[derive(Debug, Clone)]
pub struct CurveArgs {
    pub pools: PathBuf,
    pub utility: UtilitySelection,
    pub grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Per-repetition rows: size, rep, metric, value.
    pub output: PathBuf,
    /// Per-size aggregation: size, metric, mean, std.
    pub summary: Option<PathBuf>,
}

pub fn cmd_curve(args: &CurveArgs) -> Result<()> {
    let pools = read_pools(&args.pools)?;
    let config = args.utility.resolve()?;
    if args.grid.is_empty() {
        bail!("empty sample-count grid");
    }
    let max_size = *args.grid.iter().max().expect("nonempty grid");
    for pool in &pools {
        if max_size > pool.samples.len() {
            bail!(
                "grid size {max_size} exceeds pool `{}` of {} samples",
                pool.id,
                pool.samples.len()
            );
        }
        if pool.reference.is_none() {
            bail!("pool `{}` has no reference; the curve protocol evaluates against references", pool.id);
        }
    }
    let reps = args.reps.max(1);

    let reports: Vec<CurveReport> = pools
        .par_iter()
        .enumerate()
        .map(|(index, pool)| {
            let pool_seed = derive_seed(args.seed, "pool", index as u64);
            decode_curve(pool, &config, &args.grid, reps, pool_seed)
                .with_context(|| format!("sweeping pool `{}`", pool.id))
        })
        .collect::<Result<_>>()?;

    let refs: Vec<String> = pools
        .iter()
        .map(|p| p.reference.clone().expect("checked above"))
        .collect();

    let mut stamp = ConfigStamp::new("mbr curve");
    utility_stamp(&mut stamp, &config);
    stamp.push("seed", args.seed);
    stamp.push(
        "grid",
        args.grid.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
    );
    stamp.push("reps", reps);
    stamp.push("pools", args.pools.display());

    let mut rows = TsvWriter::create(&args.output, &stamp, &["size", "rep", "metric", "value"])?;
    let mut per_size_metric: BTreeMap<(usize, &'static str), Vec<f64>> = BTreeMap::new();
    for (size_index, &size) in args.grid.iter().enumerate() {
        for rep in 0..reps {
            let hyps: Vec<String> = reports
                .iter()
                .map(|r| r.points[size_index].reps[rep].result.selected_text.clone())
                .collect();
            for metric in CorpusMetric::ALL {
                let value = corpus_score(&hyps, &refs, metric)?.value();
                rows.row(&[
                    size.to_string(),
                    rep.to_string(),
                    metric.name().to_owned(),
                    fmt_f64(value),
                ])?;
                per_size_metric.entry((size, metric.name())).or_default().push(value);
            }
        }
    }
    rows.finish()?;

    if let Some(path) = &args.summary {
        let mut summary = TsvWriter::create(path, &stamp, &["size", "metric", "mean", "std"])?;
        for ((size, metric), values) in &per_size_metric {
            summary.row(&[
                size.to_string(),
                (*metric).to_owned(),
                fmt_f64(mean(values)),
                fmt_f64(std_dev(values)),
            ])?;
        }
        summary.finish()?;
    }
    Ok(())
}

/// The seed a curve cell uses for a given pool index, exposed so
/// external checks can reproduce single decodes.
pub fn curve_cell_seed(master: u64, pool_index: usize, size: usize, rep: usize) -> u64 {
    curve_rep_seed(derive_seed(master, "pool", pool_index as u64), size, rep)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

// identical values give exactly 0; summing n copies can round otherwise
fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 || values.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

// ---------------------------------------------------------------- score

#[derive(Debug, Clone)]
pub struct ScoreArgs {
    pub hyps: PathBuf,
    pub refs: PathBuf,
    pub metric: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub metric: String,
    pub signature: String,
    pub score: f64,
}

pub fn cmd_score(args: &ScoreArgs) -> Result<ScoreReport> {
    let metric = CorpusMetric::parse(&args.metric)
        .with_context(|| format!("unknown evaluation metric `{}`", args.metric))?;
    let hyps = read_lines(&args.hyps)?;
    let refs = read_lines(&args.refs)?;
    if hyps.len() != refs.len() {
        bail!(
            "line count mismatch: {} has {} lines, {} has {}",
            args.hyps.display(),
            hyps.len(),
            args.refs.display(),
            refs.len()
        );
    }
    let score = corpus_score(&hyps, &refs, metric)?.value();
    Ok(ScoreReport {
        metric: metric.name().to_owned(),
        signature: metric.signature().to_owned(),
        score,
    })
}

// ---------------------------------------------------------------- analyze

#[derive(Debug, Clone)]
pub struct LengthArgs {
    /// (system name, path) pairs.
    pub corpora: Vec<(String, PathBuf)>,
    pub output_prefix: PathBuf,
}

pub fn cmd_analyze_length(args: &LengthArgs) -> Result<()> {
    if args.corpora.is_empty() {
        bail!("analyze length needs at least one name=path corpus");
    }
    let mut named = Vec::new();
    for (name, path) in &args.corpora {
        named.push((name.clone(), read_lines(path)?));
    }
    let table = length_stats(&named);

    let mut stamp = ConfigStamp::new("mbr analyze length");
    stamp.push("tokenizer", "13a");
    let mut tsv = TsvWriter::create(
        &prefixed(&args.output_prefix, "tsv"),
        &stamp,
        &["system", "mean_tokens", "sentences"],
    )?;
    for row in &table.rows {
        tsv.row(&[
            row.system.clone(),
            fmt_f64(row.mean_tokens),
            row.sentences.to_string(),
        ])?;
    }
    tsv.finish()?;
    write_json_report(&prefixed(&args.output_prefix, "json"), &stamp, &table)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct FreqArgs {
    pub train: PathBuf,
    pub translations: PathBuf,
    /// `decade` or comma-separated ascending boundaries starting at 1.
    pub buckets: String,
    pub output_prefix: PathBuf,
}

pub fn parse_bucket_scheme(spec: &str) -> Result<BucketScheme> {
    if spec == "decade" {
        return Ok(BucketScheme::DecadeLog);
    }
    let boundaries: Vec<u64> = spec
        .split(',')
        .map(|s| s.trim().parse::<u64>().with_context(|| format!("bucket boundary `{s}`")))
        .collect::<Result<_>>()?;
    Ok(BucketScheme::custom(boundaries)?)
}

fn tokenize_file(path: &Path) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    for line in read_lines(path)? {
        tokens.extend(tokenize_13a(&line).tokens().iter().cloned());
    }
    Ok(tokens)
}

pub fn cmd_analyze_freq(args: &FreqArgs) -> Result<()> {
    let scheme = parse_bucket_scheme(&args.buckets)?;
    let train_tokens = tokenize_file(&args.train)?;
    if train_tokens.is_empty() {
        bail!("training corpus {} has no tokens", args.train.display());
    }
    let table = build_frequency_table(train_tokens.iter().map(String::as_str), scheme);
    let translation_tokens = tokenize_file(&args.translations)?;
    if translation_tokens.is_empty() {
        bail!("translation corpus {} has no tokens", args.translations.display());
    }
    let translations =
        token_probability_by_bucket(&table, translation_tokens.iter().map(String::as_str));
    let training = table.training_distribution();

    let mut stamp = ConfigStamp::new("mbr analyze freq");
    stamp.push("buckets", table.scheme().label());
    stamp.push("train", args.train.display());
    stamp.push("translations", args.translations.display());

    let mut tsv = TsvWriter::create(
        &prefixed(&args.output_prefix, "tsv"),
        &stamp,
        &["bucket", "count_lo", "count_hi", "train_prob", "translation_prob"],
    )?;
    for (index, (lo, hi)) in table.bucket_ranges().iter().enumerate() {
        tsv.row(&[
            index.to_string(),
            lo.to_string(),
            hi.map(|h| h.to_string()).unwrap_or_else(|| "inf".to_owned()),
            fmt_f64(training.per_bucket[index]),
            fmt_f64(translations.per_bucket[index]),
        ])?;
    }
    tsv.row(&[
        "oov".to_owned(),
        String::new(),
        String::new(),
        fmt_f64(training.oov),
        fmt_f64(translations.oov),
    ])?;
    tsv.finish()?;

    #[derive(Serialize)]
    struct FreqReport {
        bucket_ranges: Vec<(u64, Option<u64>)>,
        training: mbr_core::analysis::BucketDistribution,
        translations: mbr_core::analysis::BucketDistribution,
    }
    write_json_report(
        &prefixed(&args.output_prefix, "json"),
        &stamp,
        &FreqReport {
            bucket_ranges: table.bucket_ranges(),
            training,
            translations,
        },
    )?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PathologyArgs {
    pub pools: PathBuf,
    pub decodes: PathBuf,
    /// Utility for the pool matrices; defaults to the one recorded in
    /// the decode file.
    pub utility: Option<UtilitySelection>,
    pub copy_anchor: CopyAnchor,
    pub copy_threshold: f64,
    pub halluc_threshold: f64,
    pub overlap: OverlapMode,
    pub output_prefix: PathBuf,
}

pub fn cmd_analyze_pathology(kind: PathologyKind, args: &PathologyArgs) -> Result<PathologyReport> {
    let pools = read_pools(&args.pools)?;
    let decodes = read_decodes(&args.decodes)?;
    let by_id: HashMap<&str, &DecodeRecord> =
        decodes.iter().map(|r| (r.id.as_str(), r)).collect();
    if by_id.len() != decodes.len() {
        bail!("duplicate ids in decode file {}", args.decodes.display());
    }
    let mut results = Vec::with_capacity(pools.len());
    for pool in &pools {
        match by_id.get(pool.id.as_str()) {
            Some(record) => results.push(record.result.clone()),
            None => bail!("no decode result for pool `{}`", pool.id),
        }
    }

    let config = match &args.utility {
        Some(selection) => selection.resolve()?,
        None => UtilityConfig::preset(&results[0].utility_name).with_context(|| {
            format!(
                "decode file records utility `{}`; pass --utility to override",
                results[0].utility_name
            )
        })?,
    };

    let matrices = pools
        .par_iter()
        .map(|pool| utility_matrix(pool, &config).with_context(|| format!("pool `{}`", pool.id)))
        .collect::<Result<Vec<_>>>()?;

    let pathology_config = PathologyConfig {
        kind,
        copy_anchor: args.copy_anchor,
        copy_threshold: args.copy_threshold,
        halluc_threshold: args.halluc_threshold,
        overlap: args.overlap,
    };
    let report = pathology_report(&pools, &results, &matrices, &pathology_config)?;

    let mut stamp = ConfigStamp::new(match kind {
        PathologyKind::Copy => "mbr analyze copies",
        PathologyKind::Hallucination => "mbr analyze hallucinations",
    });
    utility_stamp(&mut stamp, &config);
    stamp.push("copy-anchor", format!("{:?}", args.copy_anchor).to_lowercase());
    stamp.push("copy-threshold", args.copy_threshold);
    stamp.push("halluc-threshold", args.halluc_threshold);
    stamp.push(
        "overlap",
        match args.overlap {
            OverlapMode::Jaccard => "jaccard",
            OverlapMode::AnchorCoverage => "anchor-coverage",
        },
    );

    let mut tsv = TsvWriter::create(
        &prefixed(&args.output_prefix, "tsv"),
        &stamp,
        &[
            "kind",
            "mean_utility_flagged",
            "mean_utility_all",
            "flagged_rate_in_pools",
            "flagged_rate_in_selections",
            "flagged_samples",
            "total_samples",
            "flagged_selections",
            "total_selections",
        ],
    )?;
    tsv.row(&[
        match report.kind {
            PathologyKind::Copy => "copy".to_owned(),
            PathologyKind::Hallucination => "hallucination".to_owned(),
        },
        report
            .mean_utility_flagged
            .map(fmt_f64)
            .unwrap_or_else(|| "NA".to_owned()),
        fmt_f64(report.mean_utility_all),
        fmt_f64(report.flagged_rate_in_pools),
        fmt_f64(report.flagged_rate_in_selections),
        report.flagged_samples.to_string(),
        report.total_samples.to_string(),
        report.flagged_selections.to_string(),
        report.total_selections.to_string(),
    ])?;
    tsv.finish()?;
    write_json_report(&prefixed(&args.output_prefix, "json"), &stamp, &report)?;
    Ok(report)
}

// ---------------------------------------------------------------- noise & split

#[derive(Debug, Clone)]
pub struct NoiseArgs {
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub tsv: Option<PathBuf>,
    pub probability: f64,
    pub exact: bool,
    pub seed: u64,
    pub output_prefix: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseSummary {
    pub pairs: usize,
    pub tagged: usize,
    pub probability: f64,
    pub exact: bool,
    pub seed: u64,
}

pub fn cmd_noise(args: &NoiseArgs) -> Result<NoiseSummary> {
    let pairs = read_parallel(
        args.source.as_deref(),
        args.target.as_deref(),
        args.tsv.as_deref(),
    )?;
    let corpus = ParallelCorpus::new(pairs)?;
    let noised = if args.exact {
        let count = (args.probability * corpus.len() as f64).round() as usize;
        inject_copy_noise_exact(&corpus, count, args.seed)?
    } else {
        inject_copy_noise(&corpus, args.probability, args.seed)?
    };

    let tags = noised.provenance.as_ref().expect("injection always tags");
    let tagged = tags.iter().filter(|&&t| t == Provenance::CopyInjected).count();

    let sources: Vec<String> = noised.pairs.iter().map(|(s, _)| s.clone()).collect();
    let targets: Vec<String> = noised.pairs.iter().map(|(_, t)| t.clone()).collect();
    let tag_lines: Vec<String> = tags
        .iter()
        .map(|t| match t {
            Provenance::CopyInjected => "1".to_owned(),
            Provenance::Clean => "0".to_owned(),
        })
        .collect();
    write_lines(&prefixed(&args.output_prefix, "src"), &sources)?;
    write_lines(&prefixed(&args.output_prefix, "tgt"), &targets)?;
    write_lines(&prefixed(&args.output_prefix, "tags"), &tag_lines)?;

    let summary = NoiseSummary {
        pairs: noised.len(),
        tagged,
        probability: args.probability,
        exact: args.exact,
        seed: args.seed,
    };
    let mut stamp = ConfigStamp::new("mbr noise");
    stamp.push("probability", args.probability);
    stamp.push("exact", args.exact);
    stamp.push("seed", args.seed);
    write_json_report(&prefixed(&args.output_prefix, "meta.json"), &stamp, &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct SplitArgs {
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub tsv: Option<PathBuf>,
    pub size: usize,
    pub seed: u64,
    pub output_prefix: PathBuf,
}

pub fn cmd_split(args: &SplitArgs) -> Result<(usize, usize)> {
    let pairs = read_parallel(
        args.source.as_deref(),
        args.target.as_deref(),
        args.tsv.as_deref(),
    )?;
    let corpus = ParallelCorpus::new(pairs)?;
    let (train, heldout) = split_holdout(&corpus, args.size, args.seed)?;

    for (part, name) in [(&train, "train"), (&heldout, "heldout")] {
        let sources: Vec<String> = part.pairs.iter().map(|(s, _)| s.clone()).collect();
        let targets: Vec<String> = part.pairs.iter().map(|(_, t)| t.clone()).collect();
        write_lines(&prefixed(&args.output_prefix, &format!("{name}.src")), &sources)?;
        write_lines(&prefixed(&args.output_prefix, &format!("{name}.tgt")), &targets)?;
    }
    let mut stamp = ConfigStamp::new("mbr split");
    stamp.push("size", args.size);
    stamp.push("seed", args.seed);
    #[derive(Serialize)]
    struct SplitSummary {
        train: usize,
        heldout: usize,
    }
    write_json_report(
        &prefixed(&args.output_prefix, "meta.json"),
        &stamp,
        &SplitSummary {
            train: train.len(),
            heldout: heldout.len(),
        },
    )?;
    Ok((train.len(), heldout.len()))
}

/// `prefix` + `.ext`, keeping any directory part intact.
fn prefixed(prefix: &Path, ext: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

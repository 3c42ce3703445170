use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mbr_cli::commands::{
    cmd_analyze_freq, cmd_analyze_length, cmd_analyze_pathology, cmd_curve, cmd_decode, cmd_noise,
    cmd_score, cmd_split, CurveArgs, DecodeArgs, FreqArgs, LengthArgs, NoiseArgs, PathologyArgs,
    ScoreArgs, SplitArgs, UtilitySelection,
};
use mbr_core::analysis::{CopyAnchor, OverlapMode, PathologyKind, COPY_THRESHOLD, HALLUCINATION_THRESHOLD};

#[derive(Parser)]
#[command(
    name = "mbr",
    about = "Sample-based Minimum Bayes Risk decoding and bias diagnostics for machine translation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct UtilityFlags {
    /// Utility preset: bleu, bleu-floor, bleu-add-k, bleu-exp,
    /// chrf-0.5, chrf-1, chrf-2, chrf-3, meteor, meteor-0.5
    /// (optionally with a -symmetric suffix)
    #[arg(long, default_value = "chrf-1")]
    utility: String,

    /// Symmetrize the utility with a harmonic mean over both directions
    #[arg(long)]
    symmetric: bool,

    /// Function-word lexicon for METEOR, one token per line
    #[arg(long)]
    function_words: Option<PathBuf>,
}

impl UtilityFlags {
    fn selection(&self) -> UtilitySelection {
        UtilitySelection {
            preset: self.utility.clone(),
            symmetric: self.symmetric,
            function_words: self.function_words.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// MBR-decode a pool file into per-record selections
    Decode {
        /// Pool file, one JSON record per line
        #[arg(long)]
        pools: PathBuf,

        #[command(flatten)]
        utility: UtilityFlags,

        /// Samples per pool; default uses 100 capped at the pool size.
        /// Explicit values larger than a pool are an error.
        #[arg(long)]
        num_samples: Option<usize>,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// Output decode file (JSON lines)
        #[arg(long)]
        output: PathBuf,

        /// Optional summary report (JSON)
        #[arg(long)]
        summary: Option<PathBuf>,

        /// Require references and corpus evaluation
        #[arg(long)]
        evaluate: bool,
    },

    /// Sweep the number of samples and evaluate each grid point
    Curve {
        #[arg(long)]
        pools: PathBuf,

        #[command(flatten)]
        utility: UtilityFlags,

        /// Grid of sample counts: start:end:step or a comma list
        #[arg(long, default_value = "5:100:5")]
        grid: String,

        /// Repetitions per grid size
        #[arg(long, default_value_t = 2)]
        reps: usize,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// Per-repetition TSV: size, rep, metric, value
        #[arg(long)]
        output: PathBuf,

        /// Per-size TSV: size, metric, mean, std
        #[arg(long)]
        summary: Option<PathBuf>,
    },

    /// Score a hypothesis file against a reference file
    Score {
        #[arg(long)]
        hyps: PathBuf,

        #[arg(long)]
        refs: PathBuf,

        /// bleu, chrf1, chrf2 or chrf3
        #[arg(long)]
        metric: String,
    },

    /// Bias and pathology analyses over corpora and decode outputs
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },

    /// Inject source-copy noise into a parallel corpus
    Noise {
        /// Source side, one sentence per line
        #[arg(long)]
        source: Option<PathBuf>,

        /// Target side, one sentence per line
        #[arg(long)]
        target: Option<PathBuf>,

        /// Alternative: one TSV with source<TAB>target columns
        #[arg(long)]
        tsv: Option<PathBuf>,

        /// Copy probability in [0, 1]
        #[arg(long)]
        p: f64,

        /// Replace exactly round(p*n) pairs instead of independent draws
        #[arg(long)]
        exact: bool,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// Writes <prefix>.src, <prefix>.tgt, <prefix>.tags, <prefix>.meta.json
        #[arg(long)]
        output_prefix: PathBuf,
    },

    /// Hold out a random sample of a parallel corpus
    Split {
        #[arg(long)]
        source: Option<PathBuf>,

        #[arg(long)]
        target: Option<PathBuf>,

        #[arg(long)]
        tsv: Option<PathBuf>,

        /// Held-out pair count
        #[arg(long)]
        size: usize,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// Writes <prefix>.{train,heldout}.{src,tgt} and <prefix>.meta.json
        #[arg(long)]
        output_prefix: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CopyAnchorArg {
    Reference,
    Source,
}

#[derive(Clone, Copy, ValueEnum)]
enum OverlapArg {
    Jaccard,
    AnchorCoverage,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Mean token counts per system
    Length {
        /// Repeatable name=path corpus arguments
        #[arg(long = "corpus", value_name = "NAME=PATH", required = true)]
        corpora: Vec<String>,

        #[arg(long)]
        output_prefix: PathBuf,
    },

    /// Token probabilities bucketed by training frequency
    Freq {
        /// Training target corpus, one sentence per line
        #[arg(long)]
        train: PathBuf,

        /// Translations to analyze, one sentence per line
        #[arg(long)]
        translations: PathBuf,

        /// `decade` or comma-separated ascending boundaries starting at 1
        #[arg(long, default_value = "decade")]
        buckets: String,

        #[arg(long)]
        output_prefix: PathBuf,
    },

    /// Copy rates and utilities across pools and selections
    Copies {
        #[arg(long)]
        pools: PathBuf,

        #[arg(long)]
        decodes: PathBuf,

        #[command(flatten)]
        utility: UtilityFlags,

        /// Use the utility recorded in the decode file instead of --utility
        #[arg(long)]
        utility_from_decodes: bool,

        /// Side the copy detector compares against
        #[arg(long, value_enum, default_value_t = CopyAnchorArg::Reference)]
        copy_anchor: CopyAnchorArg,

        /// Strict lower bound on token overlap for a copy
        #[arg(long, default_value_t = COPY_THRESHOLD)]
        copy_threshold: f64,

        /// Overlap definition
        #[arg(long, value_enum, default_value_t = OverlapArg::Jaccard)]
        overlap: OverlapArg,

        #[arg(long)]
        output_prefix: PathBuf,
    },

    /// Hallucination rates and utilities across pools and selections
    Hallucinations {
        #[arg(long)]
        pools: PathBuf,

        #[arg(long)]
        decodes: PathBuf,

        #[command(flatten)]
        utility: UtilityFlags,

        /// Use the utility recorded in the decode file instead of --utility
        #[arg(long)]
        utility_from_decodes: bool,

        /// chrF2 threshold below which a translation is a hallucination
        #[arg(long, default_value_t = HALLUCINATION_THRESHOLD)]
        halluc_threshold: f64,

        #[arg(long)]
        output_prefix: PathBuf,
    },
}

fn parse_grid(spec: &str) -> Result<Vec<usize>> {
    if let Some((start, rest)) = spec.split_once(':') {
        let (end, step) = rest
            .split_once(':')
            .context("grid range must be start:end:step")?;
        let start: usize = start.trim().parse().context("grid start")?;
        let end: usize = end.trim().parse().context("grid end")?;
        let step: usize = step.trim().parse().context("grid step")?;
        if step == 0 || start == 0 || end < start {
            bail!("invalid grid range `{spec}`");
        }
        return Ok((start..=end).step_by(step).collect());
    }
    let grid: Vec<usize> = spec
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("grid value `{s}`")))
        .collect::<Result<_>>()?;
    if grid.is_empty() || grid.contains(&0) {
        bail!("invalid grid `{spec}`");
    }
    Ok(grid)
}

fn parse_corpora(specs: &[String]) -> Result<Vec<(String, PathBuf)>> {
    specs
        .iter()
        .map(|spec| {
            let (name, path) = spec
                .split_once('=')
                .with_context(|| format!("corpus `{spec}` must be NAME=PATH"))?;
            Ok((name.to_owned(), PathBuf::from(path)))
        })
        .collect()
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Decode {
            pools,
            utility,
            num_samples,
            seed,
            output,
            summary,
            evaluate,
        } => {
            let report = cmd_decode(&DecodeArgs {
                pools,
                utility: utility.selection(),
                num_samples,
                seed,
                output,
                summary,
                evaluate,
            })?;
            if report.degenerate_pairs > 0 {
                eprintln!(
                    "warning: {} pairs scored 0 because a candidate was empty",
                    report.degenerate_pairs
                );
            }
            println!(
                "decoded {} pools with {} (seed {})",
                report.pools, report.utility, report.seed
            );
            if let Some(evaluation) = &report.evaluation {
                for (metric, value) in evaluation {
                    println!("{metric}\t{value}");
                }
            }
        }
        Command::Curve {
            pools,
            utility,
            grid,
            reps,
            seed,
            output,
            summary,
        } => {
            let grid = parse_grid(&grid)?;
            cmd_curve(&CurveArgs {
                pools,
                utility: utility.selection(),
                grid,
                reps,
                seed,
                output: output.clone(),
                summary,
            })?;
            println!("wrote {}", output.display());
        }
        Command::Score { hyps, refs, metric } => {
            let report = cmd_score(&ScoreArgs { hyps, refs, metric })?;
            println!("{}\t{}\t{}", report.metric, report.signature, report.score);
        }
        Command::Analyze { what } => match what {
            AnalyzeCommand::Length {
                corpora,
                output_prefix,
            } => {
                cmd_analyze_length(&LengthArgs {
                    corpora: parse_corpora(&corpora)?,
                    output_prefix: output_prefix.clone(),
                })?;
                println!("wrote {}.tsv and {}.json", output_prefix.display(), output_prefix.display());
            }
            AnalyzeCommand::Freq {
                train,
                translations,
                buckets,
                output_prefix,
            } => {
                cmd_analyze_freq(&FreqArgs {
                    train,
                    translations,
                    buckets,
                    output_prefix: output_prefix.clone(),
                })?;
                println!("wrote {}.tsv and {}.json", output_prefix.display(), output_prefix.display());
            }
            AnalyzeCommand::Copies {
                pools,
                decodes,
                utility,
                utility_from_decodes,
                copy_anchor,
                copy_threshold,
                overlap,
                output_prefix,
            } => {
                let report = cmd_analyze_pathology(
                    PathologyKind::Copy,
                    &PathologyArgs {
                        pools,
                        decodes,
                        utility: (!utility_from_decodes).then(|| utility.selection()),
                        copy_anchor: match copy_anchor {
                            CopyAnchorArg::Reference => CopyAnchor::Reference,
                            CopyAnchorArg::Source => CopyAnchor::Source,
                        },
                        copy_threshold,
                        halluc_threshold: HALLUCINATION_THRESHOLD,
                        overlap: match overlap {
                            OverlapArg::Jaccard => OverlapMode::Jaccard,
                            OverlapArg::AnchorCoverage => OverlapMode::AnchorCoverage,
                        },
                        output_prefix: output_prefix.clone(),
                    },
                )?;
                println!(
                    "copies: {}/{} flagged in pools, {}/{} in selections",
                    report.flagged_samples,
                    report.total_samples,
                    report.flagged_selections,
                    report.total_selections
                );
            }
            AnalyzeCommand::Hallucinations {
                pools,
                decodes,
                utility,
                utility_from_decodes,
                halluc_threshold,
                output_prefix,
            } => {
                let report = cmd_analyze_pathology(
                    PathologyKind::Hallucination,
                    &PathologyArgs {
                        pools,
                        decodes,
                        utility: (!utility_from_decodes).then(|| utility.selection()),
                        copy_anchor: CopyAnchor::Reference,
                        copy_threshold: COPY_THRESHOLD,
                        halluc_threshold,
                        overlap: OverlapMode::Jaccard,
                        output_prefix: output_prefix.clone(),
                    },
                )?;
                println!(
                    "hallucinations: {}/{} flagged in pools, {}/{} in selections",
                    report.flagged_samples,
                    report.total_samples,
                    report.flagged_selections,
                    report.total_selections
                );
            }
        },
        Command::Noise {
            source,
            target,
            tsv,
            p,
            exact,
            seed,
            output_prefix,
        } => {
            let summary = cmd_noise(&NoiseArgs {
                source,
                target,
                tsv,
                probability: p,
                exact,
                seed,
                output_prefix: output_prefix.clone(),
            })?;
            println!(
                "tagged {}/{} pairs as copies (p = {}, seed {})",
                summary.tagged, summary.pairs, summary.probability, summary.seed
            );
        }
        Command::Split {
            source,
            target,
            tsv,
            size,
            seed,
            output_prefix,
        } => {
            let (train, heldout) = cmd_split(&SplitArgs {
                source,
                target,
                tsv,
                size,
                seed,
                output_prefix: output_prefix.clone(),
            })?;
            println!("split into {train} train / {heldout} heldout pairs");
        }
    }
    Ok(())
}

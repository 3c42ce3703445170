//! End-to-end tests of the command pipelines through the library
//! surface the binary dispatches to.

use std::fs;
use std::path::{Path, PathBuf};

use mbr_cli::commands::{
    cmd_analyze_freq, cmd_analyze_length, cmd_analyze_pathology, cmd_curve, cmd_decode, cmd_noise,
    cmd_score, cmd_split, CurveArgs, DecodeArgs, FreqArgs, LengthArgs, NoiseArgs, PathologyArgs,
    ScoreArgs, SplitArgs, UtilitySelection,
};
use mbr_cli::records::{read_decodes, read_pools, write_pools};
use mbr_core::analysis::{CopyAnchor, OverlapMode, PathologyKind};
use mbr_core::mbr::SamplePool;

fn utility(preset: &str) -> UtilitySelection {
    UtilitySelection {
        preset: preset.to_owned(),
        symmetric: false,
        function_words: None,
    }
}

fn pool(id: &str, samples: &[&str], reference: Option<&str>) -> SamplePool {
    SamplePool {
        id: id.to_owned(),
        source: format!("source of {id}"),
        reference: reference.map(str::to_owned),
        samples: samples.iter().map(|s| s.to_string()).collect(),
        beam: None,
    }
}

fn write_pool_file(dir: &Path, pools: &[SamplePool]) -> PathBuf {
    let path = dir.join("pools.jsonl");
    write_pools(&path, pools).unwrap();
    path
}

#[test]
fn decode_selects_the_worked_example_and_echoes_singletons() {
    let dir = tempfile::tempdir().unwrap();
    let pools = vec![
        pool("worked", &["a b", "a b", "a c"], Some("a b")),
        pool("single", &["only sample"], Some("only sample")),
    ];
    let pool_path = write_pool_file(dir.path(), &pools);
    let out = dir.path().join("out.jsonl");
    let summary = cmd_decode(&DecodeArgs {
        pools: pool_path,
        utility: utility("unigram-f1"),
        num_samples: None,
        seed: 0,
        output: out.clone(),
        summary: Some(dir.path().join("summary.json")),
        evaluate: true,
    })
    .unwrap();

    let records = read_decodes(&out).unwrap();
    assert_eq!(records[0].result.selected_text, "a b");
    assert_eq!(records[0].result.selected_index, 0);
    assert_eq!(records[1].result.selected_text, "only sample");

    let evaluation = summary.evaluation.expect("references present");
    assert!(evaluation["chrf2"] > 0.9); // selections match references
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn decode_rejects_oversized_explicit_subsamples_and_empty_files() {
    let dir = tempfile::tempdir().unwrap();
    let pool_path = write_pool_file(dir.path(), &[pool("tiny", &["a", "b"], None)]);
    let err = cmd_decode(&DecodeArgs {
        pools: pool_path,
        utility: utility("chrf-1"),
        num_samples: Some(5),
        seed: 0,
        output: dir.path().join("o.jsonl"),
        summary: None,
        evaluate: false,
    })
    .unwrap_err();
    assert!(format!("{err:#}").contains("tiny"), "{err:#}");

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let err = cmd_decode(&DecodeArgs {
        pools: empty,
        utility: utility("chrf-1"),
        num_samples: None,
        seed: 0,
        output: dir.path().join("o.jsonl"),
        summary: None,
        evaluate: false,
    })
    .unwrap_err();
    assert!(format!("{err:#}").contains("no records"), "{err:#}");
}

#[test]
fn decode_requires_references_only_when_evaluation_is_forced() {
    let dir = tempfile::tempdir().unwrap();
    let pool_path = write_pool_file(dir.path(), &[pool("noref", &["x", "y"], None)]);
    let args = DecodeArgs {
        pools: pool_path,
        utility: utility("chrf-1"),
        num_samples: None,
        seed: 0,
        output: dir.path().join("o.jsonl"),
        summary: None,
        evaluate: false,
    };
    let summary = cmd_decode(&args).unwrap();
    assert!(summary.evaluation.is_none());

    let err = cmd_decode(&DecodeArgs {
        evaluate: true,
        output: dir.path().join("o2.jsonl"),
        ..args
    })
    .unwrap_err();
    assert!(format!("{err:#}").contains("noref"), "{err:#}");
}

#[test]
fn curve_reruns_byte_identically_and_collapses_variance_on_full_grids() {
    let dir = tempfile::tempdir().unwrap();
    let pools: Vec<SamplePool> = (0..3)
        .map(|i| {
            pool(
                &format!("p{i}"),
                &["the cat sat", "the cat sat down", "a cat sat", "the dog sat", "cats sit"],
                Some("the cat sat"),
            )
        })
        .collect();
    let pool_path = write_pool_file(dir.path(), &pools);

    let run = |tag: &str, grid: Vec<usize>, reps: usize| -> (PathBuf, PathBuf) {
        let rows = dir.path().join(format!("rows-{tag}.tsv"));
        let summary = dir.path().join(format!("summary-{tag}.tsv"));
        cmd_curve(&CurveArgs {
            pools: pool_path.clone(),
            utility: utility("chrf-1"),
            grid,
            reps,
            seed: 99,
            output: rows.clone(),
            summary: Some(summary.clone()),
        })
        .unwrap();
        (rows, summary)
    };

    let (rows_a, summary_a) = run("a", vec![2, 5], 2);
    let (rows_b, summary_b) = run("b", vec![2, 5], 2);
    assert_eq!(fs::read(&rows_a).unwrap(), fs::read(&rows_b).unwrap());
    assert_eq!(fs::read(&summary_a).unwrap(), fs::read(&summary_b).unwrap());

    let (_, summary_full) = run("full", vec![5], 3);
    for line in fs::read_to_string(&summary_full).unwrap().lines() {
        if line.starts_with('#') || line.starts_with("size") {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields[3], "0", "nonzero std in {line}");
    }
}

#[test]
fn curve_names_the_pool_that_cannot_fill_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let pool_path = write_pool_file(
        dir.path(),
        &[
            pool("big", &["a", "b", "c", "d"], Some("a")),
            pool("small", &["a", "b"], Some("a")),
        ],
    );
    let err = cmd_curve(&CurveArgs {
        pools: pool_path,
        utility: utility("chrf-1"),
        grid: vec![4],
        reps: 1,
        seed: 0,
        output: dir.path().join("rows.tsv"),
        summary: None,
    })
    .unwrap_err();
    assert!(format!("{err:#}").contains("small"), "{err:#}");
}

#[test]
fn score_handles_identity_mismatch_and_toy_oracle_values() {
    let dir = tempfile::tempdir().unwrap();
    let hyps = dir.path().join("hyps.txt");
    let refs = dir.path().join("refs.txt");
    fs::write(&hyps, "the cat sat on the mat\nhello beautiful world today\n").unwrap();
    fs::write(&refs, "the cat sat on the mat\nhello beautiful world today\n").unwrap();
    for metric in ["bleu", "chrf1", "chrf2", "chrf3"] {
        let report = cmd_score(&ScoreArgs {
            hyps: hyps.clone(),
            refs: refs.clone(),
            metric: metric.to_owned(),
        })
        .unwrap();
        assert_eq!(report.score, 1.0, "{metric}");
        assert!(!report.signature.is_empty());
    }

    fs::write(&refs, "the cat sat\n").unwrap();
    let err = cmd_score(&ScoreArgs {
        hyps: hyps.clone(),
        refs: refs.clone(),
        metric: "bleu".to_owned(),
    })
    .unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains('2') && msg.contains('1'), "{msg}");

    // frozen from the independent corpus-count oracle
    let toy_hyps = dir.path().join("toy-hyps.txt");
    let toy_refs = dir.path().join("toy-refs.txt");
    fs::write(
        &toy_hyps,
        "the cat sat on the mat\ndogs bark loudly at night\nhello beautiful world today\n",
    )
    .unwrap();
    fs::write(
        &toy_refs,
        "the cat sat on the mat quietly\ndogs bark loudly\nhello there beautiful world today\n",
    )
    .unwrap();
    let bleu = cmd_score(&ScoreArgs {
        hyps: toy_hyps.clone(),
        refs: toy_refs.clone(),
        metric: "bleu".to_owned(),
    })
    .unwrap();
    assert!((bleu.score - 0.6822570396306888).abs() < 1e-12);
    let chrf2 = cmd_score(&ScoreArgs {
        hyps: toy_hyps,
        refs: toy_refs,
        metric: "chrf2".to_owned(),
    })
    .unwrap();
    assert!((chrf2.score - 0.7648528884724576).abs() < 1e-12);
}

#[test]
fn analyze_length_writes_both_report_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let ref_path = dir.path().join("refs.txt");
    let hyp_path = dir.path().join("hyps.txt");
    fs::write(&ref_path, "a b\na b c d\n").unwrap();
    fs::write(&hyp_path, "a b c\n").unwrap();
    let prefix = dir.path().join("length");
    cmd_analyze_length(&LengthArgs {
        corpora: vec![
            ("reference".to_owned(), ref_path),
            ("system".to_owned(), hyp_path),
        ],
        output_prefix: prefix.clone(),
    })
    .unwrap();

    let tsv = fs::read_to_string(prefix.with_extension("tsv")).unwrap();
    let data: Vec<&str> = tsv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "system\tmean_tokens\tsentences");
    assert_eq!(data[1], "reference\t3\t2");
    assert_eq!(data[2], "system\t3\t1");
    assert!(prefix.with_extension("json").exists());
}

#[test]
fn analyze_freq_is_self_consistent_on_the_training_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.txt");
    fs::write(&train, "the cat sat\nthe dog sat\nthe bird flew\n").unwrap();
    let prefix = dir.path().join("freq");
    cmd_analyze_freq(&FreqArgs {
        train: train.clone(),
        translations: train,
        buckets: "decade".to_owned(),
        output_prefix: prefix.clone(),
    })
    .unwrap();
    let tsv = fs::read_to_string(prefix.with_extension("tsv")).unwrap();
    for line in tsv.lines().filter(|l| !l.starts_with('#') && !l.starts_with("bucket")) {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields[3], fields[4], "train and translation probabilities differ: {line}");
    }
}

#[test]
fn analyze_pathologies_reproduce_the_constructed_pool_example() {
    let dir = tempfile::tempdir().unwrap();
    // one character-disjoint sample among mutually similar ones
    let pools: Vec<SamplePool> = (0..4)
        .map(|i| {
            let mut p = pool(
                &format!("p{i}"),
                &["abc abd", "abc abe", "abd abe", "qqq qxq"],
                Some("abc abd"),
            );
            p.source = "abc abd".to_owned();
            p
        })
        .collect();
    let pool_path = write_pool_file(dir.path(), &pools);
    let decode_path = dir.path().join("decodes.jsonl");
    cmd_decode(&DecodeArgs {
        pools: pool_path.clone(),
        utility: utility("chrf-1"),
        num_samples: None,
        seed: 0,
        output: decode_path.clone(),
        summary: None,
        evaluate: false,
    })
    .unwrap();

    let report = cmd_analyze_pathology(
        PathologyKind::Hallucination,
        &PathologyArgs {
            pools: pool_path.clone(),
            decodes: decode_path.clone(),
            utility: None, // taken from the decode records
            copy_anchor: CopyAnchor::Reference,
            copy_threshold: 0.9,
            halluc_threshold: 0.01,
            overlap: OverlapMode::Jaccard,
            output_prefix: dir.path().join("halluc"),
        },
    )
    .unwrap();
    assert_eq!(report.flagged_samples, 4); // one per pool
    assert_eq!(report.flagged_rate_in_selections, 0.0);
    assert!(report.mean_utility_flagged.unwrap() < report.mean_utility_all);

    let report = cmd_analyze_pathology(
        PathologyKind::Copy,
        &PathologyArgs {
            pools: pool_path,
            decodes: decode_path,
            utility: Some(utility("chrf-1")),
            copy_anchor: CopyAnchor::Source,
            copy_threshold: 0.9,
            halluc_threshold: 0.01,
            overlap: OverlapMode::Jaccard,
            output_prefix: dir.path().join("copies"),
        },
    )
    .unwrap();
    // the first sample of every pool equals the source
    assert_eq!(report.flagged_samples, 4);
    assert_eq!(report.flagged_rate_in_selections, 1.0);
    assert!(dir.path().join("copies.tsv").exists());
    assert!(dir.path().join("copies.json").exists());
}

#[test]
fn noise_and_split_write_aligned_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("c.src");
    let tgt = dir.path().join("c.tgt");
    let sources: Vec<String> = (0..200).map(|i| format!("source {i}")).collect();
    let targets: Vec<String> = (0..200).map(|i| format!("target {i}")).collect();
    fs::write(&src, sources.join("\n") + "\n").unwrap();
    fs::write(&tgt, targets.join("\n") + "\n").unwrap();

    let prefix = dir.path().join("noised");
    let summary = cmd_noise(&NoiseArgs {
        source: Some(src.clone()),
        target: Some(tgt.clone()),
        tsv: None,
        probability: 0.25,
        exact: true,
        seed: 5,
        output_prefix: prefix.clone(),
    })
    .unwrap();
    assert_eq!(summary.tagged, 50); // exact mode: round(0.25 * 200)

    let tags = fs::read_to_string(dir.path().join("noised.tags")).unwrap();
    let noised_tgt = fs::read_to_string(dir.path().join("noised.tgt")).unwrap();
    for ((tag, line), i) in tags.lines().zip(noised_tgt.lines()).zip(0..) {
        match tag {
            "1" => assert_eq!(line, format!("source {i}")),
            "0" => assert_eq!(line, format!("target {i}")),
            other => panic!("unexpected tag {other}"),
        }
    }

    let split_prefix = dir.path().join("split");
    let (train, heldout) = cmd_split(&SplitArgs {
        source: Some(src),
        target: Some(tgt),
        tsv: None,
        size: 40,
        seed: 6,
        output_prefix: split_prefix.clone(),
    })
    .unwrap();
    assert_eq!((train, heldout), (160, 40));
    let train_src = fs::read_to_string(dir.path().join("split.train.src")).unwrap();
    let held_src = fs::read_to_string(dir.path().join("split.heldout.src")).unwrap();
    assert_eq!(train_src.lines().count(), 160);
    assert_eq!(held_src.lines().count(), 40);
    let mut all: Vec<&str> = train_src.lines().chain(held_src.lines()).collect();
    all.sort();
    let mut expected: Vec<&str> = sources.iter().map(String::as_str).collect();
    expected.sort();
    assert_eq!(all, expected);
}

#[test]
fn pools_written_by_the_tool_parse_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let pools = vec![
        pool("unicode", &["Привет, мир!", "مرحبا"], Some("Привет")),
        pool("quotes", &["he said \"hi\"", "tabs\tinside"], None),
    ];
    let path = write_pool_file(dir.path(), &pools);
    assert_eq!(read_pools(&path).unwrap(), pools);
}

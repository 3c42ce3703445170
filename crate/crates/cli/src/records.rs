//! Line-delimited record IO: sample pools in, decode results out.
//!
//! Pool files hold one JSON record per line, streamable and diff-able.
//! Parse errors name the offending line number.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mbr_core::mbr::{DecodeResult, SamplePool};

/// One decode output row: the pool id plus the decode fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeRecord {
    pub id: String,
    #[serde(flatten)]
    pub result: DecodeResult,
}

/// Reads a pool file, validating ids and sample counts.
pub fn read_pools(path: &Path) -> Result<Vec<SamplePool>> {
    let file = File::open(path).with_context(|| format!("opening pool file {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut pools = Vec::new();
    let mut seen_ids = HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.with_context(|| format!("reading {} line {line_no}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let pool: SamplePool = serde_json::from_str(&line)
            .with_context(|| format!("malformed record at {} line {line_no}", path.display()))?;
        if pool.samples.is_empty() {
            bail!(
                "record `{}` at {} line {line_no} has no samples",
                pool.id,
                path.display()
            );
        }
        if !seen_ids.insert(pool.id.clone()) {
            bail!(
                "duplicate pool id `{}` at {} line {line_no}",
                pool.id,
                path.display()
            );
        }
        pools.push(pool);
    }
    if pools.is_empty() {
        bail!("no records in {}", path.display());
    }
    Ok(pools)
}

/// Writes pools as one JSON record per line.
pub fn write_pools(path: &Path, pools: &[SamplePool]) -> Result<()> {
    let file =
        File::create(path).with_context(|| format!("creating pool file {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    for pool in pools {
        serde_json::to_writer(&mut writer, pool)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_decodes(path: &Path, records: &[DecodeRecord]) -> Result<()> {
    let file =
        File::create(path).with_context(|| format!("creating decode file {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_decodes(path: &Path) -> Result<Vec<DecodeRecord>> {
    let file =
        File::open(path).with_context(|| format!("opening decode file {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.with_context(|| format!("reading {} line {line_no}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DecodeRecord = serde_json::from_str(&line)
            .with_context(|| format!("malformed record at {} line {line_no}", path.display()))?;
        records.push(record);
    }
    if records.is_empty() {
        bail!("no records in {}", path.display());
    }
    Ok(records)
}

/// Reads a plain one-sentence-per-line UTF-8 file.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut lines = Vec::new();
    for line in reader.lines() {
        lines.push(line.with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(lines)
}

pub fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    for line in lines {
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads an aligned parallel corpus from separate source/target files
/// or from a single two-column TSV.
pub fn read_parallel(
    source: Option<&Path>,
    target: Option<&Path>,
    tsv: Option<&Path>,
) -> Result<Vec<(String, String)>> {
    match (source, target, tsv) {
        (Some(src), Some(tgt), None) => {
            let sources = read_lines(src)?;
            let targets = read_lines(tgt)?;
            if sources.len() != targets.len() {
                bail!(
                    "aligned corpus length mismatch: {} has {} lines, {} has {}",
                    src.display(),
                    sources.len(),
                    tgt.display(),
                    targets.len()
                );
            }
            Ok(sources.into_iter().zip(targets).collect())
        }
        (None, None, Some(path)) => {
            let mut pairs = Vec::new();
            for (index, line) in read_lines(path)?.into_iter().enumerate() {
                let (src, tgt) = line.split_once('\t').with_context(|| {
                    format!("{} line {}: expected two tab-separated columns", path.display(), index + 1)
                })?;
                pairs.push((src.to_owned(), tgt.to_owned()));
            }
            Ok(pairs)
        }
        _ => bail!("provide either --source and --target, or --tsv"),
    }
}

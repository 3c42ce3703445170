//! TSV and JSON report emission with self-describing config headers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Ordered key/value pairs describing the resolved run configuration;
/// written as `# key: value` comment lines ahead of the TSV header and
/// as a `config` object in JSON reports.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConfigStamp {
    pub entries: Vec<(String, String)>,
}

impl ConfigStamp {
    pub fn new(tool: &str) -> ConfigStamp {
        let mut stamp = ConfigStamp::default();
        stamp.push("tool", tool);
        stamp.push("generator", mbr_core::seed::GENERATOR_ID);
        stamp
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_owned(), value.to_string()));
        self
    }
}

/// A TSV file: config comments, one header row, then data rows.
pub struct TsvWriter {
    writer: BufWriter<File>,
}

impl TsvWriter {
    pub fn create(path: &Path, stamp: &ConfigStamp, columns: &[&str]) -> Result<TsvWriter> {
        let file =
            File::create(path).with_context(|| format!("creating report {}", path.display()))?;
        let mut writer = BufWriter::new(file);
        for (key, value) in &stamp.entries {
            writeln!(writer, "# {key}: {value}")?;
        }
        writeln!(writer, "{}", columns.join("\t"))?;
        Ok(TsvWriter { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.writer, "{}", fields.join("\t"))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Writes a JSON report `{ "config": {...}, "report": <payload> }`.
pub fn write_json_report<T: Serialize>(path: &Path, stamp: &ConfigStamp, payload: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Report<'a, T> {
        config: Vec<(&'a String, &'a String)>,
        report: &'a T,
    }
    let report = Report {
        config: stamp.entries.iter().map(|(k, v)| (k, v)).collect(),
        report: payload,
    };
    let file =
        File::create(path).with_context(|| format!("creating report {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, &report)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// Formats an f64 with full round-trip precision.
pub fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

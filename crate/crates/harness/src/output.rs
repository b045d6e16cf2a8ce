//! CSV files with a commented provenance header.
//!
//! Layout: `# liddi <command>`, one `# config: ` line per line of the
//! resolved TOML, `# key = value` diagnostics, then the column header row and
//! the data rows.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::config::{parse_raw, ConfigError, ExperimentConfig, RawConfig};

const ECHO_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub meta: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn meta_num(&mut self, key: &str, value: f64) {
        self.meta(key, number(value));
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Shortest round-tripping text, in exponent form for very small or large magnitudes.
pub fn number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-3..1e7).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Writes the provenance block that starts every output file.
pub fn write_preamble<W: Write>(
    out: &mut W,
    command: &str,
    cfg: &ExperimentConfig,
) -> io::Result<()> {
    writeln!(out, "# liddi {command}")?;
    for line in cfg.echo().lines() {
        writeln!(out, "{ECHO_PREFIX}{line}")?;
    }
    Ok(())
}

pub fn write_table(
    path: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    table: &Table,
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_preamble(&mut out, command, cfg)?;
    for (k, v) in &table.meta {
        writeln!(out, "# {k} = {v}")?;
    }
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| number(*v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()
}

/// Recovers the configuration echoed into an output file.
pub fn read_echo(text: &str) -> Result<RawConfig, ConfigError> {
    let body: Vec<&str> = text
        .lines()
        .filter_map(|l| l.strip_prefix(ECHO_PREFIX))
        .collect();
    Ok(parse_raw(&body.join("\n"))?.0)
}

/// Reads the `# key = value` diagnostics of an output file.
pub fn read_meta(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter(|l| !l.starts_with(ECHO_PREFIX))
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

//! CSV tables and the run manifest.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use anyhow::Context;

use crate::config::Config;
use crate::CliError;

pub struct Table {
    pub file: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &'static str, header: &[&'static str]) -> Self {
        Table {
            file,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// What a subcommand produced.
pub struct Outcome {
    pub command: &'static str,
    pub tables: Vec<Table>,
    /// Free-form `key: value` lines for the manifest.
    pub diagnostics: Vec<(String, String)>,
    /// Set when the run completed but its checks failed; outputs are still written.
    pub failure: Option<String>,
}

impl Outcome {
    pub fn new(command: &'static str) -> Self {
        Outcome {
            command,
            tables: Vec::new(),
            diagnostics: Vec::new(),
            failure: None,
        }
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Display) {
        self.diagnostics.push((key.into(), value.to_string()));
    }
}

/// Empty cell for missing values.
pub fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn finish(dir: &Path, cfg: &Config, outcome: &Outcome, elapsed: Duration) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for t in &outcome.tables {
        let path = dir.join(t.file);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&t.header).context("writing csv header")?;
        for r in &t.rows {
            w.write_record(r).context("writing csv row")?;
        }
        w.flush().context("flushing csv")?;
    }

    let path = dir.join("manifest.txt");
    let mut m = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut text = format!(
        "command: {}\nversion: {}\n\n[parameters]\n",
        outcome.command,
        env!("CARGO_PKG_VERSION")
    );
    for (k, v) in cfg.resolved() {
        text.push_str(&format!("{k} = {v}\n"));
    }
    text.push_str("\n[diagnostics]\n");
    for (k, v) in &outcome.diagnostics {
        text.push_str(&format!("{k}: {v}\n"));
    }
    text.push_str("\n[outputs]\n");
    for t in &outcome.tables {
        text.push_str(&format!("{}: {} rows\n", t.file, t.rows.len()));
    }
    text.push_str(&format!("\nwall_clock_seconds: {:.3}\n", elapsed.as_secs_f64()));
    m.write_all(text.as_bytes()).context("writing manifest")?;
    Ok(())
}

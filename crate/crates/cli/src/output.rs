use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use gibbslab::io::{write_ensemble, write_paths_csv, JsonLines};
use gibbslab::reference::Path;
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// What a subcommand hands back for the summary.
#[derive(Debug, Default)]
pub struct Report {
    pub results: Value,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a ExperimentConfig,
    results: &'a Value,
    checks: &'a [Check],
    passed: bool,
    warnings: &'a [String],
    files: &'a [String],
}

/// Artifact writer rooted at the output directory. Every file carries the
/// effective config: the summary as a field, JSON-lines as the first record,
/// CSV as a leading `#` comment.
pub struct Output {
    dir: PathBuf,
    command: String,
    config: ExperimentConfig,
    config_json: String,
    files: Vec<String>,
}

impl Output {
    pub fn new(command: &str, config: &ExperimentConfig) -> Result<Self> {
        let dir = config.output.dir.clone();
        std::fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let config_json = serde_json::to_string(config)?;
        Ok(Self { dir, command: command.into(), config: config.clone(), config_json, files: Vec::new() })
    }

    fn create(&mut self, suffix: &str) -> Result<BufWriter<File>> {
        let name = format!("{}{suffix}", self.command);
        let path = self.dir.join(&name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name);
        Ok(BufWriter::new(file))
    }

    /// Numeric table with a header row.
    pub fn table(&mut self, suffix: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        if !self.config.wants("csv") {
            return Ok(());
        }
        let cfg = self.config_json.clone();
        let mut w = self.create(suffix)?;
        writeln!(w, "# config: {cfg}")?;
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn paths(&mut self, stem: &str, paths: &[Path]) -> Result<()> {
        if paths.is_empty() {
            return Ok(());
        }
        if self.config.wants("csv") {
            let cfg = self.config_json.clone();
            let mut w = self.create(&format!("{stem}.csv"))?;
            writeln!(w, "# config: {cfg}")?;
            write_paths_csv(&mut w, paths)?;
            w.flush()?;
        }
        if self.config.wants("bin") {
            let mut w = self.create(&format!("{stem}.bin"))?;
            write_ensemble(&mut w, paths)?;
            w.flush()?;
        }
        Ok(())
    }

    pub fn records<T: Serialize>(&mut self, suffix: &str, records: &[T]) -> Result<()> {
        if !self.config.wants("jsonl") {
            return Ok(());
        }
        let config = self.config.clone();
        let mut lines = JsonLines::new(self.create(suffix)?);
        lines.write(&serde_json::json!({ "config": config }))?;
        for r in records {
            lines.write(r)?;
        }
        lines.into_inner().flush()?;
        Ok(())
    }

    /// Binary artifact written by `f`; only with the `bin` format.
    pub fn binary(&mut self, suffix: &str, f: impl FnOnce(&mut BufWriter<File>) -> gibbslab::Result<()>) -> Result<()> {
        if !self.config.wants("bin") {
            return Ok(());
        }
        let mut w = self.create(suffix)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `<command>.json` and returns its path.
    pub fn finish(mut self, report: &Report) -> Result<PathBuf> {
        let name = format!("{}.json", self.command);
        self.files.push(name.clone());
        let summary = Summary {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            results: &report.results,
            checks: &report.checks,
            passed: report.checks.iter().all(|c| c.passed),
            warnings: &report.warnings,
            files: &self.files,
        };
        let path = self.dir.join(&name);
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

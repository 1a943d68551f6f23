//! Batch runner for the polyfreq experiments.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod modes_text;

use std::fmt::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use config::{Experiment, RawConfig, RunConfig};

pub const DEFAULT_OUT: &str = "polyfreq-out";

pub struct RunSummary {
    pub experiment: Experiment,
    pub out_dir: PathBuf,
    pub passed: bool,
}

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let raw = RawConfig::read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cfg = RunConfig::from_raw(&raw, base).with_context(|| format!("in {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Result<RunSummary> {
    let out_dir = out.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let outcome = experiments::run(cfg)?;
    let passed = outcome.passed();

    let mut report = String::new();
    writeln!(report, "experiment: {}", cfg.experiment.name())?;
    writeln!(report, "seed: {}", cfg.seed)?;
    writeln!(report)?;
    for r in &outcome.reports {
        writeln!(report, "{r}")?;
    }
    report.push_str(&outcome.text);
    writeln!(report, "\noverall: {}", if passed { "PASS" } else { "FAIL" })?;

    std::fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let report_path = out_dir.join("report.txt");
    std::fs::write(&report_path, report).with_context(|| format!("cannot write {}", report_path.display()))?;
    let csv_path = out_dir.join(format!("{}.csv", cfg.experiment.name()));
    std::fs::write(&csv_path, &outcome.csv).with_context(|| format!("cannot write {}", csv_path.display()))?;
    Ok(RunSummary { experiment: cfg.experiment, out_dir, passed })
}

pub fn list_experiments() -> String {
    let mut s = String::new();
    for e in Experiment::ALL {
        let _ = writeln!(s, "{:<14} {}\n{:<14} covers: {}", e.name(), e.description(), "", e.topics());
    }
    s
}

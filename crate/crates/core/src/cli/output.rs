//! CSV and JSON artifacts.
//!
//! Every CSV has a header row and a fixed column order. Reals are written
//! with six significant digits so repeated runs of the same build produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::config::CliConfig;
use crate::experiment::{Outcome, RunResult, SweepSummary};
use crate::world::StateRecord;

pub const RUN_SERIES_FILE: &str = "run_series.csv";
pub const RUN_RESULT_FILE: &str = "run_result.json";
pub const STATE_DUMP_FILE: &str = "state_dump.csv";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.csv";
pub const SWEEP_META_FILE: &str = "sweep_meta.json";

/// Formats `x` rounded to six significant digits, in the shortest form
/// that reads back as the rounded value.
pub fn fmt_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("scientific float");
    // avoid "-0"
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    rounded.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResultFile {
    pub outcome: Outcome,
    pub decision_step: Option<u64>,
    pub ground_truth_feasible: bool,
    pub correct: Option<bool>,
    pub seed: u64,
    pub final_fraction_feasible: f64,
    pub steps_simulated: u64,
    pub config: CliConfig,
}

impl RunResultFile {
    pub fn new(config: &CliConfig, result: &RunResult) -> Self {
        RunResultFile {
            outcome: result.outcome,
            decision_step: result.decision_step,
            ground_truth_feasible: result.ground_truth_feasible,
            correct: result.correct,
            seed: result.seed,
            final_fraction_feasible: *result.fraction_series.last().expect("series holds step 0"),
            steps_simulated: result.fraction_series.len() as u64 - 1,
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub master_seed: u64,
    pub config: CliConfig,
    pub band_files: Vec<String>,
}

pub fn band_file_name(m: usize) -> String {
    format!("bands_m{m}.csv")
}

pub fn run_series_csv(result: &RunResult) -> String {
    let mut out = String::from("step,fraction_feasible\n");
    for (step, f) in result.fraction_series.iter().enumerate() {
        let _ = writeln!(out, "{step},{}", fmt_sig6(*f));
    }
    out
}

pub fn state_dump_header() -> &'static str {
    "step,id,x,y,phase,opinion,n_obs,m_obs\n"
}

pub fn push_state_rows(out: &mut String, records: impl Iterator<Item = StateRecord>) {
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.step,
            r.id,
            fmt_sig6(r.x),
            fmt_sig6(r.y),
            r.phase,
            r.opinion.as_u8(),
            r.n_obs,
            r.m_obs
        );
    }
}

pub fn sweep_summary_csv(summaries: &[SweepSummary]) -> String {
    let mut out = String::from(
        "m,ratio,pct_feasible,pct_infeasible,pct_no_decision,pct_correct,median_decision_step\n",
    );
    for s in summaries {
        let median = s.median_decision_step.map(fmt_sig6).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.m,
            fmt_sig6(s.ratio),
            fmt_sig6(s.pct_feasible),
            fmt_sig6(s.pct_infeasible),
            fmt_sig6(s.pct_no_decision),
            fmt_sig6(s.pct_correct),
            median
        );
    }
    out
}

pub fn bands_csv(summary: &SweepSummary) -> String {
    let mut out = String::from("step,q1,median,q3\n");
    for (step, b) in summary.bands.iter().enumerate() {
        let _ = writeln!(
            out,
            "{step},{},{},{}",
            fmt_sig6(b.q1),
            fmt_sig6(b.median),
            fmt_sig6(b.q3)
        );
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// I/O failure with the path involved.
#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// Writes `files` (name, contents) into `dir`, creating it if needed.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError {
        path: dir.to_path_buf(),
        source,
    })?;
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| OutputError { path, source })?;
    }
    Ok(())
}

//! Command-line front end: `run` executes one seeded simulation, `sweep`
//! replicates runs across task counts. Both write plot-ready CSV and JSON.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::experiment::{self, ConfigError};
use config::{parse_config, CliConfig, ConfigLayer};
use output::{OutputError, RunResultFile, SweepMeta};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "swarm-feasibility",
    version,
    about = "Collective feasibility decisions in a simulated robot swarm"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a single seeded run
    Run(CommonArgs),
    /// Replicate runs across several task counts
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigLayer,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read config {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::ReadConfig { .. } | CliError::Output(_) => EXIT_IO,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl CommonArgs {
    pub fn load(&self) -> Result<CliConfig, CliError> {
        let contents = match &self.config {
            Some(path) => fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
                path: path.clone(),
                source,
            })?,
            None => String::new(),
        };
        Ok(parse_config(&contents, &self.overrides)?)
    }
}

/// Runs one simulation and writes `run_series.csv` and `run_result.json`
/// (plus `state_dump.csv` when requested).
pub fn cmd_run(config: &CliConfig) -> Result<RunResultFile, CliError> {
    let mut dump = config
        .emit_state_dump
        .then(|| String::from(output::state_dump_header()));
    let result = experiment::run_observed(&config.run, |world| {
        if let Some(buf) = dump.as_mut() {
            output::push_state_rows(buf, world.state_records());
        }
    })?;

    if let Some(step) = result.decision_step {
        let f = result.fraction_series[step as usize];
        if experiment::check_consensus(f, config.run.consensus_threshold) != Some(result.outcome) {
            return Err(CliError::Internal(format!(
                "decision at step {step} does not match fraction {f}"
            )));
        }
    }

    let file = RunResultFile::new(config, &result);
    let mut files = vec![
        (
            output::RUN_SERIES_FILE.to_string(),
            output::run_series_csv(&result),
        ),
        (output::RUN_RESULT_FILE.to_string(), output::to_json(&file)),
    ];
    if let Some(d) = dump {
        files.push((output::STATE_DUMP_FILE.to_string(), d));
    }
    output::write_all(&config.output_directory, &files)?;
    Ok(file)
}

/// Runs the sweep on a pool of `config.parallelism` threads and writes
/// `sweep_summary.csv`, one `bands_m<k>.csv` per task count and
/// `sweep_meta.json`.
pub fn cmd_sweep(config: &CliConfig) -> Result<Vec<experiment::SweepSummary>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let summaries = pool.install(|| {
        experiment::sweep(
            &config.task_counts,
            config.replicates,
            &config.run,
            config.run.seed,
        )
    })?;

    for s in &summaries {
        let total = s.pct_feasible + s.pct_infeasible + s.pct_no_decision;
        if (total - 100.0).abs() > 0.01 {
            return Err(CliError::Internal(format!(
                "outcome shares for m={} sum to {total}",
                s.m
            )));
        }
    }

    let mut files = vec![(
        output::SWEEP_SUMMARY_FILE.to_string(),
        output::sweep_summary_csv(&summaries),
    )];
    let mut band_files = Vec::new();
    for s in &summaries {
        let name = output::band_file_name(s.m);
        // repeated task counts would overwrite the same band file
        if !band_files.contains(&name) {
            files.push((name.clone(), output::bands_csv(s)));
            band_files.push(name);
        }
    }
    let meta = SweepMeta {
        master_seed: config.run.seed,
        config: config.clone(),
        band_files,
    };
    files.push((output::SWEEP_META_FILE.to_string(), output::to_json(&meta)));
    output::write_all(&config.output_directory, &files)?;
    Ok(summaries)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = args.load()?;
            let file = cmd_run(&config)?;
            println!(
                "{} (decision step {}) -> {}",
                file.outcome,
                file.decision_step
                    .map_or_else(|| "none".to_string(), |s| s.to_string()),
                config.output_directory.display()
            );
        }
        Command::Sweep(args) => {
            let config = args.load()?;
            let summaries = cmd_sweep(&config)?;
            print!("{}", output::sweep_summary_csv(&summaries));
        }
    }
    Ok(())
}

/// Parses `args` and runs the selected command, returning the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

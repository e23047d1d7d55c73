//! Effective configuration: defaults, then the TOML file, then flags.
//!
//! The config file is flat TOML using the same key names as the long flags
//! (with `_` in place of `-`), except `tasks`, `out` and `state-dump`, which
//! are spelled `task_counts`, `output_directory` and `emit_state_dump` in
//! the file.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::agent::DmmdParams;
use crate::experiment::{ConfigError, FieldProblem, RunConfig};
use crate::geometry::ArenaSpec;
use crate::world::MotionParams;

/// Task counts swept by default: robot-to-task ratios 10, 5, 2, 1, 0.5,
/// 0.2 and 0.1 with twenty robots.
pub const DEFAULT_TASK_COUNTS: [usize; 7] = [2, 4, 10, 20, 40, 100, 200];
pub const DEFAULT_REPLICATES: usize = 100;

/// One layer of optional settings. Used both for the file contents and for
/// command-line overrides.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    /// Number of robots
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of tasks (single run)
    #[arg(long)]
    pub m: Option<usize>,
    /// Side length of the square arena
    #[arg(long)]
    pub side_length: Option<f64>,
    /// Sensing and communication radius
    #[arg(long, visible_alias = "range")]
    pub observation_range: Option<f64>,
    /// Distance travelled per step
    #[arg(long)]
    pub speed: Option<f64>,
    /// Mean length of a straight walk segment, in steps
    #[arg(long)]
    pub mean_straight_steps: Option<f64>,
    /// Mean exploration phase length, in steps
    #[arg(long)]
    pub mean_exploration_steps: Option<f64>,
    /// Dissemination length scale, in steps
    #[arg(long)]
    pub dissemination_gain_steps: Option<f64>,
    /// Quality used when nothing was observed
    #[arg(long)]
    pub quality_fallback: Option<f64>,
    /// Maximum number of steps per run
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Share of robots that must agree for a decision
    #[arg(long, visible_alias = "threshold")]
    pub consensus_threshold: Option<f64>,
    /// Consecutive steps a decision must hold
    #[arg(long)]
    pub stability_window: Option<u64>,
    /// Run seed (`run`) or master seed (`sweep`)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated task counts to sweep
    #[arg(long = "tasks", value_delimiter = ',')]
    pub task_counts: Option<Vec<usize>>,
    /// Runs per task count
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Output directory
    #[arg(long = "out")]
    pub output_directory: Option<PathBuf>,
    /// Write a per-step, per-agent state dump (`run` only)
    #[arg(long = "state-dump", num_args = 0..=1, default_missing_value = "true")]
    pub emit_state_dump: Option<bool>,
    /// Worker threads for sweeps; 0 uses all cores
    #[arg(long)]
    pub parallelism: Option<usize>,
}

const KNOWN_KEYS: [&str; 18] = [
    "n",
    "m",
    "side_length",
    "observation_range",
    "speed",
    "mean_straight_steps",
    "mean_exploration_steps",
    "dissemination_gain_steps",
    "quality_fallback",
    "horizon",
    "consensus_threshold",
    "stability_window",
    "seed",
    "task_counts",
    "replicates",
    "output_directory",
    "emit_state_dump",
    "parallelism",
];

impl ConfigLayer {
    /// Parses TOML text. Unknown keys are reported by name.
    pub fn from_toml(contents: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = contents
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::single("config", e.message().to_string()))?;
        let unknown: Vec<FieldProblem> = table
            .keys()
            .filter(|k| !KNOWN_KEYS.contains(&k.as_str()))
            .map(|k| FieldProblem {
                field: k.clone(),
                message: "unknown key".to_string(),
            })
            .collect();
        if !unknown.is_empty() {
            return Err(ConfigError { problems: unknown });
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::single("config", e.message().to_string()))
    }

    /// Values set in `other` win.
    pub fn overlay(self, other: &ConfigLayer) -> ConfigLayer {
        let o = other.clone();
        ConfigLayer {
            n: o.n.or(self.n),
            m: o.m.or(self.m),
            side_length: o.side_length.or(self.side_length),
            observation_range: o.observation_range.or(self.observation_range),
            speed: o.speed.or(self.speed),
            mean_straight_steps: o.mean_straight_steps.or(self.mean_straight_steps),
            mean_exploration_steps: o.mean_exploration_steps.or(self.mean_exploration_steps),
            dissemination_gain_steps: o.dissemination_gain_steps.or(self.dissemination_gain_steps),
            quality_fallback: o.quality_fallback.or(self.quality_fallback),
            horizon: o.horizon.or(self.horizon),
            consensus_threshold: o.consensus_threshold.or(self.consensus_threshold),
            stability_window: o.stability_window.or(self.stability_window),
            seed: o.seed.or(self.seed),
            task_counts: o.task_counts.or(self.task_counts),
            replicates: o.replicates.or(self.replicates),
            output_directory: o.output_directory.or(self.output_directory),
            emit_state_dump: o.emit_state_dump.or(self.emit_state_dump),
            parallelism: o.parallelism.or(self.parallelism),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliConfig {
    pub run: RunConfig,
    pub task_counts: Vec<usize>,
    pub replicates: usize,
    pub output_directory: PathBuf,
    pub emit_state_dump: bool,
    pub parallelism: usize,
}

impl CliConfig {
    /// Applies defaults under `layer` and validates the result.
    pub fn resolve(layer: &ConfigLayer) -> Result<Self, ConfigError> {
        let defaults = RunConfig::default();
        let side = layer.side_length.unwrap_or(defaults.arena.side_length());
        let mut problems = Vec::new();
        let arena = match ArenaSpec::new(side) {
            Ok(a) => a,
            Err(_) => {
                problems.push(FieldProblem {
                    field: "side_length".into(),
                    message: format!("must be > 0, got {side}"),
                });
                defaults.arena
            }
        };
        let run = RunConfig {
            n: layer.n.unwrap_or(defaults.n),
            m: layer.m.unwrap_or(defaults.m),
            arena,
            observation_range: layer
                .observation_range
                .unwrap_or(defaults.observation_range),
            dmmd: DmmdParams {
                mean_exploration_steps: layer
                    .mean_exploration_steps
                    .unwrap_or(defaults.dmmd.mean_exploration_steps),
                dissemination_gain_steps: layer
                    .dissemination_gain_steps
                    .unwrap_or(defaults.dmmd.dissemination_gain_steps),
                quality_fallback: layer
                    .quality_fallback
                    .unwrap_or(defaults.dmmd.quality_fallback),
            },
            motion: MotionParams {
                speed: layer.speed.unwrap_or(defaults.motion.speed),
                mean_straight_steps: layer
                    .mean_straight_steps
                    .unwrap_or(defaults.motion.mean_straight_steps),
            },
            horizon: layer.horizon.unwrap_or(defaults.horizon),
            consensus_threshold: layer
                .consensus_threshold
                .unwrap_or(defaults.consensus_threshold),
            stability_window: layer.stability_window.unwrap_or(defaults.stability_window),
            seed: layer.seed.unwrap_or(defaults.seed),
        };
        if let Err(e) = run.validate() {
            problems.extend(e.problems);
        }

        let task_counts = layer
            .task_counts
            .clone()
            .unwrap_or_else(|| DEFAULT_TASK_COUNTS.to_vec());
        if task_counts.is_empty() {
            problems.push(FieldProblem {
                field: "task_counts".into(),
                message: "must list at least one task count".into(),
            });
        }
        let replicates = layer.replicates.unwrap_or(DEFAULT_REPLICATES);
        if replicates < 1 {
            problems.push(FieldProblem {
                field: "replicates".into(),
                message: "must be >= 1, got 0".into(),
            });
        }

        if !problems.is_empty() {
            return Err(ConfigError { problems });
        }
        Ok(CliConfig {
            run,
            task_counts,
            replicates,
            output_directory: layer
                .output_directory
                .clone()
                .unwrap_or_else(|| PathBuf::from("out")),
            emit_state_dump: layer.emit_state_dump.unwrap_or(false),
            parallelism: layer.parallelism.unwrap_or(0),
        })
    }
}

/// Builds the effective configuration from file text and flag overrides.
pub fn parse_config(contents: &str, overrides: &ConfigLayer) -> Result<CliConfig, ConfigError> {
    let file = ConfigLayer::from_toml(contents)?;
    CliConfig::resolve(&file.overlay(overrides))
}

//! Seeded runs, consensus detection and task-count sweeps.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::DmmdParams;
use crate::geometry::ArenaSpec;
use crate::seed::derive_seed;
use crate::world::{MotionParams, WorldState};

/// A single out-of-range or malformed configuration field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldProblem {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub problems: Vec<FieldProblem>,
}

impl ConfigError {
    pub fn single(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            problems: vec![FieldProblem {
                field: field.into(),
                message: message.into(),
            }],
        }
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.problems.iter().map(|p| p.field.as_str())
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid configuration: ")?;
        for (i, p) in self.problems.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", p.field, p.message)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("cannot summarize an empty sample")]
    Empty,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Number of robots.
    pub n: usize,
    /// Number of tasks.
    pub m: usize,
    pub arena: ArenaSpec,
    /// Shared sensing and communication radius.
    pub observation_range: f64,
    pub dmmd: DmmdParams,
    pub motion: MotionParams,
    /// Maximum number of steps before a run is declared undecided.
    pub horizon: u64,
    /// A decision needs strictly more than this share of robots agreeing.
    pub consensus_threshold: f64,
    /// Consecutive steps the same decision must hold before the run stops.
    pub stability_window: u64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 20,
            m: 20,
            arena: ArenaSpec::new(20.0).expect("positive side"),
            observation_range: 2.0,
            dmmd: DmmdParams::default(),
            motion: MotionParams::default(),
            horizon: 2000,
            consensus_threshold: 0.9,
            stability_window: 1,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        let mut bad = |field: &str, message: String| {
            problems.push(FieldProblem {
                field: field.to_string(),
                message,
            })
        };
        if self.n < 1 {
            bad("n", format!("must be >= 1, got {}", self.n));
        }
        let side = self.arena.side_length();
        if !(side.is_finite() && side > 0.0) {
            bad("side_length", format!("must be > 0, got {side}"));
        }
        let d = self.observation_range;
        if !(d.is_finite() && d > 0.0) {
            bad("observation_range", format!("must be > 0, got {d}"));
        }
        let dm = &self.dmmd;
        if !(dm.mean_exploration_steps.is_finite() && dm.mean_exploration_steps > 0.0) {
            bad(
                "mean_exploration_steps",
                format!("must be > 0, got {}", dm.mean_exploration_steps),
            );
        }
        if !(dm.dissemination_gain_steps.is_finite() && dm.dissemination_gain_steps > 0.0) {
            bad(
                "dissemination_gain_steps",
                format!("must be > 0, got {}", dm.dissemination_gain_steps),
            );
        }
        if !(0.0..=1.0).contains(&dm.quality_fallback) {
            bad(
                "quality_fallback",
                format!("must lie in [0, 1], got {}", dm.quality_fallback),
            );
        }
        let mo = &self.motion;
        if !(mo.speed.is_finite() && mo.speed >= 0.0) {
            bad("speed", format!("must be >= 0, got {}", mo.speed));
        }
        if !(mo.mean_straight_steps.is_finite() && mo.mean_straight_steps > 0.0) {
            bad(
                "mean_straight_steps",
                format!("must be > 0, got {}", mo.mean_straight_steps),
            );
        }
        if self.horizon < 1 {
            bad("horizon", "must be >= 1, got 0".to_string());
        }
        let t = self.consensus_threshold;
        if !(t > 0.5 && t <= 1.0) {
            bad(
                "consensus_threshold",
                format!("must lie in (0.5, 1], got {t}"),
            );
        }
        if self.stability_window < 1 {
            bad("stability_window", "must be >= 1, got 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems })
        }
    }

    /// Whether the robots can cover every task, one robot per task.
    pub fn ground_truth_feasible(&self) -> bool {
        self.n >= self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    DecidedFeasible,
    DecidedInfeasible,
    NoDecision,
}

impl Outcome {
    pub fn is_decided(self) -> bool {
        self != Outcome::NoDecision
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Outcome::DecidedFeasible => "DecidedFeasible",
            Outcome::DecidedInfeasible => "DecidedInfeasible",
            Outcome::NoDecision => "NoDecision",
        };
        f.write_str(s)
    }
}

/// Collective decision, if strictly more than `threshold` of the swarm agrees.
pub fn check_consensus(fraction: f64, threshold: f64) -> Option<Outcome> {
    if fraction > threshold {
        Some(Outcome::DecidedFeasible)
    } else if fraction < 1.0 - threshold {
        Some(Outcome::DecidedInfeasible)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Share of feasible opinions; index `k` is the state after `k` steps.
    pub fraction_series: Vec<f64>,
    pub outcome: Outcome,
    pub decision_step: Option<u64>,
    pub ground_truth_feasible: bool,
    pub correct: Option<bool>,
    pub seed: u64,
}

/// Runs one simulation until a decision holds for `stability_window` steps
/// or the horizon is reached.
pub fn run(config: &RunConfig) -> Result<RunResult, ConfigError> {
    run_observed(config, |_| {})
}

/// Like [`run`], calling `observe` with the world after initialization and
/// after every step.
pub fn run_observed<F>(config: &RunConfig, mut observe: F) -> Result<RunResult, ConfigError>
where
    F: FnMut(&WorldState),
{
    let mut world = WorldState::new(config, config.seed)?;
    let n = config.n as f64;
    observe(&world);
    let mut series = Vec::with_capacity(config.horizon as usize + 1);
    series.push(world.feasible_count() as f64 / n);

    let mut pending: Option<(Outcome, u64)> = None;
    let mut decision = None;
    for step in 1..=config.horizon {
        world.advance();
        observe(&world);
        let fraction = world.feasible_count() as f64 / n;
        series.push(fraction);
        match check_consensus(fraction, config.consensus_threshold) {
            Some(outcome) => {
                let streak = match pending {
                    Some((prev, k)) if prev == outcome => k + 1,
                    _ => 1,
                };
                pending = Some((outcome, streak));
                if streak >= config.stability_window {
                    decision = Some((outcome, step));
                    break;
                }
            }
            None => pending = None,
        }
    }

    let ground_truth_feasible = config.ground_truth_feasible();
    let (outcome, decision_step) = match decision {
        Some((o, s)) => (o, Some(s)),
        None => (Outcome::NoDecision, None),
    };
    let correct = match outcome {
        Outcome::DecidedFeasible => Some(ground_truth_feasible),
        Outcome::DecidedInfeasible => Some(!ground_truth_feasible),
        Outcome::NoDecision => None,
    };
    Ok(RunResult {
        fraction_series: series,
        outcome,
        decision_step,
        ground_truth_feasible,
        correct,
        seed: config.seed,
    })
}

/// Linear-interpolation quantile on already sorted data, with the quantile
/// position at `(len - 1) * p`.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Lower quartile, median and upper quartile.
pub fn quartiles(values: &[f64]) -> Result<(f64, f64, f64), StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.5),
        quantile_sorted(&sorted, 0.75),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Aggregates over all replicates sharing one task count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub m: usize,
    pub n: usize,
    pub ratio: f64,
    pub replicates: usize,
    pub pct_feasible: f64,
    pub pct_infeasible: f64,
    pub pct_no_decision: f64,
    pub pct_correct: f64,
    /// Median over decided runs; absent when no run decided.
    pub median_decision_step: Option<f64>,
    /// Per-step quartiles of the feasible share, steps `0..=horizon`.
    pub bands: Vec<Band>,
}

/// Seed of replicate `replicate` at task count `m`.
pub fn replicate_seed(master_seed: u64, m: usize, replicate: usize) -> u64 {
    derive_seed(&[master_seed, m as u64, replicate as u64])
}

/// Summarizes the runs of one task count. Series that stopped early are
/// held at their last value out to the horizon.
pub fn summarize(base: &RunConfig, m: usize, results: &[RunResult]) -> SweepSummary {
    let total = results.len() as f64;
    let pct = |k: usize| 100.0 * k as f64 / total;
    let count = |o: Outcome| results.iter().filter(|r| r.outcome == o).count();

    let mut steps: Vec<f64> = results
        .iter()
        .filter_map(|r| r.decision_step.map(|s| s as f64))
        .collect();
    let median_decision_step = if steps.is_empty() {
        None
    } else {
        steps.sort_by(f64::total_cmp);
        Some(quantile_sorted(&steps, 0.5))
    };

    let len = base.horizon as usize + 1;
    let mut column = Vec::with_capacity(results.len());
    let bands = (0..len)
        .map(|k| {
            column.clear();
            column.extend(results.iter().map(|r| {
                let s = &r.fraction_series;
                s[k.min(s.len() - 1)]
            }));
            column.sort_by(f64::total_cmp);
            Band {
                q1: quantile_sorted(&column, 0.25),
                median: quantile_sorted(&column, 0.5),
                q3: quantile_sorted(&column, 0.75),
            }
        })
        .collect();

    SweepSummary {
        m,
        n: base.n,
        ratio: base.n as f64 / m as f64,
        replicates: results.len(),
        pct_feasible: pct(count(Outcome::DecidedFeasible)),
        pct_infeasible: pct(count(Outcome::DecidedInfeasible)),
        pct_no_decision: pct(count(Outcome::NoDecision)),
        pct_correct: pct(results.iter().filter(|r| r.correct == Some(true)).count()),
        median_decision_step,
        bands,
    }
}

/// Runs `replicates` seeded runs for every task count and summarizes each
/// task count. Runs execute on the current rayon pool; results are gathered
/// in `(m, replicate)` order.
pub fn sweep(
    task_counts: &[usize],
    replicates: usize,
    base: &RunConfig,
    master_seed: u64,
) -> Result<Vec<SweepSummary>, ConfigError> {
    if replicates < 1 {
        return Err(ConfigError::single("replicates", "must be >= 1, got 0"));
    }
    base.validate()?;
    let jobs: Vec<(usize, usize)> = task_counts
        .iter()
        .flat_map(|&m| (0..replicates).map(move |r| (m, r)))
        .collect();
    let results: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(m, r)| {
            let config = RunConfig {
                m,
                seed: replicate_seed(master_seed, m, r),
                ..base.clone()
            };
            run(&config)
        })
        .collect::<Result<_, _>>()?;

    Ok(task_counts
        .iter()
        .zip(results.chunks(replicates))
        .map(|(&m, chunk)| summarize(base, m, chunk))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consensus_rule_is_strict() {
        assert_eq!(check_consensus(0.95, 0.9), Some(Outcome::DecidedFeasible));
        assert_eq!(check_consensus(0.90, 0.9), None);
        assert_eq!(check_consensus(18.0 / 20.0, 0.9), None);
        assert_eq!(
            check_consensus(19.0 / 20.0, 0.9),
            Some(Outcome::DecidedFeasible)
        );
        assert_eq!(check_consensus(0.05, 0.9), Some(Outcome::DecidedInfeasible));
        assert_eq!(check_consensus(2.0 / 20.0, 0.9), None);
        assert_eq!(check_consensus(1.0, 1.0), None);
        assert_eq!(check_consensus(0.0, 1.0), None);
    }

    #[test]
    fn quartile_examples() {
        assert_eq!(quartiles(&[1.0, 2.0, 3.0, 4.0]).unwrap(), (1.75, 2.5, 3.25));
        assert_eq!(quartiles(&[5.0]).unwrap(), (5.0, 5.0, 5.0));
        assert_eq!(quartiles(&[3.0, 1.0, 2.0]).unwrap(), (1.5, 2.0, 2.5));
        assert_eq!(quartiles(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn validation_lists_every_bad_field() {
        let cfg = RunConfig {
            n: 0,
            horizon: 0,
            consensus_threshold: 1.5,
            observation_range: -1.0,
            ..RunConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        let fields: Vec<_> = err.fields().collect();
        assert_eq!(
            fields,
            vec!["n", "observation_range", "horizon", "consensus_threshold"]
        );
        assert!(err.to_string().contains("consensus_threshold"));
    }

    #[test]
    fn threshold_one_never_decides() {
        let cfg = RunConfig {
            consensus_threshold: 1.0,
            horizon: 1,
            seed: 4,
            ..RunConfig::default()
        };
        let r = run(&cfg).unwrap();
        assert_eq!(r.outcome, Outcome::NoDecision);
        assert_eq!(r.decision_step, None);
        assert_eq!(r.correct, None);
        assert_eq!(r.fraction_series.len(), 2);
    }

    #[test]
    fn ground_truth_uses_at_least() {
        let mk = |n, m| RunConfig {
            n,
            m,
            ..RunConfig::default()
        };
        assert!(mk(20, 20).ground_truth_feasible());
        assert!(mk(20, 2).ground_truth_feasible());
        assert!(!mk(20, 21).ground_truth_feasible());
    }

    #[test]
    fn single_replicate_bands_follow_the_series() {
        let base = RunConfig {
            horizon: 50,
            ..RunConfig::default()
        };
        let s = sweep(&[10], 1, &base, 3).unwrap();
        let run = run(&RunConfig {
            m: 10,
            seed: replicate_seed(3, 10, 0),
            ..base
        })
        .unwrap();
        let last = *run.fraction_series.last().unwrap();
        for (k, band) in s[0].bands.iter().enumerate() {
            let v = run.fraction_series.get(k).copied().unwrap_or(last);
            assert_eq!((band.q1, band.median, band.q3), (v, v, v));
        }
    }

    #[test]
    fn zero_replicates_rejected() {
        assert!(sweep(&[2], 0, &RunConfig::default(), 1).is_err());
    }

    #[test]
    fn stability_window_delays_the_decision() {
        let base = RunConfig {
            m: 2,
            seed: 17,
            ..RunConfig::default()
        };
        let quick = run(&base).unwrap();
        let slow = run(&RunConfig {
            stability_window: 5,
            ..base.clone()
        })
        .unwrap();
        if let (Some(a), Some(b)) = (quick.decision_step, slow.decision_step) {
            assert!(b >= a + 4);
            let tail = &slow.fraction_series[(b - 4) as usize..=b as usize];
            let first = check_consensus(tail[0], 0.9);
            assert!(first.is_some());
            assert!(tail.iter().all(|&f| check_consensus(f, 0.9) == first));
        }
    }
}

//! Per-robot decision protocol.
//!
//! Each robot alternates between two phases. While exploring it counts the
//! robots and tasks it sees; at the end of exploration it scores its current
//! opinion from those counts and then advertises the opinion for a duration
//! that grows with the score. At the end of dissemination it adopts the
//! majority among its own opinion and the opinions it heard, clears its
//! memory and starts exploring again.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::TorusPoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("observation recorded while disseminating")]
    ObservedWhileDisseminating,
    #[error("invalid protocol parameter {field}: {reason}")]
    InvalidParam { field: &'static str, reason: String },
}

/// Robot identifier, drawn at random when the world is created.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Binary opinion on whether the task set can be covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Opinion {
    Infeasible = 0,
    Feasible = 1,
}

impl Opinion {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_bool(feasible: bool) -> Self {
        if feasible {
            Opinion::Feasible
        } else {
            Opinion::Infeasible
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationCounters {
    /// Robot sightings accumulated in the current exploration phase.
    pub n_obs: u64,
    /// Task sightings accumulated in the current exploration phase.
    pub m_obs: u64,
}

/// Opinions heard since the last exploration phase began, keyed by sender.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpinionBuffer {
    entries: BTreeMap<AgentId, Opinion>,
}

impl OpinionBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, sender: AgentId) -> Option<Opinion> {
        self.entries.get(&sender).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, Opinion)> + '_ {
        self.entries.iter().map(|(&id, &op)| (id, op))
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    fn insert(&mut self, sender: AgentId, opinion: Opinion) {
        self.entries.insert(sender, opinion);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmmdParams {
    /// Mean exploration length in steps.
    pub mean_exploration_steps: f64,
    /// Dissemination length scale; the mean dissemination length is this
    /// times the opinion quality.
    pub dissemination_gain_steps: f64,
    /// Quality reported when nothing was observed.
    pub quality_fallback: f64,
}

impl Default for DmmdParams {
    fn default() -> Self {
        DmmdParams {
            mean_exploration_steps: 400.0,
            dissemination_gain_steps: 30.0,
            quality_fallback: 0.5,
        }
    }
}

impl DmmdParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(AgentError::InvalidParam {
                    field,
                    reason: format!("must be > 0, got {v}"),
                })
            }
        };
        positive("mean_exploration_steps", self.mean_exploration_steps)?;
        positive("dissemination_gain_steps", self.dissemination_gain_steps)?;
        if !(0.0..=1.0).contains(&self.quality_fallback) {
            return Err(AgentError::InvalidParam {
                field: "quality_fallback",
                reason: format!("must lie in [0, 1], got {}", self.quality_fallback),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseTag {
    Exploring,
    Disseminating,
}

impl fmt::Display for PhaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseTag::Exploring => f.write_str("exploring"),
            PhaseTag::Disseminating => f.write_str("disseminating"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentPhase {
    pub tag: PhaseTag,
    pub remaining_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub position: TorusPoint,
    pub heading: f64,
    pub straight_steps_remaining: u32,
    pub opinion: Opinion,
    pub phase: AgentPhase,
    pub counters: ObservationCounters,
    pub buffer: OpinionBuffer,
}

/// Share of sightings supporting `opinion`: robots for `Feasible`, tasks for
/// `Infeasible`. Falls back to `params.quality_fallback` when nothing was
/// seen.
pub fn quality(opinion: Opinion, counters: ObservationCounters, params: &DmmdParams) -> f64 {
    let total = counters.n_obs + counters.m_obs;
    if total == 0 {
        return params.quality_fallback;
    }
    let support = match opinion {
        Opinion::Feasible => counters.n_obs,
        Opinion::Infeasible => counters.m_obs,
    };
    support as f64 / total as f64
}

/// Inverse-transform draw from an exponential of the given mean, rounded to
/// the nearest step and clamped to at least one step. `u` must lie in `[0, 1)`.
pub fn exponential_steps(mean: f64, u: f64) -> u32 {
    let x = -mean * (1.0 - u).ln();
    let steps = x.round();
    if steps < 1.0 {
        1
    } else if steps >= u32::MAX as f64 {
        u32::MAX
    } else {
        steps as u32
    }
}

pub fn sample_exploration_duration<R: Rng + ?Sized>(params: &DmmdParams, rng: &mut R) -> u32 {
    exponential_steps(params.mean_exploration_steps, rng.gen::<f64>())
}

pub fn sample_dissemination_duration<R: Rng + ?Sized>(
    rho: f64,
    params: &DmmdParams,
    rng: &mut R,
) -> u32 {
    exponential_steps(params.dissemination_gain_steps * rho, rng.gen::<f64>())
}

/// Adds one step's sightings. Repeat sightings count again.
pub fn record_observation(
    counters: ObservationCounters,
    phase: PhaseTag,
    robots_in_range: u64,
    tasks_in_range: u64,
) -> Result<ObservationCounters, AgentError> {
    if phase != PhaseTag::Exploring {
        return Err(AgentError::ObservedWhileDisseminating);
    }
    Ok(ObservationCounters {
        n_obs: counters.n_obs + robots_in_range,
        m_obs: counters.m_obs + tasks_in_range,
    })
}

/// Stores `opinion` for `sender`, replacing any earlier entry. Messages
/// carrying the owner's own id are dropped.
pub fn receive_opinion(
    buffer: &mut OpinionBuffer,
    owner: AgentId,
    sender: AgentId,
    opinion: Opinion,
) {
    if sender != owner {
        buffer.insert(sender, opinion);
    }
}

/// Majority over the own opinion plus one vote per buffered sender. Ties keep
/// the own opinion.
pub fn decide_majority(own: Opinion, buffer: &OpinionBuffer) -> Opinion {
    let feasible = buffer
        .iter()
        .filter(|&(_, op)| op == Opinion::Feasible)
        .count()
        + usize::from(own == Opinion::Feasible);
    let total = buffer.len() + 1;
    let infeasible = total - feasible;
    match feasible.cmp(&infeasible) {
        std::cmp::Ordering::Greater => Opinion::Feasible,
        std::cmp::Ordering::Less => Opinion::Infeasible,
        std::cmp::Ordering::Equal => own,
    }
}

impl AgentState {
    /// Fresh agent in the exploration phase with a sampled duration.
    pub fn new<R: Rng + ?Sized>(
        id: AgentId,
        position: TorusPoint,
        heading: f64,
        straight_steps_remaining: u32,
        opinion: Opinion,
        params: &DmmdParams,
        rng: &mut R,
    ) -> Self {
        AgentState {
            id,
            position,
            heading,
            straight_steps_remaining,
            opinion,
            phase: AgentPhase {
                tag: PhaseTag::Exploring,
                remaining_steps: sample_exploration_duration(params, rng),
            },
            counters: ObservationCounters::default(),
            buffer: OpinionBuffer::new(),
        }
    }

    /// Advances the protocol by one step.
    ///
    /// `received` holds the opinions broadcast this step by disseminating
    /// neighbors. Returns this agent's own broadcast, present exactly when
    /// the agent entered the step in the dissemination phase.
    pub fn tick<R: Rng + ?Sized>(
        &mut self,
        robots_in_range: u64,
        tasks_in_range: u64,
        received: &[(AgentId, Opinion)],
        params: &DmmdParams,
        rng: &mut R,
    ) -> Option<(AgentId, Opinion)> {
        for &(sender, opinion) in received {
            receive_opinion(&mut self.buffer, self.id, sender, opinion);
        }

        self.phase.remaining_steps = self.phase.remaining_steps.saturating_sub(1);
        let phase_over = self.phase.remaining_steps == 0;

        match self.phase.tag {
            PhaseTag::Exploring => {
                self.counters = record_observation(
                    self.counters,
                    self.phase.tag,
                    robots_in_range,
                    tasks_in_range,
                )
                .expect("phase is Exploring");
                if phase_over {
                    let rho = quality(self.opinion, self.counters, params);
                    self.phase = AgentPhase {
                        tag: PhaseTag::Disseminating,
                        remaining_steps: sample_dissemination_duration(rho, params, rng),
                    };
                }
                None
            }
            PhaseTag::Disseminating => {
                let broadcast = (self.id, self.opinion);
                if phase_over {
                    self.opinion = decide_majority(self.opinion, &self.buffer);
                    self.buffer.clear();
                    self.counters = ObservationCounters::default();
                    self.phase = AgentPhase {
                        tag: PhaseTag::Exploring,
                        remaining_steps: sample_exploration_duration(params, rng),
                    };
                }
                Some(broadcast)
            }
        }
    }
}

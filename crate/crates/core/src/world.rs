//! The arena, its tasks and robots, and the synchronous step loop.
//!
//! One step moves every robot, resolves each robot's neighborhood against
//! the post-move positions and the phases held at the start of the step,
//! then runs every robot's protocol tick. Broadcasts made during a step are
//! heard in that same step by every robot within range.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{exponential_steps, AgentId, AgentState, DmmdParams, Opinion, PhaseTag};
use crate::experiment::{ConfigError, RunConfig};
use crate::geometry::{step_along, torus_distance, wrap, ArenaSpec, TorusPoint};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("world has no agents")]
    NoAgents,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub position: TorusPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// Arena units travelled per step.
    pub speed: f64,
    /// Mean length of a straight segment, in steps.
    pub mean_straight_steps: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams {
            speed: 1.0,
            mean_straight_steps: 5.0,
        }
    }
}

/// What one robot perceives during a step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Neighborhood {
    pub robots_in_range: u64,
    pub tasks_in_range: u64,
    pub disseminators_in_range: Vec<(AgentId, Opinion)>,
}

/// One row of the optional per-step state dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRecord {
    pub step: u64,
    pub id: AgentId,
    pub x: f64,
    pub y: f64,
    pub phase: PhaseTag,
    pub opinion: Opinion,
    pub n_obs: u64,
    pub m_obs: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WorldState {
    arena: ArenaSpec,
    agents: Vec<AgentState>,
    tasks: Vec<Task>,
    observation_range: f64,
    motion: MotionParams,
    dmmd: DmmdParams,
    step: u64,
    #[serde(skip)]
    agent_rngs: Vec<ChaCha8Rng>,
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R, arena: ArenaSpec) -> TorusPoint {
    let side = arena.side_length();
    wrap(rng.gen::<f64>() * side, rng.gen::<f64>() * side, arena).expect("uniform draws are finite")
}

/// Advances one robot along its random walk. When the current straight
/// segment is used up, a new heading and segment length are drawn first.
pub fn move_agent<R: Rng + ?Sized>(
    state: &mut AgentState,
    motion: &MotionParams,
    arena: ArenaSpec,
    rng: &mut R,
) {
    if state.straight_steps_remaining == 0 {
        state.heading = rng.gen::<f64>() * TAU;
        state.straight_steps_remaining = exponential_steps(motion.mean_straight_steps, rng.gen());
    }
    state.position = step_along(state.position, state.heading, motion.speed, arena);
    state.straight_steps_remaining -= 1;
}

impl WorldState {
    /// Places `config.n` robots and `config.m` tasks uniformly at random.
    pub fn new(config: &RunConfig, run_seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let arena = config.arena;
        let mut world_rng = seed::world_stream(run_seed);

        let mut tasks: Vec<Task> = Vec::with_capacity(config.m);
        while tasks.len() < config.m {
            let position = uniform_point(&mut world_rng, arena);
            if tasks.iter().all(|t| t.position != position) {
                tasks.push(Task { position });
            }
        }

        let mut agents: Vec<AgentState> = Vec::with_capacity(config.n);
        let mut agent_rngs = Vec::with_capacity(config.n);
        for index in 0..config.n {
            let id = loop {
                let candidate = AgentId(world_rng.gen());
                if agents.iter().all(|a| a.id != candidate) {
                    break candidate;
                }
            };
            let position = uniform_point(&mut world_rng, arena);
            let mut rng = seed::agent_stream(run_seed, index);
            let opinion = Opinion::from_bool(rng.gen_bool(0.5));
            let heading = rng.gen::<f64>() * TAU;
            let straight = exponential_steps(config.motion.mean_straight_steps, rng.gen());
            agents.push(AgentState::new(
                id,
                position,
                heading,
                straight,
                opinion,
                &config.dmmd,
                &mut rng,
            ));
            agent_rngs.push(rng);
        }

        Ok(WorldState {
            arena,
            agents,
            tasks,
            observation_range: config.observation_range,
            motion: config.motion,
            dmmd: config.dmmd,
            step: 0,
            agent_rngs,
        })
    }

    pub fn arena(&self) -> ArenaSpec {
        self.arena
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn observation_range(&self) -> f64 {
        self.observation_range
    }

    /// Mutable access for tests and tooling that need hand-built scenes.
    /// Callers must keep ids distinct and positions wrapped.
    pub fn agents_mut(&mut self) -> &mut [AgentState] {
        &mut self.agents
    }

    pub fn tasks_mut(&mut self) -> &mut Vec<Task> {
        &mut self.tasks
    }

    /// Everything `agent_index` can see with the current positions and phases.
    pub fn neighbors_of(&self, agent_index: usize) -> Neighborhood {
        let me = &self.agents[agent_index];
        let d = self.observation_range;
        let mut hood = Neighborhood::default();
        for (j, other) in self.agents.iter().enumerate() {
            if j == agent_index || torus_distance(me.position, other.position, self.arena) > d {
                continue;
            }
            hood.robots_in_range += 1;
            if other.phase.tag == PhaseTag::Disseminating {
                hood.disseminators_in_range.push((other.id, other.opinion));
            }
        }
        hood.tasks_in_range = self
            .tasks
            .iter()
            .filter(|t| torus_distance(me.position, t.position, self.arena) <= d)
            .count() as u64;
        hood
    }

    /// Advances the whole world by one step.
    pub fn advance(&mut self) {
        for (agent, rng) in self.agents.iter_mut().zip(self.agent_rngs.iter_mut()) {
            move_agent(agent, &self.motion, self.arena, rng);
        }

        // Neighborhoods are resolved before any tick so every robot sees the
        // same phase snapshot.
        let hoods: Vec<Neighborhood> = (0..self.agents.len())
            .map(|i| self.neighbors_of(i))
            .collect();

        for ((agent, rng), hood) in self
            .agents
            .iter_mut()
            .zip(self.agent_rngs.iter_mut())
            .zip(hoods)
        {
            agent.tick(
                hood.robots_in_range,
                hood.tasks_in_range,
                &hood.disseminators_in_range,
                &self.dmmd,
                rng,
            );
        }

        self.step += 1;
    }

    /// Share of robots currently holding the feasible opinion.
    pub fn opinion_fraction(&self) -> Result<f64, WorldError> {
        if self.agents.is_empty() {
            return Err(WorldError::NoAgents);
        }
        Ok(self.feasible_count() as f64 / self.agents.len() as f64)
    }

    pub fn feasible_count(&self) -> usize {
        self.agents
            .iter()
            .filter(|a| a.opinion == Opinion::Feasible)
            .count()
    }

    pub fn state_records(&self) -> impl Iterator<Item = StateRecord> + '_ {
        self.agents.iter().map(move |a| StateRecord {
            step: self.step,
            id: a.id,
            x: a.position.x(),
            y: a.position.y(),
            phase: a.phase.tag,
            opinion: a.opinion,
            n_obs: a.counters.n_obs,
            m_obs: a.counters.m_obs,
        })
    }
}

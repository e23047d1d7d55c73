//! Discrete-time simulator for distributed feasibility assessment in a
//! homogeneous robot swarm.
//!
//! Robots random-walk on a torus, count the robots and tasks they pass, and
//! reach a collective yes/no verdict on whether there are at least as many
//! robots as tasks using a quality-modulated majority protocol.

pub mod agent;
pub mod cli;
pub mod experiment;
pub mod geometry;
pub mod seed;
pub mod world;

pub use agent::{AgentId, AgentState, DmmdParams, ObservationCounters, Opinion, OpinionBuffer};
pub use experiment::{run, sweep, Outcome, RunConfig, RunResult, SweepSummary};
pub use geometry::{ArenaSpec, TorusPoint};
pub use world::{MotionParams, WorldState};

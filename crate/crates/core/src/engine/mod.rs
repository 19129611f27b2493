//! Propensities, the direct-method stochastic simulation loop, and event
//! application for flow reactors and protocells.

mod config;
mod sim;
mod ssa;
mod state;

pub use config::{KineticParams, ReactorConfig, ReactorMode};
pub use sim::{
    run_simulation, EventRecord, EventStats, Observation, RunOptions, Simulator, Trajectory,
};
pub use ssa::{open_unit, ssa_step, step_with, Step, WeightTree};
pub use state::{
    apply_event, mass_action, propensity, reaction_propensity, transport_propensities, Entity,
    EventKind, ReactorState, Transition,
};

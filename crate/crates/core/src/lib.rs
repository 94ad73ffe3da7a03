//! Multi-level agent-based simulation.
//!
//! A simulation is split into *levels*, each a viewpoint with its own
//! discrete time model, environment and agents. Agents and environments act
//! through *influences*; each level commits them to its next consistent
//! state in a *reaction* at the end of its transitory period. Levels read
//! each other only at consistent instants, along a perception graph, and
//! send influences along an influence graph. An agent lying in several
//! levels keeps one global state, revised once per instant for all the
//! levels that open a period at that instant.
//!
//! The main entry points are [`SimulationDefinition::builder`] to describe a
//! model and [`Engine`] (or [`run`]) to execute it. Runs record a [`Trace`]
//! that [`check::check_trace`] verifies against the scheduling rules.

#![allow(clippy::result_large_err)]

pub mod behaviors;
pub mod check;
pub mod cli;
pub mod config;
pub mod engine;
pub mod models;
pub mod plot;
pub mod rng;
pub mod state;
pub mod time;
pub mod trace;

pub use behaviors::{
    AgentBehavior, AgentTemplate, BehaviorError, Context, Disambiguation, EnvironmentNatural,
    GlobalStateReviser, Inert, LevelView, MostRecentConsistent, ReactionModel, Views,
};
pub use engine::{run, Engine, EngineError, RunReport, SimulationBuilder, SimulationDefinition};
pub use state::{
    AgentId, AgentSpec, DynamicState, GlobalDynamicState, Influence, InfluenceId, InfluenceKind,
    InteractionGraphs, LevelDynamicState, LevelId, Model, Outgoing, Stamp, StateError,
    SystemInfluence,
};
pub use time::{
    Consistency, ConsistencyClass, Interval, LevelTimeModel, TimeError, Timestamp,
    TransitoryPeriod, UnionTimeModel,
};
pub use trace::{EventKind, Trace, TraceEvent};

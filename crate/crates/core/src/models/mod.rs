//! Bundled simulations, addressable by name.
//!
//! | name            | levels                    | what it exercises                    |
//! |-----------------|---------------------------|--------------------------------------|
//! | `random-walk`   | `walk` = {0..n}           | plain perceive, decide, react loop   |
//! | `two-level`     | `A` = {0..4}, `B` = {0,2,4} | cross-level routing                |
//! | `three-level`   | periods 1, 2, 3 over [0,6] | joint global state revision         |
//! | `heat-exchange` | `micro` = {0..6}, `macro` = {0,3,6} | environment state, conservation |

use std::collections::BTreeMap;
use std::time::Duration;

use thiserror::Error;

use crate::engine::{Engine, EngineError, SimulationBuilder, SimulationDefinition};
use crate::state::{canonical_pretty, LevelId, Model};
use crate::time::{LevelTimeModel, TimeError, Timestamp, UnionTimeModel};
use crate::trace::Trace;

pub mod heat;
pub mod random_walk;
pub mod three_level;
pub mod two_level;

pub use heat::HeatExchange;
pub use random_walk::RandomWalk;
pub use three_level::ThreeLevel;
pub use two_level::TwoLevel;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture {0:?} (expected one of {names})", names = FIXTURES.join(", "))]
    UnknownFixture(String),
    #[error("bad fixture parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Definition(#[from] EngineError),
}

impl From<TimeError> for FixtureError {
    fn from(e: TimeError) -> Self {
        FixtureError::BadParams(e.to_string())
    }
}

pub const FIXTURES: [&str; 4] = ["random-walk", "two-level", "three-level", "heat-exchange"];

/// Optional knobs; each fixture documents its defaults and rejects the ones
/// it does not use.
#[derive(Debug, Clone, Default)]
pub struct FixtureParams {
    pub agents: Option<usize>,
    /// Length of the random walk.
    pub ticks: Option<u32>,
    /// Initial heat of the heat exchange.
    pub total: Option<i64>,
    /// Replacement time models, one per fixture level, matched by name.
    pub time_models: Option<Vec<LevelTimeModel>>,
    /// Replacement perception graph; complete when absent.
    pub perception: Option<Vec<(LevelId, LevelId)>>,
    /// Replacement influence graph; complete when absent.
    pub influence: Option<Vec<(LevelId, LevelId)>>,
}

/// The fixture's time models, or the overrides reordered like them.
fn time_models(
    params: &FixtureParams,
    defaults: Vec<LevelTimeModel>,
) -> Result<Vec<LevelTimeModel>, FixtureError> {
    let Some(overrides) = &params.time_models else {
        return Ok(defaults);
    };
    let mut by_name: BTreeMap<&LevelId, &LevelTimeModel> = BTreeMap::new();
    for m in overrides {
        if by_name.insert(m.level(), m).is_some() {
            return Err(FixtureError::BadParams(format!("level {} declared twice", m.level())));
        }
    }
    if by_name.len() != defaults.len() || defaults.iter().any(|d| !by_name.contains_key(d.level())) {
        let expected: Vec<&str> = defaults.iter().map(|d| d.level().as_str()).collect();
        return Err(FixtureError::BadParams(format!("levels must be exactly {expected:?}")));
    }
    Ok(defaults.iter().map(|d| by_name[d.level()].clone()).collect())
}

fn graphs<M: Model>(b: &mut SimulationBuilder<M>, params: &FixtureParams) {
    if params.perception.is_none() && params.influence.is_none() {
        b.complete_graphs();
        return;
    }
    for (from, to) in params.perception.iter().flatten() {
        b.perceives(from.clone(), to.clone());
    }
    for (from, to) in params.influence.iter().flatten() {
        b.influences(from.clone(), to.clone());
    }
}

/// A bundled simulation with its payload types erased.
pub enum Fixture {
    RandomWalk(SimulationDefinition<RandomWalk>),
    TwoLevel(SimulationDefinition<TwoLevel>),
    ThreeLevel(SimulationDefinition<ThreeLevel>),
    HeatExchange(SimulationDefinition<HeatExchange>),
}

/// Outcome of a fixture run, with the final state as a canonical document.
#[derive(Debug)]
pub struct FixtureRun {
    pub trace: Trace,
    pub dumps: Vec<(Timestamp, String)>,
    pub final_state: String,
    pub duration: Duration,
}

fn run_erased<M: Model>(def: SimulationDefinition<M>, dump_at: &[Timestamp]) -> Result<FixtureRun, EngineError> {
    let mut engine = Engine::new(def)?;
    engine.dump_at(dump_at.iter().copied())?;
    let report = engine.run()?;
    Ok(FixtureRun {
        final_state: canonical_pretty(&report.final_state),
        trace: report.trace,
        dumps: report.dumps,
        duration: report.duration,
    })
}

impl Fixture {
    pub fn name(&self) -> &'static str {
        match self {
            Fixture::RandomWalk(_) => FIXTURES[0],
            Fixture::TwoLevel(_) => FIXTURES[1],
            Fixture::ThreeLevel(_) => FIXTURES[2],
            Fixture::HeatExchange(_) => FIXTURES[3],
        }
    }

    pub fn time(&self) -> &UnionTimeModel {
        match self {
            Fixture::RandomWalk(d) => d.time(),
            Fixture::TwoLevel(d) => d.time(),
            Fixture::ThreeLevel(d) => d.time(),
            Fixture::HeatExchange(d) => d.time(),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Fixture::RandomWalk(d) => d.set_seed(seed),
            Fixture::TwoLevel(d) => d.set_seed(seed),
            Fixture::ThreeLevel(d) => d.set_seed(seed),
            Fixture::HeatExchange(d) => d.set_seed(seed),
        }
    }

    /// Runs to the final tick, capturing state documents at `dump_at`.
    pub fn run(self, dump_at: &[Timestamp]) -> Result<FixtureRun, EngineError> {
        match self {
            Fixture::RandomWalk(d) => run_erased(d, dump_at),
            Fixture::TwoLevel(d) => run_erased(d, dump_at),
            Fixture::ThreeLevel(d) => run_erased(d, dump_at),
            Fixture::HeatExchange(d) => run_erased(d, dump_at),
        }
    }
}

/// Builds the named fixture. Besides the names in [`FIXTURES`], the
/// CamelCase names `RandomWalk1L`, `TwoLevelAB`, `ThreeLevelRevision` and
/// `HeatExchange` are accepted.
pub fn build_fixture(name: &str, params: &FixtureParams) -> Result<Fixture, FixtureError> {
    Ok(match name {
        "random-walk" | "RandomWalk1L" => Fixture::RandomWalk(random_walk::definition(params)?),
        "two-level" | "TwoLevelAB" => Fixture::TwoLevel(two_level::definition(params)?),
        "three-level" | "ThreeLevelRevision" => Fixture::ThreeLevel(three_level::definition(params)?),
        "heat-exchange" | "HeatExchange" => Fixture::HeatExchange(heat::definition(params)?),
        other => return Err(FixtureError::UnknownFixture(other.to_string())),
    })
}

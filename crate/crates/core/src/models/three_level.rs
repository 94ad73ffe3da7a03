//! One agent lying in three levels whose periods last 1, 2 and 3 over `[0, 6]`.
//!
//! The agent's global state counts how many times it perceived from each
//! level, so the revision schedule can be read back from the final state.
//! Each decision leaves a mark in the level it was taken from.

use std::collections::BTreeMap;

use super::{FixtureError, FixtureParams};
use crate::behaviors::{
    AgentBehavior, AgentTemplate, BehaviorError, Context, GlobalStateReviser, Inert, ReactionModel, Views,
};
use crate::engine::SimulationDefinition;
use crate::state::{LevelDynamicState, LevelId, Model, Outgoing};
use crate::time::LevelTimeModel;

pub const L1: &str = "L1";
pub const L2: &str = "L2";
pub const L3: &str = "L3";
pub const DEFAULT_AGENTS: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeLevel;

impl Model for ThreeLevel {
    /// Marks received.
    type Env = i64;
    type Local = ();
    /// Perceptions per level.
    type Global = BTreeMap<LevelId, i64>;
    type Regular = ();
    /// Marks of the perceiving level at its floor.
    type Perceived = i64;
}

struct Marker;

impl AgentBehavior<ThreeLevel> for Marker {
    fn perceive(&self, ctx: &mut Context, views: &Views<'_, ThreeLevel>) -> Result<i64, BehaviorError> {
        let own = ctx.level.as_ref().expect("behaviors run in a level");
        Ok(views.get(own).map_or(0, |v| v.valuation.env))
    }

    fn decide(
        &self,
        ctx: &mut Context,
        _: &BTreeMap<LevelId, i64>,
        _: &i64,
    ) -> Result<Vec<Outgoing<ThreeLevel>>, BehaviorError> {
        let own = ctx.level.clone().expect("behaviors run in a level");
        Ok(vec![Outgoing::regular(own, ())])
    }
}

struct CountPerceptions;

impl GlobalStateReviser<ThreeLevel> for CountPerceptions {
    fn revise(
        &self,
        _: &mut Context,
        previous: &BTreeMap<LevelId, i64>,
        perceived: &BTreeMap<LevelId, i64>,
    ) -> Result<BTreeMap<LevelId, i64>, BehaviorError> {
        let mut next = previous.clone();
        for level in perceived.keys() {
            *next.entry(level.clone()).or_insert(0) += 1;
        }
        Ok(next)
    }
}

struct CountMarks;

impl ReactionModel<ThreeLevel> for CountMarks {
    fn react(
        &self,
        _: &mut Context,
        transitory: LevelDynamicState<ThreeLevel>,
    ) -> Result<LevelDynamicState<ThreeLevel>, BehaviorError> {
        let (mut next, influences) = transitory.split_for_reaction()?;
        next.valuation.env += influences.iter().filter(|i| i.as_regular().is_some()).count() as i64;
        Ok(next)
    }
}

pub fn definition(params: &FixtureParams) -> Result<SimulationDefinition<ThreeLevel>, FixtureError> {
    let agents = params.agents.unwrap_or(DEFAULT_AGENTS);
    if agents > 1_000 {
        return Err(FixtureError::BadParams(format!("agents must be at most 1000, got {agents}")));
    }
    if params.ticks.is_some() || params.total.is_some() {
        return Err(FixtureError::BadParams("three-level takes only agents".into()));
    }
    let models = super::time_models(
        params,
        vec![
            LevelTimeModel::every(L1, 1, 6)?,
            LevelTimeModel::every(L2, 2, 6)?,
            LevelTimeModel::every(L3, 3, 6)?,
        ],
    )?;
    let mut b = SimulationDefinition::builder();
    let mut template = AgentTemplate::new(CountPerceptions);
    for model in models {
        template = template.with_behavior(model.level().clone(), Marker);
        b.level(model, 0, CountMarks, Inert);
    }
    b.template("observer", template);
    for _ in 0..agents {
        let a = b.agent("observer", BTreeMap::new());
        b.place(a, L1, ()).place(a, L2, ()).place(a, L3, ());
    }
    super::graphs(&mut b, params);
    Ok(b.build()?)
}

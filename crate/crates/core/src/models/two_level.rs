//! Two levels on different clocks: `A` ticks every unit over `[0, 4]`, `B`
//! every two units.
//!
//! Every agent lies in both levels. From `A` it sends one weighted increment
//! to `B` per period; from `B` it pings `A`. Each level's environment keeps a
//! tally of what it received.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FixtureError, FixtureParams};
use crate::behaviors::{
    AgentBehavior, AgentTemplate, BehaviorError, Context, GlobalStateReviser, Inert, ReactionModel, Views,
};
use crate::engine::SimulationDefinition;
use crate::state::{LevelDynamicState, LevelId, Model, Outgoing};
use crate::time::{LevelTimeModel, Timestamp};

pub const A: &str = "A";
pub const B: &str = "B";
pub const DEFAULT_AGENTS: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevel;

/// What a level's environment received so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub count: i64,
    pub weight: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signal {
    Increment(i64),
    Ping,
}

/// One entry per perceived level: which instant was read and its tally.
pub type Reading = Vec<(LevelId, Timestamp, Tally)>;

impl Model for TwoLevel {
    type Env = Tally;
    type Local = ();
    /// Number of revisions so far.
    type Global = i64;
    type Regular = Signal;
    type Perceived = Reading;
}

fn read(views: &Views<'_, TwoLevel>) -> Reading {
    views
        .values()
        .map(|v| (v.level.clone(), v.as_of, v.valuation.env))
        .collect()
}

struct FromA;

impl AgentBehavior<TwoLevel> for FromA {
    fn perceive(&self, _: &mut Context, views: &Views<'_, TwoLevel>) -> Result<Reading, BehaviorError> {
        Ok(read(views))
    }

    fn decide(&self, ctx: &mut Context, _: &i64, _: &Reading) -> Result<Vec<Outgoing<TwoLevel>>, BehaviorError> {
        let weight = ctx.rng.random_range(1..=3);
        Ok(vec![Outgoing::regular(B, Signal::Increment(weight))])
    }
}

struct FromB;

impl AgentBehavior<TwoLevel> for FromB {
    fn perceive(&self, _: &mut Context, views: &Views<'_, TwoLevel>) -> Result<Reading, BehaviorError> {
        Ok(read(views))
    }

    fn decide(&self, _: &mut Context, _: &i64, _: &Reading) -> Result<Vec<Outgoing<TwoLevel>>, BehaviorError> {
        Ok(vec![Outgoing::regular(A, Signal::Ping)])
    }
}

struct CountRevisions;

impl GlobalStateReviser<TwoLevel> for CountRevisions {
    fn revise(
        &self,
        _: &mut Context,
        previous: &i64,
        _: &BTreeMap<LevelId, Reading>,
    ) -> Result<i64, BehaviorError> {
        Ok(previous + 1)
    }
}

struct Count;

impl ReactionModel<TwoLevel> for Count {
    fn react(
        &self,
        _: &mut Context,
        transitory: LevelDynamicState<TwoLevel>,
    ) -> Result<LevelDynamicState<TwoLevel>, BehaviorError> {
        let (mut next, influences) = transitory.split_for_reaction()?;
        for signal in influences.iter().filter_map(|i| i.as_regular()) {
            next.valuation.env.count += 1;
            if let Signal::Increment(w) = signal {
                next.valuation.env.weight += w;
            }
        }
        Ok(next)
    }
}

pub fn definition(params: &FixtureParams) -> Result<SimulationDefinition<TwoLevel>, FixtureError> {
    let agents = params.agents.unwrap_or(DEFAULT_AGENTS);
    if agents > 1_000 {
        return Err(FixtureError::BadParams(format!("agents must be at most 1000, got {agents}")));
    }
    if params.ticks.is_some() || params.total.is_some() {
        return Err(FixtureError::BadParams("two-level takes only agents".into()));
    }
    let mut models = super::time_models(
        params,
        vec![LevelTimeModel::every(A, 1, 4)?, LevelTimeModel::every(B, 2, 4)?],
    )?;
    let mut b = SimulationDefinition::builder();
    let model_b = models.pop().expect("two levels");
    let model_a = models.pop().expect("two levels");
    b.level(model_a, Tally::default(), Count, Inert);
    b.level(model_b, Tally::default(), Count, Inert);
    b.template(
        "messenger",
        AgentTemplate::new(CountRevisions)
            .with_behavior(A, FromA)
            .with_behavior(B, FromB),
    );
    for _ in 0..agents {
        let a = b.agent("messenger", 0);
        b.place(a, A, ()).place(a, B, ());
    }
    super::graphs(&mut b, params);
    Ok(b.build()?)
}

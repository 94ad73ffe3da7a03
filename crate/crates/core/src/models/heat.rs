//! Heat exchange between agents of a fine micro level and an ambient
//! reservoir held by the environment of a coarse macro level.
//!
//! Every transfer is a pair of influences, one debiting and one crediting,
//! aimed at the two levels. Both halves are applied by the time the two
//! levels are consistent together, so the total is the same at every such
//! instant.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FixtureError, FixtureParams};
use crate::behaviors::{
    AgentBehavior, AgentTemplate, BehaviorError, Context, EnvironmentNatural, GlobalStateReviser, Inert,
    ReactionModel, Views,
};
use crate::engine::SimulationDefinition;
use crate::state::{AgentId, DynamicState, LevelDynamicState, LevelId, Model, Outgoing};
use crate::time::LevelTimeModel;

pub const MICRO: &str = "micro";
pub const MACRO: &str = "macro";
pub const DEFAULT_AGENTS: usize = 5;
pub const DEFAULT_TOTAL: i64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatExchange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transfer {
    /// Agent loses heat.
    Emit { agent: AgentId, amount: i64 },
    /// Agent gains heat.
    Absorb { agent: AgentId, amount: i64 },
    /// Reservoir gains heat.
    Deposit(i64),
    /// Reservoir loses heat.
    Drain(i64),
}

impl Model for HeatExchange {
    /// Reservoir content on the macro level, unused on the micro level.
    type Env = i64;
    /// Heat held by an agent.
    type Local = i64;
    type Global = ();
    type Regular = Transfer;
    type Perceived = i64;
}

/// Heat held by agents in the micro level plus the reservoir.
pub fn total_heat(state: &DynamicState<HeatExchange>) -> i64 {
    let agents: i64 = state
        .levels
        .get(&LevelId::from(MICRO))
        .map_or(0, |s| s.valuation.agents.values().sum());
    let reservoir = state.levels.get(&LevelId::from(MACRO)).map_or(0, |s| s.valuation.env);
    agents + reservoir
}

struct Radiator;

impl AgentBehavior<HeatExchange> for Radiator {
    fn perceive(&self, ctx: &mut Context, views: &Views<'_, HeatExchange>) -> Result<i64, BehaviorError> {
        let agent = ctx.agent.expect("agents perceive with an id");
        views
            .get(&LevelId::from(MICRO))
            .and_then(|v| v.valuation.agents.get(&agent).copied())
            .ok_or_else(|| BehaviorError::model(format!("agent {agent} cannot see its own heat")))
    }

    fn decide(&self, ctx: &mut Context, _: &(), heat: &i64) -> Result<Vec<Outgoing<HeatExchange>>, BehaviorError> {
        let agent = ctx.agent.expect("agents decide with an id");
        let amount = ctx.rng.random_range(0..=heat / 4);
        if amount == 0 {
            return Ok(Vec::new());
        }
        Ok(vec![
            Outgoing::regular(MICRO, Transfer::Emit { agent, amount }),
            Outgoing::regular(MACRO, Transfer::Deposit(amount)),
        ])
    }
}

/// The reservoir hands out part of its content to the agents it sees.
struct Release;

impl EnvironmentNatural<HeatExchange> for Release {
    fn natural(&self, ctx: &mut Context, views: &Views<'_, HeatExchange>) -> Result<Vec<Outgoing<HeatExchange>>, BehaviorError> {
        let (Some(reservoir), Some(micro)) = (views.get(&LevelId::from(MACRO)), views.get(&LevelId::from(MICRO))) else {
            return Ok(Vec::new());
        };
        let agents: Vec<AgentId> = micro.valuation.agents.keys().copied().collect();
        if agents.is_empty() {
            return Ok(Vec::new());
        }
        let share = reservoir.valuation.env / (2 * agents.len() as i64);
        let mut out = Vec::new();
        let mut drained = 0;
        for agent in agents {
            let amount = ctx.rng.random_range(0..=share);
            if amount > 0 {
                drained += amount;
                out.push(Outgoing::regular(MICRO, Transfer::Absorb { agent, amount }));
            }
        }
        if drained > 0 {
            out.push(Outgoing::regular(MACRO, Transfer::Drain(drained)));
        }
        Ok(out)
    }
}

struct Keep;

impl GlobalStateReviser<HeatExchange> for Keep {
    fn revise(&self, _: &mut Context, _: &(), _: &BTreeMap<LevelId, i64>) -> Result<(), BehaviorError> {
        Ok(())
    }
}

struct Apply;

impl ReactionModel<HeatExchange> for Apply {
    fn react(
        &self,
        _: &mut Context,
        transitory: LevelDynamicState<HeatExchange>,
    ) -> Result<LevelDynamicState<HeatExchange>, BehaviorError> {
        let (mut next, influences) = transitory.split_for_reaction()?;
        for transfer in influences.iter().filter_map(|i| i.as_regular()) {
            match *transfer {
                Transfer::Emit { agent, amount } | Transfer::Absorb { agent, amount } => {
                    let sign = if matches!(transfer, Transfer::Emit { .. }) { -1 } else { 1 };
                    let heat = next
                        .valuation
                        .agents
                        .get_mut(&agent)
                        .ok_or_else(|| BehaviorError::model(format!("transfer for absent agent {agent}")))?;
                    *heat += sign * amount;
                }
                Transfer::Deposit(amount) => next.valuation.env += amount,
                Transfer::Drain(amount) => next.valuation.env -= amount,
            }
        }
        Ok(next)
    }
}

pub fn definition(params: &FixtureParams) -> Result<SimulationDefinition<HeatExchange>, FixtureError> {
    let agents = params.agents.unwrap_or(DEFAULT_AGENTS);
    let total = params.total.unwrap_or(DEFAULT_TOTAL);
    if agents > 1_000 {
        return Err(FixtureError::BadParams(format!("agents must be at most 1000, got {agents}")));
    }
    if !(0..=1_000_000_000_000).contains(&total) {
        return Err(FixtureError::BadParams(format!("total must lie in 0..=10^12, got {total}")));
    }
    if params.ticks.is_some() {
        return Err(FixtureError::BadParams("heat-exchange takes no ticks".into()));
    }
    let mut models = super::time_models(
        params,
        vec![LevelTimeModel::every(MICRO, 1, 6)?, LevelTimeModel::every(MACRO, 3, 6)?],
    )?;
    let each = total / (agents as i64 + 1);
    let reservoir = total - each * agents as i64;
    let mut b = SimulationDefinition::builder();
    let model_macro = models.pop().expect("two levels");
    let model_micro = models.pop().expect("two levels");
    b.level(model_micro, 0, Apply, Inert);
    b.level(model_macro, reservoir, Apply, Release);
    b.template("body", AgentTemplate::new(Keep).with_behavior(MICRO, Radiator));
    for _ in 0..agents {
        let a = b.agent("body", ());
        b.place(a, MICRO, each);
    }
    super::graphs(&mut b, params);
    Ok(b.build()?)
}

//! One level of independent walkers.
//!
//! Each agent perceives its own position, decides a unit step in a random
//! direction, and the reaction applies every step at the end of the period.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FixtureError, FixtureParams};
use crate::behaviors::{
    AgentBehavior, AgentTemplate, BehaviorError, Context, GlobalStateReviser, Inert, ReactionModel, Views,
};
use crate::engine::SimulationDefinition;
use crate::state::{AgentId, LevelDynamicState, LevelId, Model, Outgoing};
use crate::time::LevelTimeModel;

pub const LEVEL: &str = "walk";
pub const DEFAULT_AGENTS: usize = 10;
pub const DEFAULT_TICKS: u32 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalk;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub agent: AgentId,
    pub delta: i64,
}

impl Model for RandomWalk {
    type Env = ();
    type Local = i64;
    type Global = ();
    type Regular = Step;
    type Perceived = i64;
}

/// The direction an agent draws from its stream for one period.
pub fn draw_step(rng: &mut impl Rng) -> i64 {
    if rng.random_bool(0.5) {
        1
    } else {
        -1
    }
}

struct Walker;

impl AgentBehavior<RandomWalk> for Walker {
    fn perceive(&self, ctx: &mut Context, views: &Views<'_, RandomWalk>) -> Result<i64, BehaviorError> {
        let agent = ctx.agent.expect("agents perceive with an id");
        views[&LevelId::from(LEVEL)]
            .valuation
            .agents
            .get(&agent)
            .copied()
            .ok_or_else(|| BehaviorError::model(format!("agent {agent} missing from its level")))
    }

    fn decide(&self, ctx: &mut Context, _: &(), _: &i64) -> Result<Vec<Outgoing<RandomWalk>>, BehaviorError> {
        let agent = ctx.agent.expect("agents decide with an id");
        let delta = draw_step(&mut ctx.rng);
        Ok(vec![Outgoing::regular(LEVEL, Step { agent, delta })])
    }
}

struct Keep;

impl GlobalStateReviser<RandomWalk> for Keep {
    fn revise(
        &self,
        _: &mut Context,
        _: &(),
        _: &std::collections::BTreeMap<LevelId, i64>,
    ) -> Result<(), BehaviorError> {
        Ok(())
    }
}

struct ApplySteps;

impl ReactionModel<RandomWalk> for ApplySteps {
    fn react(
        &self,
        _: &mut Context,
        transitory: LevelDynamicState<RandomWalk>,
    ) -> Result<LevelDynamicState<RandomWalk>, BehaviorError> {
        let (mut next, influences) = transitory.split_for_reaction()?;
        for influence in &influences {
            let Some(step) = influence.as_regular() else { continue };
            let pos = next
                .valuation
                .agents
                .get_mut(&step.agent)
                .ok_or_else(|| BehaviorError::model(format!("step for absent agent {}", step.agent)))?;
            *pos += step.delta;
        }
        Ok(next)
    }
}

pub fn definition(params: &FixtureParams) -> Result<SimulationDefinition<RandomWalk>, FixtureError> {
    let agents = params.agents.unwrap_or(DEFAULT_AGENTS);
    let ticks = params.ticks.unwrap_or(DEFAULT_TICKS);
    if agents > 10_000 {
        return Err(FixtureError::BadParams(format!("agents must be at most 10000, got {agents}")));
    }
    if !(1..=100_000).contains(&ticks) {
        return Err(FixtureError::BadParams(format!("ticks must lie in 1..=100000, got {ticks}")));
    }
    if params.total.is_some() {
        return Err(FixtureError::BadParams("random-walk takes no total".into()));
    }
    let mut models = super::time_models(
        params,
        vec![LevelTimeModel::every(LEVEL, 1, ticks.into())?],
    )?;
    let mut b = SimulationDefinition::builder();
    b.level(models.remove(0), (), ApplySteps, Inert);
    b.template("walker", AgentTemplate::new(Keep).with_behavior(LEVEL, Walker));
    for _ in 0..agents {
        let a = b.agent("walker", ());
        b.place(a, LEVEL, 0);
    }
    super::graphs(&mut b, params);
    Ok(b.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;

    #[test]
    fn every_walker_moves_one_unit_per_tick() {
        let params = FixtureParams {
            agents: Some(4),
            ticks: Some(12),
            ..Default::default()
        };
        let mut engine = Engine::new(definition(&params).unwrap()).unwrap();
        let level = LevelId::from(LEVEL);
        let mut reactions = 0;
        while !engine.is_finished() {
            let before = engine.consistent(&level).unwrap().clone();
            if engine.time() == engine.definition().time().max() {
                engine.finish().unwrap();
            } else {
                engine.step().unwrap();
            }
            let after = engine.consistent(&level).unwrap();
            if after.consistent_at() != before.consistent_at() {
                reactions += 1;
                for (a, pos) in &after.valuation.agents {
                    assert_eq!((pos - before.valuation.agents[a]).abs(), 1, "agent {a}");
                }
            }
        }
        assert_eq!(reactions, 12);
    }

    #[test]
    fn rejects_out_of_range_params() {
        let empty = FixtureParams {
            ticks: Some(0),
            ..Default::default()
        };
        assert!(matches!(definition(&empty), Err(FixtureError::BadParams(_))));
    }
}

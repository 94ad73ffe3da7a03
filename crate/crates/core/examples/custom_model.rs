//! Writing a model from scratch: an ant colony on a fine `ground` level,
//! counted by a coarse `census` level.
//!
//! Ants eat from a shared food pile (the ground reaction settles who gets
//! what when they ask for more than is left), lay eggs through
//! `AddAgentToSimulation` and die of old age through
//! `RemoveAgentFromSimulation`. The census environment reads the ground and
//! records the population.

use std::collections::BTreeMap;

use levelsim::{
    AgentBehavior, AgentSpec, AgentTemplate, BehaviorError, Context, EnvironmentNatural, GlobalStateReviser, Inert,
    LevelDynamicState, LevelId, LevelTimeModel, Model, Outgoing, ReactionModel, SimulationDefinition,
    SystemInfluence, Views,
};
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
struct Colony;

#[derive(Debug, Clone, PartialEq, Serialize)]
enum Act {
    Eat { ant: levelsim::AgentId, amount: i64 },
    Spend { ant: levelsim::AgentId, amount: i64 },
    Record(usize),
}

impl Model for Colony {
    /// Food on the ground, population in the census.
    type Env = i64;
    /// Energy of an ant.
    type Local = i64;
    /// Age in ticks.
    type Global = u32;
    type Regular = Act;
    /// Own energy and the food left.
    type Perceived = (i64, i64);
}

const GROUND: &str = "ground";
const CENSUS: &str = "census";

struct Ant;

impl AgentBehavior<Colony> for Ant {
    fn perceive(&self, ctx: &mut Context, views: &Views<'_, Colony>) -> Result<(i64, i64), BehaviorError> {
        let ground = &views[&LevelId::from(GROUND)];
        let energy = ground.valuation.agents[&ctx.agent.unwrap()];
        Ok((energy, ground.valuation.env))
    }

    fn decide(&self, ctx: &mut Context, age: &u32, &(energy, food): &(i64, i64)) -> Result<Vec<Outgoing<Colony>>, BehaviorError> {
        let ant = ctx.agent.unwrap();
        if *age >= 6 {
            return Ok(vec![Outgoing::system(GROUND, SystemInfluence::RemoveAgentFromSimulation(ant))]);
        }
        if energy >= 8 {
            let egg = AgentSpec {
                kind: "ant".into(),
                global: 0,
                locals: vec![(GROUND.into(), 3)],
            };
            return Ok(vec![
                Outgoing::system(GROUND, SystemInfluence::AddAgentToSimulation(egg)),
                Outgoing::regular(GROUND, Act::Spend { ant, amount: 5 }),
            ]);
        }
        if food > 0 {
            let amount = ctx.rng.random_range(1..=3);
            return Ok(vec![Outgoing::regular(GROUND, Act::Eat { ant, amount })]);
        }
        Ok(Vec::new())
    }
}

struct Aging;

impl GlobalStateReviser<Colony> for Aging {
    fn revise(&self, _: &mut Context, age: &u32, _: &BTreeMap<LevelId, (i64, i64)>) -> Result<u32, BehaviorError> {
        Ok(age + 1)
    }
}

struct Ground;

impl ReactionModel<Colony> for Ground {
    fn react(&self, _: &mut Context, transitory: LevelDynamicState<Colony>) -> Result<LevelDynamicState<Colony>, BehaviorError> {
        let (mut next, influences) = transitory.split_for_reaction()?;
        // first come, first served: influences arrive in a deterministic order
        for act in influences.iter().filter_map(|i| i.as_regular()) {
            match act {
                Act::Eat { ant, amount } => {
                    let got = (*amount).min(next.valuation.env);
                    next.valuation.env -= got;
                    if let Some(e) = next.valuation.agents.get_mut(ant) {
                        *e += got;
                    }
                }
                Act::Spend { ant, amount } => {
                    if let Some(e) = next.valuation.agents.get_mut(ant) {
                        *e -= amount;
                    }
                }
                Act::Record(_) => return Err(BehaviorError::model("census record sent to the ground")),
            }
        }
        Ok(next)
    }
}

struct Count;

impl EnvironmentNatural<Colony> for Count {
    fn natural(&self, _: &mut Context, views: &Views<'_, Colony>) -> Result<Vec<Outgoing<Colony>>, BehaviorError> {
        let population = views[&LevelId::from(GROUND)].valuation.agents.len();
        Ok(vec![Outgoing::regular(CENSUS, Act::Record(population))])
    }
}

struct Census;

impl ReactionModel<Colony> for Census {
    fn react(&self, _: &mut Context, transitory: LevelDynamicState<Colony>) -> Result<LevelDynamicState<Colony>, BehaviorError> {
        let (mut next, influences) = transitory.split_for_reaction()?;
        for act in influences.iter().filter_map(|i| i.as_regular()) {
            if let Act::Record(n) = act {
                next.valuation.env = *n as i64;
            }
        }
        Ok(next)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut b = SimulationDefinition::<Colony>::builder();
    b.level(LevelTimeModel::every(GROUND, 1, 12)?, 60, Ground, Inert)
        .level(LevelTimeModel::every(CENSUS, 4, 12)?, 0, Census, Count)
        .perceives(GROUND, GROUND)
        .influences(GROUND, GROUND)
        .perceives(CENSUS, GROUND)
        .influences(CENSUS, CENSUS)
        .template("ant", AgentTemplate::new(Aging).with_behavior(GROUND, Ant))
        .seed(9);
    for energy in [2, 5, 7] {
        let ant = b.agent("ant", 0);
        b.place(ant, GROUND, energy);
    }
    let report = levelsim::run(b.build()?)?;

    let ground = &report.final_state.levels[&LevelId::from(GROUND)];
    let census = &report.final_state.levels[&LevelId::from(CENSUS)];
    println!("food left: {}", ground.valuation.env);
    println!("ants alive: {:?}", ground.valuation.agents);
    println!("last census (taken at 8): {}", census.valuation.env);
    let check = levelsim::check::check_trace(&report.trace)?;
    println!("trace: {} events, {} violations", check.events, check.violations.len());
    Ok(())
}

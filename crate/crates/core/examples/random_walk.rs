//! A single level of random walkers: the classic perceive, decide, react loop.

use levelsim::models::random_walk::{self, RandomWalk};
use levelsim::models::FixtureParams;
use levelsim::{run, LevelId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = FixtureParams {
        agents: Some(5),
        ticks: Some(50),
        ..Default::default()
    };
    let mut def = random_walk::definition(&params)?;
    def.set_seed(2024);
    let report = run::<RandomWalk>(def)?;
    let walk = &report.final_state.levels[&LevelId::from(random_walk::LEVEL)];
    for (agent, position) in &walk.valuation.agents {
        println!("agent {agent}: {position:+}");
    }
    println!("{} reactions, {} events", report.reactions(random_walk::LEVEL), report.trace.events.len());
    Ok(())
}

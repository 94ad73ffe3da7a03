//! Micro agents trade heat with a macro reservoir. The total is exact at
//! every instant where both levels are consistent.

use levelsim::models::heat::{self, total_heat, HeatExchange};
use levelsim::models::FixtureParams;
use levelsim::{Consistency, Engine};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = FixtureParams {
        agents: Some(4),
        total: Some(500),
        ..Default::default()
    };
    let mut def = heat::definition(&params)?;
    def.set_seed(5);
    let mut engine = Engine::<HeatExchange>::new(def)?;
    loop {
        let t = engine.time();
        let last = t == engine.definition().time().max();
        if last {
            engine.finish()?;
        } else {
            engine.step()?;
        }
        let state = engine.state();
        let kind = engine.definition().time().classify(t)?.kind;
        let agents: Vec<i64> = state.levels[&heat::MICRO.into()].valuation.agents.values().copied().collect();
        let reservoir = state.levels[&heat::MACRO.into()].valuation.env;
        let note = if kind == Consistency::Consistent {
            format!("total {}", total_heat(&state))
        } else {
            "macro in transit".to_string()
        };
        println!("t={t} agents {agents:?} reservoir {reservoir}: {note}");
        if last {
            break;
        }
    }
    Ok(())
}

//! Two levels on different clocks, stepped one union tick at a time.
//!
//! `B` only reacts every other tick, and increments sent from `A` during
//! `]1,2[` still land in `B`'s period `]0,2[`.

use levelsim::models::two_level::{self, TwoLevel};
use levelsim::models::FixtureParams;
use levelsim::{Engine, LevelId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let def = two_level::definition(&FixtureParams::default())?;
    let mut engine = Engine::<TwoLevel>::new(def)?;
    let (a, b) = (LevelId::from(two_level::A), LevelId::from(two_level::B));
    loop {
        let t = engine.time();
        if t == engine.definition().time().max() {
            engine.finish()?;
        } else {
            engine.step()?;
        }
        let class = engine.definition().time().classify(t)?;
        let show = |l: &LevelId| {
            let s = engine.consistent(l).unwrap();
            format!("{l}@{} {:?}", s.consistent_at().unwrap(), s.valuation.env)
        };
        println!("t={t} {:?}: {} | {}", class.kind, show(&a), show(&b));
        if engine.is_finished() {
            break;
        }
    }
    Ok(())
}

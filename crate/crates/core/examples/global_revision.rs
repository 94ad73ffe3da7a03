//! One agent in three levels with periods 1, 2 and 3: its global state is
//! revised once per instant, from all the levels opening a period there.

use levelsim::models::three_level;
use levelsim::models::FixtureParams;
use levelsim::trace::EventKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = levelsim::run(three_level::definition(&FixtureParams::default())?)?;
    for e in report.trace.events.iter().filter(|e| e.kind == EventKind::GlobalRevision) {
        let levels: Vec<&str> = e.levels.iter().flatten().map(|l| l.as_str()).collect();
        println!("t={} agent {} revised from {levels:?}", e.time, e.agent.unwrap());
    }
    for (agent, counts) in &report.final_state.global.globals {
        println!("agent {agent} perceived {counts:?}");
    }
    Ok(())
}

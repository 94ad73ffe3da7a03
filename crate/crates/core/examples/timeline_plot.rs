//! Text timeline of a run: lanes per level, `|` at consistent ticks, R/P/D
//! for reactions, perceptions and decisions, and the joint revision lane.

use levelsim::models::{build_fixture, FixtureParams};
use levelsim::plot::render_text;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["three-level", "heat-exchange"] {
        let run = build_fixture(name, &FixtureParams::default())?.run(&[])?;
        println!("{name}\n{}", render_text(&run.trace)?);
    }
    Ok(())
}

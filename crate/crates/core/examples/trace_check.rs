//! Record a trace, verify it, then tamper with it and watch the checker object.

use levelsim::check::check_trace;
use levelsim::models::{build_fixture, FixtureParams};
use levelsim::trace::{EventKind, Trace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut fixture = build_fixture("two-level", &FixtureParams::default())?;
    fixture.set_seed(42);
    let run = fixture.run(&[])?;

    let text = run.trace.to_ndjson();
    println!("{} lines of trace, first event:\n{}", text.lines().count(), text.lines().nth(1).unwrap());
    let trace = Trace::read_ndjson(text.as_bytes())?;
    println!("clean trace: {} violations", check_trace(&trace)?.violations.len());

    // let B react one tick late
    let mut late = trace.clone();
    let end = late
        .events
        .iter()
        .position(|e| e.kind == EventKind::ReactionEnd && e.level == Some("B".into()))
        .unwrap();
    late.events[end].time = late.events[end].time.checked_add(levelsim::Timestamp::from_integer(1)).unwrap();
    for v in check_trace(&late)?.violations {
        println!("  {v}");
    }
    Ok(())
}

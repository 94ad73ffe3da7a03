//! Runs a simulation described in TOML, here with a finer clock for `A`.

use levelsim::config::RunConfig;

const CONFIG: &str = r#"
fixture = "two-level"
seed = 3
dump_at = [2]

[params]
agents = 2

[[levels]]
name = "A"
ticks = [0, "1/2", 1, "3/2", 2, 3, 4]

[[levels]]
name = "B"
start = 0
step = 2
end = 4
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::parse(CONFIG)?;
    let run = cfg.build()?.run(&cfg.dump_at)?;
    for level in &run.trace.header.levels {
        let reactions = run.trace.count(levelsim::EventKind::ReactionEnd, Some(level.name.as_str()));
        println!("{}: {reactions} reactions", level.name);
    }
    let (t, doc) = &run.dumps[0];
    println!("state at {t}:\n{doc}");
    Ok(())
}

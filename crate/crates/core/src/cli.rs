//! Command-line front end.
//!
//! ```text
//! levelsim run (--fixture <name> | --config <path>) [--seed <u64>] --trace <path>
//!              [--dump-at <tick>...] [--plot <path>]
//! levelsim check --trace <path>
//! levelsim plot --trace <path> --out <path>
//! ```
//!
//! Exit status: 0 on success, 1 for definition or behavior errors (and for
//! a trace with violations), 2 for I/O failures and malformed traces.
//! Files written are byte-identical for identical inputs; the wall-clock
//! duration only goes to stderr.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::check::check_trace;
use crate::config::{ConfigError, RunConfig};
use crate::models::{build_fixture, Fixture, FixtureParams};
use crate::plot::{render_svg, render_text};
use crate::time::Timestamp;
use crate::trace::{EventKind, Trace, TraceError};

/// Environment variable holding the log filter, e.g. `LEVELSIM_LOG=debug`.
pub const LOG_ENV: &str = "LEVELSIM_LOG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "levelsim", version, about = "Run, check and plot multi-level simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a bundled fixture or a config file and record its trace.
    Run(RunArgs),
    /// Verify the scheduling rules against a recorded trace.
    Check {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Render a trace as a timeline (SVG when `--out` ends in `.svg`, text otherwise).
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Bundled fixture: random-walk, two-level, three-level or heat-exchange.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub fixture: Option<String>,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run seed; defaults to the config's seed, or 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to write the trace (newline-delimited JSON).
    #[arg(long)]
    pub trace: PathBuf,
    /// Union ticks at which to dump the state, as integers or `num/den`.
    /// Each dump goes next to the trace, in `<trace>.state-<num>_<den>.json`.
    #[arg(long = "dump-at", num_args = 1..)]
    pub dump_at: Vec<Timestamp>,
    /// Also render the timeline to this path.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Check { trace } => cmd_check(&trace),
        Command::Plot { trace, out } => cmd_plot(&trace, &out),
    }
}

/// Path of the state dump taken at `t` for a run writing `trace`.
pub fn dump_path(trace: &Path, t: Timestamp) -> PathBuf {
    let mut name = trace.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".state-{}_{}.json", t.numer(), t.denom()));
    trace.with_file_name(name)
}

fn load(args: &RunArgs) -> Result<(Fixture, Vec<Timestamp>), (i32, String)> {
    let (mut fixture, mut dump_at) = match (&args.fixture, &args.config) {
        (Some(name), _) => (
            build_fixture(name, &FixtureParams::default()).map_err(|e| (EXIT_FAILURE, e.to_string()))?,
            Vec::new(),
        ),
        (None, Some(path)) => {
            let cfg = RunConfig::load(path).map_err(|e| match e {
                ConfigError::Io { .. } => (EXIT_IO, e.to_string()),
                e => (EXIT_FAILURE, e.to_string()),
            })?;
            (cfg.build().map_err(|e| (EXIT_FAILURE, e.to_string()))?, cfg.dump_at)
        }
        (None, None) => return Err((EXIT_FAILURE, "give --fixture or --config".into())),
    };
    if let Some(seed) = args.seed {
        fixture.set_seed(seed);
    }
    dump_at.extend(&args.dump_at);
    Ok((fixture, dump_at))
}

fn write_file(path: &Path, contents: &str) -> Result<(), (i32, String)> {
    std::fs::write(path, contents).map_err(|e| (EXIT_IO, format!("cannot write {}: {e}", path.display())))
}

fn plot_to(trace: &Trace, out: &Path) -> Result<(), (i32, String)> {
    let svg = out.extension().is_some_and(|e| e.eq_ignore_ascii_case("svg"));
    let rendered = if svg { render_svg(trace) } else { render_text(trace) };
    write_file(out, &rendered.map_err(|e| (EXIT_IO, e.to_string()))?)
}

fn run_inner(args: &RunArgs) -> Result<(), (i32, String)> {
    let (fixture, dump_at) = load(args)?;
    let name = fixture.name();
    let run = fixture.run(&dump_at).map_err(|e| (EXIT_FAILURE, e.to_string()))?;

    let file = File::create(&args.trace)
        .map_err(|e| (EXIT_IO, format!("cannot create {}: {e}", args.trace.display())))?;
    run.trace
        .write_ndjson(BufWriter::new(file))
        .map_err(|e| (EXIT_IO, e.to_string()))?;
    for (t, doc) in &run.dumps {
        write_file(&dump_path(&args.trace, *t), doc)?;
    }
    if let Some(out) = &args.plot {
        plot_to(&run.trace, out)?;
    }

    println!("fixture {name}, seed {}", run.trace.header.seed);
    for level in &run.trace.header.levels {
        println!(
            "  level {}: {} reactions",
            level.name,
            run.trace.count(EventKind::ReactionEnd, Some(level.name.as_str()))
        );
    }
    for kind in EventKind::ALL {
        println!("  {kind}: {}", run.trace.count(kind, None));
    }
    println!("  events: {}", run.trace.events.len());
    eprintln!("duration: {:?}", run.duration);
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    match run_inner(args) {
        Ok(()) => EXIT_OK,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn read_trace(path: &Path) -> Result<Trace, (i32, String)> {
    let file = File::open(path).map_err(|e| (EXIT_IO, format!("cannot open {}: {e}", path.display())))?;
    Trace::read_ndjson(BufReader::new(file)).map_err(|e: TraceError| (EXIT_IO, e.to_string()))
}

pub fn cmd_check(trace: &Path) -> i32 {
    let result = read_trace(trace).and_then(|t| check_trace(&t).map_err(|e| (EXIT_IO, e.to_string())));
    match result {
        Ok(report) => {
            for v in &report.violations {
                println!("{v}");
            }
            println!("{} events, {} violations", report.events, report.violations.len());
            if report.is_clean() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

pub fn cmd_plot(trace: &Path, out: &Path) -> i32 {
    match read_trace(trace).and_then(|t| plot_to(&t, out)) {
        Ok(()) => EXIT_OK,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

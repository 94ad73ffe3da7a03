use clap::Parser;
use levelsim::cli::{execute, Cli, LOG_ENV};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    std::process::exit(execute(Cli::parse()));
}

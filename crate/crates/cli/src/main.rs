//! `resid`: layout to graph to embeddings to tagger, driven by one config.

mod config;
mod fail;
mod pipeline;
mod report;
mod run_dir;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use fail::{Failure, EXIT_CONFIG};
use pipeline::Pipeline;

#[derive(Parser)]
#[command(name = "resid", version, about = "Resident identification from ambient sensor logs")]
struct Cli {
    /// Worker threads for cross-validation folds (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More logging (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set train.hidden_size=32`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Accessibility graph and access-probability graph from the layout.
    BuildGraph(ConfigArgs),
    /// Random walks and skip-gram node embeddings.
    Embed(ConfigArgs),
    /// Annotated log from a built-in fixture.
    Simulate(ConfigArgs),
    /// Train one model per encoder on a chronological split.
    Train(ConfigArgs),
    /// k-fold cross-validation per encoder.
    Crossval(ConfigArgs),
    /// Consolidated CSV and SVG plots for a run directory.
    Report {
        run_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    let with = |args: &ConfigArgs, f: &dyn Fn(&mut Pipeline) -> Result<(), Failure>| {
        let cfg = RunConfig::load(&args.config, &args.overrides)?;
        let mut p = Pipeline::new(cfg)?;
        f(&mut p)?;
        p.finish()
    };
    match &cli.command {
        Command::BuildGraph(a) => with(a, &|p| p.build_graph().map(drop)),
        Command::Embed(a) => with(a, &|p| p.embed().map(drop)),
        Command::Simulate(a) => with(a, &|p| p.simulate().map(drop)),
        Command::Train(a) => with(a, &|p| p.train()),
        Command::Crossval(a) => with(a, &|p| p.crossval()),
        Command::Report { run_dir } => report::report(run_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RESID_LOG")
        .format(|buf, rec| writeln!(buf, "{} {}", rec.level(), rec.args()))
        .init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be >= 1");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        pool = pool.num_threads(j);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}

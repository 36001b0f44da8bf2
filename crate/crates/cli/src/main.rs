use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, ValueEnum};
use sheetcharge::{run, Error, ExperimentConfig, Subcommand};

/// Fractional Brownian sheet experiments on dyadic grids.
#[derive(Parser)]
#[command(name = "sheetcharge", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Clone, Copy, ValueEnum)]
enum Command {
    Simulate,
    CovarianceCheck,
    BrownianDichotomy,
    FractionalCriteria,
    HolderScan,
    MomentScaling,
    Counterexample,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Simulate => Subcommand::Simulate,
            Command::CovarianceCheck => Subcommand::CovarianceCheck,
            Command::BrownianDichotomy => Subcommand::BrownianDichotomy,
            Command::FractionalCriteria => Subcommand::FractionalCriteria,
            Command::HolderScan => Subcommand::HolderScan,
            Command::MomentScaling => Subcommand::MomentScaling,
            Command::Counterexample => Subcommand::Counterexample,
        }
    }
}

#[derive(Args)]
struct Opts {
    /// JSON config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Replace the config's seed list by this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: Cli) -> Result<(PathBuf, usize), Error> {
    let sub = Subcommand::from(cli.command);
    let mut cfg = ExperimentConfig::load(&cli.opts.config)?;
    if let Some(s) = cli.opts.seed {
        cfg.seeds = vec![s];
    }
    if let Some(out) = cli.opts.out {
        cfg.out = Some(out);
    }
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("sheetcharge-out").join(sub.name()));
    let output = run(sub, &cfg)?;
    output.write_to(&dir)?;
    Ok((dir, output.files.len()))
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok((dir, n)) => {
            println!("wrote {n} files and manifest.json to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e @ (Error::Config(_) | Error::Json(_))) => {
            eprintln!("sheetcharge: invalid config: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("sheetcharge: {e}");
            ExitCode::FAILURE
        }
    }
}

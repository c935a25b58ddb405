mod analytics;
mod config;
mod format;
mod harness;

use clap::{Args, Parser, Subcommand};
use config::{ChannelSpec, GridSpec, RunConfig};
use splitflow::{Error, ErrorClass};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "splitflow", version, about = "Plan and test splitting a workflow across parallel channels")]
struct Cli {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Write output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ModelArgs {
    /// Channel completion profile for the full workflow, in seconds.
    #[arg(long = "channel", value_name = "MU:SIGMA")]
    channels: Vec<ChannelSpec>,
    /// Grid step over f.
    #[arg(long, conflicts_with = "fractions")]
    step: Option<f64>,
    /// Explicit comma-separated f values.
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    /// Absolute quadrature tolerance.
    #[arg(long)]
    abs_tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Mean and variance of the completion time over a grid of f.
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
        /// min-mean, min-variance, mean-plus-k-sigma:K or scalarized:LAMBDA.
        #[arg(long)]
        objective: Option<String>,
    },
    /// Efficient splits over the fraction simplex (two to four channels).
    Frontier {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Monte Carlo estimates over a grid of f.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Fit a channel profile to completion times read one per line from stdin.
    Fit {
        /// Fraction of the workflow the samples were measured at.
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Dual-path loopback transfer experiment.
    Netdemo {
        #[command(subcommand)]
        role: harness::NetRole,
    },
    /// Split-and-combine least-squares experiment.
    Optdemo(harness::OptArgs),
}

fn merge_model(mut config: RunConfig, m: &ModelArgs) -> RunConfig {
    if !m.channels.is_empty() {
        config.channels = m.channels.clone();
    }
    if let Some(step) = m.step {
        config.grid = Some(GridSpec::Step(step));
    }
    if let Some(fs) = &m.fractions {
        config.grid = Some(GridSpec::Values(fs.clone()));
    }
    if let Some(tol) = m.abs_tol {
        config.quadrature.abs_tol = Some(tol);
    }
    config
}

fn open_output(path: Option<&PathBuf>) -> splitflow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> splitflow::Result<()> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.sim.seed = Some(seed);
    }
    let out = || open_output(cli.out.as_ref());
    match &cli.command {
        Command::Analyze { model, objective } => {
            let mut config = merge_model(config, model);
            if objective.is_some() {
                config.objective = objective.clone();
            }
            analytics::analyze(&config, &mut out()?)
        }
        Command::Frontier { model } => analytics::frontier(&merge_model(config, model), &mut out()?),
        Command::Simulate { model, trials } => {
            let mut config = merge_model(config, model);
            if trials.is_some() {
                config.sim.trials = *trials;
            }
            analytics::simulate(&config, &mut out()?)
        }
        Command::Fit { fraction } => analytics::fit(io::stdin().lock(), *fraction, &mut out()?),
        Command::Netdemo { role } => harness::netdemo(role, cli.seed.unwrap_or(0), out),
        Command::Optdemo(args) => harness::optdemo(args, cli.seed.unwrap_or(0), &mut out()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("splitflow: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Numeric => 3,
        ErrorClass::Io => 4,
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vlc_precoding::experiments::{parse_config, run_ber, run_convergence, run_power_map, run_sweep, ExperimentResult};
use vlc_precoding::experiments::ExperimentConfig;
use vlc_precoding::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Omnidirectional precoding experiments for MIMO visible light communication")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Objective value per optimizer iteration, plus the final precoder.
    Convergence(RunArgs),
    /// ARMP of designed vs. random precoders over LED count, spacing or height.
    Sweep(RunArgs),
    /// Monte Carlo OOK bit error rate versus noise variance.
    Ber(RunArgs),
    /// Received power at every work-plane sample point.
    PowerMap(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; defaults to the config's `output` entry.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::InvalidArgument("no output path: pass --out or set `output` in the config".into()))?;
    Ok((cfg, out))
}

fn execute(cli: Cli) -> Result<()> {
    let (args, runner): (&RunArgs, fn(&ExperimentConfig) -> Result<ExperimentResult>) = match &cli.command {
        Command::Convergence(a) => (a, run_convergence),
        Command::Sweep(a) => (a, run_sweep),
        Command::Ber(a) => (a, run_ber),
        Command::PowerMap(a) => (a, run_power_map),
    };
    let (cfg, out) = load(args)?;
    let result = runner(&cfg)?;
    for path in result.write(&out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "config-parse" | "config-validation" | "invalid-argument" => 2,
        "numerical" => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}

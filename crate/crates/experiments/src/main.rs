use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use noma_experiments::{Experiment, ExperimentConfig, ExperimentError};

#[derive(Parser, Debug)]
#[command(version, about = "Seeded SE/GEE trade-off sweeps written as CSV tables")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration; missing keys take the reference-cell defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run only this seed.
    #[arg(long, global = true, conflicts_with = "seeds")]
    seed: Option<u64>,

    /// Run seeds 0..N.
    #[arg(long, global = true)]
    seeds: Option<u64>,

    /// Output directory (overrides NOMA_TRADEOFF_OUT and the config file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// SE and GEE per weight at each TX-SNR.
    AlphaSweep,
    /// SE and GEE against TX-SNR per weight, flagging green-power saturation.
    SnrSweep,
    /// Trade-off transmit power against the semidefinite relaxation bound.
    Benchmark,
    /// Minimum transmit power over a threshold by TX-SNR grid.
    Feasibility,
    /// Evenly spaced weights with a non-domination flag.
    Pareto,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

fn load(args: &Args) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.sweep.seeds = vec![seed];
    }
    if let Some(n) = args.seeds {
        cfg.sweep.seeds = (0..n).collect();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<(), ExperimentError> {
    let cfg = load(args)?;
    let experiment = match args.command {
        Command::AlphaSweep => Experiment::AlphaSweep,
        Command::SnrSweep => Experiment::SnrSweep,
        Command::Benchmark => Experiment::Benchmark,
        Command::Feasibility => Experiment::Feasibility,
        Command::Pareto => Experiment::Pareto,
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
    };
    let dir = cfg.out_dir(args.out.as_deref());
    info!("{experiment:?} over {} seeds into {}", cfg.sweep.seeds.len(), dir.display());
    for table in experiment.run(&cfg, args.jobs)? {
        let path = table.write_to(&dir)?;
        println!("{} ({} rows)", path.display(), table.rows.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

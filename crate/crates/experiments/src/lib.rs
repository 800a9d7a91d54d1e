//! Seeded sweeps over the trade-off solver and its baselines, written as
//! versioned CSV tables.
//!
//! Every run is a pure function of the configuration: channels come from the
//! per-cell seed, cells run on a bounded worker pool and rows are gathered in
//! configuration order, so the same configuration gives byte-identical files.

pub mod config;
pub mod output;
mod runs;

use std::path::PathBuf;

pub use config::ExperimentConfig;
pub use output::{summarize, Table};
pub use runs::{run_alpha_sweep, run_benchmark_table, run_feasibility_map, run_pareto, run_snr_sweep};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// The experiment families exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    AlphaSweep,
    SnrSweep,
    Benchmark,
    Feasibility,
    Pareto,
}

impl Experiment {
    /// Runs the experiment and returns its main table followed by the
    /// companion summary. `jobs = 0` lets the pool pick its own size.
    pub fn run(self, cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<Table>, ExperimentError> {
        cfg.validate()?;
        let main = match self {
            Experiment::AlphaSweep => run_alpha_sweep(cfg, jobs)?,
            Experiment::SnrSweep => run_snr_sweep(cfg, jobs)?,
            Experiment::Benchmark => run_benchmark_table(cfg, jobs)?,
            Experiment::Feasibility => run_feasibility_map(cfg, jobs)?,
            Experiment::Pareto => run_pareto(cfg, jobs)?,
        };
        let summary = match self {
            Experiment::AlphaSweep => summarize(&main, &["tx_snr_db", "alpha"], &["se", "gee", "tx_power_w"]),
            Experiment::SnrSweep => summarize(&main, &["alpha", "tx_snr_db"], &["se", "gee", "tx_power_w"]),
            Experiment::Benchmark => summarize(&main, &["alpha"], &["sca_power_w", "sdr_power_w", "gap"]),
            Experiment::Feasibility => summarize(&main, &["eta_th", "tx_snr_db"], &["p_star_w", "feasible"]),
            Experiment::Pareto => summarize(&main, &["alpha"], &["se", "gee", "tx_power_w"]),
        };
        Ok(vec![main, summary])
    }
}

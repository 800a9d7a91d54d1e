use log::{info, warn};
use noma_tradeoff::baselines::{solve_power_min_with, solve_se_max_with};
use noma_tradeoff::sca::{mark_non_dominated, ParetoMetrics, ParetoPoint, TradeoffContext, TradeoffResult};
use noma_tradeoff::sdp::{build_sdr, solve_sdp, RANK_TOLERANCE};
use noma_tradeoff::system::generate_channels;
use noma_tradeoff::{BeamformerSolution, ChannelSet, SystemParams, TradeoffError};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::output::{fmt, Table};
use crate::ExperimentError;

/// Slack on the rate thresholds when re-checking a row before it is written.
const ROW_RATE_SLACK: f64 = 1e-6;

/// Maps `f` over `cells` on a pool of `jobs` workers, keeping input order.
fn par_cells<T: Sync, R: Send>(
    jobs: usize,
    cells: &[T],
    f: impl Fn(&T) -> R + Sync + Send,
) -> Result<Vec<R>, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(|| cells.par_iter().map(&f).collect()))
}

fn channels(cfg: &ExperimentConfig, seed: u64) -> Result<ChannelSet, TradeoffError> {
    let s = &cfg.system;
    generate_channels(seed, &s.distances_m, s.path_loss_exp, s.antennas)
}

/// What a sweep cell produced for one weight.
enum Design {
    Tradeoff(Box<TradeoffResult>),
    /// The thresholds were infeasible; this is the unconstrained SE-Max design.
    Fallback(BeamformerSolution),
    Failed(String),
}

impl Design {
    /// Re-checks the design against the constraints it was solved under.
    fn checked(self, cs: &ChannelSet, params: &SystemParams) -> Design {
        let result = match &self {
            Design::Tradeoff(r) => r.solution.verify(cs, params, ROW_RATE_SLACK),
            Design::Fallback(sol) => sol.verify(cs, &params.clone().with_sinr_threshold(0.0), ROW_RATE_SLACK),
            Design::Failed(_) => Ok(()),
        };
        match result {
            Ok(()) => self,
            Err(e) => Design::Failed(format!("rejected: {e}")),
        }
    }

    fn solution(&self) -> Option<&BeamformerSolution> {
        match self {
            Design::Tradeoff(r) => Some(&r.solution),
            Design::Fallback(sol) => Some(sol),
            Design::Failed(_) => None,
        }
    }

    fn iterations(&self) -> usize {
        match self {
            Design::Tradeoff(r) => r.iterations,
            _ => 0,
        }
    }

    fn status(&self) -> String {
        match self {
            Design::Tradeoff(r) if r.converged => "ok".into(),
            Design::Tradeoff(_) => "not_converged".into(),
            Design::Fallback(_) => "se_max_fallback".into(),
            Design::Failed(e) => e.clone(),
        }
    }

    /// `se, sum_rate_bps, gee, tx_power_w`, blank when there is no design.
    fn metrics(&self) -> [String; 4] {
        match self.solution() {
            Some(s) => [fmt(s.se), fmt(s.sum_rate), fmt(s.gee), fmt(s.tx_power)],
            None => Default::default(),
        }
    }
}

/// Builds the shared context of one (seed, TX-SNR, threshold) cell, or the
/// SE-Max fallback when the thresholds cannot be met.
fn context(
    cfg: &ExperimentConfig,
    seed: u64,
    tx_snr_db: f64,
    eta_th: f64,
) -> (ChannelSet, SystemParams, Result<TradeoffContext, Design>) {
    let params = cfg.params(tx_snr_db, eta_th);
    let cs = match channels(cfg, seed) {
        Ok(cs) => cs,
        Err(e) => {
            let empty = ChannelSet::new(Vec::new(), Vec::new(), cfg.system.path_loss_exp);
            return (empty, params, Err(Design::Failed(format!("error: {e}"))));
        }
    };
    let ctx = match TradeoffContext::new(cs.clone(), params.clone(), cfg.sca_options()) {
        Ok(ctx) => Ok(ctx),
        Err(TradeoffError::Infeasible { p_star, p_ava }) => {
            info!("seed {seed} at {tx_snr_db} dB: P* {p_star} W exceeds {p_ava} W, using SE-Max");
            match solve_se_max_with(&cs, &params, false, None, &cfg.sca_options()) {
                Ok(sol) => Err(Design::Fallback(sol)),
                Err(e) => Err(Design::Failed(format!("error: fallback: {e}"))),
            }
        }
        Err(e) => {
            warn!("seed {seed} at {tx_snr_db} dB: {e}");
            Err(Design::Failed(format!("error: {e}")))
        }
    };
    (cs, params, ctx)
}

fn copy(d: &Design) -> Design {
    match d {
        Design::Tradeoff(r) => Design::Tradeoff(r.clone()),
        Design::Fallback(s) => Design::Fallback(s.clone()),
        Design::Failed(e) => Design::Failed(e.clone()),
    }
}

/// One design per weight for a single (seed, TX-SNR) cell.
fn sweep_cell(cfg: &ExperimentConfig, seed: u64, tx_snr_db: f64, alphas: &[f64]) -> (SystemParams, Vec<Design>) {
    let (cs, params, ctx) = context(cfg, seed, tx_snr_db, cfg.sweep.eta_th);
    let designs = match ctx {
        Ok(ctx) => alphas
            .iter()
            .map(|a| match ctx.solve_with(&cfg.tune(ctx.config(*a))) {
                Ok(r) => Design::Tradeoff(Box::new(r)),
                Err(e) => Design::Failed(format!("error: {e}")),
            })
            .map(|d| d.checked(&cs, &params))
            .collect(),
        Err(d) => {
            let d = d.checked(&cs, &params);
            alphas.iter().map(|_| copy(&d)).collect()
        }
    };
    (params, designs)
}

fn snr_cells(cfg: &ExperimentConfig) -> Vec<(u64, f64)> {
    let mut cells = Vec::new();
    for seed in &cfg.sweep.seeds {
        for snr in &cfg.sweep.tx_snr_db {
            cells.push((*seed, *snr));
        }
    }
    cells
}

/// One row per (seed, TX-SNR, weight).
pub fn run_alpha_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<Table, ExperimentError> {
    cfg.validate()?;
    let cells = snr_cells(cfg);
    let alphas = &cfg.sweep.alphas;
    let results = par_cells(jobs, &cells, |(seed, snr)| sweep_cell(cfg, *seed, *snr, alphas))?;
    let mut t = Table::new(
        "alpha_sweep",
        &["seed", "tx_snr_db", "alpha", "se", "sum_rate_bps", "gee", "tx_power_w", "iters", "status"],
    );
    for ((seed, snr), (_, designs)) in cells.iter().zip(&results) {
        for (alpha, d) in alphas.iter().zip(designs) {
            let mut row = vec![seed.to_string(), fmt(*snr), fmt(*alpha)];
            row.extend(d.metrics());
            row.push(d.iterations().to_string());
            row.push(d.status());
            t.push(row);
        }
    }
    Ok(t)
}

/// Same cells as the weight sweep, grouped by weight. `saturated` marks
/// energy-efficient (`alpha = 1`) designs that leave more than 1% of the
/// budget unused, i.e. budgets past the green power.
pub fn run_snr_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<Table, ExperimentError> {
    cfg.validate()?;
    let cells = snr_cells(cfg);
    let alphas = &cfg.sweep.alphas;
    let results = par_cells(jobs, &cells, |(seed, snr)| sweep_cell(cfg, *seed, *snr, alphas))?;
    let mut t = Table::new(
        "snr_sweep",
        &["seed", "alpha", "tx_snr_db", "se", "sum_rate_bps", "gee", "tx_power_w", "saturated", "iters", "status"],
    );
    for seed in &cfg.sweep.seeds {
        for (a, alpha) in alphas.iter().enumerate() {
            for ((s, snr), (params, designs)) in cells.iter().zip(&results) {
                if s != seed {
                    continue;
                }
                let d = &designs[a];
                let saturated = match (d, d.solution()) {
                    (Design::Tradeoff(_), Some(sol)) if *alpha == 1.0 => (sol.tx_power < 0.99 * params.p_ava).to_string(),
                    _ => String::new(),
                };
                let mut row = vec![seed.to_string(), fmt(*alpha), fmt(*snr)];
                row.extend(d.metrics());
                row.push(saturated);
                row.push(d.iterations().to_string());
                row.push(d.status());
                t.push(row);
            }
        }
    }
    Ok(t)
}

/// Evenly spaced weights at one TX-SNR, with pairwise non-domination.
pub fn run_pareto(cfg: &ExperimentConfig, jobs: usize) -> Result<Table, ExperimentError> {
    cfg.validate()?;
    let alphas = cfg.pareto_alphas();
    let seeds = &cfg.sweep.seeds;
    let results = par_cells(jobs, seeds, |seed| {
        let (_, designs) = sweep_cell(cfg, *seed, cfg.pareto.tx_snr_db, &alphas);
        let mut points: Vec<ParetoPoint> = alphas
            .iter()
            .zip(&designs)
            .map(|(alpha, d)| ParetoPoint {
                alpha: *alpha,
                outcome: match d {
                    Design::Tradeoff(r) => Ok(ParetoMetrics {
                        se: r.solution.se,
                        gee: r.solution.gee,
                        tx_power: r.solution.tx_power,
                    }),
                    _ => Err(TradeoffError::NumericalFailure(d.status())),
                },
                non_dominated: true,
            })
            .collect();
        mark_non_dominated(&mut points, cfg.pareto.tolerance);
        (designs, points)
    })?;
    let mut t = Table::new(
        "pareto",
        &["seed", "alpha", "se", "sum_rate_bps", "gee", "tx_power_w", "non_dominated", "iters", "status"],
    );
    for (seed, (designs, points)) in seeds.iter().zip(&results) {
        for (d, p) in designs.iter().zip(points) {
            let mut row = vec![seed.to_string(), fmt(p.alpha)];
            row.extend(d.metrics());
            row.push(if p.outcome.is_ok() { p.non_dominated.to_string() } else { String::new() });
            row.push(d.iterations().to_string());
            row.push(d.status());
            t.push(row);
        }
    }
    Ok(t)
}

/// Transmit power of the trade-off design against the relaxation lower
/// bound at the same per-user rates. `gap = (P_t − P*) / P*`.
pub fn run_benchmark_table(cfg: &ExperimentConfig, jobs: usize) -> Result<Table, ExperimentError> {
    cfg.validate()?;
    let b = &cfg.benchmark;
    let k = cfg.num_users();
    let mut header: Vec<String> = vec!["seed".into(), "alpha".into()];
    header.extend((1..=k).map(|i| format!("rate_{i}_bps_hz")));
    for h in ["sca_power_w", "sdr_power_w", "gap", "rank_ratio_max", "status"] {
        header.push(h.into());
    }
    let seeds = &cfg.sweep.seeds;
    let results = par_cells(jobs, seeds, |seed| {
        let (cs, params, ctx) = context(cfg, *seed, b.tx_snr_db, b.eta_th);
        b.alphas
            .iter()
            .map(|alpha| {
                let design = match &ctx {
                    Ok(ctx) => match ctx.solve_with(&cfg.tune(ctx.config(*alpha))) {
                        Ok(r) => Design::Tradeoff(Box::new(r)),
                        Err(e) => Design::Failed(format!("error: {e}")),
                    },
                    Err(d) => copy(d),
                }
                .checked(&cs, &params);
                benchmark_row(cfg, &cs, &params, &design, k)
            })
            .collect::<Vec<_>>()
    })?;
    let mut t = Table {
        name: "benchmark".into(),
        header,
        rows: Vec::new(),
    };
    for (seed, rows) in seeds.iter().zip(results) {
        for (alpha, tail) in b.alphas.iter().zip(rows) {
            let mut row = vec![seed.to_string(), fmt(*alpha)];
            row.extend(tail);
            t.push(row);
        }
    }
    Ok(t)
}

fn benchmark_row(cfg: &ExperimentConfig, cs: &ChannelSet, params: &SystemParams, d: &Design, k: usize) -> Vec<String> {
    let mut row: Vec<String> = match d.solution() {
        Some(sol) => sol.per_user_rates.iter().map(|r| fmt(*r)).collect(),
        None => vec![String::new(); k],
    };
    let sca_power = d.solution().map(|s| fmt(s.tx_power)).unwrap_or_default();
    let Design::Tradeoff(r) = d else {
        row.extend([sca_power, String::new(), String::new(), String::new(), d.status()]);
        return row;
    };
    let sdr = build_sdr(cs, &params.noise_vars, &r.solution.per_user_rates).and_then(|p| solve_sdp(&p, cfg.solver.sdp_tol));
    match sdr {
        Ok(rep) => {
            let worst = rep.worst_rank_ratio();
            let gap = (r.solution.tx_power - rep.p_star) / rep.p_star;
            let status = if worst > RANK_TOLERANCE { "rank_failure".into() } else { d.status() };
            row.extend([sca_power, fmt(rep.p_star), fmt(gap), fmt(worst), status]);
        }
        Err(e) => row.extend([sca_power, String::new(), String::new(), String::new(), format!("error: sdr: {e}")]),
    }
    row
}

/// Minimum transmit power per (seed, threshold) against every TX-SNR budget.
pub fn run_feasibility_map(cfg: &ExperimentConfig, jobs: usize) -> Result<Table, ExperimentError> {
    cfg.validate()?;
    let f = &cfg.feasibility;
    let mut cells = Vec::new();
    for seed in &cfg.sweep.seeds {
        for eta in &f.eta_th {
            cells.push((*seed, *eta));
        }
    }
    // the minimum power does not depend on the budget, so one solve per cell
    let results = par_cells(jobs, &cells, |(seed, eta)| {
        let params = cfg.params(f.tx_snr_db[0], *eta);
        let cs = channels(cfg, *seed).map_err(|e| e.to_string())?;
        solve_power_min_with(&cs, &params, &cfg.sca_options())
            .map(|(p, _)| p)
            .map_err(|e| e.to_string())
    })?;
    let mut t = Table::new(
        "feasibility",
        &["seed", "eta_th", "tx_snr_db", "p_star_w", "p_ava_w", "feasible", "status"],
    );
    for ((seed, eta), p_star) in cells.iter().zip(&results) {
        for snr in &f.tx_snr_db {
            let p_ava = cfg.params(*snr, *eta).p_ava;
            let mut row = vec![seed.to_string(), fmt(*eta), fmt(*snr)];
            match p_star {
                Ok(p) => row.extend([fmt(*p), fmt(p_ava), (*p <= p_ava).to_string(), "ok".into()]),
                Err(e) => row.extend([String::new(), fmt(p_ava), String::new(), format!("error: {e}")]),
            }
            t.push(row);
        }
    }
    Ok(t)
}

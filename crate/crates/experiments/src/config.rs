use std::path::{Path, PathBuf};

use noma_tradeoff::baselines::ScaOptions;
use noma_tradeoff::sca::TradeoffConfig;
use noma_tradeoff::system::{dbm_to_watts, tx_snr_to_power};
use noma_tradeoff::SystemParams;
use serde::{Deserialize, Serialize};

use crate::ExperimentError;

/// Cell geometry and hardware. Powers are given in dB/dBm here and converted
/// to watts once, in [`ExperimentConfig::params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub antennas: usize,
    /// One entry per user; the user count is its length.
    pub distances_m: Vec<f64>,
    pub path_loss_exp: f64,
    pub noise_var: f64,
    pub amplifier_efficiency: f64,
    pub circuit_power_dbm: f64,
    pub bandwidth_hz: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            antennas: 3,
            distances_m: vec![1.0, 2.0, 3.0, 4.0, 50.0],
            path_loss_exp: 1.0,
            noise_var: 1.0,
            amplifier_efficiency: 0.65,
            circuit_power_dbm: 40.0,
            bandwidth_hz: 1e6,
        }
    }
}

/// Grids shared by `alpha-sweep`, `snr-sweep` and `pareto`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub alphas: Vec<f64>,
    pub tx_snr_db: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Common SINR threshold of every user.
    pub eta_th: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            alphas: vec![0.0, 0.5, 1.0],
            tx_snr_db: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            seeds: (0..20).collect(),
            eta_th: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Outer stopping threshold on the normalised objective.
    pub eps: f64,
    pub max_outer_iters: usize,
    pub envelope_pieces: usize,
    pub taylor_guard: f64,
    /// Interior-point tolerance of the trade-off subproblems.
    pub subproblem_tol: f64,
    /// Interior-point tolerance and iteration cap of the baseline loops.
    pub baseline_tol: f64,
    pub baseline_max_iters: usize,
    pub sdp_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let cfg = TradeoffConfig::new(0.5, 1.0, 1.0);
        let base = ScaOptions::default();
        Self {
            eps: cfg.eps,
            max_outer_iters: cfg.max_outer_iters,
            envelope_pieces: cfg.envelope_pieces,
            taylor_guard: cfg.taylor_guard,
            subproblem_tol: cfg.solver_tol,
            baseline_tol: base.solver_tol,
            baseline_max_iters: base.max_iters,
            sdp_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub alphas: Vec<f64>,
    pub tx_snr_db: f64,
    pub eta_th: f64,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            alphas: vec![0.3, 0.5, 0.7],
            tx_snr_db: 20.0,
            eta_th: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParetoSection {
    pub tx_snr_db: f64,
    /// Evenly spaced weights on `[0, 1]`.
    pub points: usize,
    /// Relative margin a point must beat another by in both metrics to
    /// dominate it.
    pub tolerance: f64,
}

impl Default for ParetoSection {
    fn default() -> Self {
        Self {
            tx_snr_db: 24.0,
            points: 11,
            tolerance: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeasibilitySection {
    pub eta_th: Vec<f64>,
    pub tx_snr_db: Vec<f64>,
}

impl Default for FeasibilitySection {
    fn default() -> Self {
        Self {
            eta_th: vec![0.0, 0.01, 0.1, 0.2, 0.5, 1.0, 2.0],
            tx_snr_db: vec![5.0, 10.0, 15.0, 20.0, 25.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Everything a run needs. Every field has a default, so an empty file (or
/// no file) describes the reference cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub sweep: SweepSection,
    pub solver: SolverSection,
    pub benchmark: BenchmarkSection,
    pub pareto: ParetoSection,
    pub feasibility: FeasibilitySection,
    pub output: OutputSection,
}

pub const OUT_DIR_ENV: &str = "NOMA_TRADEOFF_OUT";
pub const DEFAULT_OUT_DIR: &str = "results";

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn num_users(&self) -> usize {
        self.system.distances_m.len()
    }

    /// Output directory: explicit flag, then the environment, then the file,
    /// then the default.
    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: &str| Err(ExperimentError::Config(msg.into()));
        let s = &self.system;
        if s.antennas == 0 {
            return bad("system.antennas must be positive");
        }
        if s.distances_m.is_empty() || s.distances_m.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad("system.distances_m must be a non-empty list of positive distances");
        }
        if !(s.path_loss_exp >= 0.0) || !(s.noise_var > 0.0) || !(s.bandwidth_hz > 0.0) {
            return bad("system.path_loss_exp, noise_var and bandwidth_hz out of range");
        }
        if !(s.amplifier_efficiency > 0.0 && s.amplifier_efficiency <= 1.0) {
            return bad("system.amplifier_efficiency must lie in (0, 1]");
        }
        if !s.circuit_power_dbm.is_finite() {
            return bad("system.circuit_power_dbm must be finite");
        }
        let w = &self.sweep;
        if w.seeds.is_empty() {
            return bad("sweep.seeds is empty");
        }
        if w.alphas.is_empty() || w.tx_snr_db.is_empty() {
            return bad("sweep.alphas and sweep.tx_snr_db must be non-empty");
        }
        let weights = w.alphas.iter().chain(&self.benchmark.alphas);
        if weights.clone().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("weights must lie in [0, 1]");
        }
        if self.benchmark.alphas.is_empty() {
            return bad("benchmark.alphas must be non-empty");
        }
        let etas = std::iter::once(&w.eta_th).chain(&self.feasibility.eta_th).chain([&self.benchmark.eta_th]);
        if etas.clone().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return bad("SINR thresholds must be finite and non-negative");
        }
        let snrs = w.tx_snr_db.iter().chain(&self.feasibility.tx_snr_db);
        if snrs.chain([&self.benchmark.tx_snr_db, &self.pareto.tx_snr_db]).any(|x| !x.is_finite()) {
            return bad("TX-SNR values must be finite");
        }
        if self.feasibility.eta_th.is_empty() || self.feasibility.tx_snr_db.is_empty() {
            return bad("feasibility grids must be non-empty");
        }
        if self.pareto.points < 2 || !(self.pareto.tolerance >= 0.0) {
            return bad("pareto.points must be at least 2 and tolerance non-negative");
        }
        let v = &self.solver;
        if !(v.eps > 0.0) || v.max_outer_iters == 0 || v.envelope_pieces == 0 || v.baseline_max_iters == 0 {
            return bad("solver.eps and iteration counts must be positive");
        }
        for tol in [v.subproblem_tol, v.baseline_tol, v.sdp_tol] {
            if !(tol > 0.0 && tol < 1e-2) {
                return bad("solver tolerances must lie in (0, 1e-2)");
            }
        }
        if !(v.taylor_guard > 0.0) {
            return bad("solver.taylor_guard must be positive");
        }
        Ok(())
    }

    /// System parameters at a TX-SNR and common SINR threshold, in watts.
    pub fn params(&self, tx_snr_db: f64, eta_th: f64) -> SystemParams {
        let s = &self.system;
        let k = self.num_users();
        let mut p = SystemParams::reference(s.antennas, k, tx_snr_to_power(tx_snr_db, s.noise_var));
        p.noise_vars = vec![s.noise_var; k];
        p.eps0 = s.amplifier_efficiency;
        p.p_loss = dbm_to_watts(s.circuit_power_dbm);
        p.bandwidth = s.bandwidth_hz;
        p.with_sinr_threshold(eta_th)
    }

    pub fn sca_options(&self) -> ScaOptions {
        ScaOptions {
            solver_tol: self.solver.baseline_tol,
            max_iters: self.solver.baseline_max_iters,
            envelope_pieces: self.solver.envelope_pieces,
            taylor_guard: self.solver.taylor_guard,
            ..ScaOptions::default()
        }
    }

    /// Applies the outer-loop knobs on top of a context's configuration.
    pub fn tune(&self, cfg: TradeoffConfig) -> TradeoffConfig {
        TradeoffConfig {
            eps: self.solver.eps,
            max_outer_iters: self.solver.max_outer_iters,
            solver_tol: self.solver.subproblem_tol,
            ..cfg
        }
    }

    pub fn pareto_alphas(&self) -> Vec<f64> {
        let n = self.pareto.points - 1;
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }
}

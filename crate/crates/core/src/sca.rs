//! Weighted-sum SE/EE trade-off solved by successive convex approximation.
//!
//! The design maximises `Ψ = (1 − α) SE/f1* + α GEE/f2*` (GEE per unit
//! bandwidth) subject to the rate thresholds, SIC ordering and budget. Each
//! outer iteration solves a second-order cone restriction of the problem
//! around the current point:
//!
//! * `Γ1 ≤ (1 − α) Σρ / f1*` (linear);
//! * `Γ2 β ≤ (α/f2*) Σρ`, with `β ≥ b² ≥ P_t/ε0 + P_l`, replaced by the
//!   AM-GM majorant `t Γ2² + β²/t ≤ 2 (α/f2*) Σρ`, `t = βⁿ/Γ2ⁿ`;
//! * the rate chain `ρ_i ≤ log2 z_i`, `√(z_i − 1) a_{i,k} ≤ |h_k^H w_i|`
//!   (the modulus replaced by its phase-aligned tangent),
//!   `a_{i,k} ≥ ‖interference, σ_k‖`;
//! * the SIC chain with the larger side replaced by its tangent.
//!
//! Every surrogate is tight at its base point, so the previous iterate stays
//! feasible and the objective `Γ1 + Γ2` cannot decrease.

use std::io::Write;

use log::{debug, warn};
use noma_conic::{ConeProgram, LinExpr, SolveStatus, Var};
use rayon::prelude::*;

use crate::baselines::{self, ScaOptions};
use crate::blocks::{self, BeamVars, ChainPoint, EnvelopeSpec, RateChain, REFINED_PIECES, START_MARGIN};
use crate::system::{self, BeamformerSolution, CVector, ChannelSet, SystemParams};
use crate::TradeoffError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffConfig {
    /// Weight on energy efficiency; `1 − alpha` goes to spectral efficiency.
    pub alpha: f64,
    /// Normaliser of the SE term (bits/s/Hz).
    pub f1_star: f64,
    /// Normaliser of the GEE term (bits/joule/Hz).
    pub f2_star: f64,
    /// Stop once the objective changes by at most this much.
    pub eps: f64,
    pub max_outer_iters: usize,
    /// Smallest admissible `z − 1` at a linearisation point.
    pub taylor_guard: f64,
    pub envelope_pieces: usize,
    pub solver_tol: f64,
}

impl TradeoffConfig {
    pub fn new(alpha: f64, f1_star: f64, f2_star: f64) -> Self {
        Self {
            alpha,
            f1_star,
            f2_star,
            eps: 1e-3,
            max_outer_iters: 50,
            taylor_guard: 1e-6,
            envelope_pieces: 64,
            solver_tol: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<(), TradeoffError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(TradeoffError::InvalidParameter(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.f1_star > 0.0 && self.f2_star > 0.0) {
            return Err(TradeoffError::InvalidParameter(
                "normalisers must be positive".into(),
            ));
        }
        if !(self.eps > 0.0) || self.max_outer_iters == 0 || self.envelope_pieces == 0 {
            return Err(TradeoffError::InvalidParameter(
                "eps, iteration cap and envelope pieces must be positive".into(),
            ));
        }
        if !(self.taylor_guard > 0.0) {
            return Err(TradeoffError::InvalidParameter("taylor guard must be positive".into()));
        }
        Ok(())
    }

    fn se_weight(&self) -> f64 {
        (1.0 - self.alpha) / self.f1_star
    }

    fn ee_weight(&self) -> f64 {
        self.alpha / self.f2_star
    }

    fn has_se_term(&self) -> bool {
        self.alpha < 1.0
    }

    fn has_ee_term(&self) -> bool {
        self.alpha > 0.0
    }

    fn sca_options(&self) -> ScaOptions {
        ScaOptions {
            solver_tol: self.solver_tol,
            envelope_pieces: self.envelope_pieces,
            taylor_guard: self.taylor_guard,
            ..ScaOptions::default()
        }
    }
}

/// Normalised trade-off objective of a solution.
pub fn tradeoff_objective(sol: &BeamformerSolution, params: &SystemParams, cfg: &TradeoffConfig) -> f64 {
    cfg.se_weight() * sol.se + cfg.ee_weight() * sol.gee / params.bandwidth
}

/// A point of the subproblem family: beamformers plus every slack.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackState {
    pub w: Vec<CVector>,
    pub rho: Vec<f64>,
    /// SINR-plus-one slacks, one per user.
    pub z: Vec<f64>,
    /// Interference-plus-noise amplitudes, `a[i][k]` for decoders `k ≤ i`.
    pub a: Vec<Vec<f64>>,
    /// Consumed-power amplitude, `b² ≥ P_t/ε0 + P_l`.
    pub b: f64,
    /// Consumed-power slack, `β ≥ b²`.
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl SlackState {
    pub fn objective(&self) -> f64 {
        self.gamma1 + self.gamma2
    }

    fn chain(&self) -> ChainPoint {
        ChainPoint {
            z: self.z.clone(),
            a: self.a.clone(),
        }
    }
}

fn consumed_amplitude(w: &[CVector], params: &SystemParams) -> f64 {
    system::consumed_power(system::tx_power_of(w), params).sqrt()
}

/// Builds the starting point from beamformers that strictly satisfy the
/// rate thresholds. Every slack is set inside its constraint with a small
/// relative margin.
pub fn initialize_from(
    w: Vec<CVector>,
    cs: &ChannelSet,
    params: &SystemParams,
    cfg: &TradeoffConfig,
) -> Result<SlackState, TradeoffError> {
    let env = envelope_of(cs, params, cfg);
    let (chain, rho) = blocks::chain_point_from(&w, cs, params, env).map_err(TradeoffError::NoFeasibleStart)?;
    let sum_rho: f64 = rho.iter().sum();
    let b = consumed_amplitude(&w, params) * (1.0 + START_MARGIN);
    let beta = b * b * (1.0 + START_MARGIN);
    let gamma1 = if cfg.has_se_term() {
        cfg.se_weight() * sum_rho * (1.0 - START_MARGIN)
    } else {
        0.0
    };
    let gamma2 = if cfg.has_ee_term() {
        cfg.ee_weight() * sum_rho / beta * (1.0 - START_MARGIN)
    } else {
        0.0
    };
    Ok(SlackState {
        w,
        rho,
        z: chain.z,
        a: chain.a,
        b,
        beta,
        gamma1,
        gamma2,
    })
}

/// Starting point from the power-minimising beamformers scaled to
/// `min(2 P*, P_ava)`.
pub fn initialize(
    cs: &ChannelSet,
    params: &SystemParams,
    cfg: &TradeoffConfig,
    power_min: &BeamformerSolution,
) -> Result<SlackState, TradeoffError> {
    cfg.validate()?;
    check_budget(power_min, params)?;
    let w = baselines::budget_start(cs, params, power_min, &cfg.sca_options())?;
    initialize_from(w, cs, params, cfg)
}

fn check_budget(power_min: &BeamformerSolution, params: &SystemParams) -> Result<(), TradeoffError> {
    if power_min.tx_power > params.p_ava {
        return Err(TradeoffError::Infeasible {
            p_star: power_min.tx_power,
            p_ava: params.p_ava,
        });
    }
    Ok(())
}

/// Starting points for a multi-start run: the default scaling plus
/// `START_GRID` powers spaced geometrically between `P*` and `P_ava`.
pub fn initial_states(
    cs: &ChannelSet,
    params: &SystemParams,
    cfg: &TradeoffConfig,
    power_min: &BeamformerSolution,
) -> Result<Vec<SlackState>, TradeoffError> {
    let mut states = vec![initialize(cs, params, cfg, power_min)?];
    let p_star = power_min.tx_power;
    let top = params.p_ava * (1.0 - 1e-6);
    if p_star > 1e-9 * params.p_ava && top > 2.0 * p_star {
        for m in 1..=START_GRID {
            let target = p_star * (top / p_star).powf(m as f64 / START_GRID as f64);
            let w = baselines::scaled_to(power_min, target);
            if let Ok(s) = initialize_from(w, cs, params, cfg) {
                states.push(s);
            }
        }
    }
    Ok(states)
}

/// Extra starting powers tried by [`solve_tradeoff`].
const START_GRID: usize = 3;

fn envelope_of(cs: &ChannelSet, params: &SystemParams, cfg: &TradeoffConfig) -> EnvelopeSpec {
    baselines::envelope(cs, params, &cfg.sca_options())
}

/// Upper bound kept on `β` so the feasible set stays bounded when the energy
/// term is absent.
fn beta_cap(params: &SystemParams) -> f64 {
    2.0 * (params.p_ava / params.eps0 + params.p_loss)
}

/// An assembled subproblem and the handles needed to read a point back.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub program: ConeProgram,
    beams: BeamVars,
    rho: Vec<Var>,
    chain: RateChain,
    b: Var,
    beta: Var,
    gamma1: Var,
    gamma2: Var,
    k: usize,
}

impl Subproblem {
    pub fn state_at(&self, x: &[f64]) -> SlackState {
        let chain = self.chain.point(x);
        SlackState {
            w: self.beams.extract(x, self.k),
            rho: self.rho.iter().map(|v| x[v.0]).collect(),
            z: chain.z,
            a: chain.a,
            b: x[self.b.0],
            beta: x[self.beta.0],
            gamma1: x[self.gamma1.0],
            gamma2: x[self.gamma2.0],
        }
    }

    /// The point of this program's variable space corresponding to `s`.
    pub fn point_of(&self, s: &SlackState) -> Vec<f64> {
        let mut x = vec![0.0; self.program.num_vars()];
        let n = self.beams.num_antennas();
        for (j, wj) in s.w.iter().enumerate() {
            for a in 0..n {
                let (re, im) = self.beams.var_pair(j, a);
                x[re.0] = wj[a].re;
                x[im.0] = wj[a].im;
            }
        }
        for (v, r) in self.rho.iter().zip(&s.rho) {
            x[v.0] = *r;
        }
        for (v, z) in self.chain.z.iter().zip(&s.z) {
            x[v.0] = *z;
        }
        for (row, vals) in self.chain.a.iter().zip(&s.a) {
            for (v, a) in row.iter().zip(vals) {
                x[v.0] = *a;
            }
        }
        x[self.b.0] = s.b;
        x[self.beta.0] = s.beta;
        x[self.gamma1.0] = s.gamma1;
        x[self.gamma2.0] = s.gamma2;
        x
    }
}

/// Sizes of the assembled subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProgramSize {
    pub vars: usize,
    pub eq_rows: usize,
    pub linear_rows: usize,
    pub soc_cones: usize,
    pub soc_rows: usize,
}

impl ProgramSize {
    pub fn of(p: &ConeProgram) -> Self {
        let soc = p.soc_dims();
        Self {
            vars: p.num_vars(),
            eq_rows: p.num_eq(),
            linear_rows: p.num_linear_ineq(),
            soc_cones: soc.len(),
            soc_rows: soc.iter().sum(),
        }
    }
}

/// Closed-form size of the trade-off subproblem for `n` antennas, `k` users
/// and `c` envelope pieces; `min_rate_users` lists the users with a positive
/// rate threshold. With `P = k(k+1)/2` (user, decoder) pairs and `D = 2nk`:
///
/// * variables: `D + 2k + P + 4` (beams, ρ, z, amplitudes, b, β, Γ1, Γ2);
/// * equalities: one when an endpoint weight pins `Γ1` or `Γ2` to zero;
/// * linear rows: `k(c + 5)` for the envelopes (`c` uniform chords plus three
///   refined around the base point) and their boxes, one for the SE term
///   when `α < 1`, one for the cap on `β`;
/// * cones: `P` interference cones of size `2i + 2`, `P` rate links of size
///   3, `k(k − 1)` SIC cones of size 4, the budget (`D + 1`), the consumed
///   power amplitude (`D + 2`), `β ≥ b²` (3), the energy surrogate (4) when
///   `α > 0`, and `i + 1` minimum-rate cones of size `2i + 2` for each user
///   `i` with a positive threshold.
pub fn subproblem_size(n: usize, k: usize, alpha: f64, min_rate_users: &[usize], pieces: usize) -> ProgramSize {
    let pairs = k * (k + 1) / 2;
    let d = 2 * n * k;
    let endpoint = alpha == 0.0 || alpha == 1.0;
    let mut soc_cones = 2 * pairs + k * (k - 1) + 3;
    // Σ_i (i + 1)(2i + 2) for the interference cones, 3 per rate link
    let mut soc_rows: usize = (0..k).map(|i| 2 * (i + 1) * (i + 1)).sum::<usize>() + 3 * pairs;
    soc_rows += 4 * k * (k - 1) + (d + 1) + (d + 2) + 3;
    if alpha > 0.0 {
        soc_cones += 1;
        soc_rows += 4;
    }
    for &i in min_rate_users {
        soc_cones += i + 1;
        soc_rows += 2 * (i + 1) * (i + 1);
    }
    ProgramSize {
        vars: d + 2 * k + pairs + 4,
        eq_rows: usize::from(endpoint),
        linear_rows: k * (pieces + REFINED_PIECES + 2) + usize::from(alpha < 1.0) + 1,
        soc_cones,
        soc_rows,
    }
}

/// Assembles the convex restriction around `state`.
pub fn build_subproblem(
    state: &SlackState,
    cfg: &TradeoffConfig,
    cs: &ChannelSet,
    params: &SystemParams,
) -> Result<Subproblem, TradeoffError> {
    let (n, k) = (cs.num_antennas(), cs.num_users());
    if let Some(z) = state.z.iter().find(|z| **z - 1.0 < cfg.taylor_guard) {
        return Err(TradeoffError::Guard(z - 1.0));
    }
    let env = envelope_of(cs, params, cfg);
    let mut p = ConeProgram::new();
    let bv = BeamVars::new(&mut p, n, k);
    let rho: Vec<Var> = (0..k).map(|i| p.add_var(format!("rho{i}"))).collect();
    let chain = blocks::add_rate_chain(&mut p, &bv, cs, params, &rho, &state.chain(), &state.w, env, "se");
    let b = p.add_var("b");
    let beta = p.add_var("beta");
    let gamma1 = p.add_var("gamma1");
    let gamma2 = p.add_var("gamma2");
    p.add_objective(gamma1, 1.0);
    p.add_objective(gamma2, 1.0);

    let sum_rho = rho.iter().fold(LinExpr::zero(), |acc, r| acc.with_term(*r, 1.0));
    if cfg.has_se_term() {
        p.add_le(&LinExpr::var(gamma1), &sum_rho.clone().scaled(cfg.se_weight()));
    } else {
        p.add_eq(&LinExpr::var(gamma1), &LinExpr::zero());
    }

    // b ≥ ‖[w; √(ε0 P_l)]‖/√ε0 and β ≥ b²
    let inv = 1.0 / params.eps0.sqrt();
    let mut parts: Vec<LinExpr> = bv.coords().into_iter().map(|c| c.scaled(inv)).collect();
    parts.push(LinExpr::constant(params.p_loss.sqrt()));
    p.add_soc(&LinExpr::var(b), &parts);
    p.add_quad_le(&[LinExpr::var(b)], &LinExpr::var(beta), state.b.max(1e-6));
    p.add_le(&LinExpr::var(beta), &LinExpr::constant(beta_cap(params)));

    if cfg.has_ee_term() {
        let t = (state.beta / state.gamma2.max(1e-12)).clamp(1e-8, 1e12);
        let st = t.sqrt();
        let lhs = [LinExpr::term(gamma2, st), LinExpr::term(beta, 1.0 / st)];
        let rhs = sum_rho.scaled(2.0 * cfg.ee_weight());
        let scale = (2.0 * state.beta * state.gamma2).sqrt().max(1e-6);
        p.add_quad_le(&lhs, &rhs, scale);
    } else {
        p.add_eq(&LinExpr::var(gamma2), &LinExpr::zero());
    }

    blocks::add_sic_chain(&mut p, &bv, cs, &state.w);
    blocks::add_min_rate(&mut p, &bv, cs, params, &state.w);
    blocks::add_power_budget(&mut p, &bv, params.p_ava);
    Ok(Subproblem {
        program: p,
        beams: bv,
        rho,
        chain,
        b,
        beta,
        gamma1,
        gamma2,
        k,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    /// `Γ1 + Γ2` at the accepted point.
    pub objective: f64,
    pub se: f64,
    pub gee: f64,
    pub tx_power: f64,
    /// `None` for the starting point.
    pub solver_status: Option<SolveStatus>,
    pub solver_iters: usize,
}

/// Accepted iterates of one trade-off run, starting point first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub entries: Vec<TraceEntry>,
    /// Guard clamps applied to linearisation points.
    pub clamps: usize,
}

impl IterationTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.objective).collect()
    }

    /// Largest decrease between consecutive objectives (zero when
    /// non-decreasing).
    pub fn worst_decrease(&self) -> f64 {
        self.entries
            .windows(2)
            .map(|w| w[0].objective - w[1].objective)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["iter", "objective", "se", "gee", "tx_power", "solver_status"])?;
        for e in &self.entries {
            wr.write_record([
                e.iter.to_string(),
                format!("{:.12e}", e.objective),
                format!("{:.12e}", e.se),
                format!("{:.12e}", e.gee),
                format!("{:.12e}", e.tx_power),
                e.solver_status.map_or("start", |s| s.as_str()).to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TradeoffResult {
    pub solution: BeamformerSolution,
    pub state: SlackState,
    pub trace: IterationTrace,
    pub converged: bool,
    /// Number of subproblems solved.
    pub iterations: usize,
}

impl TradeoffResult {
    /// Normalised objective evaluated on the true metrics.
    pub fn objective(&self, params: &SystemParams, cfg: &TradeoffConfig) -> f64 {
        tradeoff_objective(&self.solution, params, cfg)
    }
}

/// Objective decreases up to this size are attributed to solver round-off
/// and end the run at the previous point.
const ASCENT_NOISE: f64 = 1e-6;

/// Runs the SCA loop from an explicit starting point.
pub fn solve_from(
    start: SlackState,
    cs: &ChannelSet,
    params: &SystemParams,
    cfg: &TradeoffConfig,
) -> Result<TradeoffResult, TradeoffError> {
    cfg.validate()?;
    let mut state = start;
    let mut trace = IterationTrace::default();
    let entry = |iter, s: &SlackState, status, its| {
        let sol = BeamformerSolution::evaluate(s.w.clone(), cs, params);
        TraceEntry {
            iter,
            objective: s.objective(),
            se: sol.se,
            gee: sol.gee,
            tx_power: sol.tx_power,
            solver_status: status,
            solver_iters: its,
        }
    };
    trace.entries.push(entry(0, &state, None, 0));
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_outer_iters {
        let sub = build_subproblem(&state, cfg, cs, params)?;
        let rep = baselines::run(&sub.program, cfg.solver_tol, "trade-off").map_err(|e| {
            warn!("trade-off subproblem failed at iteration {it}: {e}");
            TradeoffError::NumericalFailure(format!("subproblem at iteration {it}: {e}"))
        })?;
        iterations = it;
        let mut next = sub.state_at(&rep.x);
        let prev = state.objective();
        let obj = next.objective();
        if obj < prev {
            if prev - obj > ASCENT_NOISE * prev.abs().max(1.0) {
                return Err(TradeoffError::NumericalFailure(format!(
                    "objective decreased from {prev:.9} to {obj:.9} at iteration {it}"
                )));
            }
            debug!("iteration {it}: decrease {:.2e} within solver noise, stopping", prev - obj);
            converged = true;
            break;
        }
        for z in next.z.iter_mut() {
            if *z - 1.0 < cfg.taylor_guard {
                debug!("clamping z − 1 = {:.3e} to {:.1e}", *z - 1.0, cfg.taylor_guard);
                *z = 1.0 + cfg.taylor_guard;
                trace.clamps += 1;
            }
        }
        for row in next.a.iter_mut() {
            for a in row.iter_mut() {
                *a = a.max(1e-12);
            }
        }
        state = next;
        trace.entries.push(entry(it, &state, Some(rep.status), rep.iterations));
        if obj - prev <= cfg.eps {
            converged = true;
            break;
        }
    }
    let solution = BeamformerSolution::evaluate(state.w.clone(), cs, params);
    Ok(TradeoffResult {
        solution,
        state,
        trace,
        converged,
        iterations,
    })
}

/// Runs the trade-off design from several scalings of the power-minimising
/// beamformers and keeps the run with the best true objective. The weighted
/// objective is non-concave, so a single start can settle on the local
/// optimum nearer to the other endpoint.
pub fn solve_tradeoff(
    cs: &ChannelSet,
    params: &SystemParams,
    cfg: &TradeoffConfig,
    power_min: &BeamformerSolution,
) -> Result<TradeoffResult, TradeoffError> {
    best_of(initial_states(cs, params, cfg, power_min)?, cs, params, cfg)
}

fn best_of(
    starts: Vec<SlackState>,
    cs: &ChannelSet,
    params: &SystemParams,
    cfg: &TradeoffConfig,
) -> Result<TradeoffResult, TradeoffError> {
    let mut best: Option<TradeoffResult> = None;
    let mut last_err = None;
    for start in starts {
        match solve_from(start, cs, params, cfg) {
            Ok(r) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| r.objective(params, cfg) > b.objective(params, cfg));
                if better {
                    best = Some(r);
                }
            }
            Err(e) => {
                warn!("trade-off start failed: {e}");
                last_err = Some(e);
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| TradeoffError::NoFeasibleStart("no start".into())))
}

/// Normalisers `(f1*, f2*)`: the SE of SE-Max (min-rate) and the per-Hz GEE
/// of GEE-Max on this instance.
pub fn normalize(cs: &ChannelSet, params: &SystemParams) -> Result<(f64, f64), TradeoffError> {
    let ctx = TradeoffContext::new(cs.clone(), params.clone(), ScaOptions::default())?;
    Ok((ctx.f1_star, ctx.f2_star))
}

/// Everything a sweep over `α` shares: the power-min start, both baselines
/// and the normalisers.
#[derive(Debug, Clone)]
pub struct TradeoffContext {
    pub cs: ChannelSet,
    pub params: SystemParams,
    pub power_min: BeamformerSolution,
    pub se_max: BeamformerSolution,
    pub gee_max: BeamformerSolution,
    pub f1_star: f64,
    pub f2_star: f64,
    pub options: ScaOptions,
}

impl TradeoffContext {
    /// Fails with [`TradeoffError::Infeasible`] when the thresholds cannot be
    /// met within the budget.
    pub fn new(cs: ChannelSet, params: SystemParams, options: ScaOptions) -> Result<Self, TradeoffError> {
        params.validate()?;
        let (p_star, power_min) = baselines::solve_power_min_with(&cs, &params, &options)?;
        if p_star > params.p_ava {
            return Err(TradeoffError::Infeasible {
                p_star,
                p_ava: params.p_ava,
            });
        }
        let se_max = baselines::solve_se_max_with(&cs, &params, true, Some(&power_min), &options)?;
        let gee_max =
            baselines::solve_gee_max_from(&cs, &params, Some(&power_min), std::slice::from_ref(&se_max.w), &options)?;
        let f1_star = se_max.se;
        let f2_star = gee_max.gee / params.bandwidth;
        if !(f1_star > 0.0 && f2_star > 0.0) {
            return Err(TradeoffError::NumericalFailure("non-positive normaliser".into()));
        }
        Ok(Self {
            cs,
            params,
            power_min,
            se_max,
            gee_max,
            f1_star,
            f2_star,
            options,
        })
    }

    pub fn config(&self, alpha: f64) -> TradeoffConfig {
        TradeoffConfig {
            envelope_pieces: self.options.envelope_pieces,
            taylor_guard: self.options.taylor_guard,
            ..TradeoffConfig::new(alpha, self.f1_star, self.f2_star)
        }
    }

    pub fn solve(&self, alpha: f64) -> Result<TradeoffResult, TradeoffError> {
        self.solve_with(&self.config(alpha))
    }

    /// Multi-start run: the power-min scalings of [`solve_tradeoff`] plus
    /// both baseline solutions, which are feasible for every weight.
    pub fn solve_with(&self, cfg: &TradeoffConfig) -> Result<TradeoffResult, TradeoffError> {
        let mut starts = initial_states(&self.cs, &self.params, cfg, &self.power_min)?;
        for sol in [&self.se_max, &self.gee_max] {
            match initialize_from(sol.w.clone(), &self.cs, &self.params, cfg) {
                Ok(s) => starts.push(s),
                Err(e) => debug!("baseline start rejected: {e}"),
            }
        }
        best_of(starts, &self.cs, &self.params, cfg)
    }

    /// One trade-off solve per weight (in parallel), annotated with
    /// pairwise non-domination at relative tolerance `tol`.
    pub fn pareto_sweep(&self, alphas: &[f64], tol: f64) -> Vec<ParetoPoint> {
        let results: Vec<Result<TradeoffResult, TradeoffError>> = alphas.par_iter().map(|a| self.solve(*a)).collect();
        let mut points: Vec<ParetoPoint> = alphas
            .iter()
            .zip(results)
            .map(|(alpha, r)| ParetoPoint {
                alpha: *alpha,
                outcome: r.map(|r| ParetoMetrics {
                    se: r.solution.se,
                    gee: r.solution.gee,
                    tx_power: r.solution.tx_power,
                }),
                non_dominated: true,
            })
            .collect();
        mark_non_dominated(&mut points, tol);
        points
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoMetrics {
    pub se: f64,
    pub gee: f64,
    pub tx_power: f64,
}

#[derive(Debug, Clone)]
pub struct ParetoPoint {
    pub alpha: f64,
    pub outcome: Result<ParetoMetrics, TradeoffError>,
    /// False when another returned point beats this one in both SE and GEE
    /// by more than the tolerance.
    pub non_dominated: bool,
}

/// `a` strictly dominates `b`: better in both metrics by more than `tol`
/// (relative).
pub fn dominates(a: &ParetoMetrics, b: &ParetoMetrics, tol: f64) -> bool {
    a.se > b.se * (1.0 + tol) && a.gee > b.gee * (1.0 + tol)
}

pub fn mark_non_dominated(points: &mut [ParetoPoint], tol: f64) {
    let metrics: Vec<Option<ParetoMetrics>> = points.iter().map(|p| p.outcome.as_ref().ok().copied()).collect();
    for (i, p) in points.iter_mut().enumerate() {
        p.non_dominated = match &metrics[i] {
            Some(mi) => !metrics
                .iter()
                .enumerate()
                .any(|(j, mj)| j != i && mj.as_ref().is_some_and(|mj| dominates(mj, mi, tol))),
            None => false,
        };
    }
}

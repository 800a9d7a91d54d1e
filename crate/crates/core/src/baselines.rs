//! Single-objective designs: power minimisation (the feasibility gate),
//! sum-rate maximisation, Dinkelbach energy-efficiency maximisation and the
//! green-power search.
//!
//! All of them are successive convex approximations over the same conic
//! blocks as the trade-off solver, so their stationary points are directly
//! comparable with the trade-off endpoints.

use log::{debug, warn};
use noma_conic::{ConeProgram, LinExpr, SolveReport, SolveStatus, SolverSettings};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blocks::{self, BeamVars, ChainPoint, EnvelopeSpec};
use crate::system::{self, BeamformerSolution, CVector, ChannelSet, SystemParams};
use crate::TradeoffError;

/// Knobs shared by the SCA loops of the baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaOptions {
    /// Interior-point tolerance of each subproblem.
    pub solver_tol: f64,
    pub max_iters: usize,
    /// Stop when the objective changes by less than this, relative.
    pub rel_tol: f64,
    /// Number of secant pieces per exponential envelope.
    pub envelope_pieces: usize,
    /// Smallest admissible `z − 1` at a linearisation point.
    pub taylor_guard: f64,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            solver_tol: 1e-8,
            max_iters: 100,
            rel_tol: 1e-6,
            envelope_pieces: 64,
            taylor_guard: 1e-6,
        }
    }
}

pub(crate) fn run(p: &ConeProgram, tol: f64, context: &str) -> Result<SolveReport, TradeoffError> {
    let settings = SolverSettings {
        tol,
        max_iter: 150,
        ..SolverSettings::default()
    };
    let rep = noma_conic::solve(p, &settings)?;
    match rep.status {
        SolveStatus::Optimal => Ok(rep),
        // a near-converged iterate is still a usable (slightly inexact) point
        SolveStatus::IterLimit | SolveStatus::NumericalFailure if rep.residuals.max() <= tol * 100.0 => {
            debug!("{context}: accepting {} iterate at {:.2e}", rep.status, rep.residuals.max());
            Ok(rep)
        }
        status => Err(TradeoffError::Subproblem {
            context: context.to_string(),
            status,
        }),
    }
}

/// A common transmit direction with positive real gain at every receiver:
/// maximise `min_k Re(h_k^H u)/‖h_k‖` over the unit ball.
fn common_direction(cs: &ChannelSet, tol: f64) -> Result<CVector, TradeoffError> {
    let mut p = ConeProgram::new();
    let bv = BeamVars::new(&mut p, cs.num_antennas(), 1);
    let s = p.add_var("margin");
    p.add_objective(s, 1.0);
    for h in &cs.channels {
        let norm = h.norm();
        p.add_ge(&bv.re(h, 0).scaled(1.0 / norm), &LinExpr::var(s));
    }
    p.add_soc(&LinExpr::constant(1.0), &bv.coords());
    let rep = run(&p, tol, "direction")?;
    if rep.value(s) <= 1e-9 {
        return Err(TradeoffError::NoFeasibleStart(
            "no direction has positive real gain at every receiver".into(),
        ));
    }
    Ok(bv.extract(&rep.x, 1).remove(0))
}

/// Builds beamformers `w_i = p_i u` along a shared direction, choosing the
/// magnitudes user by user so that the minimum-rate cones and the SIC order
/// hold with a 1% margin.
pub(crate) fn constructive_start(
    cs: &ChannelSet,
    params: &SystemParams,
    etas: &[f64],
    direction: &CVector,
) -> Option<Vec<CVector>> {
    let k = cs.num_users();
    let g: Vec<f64> = cs.channels.iter().map(|h| h.dotc(direction).re).collect();
    let c2: Vec<f64> = cs.channels.iter().map(|h| h.dotc(direction).norm_sqr()).collect();
    if g.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let floor = 1e-3 * params.noise_vars.iter().copied().fold(f64::INFINITY, f64::min).sqrt();
    let mut mags: Vec<f64> = Vec::with_capacity(k);
    let mut energy = 0.0;
    for i in 0..k {
        let mut need = mags.last().map_or(floor, |m| m * 1.01);
        for d in 0..=i {
            let req = etas[i].sqrt() * (c2[d] * energy + params.noise_vars[d]).sqrt() / g[d];
            need = need.max(req * 1.01);
        }
        energy += need * need;
        mags.push(need);
    }
    Some(mags.iter().map(|m| direction * Complex64::new(*m, 0.0)).collect())
}

fn perturbed(u: &CVector, rng: &mut ChaCha8Rng, size: f64) -> CVector {
    let noise = CVector::from_fn(u.len(), |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let v = u + noise * Complex64::new(size / (u.len() as f64).sqrt(), 0.0);
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Perturbed copies of the common direction tried besides the direction itself.
const PERTURBED_STARTS: usize = 8;

/// Feasible starting beamformers for the given thresholds: the common
/// direction first, then random perturbations of it.
pub(crate) fn feasible_starts(
    cs: &ChannelSet,
    params: &SystemParams,
    etas: &[f64],
    tol: f64,
) -> Result<Vec<Vec<CVector>>, TradeoffError> {
    let u = common_direction(cs, tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut starts = Vec::new();
    if let Some(w) = constructive_start(cs, params, etas, &u) {
        starts.push(w);
    }
    for _ in 0..PERTURBED_STARTS {
        if let Some(w) = constructive_start(cs, params, etas, &perturbed(&u, &mut rng, 0.2)) {
            starts.push(w);
        }
    }
    if starts.is_empty() {
        return Err(TradeoffError::NoFeasibleStart("constructive start failed".into()));
    }
    Ok(starts)
}

fn power_min_from(
    cs: &ChannelSet,
    params: &SystemParams,
    start: Vec<CVector>,
    opts: &ScaOptions,
) -> Result<Vec<CVector>, TradeoffError> {
    let (n, k) = (cs.num_antennas(), cs.num_users());
    let mut w = start;
    let mut power = system::tx_power_of(&w);
    for it in 0..opts.max_iters {
        let mut p = ConeProgram::new();
        let bv = BeamVars::new(&mut p, n, k);
        let t = p.add_var("norm");
        p.add_objective(t, -1.0);
        p.add_soc(&LinExpr::var(t), &bv.coords());
        blocks::add_min_rate(&mut p, &bv, cs, params, &w);
        blocks::add_sic_chain(&mut p, &bv, cs, &w);
        let rep = run(&p, opts.solver_tol, "power minimisation")?;
        let next = bv.extract(&rep.x, k);
        let next_power = system::tx_power_of(&next);
        let change = (power - next_power).abs();
        w = next;
        let prev = power;
        power = next_power;
        if change <= opts.rel_tol * prev.max(1e-12) {
            debug!("power minimisation converged after {} iterations", it + 1);
            break;
        }
    }
    Ok(w)
}

/// Minimum transmit power meeting every rate threshold under the SIC
/// constraints, together with the beamformers attaining it.
pub fn solve_power_min(cs: &ChannelSet, params: &SystemParams) -> Result<(f64, BeamformerSolution), TradeoffError> {
    solve_power_min_with(cs, params, &ScaOptions::default())
}

pub fn solve_power_min_with(
    cs: &ChannelSet,
    params: &SystemParams,
    opts: &ScaOptions,
) -> Result<(f64, BeamformerSolution), TradeoffError> {
    params.validate()?;
    if params.sinr_thresholds().iter().all(|e| *e == 0.0) {
        let zero = vec![CVector::zeros(cs.num_antennas()); cs.num_users()];
        return Ok((0.0, BeamformerSolution::evaluate(zero, cs, params)));
    }
    let starts = feasible_starts(cs, params, params.sinr_thresholds(), opts.solver_tol)?;
    let mut best: Option<BeamformerSolution> = None;
    let mut last_err = None;
    for start in starts {
        match power_min_from(cs, params, start, opts) {
            Ok(w) => {
                let sol = BeamformerSolution::evaluate(w, cs, params);
                if best.as_ref().is_none_or(|b| sol.tx_power < b.tx_power) {
                    best = Some(sol);
                }
            }
            Err(e) => {
                warn!("power minimisation start failed: {e}");
                last_err = Some(e);
            }
        }
    }
    match best {
        Some(sol) => Ok((sol.tx_power, sol)),
        None => Err(last_err.unwrap_or_else(|| TradeoffError::NoFeasibleStart("no start".into()))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    Feasible(f64),
    Infeasible(f64),
}

impl Feasibility {
    pub fn p_star(&self) -> f64 {
        match self {
            Feasibility::Feasible(p) | Feasibility::Infeasible(p) => *p,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

/// Compares the minimum required power with the budget.
pub fn feasibility_check(cs: &ChannelSet, params: &SystemParams) -> Result<Feasibility, TradeoffError> {
    let (p_star, _) = solve_power_min(cs, params)?;
    Ok(if p_star <= params.p_ava {
        Feasibility::Feasible(p_star)
    } else {
        Feasibility::Infeasible(p_star)
    })
}

/// Power-min beamformers scaled uniformly to transmit `target` watts (never
/// scaled down). Uniform scaling keeps the SIC order and only raises SINRs.
pub(crate) fn scaled_to(power_min: &BeamformerSolution, target: f64) -> Vec<CVector> {
    let gamma = (target / power_min.tx_power).sqrt().max(1.0);
    power_min
        .w
        .iter()
        .map(|v| v * Complex64::new(gamma, 0.0))
        .collect()
}

/// Starting beamformers for the budget-constrained designs: the power-min
/// solution scaled up to `min(2 P*, P_ava)`, which leaves every rate cone
/// strictly slack.
pub(crate) fn scaled_start(power_min: &BeamformerSolution, p_ava: f64) -> Vec<CVector> {
    scaled_to(power_min, (2.0 * power_min.tx_power).min(p_ava * (1.0 - 1e-6)))
}

/// Fallback start when no rate threshold applies: the constructive beams for
/// a small SINR target, scaled to use 90% of the budget.
fn unconstrained_start(cs: &ChannelSet, params: &SystemParams, tol: f64) -> Result<Vec<CVector>, TradeoffError> {
    let etas = vec![0.01; cs.num_users()];
    let mut last = None;
    for w in feasible_starts(cs, params, &etas, tol)? {
        let power = system::tx_power_of(&w);
        let gamma = (0.9 * params.p_ava / power).sqrt();
        let scaled: Vec<CVector> = w.iter().map(|v| v * Complex64::new(gamma, 0.0)).collect();
        if blocks::chain_point_from(&scaled, cs, params, envelope(cs, params, &ScaOptions::default())).is_ok() {
            return Ok(scaled);
        }
        last = Some(scaled);
    }
    last.ok_or_else(|| TradeoffError::NoFeasibleStart("no unconstrained start".into()))
}

pub(crate) fn envelope(cs: &ChannelSet, params: &SystemParams, opts: &ScaOptions) -> EnvelopeSpec {
    EnvelopeSpec {
        hi: blocks::rate_ceiling(cs, params),
        pieces: opts.envelope_pieces,
    }
}

/// Keeps a chain's base point away from the `z = 1` singularity.
pub(crate) fn guard_chain(point: &mut ChainPoint, guard: f64) -> usize {
    let mut clamps = 0;
    for z in point.z.iter_mut() {
        if *z - 1.0 < guard {
            debug!("clamping z − 1 = {:.3e} to {guard:.1e}", *z - 1.0);
            *z = 1.0 + guard;
            clamps += 1;
        }
    }
    for row in point.a.iter_mut() {
        for a in row.iter_mut() {
            *a = a.max(1e-12);
        }
    }
    clamps
}

/// What the rate-based SCA loops maximise on top of `Σρ`.
#[derive(Debug, Clone, Copy)]
enum RateObjective {
    SumRate,
    /// `Σρ − λ (p/ε0 + P_l)` with `p ≥ ‖W‖²`.
    Dinkelbach(f64),
}

/// SCA on the rate chain; returns the final beamformers and the objective
/// trace.
fn rate_sca(
    cs: &ChannelSet,
    params: &SystemParams,
    with_min_rate: bool,
    objective: RateObjective,
    start: Vec<CVector>,
    opts: &ScaOptions,
) -> Result<(Vec<CVector>, Vec<f64>), TradeoffError> {
    let (n, k) = (cs.num_antennas(), cs.num_users());
    let env = envelope(cs, params, opts);
    let (mut chain, _) = blocks::chain_point_from(&start, cs, params, env).map_err(TradeoffError::NoFeasibleStart)?;
    guard_chain(&mut chain, opts.taylor_guard);
    let mut w = start;
    let mut trace: Vec<f64> = Vec::new();
    for _ in 0..opts.max_iters {
        let mut p = ConeProgram::new();
        let bv = BeamVars::new(&mut p, n, k);
        let rho: Vec<_> = (0..k).map(|i| p.add_var(format!("rho{i}"))).collect();
        for r in &rho {
            p.add_objective(*r, 1.0);
        }
        let rc = blocks::add_rate_chain(&mut p, &bv, cs, params, &rho, &chain, &w, env, "c");
        blocks::add_sic_chain(&mut p, &bv, cs, &w);
        blocks::add_power_budget(&mut p, &bv, params.p_ava);
        if with_min_rate {
            blocks::add_min_rate(&mut p, &bv, cs, params, &w);
        }
        if let RateObjective::Dinkelbach(lambda) = objective {
            let pw = p.add_var("power");
            p.add_objective(pw, -lambda / params.eps0);
            let scale = system::tx_power_of(&w).sqrt().max(1e-3);
            p.add_quad_le(&bv.coords(), &LinExpr::var(pw), scale);
        }
        let rep = run(&p, opts.solver_tol, "rate maximisation")?;
        w = bv.extract(&rep.x, k);
        chain = rc.point(&rep.x);
        guard_chain(&mut chain, opts.taylor_guard);
        let obj = rep.objective;
        let done = trace
            .last()
            .is_some_and(|prev: &f64| (obj - prev).abs() <= opts.rel_tol * prev.abs().max(1.0));
        trace.push(obj);
        if done {
            break;
        }
    }
    Ok((w, trace))
}

/// Sum-rate maximisation under the budget and SIC order, optionally with the
/// minimum-rate constraints.
pub fn solve_se_max(cs: &ChannelSet, params: &SystemParams, with_min_rate: bool) -> Result<BeamformerSolution, TradeoffError> {
    solve_se_max_with(cs, params, with_min_rate, None, &ScaOptions::default())
}

/// As [`solve_se_max`]; `power_min` (when already known) seeds the
/// minimum-rate variant.
pub fn solve_se_max_with(
    cs: &ChannelSet,
    params: &SystemParams,
    with_min_rate: bool,
    power_min: Option<&BeamformerSolution>,
    opts: &ScaOptions,
) -> Result<BeamformerSolution, TradeoffError> {
    params.validate()?;
    let start = if with_min_rate {
        let pm = match power_min {
            Some(pm) => pm.clone(),
            None => solve_power_min_with(cs, params, opts)?.1,
        };
        if pm.tx_power > params.p_ava {
            return Err(TradeoffError::Infeasible {
                p_star: pm.tx_power,
                p_ava: params.p_ava,
            });
        }
        budget_start(cs, params, &pm, opts)?
    } else {
        unconstrained_start(cs, params, opts.solver_tol)?
    };
    let (w, _) = rate_sca(cs, params, with_min_rate, RateObjective::SumRate, start, opts)?;
    Ok(BeamformerSolution::evaluate(w, cs, params))
}

/// Start for the budget-constrained designs with rate thresholds; falls back
/// to the unconstrained start when the thresholds are all zero.
pub(crate) fn budget_start(
    cs: &ChannelSet,
    params: &SystemParams,
    power_min: &BeamformerSolution,
    opts: &ScaOptions,
) -> Result<Vec<CVector>, TradeoffError> {
    if power_min.tx_power > 1e-9 * params.p_ava {
        let w = scaled_start(power_min, params.p_ava);
        if blocks::chain_point_from(&w, cs, params, envelope(cs, params, opts)).is_ok() {
            return Ok(w);
        }
    }
    unconstrained_start(cs, params, opts.solver_tol)
}

/// Energy-efficiency maximisation by Dinkelbach's method: the ratio
/// `Σ R_i / (P_t/ε0 + P_l)` is replaced by `Σ R_i − λ (P_t/ε0 + P_l)`, solved by
/// SCA, and `λ` is updated to the achieved ratio until the parametric
/// optimum is within 1e−6 of zero.
pub fn solve_gee_max(cs: &ChannelSet, params: &SystemParams) -> Result<BeamformerSolution, TradeoffError> {
    solve_gee_max_with(cs, params, None, &ScaOptions::default())
}

pub fn solve_gee_max_with(
    cs: &ChannelSet,
    params: &SystemParams,
    power_min: Option<&BeamformerSolution>,
    opts: &ScaOptions,
) -> Result<BeamformerSolution, TradeoffError> {
    solve_gee_max_from(cs, params, power_min, &[], opts)
}

/// Dinkelbach from the scaled power-min start and from each of `extra`
/// (feasible beamformers, e.g. a sum-rate solution); keeps the most
/// efficient result.
pub fn solve_gee_max_from(
    cs: &ChannelSet,
    params: &SystemParams,
    power_min: Option<&BeamformerSolution>,
    extra: &[Vec<CVector>],
    opts: &ScaOptions,
) -> Result<BeamformerSolution, TradeoffError> {
    params.validate()?;
    let pm = match power_min {
        Some(pm) => pm.clone(),
        None => solve_power_min_with(cs, params, opts)?.1,
    };
    if pm.tx_power > params.p_ava {
        return Err(TradeoffError::Infeasible {
            p_star: pm.tx_power,
            p_ava: params.p_ava,
        });
    }
    let lambda0 = gee_ratio(&pm, params);
    let mut starts = vec![budget_start(cs, params, &pm, opts)?];
    starts.extend(extra.iter().cloned());
    let mut best: Option<BeamformerSolution> = None;
    let mut last_err = None;
    for w in starts {
        match dinkelbach(cs, params, w, lambda0, opts) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|b| sol.gee > b.gee) {
                    best = Some(sol);
                }
            }
            Err(e) => {
                warn!("Dinkelbach start failed: {e}");
                last_err = Some(e);
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| TradeoffError::NoFeasibleStart("no start".into())))
}

/// Sum rate per unit consumed power, bits/joule/Hz.
fn gee_ratio(sol: &BeamformerSolution, params: &SystemParams) -> f64 {
    sol.se / system::consumed_power(sol.tx_power, params)
}

fn dinkelbach(
    cs: &ChannelSet,
    params: &SystemParams,
    start: Vec<CVector>,
    lambda0: f64,
    opts: &ScaOptions,
) -> Result<BeamformerSolution, TradeoffError> {
    let mut lambda = lambda0;
    let mut w = start;
    let inner = ScaOptions {
        max_iters: 40,
        ..*opts
    };
    for it in 0..50 {
        let (next, _) = rate_sca(cs, params, true, RateObjective::Dinkelbach(lambda), w, &inner)?;
        let sol = BeamformerSolution::evaluate(next, cs, params);
        let f = sol.se - lambda * system::consumed_power(sol.tx_power, params);
        debug!("Dinkelbach iteration {it}: lambda {lambda:.6e}, F {f:.3e}");
        lambda = gee_ratio(&sol, params);
        w = sol.w.clone();
        if f.abs() <= 1e-6 {
            return Ok(sol);
        }
    }
    Err(TradeoffError::NumericalFailure(
        "Dinkelbach iteration did not converge in 50 steps".into(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenPower {
    /// First grid budget at which the energy-efficient design leaves more
    /// than 1% of the budget unused.
    Saturated(f64),
    /// The design used the whole budget at every grid point; carries the top
    /// of the grid.
    NotSaturated(f64),
}

impl GreenPower {
    pub fn watts(&self) -> f64 {
        match self {
            GreenPower::Saturated(p) | GreenPower::NotSaturated(p) => *p,
        }
    }
}

pub fn find_green_power(cs: &ChannelSet, params: &SystemParams, p_grid: &[f64]) -> Result<GreenPower, TradeoffError> {
    if p_grid.is_empty() || p_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TradeoffError::InvalidParameter(
            "power grid must be non-empty and strictly ascending".into(),
        ));
    }
    for &budget in p_grid {
        let prm = params.clone().with_budget(budget);
        let sol = solve_gee_max(cs, &prm)?;
        if sol.tx_power < 0.99 * budget {
            return Ok(GreenPower::Saturated(budget));
        }
    }
    Ok(GreenPower::NotSaturated(*p_grid.last().unwrap()))
}

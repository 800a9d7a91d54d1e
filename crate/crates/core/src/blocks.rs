//! Conic building blocks shared by the trade-off solver and the baselines.
//!
//! Beamformers enter the programs as interleaved real/imaginary coordinates,
//! so `h^H w = Σ (h_r w_r + h_i w_i) + j Σ (h_r w_i − h_i w_r)` is linear in
//! the decision variables.

use noma_conic::{ConeProgram, LinExpr, Var};
use num_complex::Complex64;

use crate::system::{CVector, ChannelSet, SystemParams};

/// Relative margin kept on the linearised SIC inequalities so that solver
/// round-off cannot turn into an ordering violation of the exact check.
pub(crate) const SIC_MARGIN: f64 = 1e-6;

/// Relative shrink of the power budget for the same reason.
pub(crate) const BUDGET_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct BeamVars {
    vars: Vec<Var>,
    n: usize,
}

impl BeamVars {
    pub fn new(p: &mut ConeProgram, n: usize, k: usize) -> Self {
        let mut vars = Vec::with_capacity(2 * n * k);
        for j in 0..k {
            for a in 0..n {
                vars.push(p.add_var(format!("w{j}_{a}_re")));
                vars.push(p.add_var(format!("w{j}_{a}_im")));
            }
        }
        Self { vars, n }
    }

    pub fn num_antennas(&self) -> usize {
        self.n
    }

    /// Real and imaginary variables of antenna `a` of beam `j`.
    pub fn var_pair(&self, j: usize, a: usize) -> (Var, Var) {
        (self.re_var(j, a), self.im_var(j, a))
    }

    fn re_var(&self, j: usize, a: usize) -> Var {
        self.vars[2 * (j * self.n + a)]
    }

    fn im_var(&self, j: usize, a: usize) -> Var {
        self.vars[2 * (j * self.n + a) + 1]
    }

    /// `Re(h^H w_j)`.
    pub fn re(&self, h: &CVector, j: usize) -> LinExpr {
        let mut e = LinExpr::zero();
        for (a, c) in h.iter().enumerate() {
            e.add_term(self.re_var(j, a), c.re);
            e.add_term(self.im_var(j, a), c.im);
        }
        e
    }

    /// `Im(h^H w_j)`.
    pub fn im(&self, h: &CVector, j: usize) -> LinExpr {
        let mut e = LinExpr::zero();
        for (a, c) in h.iter().enumerate() {
            e.add_term(self.im_var(j, a), c.re);
            e.add_term(self.re_var(j, a), -c.im);
        }
        e
    }

    /// Every coordinate, for norm constraints.
    pub fn coords(&self) -> Vec<LinExpr> {
        self.vars.iter().map(|v| LinExpr::var(*v)).collect()
    }

    pub fn extract(&self, x: &[f64], k: usize) -> Vec<CVector> {
        (0..k)
            .map(|j| {
                CVector::from_fn(self.n, |a, _| {
                    Complex64::new(x[self.re_var(j, a).0], x[self.im_var(j, a).0])
                })
            })
            .collect()
    }
}

/// `‖vec W‖² ≤ P_ava` as a second-order cone.
pub(crate) fn add_power_budget(p: &mut ConeProgram, bv: &BeamVars, p_ava: f64) {
    let radius = (p_ava * (1.0 - BUDGET_MARGIN)).sqrt();
    p.add_soc(&LinExpr::constant(radius), &bv.coords());
}

/// Interference-plus-noise amplitude seen by receiver `k` when decoding user
/// `i`: the components of `‖[h_k^H w_0 … h_k^H w_{i−1}, σ_k]‖`.
pub(crate) fn interference_terms(bv: &BeamVars, cs: &ChannelSet, params: &SystemParams, i: usize, k: usize) -> Vec<LinExpr> {
    let h = &cs.channels[k];
    let mut u = Vec::with_capacity(2 * i + 1);
    for j in 0..i {
        u.push(bv.re(h, j));
        u.push(bv.im(h, j));
    }
    u.push(LinExpr::constant(params.noise_vars[k].sqrt()));
    u
}

/// Phase-aligned gain `Re(e^{−jφ} h^H w_j)` with `φ = arg(h^H w_jⁿ)`: a
/// linear lower bound on `|h^H w_j|` that is tight at the base point.
pub(crate) fn aligned_gain(bv: &BeamVars, h: &CVector, j: usize, base: &[CVector]) -> LinExpr {
    let x = h.dotc(&base[j]);
    let r = x.norm();
    let u = if r > 0.0 { x / r } else { Complex64::new(1.0, 0.0) };
    bv.re(h, j).scaled(u.re).plus(&bv.im(h, j).scaled(u.im))
}

/// Minimum-rate cones `gain/√η_i ≥ ‖[interference, σ_k]‖` for every decoder
/// `k ≤ i`, with the phase-aligned gain at `base`; users with a zero
/// threshold are skipped.
pub(crate) fn add_min_rate(
    p: &mut ConeProgram,
    bv: &BeamVars,
    cs: &ChannelSet,
    params: &SystemParams,
    base: &[CVector],
) -> usize {
    let mut added = 0;
    for i in 0..cs.num_users() {
        let eta = params.sinr_threshold(i);
        if eta <= 0.0 {
            continue;
        }
        for k in 0..=i {
            let t = aligned_gain(bv, &cs.channels[k], i, base).scaled(1.0 / eta.sqrt());
            p.add_soc(&t, &interference_terms(bv, cs, params, i, k));
            added += 1;
        }
    }
    added
}

/// SIC ordering `|h_i^H w_j|² ≤ |h_i^H w_{j+1}|²` for every receiver `i`,
/// with the right-hand side replaced by its tangent at `base` (a global
/// under-estimator, so the constraint is a restriction).
pub(crate) fn add_sic_chain(p: &mut ConeProgram, bv: &BeamVars, cs: &ChannelSet, base: &[CVector]) -> usize {
    let k = cs.num_users();
    let mut added = 0;
    for i in 0..k {
        let h = &cs.channels[i];
        for j in 0..k.saturating_sub(1) {
            let xn = h.dotc(&base[j + 1]);
            // 2 Re(conj(xⁿ) x) − |xⁿ|²
            let lin = bv
                .re(h, j + 1)
                .scaled(2.0 * xn.re)
                .plus(&bv.im(h, j + 1).scaled(2.0 * xn.im))
                .with_constant(-xn.norm_sqr())
                .scaled(1.0 - SIC_MARGIN);
            let scale = xn.norm().max(1e-3);
            p.add_quad_le(&[bv.re(h, j), bv.im(h, j)], &lin, scale);
            added += 1;
        }
    }
    added
}

/// Conservative rate link for one (user, decoder) pair:
///
/// `g ≥ ½ (t (z − 1) + a²/t)  ≥  √(z − 1)·a`,
///
/// where `g` is a linear lower bound on the received amplitude and
/// `t = aⁿ/√(zⁿ − 1)` makes the bound tight at the base point. Stored as
/// `a² ≤ t (2g − t (z − 1))`.
pub(crate) fn add_rate_link(p: &mut ConeProgram, gain: LinExpr, z: Var, a: Var, base_z: f64, base_a: f64) {
    let t = base_a / (base_z - 1.0).sqrt();
    let rhs = gain
        .scaled(2.0 * t)
        .plus(&LinExpr::term(z, -t * t))
        .with_constant(t * t);
    p.add_quad_le(&[LinExpr::var(a)], &rhs, base_a.max(1e-6));
}

/// `a ≥ ‖[interference, σ_k]‖`.
pub(crate) fn add_interference_bound(
    p: &mut ConeProgram,
    bv: &BeamVars,
    cs: &ChannelSet,
    params: &SystemParams,
    i: usize,
    k: usize,
    a: Var,
) {
    p.add_soc(&LinExpr::var(a), &interference_terms(bv, cs, params, i, k));
}

/// Largest per-user rate any budget-feasible beamformer can reach, plus one
/// bit of headroom; used as the upper end of the exponential envelopes.
pub(crate) fn rate_ceiling(cs: &ChannelSet, params: &SystemParams) -> f64 {
    let gmax = cs.channels.iter().map(|h| h.norm_squared()).fold(0.0, f64::max);
    let smin = params.noise_vars.iter().copied().fold(f64::INFINITY, f64::min);
    (1.0 + params.p_ava * gmax / smin).log2() + 1.0
}

/// Interference-plus-noise amplitude `‖[h_k^H w_j]_{j<i}, σ_k‖` at a point.
pub(crate) fn interference_amplitude(w: &[CVector], cs: &ChannelSet, params: &SystemParams, i: usize, k: usize) -> f64 {
    let h = &cs.channels[k];
    let s: f64 = (0..i).map(|j| h.dotc(&w[j]).norm_sqr()).sum();
    (s + params.noise_vars[k]).sqrt()
}

/// `|h_k^H w_i|` at a point.
pub(crate) fn gain_amplitude(w: &[CVector], cs: &ChannelSet, i: usize, k: usize) -> f64 {
    cs.channels[k].dotc(&w[i]).norm()
}

/// Per-user rate slacks `z_i` and per-(user, decoder) amplitudes `a_{i,k}`
/// tying `ρ_i ≤ log2 z_i ≤ log2(1 + SINR_k^{(i)})` together.
#[derive(Debug, Clone)]
pub(crate) struct RateChain {
    pub z: Vec<Var>,
    pub a: Vec<Vec<Var>>,
}

/// Base point of one rate chain.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ChainPoint {
    pub z: Vec<f64>,
    pub a: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EnvelopeSpec {
    pub hi: f64,
    pub pieces: usize,
}

impl EnvelopeSpec {
    pub fn envelope(&self) -> noma_conic::ExpEnvelope {
        noma_conic::ExpEnvelope::new(0.0, self.hi, self.pieces).expect("valid envelope")
    }

    /// The uniform envelope with breakpoints added at `log2 z` and a quarter
    /// piece either side, so it is exact at the base point.
    pub fn refined_at(&self, z: f64) -> noma_conic::ExpEnvelope {
        let half = self.hi / self.pieces as f64 / 4.0;
        self.envelope().refined(z.max(1.0).log2(), half)
    }
}

/// Chords each refined envelope adds on top of the uniform pieces.
pub(crate) const REFINED_PIECES: usize = 3;

/// Adds one rate chain: interference cones, conservative rate links and the
/// exponential envelopes `z_i ≥ 2^{ρ_i}`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn add_rate_chain(
    p: &mut ConeProgram,
    bv: &BeamVars,
    cs: &ChannelSet,
    params: &SystemParams,
    rho: &[Var],
    base: &ChainPoint,
    base_w: &[CVector],
    env: EnvelopeSpec,
    tag: &str,
) -> RateChain {
    let k = cs.num_users();
    let z: Vec<Var> = (0..k).map(|i| p.add_var(format!("{tag}_z{i}"))).collect();
    let a: Vec<Vec<Var>> = (0..k)
        .map(|i| (0..=i).map(|d| p.add_var(format!("{tag}_a{i}_{d}"))).collect())
        .collect();
    for i in 0..k {
        for d in 0..=i {
            add_interference_bound(p, bv, cs, params, i, d, a[i][d]);
            let gain = aligned_gain(bv, &cs.channels[d], i, base_w);
            add_rate_link(p, gain, z[i], a[i][d], base.z[i], base.a[i][d]);
        }
        noma_conic::add_envelope(p, z[i], rho[i], &env.refined_at(base.z[i]));
    }
    RateChain { z, a }
}

impl RateChain {
    pub fn point(&self, x: &[f64]) -> ChainPoint {
        ChainPoint {
            z: self.z.iter().map(|v| x[v.0]).collect(),
            a: self.a.iter().map(|row| row.iter().map(|v| x[v.0]).collect()).collect(),
        }
    }
}

/// Relative margin by which an initial point sits inside the rate links.
pub(crate) const START_MARGIN: f64 = 1e-3;

/// Slack values that make `w` strictly feasible for a rate chain, plus the
/// matching rate slacks `ρ`. Fails when some decoder receives nothing from
/// a user (the rate link cannot be satisfied then).
pub(crate) fn chain_point_from(
    w: &[CVector],
    cs: &ChannelSet,
    params: &SystemParams,
    env: EnvelopeSpec,
) -> Result<(ChainPoint, Vec<f64>), String> {
    let k = cs.num_users();
    let envelope = env.envelope();
    let mut z = Vec::with_capacity(k);
    let mut a = Vec::with_capacity(k);
    let mut rho = Vec::with_capacity(k);
    for i in 0..k {
        let mut row = Vec::with_capacity(i + 1);
        let mut worst = f64::INFINITY;
        for d in 0..=i {
            let amp = interference_amplitude(w, cs, params, i, d) * (1.0 + 1e-6);
            let g = gain_amplitude(w, cs, i, d);
            if !(g > 0.0) {
                return Err(format!("user {i} is not heard at decoder {d}"));
            }
            worst = worst.min((g / amp).powi(2));
            row.push(amp);
        }
        let zi = 1.0 + (1.0 - START_MARGIN) * worst;
        let ri = envelope.inverse(zi).unwrap_or(0.0);
        z.push(zi);
        a.push(row);
        rho.push((ri * (1.0 - START_MARGIN)).max(0.0));
    }
    Ok((ChainPoint { z, a }, rho))
}

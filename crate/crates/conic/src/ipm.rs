//! Homogeneous self-dual primal-dual interior-point method.
//!
//! Internally the solver minimises `qᵀx` with `q = −c`. The homogeneous
//! embedding introduces `τ, κ ≥ 0` and drives the residuals
//!
//! ```text
//!     r_x = Aᵀy + Gᵀz + qτ
//!     r_y = Ax − bτ
//!     r_z = Gx + s − hτ
//!     r_τ = κ + qᵀx + bᵀy + hᵀz
//! ```
//!
//! to zero together with the complementarity `s∘z`, `τκ`. Search directions use
//! Nesterov–Todd scaling and Mehrotra's predictor-corrector. Each Newton system
//! is reduced to the normal equations `GᵀW⁻²G` (dense, with static
//! regularisation) and polished by iterative refinement on the unreduced
//! system.

use nalgebra::{DMatrix, DVector};

use crate::cones::{self, Scaling};
use crate::program::{Cone, ConeProgram, Var};
use crate::ConicError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Target for primal/dual residuals and relative gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Static regularisation added to the reduced KKT matrix.
    pub static_reg: f64,
    pub refine_steps: usize,
    /// Fraction of the maximal step to the cone boundary.
    pub step_fraction: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 100,
            static_reg: 1e-9,
            refine_steps: 3,
            step_fraction: 0.99,
        }
    }
}

impl SolverSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterLimit,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::PrimalInfeasible => "primal_infeasible",
            SolveStatus::DualInfeasible => "dual_infeasible",
            SolveStatus::IterLimit => "iter_limit",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative residuals of the returned iterate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Primal point (or a dual-infeasibility ray).
    pub x: Vec<f64>,
    /// Equality multipliers.
    pub y: Vec<f64>,
    /// Cone multipliers (or a primal-infeasibility certificate).
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    /// `cᵀx` (maximisation sense).
    pub objective: f64,
    /// Dual bound on `cᵀx`.
    pub dual_objective: f64,
    pub iterations: usize,
    pub residuals: Residuals,
}

impl SolveReport {
    pub fn value(&self, v: Var) -> f64 {
        self.x[v.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

struct SocBlock {
    dim: usize,
    cols: Vec<usize>,
    /// `dim × cols.len()` row-major slice of `G`.
    dense: Vec<f64>,
}

struct Problem<'a> {
    p: &'a ConeProgram,
    n: usize,
    m: usize,
    q: Vec<f64>,
    socs: Vec<SocBlock>,
    /// `(cone, start)` for every block.
    blocks: Vec<(Cone, usize)>,
    degree: usize,
}

impl<'a> Problem<'a> {
    fn new(p: &'a ConeProgram) -> Self {
        let n = p.num_vars();
        let m = p.cone_dim();
        let mut socs = Vec::new();
        let mut blocks = Vec::new();
        let mut off = 0;
        for cone in p.cones() {
            blocks.push((*cone, off));
            if let Cone::SecondOrder(dim) = *cone {
                let mut cols: Vec<usize> = p.g_rows[off..off + dim]
                    .iter()
                    .flat_map(|r| r.iter().map(|e| e.0))
                    .collect();
                cols.sort_unstable();
                cols.dedup();
                let mut dense = vec![0.0; dim * cols.len()];
                for (r, row) in p.g_rows[off..off + dim].iter().enumerate() {
                    for (j, c) in row {
                        let k = cols.binary_search(j).unwrap();
                        dense[r * cols.len() + k] = *c;
                    }
                }
                socs.push(SocBlock {
                    dim,
                    cols,
                    dense,
                });
            }
            off += cone.dim();
        }
        Self {
            p,
            n,
            m,
            q: p.objective.iter().map(|c| -c).collect(),
            socs,
            blocks,
            degree: p.cones().iter().map(Cone::degree).sum(),
        }
    }

    fn g_mul(&self, x: &[f64]) -> Vec<f64> {
        self.p
            .g_rows
            .iter()
            .map(|row| row.iter().map(|(j, c)| c * x[*j]).sum())
            .collect()
    }

    fn gt_mul(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, zi) in self.p.g_rows.iter().zip(z) {
            for (j, c) in row {
                out[*j] += c * zi;
            }
        }
        out
    }

    fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        self.p
            .eq_rows
            .iter()
            .map(|row| row.iter().map(|(j, c)| c * x[*j]).sum())
            .collect()
    }

    fn at_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, yi) in self.p.eq_rows.iter().zip(y) {
            for (j, c) in row {
                out[*j] += c * yi;
            }
        }
        out
    }
}

/// Applies a blockwise operation (`W`, `W⁻¹`) to a full cone vector.
fn apply_blocks(blocks: &[(Cone, usize)], scal: &[Scaling], v: &[f64], inverse: bool) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for ((cone, start), w) in blocks.iter().zip(scal) {
        let r = *start..*start + cone.dim();
        if inverse {
            w.apply_inv(&v[r.clone()], &mut out[r]);
        } else {
            w.apply(&v[r.clone()], &mut out[r]);
        }
    }
    out
}

struct Kkt<'a, 'b> {
    prob: &'b Problem<'a>,
    scal: &'b [Scaling],
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    refine: usize,
}

impl<'a, 'b> Kkt<'a, 'b> {
    fn factor(prob: &'b Problem<'a>, scal: &'b [Scaling], reg: f64, refine: usize) -> Option<Self> {
        let n = prob.n;
        let p_eq = prob.p.num_eq();
        let mut h = DMatrix::<f64>::zeros(n + p_eq, n + p_eq);
        // nonnegative rows: rank-one updates g gᵀ / w²
        for ((cone, start), w) in prob.blocks.iter().zip(scal) {
            if let (Cone::Nonneg(d), Scaling::Nonneg { w }) = (cone, w) {
                for k in 0..*d {
                    let row = &prob.p.g_rows[start + k];
                    let f = 1.0 / (w[k] * w[k]);
                    for (a, ca) in row {
                        for (b, cb) in row {
                            h[(*a, *b)] += f * ca * cb;
                        }
                    }
                }
            }
        }
        // second-order blocks: (W⁻¹G)ᵀ(W⁻¹G) on the block's columns
        let mut soc_idx = 0;
        for ((cone, _), w) in prob.blocks.iter().zip(scal) {
            if let Cone::SecondOrder(_) = cone {
                let blk = &prob.socs[soc_idx];
                soc_idx += 1;
                let nc = blk.cols.len();
                let mut y = vec![0.0; blk.dim * nc];
                let mut col = vec![0.0; blk.dim];
                let mut out = vec![0.0; blk.dim];
                for k in 0..nc {
                    for r in 0..blk.dim {
                        col[r] = blk.dense[r * nc + k];
                    }
                    w.apply_inv(&col, &mut out);
                    for r in 0..blk.dim {
                        y[r * nc + k] = out[r];
                    }
                }
                for a in 0..nc {
                    for b in a..nc {
                        let mut acc = 0.0;
                        for r in 0..blk.dim {
                            acc += y[r * nc + a] * y[r * nc + b];
                        }
                        let (ca, cb) = (blk.cols[a], blk.cols[b]);
                        h[(ca, cb)] += acc;
                        if a != b {
                            h[(cb, ca)] += acc;
                        }
                    }
                }
            }
        }
        for j in 0..n {
            h[(j, j)] += reg;
        }
        for (i, row) in prob.p.eq_rows.iter().enumerate() {
            for (j, c) in row {
                h[(n + i, *j)] += c;
                h[(*j, n + i)] += c;
            }
            h[(n + i, n + i)] -= reg;
        }
        let lu = h.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Self {
            prob,
            scal,
            lu,
            refine,
        })
    }

    fn winv2(&self, v: &[f64]) -> Vec<f64> {
        let t = apply_blocks(&self.prob.blocks, self.scal, v, true);
        apply_blocks(&self.prob.blocks, self.scal, &t, true)
    }

    fn w2(&self, v: &[f64]) -> Vec<f64> {
        let t = apply_blocks(&self.prob.blocks, self.scal, v, false);
        apply_blocks(&self.prob.blocks, self.scal, &t, false)
    }

    fn base_solve(&self, r1: &[f64], r2: &[f64], r3: &[f64]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.prob.n;
        let p_eq = r2.len();
        let t = self.winv2(r3);
        let gt = self.prob.gt_mul(&t);
        let mut rhs = DVector::<f64>::zeros(n + p_eq);
        for j in 0..n {
            rhs[j] = r1[j] + gt[j];
        }
        for i in 0..p_eq {
            rhs[n + i] = r2[i];
        }
        let sol = self.lu.solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let dx: Vec<f64> = sol.rows(0, n).iter().copied().collect();
        let dy: Vec<f64> = sol.rows(n, p_eq).iter().copied().collect();
        let gdx = self.prob.g_mul(&dx);
        let diff: Vec<f64> = gdx.iter().zip(r3).map(|(a, b)| a - b).collect();
        let dz = self.winv2(&diff);
        Some((dx, dy, dz))
    }

    /// Solves `[0 Aᵀ Gᵀ; A 0 0; G 0 −W²] [dx; dy; dz] = [r1; r2; r3]`.
    fn solve(&self, r1: &[f64], r2: &[f64], r3: &[f64]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (mut dx, mut dy, mut dz) = self.base_solve(r1, r2, r3)?;
        let scale = 1.0 + inf_norm(r1).max(inf_norm(r2)).max(inf_norm(r3));
        for _ in 0..self.refine {
            let aty = self.prob.at_mul(&dy);
            let gtz = self.prob.gt_mul(&dz);
            let e1: Vec<f64> = (0..self.prob.n).map(|j| r1[j] - aty[j] - gtz[j]).collect();
            let ax = self.prob.a_mul(&dx);
            let e2: Vec<f64> = r2.iter().zip(&ax).map(|(a, b)| a - b).collect();
            let gx = self.prob.g_mul(&dx);
            let w2z = self.w2(&dz);
            let e3: Vec<f64> = (0..self.prob.m).map(|i| r3[i] - gx[i] + w2z[i]).collect();
            // already at round-off: another pass cannot help
            if inf_norm(&e1).max(inf_norm(&e2)).max(inf_norm(&e3)) <= 1e-14 * scale {
                break;
            }
            let (cx, cy, cz) = self.base_solve(&e1, &e2, &e3)?;
            for (a, b) in dx.iter_mut().zip(&cx) {
                *a += b;
            }
            for (a, b) in dy.iter_mut().zip(&cy) {
                *a += b;
            }
            for (a, b) in dz.iter_mut().zip(&cz) {
                *a += b;
            }
        }
        Some((dx, dy, dz))
    }
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Metrics {
    res: Residuals,
    pcost: f64,
    dcost: f64,
    rx: Vec<f64>,
    ry: Vec<f64>,
    rz: Vec<f64>,
    rt: f64,
    pinf: Option<f64>,
    dinf: Option<f64>,
}

fn metrics(prob: &Problem, it: &Iterate) -> Metrics {
    let p = prob.p;
    let b = &p.eq_rhs;
    let h = &p.h;
    let aty = prob.at_mul(&it.y);
    let gtz = prob.gt_mul(&it.z);
    let ax = prob.a_mul(&it.x);
    let gx = prob.g_mul(&it.x);
    let rx: Vec<f64> = (0..prob.n).map(|j| aty[j] + gtz[j] + prob.q[j] * it.tau).collect();
    let ry: Vec<f64> = (0..b.len()).map(|i| ax[i] - b[i] * it.tau).collect();
    let rz: Vec<f64> = (0..prob.m).map(|i| gx[i] + it.s[i] - h[i] * it.tau).collect();
    let qx = dot(&prob.q, &it.x);
    let by_hz = dot(b, &it.y) + dot(h, &it.z);
    let rt = it.kappa + qx + by_hz;

    let bnorm = norm(b).max(1.0);
    let hnorm = norm(h).max(1.0);
    let qnorm = norm(&prob.q).max(1.0);
    let tau = it.tau;
    let pres = (norm(&ry) / bnorm).max(norm(&rz) / hnorm) / tau;
    let dres = norm(&rx) / qnorm / tau;
    let pcost = qx / tau;
    let dcost = -by_hz / tau;
    let gap = dot(&it.s, &it.z) / (tau * tau);
    let relgap = gap / pcost.abs().min(dcost.abs()).max(1.0);

    let pinf = (by_hz < 0.0).then(|| {
        let r: Vec<f64> = (0..prob.n).map(|j| aty[j] + gtz[j]).collect();
        norm(&r) / qnorm / (-by_hz)
    });
    let dinf = (qx < 0.0).then(|| {
        let gxs: Vec<f64> = (0..prob.m).map(|i| gx[i] + it.s[i]).collect();
        (norm(&ax) / bnorm).max(norm(&gxs) / hnorm) / (-qx)
    });
    Metrics {
        res: Residuals {
            primal: pres,
            dual: dres,
            gap: relgap,
        },
        pcost,
        dcost,
        rx,
        ry,
        rz,
        rt,
        pinf,
        dinf,
    }
}

fn max_step(prob: &Problem, it: &Iterate, dx: &Dir) -> f64 {
    let mut inv: f64 = 0.0;
    for (cone, start) in &prob.blocks {
        let r = *start..*start + cone.dim();
        inv = inv.max(cones::inverse_max_step(*cone, &it.s[r.clone()], &dx.s[r.clone()]));
        inv = inv.max(cones::inverse_max_step(*cone, &it.z[r.clone()], &dx.z[r]));
    }
    inv = inv.max(-dx.tau / it.tau).max(-dx.kappa / it.kappa);
    if inv <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / inv
    }
}

struct Dir {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

/// Solves the cone program.
///
/// `Err` is returned only for malformed input; solver outcomes, including
/// infeasibility and numerical breakdown, are reported through
/// [`SolveReport::status`].
pub fn solve(p: &ConeProgram, settings: &SolverSettings) -> Result<SolveReport, ConicError> {
    p.validate()?;
    if !(settings.tol > 0.0 && settings.tol <= 1e-2) {
        return Err(ConicError::InvalidParameter(format!(
            "tolerance {} outside (0, 1e-2]",
            settings.tol
        )));
    }
    let prob = Problem::new(p);
    let n = prob.n;
    let m = prob.m;
    let p_eq = p.num_eq();

    // Initial point: least-norm primal and dual solutions, shifted into the cone.
    let ident: Vec<Scaling> = prob
        .blocks
        .iter()
        .map(|(cone, _)| match cone {
            Cone::Nonneg(d) => Scaling::Nonneg { w: vec![1.0; *d] },
            Cone::SecondOrder(d) => {
                let mut wbar = vec![0.0; *d];
                wbar[0] = 1.0;
                Scaling::Soc { eta: 1.0, wbar }
            }
        })
        .collect();
    let kkt0 = factor_with_retries(&prob, &ident, settings)
        .ok_or_else(|| ConicError::InvalidProgram("initial KKT system is singular".into()))?;
    let zeros_n = vec![0.0; n];
    let zeros_p = vec![0.0; p_eq];
    let zeros_m = vec![0.0; m];
    let (x0, _, z_primal) = kkt0
        .solve(&zeros_n, &p.eq_rhs, &p.h)
        .ok_or_else(|| ConicError::InvalidProgram("initial primal solve failed".into()))?;
    let mut s0: Vec<f64> = z_primal.iter().map(|v| -v).collect();
    let neg_q: Vec<f64> = prob.q.iter().map(|v| -v).collect();
    let (_, y0, mut z0) = kkt0
        .solve(&neg_q, &zeros_p, &zeros_m)
        .ok_or_else(|| ConicError::InvalidProgram("initial dual solve failed".into()))?;
    for (cone, start) in &prob.blocks {
        let r = *start..*start + cone.dim();
        for v in [&mut s0, &mut z0] {
            let shift = cones::boundary_shift(*cone, &v[r.clone()]);
            if shift >= 0.0 {
                cones::add_identity(*cone, &mut v[r.clone()], 1.0 + shift);
            }
        }
    }
    let mut it = Iterate {
        x: x0,
        y: y0,
        z: z0,
        s: s0,
        tau: 1.0,
        kappa: 1.0,
    };

    let mut best: Option<(f64, SolveReport)> = None;
    let mut iter = 0;
    loop {
        let met = metrics(&prob, &it);
        let report_of = |status: SolveStatus, it: &Iterate, met: &Metrics, iter: usize| {
            let scale = if matches!(status, SolveStatus::PrimalInfeasible | SolveStatus::DualInfeasible) {
                1.0
            } else {
                1.0 / it.tau
            };
            SolveReport {
                status,
                x: it.x.iter().map(|v| v * scale).collect(),
                y: it.y.iter().map(|v| v * scale).collect(),
                z: it.z.iter().map(|v| v * scale).collect(),
                s: it.s.iter().map(|v| v * scale).collect(),
                objective: -met.pcost,
                dual_objective: -met.dcost,
                iterations: iter,
                residuals: met.res,
            }
        };
        if met.res.max() <= settings.tol {
            return Ok(report_of(SolveStatus::Optimal, &it, &met, iter));
        }
        if it.kappa > it.tau {
            if met.pinf.is_some_and(|v| v <= settings.tol) {
                return Ok(report_of(SolveStatus::PrimalInfeasible, &it, &met, iter));
            }
            if met.dinf.is_some_and(|v| v <= settings.tol) {
                return Ok(report_of(SolveStatus::DualInfeasible, &it, &met, iter));
            }
        }
        let score = met.res.max();
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, report_of(SolveStatus::IterLimit, &it, &met, iter)));
        }
        if iter >= settings.max_iter {
            return Ok(best.unwrap().1);
        }
        let fail = |best: Option<(f64, SolveReport)>| {
            let mut r = best.unwrap().1;
            r.status = SolveStatus::NumericalFailure;
            r.iterations = iter;
            Ok(r)
        };

        // scaling
        let mut scal = Vec::with_capacity(prob.blocks.len());
        for (cone, start) in &prob.blocks {
            let r = *start..*start + cone.dim();
            match Scaling::compute(*cone, &it.s[r.clone()], &it.z[r]) {
                Some(w) => scal.push(w),
                None => return fail(best),
            }
        }
        let lambda = apply_blocks(&prob.blocks, &scal, &it.z, false);
        let Some(kkt) = factor_with_retries(&prob, &scal, settings) else {
            return fail(best);
        };
        let neg_b: Vec<f64> = p.eq_rhs.clone();
        let Some((x1, y1, z1)) = kkt.solve(&neg_q, &neg_b, &p.h) else {
            return fail(best);
        };
        let denom_base = dot(&prob.q, &x1) + dot(&p.eq_rhs, &y1) + dot(&p.h, &z1) - it.kappa / it.tau;
        let mu = (dot(&it.s, &it.z) + it.tau * it.kappa) / (prob.degree as f64 + 1.0);

        // lambda ∘ lambda
        let mut ll = vec![0.0; m];
        for (cone, start) in &prob.blocks {
            let r = *start..*start + cone.dim();
            cones::jordan(*cone, &lambda[r.clone()], &lambda[r.clone()], &mut ll[r]);
        }

        let direction = |sigma: f64, ds_target: &[f64], dk_target: f64| -> Option<Dir> {
            // u = λ⁻¹ ∘ d_s
            let mut u = vec![0.0; m];
            for (cone, start) in &prob.blocks {
                let r = *start..*start + cone.dim();
                cones::jordan_inv(*cone, &lambda[r.clone()], &ds_target[r.clone()], &mut u[r]);
            }
            let wu = apply_blocks(&prob.blocks, &scal, &u, false);
            let f = 1.0 - sigma;
            let r1: Vec<f64> = met.rx.iter().map(|v| -f * v).collect();
            let r2: Vec<f64> = met.ry.iter().map(|v| -f * v).collect();
            let r3: Vec<f64> = (0..m).map(|i| -f * met.rz[i] - wu[i]).collect();
            let (x2, y2, z2) = kkt.solve(&r1, &r2, &r3)?;
            let qt = -f * met.rt;
            let num = qt - dk_target / it.tau - dot(&prob.q, &x2) - dot(&p.eq_rhs, &y2) - dot(&p.h, &z2);
            let dtau = num / denom_base;
            if !dtau.is_finite() {
                return None;
            }
            let dx: Vec<f64> = (0..n).map(|j| x2[j] + dtau * x1[j]).collect();
            let dy: Vec<f64> = (0..p_eq).map(|i| y2[i] + dtau * y1[i]).collect();
            let dz: Vec<f64> = (0..m).map(|i| z2[i] + dtau * z1[i]).collect();
            // ds from the linear row rather than the complementarity row: keeps
            // the primal residual from drifting once W becomes ill-conditioned
            let gdx = prob.g_mul(&dx);
            let ds: Vec<f64> = (0..m).map(|i| -f * met.rz[i] - gdx[i] + p.h[i] * dtau).collect();
            let dkappa = (dk_target - it.kappa * dtau) / it.tau;
            Some(Dir {
                x: dx,
                y: dy,
                z: dz,
                s: ds,
                tau: dtau,
                kappa: dkappa,
            })
        };

        // predictor
        let neg_ll: Vec<f64> = ll.iter().map(|v| -v).collect();
        let Some(aff) = direction(0.0, &neg_ll, -it.tau * it.kappa) else {
            return fail(best);
        };
        let alpha_aff = max_step(&prob, &it, &aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let wdz_a = apply_blocks(&prob.blocks, &scal, &aff.z, false);
        let winv_ds_a = apply_blocks(&prob.blocks, &scal, &aff.s, true);
        let mut target = vec![0.0; m];
        let mut corr = vec![0.0; m];
        for (cone, start) in &prob.blocks {
            let r = *start..*start + cone.dim();
            cones::jordan(*cone, &winv_ds_a[r.clone()], &wdz_a[r.clone()], &mut corr[r.clone()]);
            for i in r.clone() {
                target[i] = -ll[i] - corr[i];
            }
            let mut e = vec![0.0; cone.dim()];
            cones::add_identity(*cone, &mut e, sigma * mu);
            for (k, i) in r.enumerate() {
                target[i] += e[k];
            }
        }
        let dk = -it.tau * it.kappa - aff.tau * aff.kappa + sigma * mu;
        let Some(dir) = direction(sigma, &target, dk) else {
            return fail(best);
        };
        let alpha = (settings.step_fraction * max_step(&prob, &it, &dir)).min(1.0);
        if !(alpha > 1e-12) {
            return fail(best);
        }
        for (a, b) in it.x.iter_mut().zip(&dir.x) {
            *a += alpha * b;
        }
        for (a, b) in it.y.iter_mut().zip(&dir.y) {
            *a += alpha * b;
        }
        for (a, b) in it.z.iter_mut().zip(&dir.z) {
            *a += alpha * b;
        }
        for (a, b) in it.s.iter_mut().zip(&dir.s) {
            *a += alpha * b;
        }
        it.tau += alpha * dir.tau;
        it.kappa += alpha * dir.kappa;
        iter += 1;
    }
}

fn factor_with_retries<'a, 'b>(
    prob: &'b Problem<'a>,
    scal: &'b [Scaling],
    settings: &SolverSettings,
) -> Option<Kkt<'a, 'b>> {
    let mut reg = settings.static_reg;
    for _ in 0..4 {
        if let Some(k) = Kkt::factor(prob, scal, reg, settings.refine_steps) {
            return Some(k);
        }
        reg *= 100.0;
    }
    None
}

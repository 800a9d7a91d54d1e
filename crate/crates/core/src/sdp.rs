//! Semidefinite relaxation of SIC-constrained power minimisation, used to
//! benchmark the transmit power of the SCA designs.
//!
//! Lifting `W_i = w_i w_i^H` turns every received power into a trace
//! `Tr(H_k W_i)` with `H_k = h_k h_k^H`, so the SINR and ordering constraints
//! become linear. Dropping `rank W_i = 1` gives a lower bound on the minimum
//! power; when the optimum happens to be rank one the bound is attained.
//!
//! The Hermitian blocks are handled through the real embedding
//! `X + jY ↦ [[X, −Y], [Y, X]]`, under which `Tr(AB) = ½ Tr(Ã B̃)`. The
//! solver is a dense primal-dual path-following method (HKM direction,
//! Mehrotra predictor-corrector) over the PSD blocks and a nonnegative slack
//! per inequality row.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::system::{self, BeamformerSolution, CVector, ChannelSet, SystemParams};
use crate::TradeoffError;

/// `Σ coeff · Tr(H_channel W_user)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceTerm {
    pub user: usize,
    pub channel: usize,
    pub coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// SINR of `user` at `decoder` reaches its target.
    Sinr { user: usize, decoder: usize },
    /// `Tr(H_receiver W_user) ≤ Tr(H_receiver W_{user+1})`.
    Order { receiver: usize, user: usize },
}

/// `Σ terms ≥ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpRow {
    pub kind: RowKind,
    pub terms: Vec<TraceTerm>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProgram {
    pub num_antennas: usize,
    pub num_users: usize,
    /// Real embeddings of `h_k h_k^H`.
    pub channels: Vec<DMatrix<f64>>,
    pub rows: Vec<SdpRow>,
    /// SINR targets `2^{R_i} − 1`.
    pub sinr_targets: Vec<f64>,
}

/// Real `2n × 2n` embedding of a Hermitian `n × n` matrix.
pub fn embed(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let v = h[(r, c)];
            out[(r, c)] = v.re;
            out[(r + n, c + n)] = v.re;
            out[(r, c + n)] = -v.im;
            out[(r + n, c)] = v.im;
        }
    }
    out
}

/// Hermitian matrix from its real embedding (averaging the redundant
/// copies, so an exact embedding round-trips bit for bit).
pub fn recover(e: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = e.nrows() / 2;
    DMatrix::from_fn(n, n, |r, c| {
        let re = 0.5 * (e[(r, c)] + e[(r + n, c + n)]);
        let im = 0.5 * (e[(r + n, c)] - e[(r, c + n)]);
        Complex64::new(re, im)
    })
}

pub fn outer(h: &CVector) -> DMatrix<Complex64> {
    h * h.adjoint()
}

/// Transcribes the relaxation for per-user rate targets (bits/s/Hz): one SINR
/// row per (user, decoder) pair and one ordering row per receiver and
/// adjacent user pair.
pub fn build_sdr(cs: &ChannelSet, noise_vars: &[f64], target_rates: &[f64]) -> Result<SdpProgram, TradeoffError> {
    let k = cs.num_users();
    if target_rates.len() != k || noise_vars.len() != k {
        return Err(TradeoffError::InvalidParameter(
            "one rate target and one noise variance per user".into(),
        ));
    }
    if target_rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(TradeoffError::InvalidParameter("rate targets must be positive".into()));
    }
    let sinr_targets: Vec<f64> = target_rates.iter().map(|r| r.exp2() - 1.0).collect();
    let channels = cs.channels.iter().map(|h| embed(&outer(h))).collect();
    let mut rows = Vec::with_capacity(k * (k + 1) / 2 + k * k.saturating_sub(1));
    for i in 0..k {
        let eta = sinr_targets[i];
        for d in 0..=i {
            let mut terms = vec![TraceTerm {
                user: i,
                channel: d,
                coeff: 1.0,
            }];
            terms.extend((0..i).map(|j| TraceTerm {
                user: j,
                channel: d,
                coeff: -eta,
            }));
            rows.push(SdpRow {
                kind: RowKind::Sinr { user: i, decoder: d },
                terms,
                rhs: eta * noise_vars[d],
            });
        }
    }
    for r in 0..k {
        for j in 0..k.saturating_sub(1) {
            rows.push(SdpRow {
                kind: RowKind::Order { receiver: r, user: j },
                terms: vec![
                    TraceTerm {
                        user: j + 1,
                        channel: r,
                        coeff: 1.0,
                    },
                    TraceTerm {
                        user: j,
                        channel: r,
                        coeff: -1.0,
                    },
                ],
                rhs: 0.0,
            });
        }
    }
    Ok(SdpProgram {
        num_antennas: cs.num_antennas(),
        num_users: k,
        channels,
        rows,
        sinr_targets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    IterLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpReport {
    pub status: SdpStatus,
    /// Minimum relaxed transmit power, watts.
    pub p_star: f64,
    pub dual_objective: f64,
    pub w: Vec<DMatrix<Complex64>>,
    /// `λ2/λ1` of every block.
    pub rank_ratios: Vec<f64>,
    /// Principal components `√λ1 v1`, present only for an optimal rank-one
    /// solution.
    pub extracted: Option<Vec<CVector>>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

impl SdpReport {
    pub fn worst_rank_ratio(&self) -> f64 {
        self.rank_ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Block-diagonal symmetric matrix: dense PSD blocks plus a diagonal block.
#[derive(Debug, Clone)]
struct Blocks {
    dense: Vec<DMatrix<f64>>,
    diag: DVector<f64>,
}

impl Blocks {
    fn identity(k: usize, n: usize, m: usize, scale: f64) -> Self {
        Self {
            dense: (0..k).map(|_| DMatrix::identity(n, n) * scale).collect(),
            diag: DVector::from_element(m, scale),
        }
    }

    fn inner(&self, o: &Blocks) -> f64 {
        self.dense.iter().zip(&o.dense).map(|(a, b)| a.dot(b)).sum::<f64>() + self.diag.dot(&o.diag)
    }

    fn axpy(&mut self, alpha: f64, o: &Blocks) {
        for (a, b) in self.dense.iter_mut().zip(&o.dense) {
            *a += b * alpha;
        }
        self.diag += &o.diag * alpha;
    }

    fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    fn map2(&self, o: &Blocks, f: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>, g: impl Fn(f64, f64) -> f64) -> Blocks {
        Blocks {
            dense: self.dense.iter().zip(&o.dense).map(|(a, b)| f(a, b)).collect(),
            diag: self.diag.zip_map(&o.diag, g),
        }
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

struct Data<'a> {
    prog: &'a SdpProgram,
    /// Half embeddings, so that `⟨½H̃, W̃⟩ = Tr(H W)`.
    half: Vec<DMatrix<f64>>,
    b: DVector<f64>,
    c: Blocks,
}

impl<'a> Data<'a> {
    fn new(prog: &'a SdpProgram) -> Self {
        let n = 2 * prog.num_antennas;
        let m = prog.rows.len();
        Self {
            prog,
            half: prog.channels.iter().map(|h| h * 0.5).collect(),
            b: DVector::from_iterator(m, prog.rows.iter().map(|r| r.rhs)),
            c: Blocks {
                dense: (0..prog.num_users).map(|_| DMatrix::identity(n, n) * 0.5).collect(),
                diag: DVector::zeros(m),
            },
        }
    }

    /// `A(X)_r = Σ coeff ⟨½H̃, X_user⟩ − s_r`.
    fn apply(&self, x: &Blocks) -> DVector<f64> {
        DVector::from_iterator(
            self.prog.rows.len(),
            self.prog.rows.iter().enumerate().map(|(r, row)| {
                row.terms
                    .iter()
                    .map(|t| t.coeff * self.half[t.channel].dot(&x.dense[t.user]))
                    .sum::<f64>()
                    - x.diag[r]
            }),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> Blocks {
        let n = 2 * self.prog.num_antennas;
        let mut dense = vec![DMatrix::zeros(n, n); self.prog.num_users];
        for (row, yr) in self.prog.rows.iter().zip(y.iter()) {
            for t in &row.terms {
                dense[t.user] += &self.half[t.channel] * (t.coeff * yr);
            }
        }
        Blocks { dense, diag: -y }
    }

    /// HKM Schur complement `M_pq = ⟨A_p, X A_q Z⁻¹⟩`.
    fn schur(&self, x: &Blocks, zinv: &Blocks) -> DMatrix<f64> {
        let k = self.prog.num_users;
        let nch = self.half.len();
        // q[b][c][c'] = ⟨½H̃_c, X_b ½H̃_c' Z_b⁻¹⟩
        let mut q = vec![vec![vec![0.0; nch]; nch]; k];
        for b in 0..k {
            for c2 in 0..nch {
                let p = &x.dense[b] * &self.half[c2] * &zinv.dense[b];
                for c1 in 0..nch {
                    q[b][c1][c2] = self.half[c1].dot(&p);
                }
            }
        }
        let m = self.prog.rows.len();
        let mut out = DMatrix::zeros(m, m);
        for (i, ri) in self.prog.rows.iter().enumerate() {
            for (j, rj) in self.prog.rows.iter().enumerate().skip(i) {
                let mut acc = 0.0;
                for ti in &ri.terms {
                    for tj in rj.terms.iter().filter(|t| t.user == ti.user) {
                        acc += ti.coeff * tj.coeff * q[ti.user][ti.channel][tj.channel];
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
            out[(i, i)] += x.diag[i] * zinv.diag[i];
        }
        out
    }
}

fn inverse(z: &Blocks) -> Option<Blocks> {
    let mut dense = Vec::with_capacity(z.dense.len());
    for b in &z.dense {
        dense.push(Cholesky::new(b.clone())?.inverse());
    }
    if z.diag.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    Some(Blocks {
        dense,
        diag: z.diag.map(|v| 1.0 / v),
    })
}

/// Largest step keeping `x + α d` positive semidefinite.
fn max_step(x: &Blocks, d: &Blocks) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.dense.iter().zip(&d.dense) {
        let l = Cholesky::new(xb.clone())?.l();
        let linv = l.clone().try_inverse()?;
        let m = sym(&linv * db * linv.transpose());
        let lmin = SymmetricEigen::new(m).eigenvalues.min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    for (xv, dv) in x.diag.iter().zip(d.diag.iter()) {
        if *dv < 0.0 {
            alpha = alpha.min(-xv / dv);
        }
    }
    Some(alpha)
}

/// Rank diagnostic `λ2/λ1` of a Hermitian PSD matrix (0 for the zero
/// matrix and for 1 × 1 blocks).
pub fn rank_ratio(w: &DMatrix<Complex64>) -> f64 {
    if w.nrows() < 2 {
        return 0.0;
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(w.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if ev[0] <= 0.0 {
        return 0.0;
    }
    (ev[1].max(0.0) / ev[0]).clamp(0.0, 1.0)
}

/// Principal component `√λ1 v1` of a Hermitian PSD matrix.
pub fn principal_component(w: &DMatrix<Complex64>) -> CVector {
    let eig = SymmetricEigen::new(w.clone());
    let (idx, lmax) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let v = eig.eigenvectors.column(idx).into_owned();
    v * Complex64::new(lmax.max(0.0).sqrt(), 0.0)
}

/// Solves the relaxation to tolerance `tol` on relative residuals and gap.
pub fn solve_sdp(prog: &SdpProgram, tol: f64) -> Result<SdpReport, TradeoffError> {
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(TradeoffError::InvalidParameter(format!("tolerance {tol} outside (0, 1e-2)")));
    }
    let data = Data::new(prog);
    let (k, n, m) = (prog.num_users, 2 * prog.num_antennas, prog.rows.len());
    let nu = (k * n + m) as f64;
    let bnorm = data.b.norm();
    let cnorm = data.c.norm();
    let amax = prog.channels.iter().map(|h| h.norm()).fold(0.0, f64::max);
    let xi = (10.0f64).max(nu.sqrt()).max(nu * (1.0 + bnorm) / (1.0 + amax));
    let zeta = (10.0f64).max(nu.sqrt()).max(amax).max(cnorm);
    let mut x = Blocks::identity(k, n, m, xi);
    let mut z = Blocks::identity(k, n, m, zeta);
    let mut y = DVector::zeros(m);
    let mut status = SdpStatus::IterLimit;
    let mut iterations = 0;
    let (mut pres, mut dres, mut gap_rel) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for it in 0..100 {
        iterations = it;
        let rp = &data.b - data.apply(&x);
        let mut rd = data.c.clone();
        rd.axpy(-1.0, &z);
        rd.axpy(-1.0, &data.adjoint(&y));
        let gap = x.inner(&z);
        let pobj = data.c.inner(&x);
        let dobj = data.b.dot(&y);
        pres = rp.norm() / (1.0 + bnorm);
        dres = rd.norm() / (1.0 + cnorm);
        gap_rel = gap / (1.0 + pobj.abs() + dobj.abs());
        if pres <= tol && dres <= tol && gap_rel <= tol {
            status = SdpStatus::Optimal;
            break;
        }
        let mu = gap / nu;
        let Some(zinv) = inverse(&z) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let schur = data.schur(&x, &zinv);
        let Some(chol) = Cholesky::new(schur) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        // X Rd Z⁻¹
        let xrdz = x.map2(&rd, |xb, rb| xb * rb, |a, b| a * b).map2(&zinv, |a, b| a * b, |a, b| a * b);
        let direction = |sigma_mu: f64, corr: Option<&Blocks>| -> (Blocks, DVector<f64>, Blocks) {
            let mut rhs = &data.b + data.apply(&xrdz) - data.apply(&zinv) * sigma_mu;
            if let Some(c) = corr {
                rhs += data.apply(c);
            }
            let dy = chol.solve(&rhs);
            let mut dz = rd.clone();
            dz.axpy(-1.0, &data.adjoint(&dy));
            // ΔX = σμZ⁻¹ − X − sym(X ΔZ Z⁻¹) − sym(corr)
            let xdz = x.map2(&dz, |xb, db| xb * db, |a, b| a * b).map2(&zinv, |a, b| a * b, |a, b| a * b);
            let mut dx = zinv.clone();
            for b in dx.dense.iter_mut() {
                *b *= sigma_mu;
            }
            dx.diag *= sigma_mu;
            dx.axpy(-1.0, &x);
            let mut sx = xdz;
            if let Some(c) = corr {
                sx.axpy(1.0, c);
            }
            for b in sx.dense.iter_mut() {
                *b = sym(b.clone());
            }
            dx.axpy(-1.0, &sx);
            (dx, dy, dz)
        };
        let (dxa, _, dza) = direction(0.0, None);
        let (Some(ap), Some(ad)) = (max_step(&x, &dxa), max_step(&z, &dza)) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut xa = x.clone();
        xa.axpy(ap, &dxa);
        let mut za = z.clone();
        za.axpy(ad, &dza);
        let sigma = (xa.inner(&za) / gap).clamp(0.0, 1.0).powi(3);
        let corr = dxa.map2(&dza, |a, b| a * b, |a, b| a * b).map2(&zinv, |a, b| a * b, |a, b| a * b);
        let (dx, dy, dz) = direction(sigma * mu, Some(&corr));
        let (Some(ap), Some(ad)) = (max_step(&x, &dx), max_step(&z, &dz)) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let ap = (0.98 * ap).min(1.0);
        let ad = (0.98 * ad).min(1.0);
        x.axpy(ap, &dx);
        y.axpy(ad, &dy, 1.0);
        z.axpy(ad, &dz);
        iterations = it + 1;
    }
    let w: Vec<DMatrix<Complex64>> = x.dense.iter().map(|b| recover(&sym(b.clone()))).collect();
    let rank_ratios: Vec<f64> = w.iter().map(rank_ratio).collect();
    let extracted = (status == SdpStatus::Optimal && rank_ratios.iter().all(|r| *r <= RANK_TOLERANCE))
        .then(|| w.iter().map(principal_component).collect());
    let p_star = w.iter().map(|b| b.trace().re).sum();
    Ok(SdpReport {
        status,
        p_star,
        dual_objective: data.b.dot(&y),
        w,
        rank_ratios,
        extracted,
        iterations,
        primal_residual: pres,
        dual_residual: dres,
        gap: gap_rel,
    })
}

/// Largest admissible `λ2/λ1` for a block to count as rank one.
pub const RANK_TOLERANCE: f64 = 1e-4;

/// Principal-component beamformers of a rank-one optimum, re-verified
/// against the rate targets.
pub fn extract_beamformers(
    rep: &SdpReport,
    prog: &SdpProgram,
    cs: &ChannelSet,
    params: &SystemParams,
) -> Result<BeamformerSolution, TradeoffError> {
    if rep.status != SdpStatus::Optimal {
        return Err(TradeoffError::ContractViolation(format!(
            "extraction needs an optimal relaxation, got {:?}",
            rep.status
        )));
    }
    let worst = rep.worst_rank_ratio();
    if worst > RANK_TOLERANCE {
        return Err(TradeoffError::RankFailure {
            ratios: rep.rank_ratios.clone(),
            worst,
        });
    }
    let w = rep
        .extracted
        .clone()
        .unwrap_or_else(|| rep.w.iter().map(principal_component).collect());
    let sol = BeamformerSolution::evaluate(w, cs, params);
    for (i, eta) in prog.sinr_targets.iter().enumerate() {
        let target = eta.ln_1p() / std::f64::consts::LN_2;
        let got = system::achievable_rate(i, &sol.w, cs, params);
        if got < target - 1e-6 {
            return Err(TradeoffError::ContractViolation(format!(
                "extracted user {i} rate {got:.8} misses target {target:.8}"
            )));
        }
    }
    Ok(sol)
}

//! Per-block Nesterov–Todd scaling and Jordan algebra helpers.
//!
//! For a pair of interior points `(s, z)` the scaling `W` satisfies
//! `W z = W⁻¹ s = λ`. Both supported cones are self-scaled with symmetric `W`.

use crate::program::Cone;

#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    /// `W = diag(w)`.
    Nonneg { w: Vec<f64> },
    /// `W = η [[w0, w1ᵀ], [w1, I + w1 w1ᵀ/(1 + w0)]]` with `w0² − ‖w1‖² = 1`.
    Soc { eta: f64, wbar: Vec<f64> },
}

/// `x₀² − ‖x₁‖²`.
pub(crate) fn soc_det(x: &[f64]) -> f64 {
    let tail: f64 = x[1..].iter().map(|v| v * v).sum();
    (x[0] - tail.sqrt()) * (x[0] + tail.sqrt())
}

impl Scaling {
    pub(crate) fn compute(cone: Cone, s: &[f64], z: &[f64]) -> Option<Scaling> {
        match cone {
            Cone::Nonneg(_) => {
                let mut w = Vec::with_capacity(s.len());
                for (si, zi) in s.iter().zip(z) {
                    if *si <= 0.0 || *zi <= 0.0 {
                        return None;
                    }
                    w.push((si / zi).sqrt());
                }
                Some(Scaling::Nonneg { w })
            }
            Cone::SecondOrder(_) => {
                let sd = soc_det(s);
                let zd = soc_det(z);
                if !(sd > 0.0 && zd > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
                    return None;
                }
                let sn = sd.sqrt();
                let zn = zd.sqrt();
                let dot: f64 = s.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() / (sn * zn);
                let gamma = ((1.0 + dot) / 2.0).sqrt();
                let mut wbar = Vec::with_capacity(s.len());
                wbar.push((s[0] / sn + z[0] / zn) / (2.0 * gamma));
                for k in 1..s.len() {
                    wbar.push((s[k] / sn - z[k] / zn) / (2.0 * gamma));
                }
                Some(Scaling::Soc {
                    eta: (sn / zn).sqrt(),
                    wbar,
                })
            }
        }
    }

    /// `out = W v`.
    pub(crate) fn apply(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                for k in 0..v.len() {
                    out[k] = w[k] * v[k];
                }
            }
            Scaling::Soc { eta, wbar } => soc_apply(*eta, wbar, v, out, false),
        }
    }

    /// `out = W⁻¹ v`.
    pub(crate) fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => {
                for k in 0..v.len() {
                    out[k] = v[k] / w[k];
                }
            }
            Scaling::Soc { eta, wbar } => soc_apply(1.0 / *eta, wbar, v, out, true),
        }
    }
}

fn soc_apply(factor: f64, wbar: &[f64], v: &[f64], out: &mut [f64], inverse: bool) {
    let w0 = wbar[0];
    let w1 = &wbar[1..];
    let v0 = v[0];
    let v1 = &v[1..];
    let w1v1: f64 = w1.iter().zip(v1).map(|(a, b)| a * b).sum();
    let sgn = if inverse { -1.0 } else { 1.0 };
    out[0] = factor * (w0 * v0 + sgn * w1v1);
    let c = w1v1 / (1.0 + w0);
    for k in 0..w1.len() {
        out[k + 1] = factor * (sgn * v0 * w1[k] + v1[k] + c * w1[k]);
    }
}

/// Jordan product `u ∘ v` within one block.
pub(crate) fn jordan(cone: Cone, u: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::Nonneg(_) => {
            for k in 0..u.len() {
                out[k] = u[k] * v[k];
            }
        }
        Cone::SecondOrder(_) => {
            out[0] = u.iter().zip(v).map(|(a, b)| a * b).sum();
            for k in 1..u.len() {
                out[k] = u[0] * v[k] + v[0] * u[k];
            }
        }
    }
}

/// Solves `λ ∘ x = d` for `x`.
pub(crate) fn jordan_inv(cone: Cone, lambda: &[f64], d: &[f64], out: &mut [f64]) {
    match cone {
        Cone::Nonneg(_) => {
            for k in 0..d.len() {
                out[k] = d[k] / lambda[k];
            }
        }
        Cone::SecondOrder(_) => {
            let l0 = lambda[0];
            let det = soc_det(lambda);
            let l1d1: f64 = lambda[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum();
            let x0 = (l0 * d[0] - l1d1) / det;
            out[0] = x0;
            for k in 1..d.len() {
                out[k] = (d[k] - x0 * lambda[k]) / l0;
            }
        }
    }
}

/// Largest `α ≥ 0` such that `x + α d` stays in the cone, given interior `x`;
/// returned as `1/α` (0 when the ray never leaves the cone).
pub(crate) fn inverse_max_step(cone: Cone, x: &[f64], d: &[f64]) -> f64 {
    match cone {
        Cone::Nonneg(_) => x
            .iter()
            .zip(d)
            .map(|(xi, di)| -di / xi)
            .fold(0.0, f64::max),
        Cone::SecondOrder(_) => {
            let det = soc_det(x);
            if det <= 0.0 {
                return f64::INFINITY;
            }
            let xn = det.sqrt();
            let xbar: Vec<f64> = x.iter().map(|v| v / xn).collect();
            // xbarᵀ J d
            let jd: f64 = xbar[0] * d[0] - xbar[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum::<f64>();
            let rho0 = jd / xn;
            let factor = (jd + d[0]) / (xbar[0] + 1.0);
            let rho1: f64 = (1..x.len())
                .map(|k| {
                    let r = (d[k] - factor * xbar[k]) / xn;
                    r * r
                })
                .sum::<f64>()
                .sqrt();
            (rho1 - rho0).max(0.0)
        }
    }
}

/// Smallest `t` such that `x + t·e` is in the (closed) cone; negative when `x`
/// is interior.
pub(crate) fn boundary_shift(cone: Cone, x: &[f64]) -> f64 {
    match cone {
        Cone::Nonneg(_) => x.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max),
        Cone::SecondOrder(_) => {
            let tail: f64 = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            tail - x[0]
        }
    }
}

/// Adds `t·e` (the cone identity) to `x`.
pub(crate) fn add_identity(cone: Cone, x: &mut [f64], t: f64) {
    match cone {
        Cone::Nonneg(_) => x.iter_mut().for_each(|v| *v += t),
        Cone::SecondOrder(_) => x[0] += t,
    }
}

//! Secant envelope for `z ≥ 2^ρ`.
//!
//! On each sub-interval `[ρ_m, ρ_{m+1}]` the chord of the convex function
//! `2^ρ` lies above it, so requiring `z` to exceed every chord (extended
//! linearly) together with a box on `ρ` yields a polyhedral subset of the
//! epigraph. The gap to the true curve shrinks quadratically with the piece
//! width.

use crate::program::{ConeProgram, LinExpr, Var};
use crate::ConicError;

/// Piecewise-linear interpolant of `2^ρ` through sorted breakpoints.
///
/// Repeated breakpoints are allowed; the zero-width piece contributes the
/// tangent at that point, which lies below the curve and therefore never
/// changes the envelope. This keeps the number of rows fixed when a
/// refinement node lands on an existing one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpEnvelope {
    nodes: Vec<f64>,
}

impl ExpEnvelope {
    /// Uniform envelope with `pieces` chords over `[lo, hi]`.
    pub fn new(lo: f64, hi: f64, pieces: usize) -> Result<Self, ConicError> {
        if pieces == 0 {
            return Err(ConicError::InvalidParameter("envelope needs at least one piece".into()));
        }
        Self::check_interval(lo, hi)?;
        Ok(Self {
            nodes: (0..=pieces)
                .map(|m| lo + (hi - lo) * m as f64 / pieces as f64)
                .collect(),
        })
    }

    /// Envelope through the given breakpoints (sorted on entry).
    pub fn with_nodes(mut nodes: Vec<f64>) -> Result<Self, ConicError> {
        if nodes.len() < 2 || nodes.iter().any(|v| !v.is_finite()) {
            return Err(ConicError::InvalidParameter(
                "envelope needs at least two finite breakpoints".into(),
            ));
        }
        nodes.sort_by(f64::total_cmp);
        Self::check_interval(nodes[0], nodes[nodes.len() - 1])?;
        Ok(Self { nodes })
    }

    fn check_interval(lo: f64, hi: f64) -> Result<(), ConicError> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(ConicError::InvalidParameter(format!(
                "envelope interval [{lo}, {hi}] is empty"
            )));
        }
        Ok(())
    }

    /// The same envelope with extra breakpoints at `center` and
    /// `center ± half_width` (clamped to the interval).
    pub fn refined(&self, center: f64, half_width: f64) -> Self {
        let (lo, hi) = (self.lo(), self.hi());
        let mut nodes = self.nodes.clone();
        nodes.extend([center - half_width, center, center + half_width].map(|v| v.clamp(lo, hi)));
        nodes.sort_by(f64::total_cmp);
        Self { nodes }
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn pieces(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `(slope, intercept)` of every chord.
    pub fn chords(&self) -> Vec<(f64, f64)> {
        self.nodes
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let fa = a.exp2();
                let slope = if b - a > 1e-12 * (1.0 + a.abs()) {
                    (b.exp2() - fa) / (b - a)
                } else {
                    std::f64::consts::LN_2 * fa
                };
                (slope, fa - slope * a)
            })
            .collect()
    }

    /// Smallest `z` admitted by the envelope at `ρ` (ρ clamped to the box).
    pub fn eval(&self, rho: f64) -> f64 {
        let r = rho.clamp(self.lo(), self.hi());
        self.chords()
            .iter()
            .map(|(s, c)| s * r + c)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `ρ` in the box admitted together with `z`, or `None` if even
    /// `ρ = lo` is excluded.
    pub fn inverse(&self, z: f64) -> Option<f64> {
        if z < self.eval(self.lo()) {
            return None;
        }
        if z >= self.eval(self.hi()) {
            return Some(self.hi());
        }
        // envelope is increasing and piecewise linear: find the active piece
        for w in self.nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (a.exp2(), b.exp2());
            if z <= fb && fb > fa {
                return Some(a + (z - fa) * (b - a) / (fb - fa));
            }
        }
        Some(self.hi())
    }
}

/// Appends `z ≥ chord_m(ρ)` for every piece and the box `lo ≤ ρ ≤ hi`.
pub fn add_exp_upper_envelope(
    p: &mut ConeProgram,
    z: Var,
    rho: Var,
    lo: f64,
    hi: f64,
    pieces: usize,
) -> Result<ExpEnvelope, ConicError> {
    let env = ExpEnvelope::new(lo, hi, pieces)?;
    add_envelope(p, z, rho, &env);
    Ok(env)
}

/// Appends the rows of an arbitrary envelope and its box.
pub fn add_envelope(p: &mut ConeProgram, z: Var, rho: Var, env: &ExpEnvelope) {
    for (slope, icpt) in env.chords() {
        p.add_ge(&LinExpr::var(z), &LinExpr::term(rho, slope).with_constant(icpt));
    }
    p.add_bounds(rho, env.lo(), env.hi());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_piece_is_the_chord() {
        let env = ExpEnvelope::new(0.0, 1.0, 1).unwrap();
        assert!((env.eval(0.5) - 1.5).abs() < 1e-15);
        assert!(env.eval(0.5) > 0.5f64.exp2());
    }

    #[test]
    fn tight_at_nodes() {
        let env = ExpEnvelope::new(0.0, 8.0, 64).unwrap();
        for m in 0..=64 {
            let r = m as f64 / 8.0;
            assert!((env.eval(r) - r.exp2()).abs() <= 1e-12 * r.exp2());
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let env = ExpEnvelope::new(0.0, 6.0, 16).unwrap();
        for &r in &[0.0, 0.3, 2.71, 5.99] {
            let z = env.eval(r);
            assert!((env.inverse(z).unwrap() - r).abs() < 1e-10);
        }
        assert!(env.inverse(0.5).is_none());
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(ExpEnvelope::new(1.0, 1.0, 4).is_err());
        assert!(ExpEnvelope::new(0.0, 1.0, 0).is_err());
        assert!(ExpEnvelope::with_nodes(vec![1.0]).is_err());
        assert!(ExpEnvelope::with_nodes(vec![2.0, 2.0]).is_err());
    }

    #[test]
    fn refinement_tightens_and_keeps_count() {
        let env = ExpEnvelope::new(0.0, 8.0, 8).unwrap();
        let fine = env.refined(2.3, 0.01);
        assert_eq!(fine.pieces(), 11);
        assert!((fine.eval(2.3) - 2.3f64.exp2()).abs() < 1e-12);
        // a refinement node on an existing breakpoint adds a harmless tangent
        let on_node = env.refined(3.0, 1.0);
        assert_eq!(on_node.pieces(), 11);
        for r in [0.5, 2.0, 2.5, 3.0, 3.7, 7.9] {
            assert!((on_node.eval(r) - env.eval(r)).abs() < 1e-12 * env.eval(r));
            assert!(fine.eval(r) >= r.exp2() * (1.0 - 1e-14));
            assert!(fine.eval(r) <= env.eval(r) + 1e-12);
        }
    }
}

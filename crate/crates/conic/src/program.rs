//! Cone program data model and a small modelling layer on top of it.
//!
//! A [`ConeProgram`] is stored in the standard conic form
//!
//! ```text
//!     maximize    cᵀx
//!     subject to  A x  = b
//!                 G x + s = h,   s ∈ K = K_1 × … × K_m
//! ```
//!
//! where every `K_j` is either a nonnegative orthant or a second-order cone
//! `{(t, u) : t ≥ ‖u‖₂}`. Rows of `G` are stored sparsely; cone blocks refer to
//! contiguous row ranges of `G` in insertion order.
//!
//! Constraints are usually added through affine expressions ([`LinExpr`]),
//! which keeps model assembly readable: `add_soc(t, &[u1, u2])` states
//! `t(x) ≥ ‖(u1(x), u2(x))‖` without the caller having to think about signs of
//! `G` and `h`.

use std::fmt;

use crate::ConicError;

/// Index of a scalar decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub usize);

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Sparse affine expression `constant + Σ coeff·x[var]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(Var, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: Var) -> Self {
        Self {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(v: Var, coeff: f64) -> Self {
        Self {
            terms: vec![(v, coeff)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: Var, coeff: f64) -> &mut Self {
        if coeff != 0.0 {
            self.terms.push((v, coeff));
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn with_term(mut self, v: Var, coeff: f64) -> Self {
        self.add_term(v, coeff);
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for (_, c) in &mut self.terms {
            *c *= factor;
        }
        self.constant *= factor;
        self
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.constant += other.constant;
        self
    }

    pub fn minus(self, other: &LinExpr) -> Self {
        self.plus(&other.clone().scaled(-1.0))
    }

    /// Evaluates the expression at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * x[v.0]).sum::<f64>()
    }

    /// Merges duplicate variables and drops exact zeros.
    pub fn compact(&self) -> Vec<(usize, f64)> {
        let mut t: Vec<(usize, f64)> = self.terms.iter().map(|(v, c)| (v.0, *c)).collect();
        t.sort_by_key(|e| e.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
        for (j, c) in t {
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += c,
                _ => out.push((j, c)),
            }
        }
        out.retain(|e| e.1 != 0.0);
        out
    }
}

/// A cone block; the dimension counts rows of `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Nonneg(usize),
    SecondOrder(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Nonneg(d) | Cone::SecondOrder(d) => d,
        }
    }

    /// Barrier degree contributed by the block.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonneg(d) => d,
            Cone::SecondOrder(_) => 1,
        }
    }
}

/// One sparse row `Σ coeff·x[col]`, columns sorted and unique.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, Default)]
pub struct ConeProgram {
    names: Vec<String>,
    pub(crate) objective: Vec<f64>,
    pub(crate) eq_rows: Vec<SparseRow>,
    pub(crate) eq_rhs: Vec<f64>,
    pub(crate) g_rows: Vec<SparseRow>,
    pub(crate) h: Vec<f64>,
    pub(crate) cones: Vec<Cone>,
}

impl ConeProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> Var {
        self.names.push(name.into());
        self.objective.push(0.0);
        Var(self.names.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.names[v.0]
    }

    /// Adds `coeff·x[v]` to the (maximised) objective.
    pub fn add_objective(&mut self, v: Var, coeff: f64) {
        self.objective[v.0] += coeff;
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// `lhs(x) ≤ rhs(x)`.
    pub fn add_le(&mut self, lhs: &LinExpr, rhs: &LinExpr) {
        // slack s = rhs - lhs ≥ 0  =>  G = lhs - rhs (linear part), h = rhs.c - lhs.c
        let diff = lhs.clone().minus(rhs);
        self.push_row(diff.compact(), -diff.constant);
        match self.cones.last_mut() {
            Some(Cone::Nonneg(d)) => *d += 1,
            _ => self.cones.push(Cone::Nonneg(1)),
        }
    }

    /// `lhs(x) ≥ rhs(x)`.
    pub fn add_ge(&mut self, lhs: &LinExpr, rhs: &LinExpr) {
        self.add_le(rhs, lhs);
    }

    /// `lhs(x) = rhs(x)`.
    pub fn add_eq(&mut self, lhs: &LinExpr, rhs: &LinExpr) {
        let diff = lhs.clone().minus(rhs);
        self.eq_rows.push(diff.compact());
        self.eq_rhs.push(-diff.constant);
    }

    /// `lo ≤ x[v] ≤ hi`.
    pub fn add_bounds(&mut self, v: Var, lo: f64, hi: f64) {
        self.add_ge(&LinExpr::var(v), &LinExpr::constant(lo));
        self.add_le(&LinExpr::var(v), &LinExpr::constant(hi));
    }

    /// `t(x) ≥ ‖(u_1(x), …, u_k(x))‖₂`.
    pub fn add_soc(&mut self, t: &LinExpr, u: &[LinExpr]) {
        for e in std::iter::once(t).chain(u.iter()) {
            // s = e(x) = h - G x  =>  G = -e.lin, h = e.c
            let row: SparseRow = e.compact().into_iter().map(|(j, c)| (j, -c)).collect();
            self.push_row(row, e.constant);
        }
        self.cones.push(Cone::SecondOrder(u.len() + 1));
    }

    /// `‖(u_1(x), …, u_k(x))‖² ≤ l(x)`, written as a second-order cone.
    ///
    /// `scale > 0` only changes the conditioning: the constraint is stored as
    /// `‖(2u, l/scale − scale)‖ ≤ l/scale + scale`. Choosing `scale ≈ √l` at the
    /// expected operating point keeps both sides of comparable magnitude.
    pub fn add_quad_le(&mut self, u: &[LinExpr], l: &LinExpr, scale: f64) {
        assert!(scale > 0.0, "rotated cone scale must be positive");
        let ls = l.clone().scaled(1.0 / scale);
        let t = ls.clone().with_constant(scale);
        let mut parts: Vec<LinExpr> = u.iter().map(|e| e.clone().scaled(2.0)).collect();
        parts.push(ls.with_constant(-scale));
        self.add_soc(&t, &parts);
    }

    fn push_row(&mut self, row: SparseRow, h: f64) {
        self.g_rows.push(row);
        self.h.push(h);
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn num_eq(&self) -> usize {
        self.eq_rows.len()
    }

    /// Total number of rows of `G` (sum of cone dimensions).
    pub fn cone_dim(&self) -> usize {
        self.g_rows.len()
    }

    /// Number of scalar linear inequalities (rows in nonnegative blocks).
    pub fn num_linear_ineq(&self) -> usize {
        self.cones
            .iter()
            .filter_map(|c| match c {
                Cone::Nonneg(d) => Some(*d),
                _ => None,
            })
            .sum()
    }

    /// Dimensions of all second-order cone blocks, in insertion order.
    pub fn soc_dims(&self) -> Vec<usize> {
        self.cones
            .iter()
            .filter_map(|c| match c {
                Cone::SecondOrder(d) => Some(*d),
                _ => None,
            })
            .collect()
    }

    /// Rows of `G` in the form `(row, h)`.
    pub fn g_rows(&self) -> impl Iterator<Item = (&SparseRow, f64)> {
        self.g_rows.iter().zip(self.h.iter().copied())
    }

    pub fn eq_rows(&self) -> impl Iterator<Item = (&SparseRow, f64)> {
        self.eq_rows.iter().zip(self.eq_rhs.iter().copied())
    }

    /// Slack `s = h − G x`.
    pub fn slack_at(&self, x: &[f64]) -> Vec<f64> {
        self.g_rows
            .iter()
            .zip(&self.h)
            .map(|(row, h)| h - row.iter().map(|(j, c)| c * x[*j]).sum::<f64>())
            .collect()
    }

    /// Largest violation of the constraints at `x`, measured as in the
    /// solver: equality residuals, negative orthant entries and `‖u‖ − t`
    /// for second-order blocks.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, b) in self.eq_rows() {
            let ax: f64 = row.iter().map(|(j, c)| c * x[*j]).sum();
            worst = worst.max((ax - b).abs());
        }
        let s = self.slack_at(x);
        let mut off = 0;
        for cone in &self.cones {
            let blk = &s[off..off + cone.dim()];
            match cone {
                Cone::Nonneg(_) => {
                    for v in blk {
                        worst = worst.max(-v);
                    }
                }
                Cone::SecondOrder(_) => {
                    let nu = blk[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                    worst = worst.max(nu - blk[0]);
                }
            }
            off += cone.dim();
        }
        worst
    }

    /// Checks the structural invariants: rows reference existing variables,
    /// cone blocks tile `G` exactly and every variable is used somewhere.
    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.num_vars();
        if n == 0 {
            return Err(ConicError::InvalidProgram("program has no variables".into()));
        }
        let total: usize = self.cones.iter().map(Cone::dim).sum();
        if total != self.g_rows.len() {
            return Err(ConicError::InvalidProgram(format!(
                "cone blocks cover {total} rows but G has {}",
                self.g_rows.len()
            )));
        }
        for c in &self.cones {
            if let Cone::SecondOrder(d) = c {
                if *d < 1 {
                    return Err(ConicError::InvalidProgram("empty second-order cone".into()));
                }
            }
        }
        let mut used = vec![false; n];
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                used[j] = true;
            }
        }
        for row in self.g_rows.iter().chain(self.eq_rows.iter()) {
            for (j, c) in row {
                if *j >= n {
                    return Err(ConicError::InvalidProgram(format!(
                        "row references variable {j} but only {n} exist"
                    )));
                }
                if !c.is_finite() {
                    return Err(ConicError::InvalidProgram("non-finite coefficient".into()));
                }
                used[*j] = true;
            }
        }
        if self.h.iter().chain(&self.eq_rhs).chain(&self.objective).any(|v| !v.is_finite()) {
            return Err(ConicError::InvalidProgram("non-finite data".into()));
        }
        if let Some(j) = used.iter().position(|u| !u) {
            return Err(ConicError::InvalidProgram(format!(
                "variable {} ({}) appears in no constraint and not in the objective",
                j, self.names[j]
            )));
        }
        Ok(())
    }
}

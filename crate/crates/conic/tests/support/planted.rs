//! Random SOCPs with a known optimum, shared by the solver tests and the
//! acceptance suite.

use noma_conic::{ConeProgram, LinExpr, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A random SOCP whose optimum is known by construction.
///
/// A primal point `x*`, complementary slacks `s*`, cone multipliers `z*` and
/// equality multipliers `y*` are drawn first; the data `(A, b, G, h, c)` is
/// then chosen so that the KKT conditions hold exactly at that point. The
/// optimal value is therefore `cᵀx*`, independently of any solver.
pub struct Planted {
    pub program: ConeProgram,
    pub vars: Vec<Var>,
    pub optimum: f64,
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn planted(seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=12usize);
    let n_eq = rng.random_range(0..n / 2 + 1);
    let mut blocks: Vec<(bool, usize)> = Vec::new();
    let mut total = 0;
    let target = rng.random_range(n + 2..=60usize);
    while total < target {
        let soc = rng.random_bool(0.6);
        let dim = if soc { rng.random_range(2..=6usize) } else { rng.random_range(1..=4usize) };
        let dim = dim.min(60 - total).max(1);
        let soc = soc && dim >= 2;
        blocks.push((soc, dim));
        total += dim;
    }

    let xs: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let ys: Vec<f64> = (0..n_eq).map(|_| normal(&mut rng)).collect();
    let mut ss = Vec::with_capacity(total);
    let mut zs = Vec::with_capacity(total);
    for &(soc, dim) in &blocks {
        if soc {
            // s on the boundary, z on the opposite boundary ray: sᵀz = 0
            let u: Vec<f64> = (0..dim - 1).map(|_| normal(&mut rng)).collect();
            let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let gs = rng.random_range(0.2..2.0);
            let gz = rng.random_range(0.2..2.0);
            ss.push(gs * nu);
            zs.push(gz * nu);
            for v in &u {
                ss.push(gs * v);
                zs.push(-gz * v);
            }
        } else {
            for _ in 0..dim {
                if rng.random_bool(0.5) {
                    ss.push(rng.random_range(0.1..2.0));
                    zs.push(0.0);
                } else {
                    ss.push(0.0);
                    zs.push(rng.random_range(0.1..2.0));
                }
            }
        }
    }

    let mut p = ConeProgram::new();
    let vars: Vec<Var> = (0..n).map(|j| p.add_var(format!("x{j}"))).collect();
    let g: Vec<Vec<f64>> = (0..total).map(|_| (0..n).map(|_| normal(&mut rng)).collect()).collect();
    let a: Vec<Vec<f64>> = (0..n_eq).map(|_| (0..n).map(|_| normal(&mut rng)).collect()).collect();

    // cone rows: s = h − G x  with  h = G x* + s*
    let expr = |row: &[f64], s: f64| -> LinExpr {
        let gx: f64 = row.iter().zip(&xs).map(|(a, b)| a * b).sum();
        let mut e = LinExpr::constant(gx + s);
        for (j, c) in row.iter().enumerate() {
            e.add_term(vars[j], -c);
        }
        e
    };
    let mut off = 0;
    for &(soc, dim) in &blocks {
        if soc {
            let t = expr(&g[off], ss[off]);
            let u: Vec<LinExpr> = (1..dim).map(|k| expr(&g[off + k], ss[off + k])).collect();
            p.add_soc(&t, &u);
        } else {
            for k in 0..dim {
                p.add_ge(&expr(&g[off + k], ss[off + k]), &LinExpr::zero());
            }
        }
        off += dim;
    }
    for (row, _) in a.iter().zip(&ys) {
        let mut lhs = LinExpr::zero();
        for (j, c) in row.iter().enumerate() {
            lhs.add_term(vars[j], *c);
        }
        let rhs: f64 = row.iter().zip(&xs).map(|(a, b)| a * b).sum();
        p.add_eq(&lhs, &LinExpr::constant(rhs));
    }
    // stationarity of the minimisation of −cᵀx: c = Aᵀy + Gᵀz
    let mut c = vec![0.0; n];
    for (row, y) in a.iter().zip(&ys) {
        for j in 0..n {
            c[j] += row[j] * y;
        }
    }
    for (row, z) in g.iter().zip(&zs) {
        for j in 0..n {
            c[j] += row[j] * z;
        }
    }
    for j in 0..n {
        p.add_objective(vars[j], c[j]);
    }
    let optimum = c.iter().zip(&xs).map(|(a, b)| a * b).sum();
    Planted {
        program: p,
        vars,
        optimum,
    }
}

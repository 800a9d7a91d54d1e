use noma_tradeoff::baselines::{solve_power_min, ScaOptions};
use noma_tradeoff::sca::*;
use noma_tradeoff::system::*;
use noma_tradeoff::TradeoffError;
use num_complex::Complex64;

const CELL: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 50.0];

fn cell(seed: u64, snr_db: f64, eta: f64) -> (ChannelSet, SystemParams) {
    let cs = generate_channels(seed, &CELL, 1.0, 3).unwrap();
    let params = SystemParams::reference(3, 5, tx_snr_to_power(snr_db, 1.0)).with_sinr_threshold(eta);
    (cs, params)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn start_for(n: usize, k: usize, alpha: f64, etas: Vec<f64>) -> (ChannelSet, SystemParams, TradeoffConfig, SlackState) {
    let d: Vec<f64> = (1..=k).map(|i| i as f64).collect();
    let cs = generate_channels(11, &d, 1.0, n).unwrap();
    let params = SystemParams::reference(n, k, 100.0).with_sinr_thresholds(etas);
    let cfg = TradeoffConfig::new(alpha, 5.0, 0.2);
    let (_, pm) = solve_power_min(&cs, &params).unwrap();
    let state = initialize(&cs, &params, &cfg, &pm).unwrap();
    (cs, params, cfg, state)
}

#[test]
fn subproblem_dimensions_match_closed_form() {
    for (n, k) in [(2, 2), (3, 5), (4, 6)] {
        for alpha in [0.0, 0.5, 1.0] {
            let (cs, params, cfg, state) = start_for(n, k, alpha, vec![0.01; k]);
            let sub = build_subproblem(&state, &cfg, &cs, &params).unwrap();
            let all: Vec<usize> = (0..k).collect();
            assert_eq!(ProgramSize::of(&sub.program), subproblem_size(n, k, alpha, &all, 64), "({n}, {k}) alpha {alpha}");
            // users without a threshold get no minimum-rate cones
            let mut etas = vec![0.01; k];
            etas[k - 1] = 0.0;
            let (cs, params, cfg, state) = start_for(n, k, alpha, etas);
            let sub = build_subproblem(&state, &cfg, &cs, &params).unwrap();
            let some: Vec<usize> = (0..k - 1).collect();
            assert_eq!(ProgramSize::of(&sub.program), subproblem_size(n, k, alpha, &some, 64));
        }
    }
}

#[test]
fn reference_cell_size() {
    let s = subproblem_size(3, 5, 0.5, &[0, 1, 2, 3, 4], 64);
    assert_eq!(s.vars, 59);
    assert_eq!(s.eq_rows, 0);
    assert_eq!(s.linear_rows, 5 * 69 + 2);
}

#[test]
fn start_is_feasible_and_first_solve_optimal() {
    for alpha in [0.0, 0.3, 1.0] {
        let (cs, params, cfg, state) = start_for(3, 5, alpha, vec![0.2; 5]);
        let sub = build_subproblem(&state, &cfg, &cs, &params).unwrap();
        let x0 = sub.point_of(&state);
        assert!(sub.program.max_violation(&x0) <= 1e-9, "alpha {alpha}");
        let rep = noma_conic::solve_with(&sub.program, 1e-9, 100).unwrap();
        assert_eq!(rep.status, noma_conic::SolveStatus::Optimal);
        let next = sub.state_at(&rep.x);
        assert!(next.objective() >= state.objective() - 1e-9);
        // the new point is again feasible for the subproblem built around it
        let sub2 = build_subproblem(&next, &cfg, &cs, &params).unwrap();
        assert!(sub2.program.max_violation(&sub2.point_of(&next)) <= 1e-7);
        BeamformerSolution::evaluate(next.w.clone(), &cs, &params)
            .verify(&cs, &params, 1e-6)
            .unwrap();
    }
}

#[test]
fn guard_rejects_degenerate_base_point() {
    let (cs, params, cfg, mut state) = start_for(2, 2, 0.5, vec![0.01; 2]);
    state.z[1] = 1.0;
    assert!(matches!(
        build_subproblem(&state, &cfg, &cs, &params),
        Err(TradeoffError::Guard(_))
    ));
}

#[test]
fn config_validation() {
    assert!(TradeoffConfig::new(0.5, 1.0, 1.0).validate().is_ok());
    assert!(TradeoffConfig::new(1.5, 1.0, 1.0).validate().is_err());
    assert!(TradeoffConfig::new(0.5, 0.0, 1.0).validate().is_err());
    let mut cfg = TradeoffConfig::new(0.5, 1.0, 1.0);
    cfg.max_outer_iters = 0;
    assert!(cfg.validate().is_err());
}

#[test]
fn infeasible_instance_is_reported() {
    let (cs, params) = cell(0, 20.0, 2.0);
    let (p_star, pm) = solve_power_min(&cs, &params).unwrap();
    assert!(p_star > params.p_ava);
    let cfg = TradeoffConfig::new(0.5, 1.0, 1.0);
    assert!(matches!(
        initialize(&cs, &params, &cfg, &pm),
        Err(TradeoffError::Infeasible { .. })
    ));
    assert!(matches!(
        TradeoffContext::new(cs, params, ScaOptions::default()),
        Err(TradeoffError::Infeasible { .. })
    ));
}

#[test]
fn single_user_start_is_matched_filter() {
    let cs = generate_channels(2, &[1.0], 1.0, 3).unwrap();
    let params = SystemParams::reference(3, 1, 10.0);
    let (_, pm) = solve_power_min(&cs, &params).unwrap();
    let state = initialize(&cs, &params, &TradeoffConfig::new(0.5, 1.0, 1.0), &pm).unwrap();
    let (h, w) = (&cs.channels[0], &state.w[0]);
    let cos = h.dotc(w).norm() / (h.norm() * w.norm());
    assert!((cos - 1.0).abs() < 1e-9, "{cos}");
}

#[test]
fn single_user_normalisers() {
    let cs = generate_channels(3, &[1.0], 1.0, 3).unwrap();
    let params = SystemParams::reference(3, 1, 20.0);
    let (f1, f2) = normalize(&cs, &params).unwrap();
    assert!((f1 - (1.0 + 20.0 * cs.gain(0)).log2()).abs() < 1e-6);
    assert!(f2 > 0.0);
}

#[test]
fn tradeoff_runs_on_reference_cell() {
    let (cs, params) = cell(1, 25.0, 0.01);
    let ctx = TradeoffContext::new(cs.clone(), params.clone(), ScaOptions::default()).unwrap();
    let mut se = Vec::new();
    let mut gee = Vec::new();
    for alpha in [0.0, 0.5, 1.0] {
        let cfg = ctx.config(alpha);
        let r = ctx.solve(alpha).unwrap();
        let sol = &r.solution;
        sol.verify(&cs, &params, 1e-6).unwrap();
        assert!(r.converged && r.iterations <= cfg.max_outer_iters);
        assert!(r.trace.worst_decrease() <= 1e-8);
        // slack objectives never overstate the true metrics
        if alpha < 1.0 {
            assert!(r.state.gamma1 * cfg.f1_star / (1.0 - alpha) <= sol.se * (1.0 + 1e-9));
        }
        if alpha > 0.0 {
            assert!(r.state.gamma2 * cfg.f2_star / alpha <= sol.gee / params.bandwidth * (1.0 + 1e-9));
        }
        let recomputed = sol.sum_rate / (sol.tx_power / 0.65 + 10.0);
        assert!(rel(sol.gee, recomputed) <= 1e-9);
        se.push(sol.se);
        gee.push(sol.gee);
    }
    assert!(rel(se[0], ctx.se_max.se) <= 0.01, "{} vs {}", se[0], ctx.se_max.se);
    assert!(rel(gee[2], ctx.gee_max.gee) <= 0.01, "{} vs {}", gee[2], ctx.gee_max.gee);
    assert!(se[0] >= se[1] * (1.0 - 1e-6) && se[1] >= se[2] * (1.0 - 1e-6));
    assert!(gee[0] <= gee[1] * (1.0 + 1e-6) && gee[1] <= gee[2] * (1.0 + 1e-6));

    let single = ctx.pareto_sweep(&[1.0], 0.005);
    let m = single[0].outcome.as_ref().unwrap();
    assert!(rel(m.gee, ctx.gee_max.gee) <= 0.01);
    assert!(single[0].non_dominated);
}

#[test]
fn below_green_power_the_weight_does_not_matter() {
    let (cs, params) = cell(2, 5.0, 0.01);
    let ctx = TradeoffContext::new(cs, params, ScaOptions::default()).unwrap();
    let points = ctx.pareto_sweep(&[0.0, 0.5, 1.0], 0.005);
    let first = points[0].outcome.as_ref().unwrap();
    for p in &points {
        let m = p.outcome.as_ref().unwrap();
        assert!(rel(m.se, first.se) <= 0.01 && rel(m.gee, first.gee) <= 0.01, "alpha {}", p.alpha);
        assert!(p.non_dominated);
    }
}

#[test]
fn trace_csv_layout() {
    let (cs, params, cfg, state) = start_for(2, 2, 0.5, vec![0.01; 2]);
    let r = solve_from(state, &cs, &params, &cfg).unwrap();
    let mut buf = Vec::new();
    r.trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,objective,se,gee,tx_power,solver_status"));
    assert!(lines.next().unwrap().ends_with(",start"));
    assert_eq!(text.lines().count(), r.trace.entries.len() + 1);
    assert!(text.lines().skip(2).all(|l| l.ends_with(",optimal")));
}

fn metrics(se: f64, gee: f64) -> ParetoMetrics {
    ParetoMetrics { se, gee, tx_power: 1.0 }
}

#[test]
fn domination_needs_both_metrics_beyond_tolerance() {
    assert!(dominates(&metrics(2.0, 2.0), &metrics(1.0, 1.0), 0.005));
    assert!(!dominates(&metrics(2.0, 1.004), &metrics(1.0, 1.0), 0.005));
    assert!(!dominates(&metrics(2.0, 0.5), &metrics(1.0, 1.0), 0.005));
    let mut points: Vec<ParetoPoint> = [(0.0, 3.0, 1.0), (0.5, 2.0, 2.0), (1.0, 1.0, 1.5)]
        .iter()
        .map(|(a, s, g)| ParetoPoint {
            alpha: *a,
            outcome: Ok(metrics(*s, *g)),
            non_dominated: true,
        })
        .collect();
    points.push(ParetoPoint {
        alpha: 0.7,
        outcome: Err(TradeoffError::NumericalFailure("x".into())),
        non_dominated: true,
    });
    mark_non_dominated(&mut points, 0.005);
    let flags: Vec<bool> = points.iter().map(|p| p.non_dominated).collect();
    assert_eq!(flags, vec![true, true, false, false]);
}

#[test]
fn scaling_beams_keeps_initial_state_consistent() {
    let (cs, params, cfg, state) = start_for(3, 3, 0.5, vec![0.1; 3]);
    let doubled: Vec<CVector> = state.w.iter().map(|v| v * Complex64::new(1.2, 0.0)).collect();
    let s2 = initialize_from(doubled, &cs, &params, &cfg).unwrap();
    assert!(s2.z.iter().zip(&state.z).all(|(a, b)| a >= b));
    assert!(s2.b > state.b);
}

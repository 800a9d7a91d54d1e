use nalgebra::DMatrix;
use noma_tradeoff::baselines::solve_power_min;
use noma_tradeoff::sdp::*;
use noma_tradeoff::system::*;
use noma_tradeoff::TradeoffError;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rates(params: &SystemParams) -> Vec<f64> {
    (0..params.num_users).map(|i| params.rate_threshold(i)).collect()
}

#[test]
fn scalar_program_closed_form() {
    let cs = ChannelSet::from_real(&[&[0.8]]);
    let params = SystemParams::reference(1, 1, 10.0).with_sinr_threshold(0.5);
    let prog = build_sdr(&cs, &params.noise_vars, &rates(&params)).unwrap();
    assert_eq!(prog.rows.len(), 1);
    let rep = solve_sdp(&prog, 1e-8).unwrap();
    assert_eq!(rep.status, SdpStatus::Optimal);
    let exact = 0.5 / 0.64;
    assert!((rep.p_star - exact).abs() <= 1e-7 * exact, "{}", rep.p_star);
    assert_eq!(rep.rank_ratios, vec![0.0]);
}

#[test]
fn row_counts() {
    for k in 1..=5 {
        let d: Vec<f64> = (1..=k).map(|i| i as f64).collect();
        let cs = generate_channels(0, &d, 1.0, 2).unwrap();
        let prog = build_sdr(&cs, &vec![1.0; k], &vec![0.1; k]).unwrap();
        let sinr = prog.rows.iter().filter(|r| matches!(r.kind, RowKind::Sinr { .. })).count();
        let order = prog.rows.iter().filter(|r| matches!(r.kind, RowKind::Order { .. })).count();
        assert_eq!(sinr, k * (k + 1) / 2);
        assert_eq!(order, k * (k - 1));
    }
}

#[test]
fn build_rejects_bad_targets() {
    let cs = ChannelSet::from_real(&[&[1.0], &[0.5]]);
    assert!(matches!(
        build_sdr(&cs, &[1.0, 1.0], &[0.1, 0.0]),
        Err(TradeoffError::InvalidParameter(_))
    ));
    assert!(build_sdr(&cs, &[1.0], &[0.1, 0.1]).is_err());
    let prog = build_sdr(&cs, &[1.0, 1.0], &[0.1, 0.1]).unwrap();
    assert!(solve_sdp(&prog, 0.0).is_err());
}

#[test]
fn relaxation_bounds_power_min() {
    for seed in 0..100 {
        let k = 2 + (seed as usize % 2);
        let d: Vec<f64> = (1..=k).map(|i| i as f64).collect();
        let cs = generate_channels(seed, &d, 1.0, 2).unwrap();
        let params = SystemParams::reference(2, k, 100.0).with_sinr_threshold(0.3);
        let (p_sca, _) = solve_power_min(&cs, &params).unwrap();
        let rep = solve_sdp(&build_sdr(&cs, &params.noise_vars, &rates(&params)).unwrap(), 1e-8).unwrap();
        assert_eq!(rep.status, SdpStatus::Optimal);
        assert!(rep.p_star <= p_sca * (1.0 + 1e-7), "seed {seed}: {} > {p_sca}", rep.p_star);
        assert!(rep.gap <= 1e-8);
        assert!(rep.rank_ratios.iter().all(|r| (0.0..=1.0).contains(r)));
    }
}

#[test]
fn extraction_closes_the_loop() {
    let mut rank_one = 0;
    for seed in 0..10 {
        let cs = generate_channels(seed, &[1.0, 2.0, 3.0, 4.0, 50.0], 1.0, 3).unwrap();
        let params = SystemParams::reference(3, 5, 100.0).with_sinr_threshold(0.2);
        let prog = build_sdr(&cs, &params.noise_vars, &rates(&params)).unwrap();
        let rep = solve_sdp(&prog, 1e-8).unwrap();
        assert!((rep.p_star - rep.dual_objective).abs() <= 1e-6 * rep.p_star);
        match extract_beamformers(&rep, &prog, &cs, &params) {
            Ok(sol) => {
                rank_one += 1;
                assert!(rep.extracted.is_some());
                assert!((sol.tx_power - rep.p_star).abs() <= 1e-6 * rep.p_star);
                for (i, r) in sol.per_user_rates.iter().enumerate() {
                    assert!(*r >= params.rate_threshold(i) - 1e-6);
                }
                // active ordering rows hold up to the interior-point tolerance
                let sic = check_sic_ordering(&sol.w, &cs);
                assert!(sic.violations.iter().all(|v| v.margin <= 1e-6 * sol.tx_power));
                // ordering rows hold as trace inequalities on the lifted blocks
                for r in 0..5 {
                    for j in 0..4 {
                        let h = outer(&cs.channels[r]);
                        let lo = (&h * &rep.w[j]).trace().re;
                        let hi = (&h * &rep.w[j + 1]).trace().re;
                        assert!(lo <= hi + 1e-8 * (1.0 + hi.abs()));
                    }
                }
            }
            Err(TradeoffError::RankFailure { worst, .. }) => {
                assert!(worst > RANK_TOLERANCE);
                assert!(rep.extracted.is_none());
            }
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert!(rank_one >= 8, "{rank_one}/10 rank one");
}

#[test]
fn principal_component_of_rank_one_block() {
    let u = CVector::from_vec(vec![c(0.3, -1.0), c(2.0, 0.5), c(-0.4, 0.0)]);
    let w = principal_component(&outer(&u));
    // equal up to a global phase
    let phase = w.dotc(&u) / Complex64::new(w.dotc(&u).norm(), 0.0);
    assert!((&w * phase - &u).norm() <= 1e-10 * u.norm());
    assert!(rank_ratio(&outer(&u)) < 1e-14);
}

#[test]
fn rank_two_block_is_refused() {
    let cs = ChannelSet::from_real(&[&[1.0, 0.0]]);
    let params = SystemParams::reference(2, 1, 10.0).with_sinr_threshold(0.5);
    let prog = build_sdr(&cs, &params.noise_vars, &rates(&params)).unwrap();
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.5, 0.0)]));
    let rep = SdpReport {
        status: SdpStatus::Optimal,
        p_star: 1.5,
        dual_objective: 1.5,
        rank_ratios: vec![rank_ratio(&w)],
        w: vec![w],
        extracted: None,
        iterations: 0,
        primal_residual: 0.0,
        dual_residual: 0.0,
        gap: 0.0,
    };
    match extract_beamformers(&rep, &prog, &cs, &params) {
        Err(TradeoffError::RankFailure { ratios, worst }) => {
            assert!((worst - 0.5).abs() < 1e-12);
            assert_eq!(ratios.len(), 1);
        }
        other => panic!("expected a rank failure, got {other:?}"),
    }
}

fn hermitian(n: usize, v: &[f64]) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |r, col| c(v[2 * (r * n + col)], v[2 * (r * n + col) + 1]));
    &a + a.adjoint()
}

proptest! {
    #[test]
    fn embedding_round_trip(n in 1usize..=4, v in prop::collection::vec(-3.0..3.0f64, 32)) {
        let h = hermitian(n, &v);
        let back = recover(&embed(&h));
        prop_assert_eq!(&back, &h);
        prop_assert_eq!(back.trace(), h.trace());
    }

    #[test]
    fn embedding_preserves_trace_products(
        n in 1usize..=4,
        a in prop::collection::vec(-3.0..3.0f64, 32),
        b in prop::collection::vec(-3.0..3.0f64, 32),
    ) {
        let (ha, hb) = (hermitian(n, &a), hermitian(n, &b));
        let complex = (&ha * &hb).trace().re;
        let real = 0.5 * (embed(&ha) * embed(&hb)).trace();
        prop_assert!((complex - real).abs() <= 1e-10 * (1.0 + complex.abs()));
    }
}

use nalgebra::DMatrix;
use noma_tradeoff::system::*;
use noma_tradeoff::TradeoffError;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn real_beams(v: &[f64]) -> Vec<CVector> {
    v.iter().map(|x| CVector::from_element(1, c(*x, 0.0))).collect()
}

#[test]
fn channel_generation_is_deterministic() {
    let a = generate_channels(7, &[1.0], 1.0, 3).unwrap();
    let b = generate_channels(7, &[1.0], 1.0, 3).unwrap();
    assert_eq!(a, b);
    let other = generate_channels(8, &[1.0], 1.0, 3).unwrap();
    assert_ne!(a.channels, other.channels);
}

#[test]
fn path_loss_scales_mean_gain() {
    let (mut near, mut far) = (0.0, 0.0);
    let draws = 10_000;
    for seed in 0..draws {
        let cs = generate_channels(seed, &[1.0, 100.0], 1.0, 3).unwrap();
        for (pos, orig) in cs.permutation.iter().enumerate() {
            if *orig == 0 {
                near += cs.gain(pos);
            } else {
                far += cs.gain(pos);
            }
        }
    }
    let ratio = far / near;
    assert!((ratio - 0.01).abs() <= 0.001, "ratio {ratio}");
    // unit variance per complex entry: E‖g‖² = N
    assert!((near / draws as f64 - 3.0).abs() < 0.1);
}

#[test]
fn reference_cell_shape() {
    let cs = generate_channels(3, &[1.0, 2.0, 3.0, 4.0, 50.0], 1.0, 3).unwrap();
    assert_eq!(cs.num_users(), 5);
    assert_eq!(cs.num_antennas(), 3);
    assert!(cs.ordered);
    for i in 1..5 {
        assert!(cs.gain(i - 1) >= cs.gain(i));
    }
    let mut perm = cs.permutation.clone();
    perm.sort();
    assert_eq!(perm, vec![0, 1, 2, 3, 4]);
}

#[test]
fn generation_rejects_bad_parameters() {
    assert!(matches!(
        generate_channels(0, &[1.0, 0.0], 1.0, 3),
        Err(TradeoffError::InvalidParameter(_))
    ));
    assert!(matches!(
        generate_channels(0, &[1.0], -1.0, 3),
        Err(TradeoffError::InvalidParameter(_))
    ));
    assert!(generate_channels(0, &[], 1.0, 3).is_err());
    assert!(generate_channels(0, &[1.0], 1.0, 0).is_err());
}

#[test]
fn ordering_by_gain() {
    let cs = order_users(ChannelSet::from_real(&[&[1.0], &[2.0], &[2f64.sqrt()]]));
    assert_eq!(cs.permutation, vec![1, 2, 0]);
    assert!(cs.ordered);

    let sorted = order_users(ChannelSet::from_real(&[&[3.0], &[2.0], &[1.0]]));
    assert_eq!(sorted.permutation, vec![0, 1, 2]);

    let tied = order_users(ChannelSet::from_real(&[&[1.0, 0.0], &[0.0, 2.0], &[0.0, 1.0]]));
    assert_eq!(tied.permutation, vec![1, 0, 2]);
}

#[test]
fn orthogonal_beam_has_zero_sinr() {
    let cs = ChannelSet::from_real(&[&[1.0, 0.0]]);
    let p = SystemParams::reference(2, 1, 1.0);
    let w = vec![CVector::from_vec(vec![c(0.0, 0.0), c(0.0, 3.0)])];
    assert_eq!(sinr_decode(0, 0, &w, &cs, &p).unwrap(), 0.0);
    assert_eq!(achievable_rate(0, &w, &cs, &p), 0.0);
}

#[test]
fn two_user_hand_example() {
    let cs = order_users(ChannelSet::from_real(&[&[2.0], &[1.0]]));
    let p = SystemParams::reference(1, 2, 10.0);
    let w = real_beams(&[1.0, 2.0]);
    assert!((sinr_decode(0, 1, &w, &cs, &p).unwrap() - 3.2).abs() < 1e-14);
    assert!((sinr_decode(1, 1, &w, &cs, &p).unwrap() - 2.0).abs() < 1e-14);
    assert!((achievable_rate(1, &w, &cs, &p) - 3f64.log2()).abs() < 1e-14);
    let zeroed = real_beams(&[1.0, 0.0]);
    assert_eq!(achievable_rate(1, &zeroed, &cs, &p), 0.0);
}

#[test]
fn zero_beams_give_zero_metrics() {
    let cs = generate_channels(1, &[1.0, 2.0], 1.0, 2).unwrap();
    let p = SystemParams::reference(2, 2, 1.0);
    let w = vec![CVector::zeros(2); 2];
    assert_eq!(se_of(&w, &cs, &p), 0.0);
    assert_eq!(gee_of(&w, &cs, &p), 0.0);
    assert_eq!(tx_power_of(&w), 0.0);
}

#[test]
fn power_scales_quadratically() {
    let w = vec![
        CVector::from_vec(vec![c(1.0, -0.5), c(0.2, 0.3)]),
        CVector::from_vec(vec![c(-0.7, 0.1), c(0.0, 2.0)]),
    ];
    let scaled: Vec<CVector> = w.iter().map(|v| v * c(3.0, 0.0)).collect();
    assert!((tx_power_of(&scaled) - 9.0 * tx_power_of(&w)).abs() < 1e-12);
}

#[test]
fn gee_uses_consumed_power() {
    let cs = generate_channels(4, &[1.0, 2.0], 1.0, 2).unwrap();
    let p = SystemParams::reference(2, 2, 10.0);
    let w = vec![
        CVector::from_vec(vec![c(0.3, 0.1), c(0.2, -0.4)]),
        CVector::from_vec(vec![c(1.0, 0.5), c(-0.6, 0.2)]),
    ];
    let sol = BeamformerSolution::evaluate(w.clone(), &cs, &p);
    let expected = 1e6 * sol.se / (sol.tx_power / 0.65 + 10.0);
    assert!((sol.gee - expected).abs() <= 1e-12 * expected);
    assert!((sol.sum_rate - 1e6 * sol.se).abs() <= 1e-9 * sol.sum_rate);
    assert_eq!(sol.gee, gee_of(&w, &cs, &p));
}

#[test]
fn verify_flags_each_constraint() {
    let cs = ChannelSet::from_real(&[&[1.0], &[1.0]]);
    let p = SystemParams::reference(1, 2, 10.0).with_sinr_threshold(0.1);
    let good = BeamformerSolution::evaluate(real_beams(&[1.0, 2.0]), &cs, &p);
    assert!(good.verify(&cs, &p, 1e-6).is_ok());
    let bad_order = BeamformerSolution::evaluate(real_beams(&[2.0, 1.0]), &cs, &p);
    assert!(bad_order.verify(&cs, &p, 1e-6).unwrap_err().contains("SIC"));
    let over = BeamformerSolution::evaluate(real_beams(&[2.0, 3.0]), &cs, &p);
    assert!(over.verify(&cs, &p, 1e-6).unwrap_err().contains("budget"));
    let weak = BeamformerSolution::evaluate(real_beams(&[0.01, 2.0]), &cs, &p);
    assert!(weak.verify(&cs, &p, 1e-6).unwrap_err().contains("threshold"));
}

#[test]
fn rate_and_sinr_thresholds_agree() {
    let p = SystemParams::reference(2, 2, 1.0).with_rate_thresholds(&[1.0, 0.5]);
    assert!((p.sinr_threshold(0) - 1.0).abs() < 1e-15);
    assert!((p.sinr_threshold(1) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    assert!((p.rate_threshold(1) - 0.5).abs() < 1e-15);
}

#[test]
fn params_validation() {
    let ok = SystemParams::reference(3, 5, 10.0);
    assert!(ok.validate().is_ok());
    assert!(ok.clone().with_budget(0.0).validate().is_err());
    let mut bad = ok.clone();
    bad.eps0 = 1.5;
    assert!(bad.validate().is_err());
    let mut bad = ok;
    bad.noise_vars.pop();
    assert!(bad.validate().is_err());
}

fn cvec(parts: &[f64]) -> CVector {
    CVector::from_iterator(parts.len() / 2, parts.chunks(2).map(|p| c(p[0], p[1])))
}

fn instance() -> impl Strategy<Value = (ChannelSet, Vec<CVector>)> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2 * n), k),
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2 * n), k),
        )
            .prop_map(|(h, w)| {
                let channels: Vec<CVector> = h.iter().map(|v| cvec(v)).collect();
                let k = channels.len();
                let cs = order_users(ChannelSet::new(channels, vec![1.0; k], 0.0));
                (cs, w.iter().map(|v| cvec(v)).collect())
            })
    })
}

/// Random unitary from the QR factor of a complex Gaussian-like matrix.
fn unitary(n: usize, entries: &[f64]) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(n, n, |r, col| c(entries[2 * (r * n + col)], entries[2 * (r * n + col) + 1] + 0.1));
    m.qr().q()
}

proptest! {
    #[test]
    fn rate_never_exceeds_own_decoder((cs, w) in instance()) {
        let p = SystemParams::reference(cs.num_antennas(), cs.num_users(), 1.0);
        for i in 0..cs.num_users() {
            let own = sinr_decode(i, i, &w, &cs, &p).unwrap();
            prop_assert!(achievable_rate(i, &w, &cs, &p) <= own.ln_1p() / std::f64::consts::LN_2 + 1e-12);
        }
    }

    #[test]
    fn min_commutes_with_log((cs, w) in instance()) {
        let p = SystemParams::reference(cs.num_antennas(), cs.num_users(), 1.0);
        for i in 0..cs.num_users() {
            let worst = (0..=i).map(|k| sinr_decode(k, i, &w, &cs, &p).unwrap()).fold(f64::INFINITY, f64::min);
            let r = achievable_rate(i, &w, &cs, &p);
            prop_assert!((r - worst.ln_1p() / std::f64::consts::LN_2).abs() <= 1e-12 * (1.0 + r));
        }
    }

    #[test]
    fn gee_positive_iff_se_positive((cs, w) in instance()) {
        let p = SystemParams::reference(cs.num_antennas(), cs.num_users(), 1.0);
        let se = se_of(&w, &cs, &p);
        let gee = gee_of(&w, &cs, &p);
        prop_assert!(gee >= 0.0);
        prop_assert_eq!(gee == 0.0, se == 0.0);
    }

    #[test]
    fn common_rotation_preserves_metrics(
        (cs, w) in instance(),
        entries in prop::collection::vec(-1.0..1.0f64, 32),
    ) {
        let n = cs.num_antennas();
        let u = unitary(n, &entries);
        let rotated = ChannelSet::new(cs.channels.iter().map(|h| &u * h).collect(), cs.distances.clone(), 0.0);
        let w_rot: Vec<CVector> = w.iter().map(|v| &u * v).collect();
        let p = SystemParams::reference(n, cs.num_users(), 1.0);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300);
        prop_assert!(close(se_of(&w, &cs, &p), se_of(&w_rot, &rotated, &p)));
        prop_assert!(close(gee_of(&w, &cs, &p), gee_of(&w_rot, &rotated, &p)));
        prop_assert!(close(tx_power_of(&w), tx_power_of(&w_rot)));
    }

    #[test]
    fn ordering_is_idempotent((cs, _w) in instance()) {
        let again = order_users(cs.clone());
        prop_assert_eq!(&again.channels, &cs.channels);
        prop_assert_eq!(&again.permutation, &cs.permutation);
    }
}

//! Downlink MISO-NOMA cell: channels, SIC decoding semantics and metrics.
//!
//! Users are indexed in decoding order after [`order_users`]: index 0 is the
//! strongest user. User `i` is decoded by every user `k ≤ i`, which has already
//! cancelled the signals of users `0..i` and treats nothing else as interference
//! from stronger users. Rates are in bits/s/Hz; the bandwidth factor is applied
//! only when reporting `sum_rate` and `gee`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::TradeoffError;

pub type CVector = DVector<Complex64>;

/// Absolute tolerance of the SIC ordering check.
pub const SIC_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub num_antennas: usize,
    pub num_users: usize,
    /// Transmit power budget (W).
    pub p_ava: f64,
    /// Receiver noise power per user (W), in decoding order.
    pub noise_vars: Vec<f64>,
    /// Power amplifier efficiency.
    pub eps0: f64,
    /// Static circuit power (W).
    pub p_loss: f64,
    /// Bandwidth (Hz), used only for reported rates.
    pub bandwidth: f64,
    sinr_thresholds: Vec<f64>,
}

impl SystemParams {
    /// Reference cell: unit noise, 65% amplifier efficiency, 40 dBm circuit
    /// power, 1 MHz and a common SINR threshold of 0.01.
    pub fn reference(num_antennas: usize, num_users: usize, p_ava: f64) -> Self {
        Self {
            num_antennas,
            num_users,
            p_ava,
            noise_vars: vec![1.0; num_users],
            eps0: 0.65,
            p_loss: dbm_to_watts(40.0),
            bandwidth: 1e6,
            sinr_thresholds: vec![0.01; num_users],
        }
    }

    pub fn with_sinr_threshold(mut self, eta: f64) -> Self {
        self.sinr_thresholds = vec![eta; self.num_users];
        self
    }

    pub fn with_sinr_thresholds(mut self, eta: Vec<f64>) -> Self {
        self.sinr_thresholds = eta;
        self
    }

    /// Sets thresholds from per-user minimum rates (bits/s/Hz).
    pub fn with_rate_thresholds(mut self, rates: &[f64]) -> Self {
        self.sinr_thresholds = rates.iter().map(|r| r.exp2() - 1.0).collect();
        self
    }

    pub fn with_budget(mut self, p_ava: f64) -> Self {
        self.p_ava = p_ava;
        self
    }

    pub fn sinr_thresholds(&self) -> &[f64] {
        &self.sinr_thresholds
    }

    pub fn sinr_threshold(&self, i: usize) -> f64 {
        self.sinr_thresholds[i]
    }

    /// Minimum rate of user `i`, `log2(1 + η_i)`.
    pub fn rate_threshold(&self, i: usize) -> f64 {
        self.sinr_thresholds[i].ln_1p() / std::f64::consts::LN_2
    }

    pub fn validate(&self) -> Result<(), TradeoffError> {
        let bad = |m: &str| Err(TradeoffError::InvalidParameter(m.to_string()));
        if self.num_antennas == 0 || self.num_users == 0 {
            return bad("need at least one antenna and one user");
        }
        if !(self.p_ava > 0.0 && self.p_ava.is_finite()) {
            return bad("power budget must be positive");
        }
        if !(self.p_loss >= 0.0) {
            return bad("circuit power must be nonnegative");
        }
        if !(self.eps0 > 0.0 && self.eps0 <= 1.0) {
            return bad("amplifier efficiency must lie in (0, 1]");
        }
        if !(self.bandwidth > 0.0) {
            return bad("bandwidth must be positive");
        }
        if self.noise_vars.len() != self.num_users || self.noise_vars.iter().any(|s| !(*s > 0.0)) {
            return bad("one positive noise power per user required");
        }
        if self.sinr_thresholds.len() != self.num_users || self.sinr_thresholds.iter().any(|e| !(*e >= 0.0)) {
            return bad("one nonnegative SINR threshold per user required");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub channels: Vec<CVector>,
    pub distances: Vec<f64>,
    pub path_loss_exp: f64,
    pub ordered: bool,
    /// `permutation[i]` is the original index of the user now at position `i`.
    pub permutation: Vec<usize>,
}

impl ChannelSet {
    /// Wraps given channels in their original order.
    pub fn new(channels: Vec<CVector>, distances: Vec<f64>, path_loss_exp: f64) -> Self {
        let k = channels.len();
        Self {
            channels,
            distances,
            path_loss_exp,
            ordered: false,
            permutation: (0..k).collect(),
        }
    }

    /// Builds a set from real-valued single-antenna gains (mostly for tests).
    pub fn from_real(gains: &[&[f64]]) -> Self {
        let channels = gains
            .iter()
            .map(|g| CVector::from_iterator(g.len(), g.iter().map(|v| Complex64::new(*v, 0.0))))
            .collect::<Vec<_>>();
        let k = channels.len();
        Self::new(channels, vec![1.0; k], 0.0)
    }

    pub fn num_users(&self) -> usize {
        self.channels.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.channels.first().map_or(0, |h| h.len())
    }

    pub fn gain(&self, i: usize) -> f64 {
        self.channels[i].norm_squared()
    }
}

/// Draws Rayleigh channels `h_i = d_i^{−κ/2} g_i` with `g_i ~ CN(0, I)` and
/// returns them in decoding order.
pub fn generate_channels(
    seed: u64,
    distances: &[f64],
    path_loss_exp: f64,
    num_antennas: usize,
) -> Result<ChannelSet, TradeoffError> {
    if distances.is_empty() || num_antennas == 0 {
        return Err(TradeoffError::InvalidParameter(
            "need at least one user and one antenna".into(),
        ));
    }
    if distances.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(TradeoffError::InvalidParameter("distances must be positive".into()));
    }
    if !(path_loss_exp >= 0.0 && path_loss_exp.is_finite()) {
        return Err(TradeoffError::InvalidParameter(
            "path-loss exponent must be nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let channels = distances
        .iter()
        .map(|d| {
            let amp = d.powf(-path_loss_exp / 2.0);
            CVector::from_fn(num_antennas, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * (scale * amp)
            })
        })
        .collect();
    Ok(order_users(ChannelSet::new(channels, distances.to_vec(), path_loss_exp)))
}

/// Sorts users by decreasing channel gain; ties keep the original order.
pub fn order_users(cs: ChannelSet) -> ChannelSet {
    let mut idx: Vec<usize> = (0..cs.num_users()).collect();
    let gains: Vec<f64> = cs.channels.iter().map(|h| h.norm_squared()).collect();
    idx.sort_by(|a, b| gains[*b].total_cmp(&gains[*a]).then(a.cmp(b)));
    ChannelSet {
        channels: idx.iter().map(|i| cs.channels[*i].clone()).collect(),
        distances: idx.iter().map(|i| cs.distances[*i]).collect(),
        path_loss_exp: cs.path_loss_exp,
        ordered: true,
        permutation: idx.iter().map(|i| cs.permutation[*i]).collect(),
    }
}

/// `|h_k^H w_j|²`.
pub fn received_power(cs: &ChannelSet, k: usize, w: &[CVector], j: usize) -> f64 {
    cs.channels[k].dotc(&w[j]).norm_sqr()
}

/// SINR of user `i`'s signal at receiver `k ≤ i` after cancelling users `< i`.
pub fn sinr_decode(
    k: usize,
    i: usize,
    w: &[CVector],
    cs: &ChannelSet,
    params: &SystemParams,
) -> Result<f64, TradeoffError> {
    if k > i {
        return Err(TradeoffError::ContractViolation(format!(
            "receiver {k} cannot decode the stronger user {i}"
        )));
    }
    Ok(sinr_unchecked(k, i, w, cs, params))
}

fn sinr_unchecked(k: usize, i: usize, w: &[CVector], cs: &ChannelSet, params: &SystemParams) -> f64 {
    let signal = received_power(cs, k, w, i);
    let interference: f64 = (0..i).map(|j| received_power(cs, k, w, j)).sum();
    signal / (interference + params.noise_vars[k])
}

/// Rate of user `i`: the worst decoding rate over receivers `0..=i`.
pub fn achievable_rate(i: usize, w: &[CVector], cs: &ChannelSet, params: &SystemParams) -> f64 {
    (0..=i)
        .map(|k| sinr_unchecked(k, i, w, cs, params).ln_1p() / std::f64::consts::LN_2)
        .fold(f64::INFINITY, f64::min)
}

pub fn rates_of(w: &[CVector], cs: &ChannelSet, params: &SystemParams) -> Vec<f64> {
    (0..w.len()).map(|i| achievable_rate(i, w, cs, params)).collect()
}

pub fn tx_power_of(w: &[CVector]) -> f64 {
    w.iter().map(|v| v.norm_squared()).sum()
}

/// Sum of per-user rates (bits/s/Hz).
pub fn se_of(w: &[CVector], cs: &ChannelSet, params: &SystemParams) -> f64 {
    rates_of(w, cs, params).iter().sum()
}

/// Total consumed power `P_t/ε0 + P_l`.
pub fn consumed_power(tx_power: f64, params: &SystemParams) -> f64 {
    tx_power / params.eps0 + params.p_loss
}

/// Energy efficiency in bits/joule.
pub fn gee_of(w: &[CVector], cs: &ChannelSet, params: &SystemParams) -> f64 {
    let se = se_of(w, cs, params);
    if se == 0.0 {
        return 0.0;
    }
    params.bandwidth * se / consumed_power(tx_power_of(w), params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SicViolation {
    pub receiver: usize,
    /// The pair `(j, j + 1)` whose received powers are out of order.
    pub user: usize,
    /// `|h^H w_j|² − |h^H w_{j+1}|²` (positive when violated).
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SicReport {
    pub ok: bool,
    pub violations: Vec<SicViolation>,
}

/// Checks that every receiver sees non-decreasing power from stronger to
/// weaker users' beams.
pub fn check_sic_ordering(w: &[CVector], cs: &ChannelSet) -> SicReport {
    let mut violations = Vec::new();
    for i in 0..cs.num_users() {
        for j in 0..w.len().saturating_sub(1) {
            let margin = received_power(cs, i, w, j) - received_power(cs, i, w, j + 1);
            if margin > SIC_TOLERANCE {
                violations.push(SicViolation {
                    receiver: i,
                    user: j,
                    margin,
                });
            }
        }
    }
    SicReport {
        ok: violations.is_empty(),
        violations,
    }
}

/// Budget from transmit SNR: `P = σ² 10^{snr/10}`.
pub fn tx_snr_to_power(tx_snr_db: f64, noise_var: f64) -> f64 {
    noise_var * 10f64.powf(tx_snr_db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSolution {
    pub w: Vec<CVector>,
    pub per_user_rates: Vec<f64>,
    /// Bits/s.
    pub sum_rate: f64,
    /// Bits/s/Hz.
    pub se: f64,
    /// Bits/joule.
    pub gee: f64,
    /// Watts.
    pub tx_power: f64,
}

impl BeamformerSolution {
    pub fn evaluate(w: Vec<CVector>, cs: &ChannelSet, params: &SystemParams) -> Self {
        let per_user_rates = rates_of(&w, cs, params);
        let se: f64 = per_user_rates.iter().sum();
        let tx_power = tx_power_of(&w);
        let gee = if se == 0.0 {
            0.0
        } else {
            params.bandwidth * se / consumed_power(tx_power, params)
        };
        Self {
            w,
            per_user_rates,
            sum_rate: params.bandwidth * se,
            se,
            gee,
            tx_power,
        }
    }

    /// Checks rates against the thresholds, the SIC ordering and the budget.
    pub fn verify(&self, cs: &ChannelSet, params: &SystemParams, rate_slack: f64) -> Result<(), String> {
        for (i, r) in self.per_user_rates.iter().enumerate() {
            let need = params.rate_threshold(i);
            if *r < need - rate_slack {
                return Err(format!("user {i} rate {r:.6} below threshold {need:.6}"));
            }
        }
        let sic = check_sic_ordering(&self.w, cs);
        if let Some(v) = sic.violations.first() {
            return Err(format!(
                "SIC order violated at receiver {} between users {} and {} by {:.3e}",
                v.receiver,
                v.user,
                v.user + 1,
                v.margin
            ));
        }
        if self.tx_power > params.p_ava * (1.0 + 1e-8) {
            return Err(format!(
                "transmit power {:.6} exceeds budget {:.6}",
                self.tx_power, params.p_ava
            ));
        }
        Ok(())
    }
}

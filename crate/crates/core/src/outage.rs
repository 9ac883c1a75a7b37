//! Radar outage probability: exact hypoexponential CDF, Chernoff bounds, and
//! Monte Carlo estimation.
//!
//! The accumulated radar SNR over `T` slots is `sum_t psi(t) |RCS_t|^2` with
//! i.i.d. exponential echo powers, i.e. a weighted sum of independent
//! exponentials with rates `lambda_t = 1 / (psi(t) * Omega)`. Its CDF has a
//! partial-fraction closed form when the rates are distinct; duplicated or
//! clustered rates are evaluated through the phase-type identity
//! `F(x) = 1 - e_1^T exp(x Q) 1` with `Q` the upper-bidiagonal generator.

use thiserror::Error;

use crate::channel::{self, ChannelVector};
use crate::linalg::{expm, Matrix};
use crate::rng;
use crate::scenario::{SelectionSchedule, SystemParams};

/// Relative gap below which two rates are treated as duplicates. The
/// partial-fraction denominators lose roughly eight digits near coincidence.
pub const DUPLICATE_REL_GAP: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum OutageError {
    #[error("slot {slot} has zero radar gain; outage is degenerate")]
    DegenerateGain { slot: usize },
    #[error("rates must be strictly positive, got {value} at index {index}")]
    NonPositiveRate { index: usize, value: f64 },
    #[error("rates contain near-duplicates (relative gap {gap:.3e}); use the robust path")]
    DuplicateRates { gap: f64 },
    #[error("CDF evaluation lost accuracy: value {value} outside [0,1] beyond tolerance")]
    AccuracyLoss { value: f64 },
    #[error("moment generating function undefined: s*psi*Omega = {value} >= 1 at slot {slot}")]
    MgfDomain { slot: usize, value: f64 },
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
}

/// Which Chernoff formulation drives bounds and the optimizer surrogate.
///
/// `Corrected` uses the lower-tail exponent `s*Gth - sum log(1 + s psi Omega)`
/// whose exponential provably dominates the exact outage for every `s >= 0`.
/// `Paper` evaluates the upper-tail-style expression
/// `-s*Gth - sum log(1 - s psi Omega)` verbatim for reproduction; the two are
/// related by `s -> -s` and only the corrected form carries the dominance
/// guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SurrogateMode {
    #[default]
    Corrected,
    Paper,
}

impl SurrogateMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SurrogateMode::Corrected => "corrected",
            SurrogateMode::Paper => "paper",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "corrected" => Some(SurrogateMode::Corrected),
            "paper" => Some(SurrogateMode::Paper),
            _ => None,
        }
    }
}

/// Echo-power correlation across slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RcsModel {
    /// Independent draw per slot (distinct look angles).
    #[default]
    Iid,
    /// One shared draw for all slots (repeated look angle).
    Correlated,
}

impl RcsModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RcsModel::Iid => "iid",
            RcsModel::Correlated => "correlated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "iid" => Some(RcsModel::Iid),
            "correlated" => Some(RcsModel::Correlated),
            _ => None,
        }
    }
}

/// Positive exponential rates `lambda_t = 1/(psi(t) Omega)`, one per slot.
#[derive(Debug, Clone)]
pub struct RateVector {
    rates: Vec<f64>,
}

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self, OutageError> {
        for (i, &r) in rates.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(OutageError::NonPositiveRate { index: i, value: r });
            }
        }
        Ok(Self { rates })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Smallest pairwise relative gap; infinity for a single rate.
    pub fn min_relative_gap(&self) -> f64 {
        min_relative_gap(&self.rates)
    }

    /// True when some pair of rates is closer than [`DUPLICATE_REL_GAP`].
    pub fn has_near_duplicates(&self) -> bool {
        self.min_relative_gap() < DUPLICATE_REL_GAP
    }
}

fn min_relative_gap(rates: &[f64]) -> f64 {
    let mut min_gap = f64::INFINITY;
    for i in 0..rates.len() {
        for j in i + 1..rates.len() {
            let gap = (rates[i] - rates[j]).abs() / rates[i].max(rates[j]);
            min_gap = min_gap.min(gap);
        }
    }
    min_gap
}

/// Builds the rate vector of a schedule from its per-slot radar gains.
pub fn rates_from_schedule(
    schedule: &SelectionSchedule,
    h_target: &ChannelVector,
    params: &SystemParams,
) -> Result<RateVector, OutageError> {
    let gains = channel::schedule_sensing_gains(schedule, h_target, params)?;
    let mut rates = Vec::with_capacity(gains.len());
    for (slot, psi) in gains.iter().enumerate() {
        if !(psi > &0.0) {
            return Err(OutageError::DegenerateGain { slot });
        }
        rates.push(1.0 / (psi * params.rcs_mean));
    }
    RateVector::new(rates)
}

/// Closed-form hypoexponential CDF for pairwise-distinct rates:
/// `F(x) = 1 - sum_t e^{-lambda_t x} prod_{m != t} lambda_m / (lambda_m - lambda_t)`.
pub fn hypoexp_cdf_distinct(rates: &[f64], x: f64) -> Result<f64, OutageError> {
    let rv = RateVector::new(rates.to_vec())?;
    let gap = rv.min_relative_gap();
    if gap < DUPLICATE_REL_GAP {
        return Err(OutageError::DuplicateRates { gap });
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let mut survival = 0.0;
    for t in 0..rates.len() {
        let mut coeff = 1.0;
        for m in 0..rates.len() {
            if m != t {
                coeff *= rates[m] / (rates[m] - rates[t]);
            }
        }
        survival += coeff * (-rates[t] * x).exp();
    }
    finish_cdf(1.0 - survival)
}

/// Hypoexponential CDF via the phase-type identity; valid for arbitrary
/// (including repeated) positive rates.
pub fn hypoexp_cdf_robust(rates: &[f64], x: f64) -> Result<f64, OutageError> {
    let rv = RateVector::new(rates.to_vec())?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let t = rv.len();
    let mut generator = Matrix::zeros(t, t);
    for (i, &rate) in rv.rates().iter().enumerate() {
        generator.set(i, i, -rate * x);
        if i + 1 < t {
            generator.set(i, i + 1, rate * x);
        }
    }
    let transition = expm(&generator);
    let survival: f64 = transition.row(0).iter().sum();
    finish_cdf(1.0 - survival)
}

fn finish_cdf(value: f64) -> Result<f64, OutageError> {
    if !value.is_finite() || value < -1e-9 || value > 1.0 + 1e-9 {
        return Err(OutageError::AccuracyLoss { value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Result of the automatic CDF dispatcher.
#[derive(Debug, Clone, Copy)]
pub struct HypoexpEval {
    pub value: f64,
    pub used_robust_path: bool,
}

/// Evaluates the hypoexponential CDF, routing clustered rate vectors to the
/// robust phase-type path. The law is invariant to the slot order, so the
/// rates are sorted first; equal rate multisets then produce bit-identical
/// values regardless of slot assignment. Deep-tail values also use the
/// phase-type path: the partial-fraction coefficients amplify the
/// alternating-sum noise floor, while the matrix-exponential route keeps it
/// near machine epsilon.
pub fn hypoexp_cdf(rates: &[f64], x: f64) -> Result<HypoexpEval, OutageError> {
    let mut sorted = rates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    if min_relative_gap(&sorted) < DUPLICATE_REL_GAP {
        return Ok(HypoexpEval {
            value: hypoexp_cdf_robust(&sorted, x)?,
            used_robust_path: true,
        });
    }
    match hypoexp_cdf_distinct(&sorted, x) {
        Ok(value) if value >= 1e-8 => Ok(HypoexpEval {
            value,
            used_robust_path: false,
        }),
        // tiny values and accuracy failures both mean the partial-fraction
        // coefficients cancelled too hard; the phase-type route is exact there
        Ok(_) | Err(OutageError::AccuracyLoss { .. }) => Ok(HypoexpEval {
            value: hypoexp_cdf_robust(&sorted, x)?,
            used_robust_path: true,
        }),
        Err(other) => Err(other),
    }
}

/// Monte Carlo estimate of the outage probability.
///
/// Draw indexing is counter-based per `(slot, sample)`, so the estimate for a
/// fixed `(seed, n_samples)` is bit-reproducible no matter how the sample
/// loop is partitioned.
pub fn mc_outage(
    schedule: &SelectionSchedule,
    h_target: &ChannelVector,
    params: &SystemParams,
    n_samples: u64,
    seed: u64,
    model: RcsModel,
) -> Result<(f64, f64), OutageError> {
    assert!(n_samples >= 1, "need at least one sample");
    let gains = channel::schedule_sensing_gains(schedule, h_target, params)?;
    let omega = params.rcs_mean;
    let threshold = params.snr_threshold;
    let mut hits = 0u64;
    match model {
        RcsModel::Iid => {
            for i in 0..n_samples {
                let mut total = 0.0;
                for (t, &psi) in gains.iter().enumerate() {
                    total += psi * rng::exp_sample(seed, t as u64, i, omega);
                }
                if total < threshold {
                    hits += 1;
                }
            }
        }
        RcsModel::Correlated => {
            let gain_sum: f64 = gains.iter().sum();
            for i in 0..n_samples {
                let total = gain_sum * rng::exp_sample(seed, u64::MAX, i, omega);
                if total < threshold {
                    hits += 1;
                }
            }
        }
    }
    let estimate = hits as f64 / n_samples as f64;
    let stderr = (estimate * (1.0 - estimate) / n_samples as f64).sqrt();
    Ok((estimate, stderr))
}

/// Log of the lower-tail Chernoff bound: `s*Gth - sum_t ln(1 + s psi(t) Omega)`.
/// For every `s >= 0`, `exp` of this value upper-bounds the exact outage.
pub fn chernoff_log_lower(s: f64, gains: &[f64], omega: f64, threshold: f64) -> f64 {
    debug_assert!(s >= 0.0);
    s * threshold - gains.iter().map(|&psi| (s * psi * omega).ln_1p()).sum::<f64>()
}

/// Log of the bound in its published upper-tail form:
/// `-s*Gth - sum_t ln(1 - s psi(t) Omega)`, requiring `s psi Omega < 1`.
pub fn chernoff_log_paper(
    s: f64,
    gains: &[f64],
    omega: f64,
    threshold: f64,
) -> Result<f64, OutageError> {
    for (slot, &psi) in gains.iter().enumerate() {
        let v = s * psi * omega;
        if v >= 1.0 {
            return Err(OutageError::MgfDomain { slot, value: v });
        }
    }
    Ok(-s * threshold - gains.iter().map(|&psi| (-s * psi * omega).ln_1p()).sum::<f64>())
}

/// Minimizes the Chernoff exponent over `s`.
///
/// Corrected mode: the exponent is convex with derivative
/// `Gth - sum psi*Omega/(1 + s psi Omega)`; if the mean already dominates the
/// threshold the minimizer is `s* = 0` (bound 1), otherwise the unique root
/// is found by bisection. Paper mode: golden-section search over the open
/// feasible interval `(0, 1/max_t psi Omega)`.
pub fn optimize_s(
    gains: &[f64],
    omega: f64,
    threshold: f64,
    mode: SurrogateMode,
) -> (f64, f64) {
    match mode {
        SurrogateMode::Corrected => {
            let derivative = |s: f64| -> f64 {
                threshold
                    - gains
                        .iter()
                        .map(|&psi| psi * omega / (1.0 + s * psi * omega))
                        .sum::<f64>()
            };
            if derivative(0.0) >= 0.0 {
                return (0.0, 0.0);
            }
            let mut hi = 1.0 / (gains.iter().fold(0.0f64, |a, &p| a.max(p)) * omega).max(1e-300);
            let mut guard = 0;
            while derivative(hi) < 0.0 {
                hi *= 2.0;
                guard += 1;
                if guard > 2000 {
                    break;
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if derivative(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            let s_star = 0.5 * (lo + hi);
            (s_star, chernoff_log_lower(s_star, gains, omega, threshold))
        }
        SurrogateMode::Paper => {
            let max_gain = gains.iter().fold(0.0f64, |a, &p| a.max(p));
            let s_max = (1.0 - 1e-9) / (max_gain * omega).max(1e-300);
            let objective = |s: f64| {
                chernoff_log_paper(s, gains, omega, threshold).unwrap_or(f64::INFINITY)
            };
            let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
            let (mut lo, mut hi) = (0.0f64, s_max);
            let mut c = hi - inv_phi * (hi - lo);
            let mut d = lo + inv_phi * (hi - lo);
            let (mut fc, mut fd) = (objective(c), objective(d));
            for _ in 0..300 {
                if fc <= fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - inv_phi * (hi - lo);
                    fc = objective(c);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + inv_phi * (hi - lo);
                    fd = objective(d);
                }
                if hi - lo <= 1e-13 * s_max {
                    break;
                }
            }
            let s_star = 0.5 * (lo + hi);
            (s_star, objective(s_star))
        }
    }
}

/// Full outage assessment of one schedule.
#[derive(Debug, Clone)]
pub struct OutageReport {
    pub exact_cdf: f64,
    pub chernoff_bound: f64,
    pub chernoff_s: f64,
    pub mc_estimate: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub used_robust_path: bool,
}

/// Monte Carlo request for [`outage_report`].
#[derive(Debug, Clone, Copy)]
pub struct McSettings {
    pub samples: u64,
    pub seed: u64,
}

/// Evaluates the exact outage, the optimized Chernoff bound, and optionally a
/// Monte Carlo estimate for a schedule under the chosen RCS model.
pub fn outage_report(
    schedule: &SelectionSchedule,
    h_target: &ChannelVector,
    params: &SystemParams,
    surrogate: SurrogateMode,
    model: RcsModel,
    mc: Option<McSettings>,
) -> Result<OutageReport, OutageError> {
    let gains = channel::schedule_sensing_gains(schedule, h_target, params)?;
    let omega = params.rcs_mean;
    let threshold = params.snr_threshold;

    let (exact, used_robust, bound_gains): (f64, bool, Vec<f64>) = match model {
        RcsModel::Iid => {
            let rates = rates_from_schedule(schedule, h_target, params)?;
            let eval = hypoexp_cdf(rates.rates(), threshold)?;
            (eval.value, eval.used_robust_path, gains.clone())
        }
        RcsModel::Correlated => {
            // one shared echo draw: accumulated SNR is exponential with mean
            // Omega * sum_t psi(t)
            let gain_sum: f64 = gains.iter().sum();
            if !(gain_sum > 0.0) {
                return Err(OutageError::DegenerateGain { slot: 0 });
            }
            let exact = -(-threshold / (gain_sum * omega)).exp_m1();
            (exact, false, vec![gain_sum])
        }
    };

    let (s_star, log_bound) = optimize_s(&bound_gains, omega, threshold, surrogate);
    let chernoff_bound = log_bound.exp().min(1.0);

    let (mc_estimate, mc_stderr) = match mc {
        Some(settings) if settings.samples > 0 => {
            let (est, err) = mc_outage(
                schedule,
                h_target,
                params,
                settings.samples,
                settings.seed,
                model,
            )?;
            (Some(est), Some(err))
        }
        _ => (None, None),
    };

    Ok(OutageReport {
        exact_cdf: exact,
        chernoff_bound,
        chernoff_s: s_star,
        mc_estimate,
        mc_stderr,
        used_robust_path: used_robust,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::target_channel;
    use crate::rng::SmallRng;

    fn erlang_cdf(stages: usize, rate: f64, x: f64) -> f64 {
        // independent oracle: 1 - e^{-rate x} sum_{k<stages} (rate x)^k / k!
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..stages {
            term *= rate * x / k as f64;
            sum += term;
        }
        1.0 - (-rate * x).exp() * sum
    }

    #[test]
    fn single_rate_cdf_is_exponential() {
        assert_eq!(hypoexp_cdf_distinct(&[1.0], 0.0).unwrap(), 0.0);
        let median = hypoexp_cdf_distinct(&[1.0], std::f64::consts::LN_2).unwrap();
        assert!((median - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_rate_closed_form_matches_hand_expansion() {
        // rates (1,2) at x=1: 1 - 2 e^{-1} + e^{-2}
        let expected = 1.0 - 2.0 * (-1.0f64).exp() + (-2.0f64).exp();
        let value = hypoexp_cdf_distinct(&[1.0, 2.0], 1.0).unwrap();
        assert!((value - expected).abs() < 1e-14);
        assert!((value - 0.3995764).abs() < 1e-7);
    }

    #[test]
    fn distinct_path_rejects_duplicates() {
        assert!(matches!(
            hypoexp_cdf_distinct(&[1.0, 1.0 + 1e-12], 1.0),
            Err(OutageError::DuplicateRates { .. })
        ));
    }

    #[test]
    fn robust_path_matches_erlang_for_repeated_rates() {
        let value = hypoexp_cdf_robust(&[1.0, 1.0], 1.0).unwrap();
        let oracle = erlang_cdf(2, 1.0, 1.0);
        assert!((value - oracle).abs() < 1e-12);
        assert!((value - 0.2642411).abs() < 1e-7);
        // deep-tail values carry an absolute ~1e-16 floor from the final
        // 1 - survival subtraction, in both routes; relative 1e-9 applies
        // above that floor
        for stages in [1usize, 3, 5, 8] {
            for rate in [0.3, 1.0, 17.0] {
                for x in [0.05, 0.8, 3.0] {
                    let v = hypoexp_cdf_robust(&vec![rate; stages], x / rate).unwrap();
                    let o = erlang_cdf(stages, rate, x / rate);
                    assert!(
                        (v - o).abs() <= (1e-9 * o).max(1e-14),
                        "stages={stages} rate={rate} x={x}: {v} vs {o}"
                    );
                }
            }
        }
    }

    #[test]
    fn robust_and_distinct_paths_agree() {
        let value_d = hypoexp_cdf_distinct(&[1.0, 2.0], 1.0).unwrap();
        let value_r = hypoexp_cdf_robust(&[1.0, 2.0], 1.0).unwrap();
        assert!((value_d - value_r).abs() < 1e-12);

        let mut rng = SmallRng::new(99);
        for _ in 0..300 {
            let t = 1 + rng.below(8);
            let rates: Vec<f64> = (0..t).map(|_| rng.log_range(1e-2, 1e2)).collect();
            if min_relative_gap(&rates) < 1e-4 {
                continue;
            }
            // evaluate near the bulk of the distribution so the CDF is well scaled
            let mean: f64 = rates.iter().map(|r| 1.0 / r).sum();
            let x = mean * rng.range(0.3, 1.5);
            let d = hypoexp_cdf_distinct(&rates, x).unwrap();
            let r = hypoexp_cdf_robust(&rates, x).unwrap();
            assert!(
                (d - r).abs() <= 1e-9 * d.max(r).max(1e-9),
                "rates {rates:?} x {x}: {d} vs {r}"
            );
        }
    }

    #[test]
    fn cdf_is_monotone_and_saturates() {
        let rates = [0.5, 2.0, 7.0];
        let mut prev = 0.0;
        for i in 0..60 {
            let x = i as f64 * 0.25;
            let v = hypoexp_cdf_distinct(&rates, x).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        let far = 100.0 / rates.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hypoexp_cdf_distinct(&rates, far).unwrap() >= 1.0 - 1e-6);
        assert_eq!(hypoexp_cdf_robust(&rates, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cdf_is_permutation_invariant() {
        let a = hypoexp_cdf_distinct(&[0.4, 1.7, 6.0], 1.3).unwrap();
        let b = hypoexp_cdf_distinct(&[6.0, 0.4, 1.7], 1.3).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn appending_a_slot_never_increases_outage() {
        let mut rng = SmallRng::new(5);
        for _ in 0..200 {
            let t = 1 + rng.below(6);
            let mut rates: Vec<f64> = (0..t).map(|_| rng.log_range(1e-2, 1e2)).collect();
            let x = rng.log_range(1e-2, 1e2);
            let before = hypoexp_cdf_robust(&rates, x).unwrap();
            rates.push(rng.log_range(1e-2, 1e2));
            let after = hypoexp_cdf_robust(&rates, x).unwrap();
            assert!(after <= before + 1e-11, "{after} > {before}");
        }
    }

    #[test]
    fn rates_from_schedule_reflects_gains() {
        let p = SystemParams::default();
        let h = target_channel(&p).unwrap();
        let s = SelectionSchedule::one_hot(&[0, 3, 7, 12], p.num_positions);
        let rv = rates_from_schedule(&s, &h, &p).unwrap();
        assert_eq!(rv.len(), 4);
        assert!(!rv.has_near_duplicates());

        // doubling Omega halves every rate
        let mut p2 = p.clone();
        p2.rcs_mean = 2.0;
        let rv2 = rates_from_schedule(&s, &h, &p2).unwrap();
        for (a, b) in rv.rates().iter().zip(rv2.rates()) {
            assert!((a / b - 2.0).abs() < 1e-12);
        }

        // fixed-position schedule has identical rates -> duplicate flag
        let fixed = SelectionSchedule::one_hot(&[5, 5, 5, 5], p.num_positions);
        let rv3 = rates_from_schedule(&fixed, &h, &p).unwrap();
        assert!(rv3.has_near_duplicates());
    }

    #[test]
    fn mc_matches_exponential_median() {
        let mut p = SystemParams::default();
        p.num_slots = 1;
        p.snr_threshold = std::f64::consts::LN_2;
        // engineer psi = 1: set the gain constant aside and use a unit channel
        let h = ChannelVector {
            gains: vec![num_complex::Complex64::new(1.0, 0.0); p.num_positions],
            kind: crate::channel::ChannelKind::Target,
        };
        let c = channel::sensing_gain_constant(&p).unwrap();
        p.transmit_power /= c; // now c_psi == 1 for the unit channel
        let s = SelectionSchedule::one_hot(&[0], p.num_positions);
        let psi = channel::schedule_sensing_gains(&s, &h, &p).unwrap();
        assert!((psi[0] - 1.0).abs() < 1e-9);
        let (est, err) = mc_outage(&s, &h, &p, 1_000_000, 7, RcsModel::Iid).unwrap();
        assert!((est - 0.5).abs() <= 3.0 * err, "{est} vs 0.5 ± {err}");
    }

    #[test]
    fn mc_matches_two_rate_closed_form() {
        // gains (1, 0.5) with unit RCS mean give rates (1, 2); threshold 1
        let mut p = SystemParams::default();
        p.num_positions = 2;
        p.num_slots = 2;
        p.pa_positions = vec![crate::scenario::Vec3::new(0.0, 0.0, 3.0),
                              crate::scenario::Vec3::new(10.0, 0.0, 3.0)];
        p.snr_threshold = 1.0;
        let h = ChannelVector {
            gains: vec![
                num_complex::Complex64::new(1.0, 0.0),
                num_complex::Complex64::new(0.5f64.sqrt(), 0.0),
            ],
            kind: crate::channel::ChannelKind::Target,
        };
        let c = channel::sensing_gain_constant(&p).unwrap();
        p.transmit_power /= c;
        let s = SelectionSchedule::one_hot(&[0, 1], 2);
        let rates = rates_from_schedule(&s, &h, &p).unwrap();
        assert!((rates.rates()[0] - 1.0).abs() < 1e-9);
        assert!((rates.rates()[1] - 2.0).abs() < 1e-9);
        let (est, err) = mc_outage(&s, &h, &p, 1_000_000, 11, RcsModel::Iid).unwrap();
        let exact = hypoexp_cdf_distinct(&[1.0, 2.0], 1.0).unwrap();
        assert!((est - exact).abs() <= 3.0 * err, "{est} vs {exact} ± {err}");
        assert!((est - 0.39958).abs() < 3.0 * err + 1e-5);
    }

    #[test]
    fn mc_agrees_with_closed_form_within_normal_interval() {
        let p = SystemParams::default();
        let h = target_channel(&p).unwrap();
        let mut rng = SmallRng::new(2024);
        let trials = 200;
        let mut covered = 0;
        for trial in 0..trials {
            let mut pt = p.clone();
            pt.transmit_power = crate::scenario::dbm_to_watts(rng.range(5.0, 18.0));
            let picks = rng.sample_indices(p.num_positions, 4);
            let s = SelectionSchedule::one_hot(&picks, p.num_positions);
            let rates = rates_from_schedule(&s, &h, &pt).unwrap();
            let exact = hypoexp_cdf(rates.rates(), pt.snr_threshold).unwrap().value;
            let (est, err) = mc_outage(&s, &h, &pt, 100_000, trial as u64, RcsModel::Iid).unwrap();
            if (est - exact).abs() <= (3.29 * err).max(1e-4) {
                covered += 1;
            }
        }
        assert!(covered >= 198, "coverage {covered}/200");
    }

    #[test]
    fn mc_zero_threshold_has_zero_outage() {
        let mut p = SystemParams::default();
        p.snr_threshold = 0.0;
        let h = target_channel(&p).unwrap();
        let s = SelectionSchedule::one_hot(&[0, 1, 2, 3], p.num_positions);
        let (est, _) = mc_outage(&s, &h, &p, 10_000, 1, RcsModel::Iid).unwrap();
        assert_eq!(est, 0.0);
    }

    #[test]
    fn mc_is_partition_independent() {
        // the counter-based draws make chunked accumulation identical to one pass
        let p = SystemParams::default();
        let h = target_channel(&p).unwrap();
        let s = SelectionSchedule::one_hot(&[2, 9, 14, 19], p.num_positions);
        let mut pt = p.clone();
        pt.transmit_power = crate::scenario::dbm_to_watts(10.0);
        let (full, _) = mc_outage(&s, &h, &pt, 40_000, 3, RcsModel::Iid).unwrap();
        // manual two-chunk recomputation over the same counters
        let gains = channel::schedule_sensing_gains(&s, &h, &pt).unwrap();
        let mut hits = 0u64;
        for chunk in [(0u64, 25_000u64), (25_000u64, 40_000u64)] {
            for i in chunk.0..chunk.1 {
                let total: f64 = gains
                    .iter()
                    .enumerate()
                    .map(|(t, &psi)| psi * rng::exp_sample(3, t as u64, i, pt.rcs_mean))
                    .sum();
                if total < pt.snr_threshold {
                    hits += 1;
                }
            }
        }
        assert_eq!(full, hits as f64 / 40_000.0);
    }

    #[test]
    fn chernoff_lower_values() {
        assert_eq!(chernoff_log_lower(0.0, &[1.0, 2.0], 1.0, 5.0), 0.0);
        // single slot psi*Omega = 1, threshold 0.5, s = 1:
        // 0.5 - ln 2, bound e^{0.5}/2 >= exact 1 - e^{-0.5}
        let log_bound = chernoff_log_lower(1.0, &[1.0], 1.0, 0.5);
        assert!((log_bound - (0.5 - 2.0f64.ln())).abs() < 1e-14);
        let exact = 1.0 - (-0.5f64).exp();
        assert!(log_bound.exp() >= exact);
        assert!((log_bound.exp() - 0.82436).abs() < 1e-5);
    }

    #[test]
    fn chernoff_paper_form_and_substitution_identity() {
        assert_eq!(chernoff_log_paper(0.0, &[1.0, 2.0], 1.0, 5.0).unwrap(), 0.0);
        let gains = [0.7f64, 2.2, 0.1];
        for s in [0.01f64, 0.1, 0.3] {
            // replacing s by -s in the upper-tail form gives the lower-tail form
            let paper_at_neg = -(-s) * 5.0
                - gains
                    .iter()
                    .map(|&p| (1.0 - (-s) * p).ln())
                    .sum::<f64>();
            let lower = chernoff_log_lower(s, &gains, 1.0, 5.0);
            assert!((paper_at_neg - lower).abs() < 1e-12);
        }
        // domain violation is an error
        assert!(matches!(
            chernoff_log_paper(1.0, &[1.5], 1.0, 5.0),
            Err(OutageError::MgfDomain { .. })
        ));
        // divergence toward the singularity
        let near = chernoff_log_paper(0.999999 / 2.2, &gains, 1.0, 5.0).unwrap();
        let nearer = chernoff_log_paper(0.999999999 / 2.2, &gains, 1.0, 5.0).unwrap();
        assert!(nearer > near);
    }

    #[test]
    fn optimize_s_corrected_stationarity() {
        // mean below threshold -> s* = 0, bound 1
        let (s, log_bound) = optimize_s(&[1.0, 2.0], 1.0, 10.0, SurrogateMode::Corrected);
        assert_eq!(s, 0.0);
        assert_eq!(log_bound, 0.0);

        // single slot psiOmega = 1, Gth = 0.5: stationarity 0.5 = 1/(1+s) -> s* = 1
        let (s, _) = optimize_s(&[1.0], 1.0, 0.5, SurrogateMode::Corrected);
        assert!((s - 1.0).abs() < 1e-9);

        let mut rng = SmallRng::new(31);
        for _ in 0..200 {
            let t = 1 + rng.below(8);
            let gains: Vec<f64> = (0..t).map(|_| rng.log_range(1e-3, 1e3)).collect();
            let threshold = rng.log_range(1e-2, 1e2);
            let (s, _) = optimize_s(&gains, 1.0, threshold, SurrogateMode::Corrected);
            if s > 0.0 {
                let residual = threshold
                    - gains.iter().map(|&p| p / (1.0 + s * p)).sum::<f64>();
                assert!(residual.abs() <= 1e-8, "residual {residual}");
            } else {
                assert!(threshold >= gains.iter().sum::<f64>() - 1e-9);
            }
        }
    }

    #[test]
    fn corrected_bound_dominates_exact_cdf() {
        let mut rng = SmallRng::new(77);
        for _ in 0..300 {
            let t = 1 + rng.below(8);
            let gains: Vec<f64> = (0..t).map(|_| rng.log_range(1e-3, 1e3)).collect();
            let threshold = rng.log_range(1e-2, 1e2);
            let rates: Vec<f64> = gains.iter().map(|&p| 1.0 / p).collect();
            let exact = hypoexp_cdf_robust(&rates, threshold).unwrap();
            for _ in 0..10 {
                let s = rng.log_range(1e-4, 1e4);
                let log_bound = chernoff_log_lower(s, &gains, 1.0, threshold);
                let bound = if log_bound >= 0.0 { 1.0 } else { log_bound.exp() };
                assert!(
                    bound >= exact - 1e-9,
                    "bound {bound} < exact {exact} at s={s}"
                );
            }
            let (_, best_log) = optimize_s(&gains, 1.0, threshold, SurrogateMode::Corrected);
            assert!(best_log.exp().min(1.0) >= exact - 1e-9);
        }
    }

    #[test]
    fn outage_report_fields_are_consistent() {
        let p = SystemParams::default();
        let h = target_channel(&p).unwrap();
        let mut pt = p.clone();
        pt.transmit_power = crate::scenario::dbm_to_watts(12.0);
        let s = SelectionSchedule::one_hot(&[0, 1, 2, 3], p.num_positions);
        let report = outage_report(
            &s,
            &h,
            &pt,
            SurrogateMode::Corrected,
            RcsModel::Iid,
            Some(McSettings { samples: 50_000, seed: 5 }),
        )
        .unwrap();
        assert!((0.0..=1.0).contains(&report.exact_cdf));
        assert!((0.0..=1.0).contains(&report.chernoff_bound));
        assert!(report.chernoff_bound >= report.exact_cdf - 1e-9);
        let est = report.mc_estimate.unwrap();
        let err = report.mc_stderr.unwrap();
        assert!((est - report.exact_cdf).abs() <= (3.29 * err).max(1e-4) * 2.0);
        assert!(!report.used_robust_path);

        // correlated model: exponential closed form
        let fixed = SelectionSchedule::one_hot(&[4, 4, 4, 4], p.num_positions);
        let rep = outage_report(
            &fixed,
            &h,
            &pt,
            SurrogateMode::Corrected,
            RcsModel::Correlated,
            None,
        )
        .unwrap();
        let gains = channel::schedule_sensing_gains(&fixed, &h, &pt).unwrap();
        let expected = 1.0 - (-pt.snr_threshold / (gains.iter().sum::<f64>() * pt.rcs_mean)).exp();
        assert!((rep.exact_cdf - expected).abs() < 1e-12);
    }
}

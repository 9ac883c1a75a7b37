//! Reference schemes and an exhaustive-enumeration oracle.
//!
//! Baseline 1 keeps one PA position for all slots (no look-angle change, so
//! echo powers are fully correlated by default). Baseline 2 replaces the
//! waveguide by a conventional half-wavelength ULA at the center of the
//! deployment axis and selects one element per slot. The oracle enumerates
//! all position subsets on instances small enough for that to be exact.

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{self, ChannelKind, ChannelVector};
use crate::outage::{self, RcsModel};
use crate::scenario::{SelectionSchedule, SystemParams, Vec3};
use crate::sca::{self, OptimizationResult, ScaConfig, ScaError};

/// Largest subset count the oracle will enumerate.
pub const ORACLE_GUARD: u128 = 200_000;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Sca(#[from] ScaError),
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error(transparent)]
    Outage(#[from] outage::OutageError),
    #[error("oracle instance too large: C({m},{t}) = {count} subsets exceeds {guard}; reduce M or T")]
    OracleTooLarge { m: usize, t: usize, count: u128, guard: u128 },
}

/// Which reference scheme a [`BaselineSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    FixedPa,
    AntennaSelection,
}

/// Configuration of a reference scheme.
#[derive(Debug, Clone)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    pub rcs_model: RcsModel,
    /// Center of the selection ULA (antenna-selection baseline only); when
    /// `None` the array sits halfway along the deployment axis at PA height.
    pub ula_center: Option<Vec3>,
}

impl BaselineSpec {
    pub fn fixed_pa(rcs_model: RcsModel) -> Self {
        Self {
            kind: BaselineKind::FixedPa,
            rcs_model,
            ula_center: None,
        }
    }

    pub fn antenna_selection(rcs_model: RcsModel) -> Self {
        Self {
            kind: BaselineKind::AntennaSelection,
            rcs_model,
            ula_center: None,
        }
    }

    pub fn resolved_ula_center(&self, params: &SystemParams) -> Vec3 {
        self.ula_center.unwrap_or(Vec3::new(
            0.5 * params.waveguide_length,
            0.0,
            params.pa_height,
        ))
    }
}

fn one_hot_rate(position: usize, h_user: &ChannelVector, params: &SystemParams) -> f64 {
    let mut row = vec![0.0; params.num_positions];
    row[position] = 1.0;
    channel::slot_rate(&row, h_user, params)
}

fn one_hot_gain(
    position: usize,
    h_target: &ChannelVector,
    params: &SystemParams,
) -> Result<f64, BaselineError> {
    let mut row = vec![0.0; params.num_positions];
    row[position] = 1.0;
    Ok(channel::sensing_gain(&row, h_target, params)?)
}

/// Outage of `T` slots on one position under the given echo model.
fn repeated_position_outage(
    gain: f64,
    params: &SystemParams,
    model: RcsModel,
) -> Result<f64, BaselineError> {
    let t = params.num_slots as f64;
    match model {
        // one shared draw scaled by T identical gains
        RcsModel::Correlated => {
            Ok(-(-params.snr_threshold / (t * gain * params.rcs_mean)).exp_m1())
        }
        // Erlang special case of the hypoexponential law
        RcsModel::Iid => {
            let rate = 1.0 / (gain * params.rcs_mean);
            Ok(outage::hypoexp_cdf_robust(
                &vec![rate; params.num_slots],
                params.snr_threshold,
            )?)
        }
    }
}

/// Baseline 1: the best single PA position repeated over all slots. The
/// search is exhaustive over the M candidates; positions failing the
/// accumulated-rate requirement are excluded, and if none qualifies the
/// highest-rate position is returned flagged infeasible.
pub fn fixed_pa_baseline(
    params: &SystemParams,
    _cfg: &ScaConfig,
    rcs_model: RcsModel,
) -> Result<OptimizationResult, BaselineError> {
    let h_user = channel::user_channel(params)?;
    let h_target = channel::target_channel(params)?;
    let t = params.num_slots;

    let mut best: Option<(usize, f64)> = None;
    let mut best_rate: Option<(usize, f64)> = None;
    for m in 0..params.num_positions {
        let rate = t as f64 * one_hot_rate(m, &h_user, params);
        if best_rate.map_or(true, |(_, r)| rate > r) {
            best_rate = Some((m, rate));
        }
        if rate < params.min_rate - 1e-9 {
            continue;
        }
        let gain = one_hot_gain(m, &h_target, params)?;
        let outage = repeated_position_outage(gain, params, rcs_model)?;
        if best.map_or(true, |(_, o)| outage < o) {
            best = Some((m, outage));
        }
    }

    let (position, exact_outage, feasible) = match best {
        Some((m, o)) => (m, o, true),
        None => {
            let (m, _) = best_rate.expect("at least one candidate position");
            let gain = one_hot_gain(m, &h_target, params)?;
            (m, repeated_position_outage(gain, params, rcs_model)?, false)
        }
    };

    let schedule = SelectionSchedule::one_hot(&vec![position; t], params.num_positions);
    let achieved_rate = t as f64 * one_hot_rate(position, &h_user, params);
    Ok(OptimizationResult {
        relaxed_schedule: schedule.clone(),
        schedule,
        s_star: 0.0,
        surrogate_trace: Vec::new(),
        exact_outage,
        achieved_rate,
        feasible: feasible && achieved_rate >= params.min_rate - 1e-9,
        iterations: 0,
    })
}

/// Free-space channels of the conventional selection array: `M` elements at
/// half-wavelength spacing centered on the deployment axis, no waveguide
/// attenuation or guided phase, path loss `eta / r` toward both endpoints.
pub fn antenna_selection_channels(
    params: &SystemParams,
    spec: &BaselineSpec,
) -> (ChannelVector, ChannelVector) {
    let center = spec.resolved_ula_center(params);
    let half_wavelength = 0.5 * params.wavelength();
    let m_count = params.num_positions;
    let mid = m_count.div_ceil(2) as f64;
    let elements: Vec<Vec3> = (1..=m_count)
        .map(|m| Vec3::new(center.x + (m as f64 - mid) * half_wavelength, center.y, center.z))
        .collect();
    let k_free = 2.0 * std::f64::consts::PI / params.wavelength();
    let eta = params.eta();
    let build = |endpoint: &Vec3, kind: ChannelKind| ChannelVector {
        gains: elements
            .iter()
            .map(|e| {
                let r = endpoint.distance(e);
                Complex64::from_polar(eta / r, -k_free * r)
            })
            .collect(),
        kind,
    };
    (
        build(&params.user_pos, ChannelKind::User),
        build(&params.target_pos, ChannelKind::Target),
    )
}

/// Baseline 2: antenna selection over the fixed ULA, one element per slot,
/// driven by the same optimizer machinery as the proposed scheme.
pub fn antenna_selection_baseline(
    params: &SystemParams,
    cfg: &ScaConfig,
    seed: u64,
    rcs_model: RcsModel,
) -> Result<OptimizationResult, BaselineError> {
    let spec = BaselineSpec::antenna_selection(rcs_model);
    let (h_user, h_target) = antenna_selection_channels(params, &spec);
    let mut result = sca::optimize_with_channels(params, cfg, seed, &h_user, &h_target)?;
    if rcs_model == RcsModel::Correlated {
        let gains = channel::schedule_sensing_gains(&result.schedule, &h_target, params)?;
        let gain_sum: f64 = gains.iter().sum();
        result.exact_outage =
            -(-params.snr_threshold / (gain_sum * params.rcs_mean)).exp_m1();
    }
    Ok(result)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out * (n - i) as u128 / (i + 1) as u128;
        if out > ORACLE_GUARD * 1000 {
            return out; // far past the guard; exact value no longer matters
        }
    }
    out
}

/// Advances to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exhaustive oracle: enumerates all `T`-subsets of positions (slot order is
/// irrelevant by permutation invariance of both the outage and the rate),
/// keeps those meeting the rate requirement, and returns the subset with the
/// smallest exact outage. Ties resolve to the lexicographically smallest
/// subset.
pub fn exhaustive_oracle(params: &SystemParams) -> Result<OptimizationResult, BaselineError> {
    let m_count = params.num_positions;
    let t_count = params.num_slots;
    let count = binomial(m_count, t_count);
    if count > ORACLE_GUARD {
        return Err(BaselineError::OracleTooLarge {
            m: m_count,
            t: t_count,
            count,
            guard: ORACLE_GUARD,
        });
    }

    let h_user = channel::user_channel(params)?;
    let h_target = channel::target_channel(params)?;
    let rates_per_pos: Vec<f64> =
        (0..m_count).map(|m| one_hot_rate(m, &h_user, params)).collect();
    let mut gains_per_pos = Vec::with_capacity(m_count);
    for m in 0..m_count {
        gains_per_pos.push(one_hot_gain(m, &h_target, params)?);
    }

    let mut subset: Vec<usize> = (0..t_count).collect();
    let mut best: Option<(f64, Vec<usize>, f64)> = None;
    let mut best_rate: Option<(f64, Vec<usize>)> = None;
    loop {
        let rate_sum: f64 = subset.iter().map(|&m| rates_per_pos[m]).sum();
        if best_rate.as_ref().map_or(true, |(r, _)| rate_sum > *r) {
            best_rate = Some((rate_sum, subset.clone()));
        }
        if rate_sum >= params.min_rate - 1e-9 {
            let rates: Vec<f64> = subset
                .iter()
                .map(|&m| 1.0 / (gains_per_pos[m] * params.rcs_mean))
                .collect();
            let outage = outage::hypoexp_cdf(&rates, params.snr_threshold)?.value;
            if best.as_ref().map_or(true, |(o, _, _)| outage < *o) {
                best = Some((outage, subset.clone(), rate_sum));
            }
        }
        if !next_combination(&mut subset, m_count) {
            break;
        }
    }

    let (exact_outage, chosen, achieved_rate, feasible) = match best {
        Some((o, s, r)) => (o, s, r, true),
        None => {
            let (r, s) = best_rate.expect("at least one subset");
            let rates: Vec<f64> = s
                .iter()
                .map(|&m| 1.0 / (gains_per_pos[m] * params.rcs_mean))
                .collect();
            let o = outage::hypoexp_cdf(&rates, params.snr_threshold)?.value;
            (o, s, r, false)
        }
    };

    let schedule = SelectionSchedule::one_hot(&chosen, m_count);
    Ok(OptimizationResult {
        relaxed_schedule: schedule.clone(),
        schedule,
        s_star: 0.0,
        surrogate_trace: Vec::new(),
        exact_outage,
        achieved_rate,
        feasible,
        iterations: 0,
    })
}

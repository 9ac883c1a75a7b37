//! Deterministic channel gains and per-slot metrics.
//!
//! Each candidate PA position has a composite complex gain combining the
//! in-waveguide segment (attenuation `e^{-alpha w}` plus guided phase) and
//! the free-space segment (spherical spreading plus carrier phase). The
//! communication SNR and the radar gain factor are quadratic forms of the
//! activation weights in these gains.

use num_complex::Complex64;
use thiserror::Error;

use crate::scenario::{SystemParams, Vec3};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("{kind} endpoint coincides with PA position {index}")]
    CoincidentPosition { kind: &'static str, index: usize },
    #[error("target coincides with the receive array")]
    TargetAtReceiver,
}

/// Which link a composite channel vector describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    User,
    Target,
}

/// Length-`M` vector of composite gains, one per candidate PA position.
#[derive(Debug, Clone)]
pub struct ChannelVector {
    pub gains: Vec<Complex64>,
    pub kind: ChannelKind,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// Effective scalar gain `h^H b` for one slot's weight row.
    pub fn inner(&self, weights: &[f64]) -> Complex64 {
        debug_assert_eq!(weights.len(), self.gains.len());
        self.gains
            .iter()
            .zip(weights)
            .map(|(g, &w)| g.conj() * w)
            .sum()
    }
}

fn composite_gains(
    params: &SystemParams,
    endpoint: &Vec3,
    endpoint_name: &'static str,
    numerator_scale: f64,
) -> Result<Vec<Complex64>, ChannelError> {
    let k_free = 2.0 * std::f64::consts::PI / params.wavelength();
    let k_guided = 2.0 * std::f64::consts::PI / params.guided_wavelength();
    let alpha = params.waveguide_attenuation;
    params
        .pa_positions
        .iter()
        .enumerate()
        .map(|(m, pa)| {
            let free_dist = endpoint.distance(pa);
            if free_dist == 0.0 {
                return Err(ChannelError::CoincidentPosition {
                    kind: endpoint_name,
                    index: m,
                });
            }
            let guide_dist = params.feed_pos.distance(pa);
            let magnitude = numerator_scale * (-alpha * guide_dist).exp() / free_dist;
            let phase = -k_free * free_dist - k_guided * guide_dist;
            Ok(Complex64::from_polar(magnitude, phase))
        })
        .collect()
}

/// Composite channel from the feed through each PA position to the user.
pub fn user_channel(params: &SystemParams) -> Result<ChannelVector, ChannelError> {
    Ok(ChannelVector {
        gains: composite_gains(params, &params.user_pos, "user", params.eta())?,
        kind: ChannelKind::User,
    })
}

/// Composite channel from the feed through each PA position to the target.
/// The free-space numerator carries no path-loss constant; the echo model
/// applies its own reference-distance factor separately.
pub fn target_channel(params: &SystemParams) -> Result<ChannelVector, ChannelError> {
    Ok(ChannelVector {
        gains: composite_gains(params, &params.target_pos, "target", 1.0)?,
        kind: ChannelKind::Target,
    })
}

/// Instantaneous communication SNR for one slot, `(p_t/sigma^2) |h^H b|^2`.
pub fn comm_snr(weights: &[f64], h_user: &ChannelVector, params: &SystemParams) -> f64 {
    params.transmit_power / params.noise_power * h_user.inner(weights).norm_sqr()
}

/// Spectral efficiency of one slot in bits/s/Hz.
pub fn comm_rate(snr: f64) -> f64 {
    (1.0 + snr).log2()
}

/// Convenience: per-slot rate directly from a weight row.
pub fn slot_rate(weights: &[f64], h_user: &ChannelVector, params: &SystemParams) -> f64 {
    comm_rate(comm_snr(weights, h_user, params))
}

/// Constant factor of the radar gain: `p_t beta_0^2 N_R / (sigma^2 d_er^2)`.
///
/// `beta_0` is the reference-distance path loss of the echo return leg, set
/// to the same free-space constant as the forward links.
pub fn sensing_gain_constant(params: &SystemParams) -> Result<f64, ChannelError> {
    let d_er = params.target_pos.distance(&params.rx_array_pos);
    if d_er == 0.0 {
        return Err(ChannelError::TargetAtReceiver);
    }
    let beta0 = params.eta();
    Ok(params.transmit_power * beta0 * beta0 * params.rx_antennas as f64
        / (params.noise_power * d_er * d_er))
}

/// Deterministic radar gain factor `psi` for one slot. The matched receive
/// beamformer contributes `||a_r||^2 = N_R` regardless of the look angle.
pub fn sensing_gain(
    weights: &[f64],
    h_target: &ChannelVector,
    params: &SystemParams,
) -> Result<f64, ChannelError> {
    Ok(sensing_gain_constant(params)? * h_target.inner(weights).norm_sqr())
}

/// Gain factors for every slot of a schedule.
pub fn schedule_sensing_gains(
    schedule: &crate::scenario::SelectionSchedule,
    h_target: &ChannelVector,
    params: &SystemParams,
) -> Result<Vec<f64>, ChannelError> {
    let c = sensing_gain_constant(params)?;
    Ok(schedule
        .rows()
        .map(|row| c * h_target.inner(row).norm_sqr())
        .collect())
}

/// Per-slot communication rates for a schedule.
pub fn schedule_rates(
    schedule: &crate::scenario::SelectionSchedule,
    h_user: &ChannelVector,
    params: &SystemParams,
) -> Vec<f64> {
    schedule
        .rows()
        .map(|row| slot_rate(row, h_user, params))
        .collect()
}

/// Exact gradient of the slot rate `log2(1 + gamma(b))` with respect to the
/// weight row: component `m` is `(2 kappa / ln 2) Re{(h^H b) h_m} / (1 + gamma)`
/// with `kappa = p_t / sigma^2`.
pub fn rate_gradient(weights: &[f64], h_user: &ChannelVector, params: &SystemParams) -> Vec<f64> {
    let kappa = params.transmit_power / params.noise_power;
    let inner = h_user.inner(weights);
    let gamma = kappa * inner.norm_sqr();
    let scale = 2.0 * kappa / (std::f64::consts::LN_2 * (1.0 + gamma));
    h_user.gains.iter().map(|h| scale * (inner * h).re).collect()
}

/// Half-wavelength ULA steering vector `[1, e^{j pi sin(theta)}, ...]`.
pub fn steering_vector(theta: f64, n_antennas: usize) -> Vec<Complex64> {
    (0..n_antennas)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 * theta.sin()))
        .collect()
}

/// Azimuth of the target as seen from the receive array (x-axis reference).
/// With the matched beamformer the radar gain does not depend on this angle;
/// it exists for the steering-vector construction.
pub fn target_azimuth(params: &SystemParams) -> f64 {
    let dx = params.target_pos.x - params.rx_array_pos.x;
    let dy = params.target_pos.y - params.rx_array_pos.y;
    dy.atan2(dx)
}

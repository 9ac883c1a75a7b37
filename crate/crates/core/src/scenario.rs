//! Physical scenario: geometry, system constants, and activation schedules.
//!
//! All quantities are stored in SI units with linear (not dB) scales; the
//! config front end accepts the usual dBm/dB conventions and converts on
//! load.

use thiserror::Error;

/// Feed-relative tolerance for schedule sum checks (row/column sums are
/// accumulated over up to `M` doubles).
pub const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schedule is {rows}x{cols} but params expect {expected_rows}x{expected_cols}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("config line {line}: expected `key = value`")]
    MalformedLine { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
}

/// A point in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Convert a dBm power to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Convert watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Convert a dB ratio to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Physical constants, geometry, and thresholds of the simulated scenario.
///
/// The default instance reproduces the reference indoor layout: a 10 m
/// waveguide at 3 m height with 20 uniformly spaced candidate positions, a
/// 30 GHz carrier, one communication user, and one radar target.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
    /// Propagation speed used for wavelength and path-loss constants, m/s.
    pub speed_of_light: f64,
    /// Effective refractive index of the waveguide (sets guided wavelength).
    pub effective_refractive_index: f64,
    /// Amplitude attenuation inside the waveguide, nepers per meter.
    pub waveguide_attenuation: f64,
    /// Length of the waveguide along the x-axis, meters.
    pub waveguide_length: f64,
    /// Height of the waveguide (and PAs) above the floor plane, meters.
    pub pa_height: f64,
    /// Number of preconfigured PA positions `M`.
    pub num_positions: usize,
    /// Number of time slots `T`.
    pub num_slots: usize,
    /// Receive array size `N_R`.
    pub rx_antennas: usize,
    /// Noise power in watts.
    pub noise_power: f64,
    /// Mean radar cross-section in m^2.
    pub rcs_mean: f64,
    /// Accumulated-SNR detection threshold, linear.
    pub snr_threshold: f64,
    /// Transmit power in watts.
    pub transmit_power: f64,
    /// Minimum accumulated communication rate, bits/s/Hz.
    pub min_rate: f64,
    pub user_pos: Vec3,
    pub target_pos: Vec3,
    /// Waveguide feed point.
    pub feed_pos: Vec3,
    /// Center of the fixed receive array collecting radar echoes.
    pub rx_array_pos: Vec3,
    /// Candidate PA positions along the waveguide.
    pub pa_positions: Vec<Vec3>,
}

impl SystemParams {
    /// Free-space path-loss constant `c / (4 pi f_c)`, meters.
    pub fn eta(&self) -> f64 {
        self.speed_of_light / (4.0 * std::f64::consts::PI * self.carrier_frequency)
    }

    /// Carrier wavelength, meters.
    pub fn wavelength(&self) -> f64 {
        self.speed_of_light / self.carrier_frequency
    }

    /// Guided wavelength inside the waveguide, meters.
    pub fn guided_wavelength(&self) -> f64 {
        self.wavelength() / self.effective_refractive_index
    }

    /// Uniform candidate grid `x_m = (m - 1) * D_x / (M - 1)` at the
    /// waveguide height. Endpoints included.
    pub fn uniform_pa_grid(length: f64, height: f64, count: usize) -> Vec<Vec3> {
        (0..count)
            .map(|m| Vec3::new(m as f64 * length / (count as f64 - 1.0), 0.0, height))
            .collect()
    }

    /// Checks every structural invariant; `Ok` iff the instance is usable.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |msg: String| Err(ScenarioError::InvalidParams(msg));
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return fail("carrier frequency must be positive".into());
        }
        if self.num_positions < 2 {
            return fail(format!("need at least 2 PA positions, got {}", self.num_positions));
        }
        if self.rx_antennas < 1 {
            return fail("need at least 1 receive antenna".into());
        }
        if self.num_slots == 0 || self.num_slots > self.num_positions {
            return fail(format!(
                "num_slots must satisfy 1 <= T <= M, got T={} M={}",
                self.num_slots, self.num_positions
            ));
        }
        for (name, v) in [
            ("noise_power", self.noise_power),
            ("rcs_mean", self.rcs_mean),
            ("snr_threshold", self.snr_threshold),
            ("transmit_power", self.transmit_power),
            ("effective_refractive_index", self.effective_refractive_index),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be strictly positive, got {v}"));
            }
        }
        if self.min_rate < 0.0 || !self.min_rate.is_finite() {
            return fail(format!("min_rate must be nonnegative, got {}", self.min_rate));
        }
        if self.waveguide_attenuation < 0.0 {
            return fail("waveguide attenuation must be nonnegative".into());
        }
        if self.pa_positions.len() != self.num_positions {
            return fail(format!(
                "expected {} PA positions, got {}",
                self.num_positions,
                self.pa_positions.len()
            ));
        }
        for (i, pos) in self.pa_positions.iter().enumerate() {
            if !pos.is_finite() {
                return fail(format!("PA position {i} is not finite"));
            }
            if pos.y != 0.0 || (pos.z - self.pa_height).abs() > 1e-12 {
                return fail(format!("PA position {i} is off the waveguide axis"));
            }
            if pos.x < -1e-12 || pos.x > self.waveguide_length + 1e-12 {
                return fail(format!("PA position {i} lies outside [0, waveguide_length]"));
            }
        }
        for w in self.pa_positions.windows(2) {
            if w[1].x <= w[0].x {
                return fail("PA grid x-coordinates must be strictly increasing".into());
            }
        }
        for (name, v) in [
            ("user_pos", self.user_pos),
            ("target_pos", self.target_pos),
            ("feed_pos", self.feed_pos),
            ("rx_array_pos", self.rx_array_pos),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} is not finite"));
            }
        }
        Ok(())
    }

    /// Applies a single config key. Unknown keys are reported to the caller
    /// so the harness can route its own keys first.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<(), ScenarioError> {
        let bad = |reason: String| ScenarioError::BadValue {
            key: key.to_string(),
            reason,
        };
        let num = |v: &str| -> Result<f64, ScenarioError> {
            v.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("not a number: {e}")))
        };
        let int = |v: &str| -> Result<usize, ScenarioError> {
            v.trim()
                .parse::<usize>()
                .map_err(|e| bad(format!("not an integer: {e}")))
        };
        let xyz = |v: &str| -> Result<Vec3, ScenarioError> {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad("expected three comma-separated coordinates".into()));
            }
            let mut c = [0.0; 3];
            for (slot, p) in c.iter_mut().zip(&parts) {
                *slot = p
                    .parse::<f64>()
                    .map_err(|e| bad(format!("not a number: {e}")))?;
            }
            Ok(Vec3::new(c[0], c[1], c[2]))
        };
        match key {
            "fc_hz" => self.carrier_frequency = num(value)?,
            "n_eff" => self.effective_refractive_index = num(value)?,
            "alpha_np_per_m" => self.waveguide_attenuation = num(value)?,
            "waveguide_length_m" => self.waveguide_length = num(value)?,
            "pa_height_m" => self.pa_height = num(value)?,
            "num_positions" => self.num_positions = int(value)?,
            "num_slots" => self.num_slots = int(value)?,
            "nr_rx_antennas" => self.rx_antennas = int(value)?,
            "noise_dbm" => self.noise_power = dbm_to_watts(num(value)?),
            "rcs_mean_m2" => self.rcs_mean = num(value)?,
            "gamma_th_db" => self.snr_threshold = db_to_linear(num(value)?),
            "pt_dbm" => self.transmit_power = dbm_to_watts(num(value)?),
            "rmin_bps_hz" => self.min_rate = num(value)?,
            "user_xyz" => self.user_pos = xyz(value)?,
            "target_xyz" => self.target_pos = xyz(value)?,
            "feed_xyz" => self.feed_pos = xyz(value)?,
            "rx_array_xyz" => self.rx_array_pos = xyz(value)?,
            other => return Err(ScenarioError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Regenerates the uniform PA grid from the current length/height/count.
    /// Called after config application since those three keys shape the grid.
    pub fn rebuild_pa_grid(&mut self) {
        self.pa_positions =
            Self::uniform_pa_grid(self.waveguide_length, self.pa_height, self.num_positions);
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            carrier_frequency: 30e9,
            speed_of_light: 2.998e8,
            effective_refractive_index: 1.4,
            waveguide_attenuation: 0.18,
            waveguide_length: 10.0,
            pa_height: 3.0,
            num_positions: 20,
            num_slots: 4,
            rx_antennas: 8,
            noise_power: dbm_to_watts(-90.0),
            rcs_mean: 1.0,
            snr_threshold: db_to_linear(10.0),
            transmit_power: 1.0,
            min_rate: 0.5,
            user_pos: Vec3::new(2.0, 2.0, 0.0),
            target_pos: Vec3::new(6.0, -3.0, 0.0),
            feed_pos: Vec3::new(0.0, 0.0, 3.0),
            rx_array_pos: Vec3::new(0.0, 0.0, 3.0),
            pa_positions: Self::uniform_pa_grid(10.0, 3.0, 20),
        }
    }
}

/// Returns the default scenario parameters.
pub fn default_params() -> SystemParams {
    SystemParams::default()
}

/// Parses the flat `key = value` scenario config format. Lines starting with
/// `#` (or inline `#` tails) are comments; unspecified keys keep defaults.
pub fn parse_scenario_config(text: &str) -> Result<SystemParams, ScenarioError> {
    let mut params = SystemParams::default();
    for (key, value) in config_kv_lines(text)? {
        params.set_key(&key, &value)?;
    }
    params.rebuild_pa_grid();
    params.validate()?;
    Ok(params)
}

/// Splits config text into `(key, value)` pairs, stripping comments/blanks.
pub fn config_kv_lines(text: &str) -> Result<Vec<(String, String)>, ScenarioError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ScenarioError::MalformedLine { line: idx + 1 })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ScenarioError::MalformedLine { line: idx + 1 });
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Whether entries are expected to be exactly binary or merely in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    Relaxed,
    Binary,
}

/// A `T x M` matrix of activation weights `b_m(t)`.
///
/// Feasible schedules activate exactly one unit of weight per slot (row sums
/// one) and use each position at most once across slots (column sums at most
/// one); binary schedules additionally have {0,1} entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionSchedule {
    weights: Vec<f64>,
    num_slots: usize,
    num_positions: usize,
    pub mode: ScheduleMode,
}

/// One violated schedule constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleViolation {
    /// Row `slot` sums to `sum` instead of one.
    RowSum { slot: usize, sum: f64 },
    /// Column `position` is used more than once (sum `sum` > 1).
    ColumnReuse { position: usize, sum: f64 },
    /// Entry outside [0, 1].
    EntryOutOfRange { slot: usize, position: usize, value: f64 },
    /// Binary-mode entry that is not exactly 0 or 1.
    NotBinary { slot: usize, position: usize, value: f64 },
}

impl SelectionSchedule {
    pub fn from_weights(
        weights: Vec<f64>,
        num_slots: usize,
        num_positions: usize,
        mode: ScheduleMode,
    ) -> Self {
        assert_eq!(weights.len(), num_slots * num_positions);
        Self {
            weights,
            num_slots,
            num_positions,
            mode,
        }
    }

    /// Uniform relaxed schedule `b_m(t) = 1/M`.
    pub fn uniform(num_slots: usize, num_positions: usize) -> Self {
        Self::from_weights(
            vec![1.0 / num_positions as f64; num_slots * num_positions],
            num_slots,
            num_positions,
            ScheduleMode::Relaxed,
        )
    }

    /// Binary schedule activating `positions[t]` in slot `t`.
    pub fn one_hot(positions: &[usize], num_positions: usize) -> Self {
        let num_slots = positions.len();
        let mut weights = vec![0.0; num_slots * num_positions];
        for (t, &m) in positions.iter().enumerate() {
            assert!(m < num_positions);
            weights[t * num_positions + m] = 1.0;
        }
        Self::from_weights(weights, num_slots, num_positions, ScheduleMode::Binary)
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn num_positions(&self) -> usize {
        self.num_positions
    }

    pub fn entry(&self, slot: usize, position: usize) -> f64 {
        self.weights[slot * self.num_positions + position]
    }

    pub fn row(&self, slot: usize) -> &[f64] {
        &self.weights[slot * self.num_positions..(slot + 1) * self.num_positions]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks(self.num_positions)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// For a binary schedule, the activated position index per slot.
    pub fn selected_positions(&self) -> Vec<usize> {
        self.rows()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(m, _)| m)
                    .unwrap()
            })
            .collect()
    }

    /// Frobenius norm of the entrywise difference.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// True when every entry is within `tol` of 0 or 1.
    pub fn is_binary_within(&self, tol: f64) -> bool {
        self.weights.iter().all(|&w| w.abs().min((1.0 - w).abs()) <= tol)
    }

    fn violations(&self, check_column_reuse: bool) -> Vec<ScheduleViolation> {
        let mut out = Vec::new();
        for t in 0..self.num_slots {
            let row = self.row(t);
            for (m, &w) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&w) || !w.is_finite() {
                    out.push(ScheduleViolation::EntryOutOfRange {
                        slot: t,
                        position: m,
                        value: w,
                    });
                }
                if self.mode == ScheduleMode::Binary && w != 0.0 && w != 1.0 {
                    out.push(ScheduleViolation::NotBinary {
                        slot: t,
                        position: m,
                        value: w,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOL {
                out.push(ScheduleViolation::RowSum { slot: t, sum });
            }
        }
        if check_column_reuse {
            for m in 0..self.num_positions {
                let sum: f64 = (0..self.num_slots).map(|t| self.entry(t, m)).sum();
                if sum > 1.0 + SUM_TOL {
                    out.push(ScheduleViolation::ColumnReuse { position: m, sum });
                }
            }
        }
        out
    }
}

/// Checks a schedule against the full constraint set; the returned list is
/// empty iff the schedule is feasible. Dimensions must match the params.
pub fn validate_schedule(
    schedule: &SelectionSchedule,
    params: &SystemParams,
) -> Result<Vec<ScheduleViolation>, ScenarioError> {
    if schedule.num_slots != params.num_slots || schedule.num_positions != params.num_positions {
        return Err(ScenarioError::DimensionMismatch {
            rows: schedule.num_slots,
            cols: schedule.num_positions,
            expected_rows: params.num_slots,
            expected_cols: params.num_positions,
        });
    }
    Ok(schedule.violations(true))
}

/// Like [`validate_schedule`] but allows a position to be reused across
/// slots. The fixed-position reference scheme reuses one position by design,
/// which is exactly what the reuse constraint forbids for the optimized
/// scheme.
pub fn validate_schedule_allowing_reuse(
    schedule: &SelectionSchedule,
    params: &SystemParams,
) -> Result<Vec<ScheduleViolation>, ScenarioError> {
    if schedule.num_slots != params.num_slots || schedule.num_positions != params.num_positions {
        return Err(ScenarioError::DimensionMismatch {
            rows: schedule.num_slots,
            cols: schedule.num_positions,
            expected_rows: params.num_slots,
            expected_cols: params.num_positions,
        });
    }
    Ok(schedule.violations(false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-24);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((watts_to_dbm(1.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn default_params_match_reference_table() {
        let p = SystemParams::default();
        assert_eq!(p.num_positions, 20);
        assert_eq!(p.rx_antennas, 8);
        assert!((p.noise_power - 1e-12).abs() < 1e-24);
        assert!((p.snr_threshold - 10.0).abs() < 1e-12);
        assert!((p.rcs_mean - 1.0).abs() < 1e-15);
        assert!((p.carrier_frequency - 30e9).abs() < 1.0);
        assert!((p.waveguide_attenuation - 0.18).abs() < 1e-15);
        assert!((p.effective_refractive_index - 1.4).abs() < 1e-15);
        assert_eq!(p.user_pos, Vec3::new(2.0, 2.0, 0.0));
        assert_eq!(p.target_pos, Vec3::new(6.0, -3.0, 0.0));
        assert_eq!(p.feed_pos, Vec3::new(0.0, 0.0, 3.0));
        // eta = c / (4 pi f_c) with c = 2.998e8: about 7.9525e-4 m.
        let eta_expected = 2.998e8 / (4.0 * std::f64::consts::PI * 30e9);
        assert!((p.eta() - eta_expected).abs() < 1e-18);
        assert!((p.eta() - 7.9525e-4).abs() < 1e-7);
        p.validate().expect("defaults must be self-consistent");
    }

    #[test]
    fn pa_grid_is_strictly_increasing_with_endpoints() {
        let p = SystemParams::default();
        assert_eq!(p.pa_positions.len(), 20);
        assert!((p.pa_positions[0].x - 0.0).abs() < 1e-15);
        assert!((p.pa_positions[19].x - 10.0).abs() < 1e-12);
        for w in p.pa_positions.windows(2) {
            assert!(w[1].x > w[0].x);
            assert_eq!(w[0].y, 0.0);
            assert!((w[0].z - p.pa_height).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_like_binary_schedule_is_feasible() {
        let p = SystemParams::default();
        let s = SelectionSchedule::one_hot(&[0, 1, 2, 3], p.num_positions);
        assert!(validate_schedule(&s, &p).unwrap().is_empty());
    }

    #[test]
    fn uniform_relaxed_schedule_is_feasible() {
        let p = SystemParams::default();
        let s = SelectionSchedule::uniform(p.num_slots, p.num_positions);
        assert!(validate_schedule(&s, &p).unwrap().is_empty());
    }

    #[test]
    fn short_row_sum_is_reported() {
        let p = SystemParams::default();
        let mut s = SelectionSchedule::uniform(p.num_slots, p.num_positions);
        s.weights[0] -= 0.1; // first row now sums to 0.9
        let violations = validate_schedule(&s, &p).unwrap();
        assert!(violations
            .iter()
            .any(|v| matches!(v, ScheduleViolation::RowSum { slot: 0, .. })));
    }

    #[test]
    fn column_reuse_is_reported_only_in_strict_mode() {
        let p = SystemParams::default();
        let s = SelectionSchedule::one_hot(&[5, 5, 5, 5], p.num_positions);
        let strict = validate_schedule(&s, &p).unwrap();
        assert!(strict
            .iter()
            .any(|v| matches!(v, ScheduleViolation::ColumnReuse { position: 5, .. })));
        assert!(validate_schedule_allowing_reuse(&s, &p).unwrap().is_empty());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = SystemParams::default();
        let s = SelectionSchedule::uniform(3, 7);
        assert!(validate_schedule(&s, &p).is_err());
    }

    #[test]
    fn validator_is_a_pure_predicate() {
        let p = SystemParams::default();
        let s = SelectionSchedule::uniform(p.num_slots, p.num_positions);
        let a = validate_schedule(&s, &p).unwrap();
        let b = validate_schedule(&s, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_roundtrip_and_fallback() {
        let text = "\
# scenario override
fc_hz = 28e9
pt_dbm = 20
num_slots = 2
user_xyz = 1.0, 1.5, 0.0
";
        let p = parse_scenario_config(text).unwrap();
        assert!((p.carrier_frequency - 28e9).abs() < 1.0);
        assert!((p.transmit_power - 0.1).abs() < 1e-12);
        assert_eq!(p.num_slots, 2);
        assert_eq!(p.user_pos, Vec3::new(1.0, 1.5, 0.0));
        // untouched keys fall back to defaults
        assert_eq!(p.num_positions, 20);
    }

    #[test]
    fn config_errors_name_the_offending_key() {
        let err = parse_scenario_config("bogus_key = 1\n").unwrap_err();
        assert!(matches!(err, ScenarioError::UnknownKey(ref k) if k == "bogus_key"));
        let err = parse_scenario_config("pt_dbm = not_a_number\n").unwrap_err();
        assert!(matches!(err, ScenarioError::BadValue { ref key, .. } if key == "pt_dbm"));
    }

    #[test]
    fn config_rejects_infeasible_slot_count() {
        assert!(parse_scenario_config("num_slots = 25\n").is_err());
    }
}

//! Schedule optimization: majorize-minimize SCA on a Chernoff surrogate of
//! the radar outage, with penalty-driven binarization and a feasibility-
//! preserving rounding step.
//!
//! The relaxed problem minimizes the Chernoff exponent over the schedule
//! polytope (row sums one, column sums at most one, box bounds) subject to a
//! linearized accumulated-rate constraint. In corrected mode the quadratic
//! radar gain inside `-log(1 + s*Omega*psi(b))` is replaced by its tangent
//! minorant, which restores convexity and makes each subproblem a global
//! majorant of the true penalized bound; paper mode keeps the quadratic
//! inside `-log(1 - s*Omega*psi(b))`, which is convex as written, and scans a
//! fixed grid of `s` values. Subproblems are solved with a log-barrier
//! interior-point method. The linearized accumulated-rate constraint is
//! ordinarily hard; when it is infeasible from the current expansion point
//! an elastic slack with a large linear cost keeps the iteration moving, and
//! when it is certifiably unsatisfiable over the whole polytope it is left
//! to the exact-rate verdict and the rounding repair.

use thiserror::Error;

use crate::channel::{self, ChannelVector};
use crate::linalg::{lu_factor, Matrix};
use crate::outage::{self, SurrogateMode};
use crate::scenario::{self, ScheduleMode, SelectionSchedule, SystemParams};

/// Linear cost on the rate-constraint slack variable.
const ELASTIC_COST: f64 = 1e6;
/// Lower safeguard on the corrected-mode log arguments.
const LOG_ARG_FLOOR: f64 = 1e-9;
/// Margin keeping `s*psi*Omega` away from the MGF singularity (paper mode).
const MGF_MARGIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScaError {
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error(transparent)]
    Outage(#[from] outage::OutageError),
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),
    #[error("interior-point solve failed: {0}")]
    SolverFailure(&'static str),
    #[error("subproblem KKT residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    KktNotConverged { residual: f64, tol: f64 },
}

/// Tunable knobs of the optimizer.
#[derive(Debug, Clone)]
pub struct ScaConfig {
    /// Stop the inner loop when the schedule moves less than this (Frobenius).
    pub sca_tolerance: f64,
    pub max_sca_iters: usize,
    /// Initial penalty weight on the binarization term.
    pub penalty_init: f64,
    /// Geometric growth factor of the penalty across outer rounds.
    pub penalty_growth: f64,
    pub penalty_rounds: usize,
    /// Entries must be this close to {0,1} to count as binarized.
    pub binarization_tol: f64,
    pub subproblem_kkt_tol: f64,
    pub surrogate_mode: SurrogateMode,
    /// Number of grid points for the paper-mode line search over `s`.
    pub s_grid_size: usize,
}

impl Default for ScaConfig {
    fn default() -> Self {
        Self {
            sca_tolerance: 1e-4,
            max_sca_iters: 200,
            penalty_init: 1e-2,
            penalty_growth: 5.0,
            penalty_rounds: 10,
            binarization_tol: 1e-3,
            subproblem_kkt_tol: 1e-6,
            surrogate_mode: SurrogateMode::Corrected,
            s_grid_size: 64,
        }
    }
}

/// Outcome of a full optimization run.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// Rounded binary schedule.
    pub schedule: SelectionSchedule,
    /// Relaxed schedule before rounding.
    pub relaxed_schedule: SelectionSchedule,
    /// Chernoff parameter in effect at termination.
    pub s_star: f64,
    /// True penalized bound at each iterate of the final inner loop.
    pub surrogate_trace: Vec<f64>,
    /// Exact outage of the rounded schedule. The optimizer evaluates the
    /// i.i.d. echo model; reference schemes overwrite this with their own
    /// model's closed form.
    pub exact_outage: f64,
    /// Accumulated rate of the rounded schedule, bits/s/Hz.
    pub achieved_rate: f64,
    pub feasible: bool,
    /// Total subproblem solves across all rounds.
    pub iterations: usize,
}

/// Affine function of one slot's weight row: `value + gradient . (row - base)`.
#[derive(Debug, Clone)]
pub struct SlotAffine {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub base: Vec<f64>,
}

impl SlotAffine {
    pub fn eval(&self, row: &[f64]) -> f64 {
        self.value
            + self
                .gradient
                .iter()
                .zip(row.iter().zip(&self.base))
                .map(|(g, (w, b))| g * (w - b))
                .sum::<f64>()
    }

    /// Constant term when rewritten as `intercept + gradient . row`.
    pub fn intercept(&self) -> f64 {
        self.value
            - self
                .gradient
                .iter()
                .zip(&self.base)
                .map(|(g, b)| g * b)
                .sum::<f64>()
    }
}

/// First-order expansion of each slot rate around `b0`. Exact at `b0`.
pub fn linearize_rate(
    b0: &SelectionSchedule,
    h_user: &ChannelVector,
    params: &SystemParams,
) -> Vec<SlotAffine> {
    b0.rows()
        .map(|row| SlotAffine {
            value: channel::slot_rate(row, h_user, params),
            gradient: channel::rate_gradient(row, h_user, params),
            base: row.to_vec(),
        })
        .collect()
}

/// Tangent-plane minorant of the convex quadratic `|h^H b|^2` per slot:
/// `l_t(b) <= |h^H b|^2` everywhere, with equality at `b0`.
pub fn linearize_sensing_gain(
    b0: &SelectionSchedule,
    h_target: &ChannelVector,
) -> Vec<SlotAffine> {
    b0.rows()
        .map(|row| {
            let inner = h_target.inner(row);
            SlotAffine {
                value: inner.norm_sqr(),
                gradient: h_target.gains.iter().map(|h| 2.0 * (inner * h).re).collect(),
                base: row.to_vec(),
            }
        })
        .collect()
}

/// Binarization penalty `f(b) = sum b (1 - b)`; zero exactly on binary points.
pub fn penalty_value(schedule: &SelectionSchedule) -> f64 {
    schedule.as_slice().iter().map(|&w| w * (1.0 - w)).sum()
}

/// Affine majorant of the concave penalty, tangent at `b0`:
/// `f~(b) = f(b0) + sum (1 - 2 b0) (b - b0) >= f(b)`.
#[derive(Debug, Clone)]
pub struct PenaltyLinearization {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub base: Vec<f64>,
}

impl PenaltyLinearization {
    pub fn eval(&self, schedule: &SelectionSchedule) -> f64 {
        self.value
            + self
                .gradient
                .iter()
                .zip(schedule.as_slice().iter().zip(&self.base))
                .map(|(g, (w, b))| g * (w - b))
                .sum::<f64>()
    }
}

pub fn penalty_and_linearization(b0: &SelectionSchedule) -> (f64, PenaltyLinearization) {
    let value = penalty_value(b0);
    let lin = PenaltyLinearization {
        value,
        gradient: b0.as_slice().iter().map(|&w| 1.0 - 2.0 * w).collect(),
        base: b0.as_slice().to_vec(),
    };
    (value, lin)
}

/// True penalized Chernoff bound at a schedule (no linearizations).
pub fn penalized_bound(
    mode: SurrogateMode,
    s: f64,
    schedule: &SelectionSchedule,
    rho: f64,
    h_target: &ChannelVector,
    params: &SystemParams,
) -> Result<f64, ScaError> {
    let gains = channel::schedule_sensing_gains(schedule, h_target, params)?;
    let omega = params.rcs_mean;
    let threshold = params.snr_threshold;
    let bound = match mode {
        SurrogateMode::Corrected => outage::chernoff_log_lower(s, &gains, omega, threshold),
        SurrogateMode::Paper => {
            outage::chernoff_log_paper(s, &gains, omega, threshold).unwrap_or(f64::INFINITY)
        }
    };
    Ok(bound + rho * penalty_value(schedule))
}

// ---------------------------------------------------------------------------
// Convex subproblem (log-barrier interior-point solver)
// ---------------------------------------------------------------------------

/// How the linearized rate constraint enters one subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RateHandling {
    /// Ordinary hard inequality.
    Hard,
    /// With an elastic slack carrying the large linear cost.
    Elastic,
    /// Omitted: the constraint is certifiably unsatisfiable over the
    /// polytope, so it is left to the exact-rate verdict and the rounding
    /// repair. Keeping it elastic would only inject big-M duals.
    Dropped,
}

/// Solution of one convex subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub schedule: SelectionSchedule,
    /// Max of stationarity, equality, and complementarity residuals.
    pub kkt_residual: f64,
    /// Final value of the elastic rate slack (zero means the linearized rate
    /// constraint is satisfied without help).
    pub rate_slack: f64,
    /// Surrogate objective (without the elastic term) at the solution.
    pub objective: f64,
    pub newton_iters: usize,
}

struct SubproblemModel {
    t_slots: usize,
    m_pos: usize,
    /// Number of schedule variables `T*M`; slack index is `n`.
    n: usize,
    mode: SurrogateMode,
    s: f64,
    rho: f64,
    scale: f64, // s * Omega * c_psi
    threshold: f64,
    /// Rate constraint as `rate_c0 + rate_grad . b + u >= 0`.
    rate_c0: f64,
    rate_grad: Vec<f64>,
    /// Corrected mode: per-slot log argument `log_c0[t] + log_w[t] . b_t`.
    log_c0: Vec<f64>,
    log_w: Vec<Vec<f64>>,
    /// Paper mode: Gram matrix of the target channel, `q_t(b) = b^T G b`.
    gram: Vec<f64>,
    /// Penalty tangent slope `1 - 2 b0`, flattened.
    pen_grad: Vec<f64>,
    /// Treat column sums as equalities (only when `T == M`, where the
    /// polytope forces every column sum to one and has no inequality slack).
    eq_cols: bool,
    rate_handling: RateHandling,
}

impl SubproblemModel {
    #[allow(clippy::too_many_arguments)]
    fn build(
        s: f64,
        b0: &SelectionSchedule,
        rho: f64,
        h_user: &ChannelVector,
        h_target: &ChannelVector,
        params: &SystemParams,
        mode: SurrogateMode,
        rate_handling: RateHandling,
    ) -> Result<Self, ScaError> {
        let t_slots = b0.num_slots();
        let m_pos = b0.num_positions();
        let n = t_slots * m_pos;
        let c_psi = channel::sensing_gain_constant(params)?;
        let scale = s * params.rcs_mean * c_psi;

        let rate_aff = linearize_rate(b0, h_user, params);
        let mut rate_c0 = -params.min_rate;
        let mut rate_grad = vec![0.0; n];
        for (t, aff) in rate_aff.iter().enumerate() {
            rate_c0 += aff.intercept();
            rate_grad[t * m_pos..(t + 1) * m_pos].copy_from_slice(&aff.gradient);
        }

        let (mut log_c0, mut log_w) = (Vec::new(), Vec::new());
        let mut gram = Vec::new();
        match mode {
            SurrogateMode::Corrected => {
                for aff in linearize_sensing_gain(b0, h_target) {
                    log_c0.push(1.0 + scale * aff.intercept());
                    log_w.push(aff.gradient.iter().map(|g| scale * g).collect());
                }
            }
            SurrogateMode::Paper => {
                gram = vec![0.0; m_pos * m_pos];
                for i in 0..m_pos {
                    for j in 0..m_pos {
                        gram[i * m_pos + j] = (h_target.gains[i].conj() * h_target.gains[j]).re;
                    }
                }
            }
        }

        let (_, pen) = penalty_and_linearization(b0);

        Ok(Self {
            t_slots,
            m_pos,
            n,
            mode,
            s,
            rho,
            scale,
            threshold: params.snr_threshold,
            rate_c0,
            rate_grad,
            log_c0,
            log_w,
            gram,
            pen_grad: pen.gradient,
            eq_cols: t_slots == m_pos,
            rate_handling,
        })
    }

    fn has_slack(&self) -> bool {
        self.rate_handling == RateHandling::Elastic
    }

    fn rate_enabled(&self) -> bool {
        self.rate_handling != RateHandling::Dropped
    }

    /// Upper bound on the linearized rate expression over the schedule
    /// polytope (each row independently at its best position; the column
    /// coupling can only reduce it). Negative means certainly infeasible.
    fn rate_upper_bound(&self) -> f64 {
        let m = self.m_pos;
        let mut ub = self.rate_c0;
        for t in 0..self.t_slots {
            ub += self.rate_grad[t * m..(t + 1) * m]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
        }
        ub
    }

    fn num_vars(&self) -> usize {
        self.n + usize::from(self.has_slack())
    }

    fn num_eq(&self) -> usize {
        // one redundant column constraint is dropped when columns are
        // equalities (the sum of all row constraints equals the sum of all
        // column constraints)
        self.t_slots + if self.eq_cols { self.m_pos - 1 } else { 0 }
    }

    fn num_ineq(&self) -> usize {
        2 * self.n
            + if self.eq_cols { 0 } else { self.m_pos }
            + usize::from(self.rate_enabled())
            + usize::from(self.has_slack())
            + self.t_slots
    }

    fn quad(&self, b_slot: &[f64]) -> (f64, Vec<f64>) {
        let m = self.m_pos;
        let mut grad = vec![0.0; m];
        let mut q = 0.0;
        for i in 0..m {
            let mut gi = 0.0;
            for j in 0..m {
                gi += self.gram[i * m + j] * b_slot[j];
            }
            q += b_slot[i] * gi;
            grad[i] = 2.0 * gi;
        }
        (q, grad)
    }

    fn rate_value(&self, z: &[f64]) -> f64 {
        self.rate_c0
            + self
                .rate_grad
                .iter()
                .zip(&z[..self.n])
                .map(|(g, v)| g * v)
                .sum::<f64>()
            + if self.has_slack() { z[self.n] } else { 0.0 }
    }

    fn log_arg(&self, z: &[f64], t: usize) -> f64 {
        let m = self.m_pos;
        self.log_c0[t]
            + self.log_w[t]
                .iter()
                .zip(&z[t * m..(t + 1) * m])
                .map(|(w, v)| w * v)
                .sum::<f64>()
    }

    /// Scale of the dual variables implied by the barrier at `z`: residuals
    /// are measured relative to this, following the usual interior-point
    /// convention. With a large elastic-cost multiplier in play the
    /// stationarity terms scale with it, and an absolute residual target
    /// would be unreachable in doubles.
    fn dual_scale(&self, z: &[f64], mu: f64, nu: &[f64]) -> f64 {
        let n = self.n;
        let m = self.m_pos;
        let mut total = 0.0;
        let mut count = 0usize;
        let mut add = |h: f64| {
            total += mu / h;
            count += 1;
        };
        for &v in &z[..n] {
            add(v);
            add(1.0 - v);
        }
        if !self.eq_cols {
            for col in 0..m {
                let sum: f64 = (0..self.t_slots).map(|t| z[t * m + col]).sum();
                add(1.0 - sum);
            }
        }
        if self.rate_enabled() {
            add(self.rate_value(z));
        }
        if self.has_slack() {
            add(z[n]);
        }
        match self.mode {
            SurrogateMode::Corrected => {
                for t in 0..self.t_slots {
                    add(self.log_arg(z, t) - LOG_ARG_FLOOR);
                }
            }
            SurrogateMode::Paper => {
                for t in 0..self.t_slots {
                    let (q, _) = self.quad(&z[t * m..(t + 1) * m]);
                    add((1.0 - MGF_MARGIN) - self.scale * q);
                }
            }
        }
        for v in nu {
            total += v.abs();
            count += 1;
        }
        (total / count as f64).max(1.0)
    }

    /// True when every inequality holds strictly at `z`.
    fn in_domain(&self, z: &[f64]) -> bool {
        let n = self.n;
        let m = self.m_pos;
        for &v in &z[..n] {
            if !(v > 0.0 && v < 1.0) {
                return false;
            }
        }
        if !self.eq_cols {
            for col in 0..m {
                let sum: f64 = (0..self.t_slots).map(|t| z[t * m + col]).sum();
                if !(sum < 1.0) {
                    return false;
                }
            }
        }
        if self.rate_enabled() && !(self.rate_value(z) > 0.0) {
            return false;
        }
        if self.has_slack() && !(z[n] > 0.0) {
            return false;
        }
        match self.mode {
            SurrogateMode::Corrected => {
                for t in 0..self.t_slots {
                    if !(self.log_arg(z, t) > LOG_ARG_FLOOR) {
                        return false;
                    }
                }
            }
            SurrogateMode::Paper => {
                for t in 0..self.t_slots {
                    let (q, _) = self.quad(&z[t * m..(t + 1) * m]);
                    if !(self.scale * q < 1.0 - MGF_MARGIN) {
                        return false;
                    }
                }
            }
        }
        z.iter().all(|v| v.is_finite())
    }

    /// Surrogate objective without the elastic term.
    fn objective_core(&self, z: &[f64]) -> f64 {
        let m = self.m_pos;
        let mut val = self
            .pen_grad
            .iter()
            .zip(&z[..self.n])
            .map(|(g, v)| self.rho * g * v)
            .sum::<f64>();
        match self.mode {
            SurrogateMode::Corrected => {
                val += self.s * self.threshold;
                for t in 0..self.t_slots {
                    val -= self.log_arg(z, t).ln();
                }
            }
            SurrogateMode::Paper => {
                val += -self.s * self.threshold;
                for t in 0..self.t_slots {
                    let (q, _) = self.quad(&z[t * m..(t + 1) * m]);
                    val -= (1.0 - self.scale * q).ln();
                }
            }
        }
        val
    }

    /// Gradient of the barrier objective `F0 + mu * sum -ln h_i`.
    fn barrier_gradient(&self, z: &[f64], mu: f64) -> Vec<f64> {
        let n = self.n;
        let m = self.m_pos;
        let mut grad = vec![0.0; self.num_vars()];

        for (g, d) in grad[..n].iter_mut().zip(&self.pen_grad) {
            *g += self.rho * d;
        }
        if self.has_slack() {
            grad[n] += ELASTIC_COST;
        }

        match self.mode {
            SurrogateMode::Corrected => {
                for t in 0..self.t_slots {
                    let arg = self.log_arg(z, t);
                    let h = arg - LOG_ARG_FLOOR;
                    // objective -ln(arg) plus barrier on the safeguard
                    let coef = 1.0 / arg + mu / h;
                    for (i, w) in self.log_w[t].iter().enumerate() {
                        grad[t * m + i] -= coef * w;
                    }
                }
            }
            SurrogateMode::Paper => {
                for t in 0..self.t_slots {
                    let (q, gq) = self.quad(&z[t * m..(t + 1) * m]);
                    let r = 1.0 - self.scale * q;
                    let h = (1.0 - MGF_MARGIN) - self.scale * q;
                    let coef = self.scale * (1.0 / r + mu / h);
                    for (i, g) in gq.iter().enumerate() {
                        grad[t * m + i] += coef * g;
                    }
                }
            }
        }

        for i in 0..n {
            grad[i] += -mu / z[i] + mu / (1.0 - z[i]);
        }
        if !self.eq_cols {
            for col in 0..m {
                let sum: f64 = (0..self.t_slots).map(|t| z[t * m + col]).sum();
                let h = 1.0 - sum;
                for t in 0..self.t_slots {
                    grad[t * m + col] += mu / h;
                }
            }
        }
        if self.rate_enabled() {
            let rate_h = self.rate_value(z);
            for (i, g) in self.rate_grad.iter().enumerate() {
                grad[i] -= mu * g / rate_h;
            }
            if self.has_slack() {
                grad[n] -= mu / rate_h;
                grad[n] -= mu / z[n];
            }
        }
        grad
    }

    /// Hessian of the barrier objective, dense over the variables.
    fn barrier_hessian(&self, z: &[f64], mu: f64) -> Matrix {
        let n = self.n;
        let m = self.m_pos;
        let mut hess = Matrix::zeros(self.num_vars(), self.num_vars());

        fn rank1(h: &mut Matrix, offs: usize, w: &[f64], coef: f64) {
            for (i, wi) in w.iter().enumerate() {
                if *wi == 0.0 {
                    continue;
                }
                for (j, wj) in w.iter().enumerate() {
                    if *wj != 0.0 {
                        h.add_at(offs + i, offs + j, coef * wi * wj);
                    }
                }
            }
        }

        match self.mode {
            SurrogateMode::Corrected => {
                for t in 0..self.t_slots {
                    let arg = self.log_arg(z, t);
                    let h = arg - LOG_ARG_FLOOR;
                    rank1(
                        &mut hess,
                        t * m,
                        &self.log_w[t],
                        1.0 / (arg * arg) + mu / (h * h),
                    );
                }
            }
            SurrogateMode::Paper => {
                for t in 0..self.t_slots {
                    let (q, gq) = self.quad(&z[t * m..(t + 1) * m]);
                    let r = 1.0 - self.scale * q;
                    let h = (1.0 - MGF_MARGIN) - self.scale * q;
                    let curve = self.scale * (1.0 / r + mu / h);
                    for i in 0..m {
                        for j in 0..m {
                            let g = self.gram[i * m + j];
                            if g != 0.0 {
                                hess.add_at(t * m + i, t * m + j, curve * 2.0 * g);
                            }
                        }
                    }
                    rank1(
                        &mut hess,
                        t * m,
                        &gq,
                        self.scale * self.scale * (1.0 / (r * r) + mu / (h * h)),
                    );
                }
            }
        }

        for i in 0..n {
            let lo = z[i];
            let hi = 1.0 - z[i];
            hess.add_at(i, i, mu / (lo * lo) + mu / (hi * hi));
        }
        if !self.eq_cols {
            for col in 0..m {
                let sum: f64 = (0..self.t_slots).map(|t| z[t * m + col]).sum();
                let h = 1.0 - sum;
                let coef = mu / (h * h);
                for t1 in 0..self.t_slots {
                    for t2 in 0..self.t_slots {
                        hess.add_at(t1 * m + col, t2 * m + col, coef);
                    }
                }
            }
        }
        if self.rate_enabled() {
            let rate_h = self.rate_value(z);
            let coef = mu / (rate_h * rate_h);
            for i in 0..n {
                if self.rate_grad[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    if self.rate_grad[j] != 0.0 {
                        hess.add_at(i, j, coef * self.rate_grad[i] * self.rate_grad[j]);
                    }
                }
                if self.has_slack() {
                    hess.add_at(i, n, coef * self.rate_grad[i]);
                    hess.add_at(n, i, coef * self.rate_grad[i]);
                }
            }
            if self.has_slack() {
                hess.add_at(n, n, coef);
                hess.add_at(n, n, mu / (z[n] * z[n]));
            }
        }
        hess
    }

    /// Equality residual: row sums minus one (plus column sums when `T==M`).
    fn eq_residual(&self, z: &[f64]) -> Vec<f64> {
        let m = self.m_pos;
        let mut res = Vec::with_capacity(self.num_eq());
        for t in 0..self.t_slots {
            let sum: f64 = z[t * m..(t + 1) * m].iter().sum();
            res.push(sum - 1.0);
        }
        if self.eq_cols {
            for col in 0..m - 1 {
                let sum: f64 = (0..self.t_slots).map(|t| z[t * m + col]).sum();
                res.push(sum - 1.0);
            }
        }
        res
    }

    fn eq_transpose_apply(&self, nu: &[f64], out: &mut [f64]) {
        let m = self.m_pos;
        for t in 0..self.t_slots {
            for i in 0..m {
                out[t * m + i] += nu[t];
            }
        }
        if self.eq_cols {
            for col in 0..m - 1 {
                for t in 0..self.t_slots {
                    out[t * m + col] += nu[self.t_slots + col];
                }
            }
        }
    }
}

struct BarrierOutcome {
    z: Vec<f64>,
    kkt_residual: f64,
    newton_iters: usize,
}

/// Log-barrier path following with infeasible-start Newton steps. The
/// barrier parameter shrinks by 10x per stage until the complementarity
/// residual `(#ineq) * mu` drops below 1e-9.
fn barrier_solve(
    model: &SubproblemModel,
    z0: Vec<f64>,
    mu_init: f64,
) -> Result<BarrierOutcome, ScaError> {
    let nz = model.num_vars();
    let n_eq = model.num_eq();
    let m_ineq = model.num_ineq() as f64;
    let mut z = z0;
    let mut nu = vec![0.0; n_eq];
    if !model.in_domain(&z) {
        return Err(ScaError::SolverFailure("initial point outside the domain"));
    }

    let mut mu = mu_init;
    let mut total_newton = 0usize;
    let mut final_dual = f64::INFINITY;
    // best stage end along the path, scored by the full KKT residual; late
    // stages can be worse than earlier ones once factorization noise wins
    let mut best_stage: Option<(Vec<f64>, f64)> = None;
    let mut best_score = f64::INFINITY;
    loop {
        let mut best_res = f64::INFINITY;
        let mut stall = 0usize;
        for _ in 0..120 {
            total_newton += 1;
            let grad = model.barrier_gradient(&z, mu);
            let mut r_dual = grad;
            model.eq_transpose_apply(&nu, &mut r_dual);
            let r_pri = model.eq_residual(&z);
            let scale = model.dual_scale(&z, mu, &nu);
            let dual_inf = r_dual.iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale;
            let pri_inf = r_pri.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            final_dual = dual_inf;
            if dual_inf <= 1e-8 && pri_inf <= 1e-11 {
                break;
            }

            let hess = model.barrier_hessian(&z, mu);
            let dim = nz + n_eq;
            let mut kkt = Matrix::zeros(dim, dim);
            for i in 0..nz {
                for j in 0..nz {
                    let v = hess.get(i, j);
                    if v != 0.0 {
                        kkt.set(i, j, v);
                    }
                }
            }
            let m = model.m_pos;
            for t in 0..model.t_slots {
                for i in 0..m {
                    kkt.set(t * m + i, nz + t, 1.0);
                    kkt.set(nz + t, t * m + i, 1.0);
                }
            }
            if model.eq_cols {
                for col in 0..m - 1 {
                    for t in 0..model.t_slots {
                        kkt.set(t * m + col, nz + model.t_slots + col, 1.0);
                        kkt.set(nz + model.t_slots + col, t * m + col, 1.0);
                    }
                }
            }
            let mut rhs = vec![0.0; dim];
            for (i, v) in r_dual.iter().enumerate() {
                rhs[i] = -v;
            }
            for (i, v) in r_pri.iter().enumerate() {
                rhs[nz + i] = -v;
            }
            // symmetric equilibration tames the huge barrier curvatures near
            // active bounds; one refinement pass recovers the digits the
            // ill-conditioned factorization loses
            let Some(delta) = solve_equilibrated(&kkt, &rhs) else {
                break; // factorization failed at this stage; keep the best stage
            };
            let dz = &delta[..nz];
            // the right-hand side already carries -A^T nu, so the multiplier
            // block of the solution is the increment
            let dnu = &delta[nz..];

            // residual-norm backtracking with a domain guard
            let res_now = norm2_pair(&r_dual, &r_pri);
            let mut step = 1.0f64;
            let mut accepted = false;
            for _ in 0..60 {
                let z_try: Vec<f64> = z.iter().zip(dz).map(|(v, d)| v + step * d).collect();
                if model.in_domain(&z_try) {
                    let nu_try: Vec<f64> =
                        nu.iter().zip(dnu).map(|(v, d)| v + step * d).collect();
                    let mut rd = model.barrier_gradient(&z_try, mu);
                    model.eq_transpose_apply(&nu_try, &mut rd);
                    let rp = model.eq_residual(&z_try);
                    if norm2_pair(&rd, &rp) <= (1.0 - 0.25 * step) * res_now {
                        z = z_try;
                        nu = nu_try;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            // an exhausted or vanishing step means the direction has hit the
            // factorization noise floor for this stage
            if !accepted || step <= 1e-12 {
                break;
            }
            // legitimate slow phases exist (backtracking through the 1/x
            // barrier pieces); only abandon the stage on a real plateau
            if res_now < best_res * 0.999 {
                best_res = res_now;
                stall = 0;
            } else {
                stall += 1;
                if stall > 20 {
                    break;
                }
            }
        }
        let pri_inf = model
            .eq_residual(&z)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let compl = m_ineq * mu / model.dual_scale(&z, mu, &nu);
        let score = final_dual.max(pri_inf).max(compl);
        if score < best_score {
            best_score = score;
            best_stage = Some((z.clone(), score));
        }
        // stop once the complementarity residual is small enough; mu is also
        // floored because the pure-primal Newton systems become too ill-
        // conditioned to improve below that
        if mu <= (1e-8 / m_ineq).max(1e-10) {
            break;
        }
        mu *= 0.1;
        // the central value of the elastic slack scales with mu; re-center it
        // so Newton starts inside its basin at the new stage. The floor keeps
        // the rate slack above the rounding noise of the constraint sum when
        // the elastic is active (the sum cancels to ~eps * |rate|), and the
        // domain check restores the previous slack if even that fails.
        if model.has_slack() {
            let rate_wo_slack = model.rate_value(&z) - z[model.n];
            let previous = z[model.n];
            z[model.n] = (-rate_wo_slack).max(0.0)
                + (mu / ELASTIC_COST).max(1e-12 * (1.0 + rate_wo_slack.abs()));
            if !model.in_domain(&z) {
                z[model.n] = previous;
            }
        }
    }

    let (z, kkt_residual) =
        best_stage.ok_or(ScaError::SolverFailure("no barrier stage completed"))?;
    Ok(BarrierOutcome {
        z,
        kkt_residual,
        newton_iters: total_newton,
    })
}

fn norm2_pair(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().map(|v| v * v).sum::<f64>() + b.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Solves `K x = rhs` with symmetric diagonal equilibration and one step of
/// iterative refinement.
fn solve_equilibrated(kkt: &Matrix, rhs: &[f64]) -> Option<Vec<f64>> {
    let dim = kkt.rows;
    let scale: Vec<f64> = (0..dim)
        .map(|i| 1.0 / kkt.get(i, i).abs().max(1.0).sqrt())
        .collect();
    let mut scaled = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let v = kkt.get(i, j);
            if v != 0.0 {
                scaled.set(i, j, scale[i] * v * scale[j]);
            }
        }
    }
    let factors = lu_factor(scaled).ok()?;
    let solve = |b: &[f64]| -> Vec<f64> {
        let scaled_rhs: Vec<f64> = b.iter().zip(&scale).map(|(v, s)| v * s).collect();
        factors
            .solve_vec(&scaled_rhs)
            .iter()
            .zip(&scale)
            .map(|(v, s)| v * s)
            .collect()
    };
    let mut x = solve(rhs);
    // refinement: r = rhs - K x, x += K^-1 r
    let mut residual = rhs.to_vec();
    for i in 0..dim {
        let mut acc = 0.0;
        for j in 0..dim {
            acc += kkt.get(i, j) * x[j];
        }
        residual[i] -= acc;
    }
    let correction = solve(&residual);
    for (xi, ci) in x.iter_mut().zip(&correction) {
        *xi += ci;
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Interior starting point: blend the expansion point toward uniform and pad
/// the rate slack so its constraint starts strictly satisfied.
fn interior_start(model: &SubproblemModel, b0: &SelectionSchedule) -> Option<Vec<f64>> {
    let n = model.n;
    let uniform = 1.0 / model.m_pos as f64;
    for delta in [1e-7, 1e-4, 1e-2, 0.5] {
        let mut z = vec![0.0; model.num_vars()];
        for (i, &w) in b0.as_slice().iter().enumerate() {
            z[i] = (1.0 - delta) * w + delta * uniform;
        }
        if model.has_slack() {
            z[n] = 0.0;
            let deficit = -model.rate_value(&z);
            z[n] = deficit.max(0.0) + 1.0;
        }
        if model.in_domain(&z) {
            return Some(z);
        }
    }
    None
}

/// Solves the convex subproblem (linearized around `b0`) for fixed Chernoff
/// parameter `s` and penalty weight `rho`.
pub fn solve_subproblem(
    s: f64,
    b0: &SelectionSchedule,
    rho: f64,
    cfg: &ScaConfig,
    h_user: &ChannelVector,
    h_target: &ChannelVector,
    params: &SystemParams,
) -> Result<SubproblemSolution, ScaError> {
    solve_subproblem_inner(s, b0, rho, cfg, h_user, h_target, params, 10.0)
}

#[allow(clippy::too_many_arguments)]
fn solve_subproblem_inner(
    s: f64,
    b0: &SelectionSchedule,
    rho: f64,
    cfg: &ScaConfig,
    h_user: &ChannelVector,
    h_target: &ChannelVector,
    params: &SystemParams,
    mu_init: f64,
) -> Result<SubproblemSolution, ScaError> {
    // solve with the rate constraint hard when a strictly feasible start
    // exists; fall back to the elastic slack when the linearized set is
    // infeasible from here, and drop the constraint altogether when it is
    // certifiably unsatisfiable over the whole polytope (the unmet demand is
    // then left to the exact-rate verdict and the rounding repair, instead
    // of injecting big-M duals that double f64 precision cannot resolve)
    let build = |handling: RateHandling| {
        SubproblemModel::build(s, b0, rho, h_user, h_target, params, cfg.surrogate_mode, handling)
    };
    let hard = build(RateHandling::Hard)?;
    let mut deficit = 0.0;
    let (model, z0) = if hard.rate_upper_bound() <= 1e-9 {
        deficit = -hard.rate_upper_bound();
        let dropped = build(RateHandling::Dropped)?;
        let z0 = interior_start(&dropped, b0)
            .ok_or(ScaError::SolverFailure("no strictly feasible starting point"))?;
        (dropped, z0)
    } else if let Some(z0) = interior_start(&hard, b0) {
        (hard, z0)
    } else {
        let elastic = build(RateHandling::Elastic)?;
        let z0 = interior_start(&elastic, b0)
            .ok_or(ScaError::SolverFailure("no strictly feasible starting point"))?;
        (elastic, z0)
    };
    let outcome = barrier_solve(&model, z0, mu_init)?;
    if outcome.kkt_residual > cfg.subproblem_kkt_tol {
        return Err(ScaError::KktNotConverged {
            residual: outcome.kkt_residual,
            tol: cfg.subproblem_kkt_tol,
        });
    }
    let schedule = SelectionSchedule::from_weights(
        outcome.z[..model.n].to_vec(),
        model.t_slots,
        model.m_pos,
        ScheduleMode::Relaxed,
    );
    let rate_slack = match model.rate_handling {
        RateHandling::Hard => 0.0,
        RateHandling::Elastic => outcome.z[model.n],
        RateHandling::Dropped => deficit,
    };
    Ok(SubproblemSolution {
        kkt_residual: outcome.kkt_residual,
        rate_slack,
        objective: model.objective_core(&outcome.z),
        newton_iters: outcome.newton_iters,
        schedule,
    })
}

// ---------------------------------------------------------------------------
// SCA loops
// ---------------------------------------------------------------------------

/// Result of one inner SCA loop at fixed `(s, rho)`.
#[derive(Debug, Clone)]
pub struct InnerResult {
    pub schedule: SelectionSchedule,
    /// True penalized bound at the start point and after each subproblem.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub rate_slack: f64,
    /// False only when the loop exhausted `max_sca_iters` without settling.
    pub converged: bool,
}

/// Inner SCA loop: re-linearize and solve the convex subproblem until the
/// iterate moves less than `sca_tolerance` in Frobenius norm.
///
/// The loop is monotone by construction: each subproblem objective majorizes
/// the true penalized bound and touches it at the expansion point, so an
/// accurate subproblem solution cannot increase the bound. If solver noise
/// near a fixed point would still nudge it upward, the previous iterate is
/// kept and the loop stops.
pub fn sca_inner(
    s: f64,
    b_init: &SelectionSchedule,
    rho: f64,
    cfg: &ScaConfig,
    h_user: &ChannelVector,
    h_target: &ChannelVector,
    params: &SystemParams,
) -> Result<InnerResult, ScaError> {
    let mode = cfg.surrogate_mode;
    let mut b = b_init.clone();
    let mut trace = vec![penalized_bound(mode, s, &b, rho, h_target, params)?];
    let mut iterations = 0;
    let mut rate_slack = 0.0;
    let mut converged = false;
    for i in 0..cfg.max_sca_iters {
        let mu_init = if i == 0 { 10.0 } else { 1e-3 };
        let sol = solve_subproblem_inner(s, &b, rho, cfg, h_user, h_target, params, mu_init)?;
        iterations += 1;
        rate_slack = sol.rate_slack;
        let candidate_bound = penalized_bound(mode, s, &sol.schedule, rho, h_target, params)?;
        if candidate_bound > *trace.last().expect("trace nonempty") {
            converged = true; // descent exhausted at solver precision
            break;
        }
        let delta = sol.schedule.frobenius_distance(&b);
        b = sol.schedule;
        trace.push(candidate_bound);
        if delta < cfg.sca_tolerance {
            converged = true;
            break;
        }
    }
    Ok(InnerResult {
        schedule: b,
        trace,
        iterations,
        rate_slack,
        converged,
    })
}

/// Starting schedule for the corrected-mode trajectory: each slot is seeded
/// on a distinct position (descending target-channel magnitude), blended
/// half-and-half with the uniform row.
///
/// A fully uniform start leaves the slots symmetric, and the tangent of the
/// coherent quadratic `|h^H b|^2` at such a point ranks positions by their
/// projection onto the arbitrary phase of the mixed inner product rather
/// than by magnitude; successive linearizations then lock onto that
/// phase-coherent subset. Seeding each slot near one physical position makes
/// the first tangents magnitude-driven while the uniform component keeps
/// every position reachable.
fn initial_schedule(t_slots: usize, h_target: &ChannelVector) -> SelectionSchedule {
    let m_pos = h_target.len();
    let mut order: Vec<usize> = (0..m_pos).collect();
    order.sort_by(|&a, &b| {
        h_target.gains[b]
            .norm_sqr()
            .partial_cmp(&h_target.gains[a].norm_sqr())
            .unwrap()
            .then(a.cmp(&b))
    });
    let base = 0.5 / m_pos as f64;
    let mut weights = vec![base; t_slots * m_pos];
    for (slot, &position) in order.iter().take(t_slots).enumerate() {
        weights[slot * m_pos + position] += 0.5;
    }
    SelectionSchedule::from_weights(weights, t_slots, m_pos, ScheduleMode::Relaxed)
}

/// `s` used by the subproblems: the exact bound minimizer when positive,
/// otherwise a small probing value so the subproblem still prefers larger
/// radar gains (the bound is flat at `s = 0`).
fn working_s(s_opt: f64, gains: &[f64], omega: f64) -> f64 {
    if s_opt > 0.0 {
        return s_opt;
    }
    let max_gain = gains.iter().fold(0.0f64, |a, &p| a.max(p));
    if max_gain > 0.0 {
        1e-2 / (max_gain * omega)
    } else {
        0.0
    }
}

/// Full optimization on the scenario's own channels.
pub fn optimize(
    params: &SystemParams,
    cfg: &ScaConfig,
    seed: u64,
) -> Result<OptimizationResult, ScaError> {
    let h_user = channel::user_channel(params)?;
    let h_target = channel::target_channel(params)?;
    optimize_with_channels(params, cfg, seed, &h_user, &h_target)
}

/// Optimization over externally supplied channels (used by the conventional-
/// array baseline, which swaps in free-space channels).
pub fn optimize_with_channels(
    params: &SystemParams,
    cfg: &ScaConfig,
    seed: u64,
    h_user: &ChannelVector,
    h_target: &ChannelVector,
) -> Result<OptimizationResult, ScaError> {
    params.validate()?;
    let _ = seed; // the optimization itself is deterministic; seeds feed Monte Carlo evaluation
    let t = params.num_slots;
    let m = params.num_positions;
    let omega = params.rcs_mean;
    let threshold = params.snr_threshold;

    // with as many slots as positions every feasible binary schedule uses
    // all positions exactly once, and the outage and accumulated rate are
    // invariant to the slot assignment, so any permutation is optimal
    if t == m {
        let assignment: Vec<usize> = (0..m).collect();
        let binary = SelectionSchedule::one_hot(&assignment, m);
        let achieved_rate: f64 = channel::schedule_rates(&binary, h_user, params).iter().sum();
        let gains = channel::schedule_sensing_gains(&binary, h_target, params)?;
        let (s_star, _) = outage::optimize_s(&gains, omega, threshold, cfg.surrogate_mode);
        let rate_vec = outage::rates_from_schedule(&binary, h_target, params)?;
        let exact_outage = outage::hypoexp_cdf(rate_vec.rates(), threshold)?.value;
        return Ok(OptimizationResult {
            relaxed_schedule: binary.clone(),
            schedule: binary,
            s_star,
            surrogate_trace: Vec::new(),
            exact_outage,
            achieved_rate,
            feasible: achieved_rate >= params.min_rate - 1e-9,
            iterations: 0,
        });
    }

    let uniform = SelectionSchedule::uniform(t, m);
    let mut total_iters = 0usize;

    let (b_relaxed, s_final, trace) = match cfg.surrogate_mode {
        SurrogateMode::Corrected => {
            let mut b = initial_schedule(t, h_target);
            let mut rho = cfg.penalty_init;
            let mut s = 0.0;
            let mut trace = Vec::new();
            for _round in 0..cfg.penalty_rounds {
                let gains = channel::schedule_sensing_gains(&b, h_target, params)?;
                let (s_opt, _) =
                    outage::optimize_s(&gains, omega, threshold, SurrogateMode::Corrected);
                s = working_s(s_opt, &gains, omega);
                let inner = sca_inner(s, &b, rho, cfg, h_user, h_target, params)?;
                total_iters += inner.iterations;
                trace = inner.trace;
                b = inner.schedule;
                if b.is_binary_within(cfg.binarization_tol) {
                    break;
                }
                rho *= cfg.penalty_growth;
            }
            (b, s, trace)
        }
        SurrogateMode::Paper => {
            let gains0 = channel::schedule_sensing_gains(&uniform, h_target, params)?;
            let max_gain = gains0.iter().fold(0.0f64, |a, &p| a.max(p));
            let s_max = (1.0 - 1e-9) / (max_gain * omega).max(1e-300);
            let grid = cfg.s_grid_size.max(1);
            let mut best: Option<(f64, f64, InnerResult)> = None;
            for j in 1..=grid {
                let s = s_max * j as f64 / (grid + 1) as f64;
                let inner =
                    sca_inner(s, &uniform, cfg.penalty_init, cfg, h_user, h_target, params)?;
                total_iters += inner.iterations;
                let objective = penalized_bound(
                    SurrogateMode::Paper,
                    s,
                    &inner.schedule,
                    cfg.penalty_init,
                    h_target,
                    params,
                )?;
                let better = match &best {
                    Some((best_obj, _, _)) => objective < *best_obj,
                    None => true,
                };
                if better {
                    best = Some((objective, s, inner));
                }
            }
            let (_, s, inner) = best.ok_or(ScaError::SolverFailure("empty line-search grid"))?;
            (inner.schedule, s, inner.trace)
        }
    };

    let (binary, c1_ok) = round_schedule(&b_relaxed, h_user, params);
    let rates = channel::schedule_rates(&binary, h_user, params);
    let achieved_rate: f64 = rates.iter().sum();
    let structurally_ok = scenario::validate_schedule(&binary, params)
        .map(|v| v.is_empty())
        .unwrap_or(false);
    let feasible = c1_ok && structurally_ok && achieved_rate >= params.min_rate - 1e-9;
    let rate_vec = outage::rates_from_schedule(&binary, h_target, params)?;
    let exact_outage = outage::hypoexp_cdf(rate_vec.rates(), threshold)?.value;

    Ok(OptimizationResult {
        schedule: binary,
        relaxed_schedule: b_relaxed,
        s_star: s_final,
        surrogate_trace: trace,
        exact_outage,
        achieved_rate,
        feasible,
        iterations: total_iters,
    })
}

/// Rounds a relaxed schedule to a feasible binary one: greedy assignment by
/// descending weight under the one-position-per-slot and no-reuse rules, then
/// local swaps (at most 100) that maximally increase the total rate until the
/// accumulated-rate constraint holds. Binary inputs pass through unchanged.
/// The second return value reports rate feasibility.
pub fn round_schedule(
    relaxed: &SelectionSchedule,
    h_user: &ChannelVector,
    params: &SystemParams,
) -> (SelectionSchedule, bool) {
    let t_slots = relaxed.num_slots();
    let m_pos = relaxed.num_positions();

    let mut pairs: Vec<(usize, usize)> = (0..t_slots)
        .flat_map(|t| (0..m_pos).map(move |m| (t, m)))
        .collect();
    pairs.sort_by(|&(t1, m1), &(t2, m2)| {
        relaxed
            .entry(t2, m2)
            .partial_cmp(&relaxed.entry(t1, m1))
            .unwrap()
            .then(t1.cmp(&t2))
            .then(m1.cmp(&m2))
    });

    let mut chosen: Vec<Option<usize>> = vec![None; t_slots];
    let mut used = vec![false; m_pos];
    let mut remaining = t_slots;
    for &(t, m) in &pairs {
        if remaining == 0 {
            break;
        }
        if chosen[t].is_none() && !used[m] {
            chosen[t] = Some(m);
            used[m] = true;
            remaining -= 1;
        }
    }
    let mut selection: Vec<usize> = chosen.into_iter().map(|c| c.unwrap()).collect();

    // per-position one-hot rates for the repair phase
    let rate_of: Vec<f64> = (0..m_pos)
        .map(|m| {
            let mut row = vec![0.0; m_pos];
            row[m] = 1.0;
            channel::slot_rate(&row, h_user, params)
        })
        .collect();
    let mut total: f64 = selection.iter().map(|&m| rate_of[m]).sum();

    let mut swaps = 0;
    while total < params.min_rate - 1e-9 && swaps < 100 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (slot, &current) in selection.iter().enumerate() {
            for cand in 0..m_pos {
                if used[cand] {
                    continue;
                }
                let gain = rate_of[cand] - rate_of[current];
                if best.map_or(gain > 0.0, |(bg, _, _)| gain > bg) {
                    best = Some((gain, slot, cand));
                }
            }
        }
        match best {
            Some((gain, slot, cand)) if gain > 0.0 => {
                used[selection[slot]] = false;
                used[cand] = true;
                selection[slot] = cand;
                total += gain;
                swaps += 1;
            }
            _ => break,
        }
    }

    let schedule = SelectionSchedule::one_hot(&selection, m_pos);
    let feasible = total >= params.min_rate - 1e-9;
    (schedule, feasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{target_channel, user_channel, ChannelKind};
    use crate::rng::SmallRng;
    use crate::scenario::validate_schedule;
    use num_complex::Complex64;

    fn small_params(m: usize, t: usize) -> SystemParams {
        let mut p = SystemParams::default();
        p.num_positions = m;
        p.num_slots = t;
        p.pa_positions = SystemParams::uniform_pa_grid(p.waveguide_length, p.pa_height, m);
        p
    }

    fn random_feasible(rng: &mut SmallRng, t: usize, m: usize) -> SelectionSchedule {
        let mut w = vec![0.0; t * m];
        for row in w.chunks_mut(m) {
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = rng.next_f64() + 1e-3;
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        SelectionSchedule::from_weights(w, t, m, ScheduleMode::Relaxed)
    }

    #[test]
    fn rate_linearization_is_tangent() {
        let p = small_params(8, 3);
        let h = user_channel(&p).unwrap();
        let b0 = SelectionSchedule::uniform(3, 8);
        let lin = linearize_rate(&b0, &h, &p);
        for (t, aff) in lin.iter().enumerate() {
            let exact = channel::slot_rate(b0.row(t), &h, &p);
            assert!((aff.eval(b0.row(t)) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_linearization_majorizes_on_random_points() {
        // log(1 + convex quadratic) is concave along a segment as long as the
        // SNR stays above one there (phase cancellations can carve convex
        // valleys below that level); on such segments the tangent dominates.
        let p = small_params(10, 2);
        let h = user_channel(&p).unwrap();
        let mut rng = SmallRng::new(8);
        let b0 = random_feasible(&mut rng, 2, 10);
        let lin = linearize_rate(&b0, &h, &p);
        let mut checked = 0usize;
        for _ in 0..1000 {
            let b = random_feasible(&mut rng, 2, 10);
            for (t, aff) in lin.iter().enumerate() {
                // gamma along the segment is a parabola kappa*|c0+tau*d|^2;
                // the composition log2(1+gamma) is concave at tau exactly
                // when gamma(tau) >= 1 + 2*gamma_vertex, so the tangent
                // majorant is only claimed on segments satisfying that
                // pointwise (the minimum over [0,1] sits at the clamped
                // vertex)
                let kappa = p.transmit_power / p.noise_power;
                let c0 = h.inner(b0.row(t));
                let c1 = h.inner(b.row(t));
                let d = c1 - c0;
                if d.norm_sqr() == 0.0 {
                    continue;
                }
                let tau_vertex = -(d.conj() * c0).re / d.norm_sqr();
                let gamma_at = |tau: f64| kappa * (c0 + d * tau).norm_sqr();
                let gamma_vertex = gamma_at(tau_vertex);
                let gamma_low = gamma_at(tau_vertex.clamp(0.0, 1.0));
                if gamma_low < 1.0 + 2.0 * gamma_vertex {
                    continue;
                }
                checked += 1;
                let approx = aff.eval(b.row(t));
                let exact = channel::slot_rate(b.row(t), &h, &p);
                assert!(approx >= exact - 1e-9, "tangent fell below the rate");
            }
        }
        assert!(checked > 300, "too few segments in the concave regime: {checked}");
    }

    #[test]
    fn zero_channel_linearizes_to_zero() {
        let p = small_params(4, 1);
        let h = ChannelVector {
            gains: vec![Complex64::new(0.0, 0.0); 4],
            kind: ChannelKind::User,
        };
        let b0 = SelectionSchedule::uniform(1, 4);
        let lin = linearize_rate(&b0, &h, &p);
        assert_eq!(lin[0].value, 0.0);
        assert!(lin[0].gradient.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn sensing_linearization_is_a_global_minorant() {
        let p = small_params(10, 2);
        let h = target_channel(&p).unwrap();
        let mut rng = SmallRng::new(21);
        let b0 = random_feasible(&mut rng, 2, 10);
        let lin = linearize_sensing_gain(&b0, &h);
        for (t, aff) in lin.iter().enumerate() {
            let q = h.inner(b0.row(t)).norm_sqr();
            assert!((aff.eval(b0.row(t)) - q).abs() <= 1e-12 * q.max(1e-300));
        }
        for _ in 0..1000 {
            let b = random_feasible(&mut rng, 2, 10);
            for (t, aff) in lin.iter().enumerate() {
                let q = h.inner(b.row(t)).norm_sqr();
                assert!(aff.eval(b.row(t)) <= q + 1e-12 * q.max(1e-300));
            }
        }
        // tangent at the origin is identically zero
        let zero = SelectionSchedule::from_weights(vec![0.0; 20], 2, 10, ScheduleMode::Relaxed);
        let lin0 = linearize_sensing_gain(&zero, &h);
        for aff in &lin0 {
            assert_eq!(aff.value, 0.0);
            assert!(aff.gradient.iter().all(|g| *g == 0.0));
        }
    }

    #[test]
    fn penalty_linearization_majorizes() {
        let mut rng = SmallRng::new(4);
        // binary expansion point: penalty zero, majorant nonnegative on the box
        let b_bin = SelectionSchedule::one_hot(&[0, 2], 5);
        let (f0, lin) = penalty_and_linearization(&b_bin);
        assert_eq!(f0, 0.0);
        for _ in 0..200 {
            let b = random_feasible(&mut rng, 2, 5);
            assert!(lin.eval(&b) >= -1e-12);
            assert!(lin.eval(&b) >= penalty_value(&b) - 1e-12);
        }
        // half-way point: gradient vanishes, value T*M/4
        let half = SelectionSchedule::from_weights(vec![0.5; 10], 2, 5, ScheduleMode::Relaxed);
        let (fh, lin_h) = penalty_and_linearization(&half);
        assert!((fh - 10.0 / 4.0).abs() < 1e-12);
        assert!(lin_h.gradient.iter().all(|g| g.abs() < 1e-12));
        // majorant property from a generic expansion point
        let b0 = random_feasible(&mut rng, 2, 5);
        let (_, lin_g) = penalty_and_linearization(&b0);
        for _ in 0..1000 {
            let b = random_feasible(&mut rng, 2, 5);
            assert!(lin_g.eval(&b) >= penalty_value(&b) - 1e-12);
        }
    }

    #[test]
    fn subproblem_without_pressure_concentrates_on_best_tangent() {
        let mut p = small_params(3, 1);
        p.min_rate = 0.0;
        let h_u = user_channel(&p).unwrap();
        let h_e = target_channel(&p).unwrap();
        let cfg = ScaConfig::default();
        let b0 = SelectionSchedule::uniform(1, 3);
        let lin = linearize_sensing_gain(&b0, &h_e);
        let best = lin[0]
            .gradient
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let gains = channel::schedule_sensing_gains(&b0, &h_e, &p).unwrap();
        let (s_opt, _) =
            outage::optimize_s(&gains, p.rcs_mean, p.snr_threshold, SurrogateMode::Corrected);
        let s = working_s(s_opt, &gains, p.rcs_mean);
        let sol = solve_subproblem(s, &b0, 0.0, &cfg, &h_u, &h_e, &p).unwrap();
        assert!(sol.kkt_residual <= cfg.subproblem_kkt_tol);
        let row = sol.schedule.row(0);
        let argmax = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        assert_eq!(argmax, best);
        assert!(row[best] > 0.9, "mass {}", row[best]);
    }

    #[test]
    fn subproblem_solution_is_feasible_and_descends() {
        let p = small_params(6, 2);
        let h_u = user_channel(&p).unwrap();
        let h_e = target_channel(&p).unwrap();
        let cfg = ScaConfig::default();
        let mut rng = SmallRng::new(12);
        for trial in 0..10 {
            let b0 = random_feasible(&mut rng, 2, 6);
            let gains = channel::schedule_sensing_gains(&b0, &h_e, &p).unwrap();
            let (s_opt, _) =
                outage::optimize_s(&gains, p.rcs_mean, p.snr_threshold, SurrogateMode::Corrected);
            let s = working_s(s_opt, &gains, p.rcs_mean);
            let rho = 1e-2;
            let sol = solve_subproblem(s, &b0, rho, &cfg, &h_u, &h_e, &p).unwrap();
            let violations = validate_schedule(&sol.schedule, &p).unwrap();
            assert!(violations.is_empty(), "trial {trial}: {violations:?}");
            // surrogate objective decreased relative to the expansion point
            let model =
                SubproblemModel::build(s, &b0, rho, &h_u, &h_e, &p, SurrogateMode::Corrected, RateHandling::Hard)
                    .unwrap();
            let mut z0: Vec<f64> = b0.as_slice().to_vec();
            z0.push(1.0);
            let mut z1: Vec<f64> = sol.schedule.as_slice().to_vec();
            z1.push(1.0);
            assert!(model.objective_core(&z1) <= model.objective_core(&z0) + 1e-7);
        }
    }

    #[test]
    fn paper_mode_subproblem_respects_mgf_domain() {
        let p = small_params(6, 2);
        let h_u = user_channel(&p).unwrap();
        let h_e = target_channel(&p).unwrap();
        let cfg = ScaConfig {
            surrogate_mode: SurrogateMode::Paper,
            ..ScaConfig::default()
        };
        let b0 = SelectionSchedule::uniform(2, 6);
        let gains = channel::schedule_sensing_gains(&b0, &h_e, &p).unwrap();
        let max_gain = gains.iter().fold(0.0f64, |a, &g| a.max(g));
        let s = 0.5 / (max_gain * p.rcs_mean);
        let sol = solve_subproblem(s, &b0, 1e-2, &cfg, &h_u, &h_e, &p).unwrap();
        let out_gains = channel::schedule_sensing_gains(&sol.schedule, &h_e, &p).unwrap();
        for &g in &out_gains {
            assert!(s * g * p.rcs_mean <= 1.0 - MGF_MARGIN + 1e-9);
        }
    }

    #[test]
    fn sca_inner_trace_is_monotone_and_converges() {
        let p = small_params(8, 3);
        let h_u = user_channel(&p).unwrap();
        let h_e = target_channel(&p).unwrap();
        let cfg = ScaConfig::default();
        let b0 = SelectionSchedule::uniform(3, 8);
        let gains = channel::schedule_sensing_gains(&b0, &h_e, &p).unwrap();
        let (s_opt, _) =
            outage::optimize_s(&gains, p.rcs_mean, p.snr_threshold, SurrogateMode::Corrected);
        let s = working_s(s_opt, &gains, p.rcs_mean);
        let inner = sca_inner(s, &b0, 1e-2, &cfg, &h_u, &h_e, &p).unwrap();
        assert!(inner.iterations <= cfg.max_sca_iters);
        for w in inner.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-8, "trace increased: {} -> {}", w[0], w[1]);
        }
        // restarting at the fixed point terminates immediately
        let again = sca_inner(s, &inner.schedule, 1e-2, &cfg, &h_u, &h_e, &p).unwrap();
        assert_eq!(again.iterations, 1);
    }

    #[test]
    fn optimize_small_instance_matches_enumeration() {
        let mut p = small_params(3, 1);
        p.min_rate = 0.0;
        p.transmit_power = crate::scenario::dbm_to_watts(10.0);
        let cfg = ScaConfig::default();
        let result = optimize(&p, &cfg, 0).unwrap();
        let h_e = target_channel(&p).unwrap();
        let best = (0..3)
            .min_by(|&a, &b| {
                one_hot_outage(&p, &h_e, a)
                    .partial_cmp(&one_hot_outage(&p, &h_e, b))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(result.schedule.selected_positions(), vec![best]);
        assert!(result.feasible);
    }

    fn one_hot_outage(p: &SystemParams, h_e: &ChannelVector, m: usize) -> f64 {
        let s = SelectionSchedule::one_hot(&[m], p.num_positions);
        let rates = outage::rates_from_schedule(&s, h_e, p).unwrap();
        outage::hypoexp_cdf(rates.rates(), p.snr_threshold)
            .unwrap()
            .value
    }

    #[test]
    fn paper_mode_optimize_returns_feasible_schedule() {
        let mut p = small_params(6, 2);
        p.transmit_power = crate::scenario::dbm_to_watts(12.0);
        let cfg = ScaConfig {
            surrogate_mode: SurrogateMode::Paper,
            s_grid_size: 8,
            ..ScaConfig::default()
        };
        let result = optimize(&p, &cfg, 0).unwrap();
        assert!(validate_schedule(&result.schedule, &p).unwrap().is_empty());
        assert!(result.feasible);
        assert!(result.s_star > 0.0);
        // the grid stays inside the feasible interval at the uniform start
        let h_e = target_channel(&p).unwrap();
        let gains =
            channel::schedule_sensing_gains(&SelectionSchedule::uniform(2, 6), &h_e, &p).unwrap();
        let s_max = 1.0 / (gains.iter().cloned().fold(0.0, f64::max) * p.rcs_mean);
        assert!(result.s_star < s_max);
    }

    #[test]
    fn uniform_initialization_is_feasible() {
        for (t, m) in [(1usize, 4usize), (3, 8), (4, 4)] {
            let p = small_params(m, t);
            let s = SelectionSchedule::uniform(t, m);
            assert!(validate_schedule(&s, &p).unwrap().is_empty());
        }
    }

    #[test]
    fn equal_slot_and_position_counts_shortcut_and_solver() {
        // T == M: the optimizer short-circuits to a permutation (all are
        // equivalent by slot-permutation invariance) ...
        let mut p = small_params(4, 4);
        p.min_rate = 0.0;
        let cfg = ScaConfig::default();
        let result = optimize(&p, &cfg, 0).unwrap();
        assert!(validate_schedule(&result.schedule, &p).unwrap().is_empty());
        assert_eq!(result.schedule.selected_positions(), vec![0, 1, 2, 3]);
        // ... while the subproblem solver itself must still handle the
        // degenerate polytope (no interior for the column inequalities) by
        // treating column sums as equalities.
        let h_u = user_channel(&p).unwrap();
        let h_e = target_channel(&p).unwrap();
        let b0 = SelectionSchedule::uniform(4, 4);
        let gains = channel::schedule_sensing_gains(&b0, &h_e, &p).unwrap();
        let (s_opt, _) =
            outage::optimize_s(&gains, p.rcs_mean, p.snr_threshold, SurrogateMode::Corrected);
        let s = working_s(s_opt, &gains, p.rcs_mean);
        let sol = solve_subproblem(s, &b0, 1e-2, &cfg, &h_u, &h_e, &p).unwrap();
        assert!(sol.kkt_residual <= cfg.subproblem_kkt_tol);
        assert!(validate_schedule(&sol.schedule, &p).unwrap().is_empty());
    }

    #[test]
    fn rounding_is_idempotent_on_binary_inputs() {
        let p = small_params(8, 3);
        let h_u = user_channel(&p).unwrap();
        let b = SelectionSchedule::one_hot(&[1, 4, 6], 8);
        let (rounded, feasible) = round_schedule(&b, &h_u, &p);
        assert_eq!(rounded.selected_positions(), vec![1, 4, 6]);
        assert!(feasible);
    }

    #[test]
    fn rounding_picks_dominant_entries() {
        let p = small_params(5, 2);
        let h_u = user_channel(&p).unwrap();
        let mut w = vec![0.02; 10];
        w[3] = 0.92; // slot 0 -> position 3
        w[5 + 1] = 0.92; // slot 1 -> position 1
        let relaxed = SelectionSchedule::from_weights(w, 2, 5, ScheduleMode::Relaxed);
        let (rounded, _) = round_schedule(&relaxed, &h_u, &p);
        assert_eq!(rounded.selected_positions(), vec![3, 1]);
        assert!(validate_schedule(&rounded, &p).unwrap().is_empty());
    }

    #[test]
    fn rounding_repairs_rate_with_swaps() {
        let mut p = small_params(8, 2);
        let h_u = user_channel(&p).unwrap();
        let rate_of: Vec<f64> = (0..8)
            .map(|m| {
                let mut row = vec![0.0; 8];
                row[m] = 1.0;
                channel::slot_rate(&row, &h_u, &p)
            })
            .collect();
        let mut order: Vec<usize> = (0..8).collect();
        order.sort_by(|&a, &b| rate_of[a].partial_cmp(&rate_of[b]).unwrap());
        let worst_two = [order[0], order[1]];
        let best_two_rate = rate_of[order[6]] + rate_of[order[7]];
        p.min_rate = best_two_rate - 1e-6;
        let relaxed = SelectionSchedule::one_hot(&worst_two, 8);
        let (rounded, feasible) = round_schedule(&relaxed, &h_u, &p);
        assert!(feasible);
        let achieved: f64 = channel::schedule_rates(&rounded, &h_u, &p).iter().sum();
        assert!(achieved >= p.min_rate - 1e-9);
        // and an impossible demand is flagged infeasible
        p.min_rate = best_two_rate + 1.0;
        let (_, infeasible_flagged) = round_schedule(&relaxed, &h_u, &p);
        assert!(!infeasible_flagged);
    }
}

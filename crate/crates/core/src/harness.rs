//! Experiment harness: config parsing, sweep execution, CSV emission, plot
//! script generation, and a cross-module self-check suite.
//!
//! CSV rows are produced in deterministic tuple order
//! `(scheme, T, R_min, power, seed)` and floating-point fields are printed
//! with nine significant digits, so identical invocations yield byte-
//! identical files. Wall-clock timing is off by default for the same reason
//! and can be switched on explicitly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::baselines::{self, BaselineSpec};
use crate::channel;
use crate::outage::{self, McSettings, RcsModel, SurrogateMode};
use crate::rng::SmallRng;
use crate::scenario::{self, SelectionSchedule, SystemParams};
use crate::sca::{self, ScaConfig};

pub const CSV_HEADER: &str = "scheme,surrogate_mode,T,M,rmin_bps_hz,pt_dbm,seed,outage_closed,\
outage_chernoff,chernoff_s,outage_mc,mc_stderr,rate_sum_bps_hz,feasible,sca_iters,\
selected_positions,wall_ms";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),
    #[error(transparent)]
    Sca(#[from] sca::ScaError),
    #[error(transparent)]
    Baseline(#[from] baselines::BaselineError),
    #[error(transparent)]
    Outage(#[from] outage::OutageError),
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error("config key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv is missing required column `{0}`")]
    MissingColumn(String),
    #[error("csv contains no data rows")]
    EmptyCsv,
}

/// Experiment scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Proposed,
    FixedPa,
    AntennaSelection,
    Oracle,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::FixedPa => "fixed_pa",
            Scheme::AntennaSelection => "antenna_selection",
            Scheme::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "proposed" => Some(Scheme::Proposed),
            "fixed_pa" => Some(Scheme::FixedPa),
            "antenna_selection" => Some(Scheme::AntennaSelection),
            "oracle" => Some(Scheme::Oracle),
            _ => None,
        }
    }
}

/// Sweep definition driving [`run`].
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub schemes: Vec<Scheme>,
    pub surrogate_mode: SurrogateMode,
    pub power_sweep_dbm: Vec<f64>,
    pub rmin_list: Vec<f64>,
    pub t_list: Vec<usize>,
    /// 0 disables Monte Carlo columns.
    pub mc_samples: u64,
    pub seeds: Vec<u64>,
    /// Echo model used to evaluate the two reference schemes.
    pub baseline_rcs: RcsModel,
    pub output_csv: Option<PathBuf>,
    /// Optional overrides of the optimizer defaults.
    pub rho0: Option<f64>,
    pub sca_eps: Option<f64>,
    /// Fill the wall_ms column (breaks byte-level determinism of the CSV).
    pub record_timing: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            schemes: vec![Scheme::Proposed],
            surrogate_mode: SurrogateMode::Corrected,
            power_sweep_dbm: vec![30.0],
            rmin_list: vec![0.5],
            t_list: vec![4],
            mc_samples: 0,
            seeds: vec![1],
            baseline_rcs: RcsModel::Correlated,
            output_csv: None,
            rho0: None,
            sca_eps: None,
            record_timing: false,
        }
    }
}

impl ExperimentSpec {
    pub fn sca_config(&self) -> ScaConfig {
        let mut cfg = ScaConfig {
            surrogate_mode: self.surrogate_mode,
            ..ScaConfig::default()
        };
        if let Some(rho0) = self.rho0 {
            cfg.penalty_init = rho0;
        }
        if let Some(eps) = self.sca_eps {
            cfg.sca_tolerance = eps;
        }
        cfg
    }

    /// Applies a harness-level key; `Ok(false)` means the key belongs to the
    /// scenario layer instead.
    pub fn try_set_key(&mut self, key: &str, value: &str) -> Result<bool, HarnessError> {
        let bad = |reason: String| HarnessError::BadValue {
            key: key.to_string(),
            reason,
        };
        let floats = |v: &str| -> Result<Vec<f64>, HarnessError> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| bad(format!("bad number `{s}`: {e}"))))
                .collect()
        };
        match key {
            "scheme" => {
                let mut schemes = Vec::new();
                for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    schemes.push(
                        Scheme::parse(part).ok_or_else(|| bad(format!("unknown scheme `{part}`")))?,
                    );
                }
                self.schemes = schemes;
            }
            "surrogate_mode" => {
                self.surrogate_mode = SurrogateMode::parse(value.trim())
                    .ok_or_else(|| bad(format!("unknown mode `{value}`")))?;
            }
            "rcs_model" => {
                self.baseline_rcs = RcsModel::parse(value.trim())
                    .ok_or_else(|| bad(format!("unknown model `{value}`")))?;
            }
            "mc_samples" => {
                self.mc_samples = value
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| bad(format!("not an integer: {e}")))?;
            }
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<u64>().map_err(|e| bad(format!("bad seed `{s}`: {e}"))))
                    .collect::<Result<_, _>>()?;
            }
            "power_sweep_dbm" => self.power_sweep_dbm = floats(value)?,
            "rmin_list" => self.rmin_list = floats(value)?,
            "t_list" => {
                self.t_list = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<usize>().map_err(|e| bad(format!("bad slot count `{s}`: {e}"))))
                    .collect::<Result<_, _>>()?;
            }
            "rho0" => {
                self.rho0 =
                    Some(value.trim().parse::<f64>().map_err(|e| bad(format!("{e}")))?);
            }
            "sca_eps" => {
                self.sca_eps =
                    Some(value.trim().parse::<f64>().map_err(|e| bad(format!("{e}")))?);
            }
            "output_csv" => self.output_csv = Some(PathBuf::from(value.trim())),
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Parses a combined harness + scenario config file.
pub fn parse_experiment_config(
    text: &str,
) -> Result<(SystemParams, ExperimentSpec), HarnessError> {
    let mut params = SystemParams::default();
    let mut spec = ExperimentSpec::default();
    apply_config_pairs(&mut params, &mut spec, &scenario::config_kv_lines(text)?)?;
    Ok((params, spec))
}

/// Applies `key = value` pairs on top of existing params/spec; used for both
/// config files and command-line overrides.
pub fn apply_config_pairs(
    params: &mut SystemParams,
    spec: &mut ExperimentSpec,
    pairs: &[(String, String)],
) -> Result<(), HarnessError> {
    for (key, value) in pairs {
        if !spec.try_set_key(key, value)? {
            params.set_key(key, value)?;
        }
    }
    params.rebuild_pa_grid();
    params.validate()?;
    Ok(())
}

/// Nine-significant-digit float formatting for stable CSV diffs.
fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

struct RowResult {
    outage_closed: f64,
    outage_chernoff: f64,
    chernoff_s: f64,
    mc_estimate: Option<f64>,
    mc_stderr: Option<f64>,
    rate_sum: f64,
    feasible: bool,
    sca_iters: usize,
    selected: Vec<usize>,
}

fn run_tuple(
    base: &SystemParams,
    spec: &ExperimentSpec,
    scheme: Scheme,
    t: usize,
    rmin: f64,
    power_dbm: f64,
    seed: u64,
) -> Result<RowResult, HarnessError> {
    let mut params = base.clone();
    params.num_slots = t;
    params.min_rate = rmin;
    params.transmit_power = scenario::dbm_to_watts(power_dbm);
    params.validate()?;
    let cfg = spec.sca_config();
    let mc = (spec.mc_samples > 0).then_some(McSettings {
        samples: spec.mc_samples,
        seed,
    });

    let (result, report) = match scheme {
        Scheme::Proposed => {
            let result = sca::optimize(&params, &cfg, seed)?;
            let h_target = channel::target_channel(&params)?;
            let report = outage::outage_report(
                &result.schedule,
                &h_target,
                &params,
                spec.surrogate_mode,
                RcsModel::Iid,
                mc,
            )?;
            (result, report)
        }
        Scheme::Oracle => {
            let result = baselines::exhaustive_oracle(&params)?;
            let h_target = channel::target_channel(&params)?;
            let report = outage::outage_report(
                &result.schedule,
                &h_target,
                &params,
                spec.surrogate_mode,
                RcsModel::Iid,
                mc,
            )?;
            (result, report)
        }
        Scheme::FixedPa => {
            let result = baselines::fixed_pa_baseline(&params, &cfg, spec.baseline_rcs)?;
            let h_target = channel::target_channel(&params)?;
            let report = outage::outage_report(
                &result.schedule,
                &h_target,
                &params,
                spec.surrogate_mode,
                spec.baseline_rcs,
                mc,
            )?;
            (result, report)
        }
        Scheme::AntennaSelection => {
            let result =
                baselines::antenna_selection_baseline(&params, &cfg, seed, spec.baseline_rcs)?;
            let bspec = BaselineSpec::antenna_selection(spec.baseline_rcs);
            let (_, h_target) = baselines::antenna_selection_channels(&params, &bspec);
            let report = outage::outage_report(
                &result.schedule,
                &h_target,
                &params,
                spec.surrogate_mode,
                spec.baseline_rcs,
                mc,
            )?;
            (result, report)
        }
    };

    Ok(RowResult {
        outage_closed: report.exact_cdf,
        outage_chernoff: report.chernoff_bound,
        chernoff_s: report.chernoff_s,
        mc_estimate: report.mc_estimate,
        mc_stderr: report.mc_stderr,
        rate_sum: result.achieved_rate,
        feasible: result.feasible,
        sca_iters: result.iterations,
        selected: result.schedule.selected_positions(),
    })
}

/// Executes every `(scheme, T, R_min, power, seed)` tuple of the spec and
/// returns the CSV text. Infeasible runs become rows with `feasible=false`,
/// not errors.
pub fn run(params: &SystemParams, spec: &ExperimentSpec) -> Result<String, HarnessError> {
    let mut csv = String::new();
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for &scheme in &spec.schemes {
        for &t in &spec.t_list {
            for &rmin in &spec.rmin_list {
                for &power in &spec.power_sweep_dbm {
                    for &seed in &spec.seeds {
                        let started = std::time::Instant::now();
                        let row = run_tuple(params, spec, scheme, t, rmin, power, seed)?;
                        let wall_ms = if spec.record_timing {
                            format!("{}", started.elapsed().as_millis())
                        } else {
                            String::new()
                        };
                        let selected = row
                            .selected
                            .iter()
                            .map(|m| (m + 1).to_string())
                            .collect::<Vec<_>>()
                            .join(";");
                        let _ = writeln!(
                            csv,
                            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                            scheme.as_str(),
                            spec.surrogate_mode.as_str(),
                            t,
                            params.num_positions,
                            fmt_float(rmin),
                            fmt_float(power),
                            seed,
                            fmt_float(row.outage_closed),
                            fmt_float(row.outage_chernoff),
                            fmt_float(row.chernoff_s),
                            fmt_opt(row.mc_estimate),
                            fmt_opt(row.mc_stderr),
                            fmt_float(row.rate_sum),
                            row.feasible,
                            row.sca_iters,
                            selected,
                            wall_ms,
                        );
                    }
                }
            }
        }
    }
    if let Some(path) = &spec.output_csv {
        std::fs::write(path, &csv).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(csv)
}

/// Generates a gnuplot script plotting outage versus transmit power with one
/// series per `(scheme, T)` pair found in the CSV.
pub fn emit_plot_script(csv_path: &Path) -> Result<String, HarnessError> {
    let text = std::fs::read_to_string(csv_path).map_err(|source| HarnessError::Io {
        path: csv_path.display().to_string(),
        source,
    })?;
    emit_plot_script_from_csv(&text, &csv_path.display().to_string())
}

pub fn emit_plot_script_from_csv(csv: &str, csv_name: &str) -> Result<String, HarnessError> {
    let mut lines = csv.lines();
    let header = lines.next().ok_or(HarnessError::EmptyCsv)?;
    let columns: Vec<&str> = header.split(',').collect();
    let col = |name: &str| -> Result<usize, HarnessError> {
        columns
            .iter()
            .position(|c| *c == name)
            .map(|i| i + 1) // gnuplot columns are 1-based
            .ok_or_else(|| HarnessError::MissingColumn(name.to_string()))
    };
    let c_scheme = col("scheme")?;
    let c_t = col("T")?;
    let c_power = col("pt_dbm")?;
    let c_outage = col("outage_closed")?;

    let mut series: Vec<(String, String)> = Vec::new(); // (scheme, T) in first-seen order
    let mut rows = 0usize;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < columns.len() {
            continue;
        }
        let key = (
            fields[c_scheme - 1].to_string(),
            fields[c_t - 1].to_string(),
        );
        if !series.contains(&key) {
            series.push(key);
        }
    }
    if rows == 0 || series.is_empty() {
        return Err(HarnessError::EmptyCsv);
    }

    let mut script = String::new();
    script.push_str("# outage probability versus transmit power\n");
    script.push_str("set datafile separator \",\"\n");
    script.push_str("set logscale y\n");
    script.push_str("set xlabel \"transmit power (dBm)\"\n");
    script.push_str("set ylabel \"radar outage probability\"\n");
    script.push_str("set key outside\n");
    script.push_str("set grid\n");
    script.push_str("plot \\\n");
    for (i, (scheme, t)) in series.iter().enumerate() {
        let cont = if i + 1 < series.len() { ", \\" } else { "" };
        let _ = writeln!(
            script,
            "  \"{csv_name}\" using {c_power}:(strcol({c_scheme}) eq \"{scheme}\" && \
             column({c_t}) == {t} ? column({c_outage}) : NaN) \
             with linespoints title \"{scheme} T={t}\"{cont}"
        );
    }
    Ok(script)
}

// ---------------------------------------------------------------------------
// Validation suite
// ---------------------------------------------------------------------------

/// Outcome of the cross-module invariant suite.
pub struct ValidationReport {
    pub checks: Vec<(String, Result<(), String>)>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|(_, r)| r.is_ok())
    }

    /// One `PASS`/`FAIL` line per property.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, result) in &self.checks {
            match result {
                Ok(()) => {
                    let _ = writeln!(out, "PASS {name}");
                }
                Err(msg) => {
                    let _ = writeln!(out, "FAIL {name}: {msg}");
                }
            }
        }
        out
    }
}

/// Runs the full invariant suite with sizes tuned for an interactive check.
pub fn validate() -> ValidationReport {
    let checks: Vec<(&str, fn() -> Result<(), String>)> = vec![
        ("default-params-invariants", check_default_params),
        ("schedule-validator", check_schedule_validator),
        ("channel-oracles", check_channel_oracles),
        ("rate-gradient-finite-difference", check_rate_gradient),
        ("hypoexp-closed-form-oracles", check_hypoexp_oracles),
        ("hypoexp-distinct-vs-robust", check_hypoexp_paths),
        ("chernoff-dominance", check_chernoff_dominance_default),
        ("chernoff-s-stationarity", check_chernoff_stationarity),
        ("mc-vs-closed-form", check_mc_agreement),
        ("mm-monotonicity", check_mm_monotonicity),
        ("optimizer-vs-oracle", check_optimizer_vs_oracle),
        ("baseline-ordering", check_baseline_ordering),
        ("sweep-determinism", check_sweep_determinism),
    ];
    ValidationReport {
        checks: checks
            .into_iter()
            .map(|(name, f)| (name.to_string(), f()))
            .collect(),
    }
}

fn check_default_params() -> Result<(), String> {
    let p = SystemParams::default();
    p.validate().map_err(|e| e.to_string())?;
    if p.num_slots > p.num_positions {
        return Err("defaults violate T <= M".into());
    }
    for w in p.pa_positions.windows(2) {
        if w[1].x <= w[0].x {
            return Err("PA grid not strictly increasing".into());
        }
    }
    Ok(())
}

fn check_schedule_validator() -> Result<(), String> {
    let p = SystemParams::default();
    let ok = SelectionSchedule::one_hot(&[0, 1, 2, 3], p.num_positions);
    if !scenario::validate_schedule(&ok, &p)
        .map_err(|e| e.to_string())?
        .is_empty()
    {
        return Err("one-hot schedule flagged infeasible".into());
    }
    let uniform = SelectionSchedule::uniform(p.num_slots, p.num_positions);
    if !scenario::validate_schedule(&uniform, &p)
        .map_err(|e| e.to_string())?
        .is_empty()
    {
        return Err("uniform schedule flagged infeasible".into());
    }
    let reused = SelectionSchedule::one_hot(&[3, 3, 3, 3], p.num_positions);
    if scenario::validate_schedule(&reused, &p)
        .map_err(|e| e.to_string())?
        .is_empty()
    {
        return Err("column reuse not reported".into());
    }
    Ok(())
}

fn check_channel_oracles() -> Result<(), String> {
    let p = SystemParams::default();
    let h_user = channel::user_channel(&p).map_err(|e| e.to_string())?;
    let h_target = channel::target_channel(&p).map_err(|e| e.to_string())?;
    for (m, pa) in p.pa_positions.iter().enumerate() {
        let expect_user = p.eta() * (-p.waveguide_attenuation * p.feed_pos.distance(pa)).exp()
            / p.user_pos.distance(pa);
        let expect_target = (-p.waveguide_attenuation * p.feed_pos.distance(pa)).exp()
            / p.target_pos.distance(pa);
        if (h_user.gains[m].norm() - expect_user).abs() > 1e-12 * expect_user {
            return Err(format!("user element {m} magnitude off"));
        }
        if (h_target.gains[m].norm() - expect_target).abs() > 1e-12 * expect_target {
            return Err(format!("target element {m} magnitude off"));
        }
    }
    Ok(())
}

fn check_rate_gradient() -> Result<(), String> {
    let p = SystemParams::default();
    let h = channel::user_channel(&p).map_err(|e| e.to_string())?;
    let mut rng = SmallRng::new(97);
    let step = 1e-6;
    for _ in 0..30 {
        let mut w: Vec<f64> = (0..p.num_positions).map(|_| rng.next_f64()).collect();
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= sum);
        let grad = channel::rate_gradient(&w, &h, &p);
        let scale = grad.iter().fold(0.0f64, |a, g| a.max(g.abs())).max(1e-12);
        for m in 0..p.num_positions {
            let mut lo = w.clone();
            let mut hi = w.clone();
            lo[m] -= step;
            hi[m] += step;
            let fd = (channel::slot_rate(&hi, &h, &p) - channel::slot_rate(&lo, &h, &p))
                / (2.0 * step);
            if (fd - grad[m]).abs() / scale > 1e-5 {
                return Err(format!(
                    "gradient component {m}: analytic {} vs fd {fd}",
                    grad[m]
                ));
            }
        }
    }
    Ok(())
}

fn check_hypoexp_oracles() -> Result<(), String> {
    let two = outage::hypoexp_cdf_distinct(&[1.0, 2.0], 1.0).map_err(|e| e.to_string())?;
    if (two - 0.3995764).abs() > 1e-7 {
        return Err(format!("distinct-path oracle value off: {two}"));
    }
    let erlang = outage::hypoexp_cdf_robust(&[1.0, 1.0], 1.0).map_err(|e| e.to_string())?;
    if (erlang - 0.2642411).abs() > 1e-7 {
        return Err(format!("robust-path Erlang value off: {erlang}"));
    }
    Ok(())
}

fn check_hypoexp_paths() -> Result<(), String> {
    let mut rng = SmallRng::new(11);
    let mut checked = 0;
    while checked < 200 {
        let t = 1 + rng.below(8);
        let rates: Vec<f64> = (0..t).map(|_| rng.log_range(1e-2, 1e2)).collect();
        let min_gap = {
            let mut min = f64::INFINITY;
            for i in 0..t {
                for j in i + 1..t {
                    min = min.min((rates[i] - rates[j]).abs() / rates[i].max(rates[j]));
                }
            }
            min
        };
        if min_gap < 1e-2 {
            continue;
        }
        let mean: f64 = rates.iter().map(|r| 1.0 / r).sum();
        let x = mean * rng.range(0.3, 1.5);
        let d = outage::hypoexp_cdf_distinct(&rates, x).map_err(|e| e.to_string())?;
        let r = outage::hypoexp_cdf_robust(&rates, x).map_err(|e| e.to_string())?;
        if (d - r).abs() > 1e-9 * d.max(r).max(1e-9) {
            return Err(format!("paths disagree: {d} vs {r} on {rates:?}"));
        }
        checked += 1;
    }
    Ok(())
}

/// Dominance of the corrected Chernoff bound over the exact CDF. The
/// `flip_sign` fixture evaluates the bound at a negated exponent, which must
/// make the check fail; it exists to prove the suite can detect a sign error.
pub(crate) fn check_chernoff_dominance(flip_sign: bool) -> Result<(), String> {
    let mut rng = SmallRng::new(13);
    for _ in 0..200 {
        let t = 1 + rng.below(8);
        let gains: Vec<f64> = (0..t).map(|_| rng.log_range(1e-3, 1e3)).collect();
        let threshold = rng.log_range(1e-2, 1e2);
        let rates: Vec<f64> = gains.iter().map(|&p| 1.0 / p).collect();
        let exact = outage::hypoexp_cdf_robust(&rates, threshold).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let s = rng.log_range(1e-4, 1e4);
            let log_bound = if flip_sign {
                -outage::chernoff_log_lower(s, &gains, 1.0, threshold)
            } else {
                outage::chernoff_log_lower(s, &gains, 1.0, threshold)
            };
            let bound = if log_bound >= 0.0 { 1.0 } else { log_bound.exp() };
            if bound < exact - 1e-9 {
                return Err(format!("bound {bound} below exact {exact} at s={s}"));
            }
        }
    }
    Ok(())
}

fn check_chernoff_dominance_default() -> Result<(), String> {
    check_chernoff_dominance(false)
}

fn check_chernoff_stationarity() -> Result<(), String> {
    let mut rng = SmallRng::new(17);
    for _ in 0..100 {
        let t = 1 + rng.below(8);
        let gains: Vec<f64> = (0..t).map(|_| rng.log_range(1e-3, 1e3)).collect();
        let threshold = rng.log_range(1e-2, 1e2);
        let (s, _) = outage::optimize_s(&gains, 1.0, threshold, SurrogateMode::Corrected);
        if s > 0.0 {
            let residual =
                threshold - gains.iter().map(|&p| p / (1.0 + s * p)).sum::<f64>();
            if residual.abs() > 1e-8 {
                return Err(format!("derivative residual {residual} at s={s}"));
            }
        } else if threshold < gains.iter().sum::<f64>() - 1e-9 {
            return Err("returned s*=0 although the mean exceeds the threshold".into());
        }
    }
    Ok(())
}

fn check_mc_agreement() -> Result<(), String> {
    let p = SystemParams::default();
    let h = channel::target_channel(&p).map_err(|e| e.to_string())?;
    let mut rng = SmallRng::new(23);
    let mut misses = 0;
    let trials = 30;
    for trial in 0..trials {
        let mut pt = p.clone();
        pt.transmit_power = scenario::dbm_to_watts(rng.range(5.0, 18.0));
        let picks = rng.sample_indices(p.num_positions, 4);
        let s = SelectionSchedule::one_hot(&picks, p.num_positions);
        let rates = outage::rates_from_schedule(&s, &h, &pt).map_err(|e| e.to_string())?;
        let exact = outage::hypoexp_cdf(rates.rates(), pt.snr_threshold)
            .map_err(|e| e.to_string())?
            .value;
        let (est, err) =
            outage::mc_outage(&s, &h, &pt, 100_000, 1000 + trial, RcsModel::Iid)
                .map_err(|e| e.to_string())?;
        if (est - exact).abs() > (3.29 * err).max(1e-4) {
            misses += 1;
        }
    }
    if misses > 1 {
        return Err(format!("{misses}/{trials} trials outside the 99.9% interval"));
    }
    Ok(())
}

fn check_mm_monotonicity() -> Result<(), String> {
    let mut rng = SmallRng::new(3);
    for _ in 0..2 {
        let mut p = SystemParams::default();
        p.num_positions = 8;
        p.num_slots = 3;
        p.pa_positions = SystemParams::uniform_pa_grid(p.waveguide_length, p.pa_height, 8);
        p.transmit_power = scenario::dbm_to_watts(rng.range(8.0, 16.0));
        p.min_rate = 0.5;
        let cfg = ScaConfig::default();
        let h_u = channel::user_channel(&p).map_err(|e| e.to_string())?;
        let h_e = channel::target_channel(&p).map_err(|e| e.to_string())?;
        let b0 = SelectionSchedule::uniform(3, 8);
        let gains =
            channel::schedule_sensing_gains(&b0, &h_e, &p).map_err(|e| e.to_string())?;
        let (s_opt, _) =
            outage::optimize_s(&gains, p.rcs_mean, p.snr_threshold, SurrogateMode::Corrected);
        let s = if s_opt > 0.0 { s_opt } else { 1e-2 };
        let inner =
            sca::sca_inner(s, &b0, 1e-2, &cfg, &h_u, &h_e, &p).map_err(|e| e.to_string())?;
        for w in inner.trace.windows(2) {
            if w[1] > w[0] + 1e-8 {
                return Err(format!("trace increased {} -> {}", w[0], w[1]));
            }
        }
        if inner.iterations >= cfg.max_sca_iters {
            return Err("inner loop failed to converge".into());
        }
    }
    Ok(())
}

fn check_optimizer_vs_oracle() -> Result<(), String> {
    let mut rng = SmallRng::new(29);
    for _ in 0..3 {
        let mut p = SystemParams::default();
        p.num_positions = 8;
        p.num_slots = 3;
        p.pa_positions = SystemParams::uniform_pa_grid(p.waveguide_length, p.pa_height, 8);
        p.transmit_power = scenario::dbm_to_watts(rng.range(8.0, 16.0));
        p.min_rate = 0.0;
        let cfg = ScaConfig::default();
        let opt = sca::optimize(&p, &cfg, 0).map_err(|e| e.to_string())?;
        let oracle = baselines::exhaustive_oracle(&p).map_err(|e| e.to_string())?;
        if opt.exact_outage < oracle.exact_outage - 1e-12 {
            return Err("optimizer beat the exhaustive oracle (impossible)".into());
        }
    }
    Ok(())
}

fn check_baseline_ordering() -> Result<(), String> {
    let mut p = SystemParams::default();
    p.transmit_power = scenario::dbm_to_watts(15.0);
    p.min_rate = 0.5;
    let cfg = ScaConfig::default();
    let proposed = sca::optimize(&p, &cfg, 0).map_err(|e| e.to_string())?;
    let fixed =
        baselines::fixed_pa_baseline(&p, &cfg, RcsModel::Correlated).map_err(|e| e.to_string())?;
    let selection = baselines::antenna_selection_baseline(&p, &cfg, 0, RcsModel::Correlated)
        .map_err(|e| e.to_string())?;
    if proposed.exact_outage > fixed.exact_outage + 1e-12 {
        return Err(format!(
            "proposed {} worse than fixed {}",
            proposed.exact_outage, fixed.exact_outage
        ));
    }
    if fixed.exact_outage > selection.exact_outage + 1e-12 {
        return Err(format!(
            "fixed {} worse than antenna selection {}",
            fixed.exact_outage, selection.exact_outage
        ));
    }
    Ok(())
}

fn check_sweep_determinism() -> Result<(), String> {
    let mut params = SystemParams::default();
    params.num_positions = 8;
    params.pa_positions = SystemParams::uniform_pa_grid(10.0, 3.0, 8);
    let spec = ExperimentSpec {
        schemes: vec![Scheme::Proposed, Scheme::FixedPa],
        t_list: vec![2],
        power_sweep_dbm: vec![12.0],
        mc_samples: 10_000,
        ..ExperimentSpec::default()
    };
    let a = run(&params, &spec).map_err(|e| e.to_string())?;
    let b = run(&params, &spec).map_err(|e| e.to_string())?;
    if a != b {
        return Err("two identical runs produced different CSV bytes".into());
    }
    Ok(())
}

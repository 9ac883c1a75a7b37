//! Command-line harness: single runs, sweeps, the self-check suite, and
//! plot-script generation.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 validation failure.

use std::path::PathBuf;
use std::process::ExitCode;

use pa_isac::harness::{self, ExperimentSpec};
use pa_isac::scenario::{self, SystemParams};

const USAGE: &str = "\
pa-isac — pinching-antenna ISAC scheduling experiments

USAGE:
    pa-isac run    [--config FILE] [--set KEY=VALUE]... [--out FILE] [--timing]
    pa-isac sweep  [--config FILE] [--set KEY=VALUE]... [--out FILE] [--timing]
    pa-isac validate
    pa-isac plot-script --csv FILE [--out FILE]
    pa-isac help

`run` and `sweep` execute every (scheme, T, R_min, power, seed) tuple of the
experiment spec and emit one CSV row per tuple (to stdout unless an output
file is configured). Config files hold one `KEY = VALUE` per line; `--set`
applies the same keys on top. `validate` runs the cross-module invariant
suite and prints one PASS/FAIL line per property.";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

struct SweepArgs {
    config_path: Option<PathBuf>,
    overrides: Vec<(String, String)>,
    out: Option<PathBuf>,
    timing: bool,
}

fn parse_sweep_args(args: &[String]) -> Result<SweepArgs, String> {
    let mut parsed = SweepArgs {
        config_path: None,
        overrides: Vec::new(),
        out: None,
        timing: false,
    };
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                let value = it.next().ok_or("--config expects a path")?;
                parsed.config_path = Some(PathBuf::from(value));
            }
            "--set" => {
                let value = it.next().ok_or("--set expects KEY=VALUE")?;
                let (key, val) = value
                    .split_once('=')
                    .ok_or_else(|| format!("--set `{value}` is not KEY=VALUE"))?;
                parsed
                    .overrides
                    .push((key.trim().to_string(), val.trim().to_string()));
            }
            "--out" => {
                let value = it.next().ok_or("--out expects a path")?;
                parsed.out = Some(PathBuf::from(value));
            }
            "--timing" => parsed.timing = true,
            other => return Err(format!("unknown option `{other}`")),
        }
    }
    Ok(parsed)
}

fn load_spec(args: &SweepArgs) -> Result<(SystemParams, ExperimentSpec), String> {
    let mut params = SystemParams::default();
    let mut spec = ExperimentSpec::default();
    if let Some(path) = &args.config_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let pairs = scenario::config_kv_lines(&text).map_err(|e| e.to_string())?;
        harness::apply_config_pairs(&mut params, &mut spec, &pairs).map_err(|e| e.to_string())?;
    }
    if !args.overrides.is_empty() {
        harness::apply_config_pairs(&mut params, &mut spec, &args.overrides)
            .map_err(|e| e.to_string())?;
    }
    if let Some(out) = &args.out {
        spec.output_csv = Some(out.clone());
    }
    spec.record_timing = args.timing;
    Ok((params, spec))
}

fn dispatch(args: &[String]) -> Result<ExitCode, String> {
    let Some(command) = args.first() else {
        eprintln!("{USAGE}");
        return Ok(ExitCode::from(1));
    };
    match command.as_str() {
        "run" | "sweep" => {
            let sweep_args = parse_sweep_args(&args[1..])?;
            let (params, spec) = load_spec(&sweep_args)?;
            let csv = harness::run(&params, &spec).map_err(|e| e.to_string())?;
            match &spec.output_csv {
                None => print!("{csv}"),
                Some(path) => eprintln!(
                    "wrote {} rows to {}",
                    csv.lines().count().saturating_sub(1),
                    path.display()
                ),
            }
            Ok(ExitCode::SUCCESS)
        }
        "validate" => {
            let report = harness::validate();
            print!("{}", report.render());
            if report.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        "plot-script" => {
            let mut csv_path: Option<PathBuf> = None;
            let mut out: Option<PathBuf> = None;
            let mut it = args[1..].iter();
            while let Some(arg) = it.next() {
                match arg.as_str() {
                    "--csv" => {
                        csv_path = Some(PathBuf::from(it.next().ok_or("--csv expects a path")?))
                    }
                    "--out" => {
                        out = Some(PathBuf::from(it.next().ok_or("--out expects a path")?))
                    }
                    other => return Err(format!("unknown option `{other}`")),
                }
            }
            let csv_path = csv_path.ok_or("plot-script requires --csv FILE")?;
            let script = harness::emit_plot_script(&csv_path).map_err(|e| e.to_string())?;
            match out {
                Some(path) => std::fs::write(&path, script)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => print!("{script}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(ExitCode::SUCCESS)
        }
        other => Err(format!("unknown command `{other}`; try `pa-isac help`")),
    }
}

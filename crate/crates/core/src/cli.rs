//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 usage error, 4 a claim check failed.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::control::{
    build_h2_pulse_train, build_method1, build_method2, build_pang_control, transition_probability, ControlLabel,
    ControlSequence,
};
use crate::dynamics::{evolve_sampled, HamiltonianKind, HamiltonianSpec, Snapshot};
use crate::error::Error;
use crate::experiments::{
    evaluate_claims, format_float, linear_grid, run_scenario, CurveDataset, ExperimentConfig, Scenario, SlotTrain,
};
use crate::fisher::{closed_form_fi, FormulaId, FormulaParams};
use crate::su2::{Axis3, QubitState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_CLAIMS: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qfi-lab", version, about = "Frequency-sensing simulator and Fisher-information toolkit")]
struct Cli {
    /// Worker threads for grid evaluation (0 = one per core).
    #[arg(long, global = true, env = "QFI_LAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the datasets of one figure as CSV plus a JSON manifest.
    Figure {
        /// fig1a, fig1b, fig3 or fig4.
        scenario: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Midpoint steps per integration segment.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Evaluate every quantitative check and write a JSON report.
    Claims {
        /// Report path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a metric over one or two parameter axes.
    Sweep {
        #[arg(long, value_enum)]
        metric: Metric,
        /// `name=start:end:count`, linear and inclusive; repeat for a second axis.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the propagator of a single run at evenly spaced times.
    Simulate {
        #[arg(long, value_enum, default_value = "h1")]
        hamiltonian: KindArg,
        #[arg(long, value_enum, default_value = "none")]
        control: ControlArg,
        #[arg(long, default_value_t = 1.0)]
        rabi: f64,
        /// Signal frequency as seen in the control frame (δ for method 2).
        #[arg(long, default_value_t = 0.0)]
        frequency: f64,
        /// Control reference frequency ω′.
        #[arg(long, default_value_t = 0.0)]
        reference: f64,
        /// Method-1 pulse interval.
        #[arg(long, default_value_t = 0.01)]
        interval: f64,
        #[arg(long)]
        time: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Midpoint steps between consecutive samples.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    /// Peak-to-peak transition probability of a method-2 train.
    OscillationAmplitude,
    /// Segmented H2 total FI (exact window sum).
    TotalFi,
    /// Segmented total FI without control.
    NoControlFi,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::OscillationAmplitude => "oscillation_amplitude",
            Metric::TotalFi => "total_fi",
            Metric::NoControlFi => "no_control_fi",
        }
    }

    fn axes(self) -> &'static [&'static str] {
        match self {
            Metric::OscillationAmplitude => &["interval", "divisor", "detuning", "rabi"],
            Metric::TotalFi => &["tau", "detuning", "time", "rabi"],
            Metric::NoControlFi => &["tau", "frequency", "time", "rabi"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    H1,
    H2,
    EffectiveLinearY,
    EffectiveLinearZ,
    ZDrift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ControlArg {
    None,
    Pang,
    Method1,
    Method2,
    H2Train,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        };
        Self { code, message: e.to_string() }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError { code: EXIT_RUNTIME, message: e.to_string() })?;
    pool.install(|| match cli.command {
        Command::Figure { scenario, config, out, steps } => cmd_figure(&scenario, config.as_deref(), &out, steps),
        Command::Claims { out } => cmd_claims(out.as_deref()),
        Command::Sweep { metric, axes, config, out } => cmd_sweep(metric, &axes, config.as_deref(), out.as_deref()),
        Command::Simulate { hamiltonian, control, rabi, frequency, reference, interval, time, samples, steps, out } => {
            let opts = SimulateOptions { hamiltonian, control, rabi, frequency, reference, interval, time, samples, steps };
            cmd_simulate(&opts, out.as_deref())
        }
    })
}

fn config_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError { code: EXIT_CONFIG, message: format!("{}: {e}", path.display()) }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| config_error(p, e))?;
            ExperimentConfig::from_json(&text).map_err(|e| config_error(p, e))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::from)?;
    }
    fs::write(path, contents).map_err(|e| CliError::from(Error::from(e)))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn column_docs(ds: &CurveDataset) -> serde_json::Value {
    let x_doc = match ds.x_label.as_str() {
        "t" => "evolution time in units of 1/Ω",
        "delta" => "detuning δ in units of Ω",
        _ => "abscissa",
    };
    let y_doc = match ds.y_label.as_str() {
        "fi" => "Fisher information about the signal frequency in units of 1/Ω²",
        "probability" => "transition probability after the pulse ending at t",
        _ => "ordinate",
    };
    json!([
        { "name": ds.x_label, "description": x_doc },
        { "name": "series", "description": "curve label" },
        { "name": ds.y_label, "description": y_doc },
    ])
}

fn cmd_figure(scenario: &str, config: Option<&Path>, out: &Path, steps: Option<usize>) -> Result<i32, CliError> {
    let scenario: Scenario = scenario.parse().map_err(|e: Error| CliError::usage(e.to_string()))?;
    let mut cfg = load_config(config)?;
    if let Some(s) = cfg.scenario.filter(|&s| s != scenario) {
        return Err(CliError { code: EXIT_CONFIG, message: format!("config is for {s}, not {scenario}") });
    }
    cfg.scenario = Some(scenario);
    if steps.is_some() {
        cfg.steps = steps;
    }
    cfg.validate()?;
    let datasets = run_scenario(&cfg, scenario)?;

    let canonical = cfg.canonical_json();
    let mut outputs = Vec::new();
    for ds in &datasets {
        let file = format!("{}.csv", ds.panel);
        write_file(&out.join(&file), &ds.to_csv())?;
        outputs.push(json!({
            "file": file,
            "panel": ds.panel,
            "columns": column_docs(ds),
            "series": ds.series.iter().map(|s| s.label.as_str()).collect::<Vec<_>>(),
            "params": ds.params,
            "formulas": ds.formulas,
            "notes": ds.notes,
        }));
    }
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": scenario.as_str(),
        "config": serde_json::from_str::<serde_json::Value>(&canonical).expect("canonical config is JSON"),
        "config_sha256": sha256_hex(&canonical),
        "units": cfg.units.clone().unwrap_or_else(|| "frequencies in units of Ω, times in units of 1/Ω".into()),
        "outputs": outputs,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&out.join(format!("{scenario}.manifest.json")), &text)?;
    for ds in &datasets {
        println!("{}", out.join(format!("{}.csv", ds.panel)).display());
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ClaimsReport {
    version: &'static str,
    pass: bool,
    claims: Vec<crate::experiments::Claim>,
}

fn cmd_claims(out: Option<&Path>) -> Result<i32, CliError> {
    let claims = evaluate_claims();
    let pass = claims.iter().all(|c| c.pass);
    for c in &claims {
        eprintln!(
            "{:<28} {:>12.6} {:>14.8} dev {:.2e} tol {:.2e} {}",
            c.id,
            c.reference_value,
            c.computed,
            c.rel_deviation,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let report = ClaimsReport { version: env!("CARGO_PKG_VERSION"), pass, claims };
    emit(out, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    Ok(if pass { EXIT_OK } else { EXIT_CLAIMS })
}

#[derive(Debug, Clone, PartialEq)]
struct Axis {
    name: String,
    values: Vec<f64>,
}

fn parse_axis(spec: &str, allowed: &[&str]) -> Result<Axis, CliError> {
    let bad = || CliError::usage(format!("axis `{spec}` is not of the form name=start:end:count"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    if !allowed.contains(&name) {
        return Err(CliError::usage(format!("unknown axis `{name}` (expected one of {})", allowed.join(", "))));
    }
    let parts: Vec<&str> = range.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !(a.is_finite() && b.is_finite()) || b < a || (n > 1 && a == b) {
        return Err(CliError::usage(format!("axis `{name}` has an empty grid")));
    }
    let values = if n == 1 { vec![a] } else { (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect() };
    Ok(Axis { name: name.to_string(), values })
}

/// Base parameters of a sweep point; axes override fields by name.
#[derive(Debug, Clone, Copy)]
struct SweepPoint {
    rabi: f64,
    detuning: f64,
    frequency: f64,
    interval: f64,
    tau: f64,
    time: f64,
}

impl SweepPoint {
    fn from_config(metric: Metric, cfg: &ExperimentConfig) -> Self {
        let rabi = cfg.rabi.unwrap_or(1.0);
        let first = |v: &Option<Vec<f64>>| v.as_ref().map(|v| v[0]);
        let (detuning, time) = match metric {
            Metric::OscillationAmplitude => (1e-3 * rabi, 600.0 / rabi),
            Metric::TotalFi | Metric::NoControlFi => (0.1 * rabi, 2000.0 / rabi),
        };
        Self {
            rabi,
            detuning: first(&cfg.detunings).unwrap_or(detuning),
            frequency: cfg.frequency.unwrap_or(0.0),
            interval: cfg.slot_interval.unwrap_or(std::f64::consts::FRAC_PI_2 / rabi),
            tau: first(&cfg.taus).unwrap_or(1.0 / rabi),
            time: cfg.coherence_time.or(cfg.time_range.map(|r| r[1])).unwrap_or(time),
        }
    }

    fn set(&mut self, axis: &str, v: f64) {
        match axis {
            "rabi" => self.rabi = v,
            "detuning" => self.detuning = v,
            "frequency" => self.frequency = v,
            "interval" => self.interval = v,
            "divisor" => self.interval = std::f64::consts::PI / (v * self.rabi),
            "tau" => self.tau = v,
            "time" => self.time = v,
            _ => unreachable!("axis names are validated"),
        }
    }

    fn evaluate(&self, metric: Metric) -> Result<f64, Error> {
        let params = FormulaParams {
            rabi: self.rabi,
            frequency: self.frequency,
            detuning: self.detuning,
            time: self.time,
            tau: self.tau,
            k: 0,
        };
        match metric {
            Metric::OscillationAmplitude => {
                if !(self.interval > 0.0 && self.time >= self.interval) {
                    return Err(Error::invalid("need 0 < interval ≤ time"));
                }
                let slots = (self.time / self.interval).floor() as usize;
                let train = SlotTrain::new(self.rabi, self.detuning, self.interval, Some(Axis3::X));
                let (psi, out) = (QubitState::down_x(), QubitState::up_x());
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                train.for_each(slots, |s| {
                    let p = s.probability(&psi, &out);
                    lo = lo.min(p);
                    hi = hi.max(p);
                });
                Ok(hi - lo)
            }
            Metric::TotalFi => Ok(closed_form_fi(FormulaId::H2SegmentedSum, &params)?.value),
            Metric::NoControlFi => Ok(closed_form_fi(FormulaId::SegmentedNoControl, &params)?.value),
        }
    }
}

fn cmd_sweep(metric: Metric, specs: &[String], config: Option<&Path>, out: Option<&Path>) -> Result<i32, CliError> {
    if specs.len() > 2 {
        return Err(CliError::usage(format!("at most two sweep axes, got {}", specs.len())));
    }
    let axes: Vec<Axis> = specs.iter().map(|s| parse_axis(s, metric.axes())).collect::<Result<_, _>>()?;
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(CliError::usage("sweep axes must differ"));
    }
    let cfg = load_config(config)?;
    let base = SweepPoint::from_config(metric, &cfg);

    let mut grid: Vec<Vec<f64>> = axes[0].values.iter().map(|&v| vec![v]).collect();
    if let Some(second) = axes.get(1) {
        grid = grid.into_iter().flat_map(|p| second.values.iter().map(move |&v| vec![p[0], v])).collect();
    }
    let values: Vec<Result<f64, Error>> = grid
        .par_iter()
        .map(|coords| {
            let mut p = base;
            for (axis, &v) in axes.iter().zip(coords) {
                p.set(&axis.name, v);
            }
            p.evaluate(metric)
        })
        .collect();

    let mut csv = String::new();
    for a in &axes {
        csv.push_str(&a.name);
        csv.push(',');
    }
    csv.push_str(metric.name());
    csv.push('\n');
    for (coords, value) in grid.iter().zip(values) {
        let value = value?;
        for &c in coords {
            csv.push_str(&format_float(c));
            csv.push(',');
        }
        csv.push_str(&format_float(value));
        csv.push('\n');
    }
    emit(out, &csv)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy)]
struct SimulateOptions {
    hamiltonian: KindArg,
    control: ControlArg,
    rabi: f64,
    frequency: f64,
    reference: f64,
    interval: f64,
    time: f64,
    samples: usize,
    steps: Option<usize>,
}

fn spec_for(kind: KindArg, rabi: f64, frequency: f64) -> HamiltonianSpec {
    let kind = match kind {
        KindArg::H1 => HamiltonianKind::H1,
        KindArg::H2 => HamiltonianKind::H2,
        KindArg::EffectiveLinearY => HamiltonianKind::EffectiveLinearY,
        KindArg::EffectiveLinearZ => HamiltonianKind::EffectiveLinearZ,
        KindArg::ZDrift => return HamiltonianSpec::z_drift(frequency),
    };
    HamiltonianSpec { kind, rabi, frequency, phase: 0.0, drift: 0.0 }
}

fn simulate_snapshots(o: &SimulateOptions) -> Result<Vec<Snapshot>, Error> {
    if o.samples == 0 || !(o.time > 0.0 && o.time.is_finite()) {
        return Err(Error::invalid("need time > 0 and at least one sample"));
    }
    let times = linear_grid(0.0, o.time, o.samples);
    let max_step = o.time / (o.samples * o.steps.unwrap_or(200).max(1)) as f64;
    let spec = spec_for(o.hamiltonian, o.rabi, o.frequency);
    spec.validate()?;
    let seq = match o.control {
        ControlArg::None => ControlSequence::new(o.reference, Vec::new(), ControlLabel::None)?,
        ControlArg::Method1 => build_method1(o.rabi, o.reference, o.interval, o.time)?,
        ControlArg::Method2 => build_method2(o.rabi, 0, o.time)?,
        ControlArg::H2Train => build_h2_pulse_train(o.reference, o.time)?,
        ControlArg::Pang => {
            if o.hamiltonian != KindArg::H1 {
                return Err(Error::invalid("pang control applies to the h1 signal"));
            }
            let pang = build_pang_control(o.rabi, o.reference, o.time)?;
            let drive = pang.drive(o.frequency - o.reference);
            return evolve_sampled(&drive, &pang.sequence, &times, max_step, false);
        }
    };
    evolve_sampled(&spec, &seq, &times, max_step, false)
}

fn cmd_simulate(o: &SimulateOptions, out: Option<&Path>) -> Result<i32, CliError> {
    let snaps = simulate_snapshots(o)?;
    let mut csv = String::from("t,u00_re,u00_im,u01_re,u01_im,u10_re,u10_im,u11_re,u11_im,p_x,p_z\n");
    let (dx, ux, uz, dz) = (QubitState::down_x(), QubitState::up_x(), QubitState::up_z(), QubitState::down_z());
    for s in &snaps {
        let m = s.unitary.matrix();
        let mut row = vec![format_float(s.time)];
        for z in [m.m[0][0], m.m[0][1], m.m[1][0], m.m[1][1]] {
            row.push(format_float(z.re));
            row.push(format_float(z.im));
        }
        row.push(format_float(transition_probability(&s.unitary, &dx, &ux)));
        row.push(format_float(transition_probability(&s.unitary, &uz, &dz)));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    emit(out, &csv)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a = parse_axis("tau=1:3:3", &["tau"]).unwrap();
        assert_eq!(a.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_axis("tau=1:3:0", &["tau"]).unwrap_err().code, EXIT_USAGE);
        assert_eq!(parse_axis("tau=3:1:4", &["tau"]).unwrap_err().code, EXIT_USAGE);
        assert_eq!(parse_axis("x=1:3:4", &["tau"]).unwrap_err().code, EXIT_USAGE);
        assert_eq!(parse_axis("tau:1:3", &["tau"]).unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn usage_exit_codes() {
        assert_eq!(run(["qfi-lab", "figure", "fig9"]), EXIT_USAGE);
        assert_eq!(run(["qfi-lab", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["qfi-lab", "--help"]), EXIT_OK);
        let three = ["qfi-lab", "sweep", "--metric", "total-fi", "--axis", "tau=1:2:2", "--axis", "time=10:20:2", "--axis", "rabi=1:2:2"];
        assert_eq!(run(three), EXIT_USAGE);
    }

    #[test]
    fn missing_config_is_config_error() {
        assert_eq!(run(["qfi-lab", "figure", "fig1a", "--config", "/nonexistent/cfg.json"]), EXIT_CONFIG);
    }
}

//! Figure datasets, claim checks and the two-time optimization.

mod claims;
mod figures;
mod slots;
mod two_time;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use claims::{evaluate_claims, Claim};
pub use figures::{h2_rwa_lifetime, run_fig1, run_fig3, run_fig4, run_scenario, LifetimeReport};
pub use slots::{SlotSample, SlotTrain};
pub use two_time::{optimize_two_times, ProbeModel, TwoTimeOptimum, NUISANCE_PHASE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig1a,
    Fig1b,
    Fig3,
    Fig4,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Fig1a, Scenario::Fig1b, Scenario::Fig3, Scenario::Fig4];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Fig1a => "fig1a",
            Scenario::Fig1b => "fig1b",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scenario `{s}` (expected fig1a, fig1b, fig3 or fig4)")))
    }
}

/// Experiment parameters. Frequencies are in units of Ω and times in 1/Ω;
/// any field left out takes the scenario default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-text unit convention, carried into manifests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<f64>,
    /// Signal frequency ω.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    /// Control frequency ω′.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detunings: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    /// Pulse intervals as divisors `d` in `Δt = π/(dΩ)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_divisors: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_range: Option<[f64; 2]>,
    /// Samples per series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Method-1 pulse interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_interval: Option<f64>,
    /// Signal coherence time; documentation only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence_time: Option<f64>,
    /// Midpoint steps per integration segment, where a run integrates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self { scenario: Some(scenario), ..Default::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            let text = e.to_string();
            let what = text.split(" at line ").next().unwrap_or(&text);
            Error::Config(format!("line {}, column {}: {what}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        let scalars = [self.rabi, self.frequency, self.reference, self.phase, self.slot_interval, self.coherence_time];
        if scalars.iter().flatten().any(|x| !x.is_finite()) {
            return bad("numeric fields must be finite");
        }
        if self.rabi.is_some_and(|x| x <= 0.0) {
            return bad("rabi must be positive");
        }
        if self.slot_interval.is_some_and(|x| x <= 0.0) {
            return bad("slot_interval must be positive");
        }
        for (name, list) in [("detunings", &self.detunings), ("taus", &self.taus), ("interval_divisors", &self.interval_divisors)] {
            if let Some(v) = list {
                if v.is_empty() {
                    return bad(&format!("{name} must not be empty"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return bad(&format!("{name} must be finite"));
                }
            }
        }
        if self.taus.as_ref().is_some_and(|v| v.iter().any(|&x| x <= 0.0)) {
            return bad("taus must be positive");
        }
        if self.interval_divisors.as_ref().is_some_and(|v| v.iter().any(|&x| x <= 0.0)) {
            return bad("interval_divisors must be positive");
        }
        for (name, range) in [("time_range", self.time_range), ("detuning_range", self.detuning_range)] {
            if let Some([a, b]) = range {
                if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) {
                    return bad(&format!("{name} must satisfy 0 ≤ start < end"));
                }
            }
        }
        if self.points.is_some_and(|n| n < 2) {
            return bad("points must be at least 2");
        }
        if self.steps.is_some_and(|n| n == 0) {
            return bad("steps must be positive");
        }
        Ok(())
    }

    /// Canonical JSON text: sorted keys, no whitespace.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        canonicalize(&value).to_string()
    }
}

fn canonicalize(v: &serde_json::Value) -> serde_json::Value {
    match v {
        serde_json::Value::Object(map) => {
            let sorted: serde_json::Map<String, serde_json::Value> = map
                .iter()
                .collect::<BTreeMap<_, _>>()
                .into_iter()
                .map(|(k, v)| (k.clone(), canonicalize(v)))
                .collect();
            serde_json::Value::Object(sorted)
        }
        serde_json::Value::Array(a) => serde_json::Value::Array(a.iter().map(canonicalize).collect()),
        other => other.clone(),
    }
}

/// One labelled curve; `x` is strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::invalid("series x values must be strictly increasing"));
        }
        Ok(Self { label: label.into(), points })
    }

    pub fn from_fn(label: impl Into<String>, xs: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(label, xs.iter().map(|&x| (x, f(x))).collect())
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }
}

/// Curves of one figure panel plus the metadata needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveDataset {
    pub scenario: Scenario,
    pub panel: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub params: BTreeMap<String, f64>,
    pub formulas: Vec<String>,
    pub notes: Vec<String>,
}

impl CurveDataset {
    pub fn new(scenario: Scenario, panel: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            scenario,
            panel: panel.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
            params: BTreeMap::new(),
            formulas: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn series(&self, label: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.label == label)
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// Long-format CSV: `x,series,y`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},series,{}\n", self.x_label, self.y_label);
        for s in &self.series {
            for &(x, y) in &s.points {
                out.push_str(&format!("{},{},{}\n", format_float(x), s.label, format_float(y)));
            }
        }
        out
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Least-squares slope of `ln y` against `ln x` over `x ∈ [lo, hi]`.
pub fn fit_scaling_exponent(series: &Series, window: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .copied()
        .filter(|&(x, _)| x >= window.0 && x <= window.1)
        .collect();
    if pts.len() < 2 {
        return Err(Error::invalid("need at least two points in the fit window"));
    }
    if pts.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::invalid("log-log fit needs positive x and y"));
    }
    let n = pts.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit window has a single distinct x"));
    }
    Ok(sxy / sxx)
}

/// First `x` at which `y < fraction·reference(x)`, if any.
pub fn first_drop_below<F: Fn(f64) -> f64>(series: &Series, reference: F, fraction: f64) -> Option<f64> {
    series.points.iter().find(|&&(x, y)| y < fraction * reference(x)).map(|p| p.0)
}

/// `n` evenly spaced points in `(a, b]` (excludes `a` when it is zero).
pub fn linear_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if a == 0.0 {
        (1..=n).map(|i| b * i as f64 / n as f64).collect()
    } else {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }
}

/// `n` log-spaced points in `[a, b]`, `a > 0`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_exponent() {
        let xs = log_grid(0.5, 20.0, 50);
        let s = Series::from_fn("q", &xs, |x| 3.0 * x.powi(4)).unwrap();
        assert!((fit_scaling_exponent(&s, (0.0, 100.0)).unwrap() - 4.0).abs() < 1e-9);
        let bad = Series::new("z", vec![(1.0, 0.0), (2.0, 1.0)]).unwrap();
        assert!(fit_scaling_exponent(&bad, (0.0, 10.0)).is_err());
    }

    #[test]
    fn series_requires_increasing_x() {
        assert!(Series::new("a", vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::from_json(r#"{"scenario": "fig3", "rabi": 1.0, "points": 10}"#).unwrap();
        assert_eq!(cfg.scenario, Some(Scenario::Fig3));
        let err = ExperimentConfig::from_json("{\n  \"rabi\": 1.0,\n  \"bogus\": 2\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(ExperimentConfig::from_json(r#"{"points": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"taus": []}"#).is_err());
    }

    #[test]
    fn canonical_json_is_order_independent() {
        let a = ExperimentConfig::from_json(r#"{"rabi": 1.0, "frequency": 0.02}"#).unwrap();
        let b = ExperimentConfig::from_json(r#"{"frequency": 0.02, "rabi": 1.0}"#).unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json());
    }

    #[test]
    fn csv_format() {
        let mut d = CurveDataset::new(Scenario::Fig1a, "fig1a", "t", "fi");
        d.series.push(Series::new("bound", vec![(1.0, 4.0)]).unwrap());
        assert_eq!(d.to_csv(), "t,series,fi\n1.0000000000000000e0,bound,4.0000000000000000e0\n");
    }
}

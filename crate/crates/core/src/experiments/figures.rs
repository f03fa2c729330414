use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::slots::{SlotSample, SlotTrain};
use super::{first_drop_below, linear_grid, log_grid, CurveDataset, ExperimentConfig, Scenario, Series};
use crate::dynamics::{propagate_piecewise_with_derivative, HamiltonianSpec, TimeGrid};
use crate::error::{Error, Result};
use crate::fisher::{closed_form_fi, generator_from_derivative, qfi_max, qfi_upper_bound, FormulaId, FormulaParams};
use crate::su2::{Axis3, QubitState};

const FIG1_FREQUENCY: f64 = 0.02;
const METHOD1_INTERVAL: f64 = 0.01;

fn closed(id: FormulaId, p: FormulaParams) -> f64 {
    closed_form_fi(id, &p).map(|r| r.value).unwrap_or(f64::NAN)
}

fn slot_counts(times: &[f64], interval: f64) -> Vec<usize> {
    let mut counts: Vec<usize> = times.iter().map(|t| ((t / interval).round() as usize).max(1)).collect();
    counts.dedup();
    counts
}

fn classical_series(label: String, samples: &[SlotSample]) -> Result<Series> {
    let (psi, out) = (QubitState::down_x(), QubitState::up_x());
    let pts = samples
        .iter()
        .filter_map(|s| s.classical_fi(&psi, &out).map(|fi| (s.time, fi)))
        .collect();
    Series::new(label, pts)
}

fn state_qfi_series(label: String, samples: &[SlotSample]) -> Result<Series> {
    let psi = QubitState::down_x();
    Series::new(label, samples.iter().map(|s| (s.time, s.state_qfi(&psi))).collect())
}

fn scenario_of(cfg: &ExperimentConfig, allowed: &[Scenario]) -> Result<Scenario> {
    let s = cfg.scenario.unwrap_or(allowed[0]);
    if allowed.contains(&s) {
        Ok(s)
    } else {
        Err(Error::invalid(format!("scenario {s} is not handled here")))
    }
}

/// Dispatches on the config's scenario (or `scenario` when given).
pub fn run_scenario(cfg: &ExperimentConfig, scenario: Scenario) -> Result<Vec<CurveDataset>> {
    let cfg = ExperimentConfig { scenario: Some(scenario), ..cfg.clone() };
    cfg.validate()?;
    match scenario {
        Scenario::Fig1a | Scenario::Fig1b => Ok(vec![run_fig1(&cfg)?]),
        Scenario::Fig3 => run_fig3(&cfg),
        Scenario::Fig4 => run_fig4(&cfg),
    }
}

/// Method-1 FI against the bound (`fig1a`), or method 1 against method 2
/// (`fig1b`).
pub fn run_fig1(cfg: &ExperimentConfig) -> Result<CurveDataset> {
    let scenario = scenario_of(cfg, &[Scenario::Fig1a, Scenario::Fig1b])?;
    let om = cfg.rabi.unwrap_or(1.0);
    let w = cfg.frequency.unwrap_or(FIG1_FREQUENCY * om);
    let dt1 = cfg.slot_interval.unwrap_or(METHOD1_INTERVAL / om);
    if om * dt1 > crate::control::METHOD1_MAX_RABI_INTERVAL {
        return Err(Error::invalid("slot_interval too long for method 1"));
    }
    let bound = |t: f64| qfi_upper_bound(&HamiltonianSpec::h1(om, w), t).map(|r| r.value).unwrap_or(f64::NAN);
    let closed_m1 = |d: f64, t: f64| closed(FormulaId::Method1, FormulaParams { rabi: om, detuning: d, time: t, ..Default::default() });

    let mut ds = CurveDataset::new(scenario, scenario.as_str(), "t", "fi")
        .param("rabi", om)
        .param("frequency", w)
        .param("method1_interval", dt1);
    ds.formulas = vec![FormulaId::OptimalT4.to_string(), FormulaId::Method1.to_string()];

    match scenario {
        Scenario::Fig1a => {
            let detunings = cfg.detunings.clone().unwrap_or(vec![0.08 * w, 0.04 * w]);
            let [t0, t1] = cfg.time_range.unwrap_or([0.0, 3000.0 / om]);
            let ts = linear_grid(t0, t1, cfg.points.unwrap_or(300));
            ds.series.push(Series::from_fn("bound", &ts, bound)?);
            let curves: Vec<Result<(Series, Series)>> = detunings
                .par_iter()
                .map(|&d| {
                    let eq = Series::from_fn(format!("method1_delta={d}"), &ts, |t| closed_m1(d, t))?;
                    let train = SlotTrain::new(om, d, dt1, Some(Axis3::Y));
                    let samples = train.sample(&slot_counts(&ts, dt1));
                    let num = classical_series(format!("numeric_delta={d}"), &samples)?;
                    Ok((eq, num))
                })
                .collect();
            for c in curves {
                let (eq, num) = c?;
                ds.series.push(eq);
                ds.series.push(num);
            }
            for (i, d) in detunings.iter().enumerate() {
                ds.params.insert(format!("detuning_{i}"), *d);
            }
        }
        _ => {
            let d = cfg.detunings.as_ref().map(|v| v[0]).unwrap_or(0.04 * w);
            if d == 0.0 {
                return Err(Error::invalid("fig1b needs a non-zero detuning"));
            }
            let dt2 = crate::control::method2_interval(om, 0);
            let [t0, t1] = cfg.time_range.unwrap_or([1.0 / om, 4.0 * om / (d * d)]);
            let ts = log_grid(t0.max(dt2), t1, cfg.points.unwrap_or(200));
            let m1_limit = 10.0 / d.abs();
            let m1_ts: Vec<f64> = ts.iter().copied().filter(|&t| t <= m1_limit).collect();
            ds.series.push(Series::from_fn("bound", &ts, bound)?);
            ds.series.push(Series::from_fn("method1", &ts, |t| closed_m1(d, t))?);
            ds.series.push(Series::from_fn("method2", &ts, |t| {
                closed(FormulaId::Method2, FormulaParams { rabi: om, time: t, ..Default::default() })
            })?);
            let jobs = [(Axis3::Y, dt1, &m1_ts, "method1_numeric"), (Axis3::X, dt2, &ts, "method2_numeric")];
            let numeric: Vec<Result<Series>> = jobs
                .par_iter()
                .map(|&(axis, dt, times, label)| {
                    let samples = SlotTrain::new(om, d, dt, Some(axis)).sample(&slot_counts(times, dt));
                    classical_series(label.to_string(), &samples)
                })
                .collect();
            for s in numeric {
                ds.series.push(s?);
            }
            ds.params.insert("detuning".into(), d);
            ds.params.insert("method2_interval".into(), dt2);
            ds.formulas.push(FormulaId::Method2.to_string());
        }
    }
    ds.notes.push("numeric series: classical FI, |↓x⟩ in, σX basis out".into());
    Ok(ds)
}

fn divisor_label(prefix: &str, d: f64) -> String {
    format!("{prefix}dt=pi/{d}")
}

/// Method-2 timing robustness: probability traces (top) and state-QFI
/// traces (bottom).
pub fn run_fig3(cfg: &ExperimentConfig) -> Result<Vec<CurveDataset>> {
    scenario_of(cfg, &[Scenario::Fig3])?;
    let om = cfg.rabi.unwrap_or(1.0);
    let d = cfg.detunings.as_ref().map(|v| v[0]).unwrap_or(1e-3 * om);
    let [_, total] = cfg.time_range.unwrap_or([0.0, 600.0 / om]);
    let top_divisors = cfg.interval_divisors.clone().unwrap_or(vec![2.0, 1.96, 1.9, 2.06]);
    let bottom_divisors = [2.0, 1.96, 1.8, 1.0];
    let (psi, out) = (QubitState::down_x(), QubitState::up_x());

    let trace = |divisor: Option<f64>| -> Vec<SlotSample> {
        let (dt, axis) = match divisor {
            Some(k) => (PI / (k * om), Some(Axis3::X)),
            None => (PI / (2.0 * om), None),
        };
        let n = (total / dt).floor() as usize;
        let mut out = Vec::with_capacity(n);
        SlotTrain::new(om, d, dt, axis).for_each(n, |s| out.push(*s));
        out
    };

    let top_series: Vec<Result<Series>> = top_divisors
        .par_iter()
        .map(|&k| {
            let samples = trace(Some(k));
            Series::new(divisor_label("", k), samples.iter().map(|s| (s.time, s.probability(&psi, &out))).collect())
        })
        .collect();
    let mut top = CurveDataset::new(Scenario::Fig3, "fig3_top", "t", "probability")
        .param("rabi", om)
        .param("detuning", d)
        .param("total_time", total);
    for s in top_series {
        top.series.push(s?);
    }
    top.notes.push("P(|↑x⟩) after each π pulse, starting from |↓x⟩".into());

    let mut jobs: Vec<Option<f64>> = bottom_divisors.iter().copied().map(Some).collect();
    jobs.push(None);
    let bottom_series: Vec<Result<Series>> = jobs
        .par_iter()
        .map(|&k| {
            let label = match k {
                Some(k) => divisor_label("", k),
                None => "no_control".to_string(),
            };
            state_qfi_series(label, &trace(k))
        })
        .collect();
    let mut bottom = CurveDataset::new(Scenario::Fig3, "fig3_bottom", "t", "fi")
        .param("rabi", om)
        .param("detuning", d)
        .param("total_time", total);
    for s in bottom_series {
        bottom.series.push(s?);
    }
    bottom.notes.push("state QFI of |↓x⟩ after each π pulse".into());
    Ok(vec![top, bottom])
}

/// Per-window max QFI of `Ω σZ sin(2δt)` over `(t, t+τ)` by tangent
/// propagation.
pub(crate) fn h2_window_qfi_numeric(rabi: f64, detuning: f64, t: f64, tau: f64, steps: usize) -> Result<f64> {
    let spec = HamiltonianSpec::h2(rabi, detuning);
    let (u, du) = propagate_piecewise_with_derivative(&spec, TimeGrid::new(t, t + tau, steps)?)?;
    Ok(qfi_max(&generator_from_derivative(&u, &du).matrix)?.value)
}

/// Segmented FI of the H2 signal: against total time for `δτ ≪ 1` (top)
/// and against detuning for several window lengths (bottom).
pub fn run_fig4(cfg: &ExperimentConfig) -> Result<Vec<CurveDataset>> {
    scenario_of(cfg, &[Scenario::Fig4])?;
    let om = cfg.rabi.unwrap_or(1.0);
    let taus = cfg.taus.clone().unwrap_or(vec![1.0 / om, 0.8 / om, 0.5 / om]);
    let steps = cfg.steps.unwrap_or(64);

    // top
    let d = cfg.detunings.as_ref().map(|v| v[0]).unwrap_or(2e-3 * om);
    let tau = taus[0];
    let [_, t_end] = cfg.time_range.unwrap_or([0.0, 20_000.0 / om]);
    let n_windows = (t_end / tau).floor() as usize;
    if n_windows == 0 {
        return Err(Error::invalid("time range shorter than one window"));
    }
    let mut counts: Vec<usize> = log_grid(1.0, n_windows as f64, cfg.points.unwrap_or(300))
        .into_iter()
        .map(|x| x.round() as usize)
        .collect();
    counts.dedup();
    let per_window: Vec<f64> = (0..n_windows)
        .into_par_iter()
        .map(|k| h2_window_qfi_numeric(om, d, k as f64 * tau, tau, steps))
        .collect::<Result<_>>()?;
    let mut cumulative = Vec::with_capacity(n_windows);
    let mut acc = 0.0;
    for v in &per_window {
        acc += v;
        cumulative.push(acc);
    }
    let ts: Vec<f64> = counts.iter().map(|&n| n as f64 * tau).collect();
    let seg = |id: FormulaId, t: f64| {
        closed(id, FormulaParams { rabi: om, detuning: d, time: t, tau, ..Default::default() })
    };
    let mut top = CurveDataset::new(Scenario::Fig4, "fig4_top", "t", "fi")
        .param("rabi", om)
        .param("detuning", d)
        .param("tau", tau)
        .param("steps", steps as f64);
    top.series.push(Series::new("numeric", counts.iter().map(|&n| (n as f64 * tau, cumulative[n - 1])).collect())?);
    top.series.push(Series::from_fn("exact_sum", &ts, |t| seg(FormulaId::H2SegmentedSum, t))?);
    top.series.push(Series::from_fn("small_detuning", &ts, |t| seg(FormulaId::H2SmallDetuning, t))?);
    top.series.push(Series::from_fn("envelope", &ts, |t| seg(FormulaId::SegmentedControlled, t))?);
    top.series.push(Series::from_fn("half_envelope", &ts, |t| 0.5 * seg(FormulaId::SegmentedControlled, t))?);
    top.formulas = [FormulaId::H2SegmentedSum, FormulaId::H2SmallDetuning, FormulaId::SegmentedControlled]
        .iter()
        .map(|f| f.to_string())
        .collect();

    // bottom
    let total = cfg.coherence_time.unwrap_or(100.0 / om);
    let [d0, d1] = cfg.detuning_range.unwrap_or([0.0, 4.0 * om]);
    let ds_grid = linear_grid(d0, d1, cfg.points.unwrap_or(400));
    let mut bottom = CurveDataset::new(Scenario::Fig4, "fig4_bottom", "delta", "fi")
        .param("rabi", om)
        .param("total_time", total);
    for &tau in &taus {
        if tau > total {
            return Err(Error::invalid("window longer than the total time"));
        }
        let p = |d: f64| FormulaParams { rabi: om, detuning: d, time: total, tau, ..Default::default() };
        bottom.series.push(Series::from_fn(format!("exact_tau={tau}"), &ds_grid, |d| closed(FormulaId::H2SegmentedSum, p(d)))?);
        bottom.series.push(Series::from_fn(format!("approx_tau={tau}"), &ds_grid, |d| {
            if d == 0.0 {
                f64::NAN
            } else {
                closed(FormulaId::H2LargeDetuning, p(d))
            }
        })?);
    }
    let positive: Vec<f64> = ds_grid.iter().copied().filter(|&d| d > 0.0).collect();
    bottom.series.push(Series::from_fn("optimal_period", &positive, |d| {
        closed(FormulaId::H2LargeDetuningOptimum, FormulaParams { rabi: om, detuning: d, time: total, ..Default::default() })
    })?);
    bottom.formulas = [FormulaId::H2SegmentedSum, FormulaId::H2LargeDetuning, FormulaId::H2LargeDetuningOptimum]
        .iter()
        .map(|f| f.to_string())
        .collect();
    bottom.notes.push("total time taken from coherence_time".into());
    Ok(vec![top, bottom])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifetimeReport {
    pub detuning: f64,
    /// 50% lifetime of method 2 at amplitude Ω.
    pub lifetime_full: Option<f64>,
    /// 50% lifetime of method 2 at the rotating-wave amplitude Ω/2.
    pub lifetime_half: Option<f64>,
    /// FI ratio (half/full) at the first sample.
    pub early_fi_ratio: f64,
}

/// Method 2 applied to the rotating-wave form of H2, whose amplitude is
/// Ω/2, compared with the full-amplitude signal.
pub fn h2_rwa_lifetime(rabi: f64, detuning: f64) -> Result<LifetimeReport> {
    if !(rabi > 0.0 && detuning != 0.0) {
        return Err(Error::invalid("need Ω > 0 and δ ≠ 0"));
    }
    let horizon = 20.0 * rabi / (detuning * detuning);
    let run = |amp: f64| -> Result<(Option<f64>, f64)> {
        let dt = crate::control::method2_interval(amp, 0);
        let n = (horizon / dt).floor() as usize;
        let counts = slot_counts(&log_grid(dt, n as f64 * dt, 400), dt);
        let samples = SlotTrain::new(amp, detuning, dt, Some(Axis3::X)).sample(&counts);
        let series = state_qfi_series("m2".into(), &samples)?;
        let ideal = |t: f64| closed(FormulaId::Method2, FormulaParams { rabi: amp, time: t, ..Default::default() });
        let first = series.points[0];
        Ok((first_drop_below(&series, ideal, 0.5), first.1 / ideal(first.0)))
    };
    let (full, r_full) = run(rabi)?;
    let (half, r_half) = run(0.5 * rabi)?;
    // each ratio is relative to its own ideal; the ideals differ by (1/2)²
    Ok(LifetimeReport { detuning, lifetime_full: full, lifetime_half: half, early_fi_ratio: 0.25 * r_half / r_full })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::h2_window_qfi;

    #[test]
    fn numeric_h2_window_matches_closed_form() {
        for &(d, t, tau) in &[(2e-3, 0.0, 1.0), (0.3, 40.0, 0.8), (1.7, 5.0, 0.5)] {
            let num = h2_window_qfi_numeric(1.0, d, t, tau, 400).unwrap();
            let exact = h2_window_qfi(1.0, d, t, tau);
            assert!((num / exact - 1.0).abs() < 1e-4, "d={d}: {num} vs {exact}");
        }
    }

    #[test]
    fn fig1a_small_run() {
        let cfg = ExperimentConfig {
            scenario: Some(Scenario::Fig1a),
            time_range: Some([0.0, 200.0]),
            points: Some(20),
            ..Default::default()
        };
        let ds = run_fig1(&cfg).unwrap();
        assert_eq!(ds.series.len(), 5);
        let bound = ds.series("bound").unwrap();
        for s in &ds.series {
            for (&(x, y), &(bx, by)) in s.points.iter().zip(&bound.points) {
                if s.label.starts_with("method1") {
                    assert_eq!(x, bx);
                    assert!(y <= by * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn zero_detuning_equals_bound() {
        let cfg = ExperimentConfig {
            scenario: Some(Scenario::Fig1a),
            detunings: Some(vec![0.0]),
            time_range: Some([0.0, 50.0]),
            points: Some(10),
            ..Default::default()
        };
        let ds = run_fig1(&cfg).unwrap();
        let (b, m) = (ds.series("bound").unwrap(), ds.series("method1_delta=0").unwrap());
        for (p, q) in b.points.iter().zip(&m.points) {
            assert!((p.1 / q.1 - 1.0).abs() < 1e-12);
        }
    }
}

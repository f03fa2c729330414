use serde::Serialize;

use crate::control::method2_interval;
use crate::error::{Error, Result};
use crate::fisher::{crb_variance, fi_matrix_2, FIMatrix2, Param2};
use crate::scalar::golden_section_max;

/// Working point of the nuisance phase; any value away from the
/// probability edges gives the same information matrix.
pub const NUISANCE_PHASE: f64 = 0.4;

/// Two-outcome probability models over `(δ, φ)` evaluated at `δ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum ProbeModel {
    /// `sin²(δt²/Δt + tφ/Δt)` with `Δt = π/(2Ω)`.
    Method2,
    /// `cos²θ` with `θ = Ωt·sin(δt+φ)·sinc(δt)`, at signal phase `phase`.
    Method1 { phase: f64 },
}

impl ProbeModel {
    fn working_phase(&self) -> f64 {
        match self {
            ProbeModel::Method2 => NUISANCE_PHASE,
            ProbeModel::Method1 { phase } => *phase,
        }
    }

    fn probability(&self, rabi: f64, t: f64, delta: f64, phi: f64) -> f64 {
        match self {
            ProbeModel::Method2 => {
                crate::control::method2_transition(delta, phi, t, method2_interval(rabi, 0))
            }
            ProbeModel::Method1 { .. } => {
                let x = delta * t;
                let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
                (rabi * t * (x + phi).sin() * sinc).cos().powi(2)
            }
        }
    }

    /// Single-time information matrix over `(δ, φ)`.
    pub fn information_matrix(&self, rabi: f64, t: f64) -> Result<FIMatrix2> {
        fi_matrix_2(|d, p| self.probability(rabi, t, d, p), (0.0, self.working_phase()), None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoTimeOptimum {
    pub t1: f64,
    pub t2: f64,
    /// `t2/t1`.
    pub ratio: f64,
    /// Information on δ from both probes: `M_δδ` when φ is known, `1/(M⁻¹)_δδ`
    /// otherwise.
    pub total_fi: f64,
    /// `total_fi / (2Ω²T⁴)`: information per probe in units of `Ω²T⁴`.
    pub coefficient: f64,
}

fn objective(m: &FIMatrix2, phase_known: bool) -> f64 {
    if phase_known {
        m.m[0][0]
    } else {
        crb_variance(m, Param2::Delta).finite().map_or(0.0, |v| 1.0 / v)
    }
}

/// Best pair of measurement times `t1 ≥ t2` in `(0, T]` for two probes
/// seeing the same signal. A `grid × grid` search is refined by golden
/// section along each time.
pub fn optimize_two_times(
    rabi: f64,
    total_time: f64,
    phase_known: bool,
    model: ProbeModel,
    grid: usize,
) -> Result<TwoTimeOptimum> {
    if grid < 100 {
        return Err(Error::invalid(format!("grid resolution must be at least 100, got {grid}")));
    }
    if !(rabi > 0.0 && total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::invalid("need Ω > 0 and finite T > 0"));
    }
    let cell = total_time / grid as f64;
    let times: Vec<f64> = (1..=grid).map(|i| i as f64 * cell).collect();
    let single: Vec<FIMatrix2> = times.iter().map(|&t| model.information_matrix(rabi, t)).collect::<Result<_>>()?;

    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for i in 0..grid {
        for j in 0..=i {
            let v = objective(&(single[i] + single[j]), phase_known);
            if v > best.2 {
                best = (i, j, v);
            }
        }
    }
    let eval = |t1: f64, t2: f64| -> f64 {
        match (model.information_matrix(rabi, t1), model.information_matrix(rabi, t2)) {
            (Ok(a), Ok(b)) => objective(&(a + b), phase_known),
            _ => f64::NEG_INFINITY,
        }
    };
    let (mut t1, mut t2, mut value) = (times[best.0], times[best.1], best.2);
    if value > 0.0 {
        for _ in 0..2 {
            let (lo, hi) = ((t2 - cell).max(cell * 1e-3), (t2 + cell).min(t1));
            if hi > lo {
                let (x, v) = golden_section_max(|s| eval(t1, s), lo, hi, 1e-10 * total_time);
                if v > value {
                    t2 = x;
                    value = v;
                }
            }
            let (lo, hi) = ((t1 - cell).max(t2), (t1 + cell).min(total_time));
            if hi > lo {
                let (x, v) = golden_section_max(|s| eval(s, t2), lo, hi, 1e-10 * total_time);
                if v > value {
                    t1 = x;
                    value = v;
                }
            }
        }
    }
    Ok(TwoTimeOptimum {
        t1,
        t2,
        ratio: t2 / t1,
        total_fi: value,
        coefficient: value / (2.0 * rabi * rabi * total_time.powi(4)),
    })
}

/// Raw two-time Schur complement for method 2 with `t1 = T`, `t2 = sT`, in
/// units of `T⁴`: `4/Δt²·s²(1−s)²/(1+s²)`.
#[cfg(test)]
fn method2_schur(rabi: f64, s: f64) -> f64 {
    let dt = std::f64::consts::FRAC_PI_2 / rabi;
    4.0 / (dt * dt) * s * s * (1.0 - s).powi(2) / (1.0 + s * s)
}

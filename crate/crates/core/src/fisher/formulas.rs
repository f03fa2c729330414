//! Closed-form Fisher information expressions and bounds.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{FisherResult, FisherSource};
use crate::dynamics::{HamiltonianKind, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::scalar::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    /// `4Ω²t⁴`
    OptimalT4,
    /// `(Ω²/δ⁴)(cos 2δt − 1 + 2δt sin 2δt)²`
    Method1,
    /// `4(Ω²/δ²) sin²(2δt) t²`, the large-`t` form of [`FormulaId::Method1`].
    Method1LargeTime,
    /// `4Ω²t⁴(2/(π(2k+1)))²`
    Method2,
    /// `(4/π)²Ω²t⁴`
    H2PulseTrain,
    /// `16Ω²/(ω²+Ω²)·sin²(√(ω²+Ω²)τ)·T³/(3τ)`
    SegmentedNoControl,
    /// `(16/3)Ω²τT³`
    SegmentedControlled,
    /// `Σ 4Ω²((t+τ)² − t²)²` over window starts.
    SegmentedControlledSum,
    /// `Σ 4(2t+τ)²` over window starts.
    SegmentedRamseySum,
    /// `16T³/(3τ)`, the asymptote of the Ramsey sum.
    SegmentedRamseyAsymptotic,
    /// `16T³/τ`, the Ramsey sum without the factor 1/3.
    SegmentedRamseyInline,
    /// Exact window sum for `Ω σZ sin(2δt)`, see [`h2_window_qfi`].
    H2SegmentedSum,
    /// `16Ω²τ(T³/6 + T cos(4δT)/(16δ²) + (8δ²T²−1) sin(4δT)/(64δ³))`
    H2SmallDetuning,
    /// `8(Ω/δ)²(T³/(3τ)) sin²(δτ)`
    H2LargeDetuning,
    /// Large-detuning H2 FI at the optimal period, `≈ 1.93 Ω²T³/δ`.
    H2LargeDetuningOptimum,
    /// No-control segmented FI at the optimal period, `≈ 3.86 Ω²T³/√(ω²+Ω²)`.
    NoControlOptimum,
}

impl FormulaId {
    pub const ALL: [FormulaId; 16] = [
        FormulaId::OptimalT4,
        FormulaId::Method1,
        FormulaId::Method1LargeTime,
        FormulaId::Method2,
        FormulaId::H2PulseTrain,
        FormulaId::SegmentedNoControl,
        FormulaId::SegmentedControlled,
        FormulaId::SegmentedControlledSum,
        FormulaId::SegmentedRamseySum,
        FormulaId::SegmentedRamseyAsymptotic,
        FormulaId::SegmentedRamseyInline,
        FormulaId::H2SegmentedSum,
        FormulaId::H2SmallDetuning,
        FormulaId::H2LargeDetuning,
        FormulaId::H2LargeDetuningOptimum,
        FormulaId::NoControlOptimum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormulaId::OptimalT4 => "optimal_t4",
            FormulaId::Method1 => "method1",
            FormulaId::Method1LargeTime => "method1_large_time",
            FormulaId::Method2 => "method2",
            FormulaId::H2PulseTrain => "h2_pulse_train",
            FormulaId::SegmentedNoControl => "segmented_no_control",
            FormulaId::SegmentedControlled => "segmented_controlled",
            FormulaId::SegmentedControlledSum => "segmented_controlled_sum",
            FormulaId::SegmentedRamseySum => "segmented_ramsey_sum",
            FormulaId::SegmentedRamseyAsymptotic => "segmented_ramsey_asymptotic",
            FormulaId::SegmentedRamseyInline => "segmented_ramsey_inline",
            FormulaId::H2SegmentedSum => "h2_segmented_sum",
            FormulaId::H2SmallDetuning => "h2_small_detuning",
            FormulaId::H2LargeDetuning => "h2_large_detuning",
            FormulaId::H2LargeDetuningOptimum => "h2_large_detuning_optimum",
            FormulaId::NoControlOptimum => "no_control_optimum",
        }
    }

    fn regime(self) -> &'static str {
        match self {
            FormulaId::OptimalT4 => "exact bound for H1",
            FormulaId::Method1 => "ΩΔt ≪ 1",
            FormulaId::Method1LargeTime => "δt ≫ 1, ΩΔt ≪ 1",
            FormulaId::Method2 => "δ²t ≪ Ω",
            FormulaId::H2PulseTrain => "δt ≪ 1, ω′ ≫ Ω",
            FormulaId::SegmentedNoControl => "τ ≪ T, per-window maximum",
            FormulaId::SegmentedControlled => "τ ≪ T",
            FormulaId::SegmentedControlledSum => "exact finite sum",
            FormulaId::SegmentedRamseySum => "exact finite sum",
            FormulaId::SegmentedRamseyAsymptotic => "τ ≪ T",
            FormulaId::SegmentedRamseyInline => "τ ≪ T, without the 1/3",
            FormulaId::H2SegmentedSum => "exact finite sum",
            FormulaId::H2SmallDetuning => "δτ ≪ 1, τ ≪ T",
            FormulaId::H2LargeDetuning => "δ ≫ 1/T, τ ≪ T",
            FormulaId::H2LargeDetuningOptimum => "δ ≫ 1/T, τ = x*/δ",
            FormulaId::NoControlOptimum => "τ = x*/√(ω²+Ω²)",
        }
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulaId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FormulaId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownFormula(s.to_string()))
    }
}

/// Inputs to [`closed_form_fi`]. Each formula reads only the fields it
/// needs; `time` is `t` for single-shot forms and `T` for segmented ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormulaParams {
    pub rabi: f64,
    pub frequency: f64,
    pub detuning: f64,
    pub time: f64,
    pub tau: f64,
    pub k: u32,
}

/// `sin(x)/x`.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `d/dx sin(x)/x`.
fn sinc_prime(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        -x / 3.0 + x.powi(3) / 30.0
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

/// `dθ/dδ` for the method-1 rotation angle
/// `θ = Ω(cos φ − cos(2δt+φ))/(2δ) = Ωt·sin(δt+φ)·sinc(δt)`.
pub fn method1_angle_derivative(rabi: f64, detuning: f64, phase: f64, t: f64) -> f64 {
    let x = detuning * t;
    rabi * t * t * ((x + phase).cos() * sinc(x) + (x + phase).sin() * sinc_prime(x))
}

fn method1(rabi: f64, detuning: f64, t: f64) -> f64 {
    let x = detuning * t;
    // (cos 2x − 1 + 2x sin 2x)/x² = 2 − 2x² + (4/9)x⁴ + …
    let g = if x.abs() < 1e-3 {
        2.0 - 2.0 * x * x + 4.0 / 9.0 * x.powi(4)
    } else {
        ((2.0 * x).cos() - 1.0 + 2.0 * x * (2.0 * x).sin()) / (x * x)
    };
    rabi * rabi * t.powi(4) * g * g
}

/// Max QFI of `Ω σZ sin(2δt)` over the window `(t, t+τ)`: `4θ'²` with
/// `θ = Ωτ·sin(δ(2t+τ))·sinc(δτ)`.
pub fn h2_window_qfi(rabi: f64, detuning: f64, t: f64, tau: f64) -> f64 {
    let a = 2.0 * t + tau;
    let (x, y) = (detuning * a, detuning * tau);
    let dtheta = rabi * tau * (a * x.cos() * sinc(y) + tau * x.sin() * sinc_prime(y));
    4.0 * dtheta * dtheta
}

fn h2_small_detuning(rabi: f64, detuning: f64, tau: f64, total: f64) -> f64 {
    let u = 4.0 * detuning * total;
    // bracket/T³ = 1/6 + cos u/u² + (u²/2 − 1) sin u/u³
    let b = if u.abs() < 1e-2 {
        1.0 / 3.0 - u * u / 20.0 + u.powi(4) / 336.0
    } else {
        1.0 / 6.0 + u.cos() / (u * u) + (0.5 * u * u - 1.0) * u.sin() / u.powi(3)
    };
    16.0 * rabi * rabi * tau * total.powi(3) * b
}

fn window_sum<F: Fn(f64) -> f64>(tau: f64, total: f64, f: F) -> f64 {
    let n = ((total / tau) * (1.0 + 1e-12)).floor() as usize;
    (0..n).map(|k| f(k as f64 * tau)).sum()
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(what.to_string()))
    }
}

/// Evaluates a closed-form FI expression.
pub fn closed_form_fi(id: FormulaId, p: &FormulaParams) -> Result<FisherResult> {
    let all_finite = [p.rabi, p.frequency, p.detuning, p.time, p.tau].iter().all(|x| x.is_finite());
    require(all_finite, "formula parameters must be finite")?;
    let (om, w, d, t, tau) = (p.rabi, p.frequency, p.detuning, p.time, p.tau);
    let segmented = matches!(
        id,
        FormulaId::SegmentedNoControl
            | FormulaId::SegmentedControlled
            | FormulaId::SegmentedControlledSum
            | FormulaId::SegmentedRamseySum
            | FormulaId::SegmentedRamseyAsymptotic
            | FormulaId::SegmentedRamseyInline
            | FormulaId::H2SegmentedSum
            | FormulaId::H2SmallDetuning
            | FormulaId::H2LargeDetuning
    );
    if segmented {
        require(tau > 0.0 && tau <= t * (1.0 + 1e-12), "segmented formulas need 0 < τ ≤ T")?;
    }
    let value = match id {
        FormulaId::OptimalT4 => 4.0 * om * om * t.powi(4),
        FormulaId::Method1 => method1(om, d, t),
        FormulaId::Method1LargeTime => {
            require(d != 0.0, "large-time form needs δ ≠ 0")?;
            4.0 * (om / d).powi(2) * (2.0 * d * t).sin().powi(2) * t * t
        }
        FormulaId::Method2 => 4.0 * om * om * t.powi(4) * (2.0 / (PI * (2 * p.k + 1) as f64)).powi(2),
        FormulaId::H2PulseTrain => (4.0 / PI).powi(2) * om * om * t.powi(4),
        FormulaId::SegmentedNoControl => {
            let r = (w * w + om * om).sqrt();
            require(r > 0.0, "need ω² + Ω² > 0")?;
            16.0 * om * om / (r * r) * (r * tau).sin().powi(2) * t.powi(3) / (3.0 * tau)
        }
        FormulaId::SegmentedControlled => 16.0 / 3.0 * om * om * tau * t.powi(3),
        FormulaId::SegmentedControlledSum => {
            window_sum(tau, t, |s| 4.0 * om * om * ((s + tau).powi(2) - s * s).powi(2))
        }
        FormulaId::SegmentedRamseySum => window_sum(tau, t, |s| 4.0 * (2.0 * s + tau).powi(2)),
        FormulaId::SegmentedRamseyAsymptotic => 16.0 * t.powi(3) / (3.0 * tau),
        FormulaId::SegmentedRamseyInline => 16.0 * t.powi(3) / tau,
        FormulaId::H2SegmentedSum => window_sum(tau, t, |s| h2_window_qfi(om, d, s, tau)),
        FormulaId::H2SmallDetuning => h2_small_detuning(om, d, tau, t),
        FormulaId::H2LargeDetuning => {
            require(d != 0.0, "large-detuning form needs δ ≠ 0")?;
            8.0 * (om / d).powi(2) * t.powi(3) / (3.0 * tau) * (d * tau).sin().powi(2)
        }
        FormulaId::H2LargeDetuningOptimum => {
            require(d != 0.0, "large-detuning optimum needs δ ≠ 0")?;
            h2_large_detuning_optimum(d)?.coefficient * om * om * t.powi(3) / d.abs()
        }
        FormulaId::NoControlOptimum => {
            let opt = optimal_tau_no_control(om, w)?;
            opt.coefficient * om * om * t.powi(3) / (w * w + om * om).sqrt()
        }
    };
    let mut out = FisherResult::new(value, FisherSource::ClosedForm)
        .with_param("rabi", om)
        .with_param("frequency", w)
        .with_param("detuning", d)
        .with_param("time", t)
        .with_param("tau", tau)
        .with_param("k", p.k as f64);
    out.regime = Some(format!("{}: {}", id.as_str(), id.regime()));
    Ok(out)
}

/// Optimal measurement period of `sin²(x)/x`-type FI totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalPeriod {
    /// Dimensionless optimum `x*`, the root of `tan x = 2x` in `(0, π/2)`.
    pub x: f64,
    pub tau: f64,
    pub coefficient: f64,
}

/// Root of `tan x = 2x` in `(0, π/2)`.
pub fn optimal_x() -> f64 {
    // d/dx sin²x/x ∝ 2x cos x − sin x
    bisect(|x| 2.0 * x * x.cos() - x.sin(), 0.5, PI / 2.0, 1e-15).expect("bracketed root")
}

/// Period maximizing the segmented no-control FI, with the coefficient `c`
/// in `I_tot ≈ c·Ω²T³/√(ω²+Ω²)`.
pub fn optimal_tau_no_control(rabi: f64, frequency: f64) -> Result<OptimalPeriod> {
    let r = (rabi * rabi + frequency * frequency).sqrt();
    require(r > 0.0 && r.is_finite(), "need finite ω² + Ω² > 0")?;
    let x = optimal_x();
    Ok(OptimalPeriod { x, tau: x / r, coefficient: 16.0 * x.sin().powi(2) / (3.0 * x) })
}

/// Period maximizing the large-detuning H2 FI, with the coefficient `c` in
/// `I_tot ≈ c·Ω²T³/δ`.
pub fn h2_large_detuning_optimum(detuning: f64) -> Result<OptimalPeriod> {
    require(detuning != 0.0 && detuning.is_finite(), "need finite δ ≠ 0")?;
    let x = optimal_x();
    Ok(OptimalPeriod { x, tau: x / detuning.abs(), coefficient: 8.0 * x.sin().powi(2) / (3.0 * x) })
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// `∫ t cos(at+φ) dt` over `[t0, t1]`.
fn t_cos_integral(a: f64, phi: f64, t0: f64, t1: f64) -> f64 {
    if (a * (t1 - t0)).abs() < 0.1 {
        let (mid, half) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
        return half
            * GL8
                .iter()
                .map(|&(x, w)| {
                    let t = mid + half * x;
                    w * t * (a * t + phi).cos()
                })
                .sum::<f64>();
    }
    let f = |t: f64| t * (a * t + phi).sin() / a + (a * t + phi).cos() / (a * a);
    f(t1) - f(t0)
}

/// `∫₀ᵀ t|cos(at+φ)| dt`, split at the zeros of the cosine.
fn t_abs_cos_integral(a: f64, phi: f64, total: f64) -> f64 {
    let mut cuts = vec![0.0];
    if a != 0.0 {
        let (s0, s1) = (phi, a * total + phi);
        let (lo, hi) = (s0.min(s1), s0.max(s1));
        let n0 = ((lo - PI / 2.0) / PI).ceil() as i64;
        let n1 = ((hi - PI / 2.0) / PI).floor() as i64;
        let mut zeros: Vec<f64> = (n0..=n1)
            .map(|n| (PI / 2.0 + n as f64 * PI - phi) / a)
            .filter(|&t| t > 0.0 && t < total)
            .collect();
        zeros.sort_by(f64::total_cmp);
        cuts.extend(zeros);
    }
    cuts.push(total);
    cuts.windows(2).map(|w| t_cos_integral(a, phi, w[0], w[1]).abs()).sum()
}

/// `[∫₀ᵀ (λmax − λmin)(∂_ω H(t)) dt]²`.
pub fn qfi_upper_bound(spec: &HamiltonianSpec, total_time: f64) -> Result<FisherResult> {
    spec.validate()?;
    require(total_time >= 0.0 && total_time.is_finite(), "total time must be finite and non-negative")?;
    let (om, t) = (spec.rabi, total_time);
    let integral = match spec.kind {
        // spread 4Ωt
        HamiltonianKind::H1 | HamiltonianKind::EffectiveLinearY => 2.0 * om * t * t,
        // spread (8/π)Ωt
        HamiltonianKind::EffectiveLinearZ => 4.0 / PI * om * t * t,
        // spread 4Ωt|cos(2ωt+φ)|
        HamiltonianKind::H2 => 4.0 * om * t_abs_cos_integral(2.0 * spec.frequency, spec.phase, t),
        HamiltonianKind::ZDrift => 0.0,
    };
    Ok(FisherResult::new(integral * integral, FisherSource::UpperBound)
        .with_param("rabi", om)
        .with_param("frequency", spec.frequency)
        .with_param("time", t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rabi: f64, detuning: f64, time: f64) -> FormulaParams {
        FormulaParams { rabi, detuning, time, ..Default::default() }
    }

    fn value(id: FormulaId, p: FormulaParams) -> f64 {
        closed_form_fi(id, &p).unwrap().value
    }

    #[test]
    fn parse_round_trip() {
        for id in FormulaId::ALL {
            assert_eq!(id.as_str().parse::<FormulaId>().unwrap(), id);
        }
        assert!(matches!("eq99".parse::<FormulaId>(), Err(Error::UnknownFormula(_))));
    }

    #[test]
    fn method1_limits() {
        let small = value(FormulaId::Method1, params(2.0, 1e-9, 3.0));
        assert!((small / (4.0 * 4.0 * 81.0) - 1.0).abs() < 1e-12);
        assert_eq!(value(FormulaId::Method1, params(2.0, 0.0, 3.0)), 4.0 * 4.0 * 81.0);
        // literal expression away from the series branch
        let (om, d, t) = (1.5, 0.2, 4.0);
        let x: f64 = d * t;
        let literal = om * om / d.powi(4) * ((2.0 * x).cos() - 1.0 + 2.0 * x * (2.0 * x).sin()).powi(2);
        assert!((value(FormulaId::Method1, params(om, d, t)) / literal - 1.0).abs() < 1e-12);
        // continuity across the branch switch
        let a = value(FormulaId::Method1, params(1.0, 0.999e-3, 1.0));
        let b = value(FormulaId::Method1, params(1.0, 1.001e-3, 1.0));
        assert!((a - b).abs() / a < 1e-5);
        // large-time form agrees once δt ≫ 1
        let d = 0.1;
        let t = (250.0 * PI + PI / 4.0) / d;
        let ratio = value(FormulaId::Method1, params(1.0, d, t)) / value(FormulaId::Method1LargeTime, params(1.0, d, t));
        assert!((ratio - 1.0).abs() < 2e-3, "ratio {ratio}");
    }

    #[test]
    fn method1_angle_derivative_matches_formula() {
        for &(d, t) in &[(1e-6, 2.0), (0.04, 5.0), (0.3, 7.0)] {
            let dd = method1_angle_derivative(1.3, d, 0.0, t);
            let fi = value(FormulaId::Method1, params(1.3, d, t));
            assert!((4.0 * dd * dd / fi - 1.0).abs() < 1e-9);
        }
        // cos φ factor at small δt
        let d0 = method1_angle_derivative(1.0, 1e-7, 0.0, 3.0);
        let d1 = method1_angle_derivative(1.0, 1e-7, PI / 3.0, 3.0);
        assert!((d1 / d0 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn method2_prefactors() {
        let base = value(FormulaId::OptimalT4, params(1.0, 0.0, 2.0));
        let k0 = value(FormulaId::Method2, FormulaParams { rabi: 1.0, time: 2.0, ..Default::default() });
        let k1 = value(FormulaId::Method2, FormulaParams { rabi: 1.0, time: 2.0, k: 1, ..Default::default() });
        assert!((k0 / base - (2.0 / PI).powi(2)).abs() < 1e-15);
        assert!((k1 / base - (2.0 / (3.0 * PI)).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn h2_small_detuning_limits() {
        let seg = |d: f64, t: f64| FormulaParams { rabi: 1.0, detuning: d, time: t, tau: 0.01, ..Default::default() };
        let limit = value(FormulaId::SegmentedControlled, seg(0.0, 50.0));
        assert!((value(FormulaId::H2SmallDetuning, seg(1e-9, 50.0)) / limit - 1.0).abs() < 1e-12);
        let a = value(FormulaId::H2SmallDetuning, seg(0.99e-2 / 200.0, 50.0));
        let b = value(FormulaId::H2SmallDetuning, seg(1.01e-2 / 200.0, 50.0));
        assert!((a - b).abs() / a < 1e-4);
        let far = value(FormulaId::H2SmallDetuning, seg(2.0, 50.0));
        assert!((far / limit - 0.5).abs() < 0.01);
    }

    #[test]
    fn h2_window_matches_literal_sum() {
        let (om, d, t, tau): (f64, f64, f64, f64) = (1.2, 0.3, 4.0, 0.7);
        let (a, b) = (2.0 * d * t, 2.0 * d * (t + tau));
        let literal = om * om / d.powi(4)
            * (a * a.sin() - b * b.sin() + a.cos() - b.cos()).powi(2);
        assert!((h2_window_qfi(om, d, t, tau) / literal - 1.0).abs() < 1e-12);
        let controlled = 4.0 * om * om * ((t + tau).powi(2) - t * t).powi(2);
        assert!((h2_window_qfi(om, 0.0, t, tau) / controlled - 1.0).abs() < 1e-12);
    }

    #[test]
    fn segmented_variants() {
        let p = FormulaParams { time: 1.0, tau: 0.01, ..Default::default() };
        let sum = value(FormulaId::SegmentedRamseySum, p);
        let asym = value(FormulaId::SegmentedRamseyAsymptotic, p);
        let inline = value(FormulaId::SegmentedRamseyInline, p);
        assert!((sum / asym - 1.0).abs() < 1e-3);
        assert!((inline / asym - 3.0).abs() < 1e-12);
        let bad = FormulaParams { time: 1.0, tau: 2.0, ..Default::default() };
        assert!(closed_form_fi(FormulaId::SegmentedRamseySum, &bad).is_err());
    }

    #[test]
    fn optimal_periods() {
        let x = optimal_x();
        assert!((x.tan() - 2.0 * x).abs() < 1e-12);
        assert!((x - 1.1656).abs() < 1e-4);
        let o = optimal_tau_no_control(3.0, 4.0).unwrap();
        assert!((o.tau * 5.0 - x).abs() < 1e-15);
        assert!((o.coefficient - 3.865).abs() < 2e-3);
        let h = h2_large_detuning_optimum(0.5).unwrap();
        assert!((h.tau - 2.0 * x).abs() < 1e-14);
        assert!((h.coefficient - o.coefficient / 2.0).abs() < 1e-15);
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
        (f(a) + f(b) + inner) * h / 3.0
    }

    #[test]
    fn h2_bound_matches_quadrature() {
        for &(w, phi, t) in &[(0.3, 0.0, 7.0), (2.0, 0.4, 10.0), (1e-4, 1.0, 3.0), (-0.7, 0.2, 5.0)] {
            let spec = HamiltonianSpec::h2(1.3, w).with_phase(phi);
            let bound = qfi_upper_bound(&spec, t).unwrap().value;
            let integral = simpson(|s| 4.0 * 1.3 * s * (2.0 * w * s + phi).cos().abs(), 0.0, t, 400_000);
            assert!((bound.sqrt() / integral - 1.0).abs() < 1e-7, "w={w}");
        }
    }

    #[test]
    fn bounds() {
        let h1 = qfi_upper_bound(&HamiltonianSpec::h1(1.5, 0.2), 3.0).unwrap().value;
        assert!((h1 - 4.0 * 2.25 * 81.0).abs() < 1e-10);
        assert_eq!(qfi_upper_bound(&HamiltonianSpec::h1(0.0, 0.2), 3.0).unwrap().value, 0.0);
        let t = 2000.0;
        let h2 = qfi_upper_bound(&HamiltonianSpec::h2(1.0, 1.0), t).unwrap().value;
        assert!((h2 / ((4.0 / PI).powi(2) * t.powi(4)) - 1.0).abs() < 1e-3);
    }
}

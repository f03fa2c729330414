use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::slots::SlotTrain;
use super::two_time::{optimize_two_times, ProbeModel};
use crate::control::build_pang_control;
use crate::dynamics::evolve_sampled;
use crate::error::Result;
use crate::fisher::{
    closed_form_fi, generator_from_derivative, h2_large_detuning_optimum, optimal_tau_no_control, qfi_max,
    FormulaId, FormulaParams,
};
use crate::su2::{Axis3, QubitState};

/// One quantitative check: a reference value, what this crate computes and
/// whether the two agree within `tolerance` (relative, or absolute when
/// the reference is zero).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub id: String,
    pub reference_value: f64,
    pub computed: f64,
    pub rel_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Claim {
    pub fn new(id: &str, reference_value: f64, computed: f64, tolerance: f64) -> Self {
        let rel_deviation = if reference_value == 0.0 {
            computed.abs()
        } else {
            ((computed - reference_value) / reference_value).abs()
        };
        Claim {
            id: id.to_string(),
            reference_value,
            computed,
            rel_deviation,
            tolerance,
            pass: rel_deviation.is_finite() && rel_deviation <= tolerance,
        }
    }

    /// Check with an absolute tolerance, stored as its relative equivalent.
    fn absolute(id: &str, reference_value: f64, computed: f64, tolerance: f64) -> Self {
        Claim::new(id, reference_value, computed, tolerance / reference_value.abs())
    }
}

fn failed(id: &str, reference_value: f64, tolerance: f64) -> Claim {
    Claim::new(id, reference_value, f64::NAN, tolerance)
}

/// Max QFI of the Pang-controlled drive at small δ, in units of `Ω²t⁴`.
fn pang_coefficient() -> Result<f64> {
    let (rabi, t) = (1.0, 8.0);
    let pang = build_pang_control(rabi, 0.3, t)?;
    let snap = evolve_sampled(&pang.drive(1e-5), &pang.sequence, &[t], t / 20_000.0, true)?[0];
    let du = snap.derivative.expect("tangent requested");
    let g = generator_from_derivative(&snap.unitary, &du);
    Ok(qfi_max(&g.matrix)?.value / (rabi * rabi * t.powi(4)))
}

/// Classical FI of a pulsed train after `slots` slots, in units of `Ω²t⁴`.
fn pulsed_coefficient(interval: f64, slots: usize) -> f64 {
    let train = SlotTrain::new(1.0, 1e-6, interval, Some(Axis3::X));
    let s = train.sample(&[slots])[0];
    s.classical_fi(&QubitState::down_x(), &QubitState::up_x()).unwrap_or(f64::NAN) / s.time.powi(4)
}

/// Exact H2 window sum over the `δT ≪ 1` envelope once `δT` is large.
fn h2_drop_ratio() -> Result<f64> {
    let (rabi, delta, tau) = (1.0, 1e-3, 1.0);
    // 4δT = 32π: the oscillating terms vanish there
    let total = 8.0 * PI / delta;
    let params = FormulaParams { rabi, detuning: delta, time: total, tau, ..FormulaParams::default() };
    let exact = closed_form_fi(FormulaId::H2SegmentedSum, &params)?.value;
    let envelope = closed_form_fi(FormulaId::SegmentedControlled, &params)?.value;
    Ok(exact / envelope)
}

fn singular_ratio() -> Result<f64> {
    let m = ProbeModel::Method2.information_matrix(1.0, 10.0)?;
    let (lo, hi) = m.eigenvalues();
    Ok(lo.abs() / hi)
}

fn two_time_checks(out: &mut Vec<Claim>) {
    let two_over_pi2 = (2.0 / PI).powi(2);
    match optimize_two_times(1.0, 10.0, false, ProbeModel::Method2, 200) {
        Ok(o) => {
            out.push(Claim::absolute("two_time_ratio", 0.45, o.ratio, 0.02));
            out.push(Claim::new("two_time_coefficient", 0.1 * two_over_pi2, o.coefficient, 0.05));
        }
        Err(_) => {
            out.push(failed("two_time_ratio", 0.45, 0.02 / 0.45));
            out.push(failed("two_time_coefficient", 0.1 * two_over_pi2, 0.05));
        }
    }
    let method1 = |phase: f64| {
        optimize_two_times(1.0, 10.0, false, ProbeModel::Method1 { phase }, 200).map(|o| o.coefficient)
    };
    match (method1(0.0), method1(PI / 4.0), method1(PI / 2.0)) {
        (Ok(base), Ok(quarter), Ok(right)) => {
            out.push(Claim::new("method1_cos2_phase_quarter", 0.5, quarter / base, 0.03));
            out.push(Claim::new("method1_cos2_phase_right", 0.0, right / base, 0.03));
        }
        _ => {
            out.push(failed("method1_cos2_phase_quarter", 0.5, 0.03));
            out.push(failed("method1_cos2_phase_right", 0.0, 0.03));
        }
    }
}

/// Evaluates every quantitative check in a fixed order.
pub fn evaluate_claims() -> Vec<Claim> {
    let mut out = Vec::new();
    out.push(match pang_coefficient() {
        Ok(c) => Claim::new("optimal_t4", 4.0, c, 1e-3),
        Err(_) => failed("optimal_t4", 4.0, 1e-3),
    });
    let two_over_pi2 = (2.0 / PI).powi(2);
    out.push(Claim::new("method2_prefactor", two_over_pi2, pulsed_coefficient(FRAC_PI_2, 400) / 4.0, 0.02));
    out.push(Claim::new(
        "method2_prefactor_k1",
        (2.0 / (3.0 * PI)).powi(2),
        pulsed_coefficient(3.0 * FRAC_PI_2, 400) / 4.0,
        0.02,
    ));

    match optimal_tau_no_control(1.0, 0.0) {
        Ok(o) => {
            out.push(Claim::new("optimal_tau_x", 1.16, o.x, 0.01));
            out.push(Claim::absolute("no_control_coefficient", 3.86, o.coefficient, 0.02));
        }
        Err(_) => {
            out.push(failed("optimal_tau_x", 1.16, 0.01));
            out.push(failed("no_control_coefficient", 3.86, 0.02 / 3.86));
        }
    }
    match h2_large_detuning_optimum(1.0) {
        Ok(o) => {
            out.push(Claim::new("h2_optimal_tau_x", 1.165, o.tau, 0.001));
            out.push(Claim::absolute("h2_coefficient", 1.93, o.coefficient, 0.02));
        }
        Err(_) => {
            out.push(failed("h2_optimal_tau_x", 1.165, 0.001));
            out.push(failed("h2_coefficient", 1.93, 0.02 / 1.93));
        }
    }

    two_time_checks(&mut out);

    out.push(match h2_drop_ratio() {
        Ok(r) => Claim::new("h2_factor_two_drop", 0.5, r, 0.05),
        Err(_) => failed("h2_factor_two_drop", 0.5, 0.05),
    });
    out.push(match singular_ratio() {
        Ok(r) => Claim::new("fi_matrix_singular", 0.0, r, 1e-10),
        Err(_) => failed("fi_matrix_singular", 0.0, 1e-10),
    });
    out
}

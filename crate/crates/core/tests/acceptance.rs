//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line to the
//! real stdout (not the captured test output) and then asserts.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::process::Command;
use std::time::Instant;

use qfi_lab::control::{
    build_h2_pulse_train, build_method1, build_method2, build_pang_control, ControlSequence,
};
use qfi_lab::dynamics::{
    analytic_interval_unitary, analytic_slot_unitary, evolve_sampled, propagate_piecewise,
    propagate_piecewise_with_derivative, Hamiltonian, HamiltonianSpec, RotatingFrame, TimeGrid,
};
use qfi_lab::experiments::{
    evaluate_claims, fit_scaling_exponent, optimize_two_times, run_scenario, ExperimentConfig, ProbeModel, Scenario,
    Series, SlotTrain,
};
use qfi_lab::fisher::{
    closed_form_fi, generator_from_derivative, h2_large_detuning_optimum, optimal_tau_no_control, qfi_max,
    qfi_state, qfi_upper_bound, segmented_total_fi, FormulaId, FormulaParams, SegmentationPlan,
};
use qfi_lab::su2::{phase_invariant_distance, QubitState};
use qfi_lab::FisherSource;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// 1
const ORACLE_DISTANCE: f64 = 1e-7;
const ORACLE_SETS: usize = 50;
const ORACLE_MAX_RATIO: f64 = 0.2;
const ORACLE_STEPS: usize = 10_000;
const ORACLE_SECONDS: f64 = 5.0;
// 2
const M2_DETUNING_RATIO: f64 = 1e-3;
const M2_PULSES: usize = 40;
const M2_DEVIATION_FACTOR: f64 = 5.0;
const M2_SLOPE: f64 = 4.0;
const M2_SLOPE_TOL: f64 = 0.05;
const M2_SECONDS: f64 = 10.0;
// 3
const METHOD1_TOL: f64 = 0.02;
const FIG1_RABI_OVER_OMEGA: f64 = 50.0;
const FIG1_DETUNINGS: [f64; 2] = [0.04, 0.08];
const LIFETIME_FRACTION: f64 = 0.5;
// 5
const SINGULAR_RATIO: f64 = 1e-10;
const TWO_TIME_RATIO: f64 = 0.45;
const TWO_TIME_RATIO_TOL: f64 = 0.02;
const TWO_TIME_COEFF_TOL: f64 = 0.05;
const COS2_TOL: f64 = 0.03;
// 6
const NO_CONTROL_TOL: f64 = 0.01;
const SEGMENTS: f64 = 100.0;
const OPT_X: f64 = 1.1656;
const OPT_X_TOL: f64 = 0.001;
const NO_CONTROL_COEFF: f64 = 3.86;
const H2_COEFF: f64 = 1.93;
const COEFF_TOL: f64 = 0.02;
const CONTROLLED_TOL: f64 = 0.03;
const DROP_TOL: f64 = 0.05;
// 7
const CHAIN_INSTANCES: usize = 200;
const CHAIN_TOL: f64 = 1e-6;

fn report(criterion: u32, pass: bool, text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion}: {} {text}", if pass { "PASS" } else { "FAIL" });
    let _ = out.flush();
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn criterion_1_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..ORACLE_SETS {
        let rabi = rng.gen_range(0.5..2.0);
        let delta = rng.gen_range(0.0..ORACLE_MAX_RATIO) * rabi;
        let t = rng.gen_range(0.5..5.0) / rabi;
        let spec = HamiltonianSpec::h1(rabi, delta);
        let whole = propagate_piecewise(&spec, TimeGrid::new(0.0, t, ORACLE_STEPS).unwrap()).unwrap();
        worst = worst.max(phase_invariant_distance(&whole, &analytic_interval_unitary(delta, rabi, t)));
        let (t0, dt) = (rng.gen_range(0.0..50.0), rng.gen_range(0.2..3.0) / rabi);
        let slot = propagate_piecewise(&spec, TimeGrid::new(t0, t0 + dt, ORACLE_STEPS).unwrap()).unwrap();
        worst = worst.max(phase_invariant_distance(&slot, &analytic_slot_unitary(delta, rabi, t0, dt)));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < ORACLE_DISTANCE && secs < ORACLE_SECONDS;
    report(1, pass, &format!("max distance {worst:.2e} (< {ORACLE_DISTANCE:e}), {secs:.2} s (< {ORACLE_SECONDS} s)"));
    assert!(pass);
}

#[test]
fn criterion_2_method2_quadratic_phase() {
    let start = Instant::now();
    let rabi = 1.0;
    let delta = M2_DETUNING_RATIO * rabi;
    let dt = FRAC_PI_2 / rabi;
    let total = M2_PULSES as f64 * dt;
    let seq = build_method2(rabi, 0, total).unwrap();
    let times: Vec<f64> = (1..=M2_PULSES).map(|n| n as f64 * dt).collect();
    let snaps = evolve_sampled(&HamiltonianSpec::h1(rabi, delta), &seq, &times, dt / 400.0, true).unwrap();
    let (psi, out) = (QubitState::down_x(), QubitState::up_x());

    let mut worst_excess: f64 = f64::NEG_INFINITY;
    let mut worst = (0.0, 0.0, 0.0);
    let mut fi_points = Vec::new();
    for s in &snaps {
        let t = s.time;
        let amp = out.inner(&s.unitary.apply(&psi));
        let p = amp.norm_sqr();
        let ideal = (delta * t * t / dt).sin().powi(2);
        let dev = (p - ideal).abs();
        let allowed = M2_DEVIATION_FACTOR * delta * delta * t / rabi;
        if dev - allowed > worst_excess {
            worst_excess = dev - allowed;
            worst = (t, dev, allowed);
        }
        let [a, b] = s.derivative.unwrap().apply(psi.amplitudes());
        let [o0, o1] = out.amplitudes();
        let dp = 2.0 * (amp.conj() * (o0.conj() * a + o1.conj() * b)).re;
        fi_points.push((t, dp * dp / (p * (1.0 - p))));
    }
    let fi = Series::new("m2", fi_points).unwrap();
    let slope = fit_scaling_exponent(&fi, (4.0 * dt, total)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pointwise = worst_excess <= 0.0;
    let slope_ok = (slope - M2_SLOPE).abs() <= M2_SLOPE_TOL;
    let pass = pointwise && slope_ok && secs < M2_SECONDS;
    report(
        2,
        pass,
        &format!(
            "worst |P − sin²(δt²/Δt)| = {:.3e} at t = {:.2} vs 5δ²t/Ω = {:.3e} ({}); FI slope {slope:.4} ({}); {secs:.2} s",
            worst.1,
            worst.0,
            worst.2,
            if pointwise { "ok" } else { "exceeded" },
            if slope_ok { "ok" } else { "off" },
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_method1_fisher_information() {
    let rabi = 1.0;
    let w = rabi / FIG1_RABI_OVER_OMEGA;
    let dt = 0.01 / rabi;
    let (psi, out) = (QubitState::down_x(), QubitState::up_x());
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut lifetimes = Vec::new();
    for ratio in FIG1_DETUNINGS {
        let d = ratio * w;
        let horizon = 1.0 / d;
        let slots = (horizon / dt).round() as usize;
        let stride = (slots / 2000).max(1);
        let train = SlotTrain::new(rabi, d, dt, Some(qfi_lab::Axis3::Y));
        let mut lifetime = None;
        train.for_each(slots, |s| {
            if s.slots % stride != 0 {
                return;
            }
            let t = s.time;
            let p = s.probability(&psi, &out);
            let Some(fi) = s.classical_fi(&psi, &out) else { return };
            let bound = 4.0 * rabi * rabi * t.powi(4);
            if lifetime.is_none() && fi < LIFETIME_FRACTION * bound {
                lifetime = Some(t);
            }
            // outcome almost certain: the FI there is a ratio of two tiny numbers
            if d * t < 0.02 || p.min(1.0 - p) < 0.05 {
                return;
            }
            let closed_m1 = closed_form_fi(FormulaId::Method1, &FormulaParams { rabi, detuning: d, time: t, ..Default::default() })
                .unwrap()
                .value;
            worst = worst.max(rel(fi, closed_m1));
            checked += 1;
        });
        lifetimes.push((ratio, lifetime.map(|t| t * d)));
    }
    let life_ok = lifetimes.iter().all(|&(_, l)| l.is_some_and(|x| (0.5..=2.0).contains(&x)));
    let pass = worst <= METHOD1_TOL && checked > 100 && life_ok;
    report(
        3,
        pass,
        &format!("max rel deviation from closed form {worst:.3e} over {checked} samples (≤ {METHOD1_TOL}); δ·lifetime {lifetimes:?} (within [0.5, 2])"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_timing_robustness() {
    let datasets = run_scenario(&ExperimentConfig::default(), Scenario::Fig3).unwrap();
    let top = datasets.iter().find(|d| d.panel == "fig3_top").unwrap();
    let bottom = datasets.iter().find(|d| d.panel == "fig3_bottom").unwrap();
    let amplitude = |label: &str| {
        let s = top.series(label).unwrap();
        let (lo, hi) = s.ys().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
        hi - lo
    };
    let (a2, a196, a19) = (amplitude("dt=pi/2"), amplitude("dt=pi/1.96"), amplitude("dt=pi/1.9"));
    let full = bottom.series("dt=pi/1").unwrap();
    let t_end = full.points.last().unwrap().0;
    let slope = fit_scaling_exponent(full, (0.1 * t_end, t_end)).unwrap();
    let ordered = a2 > a196 && a196 > a19;
    let pass = ordered && slope < 2.1;
    report(
        4,
        pass,
        &format!("amplitudes π/2: {a2:.5}, π/1.96: {a196:.5}, π/1.9: {a19:.5}; FI exponent at Δt = π/Ω: {slope:.3} (< 2.1)"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_singular_matrix_and_two_times() {
    let m = ProbeModel::Method2.information_matrix(1.0, 10.0).unwrap();
    let (lo, hi) = m.eigenvalues();
    let ratio = lo.abs() / hi;
    let o = optimize_two_times(1.0, 10.0, false, ProbeModel::Method2, 200).unwrap();
    let target = 0.1 * (2.0 / PI).powi(2);
    let coef = |phase: f64| optimize_two_times(1.0, 10.0, false, ProbeModel::Method1 { phase }, 200).unwrap().coefficient;
    let (c0, c4, c2) = (coef(0.0), coef(PI / 4.0), coef(PI / 2.0));
    let cos_ok = rel(c4 / c0, 0.5) <= COS2_TOL && c2 / c0 <= COS2_TOL;
    let pass = ratio < SINGULAR_RATIO
        && (o.ratio - TWO_TIME_RATIO).abs() <= TWO_TIME_RATIO_TOL
        && rel(o.coefficient, target) <= TWO_TIME_COEFF_TOL
        && cos_ok;
    report(
        5,
        pass,
        &format!(
            "eigenvalue ratio {ratio:.1e}; t2/t1 = {:.4}; coefficient {:.5} vs {target:.5} ({:.1}%); cos²φ factors {:.4}, {:.1e}",
            o.ratio,
            o.coefficient,
            100.0 * rel(o.coefficient, target),
            c4 / c0,
            c2 / c0
        ),
    );
    assert!(pass);
}

/// Max QFI of `h` (frequency derivative carried alongside) over `(t, t+τ)`.
fn window_qfi<H: Hamiltonian>(h: &H, t: f64, tau: f64, steps: usize) -> f64 {
    let (u, du) = propagate_piecewise_with_derivative(h, TimeGrid::new(t, t + tau, steps).unwrap()).unwrap();
    qfi_max(&generator_from_derivative(&u, &du).matrix).unwrap().value
}

#[test]
fn criterion_6_t_cubed_regime() {
    let rabi = 1.0;
    let mut no_control_worst: f64 = 0.0;
    for w in [0.0, 0.1, 1.0] {
        let opt = optimal_tau_no_control(rabi, w).unwrap();
        let plan = SegmentationPlan::new(opt.tau, SEGMENTS * opt.tau).unwrap();
        let spec = HamiltonianSpec::h1(rabi, w);
        let numeric = segmented_total_fi(|t| window_qfi(&spec, t, opt.tau, 400), &plan, FisherSource::NumericQfi).value;
        let p = FormulaParams { rabi, frequency: w, time: plan.total, tau: opt.tau, ..Default::default() };
        let closed = closed_form_fi(FormulaId::SegmentedNoControl, &p).unwrap().value;
        no_control_worst = no_control_worst.max(rel(numeric, closed));
    }

    let opt = optimal_tau_no_control(rabi, 0.0).unwrap();
    let h2 = h2_large_detuning_optimum(0.3).unwrap();
    let h2_tau_ok = (h2.tau * 0.3 - OPT_X).abs() <= OPT_X_TOL;

    let tau = 1.0;
    let pang = build_pang_control(rabi, 0.7, SEGMENTS * tau).unwrap();
    let framed = RotatingFrame { inner: pang.drive(1e-6), drift: pang.sequence.frame_drift };
    let plan = SegmentationPlan::new(tau, SEGMENTS * tau).unwrap();
    let controlled = segmented_total_fi(|t| window_qfi(&framed, t, tau, 400), &plan, FisherSource::NumericQfi).value;
    let p = FormulaParams { rabi, time: plan.total, tau, ..Default::default() };
    let controlled_rel = rel(controlled, closed_form_fi(FormulaId::SegmentedControlled, &p).unwrap().value);

    // H2 segmented FI over the δT ≪ 1 envelope, early and late
    let (delta, tau) = (2e-3, 1.0);
    let ratio_at = |total: f64| {
        let p = FormulaParams { rabi, detuning: delta, time: total, tau, ..Default::default() };
        let spec = HamiltonianSpec::h2(rabi, delta);
        let plan = SegmentationPlan::new(tau, total).unwrap();
        let numeric = segmented_total_fi(|t| window_qfi(&spec, t, tau, 64), &plan, FisherSource::NumericQfi).value;
        numeric / closed_form_fi(FormulaId::SegmentedControlled, &p).unwrap().value
    };
    let (early, late) = (ratio_at(10.0), ratio_at(8.0 * PI / delta));
    let drop = late / early;

    let checks = [
        no_control_worst <= NO_CONTROL_TOL,
        (opt.x - OPT_X).abs() <= OPT_X_TOL,
        (opt.coefficient - NO_CONTROL_COEFF).abs() <= COEFF_TOL,
        controlled_rel <= CONTROLLED_TOL,
        h2_tau_ok,
        (h2.coefficient - H2_COEFF).abs() <= COEFF_TOL,
        rel(drop, 0.5) <= DROP_TOL,
    ];
    let pass = checks.iter().all(|&c| c);
    report(
        6,
        pass,
        &format!(
            "no-control rel dev {no_control_worst:.2e}; x* = {:.5}, c = {:.4}; controlled rel dev {controlled_rel:.2e}; \
             H2 δτ* = {:.5}, c = {:.4}; late/early envelope ratio {drop:.4} (checks {checks:?})",
            opt.x,
            opt.coefficient,
            h2.tau * 0.3,
            h2.coefficient
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_information_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..CHAIN_INSTANCES {
        let rabi = rng.gen_range(0.3..2.0);
        let delta = rng.gen_range(0.0..0.2) * rabi;
        let total = rng.gen_range(1.0..20.0) / rabi;
        let reference = rng.gen_range(0.0..0.5);
        let (spec, seq): (HamiltonianSpec, ControlSequence) = match rng.gen_range(0..6) {
            0 => (HamiltonianSpec::h1(rabi, delta), ControlSequence::free()),
            1 => (HamiltonianSpec::h1(rabi, reference + delta), build_method1(rabi, reference, 0.2 / rabi, total).unwrap()),
            2 => (HamiltonianSpec::h1(rabi, delta), build_method2(rabi, rng.gen_range(0..3), total).unwrap()),
            3 => (HamiltonianSpec::h2(rabi, reference + delta), build_h2_pulse_train(reference.max(0.05), total).unwrap()),
            4 => (HamiltonianSpec::effective_linear_y(rabi, delta), ControlSequence::free()),
            _ => (HamiltonianSpec::effective_linear_z(rabi, delta), ControlSequence::free()),
        };
        // the H2 train saturates the bound, so the midpoint error must stay below the tolerance
        let step = 0.004 / (rabi + reference + 2.0 * rabi * delta * total + 1.0);
        let snap = evolve_sampled(&spec, &seq, &[total], step, true).unwrap()[0];
        let du = snap.derivative.unwrap();
        let g = generator_from_derivative(&snap.unitary, &du).matrix;
        let psi = QubitState::from_bloch(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
        let out = QubitState::from_bloch(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
        let amp = out.inner(&snap.unitary.apply(&psi));
        let p = amp.norm_sqr();
        let [a, b] = du.apply(psi.amplitudes());
        let [o0, o1] = out.amplitudes();
        let dp = 2.0 * (amp.conj() * (o0.conj() * a + o1.conj() * b)).re;
        let classical = if p * (1.0 - p) > 1e-12 { dp * dp / (p * (1.0 - p)) } else { 0.0 };
        let state = qfi_state(&g, &psi).value;
        let max = qfi_max(&g).unwrap().value;
        let bound = qfi_upper_bound(&spec, total).unwrap().value;
        for (lo, hi) in [(classical, state), (state, max), (max, bound)] {
            if hi > 0.0 {
                worst = worst.max((lo - hi) / hi);
            } else {
                worst = worst.max(lo);
            }
        }
    }
    let pass = worst <= CHAIN_TOL;
    report(7, pass, &format!("{CHAIN_INSTANCES} instances, worst relative violation {worst:.2e} (≤ {CHAIN_TOL:e})"));
    assert!(pass);
}

#[test]
fn criterion_8_determinism_and_claims() {
    let bin = env!("CARGO_BIN_EXE_qfi-lab");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut identical = true;
    let mut files = 0;
    for scenario in Scenario::ALL {
        for dir in &dirs {
            let st = Command::new(bin).args(["figure", scenario.as_str(), "--out"]).arg(dir.path()).output().unwrap();
            assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in &names {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap_or_default();
        identical &= a == b;
        files += 1;
    }
    let claims = Command::new(bin).arg("claims").output().unwrap();
    let claims_ok = claims.status.code() == Some(0) && evaluate_claims().iter().all(|c| c.pass);
    let pass = identical && files >= 10 && claims_ok;
    report(
        8,
        pass,
        &format!("{files} output files byte-identical across runs: {identical}; claims exit code {:?}", claims.status.code()),
    );
    assert!(pass);
}

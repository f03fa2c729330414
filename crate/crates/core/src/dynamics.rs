//! Time evolution under the sensing Hamiltonians.
//!
//! `propagate_piecewise` is the brute-force reference: a time-ordered
//! product of midpoint exponentials. The analytic slot unitaries are checked
//! against it. All Hamiltonians use absolute time, so splitting an interval
//! never resets the signal phase.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::control::ControlSequence;
use crate::error::{Error, Result};
use crate::su2::{
    exp_hermitian, exp_hermitian_with_derivative, pauli_exp, Axis3, CMat2, Unitary2,
};

/// Largest allowed `‖H‖·step` for the midpoint integrator.
pub const MAX_NORM_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    /// `Ω(σX cos(2ωt+φ) + σY sin(2ωt+φ))`
    H1,
    /// `Ω σZ sin(2ωt+φ)`
    H2,
    /// `2Ωδt σY`, with δ read from `frequency`.
    EffectiveLinearY,
    /// `(4/π)Ωδt σZ`, with δ read from `frequency`.
    EffectiveLinearZ,
    /// `ω′ σZ`, with ω′ read from `drift`.
    ZDrift,
}

/// Parameters of one of the sensing Hamiltonians. `kind` decides which fields
/// are read. `frequency` is the estimated parameter for every kind except
/// `ZDrift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    /// Ω, rad/s.
    #[serde(default)]
    pub rabi: f64,
    /// ω (or δ for the effective kinds), rad/s.
    #[serde(default)]
    pub frequency: f64,
    /// Initial signal phase φ, rad.
    #[serde(default)]
    pub phase: f64,
    /// ω′, rad/s.
    #[serde(default)]
    pub drift: f64,
}

impl HamiltonianSpec {
    pub fn h1(rabi: f64, frequency: f64) -> Self {
        Self { kind: HamiltonianKind::H1, rabi, frequency, phase: 0.0, drift: 0.0 }
    }

    pub fn h2(rabi: f64, frequency: f64) -> Self {
        Self { kind: HamiltonianKind::H2, rabi, frequency, phase: 0.0, drift: 0.0 }
    }

    pub fn effective_linear_y(rabi: f64, detuning: f64) -> Self {
        Self { kind: HamiltonianKind::EffectiveLinearY, rabi, frequency: detuning, phase: 0.0, drift: 0.0 }
    }

    pub fn effective_linear_z(rabi: f64, detuning: f64) -> Self {
        Self { kind: HamiltonianKind::EffectiveLinearZ, rabi, frequency: detuning, phase: 0.0, drift: 0.0 }
    }

    pub fn z_drift(drift: f64) -> Self {
        Self { kind: HamiltonianKind::ZDrift, rabi: 0.0, frequency: 0.0, phase: 0.0, drift }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_frequency(mut self, frequency: f64) -> Self {
        self.frequency = frequency;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.rabi, self.frequency, self.phase, self.drift]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("Hamiltonian parameters must be finite"));
        }
        if self.rabi < 0.0 {
            return Err(Error::invalid(format!("rabi amplitude must be non-negative, got {}", self.rabi)));
        }
        Ok(())
    }
}

/// Pointwise value of the Hamiltonian.
pub fn hamiltonian_at(spec: &HamiltonianSpec, t: f64) -> CMat2 {
    let (a0, a) = pauli_coefficients(spec, t);
    CMat2::from_pauli(a0, a)
}

fn pauli_coefficients(spec: &HamiltonianSpec, t: f64) -> (f64, [f64; 3]) {
    let om = spec.rabi;
    match spec.kind {
        HamiltonianKind::H1 => {
            let (s, c) = (2.0 * spec.frequency * t + spec.phase).sin_cos();
            (0.0, [om * c, om * s, 0.0])
        }
        HamiltonianKind::H2 => {
            let s = (2.0 * spec.frequency * t + spec.phase).sin();
            (0.0, [0.0, 0.0, om * s])
        }
        HamiltonianKind::EffectiveLinearY => (0.0, [0.0, 2.0 * om * spec.frequency * t, 0.0]),
        HamiltonianKind::EffectiveLinearZ => (0.0, [0.0, 0.0, 4.0 / PI * om * spec.frequency * t]),
        HamiltonianKind::ZDrift => (0.0, [0.0, 0.0, spec.drift]),
    }
}

fn frequency_derivative_coefficients(spec: &HamiltonianSpec, t: f64) -> [f64; 3] {
    let om = spec.rabi;
    match spec.kind {
        HamiltonianKind::H1 => {
            let (s, c) = (2.0 * spec.frequency * t + spec.phase).sin_cos();
            [-2.0 * t * om * s, 2.0 * t * om * c, 0.0]
        }
        HamiltonianKind::H2 => {
            let c = (2.0 * spec.frequency * t + spec.phase).cos();
            [0.0, 0.0, 2.0 * t * om * c]
        }
        HamiltonianKind::EffectiveLinearY => [0.0, 2.0 * om * t, 0.0],
        HamiltonianKind::EffectiveLinearZ => [0.0, 0.0, 4.0 / PI * om * t],
        HamiltonianKind::ZDrift => [0.0; 3],
    }
}

/// A time-dependent qubit Hamiltonian with a distinguished frequency
/// parameter.
pub trait Hamiltonian: Sync {
    fn at(&self, t: f64) -> CMat2;

    /// `∂H/∂ω` at time `t`.
    fn frequency_derivative_at(&self, t: f64) -> CMat2;

    /// Upper bound on the operator norm of `H(t)` for `t ∈ [t0, t1]`.
    fn norm_bound(&self, t0: f64, t1: f64) -> f64;
}

impl Hamiltonian for HamiltonianSpec {
    fn at(&self, t: f64) -> CMat2 {
        hamiltonian_at(self, t)
    }

    fn frequency_derivative_at(&self, t: f64) -> CMat2 {
        CMat2::from_pauli(0.0, frequency_derivative_coefficients(self, t))
    }

    fn norm_bound(&self, t0: f64, t1: f64) -> f64 {
        let tmax = t0.abs().max(t1.abs());
        match self.kind {
            HamiltonianKind::H1 | HamiltonianKind::H2 => self.rabi,
            HamiltonianKind::EffectiveLinearY => 2.0 * self.rabi * self.frequency.abs() * tmax,
            HamiltonianKind::EffectiveLinearZ => 4.0 / PI * self.rabi * self.frequency.abs() * tmax,
            HamiltonianKind::ZDrift => self.drift.abs(),
        }
    }
}

impl<H: Hamiltonian + ?Sized> Hamiltonian for &H {
    fn at(&self, t: f64) -> CMat2 {
        (**self).at(t)
    }
    fn frequency_derivative_at(&self, t: f64) -> CMat2 {
        (**self).frequency_derivative_at(t)
    }
    fn norm_bound(&self, t0: f64, t1: f64) -> f64 {
        (**self).norm_bound(t0, t1)
    }
}

/// Weighted sum `Σ c_k H_k` of Hamiltonian specs.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSum {
    pub terms: Vec<(f64, HamiltonianSpec)>,
}

impl Hamiltonian for HamiltonianSum {
    fn at(&self, t: f64) -> CMat2 {
        self.terms
            .iter()
            .fold(CMat2::zero(), |acc, (c, h)| acc + h.at(t).scale_re(*c))
    }

    fn frequency_derivative_at(&self, t: f64) -> CMat2 {
        self.terms
            .iter()
            .fold(CMat2::zero(), |acc, (c, h)| acc + h.frequency_derivative_at(t).scale_re(*c))
    }

    fn norm_bound(&self, t0: f64, t1: f64) -> f64 {
        self.terms.iter().map(|(c, h)| c.abs() * h.norm_bound(t0, t1)).sum()
    }
}

/// The interaction-picture Hamiltonian `e^{iω′σZ t} H(t) e^{−iω′σZ t}` of a
/// lab Hamiltonian `H + ω′σZ`.
pub struct RotatingFrame<H> {
    pub inner: H,
    pub drift: f64,
}

impl<H> RotatingFrame<H> {
    fn rotation(&self, t: f64) -> CMat2 {
        frame_rotation(self.drift, t).into_matrix()
    }
}

impl<H: Hamiltonian> Hamiltonian for RotatingFrame<H> {
    fn at(&self, t: f64) -> CMat2 {
        let r = self.rotation(t);
        r * self.inner.at(t) * r.dagger()
    }

    fn frequency_derivative_at(&self, t: f64) -> CMat2 {
        let r = self.rotation(t);
        r * self.inner.frequency_derivative_at(t) * r.dagger()
    }

    fn norm_bound(&self, t0: f64, t1: f64) -> f64 {
        self.inner.norm_bound(t0, t1)
    }
}

/// `exp(iω′σZ t)`.
fn frame_rotation(drift: f64, t: f64) -> Unitary2 {
    pauli_exp(Axis3::Z, -drift * t).expect("finite frame angle")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
            return Err(Error::invalid(format!("time grid needs t1 > t0, got ({t0}, {t1})")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(Self { t0, t1, n_steps })
    }

    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }
}

/// Step count following the default resolution policy:
/// `step ≤ min(π/(50·‖H‖), pulse_interval/20)`.
pub fn default_step_count(norm: f64, length: f64, pulse_interval: Option<f64>) -> usize {
    let mut step = if norm > 0.0 { PI / (50.0 * norm) } else { length };
    if let Some(dt) = pulse_interval {
        step = step.min(dt / 20.0);
    }
    ((length / step).ceil() as usize).max(1)
}

/// Running product of step propagators, optionally with its frequency
/// derivative.
#[derive(Debug, Clone, Copy)]
struct Accumulator {
    u: CMat2,
    du: Option<CMat2>,
}

impl Accumulator {
    fn new(with_derivative: bool) -> Self {
        Self { u: CMat2::identity(), du: with_derivative.then(CMat2::zero) }
    }

    /// Applies a segment of midpoint steps over `[t0, t1]`.
    fn advance<H: Hamiltonian + ?Sized>(&mut self, h: &H, t0: f64, t1: f64, n: usize) -> Result<()> {
        let step = (t1 - t0) / n as f64;
        let product = h.norm_bound(t0, t1) * step;
        if !(product < MAX_NORM_STEP) {
            return Err(Error::Resolution { step, product, limit: MAX_NORM_STEP });
        }
        for k in 0..n {
            let tm = t0 + (k as f64 + 0.5) * step;
            let hm = h.at(tm);
            match self.du.as_mut() {
                None => self.u = exp_hermitian(&hm, step).into_matrix() * self.u,
                Some(du) => {
                    let (s, ds) = exp_hermitian_with_derivative(&hm, &h.frequency_derivative_at(tm), step);
                    *du = ds * self.u + s * *du;
                    self.u = s * self.u;
                }
            }
        }
        Ok(())
    }

    /// Applies a parameter-independent unitary.
    fn kick(&mut self, p: &CMat2) {
        self.u = *p * self.u;
        if let Some(du) = self.du.as_mut() {
            *du = *p * *du;
        }
    }

    fn unitary(&self) -> Unitary2 {
        Unitary2::from_matrix_unchecked(self.u)
    }
}

/// Time-ordered product of `exp(−iH(t_mid)Δ)` over the grid.
pub fn propagate_piecewise<H: Hamiltonian + ?Sized>(h: &H, grid: TimeGrid) -> Result<Unitary2> {
    let mut acc = Accumulator::new(false);
    acc.advance(h, grid.t0, grid.t1, grid.n_steps)?;
    Ok(acc.unitary())
}

/// Like [`propagate_piecewise`], also returning the exact derivative of the
/// discretized propagator with respect to the frequency parameter.
pub fn propagate_piecewise_with_derivative<H: Hamiltonian + ?Sized>(
    h: &H,
    grid: TimeGrid,
) -> Result<(Unitary2, CMat2)> {
    let mut acc = Accumulator::new(true);
    acc.advance(h, grid.t0, grid.t1, grid.n_steps)?;
    Ok((acc.unitary(), acc.du.unwrap_or_else(CMat2::zero)))
}

/// Closed-form propagator of `H1` at detuning `δ` over `(t, t+Δt)`:
/// `exp(−iδσZΔt)·exp(−i(−δσZ + Ω cos(2δt)σX + Ω sin(2δt)σY)Δt)`.
pub fn analytic_slot_unitary(delta: f64, rabi: f64, t: f64, dt: f64) -> Unitary2 {
    analytic_slot_unitary_with_phase(delta, rabi, 0.0, t, dt)
}

/// Slot propagator with an initial signal phase `φ` (the axis angle becomes
/// `2δt + φ`).
pub fn analytic_slot_unitary_with_phase(delta: f64, rabi: f64, phase: f64, t: f64, dt: f64) -> Unitary2 {
    let drift = exp_hermitian(&CMat2::from_pauli(0.0, [0.0, 0.0, delta]), dt);
    let (s, c) = (2.0 * delta * t + phase).sin_cos();
    let body = exp_hermitian(&CMat2::from_pauli(0.0, [rabi * c, rabi * s, -delta]), dt);
    drift.compose(&body)
}

/// Slot propagator (with signal phase `φ`) and its derivative with respect
/// to `δ`.
pub fn analytic_slot_unitary_with_derivative(
    delta: f64,
    rabi: f64,
    phase: f64,
    t: f64,
    dt: f64,
) -> (Unitary2, CMat2) {
    let (a, da) = exp_hermitian_with_derivative(
        &CMat2::from_pauli(0.0, [0.0, 0.0, delta]),
        &CMat2::sigma_z(),
        dt,
    );
    let (s, c) = (2.0 * delta * t + phase).sin_cos();
    let (b, db) = exp_hermitian_with_derivative(
        &CMat2::from_pauli(0.0, [rabi * c, rabi * s, -delta]),
        &CMat2::from_pauli(0.0, [-2.0 * t * rabi * s, 2.0 * t * rabi * c, -1.0]),
        dt,
    );
    (Unitary2::from_matrix_unchecked(a * b), da * b + a * db)
}

/// Closed-form propagator of `H1` at detuning `δ` over `(0, t)`:
/// `exp(−iδσZ t)·exp(−i(−δσZ + ΩσX)t)`.
pub fn analytic_interval_unitary(delta: f64, rabi: f64, t: f64) -> Unitary2 {
    analytic_slot_unitary(delta, rabi, 0.0, t)
}

/// `U_I = exp(iω′σZ t)·U_lab`.
pub fn to_rotating_frame(u_lab: &Unitary2, drift: f64, t: f64) -> Unitary2 {
    frame_rotation(drift, t).compose(u_lab)
}

/// Evolution under `h` with the instantaneous pulses of `seq`, expressed in
/// the sequence's rotating frame. Each inter-pulse segment uses
/// `n_steps_per_segment` midpoint steps.
pub fn evolve_with_pulses<H: Hamiltonian>(
    h: &H,
    seq: &ControlSequence,
    total_time: f64,
    n_steps_per_segment: usize,
) -> Result<Unitary2> {
    if n_steps_per_segment == 0 {
        return Err(Error::invalid("n_steps_per_segment must be positive"));
    }
    check_pulse_range(seq, total_time)?;
    let framed = RotatingFrame { inner: h, drift: seq.frame_drift };
    let mut acc = Accumulator::new(false);
    let mut t = 0.0;
    for pulse in seq.pulses() {
        if pulse.time > t {
            acc.advance(&framed, t, pulse.time, n_steps_per_segment)?;
            t = pulse.time;
        }
        acc.kick(pulse.unitary().matrix());
    }
    if total_time > t {
        acc.advance(&framed, t, total_time, n_steps_per_segment)?;
    }
    Ok(acc.unitary())
}

/// Propagator (and optionally `∂U/∂ω`) at a sample time.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot {
    pub time: f64,
    pub unitary: Unitary2,
    pub derivative: Option<CMat2>,
}

/// Evolves through `seq` and records the frame propagator at each of the
/// strictly increasing `sample_times` (after any pulse at the same instant).
/// Every integration segment uses steps no longer than `max_step`.
pub fn evolve_sampled<H: Hamiltonian>(
    h: &H,
    seq: &ControlSequence,
    sample_times: &[f64],
    max_step: f64,
    with_derivative: bool,
) -> Result<Vec<Snapshot>> {
    if !(max_step > 0.0 && max_step.is_finite()) {
        return Err(Error::invalid("max_step must be positive"));
    }
    if sample_times.windows(2).any(|w| w[1] <= w[0]) || sample_times.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::invalid("sample times must be non-negative and strictly increasing"));
    }
    let horizon = sample_times.last().copied().unwrap_or(0.0);
    let framed = RotatingFrame { inner: h, drift: seq.frame_drift };
    let mut acc = Accumulator::new(with_derivative);
    let mut out = Vec::with_capacity(sample_times.len());
    let mut pulses = seq.pulses().iter().filter(|p| p.time <= horizon).peekable();
    let mut t = 0.0;
    for &ts in sample_times {
        loop {
            let next_pulse = pulses.peek().map(|p| p.time).filter(|&tp| tp <= ts);
            let target = next_pulse.unwrap_or(ts);
            if target > t {
                let n = ((target - t) / max_step).ceil().max(1.0) as usize;
                acc.advance(&framed, t, target, n)?;
                t = target;
            }
            match next_pulse {
                Some(_) => {
                    let p = pulses.next().expect("peeked");
                    acc.kick(p.unitary().matrix());
                }
                None => break,
            }
        }
        out.push(Snapshot { time: ts, unitary: acc.unitary(), derivative: acc.du });
    }
    Ok(out)
}

fn check_pulse_range(seq: &ControlSequence, total_time: f64) -> Result<()> {
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::invalid(format!("total time must be positive, got {total_time}")));
    }
    if let Some(p) = seq.pulses().iter().find(|p| p.time > total_time) {
        return Err(Error::invalid(format!(
            "pulse at t = {} lies outside [0, {total_time}]",
            p.time
        )));
    }
    Ok(())
}

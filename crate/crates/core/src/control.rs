//! Control sequences: a rotating-frame drift plus instantaneous pulses.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Hamiltonian, HamiltonianSpec, HamiltonianSum};
use crate::error::{Error, Result};
use crate::su2::{pauli_exp, Axis3, CMat2, QubitState, Unitary2};

/// Largest `ΩΔt` accepted by [`build_method1`].
pub const METHOD1_MAX_RABI_INTERVAL: f64 = 0.3;

/// An ideal zero-duration rotation of the Bloch vector by `angle` about
/// `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEvent {
    pub time: f64,
    pub axis: Axis3,
    pub angle: f64,
}

impl PulseEvent {
    pub fn new(time: f64, axis: Axis3, angle: f64) -> Result<Self> {
        if !(time >= 0.0 && time.is_finite()) {
            return Err(Error::invalid(format!("pulse time must be finite and non-negative, got {time}")));
        }
        if !angle.is_finite() {
            return Err(Error::invalid("pulse angle must be finite"));
        }
        Ok(Self { time, axis, angle })
    }

    /// A π rotation.
    pub fn pi(axis: Axis3, time: f64) -> Self {
        Self { time, axis, angle: PI }
    }

    /// `exp(−i·(angle/2)·n·σ)`.
    pub fn unitary(&self) -> Unitary2 {
        pauli_exp(self.axis, 0.5 * self.angle).expect("validated angle")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlLabel {
    Pang,
    Method1,
    Method2,
    H2PulseTrain,
    None,
}

/// Frame drift `ω′` plus time-ordered pulses. Evolution under a sequence is
/// expressed in the frame rotating with `ω′σZ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    pub frame_drift: f64,
    pulses: Vec<PulseEvent>,
    pub label: ControlLabel,
}

impl ControlSequence {
    pub fn new(frame_drift: f64, pulses: Vec<PulseEvent>, label: ControlLabel) -> Result<Self> {
        if !frame_drift.is_finite() {
            return Err(Error::invalid("frame drift must be finite"));
        }
        for p in &pulses {
            PulseEvent::new(p.time, p.axis, p.angle)?;
        }
        if pulses.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::invalid("pulse times must be strictly increasing"));
        }
        Ok(Self { frame_drift, pulses, label })
    }

    /// No frame, no pulses.
    pub fn free() -> Self {
        Self { frame_drift: 0.0, pulses: Vec::new(), label: ControlLabel::None }
    }

    pub fn pulses(&self) -> &[PulseEvent] {
        &self.pulses
    }

    pub fn pulse_times(&self) -> Vec<f64> {
        self.pulses.iter().map(|p| p.time).collect()
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn periodic_pulses(axis: Axis3, first: f64, spacing: f64, total_time: f64) -> Vec<PulseEvent> {
    let mut out = Vec::new();
    let mut n = 0usize;
    loop {
        let t = first + n as f64 * spacing;
        if t > total_time * (1.0 + 1e-12) {
            break;
        }
        out.push(PulseEvent::pi(axis, t.min(total_time)));
        n += 1;
    }
    out
}

/// `H1(ω) − H1(ω′)` with `δ = ω − ω′` stored explicitly. Sum-to-product
/// forms keep the small difference accurate when `ω′t` is large.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancelledDrive {
    pub rabi: f64,
    pub reference: f64,
    pub detuning: f64,
}

impl Hamiltonian for CancelledDrive {
    fn at(&self, t: f64) -> CMat2 {
        // cos A − cos B = −2 sin((A+B)/2) sin((A−B)/2), sin A − sin B = 2 cos((A+B)/2) sin((A−B)/2)
        let mean = (2.0 * self.reference + self.detuning) * t;
        let half = self.detuning * t;
        let s = half.sin();
        let om = self.rabi;
        CMat2::from_pauli(0.0, [-2.0 * om * mean.sin() * s, 2.0 * om * mean.cos() * s, 0.0])
    }

    fn frequency_derivative_at(&self, t: f64) -> CMat2 {
        let a = 2.0 * (self.reference + self.detuning) * t;
        let om = self.rabi;
        CMat2::from_pauli(0.0, [-2.0 * t * om * a.sin(), 2.0 * t * om * a.cos(), 0.0])
    }

    fn norm_bound(&self, t0: f64, t1: f64) -> f64 {
        let tmax = t0.abs().max(t1.abs());
        (2.0 * self.rabi).min(2.0 * self.rabi * self.detuning.abs() * tmax)
    }
}

/// Signal cancellation with a known amplitude: the control `−H1(ω′) + ω′σZ`
/// leaves `≈ 2Ωδt σY` in the frame of `ω′σZ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PangControl {
    pub rabi: f64,
    pub sequence: ControlSequence,
}

impl PangControl {
    /// Drive seen by the qubit for a signal at `ω′ + δ`, to be evolved under
    /// [`Self::sequence`].
    pub fn drive(&self, detuning: f64) -> CancelledDrive {
        CancelledDrive { rabi: self.rabi, reference: self.sequence.frame_drift, detuning }
    }

    /// The literal lab Hamiltonian `H1(ω) − H1(ω′) + ω′σZ`; evolve it with
    /// [`ControlSequence::free`] and map with `to_rotating_frame`.
    pub fn additive_lab(&self, detuning: f64) -> HamiltonianSum {
        let w_ref = self.sequence.frame_drift;
        HamiltonianSum {
            terms: vec![
                (1.0, HamiltonianSpec::h1(self.rabi, w_ref + detuning)),
                (-1.0, HamiltonianSpec::h1(self.rabi, w_ref)),
                (1.0, HamiltonianSpec::z_drift(w_ref)),
            ],
        }
    }

    /// Effective Hamiltonian `2Ωδt σY`.
    pub fn effective(&self, detuning: f64) -> HamiltonianSpec {
        HamiltonianSpec::effective_linear_y(self.rabi, detuning)
    }

    /// Ramsey phase `2δΩt²`.
    pub fn predicted_phase(&self, detuning: f64, t: f64) -> f64 {
        2.0 * detuning * self.rabi * t * t
    }

    /// Flip probability from a σZ eigenstate, `sin²(Ωδt²)`.
    pub fn predicted_transition(&self, detuning: f64, t: f64) -> f64 {
        (0.5 * self.predicted_phase(detuning, t)).sin().powi(2)
    }

    /// `4Ω²t⁴`.
    pub fn predicted_qfi(&self, t: f64) -> f64 {
        4.0 * self.rabi.powi(2) * t.powi(4)
    }
}

pub fn build_pang_control(rabi: f64, reference: f64, total_time: f64) -> Result<PangControl> {
    check_positive("rabi", rabi)?;
    check_positive("total time", total_time)?;
    let sequence = ControlSequence::new(reference, Vec::new(), ControlLabel::Pang)?;
    Ok(PangControl { rabi, sequence })
}

/// Y π-pulses every `Δt` in the frame of `ω′σZ`, leaving `≈ Ω sin(2δt) σY`.
pub fn build_method1(rabi: f64, frame_drift: f64, interval: f64, total_time: f64) -> Result<ControlSequence> {
    check_positive("pulse interval", interval)?;
    check_positive("total time", total_time)?;
    if rabi * interval > METHOD1_MAX_RABI_INTERVAL {
        return Err(Error::invalid(format!(
            "ΩΔt = {:.3} exceeds {METHOD1_MAX_RABI_INTERVAL}; the σX term no longer averages out",
            rabi * interval
        )));
    }
    ControlSequence::new(
        frame_drift,
        periodic_pulses(Axis3::Y, interval, interval, total_time),
        ControlLabel::Method1,
    )
}

/// `Δt = (2k+1)π/(2Ω)`.
pub fn method2_interval(rabi_estimate: f64, k: u32) -> f64 {
    (2 * k + 1) as f64 * PI / (2.0 * rabi_estimate)
}

/// X π-pulses every `Δt = (2k+1)π/(2Ω_est)`.
pub fn build_method2(rabi_estimate: f64, k: u32, total_time: f64) -> Result<ControlSequence> {
    check_positive("rabi estimate", rabi_estimate)?;
    build_method2_with_interval(method2_interval(rabi_estimate, k), total_time)
}

/// Method-2 pulse train with an arbitrary (possibly mistimed) interval.
pub fn build_method2_with_interval(interval: f64, total_time: f64) -> Result<ControlSequence> {
    check_positive("pulse interval", interval)?;
    check_positive("total time", total_time)?;
    ControlSequence::new(0.0, periodic_pulses(Axis3::X, interval, interval, total_time), ControlLabel::Method2)
}

/// Predicted `P(|↑x⟩)` from `|↓x⟩` under method 2, including an unknown
/// signal phase: `sin²(δt²/Δt + tφ/Δt)`.
pub fn method2_transition(detuning: f64, phase: f64, t: f64, interval: f64) -> f64 {
    ((detuning * t * t + phase * t) / interval).sin().powi(2)
}

/// X π-pulses at `(π/(4ω′))(2N+1)`, the extrema of `sin(2ω′t)`.
pub fn build_h2_pulse_train(reference: f64, total_time: f64) -> Result<ControlSequence> {
    check_positive("reference frequency", reference)?;
    check_positive("total time", total_time)?;
    let spacing = PI / (2.0 * reference);
    ControlSequence::new(
        0.0,
        periodic_pulses(Axis3::X, 0.5 * spacing, spacing, total_time),
        ControlLabel::H2PulseTrain,
    )
}

/// Relative Z phase `2∫(2/π)Ω sin(2δs) ds` accumulated by the rectified
/// H2 coupling, ignoring pulse signs.
pub fn h2_train_predicted_phase(rabi: f64, detuning: f64, t: f64) -> f64 {
    let amp = 4.0 / PI * rabi;
    if detuning == 0.0 {
        return 0.0;
    }
    amp * (1.0 - (2.0 * detuning * t).cos()) / (2.0 * detuning)
}

/// `|⟨ψ_out|U|ψ0⟩|²`, clamped to `[0, 1]`.
pub fn transition_probability(u: &Unitary2, psi0: &QubitState, psi_out: &QubitState) -> f64 {
    psi_out.inner(&u.apply(psi0)).norm_sqr().clamp(0.0, 1.0)
}

/// `1 − transition_probability`.
pub fn survival_complement(u: &Unitary2, psi0: &QubitState, psi_out: &QubitState) -> f64 {
    1.0 - transition_probability(u, psi0, psi_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_with_pulses, propagate_piecewise, to_rotating_frame, TimeGrid};
    use crate::su2::phase_invariant_distance;

    #[test]
    fn pulse_unitary_is_half_angle() {
        let u = PulseEvent::pi(Axis3::X, 0.0).unitary();
        let expected = CMat2::sigma_x().scale(num_complex::Complex64::new(0.0, -1.0));
        assert!(u.matrix().approx_eq(&expected, 1e-15));
    }

    #[test]
    fn sequence_rejects_unordered_pulses() {
        let p = vec![PulseEvent::pi(Axis3::X, 1.0), PulseEvent::pi(Axis3::X, 1.0)];
        assert!(ControlSequence::new(0.0, p, ControlLabel::None).is_err());
        assert!(PulseEvent::new(-1.0, Axis3::X, PI).is_err());
    }

    #[test]
    fn pang_predictions() {
        let pc = build_pang_control(1.0, 3.0, 10.0).unwrap();
        assert!((pc.predicted_phase(1e-3, 5.0) - 0.05).abs() < 1e-15);
        assert_eq!(pc.predicted_phase(0.0, 5.0), 0.0);
        assert_eq!(pc.predicted_qfi(2.0), 64.0);
    }

    #[test]
    fn cancelled_drive_matches_difference() {
        let d = CancelledDrive { rabi: 0.7, reference: 2.0, detuning: 0.03 };
        let direct = HamiltonianSpec::h1(0.7, 2.03).at(1.3) - HamiltonianSpec::h1(0.7, 2.0).at(1.3);
        assert!(d.at(1.3).approx_eq(&direct, 1e-14));
        let fd = (CancelledDrive { detuning: 0.03 + 1e-6, ..d }.at(1.3)
            - CancelledDrive { detuning: 0.03 - 1e-6, ..d }.at(1.3))
        .scale_re(0.5e6);
        assert!(d.frequency_derivative_at(1.3).approx_eq(&fd, 1e-8));
    }

    #[test]
    fn pang_routes_agree_with_prediction() {
        let (om, w_ref, delta, t) = (1.0, 0.5, 2e-3, 5.0);
        let pc = build_pang_control(om, w_ref, t).unwrap();
        let psi = QubitState::up_z();
        let framed = evolve_with_pulses(&pc.drive(delta), &pc.sequence, t, 20_000).unwrap();
        let lab = propagate_piecewise(&pc.additive_lab(delta), TimeGrid::new(0.0, t, 40_000).unwrap()).unwrap();
        let via_lab = to_rotating_frame(&lab, w_ref, t);
        assert!(phase_invariant_distance(&framed, &via_lab) < 1e-7);
        let p = transition_probability(&framed, &psi, &psi.orthogonal());
        let predicted = pc.predicted_transition(delta, t);
        assert!((p / predicted - 1.0).abs() < 0.01, "{p} vs {predicted}");
    }

    #[test]
    fn method1_guard() {
        assert!(build_method1(1.0, 0.0, 0.31, 10.0).is_err());
        let seq = build_method1(1.0, 0.0, 0.1, 1.0).unwrap();
        assert_eq!(seq.len(), 10);
        assert_eq!(seq.label, ControlLabel::Method1);
    }

    #[test]
    fn method2_pulse_count() {
        let seq = build_method2(1.0, 0, 40.0 * PI / 2.0).unwrap();
        assert_eq!(seq.len(), 40);
        let seq = build_method2(2.0, 1, 10.0).unwrap();
        let expected = (10.0 * 2.0 * 2.0 / (3.0 * PI)).floor() as usize;
        assert_eq!(seq.len(), expected);
        assert!(seq.pulses().last().unwrap().time <= 10.0);
    }

    #[test]
    fn h2_train_times() {
        let seq = build_h2_pulse_train(2.0, 3.0).unwrap();
        for (n, p) in seq.pulses().iter().enumerate() {
            assert!((p.time - PI / 8.0 * (2 * n + 1) as f64).abs() < 1e-14);
        }
        assert!(seq.pulses().last().unwrap().time <= 3.0);
    }

    #[test]
    fn h2_train_without_detuning_keeps_z_state() {
        let w = 5.0;
        let seq = build_h2_pulse_train(w, 4.0).unwrap();
        let u = evolve_with_pulses(&HamiltonianSpec::h2(1.0, w), &seq, 4.0, 200).unwrap();
        let z = QubitState::up_z();
        let p = transition_probability(&u, &z, &z);
        // σZ coupling keeps |↑z⟩; X pulses flip it an odd or even number of times
        assert!(p < 1e-12 || p > 1.0 - 1e-12);
    }

    #[test]
    fn probability_helpers() {
        let id = Unitary2::identity();
        let x = QubitState::up_x();
        assert!(transition_probability(&id, &x, &x.orthogonal()) < 1e-30);
        assert!((survival_complement(&id, &x, &x)).abs() < 1e-15);
        assert!((method2_transition(1e-3, 0.0, 10.0, PI / 2.0) - (0.1 / (PI / 2.0)).sin().powi(2)).abs() < 1e-16);
    }
}

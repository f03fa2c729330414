use crate::control::{ControlLabel, ControlSequence, PulseEvent};
use crate::dynamics::analytic_slot_unitary_with_derivative;
use crate::error::Result;
use crate::fisher::{classical_fi_from_derivative, generator_from_derivative, qfi_max, qfi_state};
use crate::su2::{Axis3, CMat2, QubitState, Unitary2};

/// Evolution under `H1(δ)` cut into equal slots, each followed by an
/// optional π pulse. Slots use the closed-form propagator, so long trains
/// stay exact and cheap; the δ-derivative is carried alongside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotTrain {
    pub rabi: f64,
    pub detuning: f64,
    pub phase: f64,
    pub interval: f64,
    pub pulse_axis: Option<Axis3>,
}

/// Propagator and `∂U/∂δ` at the end of a slot (after its pulse).
#[derive(Debug, Clone, Copy)]
pub struct SlotSample {
    pub slots: usize,
    pub time: f64,
    pub unitary: Unitary2,
    pub derivative: CMat2,
}

impl SlotTrain {
    pub fn new(rabi: f64, detuning: f64, interval: f64, pulse_axis: Option<Axis3>) -> Self {
        Self { rabi, detuning, phase: 0.0, interval, pulse_axis }
    }

    /// The equivalent pulse sequence for evolution with `evolve_with_pulses`.
    pub fn sequence(&self, slots: usize) -> Result<ControlSequence> {
        let pulses = match self.pulse_axis {
            Some(axis) => (1..=slots).map(|n| PulseEvent::pi(axis, n as f64 * self.interval)).collect(),
            None => Vec::new(),
        };
        ControlSequence::new(0.0, pulses, ControlLabel::None)
    }

    /// Calls `visit` after each of the first `n` slots.
    pub fn for_each(&self, n: usize, mut visit: impl FnMut(&SlotSample)) {
        let pulse = self.pulse_axis.map(|a| PulseEvent::pi(a, 0.0).unitary().into_matrix());
        let mut u = CMat2::identity();
        let mut du = CMat2::zero();
        for k in 0..n {
            let t = k as f64 * self.interval;
            let (s, ds) = analytic_slot_unitary_with_derivative(self.detuning, self.rabi, self.phase, t, self.interval);
            let s = s.into_matrix();
            du = ds * u + s * du;
            u = s * u;
            if let Some(p) = pulse {
                u = p * u;
                du = p * du;
            }
            visit(&SlotSample {
                slots: k + 1,
                time: (k + 1) as f64 * self.interval,
                unitary: Unitary2::from_matrix_unchecked(u),
                derivative: du,
            });
        }
    }

    /// Samples after the given (increasing) slot counts.
    pub fn sample(&self, slot_counts: &[usize]) -> Vec<SlotSample> {
        let n = slot_counts.last().copied().unwrap_or(0);
        let mut out = Vec::with_capacity(slot_counts.len());
        let mut next = slot_counts.iter().peekable();
        self.for_each(n, |s| {
            while next.peek().is_some_and(|&&c| c == s.slots) {
                out.push(*s);
                next.next();
            }
        });
        out
    }
}

impl SlotSample {
    pub fn probability(&self, psi0: &QubitState, out: &QubitState) -> f64 {
        crate::control::transition_probability(&self.unitary, psi0, out)
    }

    /// Classical FI of the two-outcome measurement `{out, out⊥}`, or `None`
    /// where the outcome is (numerically) certain.
    pub fn classical_fi(&self, psi0: &QubitState, out: &QubitState) -> Option<f64> {
        let amp = out.inner(&self.unitary.apply(psi0));
        let [a, b] = self.derivative.apply(psi0.amplitudes());
        let damp = out.inner(&QubitState::from_amplitudes_unchecked([a, b]));
        let p = amp.norm_sqr().clamp(0.0, 1.0);
        let dp = 2.0 * (amp.conj() * damp).re;
        (p * (1.0 - p) > 1e-12).then(|| classical_fi_from_derivative(p, dp))
    }

    pub fn state_qfi(&self, psi0: &QubitState) -> f64 {
        qfi_state(&generator_from_derivative(&self.unitary, &self.derivative).matrix, psi0).value
    }

    pub fn max_qfi(&self) -> f64 {
        let g = generator_from_derivative(&self.unitary, &self.derivative).matrix;
        qfi_max(&g).map(|r| r.value).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_with_pulses, HamiltonianSpec};
    use crate::su2::phase_invariant_distance;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn matches_oracle_with_pulses() {
        let train = SlotTrain::new(1.0, 2e-3, FRAC_PI_2, Some(Axis3::X));
        let n = 12;
        let samples = train.sample(&[5, n]);
        assert_eq!(samples.len(), 2);
        let total = n as f64 * FRAC_PI_2;
        let seq = train.sequence(n).unwrap();
        let oracle = evolve_with_pulses(&HamiltonianSpec::h1(1.0, 2e-3), &seq, total, 4000).unwrap();
        assert!(phase_invariant_distance(&samples[1].unitary, &oracle) < 1e-7);
    }

    #[test]
    fn method2_probability_and_fi() {
        let (d, dt) = (1e-3, FRAC_PI_2);
        let train = SlotTrain::new(1.0, d, dt, Some(Axis3::X));
        let s = train.sample(&[30])[0];
        let (psi, out) = (QubitState::down_x(), QubitState::up_x());
        let t = s.time;
        let p = s.probability(&psi, &out);
        assert!((p - (d * t * t / dt).sin().powi(2)).abs() < 1e-3);
        let fi = s.classical_fi(&psi, &out).unwrap();
        assert!((fi / (4.0 * (t * t / dt).powi(2)) - 1.0).abs() < 0.05);
        assert!(fi <= s.state_qfi(&psi) * (1.0 + 1e-9));
        assert!(s.state_qfi(&psi) <= s.max_qfi() * (1.0 + 1e-9));
    }
}

//! Single-qubit frequency-estimation simulator.
//!
//! Builds controlled evolutions of a qubit driven by an oscillating signal
//! and measures how much Fisher information they carry about the signal
//! frequency. Closed-form predictions are checked against a brute-force
//! time-ordered propagator.

pub mod cli;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fisher;
pub mod scalar;
pub mod su2;

pub use control::{ControlLabel, ControlSequence, PulseEvent};
pub use dynamics::{Hamiltonian, HamiltonianKind, HamiltonianSpec, TimeGrid};
pub use error::{Error, Result};
pub use fisher::{FIMatrix2, FisherResult, FisherSource, SegmentationPlan};
pub use su2::{Axis3, CMat2, QubitState, Unitary2};

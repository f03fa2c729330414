//! C ABI over `qfi_lab`.
//!
//! Every function returns a [`QfiStatus`]; results go through out-pointers.
//! On failure a message is kept per thread and can be copied out with
//! [`qfi_last_error_message`]. Handles are created by `*_new`/builder
//! functions and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qfi_lab::control::{build_h2_pulse_train, build_method1, build_method2, ControlLabel, ControlSequence};
use qfi_lab::dynamics::{evolve_sampled, evolve_with_pulses, HamiltonianSpec};
use qfi_lab::fisher::{closed_form_fi, generator_from_derivative, optimal_x, qfi_max, FormulaId, FormulaParams};
use qfi_lab::su2::{pauli_exp, Axis3, CMat2};
use qfi_lab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Resolution = 3,
    NumericalDerivative = 4,
    UnknownFormula = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiHamiltonianKind {
    H1 = 0,
    H2 = 1,
    EffectiveLinearY = 2,
    EffectiveLinearZ = 3,
    ZDrift = 4,
}

/// Row-major 2x2 complex matrix: entry `(r, c)` is `re[2r+c] + i·im[2r+c]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiMat2 {
    pub re: [f64; 4],
    pub im: [f64; 4],
}

/// Parameters of a closed-form FI expression; unused fields are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiFormulaParams {
    pub rabi: f64,
    pub frequency: f64,
    pub detuning: f64,
    pub time: f64,
    pub tau: f64,
    pub k: u32,
}

/// Opaque signal Hamiltonian.
pub struct QfiHamiltonian {
    spec: HamiltonianSpec,
}

/// Opaque control sequence.
pub struct QfiControlSequence {
    seq: ControlSequence,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> QfiStatus {
    match e {
        Error::Resolution { .. } => QfiStatus::Resolution,
        Error::NumericalDerivative { .. } => QfiStatus::NumericalDerivative,
        Error::UnknownFormula(_) => QfiStatus::UnknownFormula,
        _ => QfiStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QfiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            QfiStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            QfiStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_string());
            QfiStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

fn to_ffi(m: &CMat2) -> QfiMat2 {
    let mut out = QfiMat2 { re: [0.0; 4], im: [0.0; 4] };
    for r in 0..2 {
        for c in 0..2 {
            out.re[2 * r + c] = m.m[r][c].re;
            out.im[2 * r + c] = m.m[r][c].im;
        }
    }
    out
}

fn from_ffi(m: &QfiMat2) -> CMat2 {
    let e = |i: usize| qfi_lab::su2::C64::new(m.re[i], m.im[i]);
    CMat2 { m: [[e(0), e(1)], [e(2), e(3)]] }
}

fn boxed_out<T>(value: T, out: *mut *mut T) -> Result<(), Failure> {
    let slot = unsafe { out_ref(out, "out")? };
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qfi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns the full message
/// length excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qfi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a signal Hamiltonian. For `ZDrift`, `frequency` is the drift.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to be
/// released with [`qfi_hamiltonian_free`].
#[no_mangle]
pub unsafe extern "C" fn qfi_hamiltonian_new(
    kind: QfiHamiltonianKind,
    rabi: f64,
    frequency: f64,
    phase: f64,
    out: *mut *mut QfiHamiltonian,
) -> QfiStatus {
    guard(|| {
        let spec = match kind {
            QfiHamiltonianKind::H1 => HamiltonianSpec::h1(rabi, frequency),
            QfiHamiltonianKind::H2 => HamiltonianSpec::h2(rabi, frequency),
            QfiHamiltonianKind::EffectiveLinearY => HamiltonianSpec::effective_linear_y(rabi, frequency),
            QfiHamiltonianKind::EffectiveLinearZ => HamiltonianSpec::effective_linear_z(rabi, frequency),
            QfiHamiltonianKind::ZDrift => HamiltonianSpec::z_drift(frequency),
        }
        .with_phase(phase);
        spec.validate()?;
        boxed_out(QfiHamiltonian { spec }, out)
    })
}

/// # Safety
/// `h` must be null or a handle from [`qfi_hamiltonian_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qfi_hamiltonian_free(h: *mut QfiHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Free evolution in the frame of `frame_drift·σZ`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfi_control_free_evolution(frame_drift: f64, out: *mut *mut QfiControlSequence) -> QfiStatus {
    guard(|| {
        let seq = ControlSequence::new(frame_drift, Vec::new(), ControlLabel::None)?;
        boxed_out(QfiControlSequence { seq }, out)
    })
}

/// Y π pulses every `interval` in the frame of `frame_drift·σZ`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfi_control_method1(
    rabi: f64,
    frame_drift: f64,
    interval: f64,
    total_time: f64,
    out: *mut *mut QfiControlSequence,
) -> QfiStatus {
    guard(|| {
        let seq = build_method1(rabi, frame_drift, interval, total_time)?;
        boxed_out(QfiControlSequence { seq }, out)
    })
}

/// X π pulses every `(2k+1)π/(2Ω)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfi_control_method2(
    rabi_estimate: f64,
    k: u32,
    total_time: f64,
    out: *mut *mut QfiControlSequence,
) -> QfiStatus {
    guard(|| {
        let seq = build_method2(rabi_estimate, k, total_time)?;
        boxed_out(QfiControlSequence { seq }, out)
    })
}

/// X π pulses at `(2N+1)π/(4ω′)` for the `σZ` signal.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfi_control_h2_train(
    reference: f64,
    total_time: f64,
    out: *mut *mut QfiControlSequence,
) -> QfiStatus {
    guard(|| {
        let seq = build_h2_pulse_train(reference, total_time)?;
        boxed_out(QfiControlSequence { seq }, out)
    })
}

/// # Safety
/// `seq` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfi_control_pulse_count(seq: *const QfiControlSequence, out: *mut usize) -> QfiStatus {
    guard(|| {
        let seq = in_ref(seq, "seq")?;
        *out_ref(out, "out")? = seq.seq.len();
        Ok(())
    })
}

/// # Safety
/// `seq` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qfi_control_free(seq: *mut QfiControlSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// `exp(−i·angle·n̂·σ)` for the axis `(nx, ny, nz)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfi_pauli_exp(nx: f64, ny: f64, nz: f64, angle: f64, out: *mut QfiMat2) -> QfiStatus {
    guard(|| {
        let axis = Axis3::new(nx, ny, nz)?;
        let u = pauli_exp(axis, angle)?;
        *out_ref(out, "out")? = to_ffi(u.matrix());
        Ok(())
    })
}

/// Propagator at `total_time` in the frame of `seq`, using
/// `steps_per_segment` midpoint steps between pulses.
///
/// # Safety
/// `h` and `seq` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfi_evolve(
    h: *const QfiHamiltonian,
    seq: *const QfiControlSequence,
    total_time: f64,
    steps_per_segment: usize,
    out: *mut QfiMat2,
) -> QfiStatus {
    guard(|| {
        let (h, seq) = (in_ref(h, "h")?, in_ref(seq, "seq")?);
        let u = evolve_with_pulses(&h.spec, &seq.seq, total_time, steps_per_segment)?;
        *out_ref(out, "out")? = to_ffi(u.matrix());
        Ok(())
    })
}

/// Generator `i U†∂U/∂ω` of the frequency at `total_time`, with
/// integration steps no longer than `max_step`.
///
/// # Safety
/// `h` and `seq` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfi_generator(
    h: *const QfiHamiltonian,
    seq: *const QfiControlSequence,
    total_time: f64,
    max_step: f64,
    out: *mut QfiMat2,
) -> QfiStatus {
    guard(|| {
        let (h, seq) = (in_ref(h, "h")?, in_ref(seq, "seq")?);
        let snap = evolve_sampled(&h.spec, &seq.seq, &[total_time], max_step, true)?[0];
        let du = snap.derivative.expect("tangent was requested");
        *out_ref(out, "out")? = to_ffi(&generator_from_derivative(&snap.unitary, &du).matrix);
        Ok(())
    })
}

/// Maximum QFI `(λmax − λmin)²` of a Hermitian generator.
///
/// # Safety
/// `generator` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qfi_max_qfi(generator: *const QfiMat2, out: *mut f64) -> QfiStatus {
    guard(|| {
        let g = from_ffi(in_ref(generator, "generator")?);
        *out_ref(out, "out")? = qfi_max(&g)?.value;
        Ok(())
    })
}

/// Evaluates a closed-form FI expression by its string id, e.g.
/// `"method2"` or `"segmented_no_control"`.
///
/// # Safety
/// `formula` must be a NUL-terminated string; `params` and `out` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qfi_closed_form(
    formula: *const c_char,
    params: *const QfiFormulaParams,
    out: *mut f64,
) -> QfiStatus {
    guard(|| {
        if formula.is_null() {
            return Err(Failure::Null("formula"));
        }
        let name = CStr::from_ptr(formula).to_string_lossy();
        let id: FormulaId = name.parse()?;
        let p = in_ref(params, "params")?;
        let params = FormulaParams {
            rabi: p.rabi,
            frequency: p.frequency,
            detuning: p.detuning,
            time: p.time,
            tau: p.tau,
            k: p.k,
        };
        *out_ref(out, "out")? = closed_form_fi(id, &params)?.value;
        Ok(())
    })
}

/// Root of `tan x = 2x` in `(0, π/2)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qfi_optimal_x(out: *mut f64) -> QfiStatus {
    guard(|| {
        *out_ref(out, "out")? = optimal_x();
        Ok(())
    })
}

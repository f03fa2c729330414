//! Exact 2x2 complex algebra for single-qubit evolution.
//!
//! Every Hermitian operator on a qubit is `a0·1 + a·σ`, so exponentials,
//! eigenvalues and derivatives all have closed forms and no general-purpose
//! linear algebra is needed.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Entrywise tolerance for unitarity checks.
pub const TOL_UNITARY: f64 = 1e-12;
/// Tolerance on `‖H − H†‖` for operators treated as Hermitian.
pub const TOL_HERMITIAN: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// A 2x2 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct CMat2 {
    pub m: [[C64; 2]; 2],
}

impl fmt::Debug for CMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

impl CMat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn sigma_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma_y() -> Self {
        Self::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn sigma_z() -> Self {
        Self::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    /// Builds `a0·1 + ax·σX + ay·σY + az·σZ`.
    pub fn from_pauli(a0: f64, a: [f64; 3]) -> Self {
        Self::new(
            C64::new(a0 + a[2], 0.0),
            C64::new(a[0], -a[1]),
            C64::new(a[0], a[1]),
            C64::new(a0 - a[2], 0.0),
        )
    }

    /// Real Pauli coordinates `(a0, [ax, ay, az])` of the Hermitian part.
    pub fn pauli_components(&self) -> (f64, [f64; 3]) {
        let [[a, b], [c, d]] = self.m;
        let a0 = 0.5 * (a.re + d.re);
        let az = 0.5 * (a.re - d.re);
        let ax = 0.5 * (b.re + c.re);
        let ay = 0.5 * (c.im - b.im);
        (a0, [ax, ay, az])
    }

    pub fn dagger(&self) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self::new(a.conj(), c.conj(), b.conj(), d.conj())
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self::new(a * s, b * s, c * s, d * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `‖H − H†‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        (*self - self.dagger()).frobenius_norm()
    }

    /// `(H + H†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.dagger()).scale_re(0.5)
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

impl Add for CMat2 {
    type Output = CMat2;
    fn add(self, o: CMat2) -> CMat2 {
        let mut r = self;
        for (x, y) in r.m.iter_mut().flatten().zip(o.m.iter().flatten()) {
            *x += y;
        }
        r
    }
}

impl Sub for CMat2 {
    type Output = CMat2;
    fn sub(self, o: CMat2) -> CMat2 {
        let mut r = self;
        for (x, y) in r.m.iter_mut().flatten().zip(o.m.iter().flatten()) {
            *x -= y;
        }
        r
    }
}

impl Neg for CMat2 {
    type Output = CMat2;
    fn neg(self) -> CMat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for CMat2 {
    type Output = CMat2;
    fn mul(self, o: CMat2) -> CMat2 {
        let a = &self.m;
        let b = &o.m;
        CMat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// A real unit vector used as a rotation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis3 {
    n: [f64; 3],
}

impl Axis3 {
    pub const X: Axis3 = Axis3 { n: [1.0, 0.0, 0.0] };
    pub const Y: Axis3 = Axis3 { n: [0.0, 1.0, 0.0] };
    pub const Z: Axis3 = Axis3 { n: [0.0, 0.0, 1.0] };

    /// Accepts a vector that is already unit length to within `TOL_UNITARY`.
    pub fn new(nx: f64, ny: f64, nz: f64) -> Result<Self> {
        let norm = (nx * nx + ny * ny + nz * nz).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > TOL_UNITARY {
            return Err(Error::invalid(format!(
                "rotation axis ({nx}, {ny}, {nz}) is not a unit vector (norm {norm})"
            )));
        }
        Ok(Self { n: [nx, ny, nz] })
    }

    /// Rescales any non-zero finite vector onto the unit sphere.
    pub fn normalized(nx: f64, ny: f64, nz: f64) -> Result<Self> {
        let norm = (nx * nx + ny * ny + nz * nz).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("cannot normalize a zero or non-finite axis"));
        }
        Ok(Self { n: [nx / norm, ny / norm, nz / norm] })
    }

    /// Unit vector in the XY plane at azimuth `phi`.
    pub fn in_xy_plane(phi: f64) -> Self {
        Self { n: [phi.cos(), phi.sin(), 0.0] }
    }

    pub fn components(&self) -> [f64; 3] {
        self.n
    }

    /// `n·σ`.
    pub fn sigma(&self) -> CMat2 {
        CMat2::from_pauli(0.0, self.n)
    }
}

/// A 2x2 unitary. Products of unitaries stay unitary, so composition does
/// not re-validate.
#[derive(Clone, Copy, PartialEq)]
pub struct Unitary2(CMat2);

impl fmt::Debug for Unitary2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Unitary2({:?})", self.0)
    }
}

impl Unitary2 {
    pub fn new(m: CMat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::invalid("unitary has non-finite entries"));
        }
        let defect = (m.dagger() * m).max_abs_diff(&CMat2::identity());
        let det_defect = (m.det().norm() - 1.0).abs();
        if defect > TOL_UNITARY || det_defect > TOL_UNITARY {
            return Err(Error::invalid(format!(
                "matrix is not unitary (|U†U - 1| = {defect:.3e}, ||det| - 1| = {det_defect:.3e})"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is unitary by construction.
    pub(crate) fn from_matrix_unchecked(m: CMat2) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(CMat2::identity())
    }

    pub fn matrix(&self) -> &CMat2 {
        &self.0
    }

    pub fn into_matrix(self) -> CMat2 {
        self.0
    }

    /// `self · other`: `other` acts first.
    pub fn compose(&self, other: &Unitary2) -> Unitary2 {
        Unitary2(self.0 * other.0)
    }

    pub fn dagger(&self) -> Unitary2 {
        Unitary2(self.0.dagger())
    }

    pub fn apply(&self, psi: &QubitState) -> QubitState {
        QubitState::from_amplitudes_unchecked(self.0.apply(psi.amplitudes()))
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.dagger() * self.0).max_abs_diff(&CMat2::identity())
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;
    fn mul(self, o: Unitary2) -> Unitary2 {
        self.compose(&o)
    }
}

/// Pure qubit state in the σZ basis `(|↑z⟩, |↓z⟩)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    amp: [C64; 2],
}

impl QubitState {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > TOL_UNITARY {
            return Err(Error::invalid(format!("state is not normalized (norm {norm})")));
        }
        Ok(Self { amp: [a, b] })
    }

    pub fn normalized(a: C64, b: C64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("cannot normalize a zero state"));
        }
        Ok(Self { amp: [a / norm, b / norm] })
    }

    pub(crate) fn from_amplitudes_unchecked(amp: [C64; 2]) -> Self {
        Self { amp }
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.amp
    }

    pub fn up_z() -> Self {
        Self { amp: [ONE, ZERO] }
    }

    pub fn down_z() -> Self {
        Self { amp: [ZERO, ONE] }
    }

    /// +1 eigenstate of σX.
    pub fn up_x() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self { amp: [s, s] }
    }

    /// −1 eigenstate of σX.
    pub fn down_x() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self { amp: [s, -s] }
    }

    pub fn up_y() -> Self {
        let s = FRAC_1_SQRT_2;
        Self { amp: [C64::new(s, 0.0), C64::new(0.0, s)] }
    }

    pub fn down_y() -> Self {
        let s = FRAC_1_SQRT_2;
        Self { amp: [C64::new(s, 0.0), C64::new(0.0, -s)] }
    }

    /// Pure state with Bloch vector at polar angle `theta`, azimuth `phi`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self { amp: [C64::new(c, 0.0), C64::from_polar(s, phi)] }
    }

    /// The orthogonal state (antipodal on the Bloch sphere).
    pub fn orthogonal(&self) -> Self {
        let [a, b] = self.amp;
        Self { amp: [-b.conj(), a.conj()] }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QubitState) -> C64 {
        self.amp[0].conj() * other.amp[0] + self.amp[1].conj() * other.amp[1]
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, op: &CMat2) -> C64 {
        let v = op.apply(self.amp);
        self.amp[0].conj() * v[0] + self.amp[1].conj() * v[1]
    }

    pub fn norm(&self) -> f64 {
        (self.amp[0].norm_sqr() + self.amp[1].norm_sqr()).sqrt()
    }
}

/// `exp(−i·angle·(n·σ)) = cos(angle)·1 − i·sin(angle)·(n·σ)`.
///
/// With this convention a π rotation of the Bloch vector about `n` is
/// `pauli_exp(n, π/2) = −i(n·σ)`.
pub fn pauli_exp(axis: Axis3, angle: f64) -> Result<Unitary2> {
    if !angle.is_finite() {
        return Err(Error::invalid("rotation angle must be finite"));
    }
    let (s, c) = angle.sin_cos();
    let [nx, ny, nz] = axis.n;
    Ok(Unitary2(CMat2::new(
        C64::new(c, -s * nz),
        C64::new(-s * ny, -s * nx),
        C64::new(s * ny, -s * nx),
        C64::new(c, s * nz),
    )))
}

/// `exp(−i·dt·H)` for Hermitian `H` (only the Hermitian part is used).
pub fn exp_hermitian(h: &CMat2, dt: f64) -> Unitary2 {
    let (a0, a) = h.pauli_components();
    su2_exp([a[0] * dt, a[1] * dt, a[2] * dt]).phase(-a0 * dt)
}

/// `exp(−i·dt·H(p))` together with its derivative `d/dp` given `dH/dp`.
pub fn exp_hermitian_with_derivative(h: &CMat2, dh: &CMat2, dt: f64) -> (CMat2, CMat2) {
    let (a0, a) = h.pauli_components();
    let (b0, b) = dh.pauli_components();
    let v = [a[0] * dt, a[1] * dt, a[2] * dt];
    let vdot = [b[0] * dt, b[1] * dt, b[2] * dt];
    let (k, dk) = su2_exp_with_derivative(v, vdot);
    let global = C64::from_polar(1.0, -a0 * dt);
    let u = k.scale(global);
    // d/dp e^{-i a0 dt} = -i b0 dt e^{-i a0 dt}
    let du = dk.scale(global) + u.scale(C64::new(0.0, -b0 * dt));
    (u, du)
}

struct Su2(CMat2);

impl Su2 {
    fn phase(self, theta: f64) -> Unitary2 {
        Unitary2(self.0.scale(C64::from_polar(1.0, theta)))
    }
}

/// `exp(−i v·σ)`.
fn su2_exp(v: [f64; 3]) -> Su2 {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if r == 0.0 {
        return Su2(CMat2::identity());
    }
    let (s, c) = r.sin_cos();
    let f = s / r;
    Su2(CMat2::new(
        C64::new(c, -f * v[2]),
        C64::new(-f * v[1], -f * v[0]),
        C64::new(f * v[1], -f * v[0]),
        C64::new(c, f * v[2]),
    ))
}

/// `exp(−i v·σ)` and its derivative along `v̇`.
///
/// Writing `exp(−i v·σ) = cos r − i (sin r / r) v·σ` with `r = |v|`, the
/// derivative is `−sin r ṙ − i [g(r) ṙ v·σ + (sin r / r) v̇·σ]`, where
/// `g = d/dr (sin r / r)` and `ṙ = v·v̇ / r`.
fn su2_exp_with_derivative(v: [f64; 3], vdot: [f64; 3]) -> (CMat2, CMat2) {
    let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let r = r2.sqrt();
    let vv = v[0] * vdot[0] + v[1] * vdot[1] + v[2] * vdot[2];
    let (sinc, dsinc_over_r, cos_r, dcos) = if r < 1e-4 {
        // series: sinc = 1 - r²/6 + r⁴/120, (d sinc/dr)/r = -1/3 + r²/30
        let sinc = 1.0 - r2 / 6.0 + r2 * r2 / 120.0;
        let dsinc_over_r = -1.0 / 3.0 + r2 / 30.0;
        let cos_r = 1.0 - r2 / 2.0 + r2 * r2 / 24.0;
        // d cos r = -sin r ṙ = -sinc · (v·v̇)
        (sinc, dsinc_over_r, cos_r, -sinc * vv)
    } else {
        let (s, c) = r.sin_cos();
        let sinc = s / r;
        let dsinc_over_r = (c - sinc) / r2;
        (sinc, dsinc_over_r, c, -sinc * vv)
    };
    let k = CMat2::new(
        C64::new(cos_r, -sinc * v[2]),
        C64::new(-sinc * v[1], -sinc * v[0]),
        C64::new(sinc * v[1], -sinc * v[0]),
        C64::new(cos_r, sinc * v[2]),
    );
    // d(sinc · v) = dsinc_over_r · (v·v̇) · v + sinc · v̇
    let g = dsinc_over_r * vv;
    let w = [
        g * v[0] + sinc * vdot[0],
        g * v[1] + sinc * vdot[1],
        g * v[2] + sinc * vdot[2],
    ];
    let dk = CMat2::new(
        C64::new(dcos, -w[2]),
        C64::new(-w[1], -w[0]),
        C64::new(w[1], -w[0]),
        C64::new(dcos, w[2]),
    );
    (k, dk)
}

/// Closed-form eigenvalues `(λmin, λmax)` of a 2x2 Hermitian matrix.
pub fn eig_spread_hermitian(h: &CMat2) -> Result<(f64, f64)> {
    if !h.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let residual = h.hermiticity_residual();
    if residual >= TOL_HERMITIAN * h.frobenius_norm().max(1.0) {
        return Err(Error::invalid(format!(
            "matrix is not Hermitian (‖H − H†‖ = {residual:.3e})"
        )));
    }
    let (a0, a) = h.pauli_components();
    let r = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    Ok((a0 - r, a0 + r))
}

/// `min_θ ‖U − e^{iθ} V‖_F`, the distance between unitaries modulo global phase.
pub fn phase_invariant_distance(u: &Unitary2, v: &Unitary2) -> f64 {
    let overlap = (v.0.dagger() * u.0).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    (u.0 - v.0.scale(phase)).frobenius_norm()
}

//! Fisher information: quantum (from unitaries), classical (from outcome
//! probabilities), the two-parameter matrix and segmented totals.

mod formulas;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::su2::{eig_spread_hermitian, CMat2, QubitState, Unitary2};

pub use formulas::{
    closed_form_fi, h2_large_detuning_optimum, h2_window_qfi, method1_angle_derivative, optimal_tau_no_control,
    optimal_x, qfi_upper_bound, FormulaId, FormulaParams, OptimalPeriod,
};

/// Hermiticity residual above which a numerical generator is rejected.
pub const GENERATOR_FAIL_RESIDUAL: f64 = 1e-5;
/// Hermiticity residual above which a numerical generator is suspicious.
pub const GENERATOR_WARN_RESIDUAL: f64 = 1e-7;
/// Distance of `P` from 0 or 1 below which the classical FI uses the
/// curvature limit.
pub const PROBABILITY_EDGE: f64 = 1e-9;
/// Condition number at which a FI matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherSource {
    ClosedForm,
    NumericQfi,
    NumericClassical,
    UpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub value: f64,
    pub source: FisherSource,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// Validity regime of a closed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
    /// Set when the classical FI fell back to the curvature limit.
    #[serde(default)]
    pub edge_fallback: bool,
}

impl FisherResult {
    pub fn new(value: f64, source: FisherSource) -> Self {
        Self { value, source, params: BTreeMap::new(), regime: None, edge_fallback: false }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }
}

/// `G = i·U†·∂U` from a numerical derivative.
#[derive(Debug, Clone, Copy)]
pub struct Generator {
    /// Hermitized generator.
    pub matrix: CMat2,
    /// `‖G − G†‖ / max(‖G‖, 1)` before Hermitization.
    pub residual: f64,
}

impl Generator {
    pub fn is_suspicious(&self) -> bool {
        self.residual > GENERATOR_WARN_RESIDUAL
    }
}

/// Default finite-difference step `1e-6·max(|p|, 1)`.
pub fn default_step(param: f64) -> f64 {
    1e-6 * param.abs().max(1.0)
}

fn central_richardson<T, F>(f: &F, p: f64, h: f64) -> Result<T>
where
    T: Copy + Add<Output = T> + std::ops::Sub<Output = T> + Scale,
    F: Fn(f64) -> Result<T>,
{
    let d1 = (f(p + h)? - f(p - h)?).times(0.5 / h);
    let h2 = 0.5 * h;
    let d2 = (f(p + h2)? - f(p - h2)?).times(0.5 / h2);
    Ok((d2.times(4.0) - d1).times(1.0 / 3.0))
}

trait Scale {
    fn times(self, s: f64) -> Self;
}

impl Scale for f64 {
    fn times(self, s: f64) -> Self {
        self * s
    }
}

impl Scale for CMat2 {
    fn times(self, s: f64) -> Self {
        self.scale_re(s)
    }
}

/// Generator of a parametrized unitary family by central differences with
/// one Richardson step.
pub fn qfi_generator<F>(u_of_param: F, param: f64, h: Option<f64>) -> Result<Generator>
where
    F: Fn(f64) -> Result<Unitary2>,
{
    let h = h.unwrap_or_else(|| default_step(param));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let f = |p: f64| u_of_param(p).map(Unitary2::into_matrix);
    let du = central_richardson(&f, param, h)?;
    let u = u_of_param(param)?;
    let generator = generator_from_derivative(&u, &du);
    if generator.residual > GENERATOR_FAIL_RESIDUAL || !generator.matrix.is_finite() {
        return Err(Error::NumericalDerivative { residual: generator.residual });
    }
    Ok(generator)
}

/// Generator from an exact (or tangent-propagated) derivative `∂U`.
pub fn generator_from_derivative(u: &Unitary2, du: &CMat2) -> Generator {
    let g = (u.matrix().dagger() * *du).scale(C64::new(0.0, 1.0));
    let residual = g.hermiticity_residual() / g.frobenius_norm().max(1.0);
    Generator { matrix: g.hermitian_part(), residual }
}

/// Maximum QFI over input states, `(λmax − λmin)²`.
pub fn qfi_max(generator: &CMat2) -> Result<FisherResult> {
    let (lo, hi) = eig_spread_hermitian(&generator.hermitian_part())?;
    Ok(FisherResult::new((hi - lo).powi(2), FisherSource::NumericQfi))
}

/// QFI for a fixed input state, `4·Var_ψ(G)`.
pub fn qfi_state(generator: &CMat2, psi0: &QubitState) -> FisherResult {
    let g = generator.hermitian_part();
    let mean = psi0.expectation(&g).re;
    let shifted = g - CMat2::identity().scale_re(mean);
    let [a, b] = shifted.apply(psi0.amplitudes());
    FisherResult::new(4.0 * (a.norm_sqr() + b.norm_sqr()), FisherSource::NumericQfi)
}

/// `(∂P)²(1/P + 1/(1−P))` for a two-outcome measurement.
pub fn classical_fi_from_derivative(p: f64, dp: f64) -> f64 {
    let q = 1.0 - p;
    dp * dp / (p * q)
}

/// Classical FI of a two-outcome measurement with success probability
/// `p_of_param`. Near `P ∈ {0, 1}` the value is the limit `2|P''|`.
pub fn classical_fi<F>(p_of_param: F, param: f64, h: Option<f64>) -> Result<FisherResult>
where
    F: Fn(f64) -> f64,
{
    let h = h.unwrap_or_else(|| default_step(param));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let p0 = p_of_param(param);
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::invalid(format!("probability {p0} outside [0, 1]")));
    }
    let f = |x: f64| Ok(p_of_param(x));
    if p0.min(1.0 - p0) < PROBABILITY_EDGE {
        let h2 = 1e2 * h;
        let second = (p_of_param(param + h2) - 2.0 * p0 + p_of_param(param - h2)) / (h2 * h2);
        let mut r = FisherResult::new(2.0 * second.abs(), FisherSource::NumericClassical);
        r.edge_fallback = true;
        return Ok(r);
    }
    let dp: f64 = central_richardson(&f, param, h)?;
    Ok(FisherResult::new(classical_fi_from_derivative(p0, dp), FisherSource::NumericClassical))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param2 {
    Delta,
    Phi,
}

impl Param2 {
    fn index(self) -> usize {
        match self {
            Param2::Delta => 0,
            Param2::Phi => 1,
        }
    }
}

/// Symmetric PSD information matrix over `(δ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FIMatrix2 {
    pub m: [[f64; 2]; 2],
}

impl FIMatrix2 {
    pub const LABELS: [&'static str; 2] = ["delta", "phi"];

    pub fn new(m: [[f64; 2]; 2]) -> Result<Self> {
        let scale = m[0][0].abs().max(m[1][1].abs()).max(1.0);
        if !m.iter().flatten().all(|x| x.is_finite()) {
            return Err(Error::invalid("FI matrix entries must be finite"));
        }
        if (m[0][1] - m[1][0]).abs() > 1e-10 * scale {
            return Err(Error::invalid("FI matrix is not symmetric"));
        }
        let out = Self { m };
        let (lo, _) = out.eigenvalues();
        if lo < -1e-10 * scale {
            return Err(Error::invalid(format!("FI matrix is not positive semidefinite (λmin = {lo:.3e})")));
        }
        Ok(out)
    }

    pub fn zero() -> Self {
        Self { m: [[0.0; 2]; 2] }
    }

    /// `g gᵀ·w` for a gradient `g` and weight `w ≥ 0`.
    pub fn outer(g: [f64; 2], w: f64) -> Self {
        let off = g[0] * g[1] * w;
        Self { m: [[g[0] * g[0] * w, off], [off, g[1] * g[1] * w]] }
    }

    /// `(λmin, λmax)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let [[a, b], [_, d]] = self.m;
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        let hi = mean + r;
        // det/λmax keeps the small eigenvalue accurate
        let lo = if hi != 0.0 { (a * d - b * b) / hi } else { mean - r };
        (lo.min(hi), hi.max(lo))
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `λmin/λmax`, or 0 for the zero matrix.
    pub fn eigenvalue_ratio(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        if hi > 0.0 {
            lo.max(0.0) / hi
        } else {
            0.0
        }
    }
}

impl Add for FIMatrix2 {
    type Output = FIMatrix2;
    fn add(self, o: FIMatrix2) -> FIMatrix2 {
        let mut m = self.m;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x += o.m[i][j];
            }
        }
        FIMatrix2 { m }
    }
}

/// Drops the negative eigen-component left by finite-difference error.
fn psd_part(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let (lo, _) = FIMatrix2 { m }.eigenvalues();
    if lo >= 0.0 {
        return m;
    }
    let [[a, b], [_, d]] = m;
    let (u1, u2) = ([b, lo - a], [lo - d, b]);
    let u = if u1[0].hypot(u1[1]) >= u2[0].hypot(u2[1]) { u1 } else { u2 };
    let n2 = u[0] * u[0] + u[1] * u[1];
    if n2 == 0.0 {
        return [[a.max(0.0), 0.0], [0.0, d.max(0.0)]];
    }
    let k = lo / n2;
    let off = b - k * u[0] * u[1];
    [[a - k * u[0] * u[0], off], [off, d - k * u[1] * u[1]]]
}

/// Classical FI matrix of a two-outcome measurement whose probability
/// depends on `(δ, φ)`.
pub fn fi_matrix_2<F>(p_of_params: F, at: (f64, f64), h: Option<f64>) -> Result<FIMatrix2>
where
    F: Fn(f64, f64) -> f64,
{
    let (d, phi) = at;
    let hd = h.unwrap_or_else(|| default_step(d));
    let hp = h.unwrap_or_else(|| default_step(phi));
    let p0 = p_of_params(d, phi);
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::invalid(format!("probability {p0} outside [0, 1]")));
    }
    if p0.min(1.0 - p0) < PROBABILITY_EDGE {
        let (a, b) = (1e2 * hd, 1e2 * hp);
        let f = |x: f64, y: f64| p_of_params(x, y);
        let hdd = (f(d + a, phi) - 2.0 * p0 + f(d - a, phi)) / (a * a);
        let hpp = (f(d, phi + b) - 2.0 * p0 + f(d, phi - b)) / (b * b);
        let hdp = (f(d + a, phi + b) - f(d + a, phi - b) - f(d - a, phi + b) + f(d - a, phi - b)) / (4.0 * a * b);
        let sign = if p0 < 0.5 { 2.0 } else { -2.0 };
        return FIMatrix2::new(psd_part([[sign * hdd, sign * hdp], [sign * hdp, sign * hpp]]));
    }
    let gd: f64 = central_richardson(&|x: f64| Ok(p_of_params(x, phi)), d, hd)?;
    let gp: f64 = central_richardson(&|y: f64| Ok(p_of_params(d, y)), phi, hp)?;
    FIMatrix2::new(FIMatrix2::outer([gd, gp], 1.0 / (p0 * (1.0 - p0))).m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrbVariance {
    Finite(f64),
    Singular { condition: f64 },
}

impl CrbVariance {
    pub fn finite(self) -> Option<f64> {
        match self {
            CrbVariance::Finite(v) => Some(v),
            CrbVariance::Singular { .. } => None,
        }
    }
}

/// `(M⁻¹)_{which,which}`, or `Singular` when the condition number reaches
/// [`SINGULAR_CONDITION`].
pub fn crb_variance(m: &FIMatrix2, which: Param2) -> CrbVariance {
    let (lo, hi) = m.eigenvalues();
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < SINGULAR_CONDITION) {
        return CrbVariance::Singular { condition };
    }
    let i = which.index();
    CrbVariance::Finite(m.m[1 - i][1 - i] / m.determinant())
}

/// Windows of length `τ` tiling `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationPlan {
    pub tau: f64,
    pub total: f64,
}

impl SegmentationPlan {
    pub fn new(tau: f64, total: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite() && total.is_finite() && tau <= total * (1.0 + 1e-12)) {
            return Err(Error::invalid(format!("need 0 < τ ≤ T, got τ = {tau}, T = {total}")));
        }
        Ok(Self { tau, total })
    }

    /// `⌊T/τ⌋`, tolerant of rounding in `T/τ`.
    pub fn windows(&self) -> usize {
        ((self.total / self.tau) * (1.0 + 1e-12)).floor() as usize
    }

    pub fn window_starts(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.windows()).map(move |k| k as f64 * self.tau)
    }
}

/// Sum of per-window FI over the windows starting at `0, τ, 2τ, …`.
pub fn segmented_total_fi<F>(per_window_fi: F, plan: &SegmentationPlan, source: FisherSource) -> FisherResult
where
    F: Fn(f64) -> f64,
{
    let total = plan.window_starts().map(per_window_fi).sum();
    FisherResult::new(total, source)
        .with_param("tau", plan.tau)
        .with_param("total_time", plan.total)
}

impl fmt::Display for FisherResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} ({:?})", self.value, self.source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{pauli_exp, Axis3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z_family(t: f64) -> impl Fn(f64) -> Result<Unitary2> {
        move |g| pauli_exp(Axis3::Z, g * t)
    }

    #[test]
    fn ramsey_generator() {
        let t = 3.0;
        let g = qfi_generator(z_family(t), 0.4, None).unwrap();
        assert!(g.matrix.approx_eq(&CMat2::sigma_z().scale_re(t), 1e-8));
        assert!((qfi_max(&g.matrix).unwrap().value - 4.0 * t * t).abs() < 1e-7);
        assert!(!g.is_suspicious());
    }

    #[test]
    fn constant_family_has_zero_generator() {
        let u = pauli_exp(Axis3::X, 0.3).unwrap();
        let g = qfi_generator(|_| Ok(u), 1.0, None).unwrap();
        assert!(g.matrix.approx_eq(&CMat2::zero(), 1e-12));
        assert_eq!(qfi_max(&CMat2::zero()).unwrap().value, 0.0);
    }

    #[test]
    fn generator_error_shrinks_with_step() {
        // U = exp(−i g³ n·σ) has generator 3g² n·σ; the plain central
        // difference is O(h²)
        let fam = |g: f64| pauli_exp(Axis3::normalized(1.0, 0.0, 1.0).unwrap(), g * g * g);
        let exact = Axis3::normalized(1.0, 0.0, 1.0).unwrap().sigma().scale_re(3.0 * 0.7f64.powi(2));
        let plain = |h: f64| {
            let du = (fam(0.7 + h).unwrap().into_matrix() - fam(0.7 - h).unwrap().into_matrix()).scale_re(0.5 / h);
            generator_from_derivative(&fam(0.7).unwrap(), &du).matrix.max_abs_diff(&exact)
        };
        let ratio = plain(1e-2) / plain(5e-3);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
        let rich = qfi_generator(fam, 0.7, Some(1e-3)).unwrap();
        assert!(rich.matrix.approx_eq(&exact, 1e-9));
    }

    #[test]
    fn state_qfi_examples() {
        let g = CMat2::sigma_z().scale_re(2.0);
        assert!((qfi_state(&g, &QubitState::up_x()).value - 16.0).abs() < 1e-14);
        assert!(qfi_state(&g, &QubitState::up_z()).value.abs() < 1e-14);
    }

    #[test]
    fn qfi_max_is_best_state_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = CMat2::from_pauli(0.3, [0.8, -1.1, 0.4]);
        let max = qfi_max(&g).unwrap().value;
        let best = (0..10_000)
            .map(|_| {
                let th = (rng.gen_range(-1.0f64..1.0)).acos();
                let ph = rng.gen_range(0.0..std::f64::consts::TAU);
                qfi_state(&g, &QubitState::from_bloch(th, ph)).value
            })
            .fold(0.0, f64::max);
        assert!(best <= max * (1.0 + 1e-12));
        assert!(best > max * 0.995);
        // equal superposition of eigenvectors of n·σ is the Bloch vector ⊥ n
        let n = Axis3::normalized(0.8, -1.1, 0.4).unwrap().components();
        let perp = Axis3::normalized(n[1], -n[0], 0.0).unwrap().components();
        let psi = QubitState::from_bloch(perp[2].acos(), perp[1].atan2(perp[0]));
        assert!((qfi_state(&g, &psi).value / max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_fi_examples() {
        let (t, dt) = (10.0, std::f64::consts::FRAC_PI_2);
        let p = |d: f64| (d * t * t / dt).cos().powi(2);
        let fi = classical_fi(p, 3e-3, None).unwrap();
        assert!((fi.value / (4.0 * (t * t / dt).powi(2)) - 1.0).abs() < 1e-8);
        assert_eq!(classical_fi(|_| 0.3, 1.0, None).unwrap().value, 0.0);
    }

    #[test]
    fn classical_fi_edge_fallback() {
        let p = |d: f64| (5.0 * d).sin().powi(2);
        let fi = classical_fi(p, 0.0, None).unwrap();
        assert!(fi.edge_fallback);
        assert!((fi.value - 100.0).abs() < 1e-3);
    }

    #[test]
    fn matrix_and_crb() {
        let (t, dt) = (7.0, std::f64::consts::FRAC_PI_2);
        let p = |d: f64, phi: f64| crate::control::method2_transition(d, phi, t, dt);
        let m = fi_matrix_2(p, (0.0, 0.4), None).unwrap();
        let c = 4.0 / (dt * dt);
        assert!((m.m[0][0] / (c * t.powi(4)) - 1.0).abs() < 1e-7);
        assert!((m.m[0][1] / (c * t.powi(3)) - 1.0).abs() < 1e-7);
        assert!((m.m[1][1] / (c * t * t) - 1.0).abs() < 1e-7);
        assert!(m.eigenvalue_ratio() < 1e-10);
        assert!(matches!(crb_variance(&m, Param2::Delta), CrbVariance::Singular { .. }));

        let diag = FIMatrix2::new([[4.0, 0.0], [0.0, 9.0]]).unwrap();
        assert_eq!(crb_variance(&diag, Param2::Delta), CrbVariance::Finite(0.25));
        assert!(FIMatrix2::new([[1.0, 2.0], [2.0, 1.0]]).is_err());
    }

    #[test]
    fn segmentation_sums() {
        let plan = SegmentationPlan::new(0.01, 1.0).unwrap();
        assert_eq!(plan.windows(), 100);
        let tau = plan.tau;
        let ramsey = segmented_total_fi(|t| 4.0 * (2.0 * t + tau).powi(2), &plan, FisherSource::UpperBound);
        let n = 100.0;
        assert!((ramsey.value - 4.0 * tau * tau * n * (4.0 * n * n - 1.0) / 3.0).abs() < 1e-9);
        let single = SegmentationPlan::new(2.0, 2.0).unwrap();
        assert_eq!(segmented_total_fi(|t| t + 5.0, &single, FisherSource::UpperBound).value, 5.0);
        let controlled = segmented_total_fi(
            |t| 4.0 * ((t + tau).powi(2) - t * t).powi(2),
            &plan,
            FisherSource::UpperBound,
        );
        assert!((controlled.value / (16.0 / 3.0 * tau) - 1.0).abs() < 0.03);
        assert!(SegmentationPlan::new(2.0, 1.0).is_err());
    }
}

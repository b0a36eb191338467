//! Divided differences, the map `Φ_{f,A}` and directional derivatives of
//! `A ↦ Tr(P f(A))`, including at rank-deficient `A`.
//!
//! `Φ_{f,A}(B) = V (D ∘ (V† B V)) V†` where `A = V diag(a) V†` and
//! `D_ij = f^{[1]}(a_i, a_j)` when both eigenvalues are positive, 0 otherwise.
//! Everything here works in natural-log units; conversion to bits happens once,
//! in [`optimality_derivative`].

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Operator, Spectrum, C64};
use crate::measures::support_contained;
use crate::states::PureState;
use crate::tolerance::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScalarFunction {
    Log,
    Power(f64),
}

impl ScalarFunction {
    /// `f_α(x) = x^{1−α}`.
    pub fn renyi(alpha: f64) -> Self {
        ScalarFunction::Power(1.0 - alpha)
    }

    pub fn value(self, x: f64) -> f64 {
        match self {
            ScalarFunction::Log => x.ln(),
            ScalarFunction::Power(r) => x.powf(r),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ScalarFunction::Log => 1.0 / x,
            ScalarFunction::Power(r) => r * x.powf(r - 1.0),
        }
    }

    /// Whether `t f(t) → 0` as `t → 0⁺`, which makes the derivative formula exact
    /// at rank-deficient points.
    pub fn vanishes_at_zero_times_t(self) -> bool {
        match self {
            ScalarFunction::Log => true,
            ScalarFunction::Power(r) => r > -1.0,
        }
    }
}

/// Whether a derivative value is exact or only a lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    Exact,
    LowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub value: f64,
    pub bound: Bound,
}

/// `f^{[1]}(x, y)`: `f'` at the midpoint when `|x − y| < 1e-7 · max(x, y)`,
/// otherwise the difference quotient in a cancellation-free form.
pub fn divided_difference(f: ScalarFunction, x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(invalid(format!("divided differences need x, y > 0, got ({x}, {y})")));
    }
    Ok(divided_difference_unchecked(f, x, y))
}

fn divided_difference_unchecked(f: ScalarFunction, x: f64, y: f64) -> f64 {
    let (x, y) = if x >= y { (x, y) } else { (y, x) };
    if (x - y).abs() < Tolerances::DEFAULT.divided_difference_switch * x.max(y) {
        return f.derivative(0.5 * (x + y));
    }
    match f {
        ScalarFunction::Log => ((x - y) / y).ln_1p() / (x - y),
        ScalarFunction::Power(r) => {
            let l = (x / y).ln();
            y.powf(r - 1.0) * (r * l).exp_m1() / l.exp_m1()
        }
    }
}

/// Precomputed `Φ_{f,A}` for a fixed PSD `A`.
#[derive(Clone, Debug)]
pub struct PhiMap {
    f: ScalarFunction,
    spectrum: Spectrum,
    dd: DMatrix<f64>,
    on_support: Vec<bool>,
    dims: Vec<usize>,
}

impl PhiMap {
    pub fn new(f: ScalarFunction, a: &Operator) -> Result<Self> {
        a.ensure_hermitian(Tolerances::DEFAULT.hermiticity * 100.0)?;
        let spectrum = a.spectrum();
        let min = spectrum.min();
        if min < -Tolerances::DEFAULT.psd * a.frobenius_norm().max(1.0) {
            return Err(Error::NotPsd(min));
        }
        Ok(Self::from_spectrum(f, spectrum, a.dims().to_vec()))
    }

    /// Builds the map from a caller-chosen eigendecomposition.
    pub fn from_spectrum(f: ScalarFunction, spectrum: Spectrum, dims: Vec<usize>) -> Self {
        let thr = Tolerances::DEFAULT.support;
        let on_support: Vec<bool> = spectrum.values.iter().map(|&x| x > thr).collect();
        let n = spectrum.len();
        let dd = DMatrix::from_fn(n, n, |i, j| {
            if on_support[i] && on_support[j] {
                divided_difference_unchecked(f, spectrum.values[i], spectrum.values[j])
            } else {
                0.0
            }
        });
        PhiMap { f, spectrum, dd, on_support, dims }
    }

    pub fn function(&self) -> ScalarFunction {
        self.f
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Divided-difference matrix in the eigenbasis of `A`.
    pub fn divided_differences(&self) -> &DMatrix<f64> {
        &self.dd
    }

    pub fn apply(&self, b: &Operator) -> Result<Operator> {
        if b.side() != self.spectrum.len() {
            return Err(Error::Dimension("Φ argument has the wrong size".into()));
        }
        let v = &self.spectrum.vectors;
        let mut inner = v.adjoint() * b.mat() * v;
        inner.zip_apply(&self.dd, |z, d| *z *= d);
        Operator::from_matrix(v * inner * v.adjoint(), self.dims.clone())
    }

    /// `⟨ψ|Φ(B)|ψ⟩` without forming `Φ(B)` in the computational basis.
    pub fn expectation(&self, psi: &DVector<C64>, b: &Operator) -> f64 {
        let v = &self.spectrum.vectors;
        let a = v.adjoint() * psi;
        let inner = v.adjoint() * b.mat() * v;
        let n = a.len();
        let mut acc = C64::from(0.0);
        for j in 0..n {
            for i in 0..n {
                acc += a[i].conj() * inner[(i, j)] * a[j] * self.dd[(i, j)];
            }
        }
        acc.re
    }

    /// `⟨ψ|Φ(|φ⟩⟨φ|)|ψ⟩ = Σ_ij conj(a_i) D_ij b_i conj(b_j) a_j` with `a = V†ψ`,
    /// `b = V†φ`; `a` is passed already rotated.
    pub fn rank_one_expectation_rotated(&self, a: &DVector<C64>, phi: &DVector<C64>) -> f64 {
        let b = self.spectrum.vectors.adjoint() * phi;
        let n = a.len();
        let mut acc = C64::from(0.0);
        for j in 0..n {
            let bj = b[j].conj() * a[j];
            if bj == C64::from(0.0) {
                continue;
            }
            for i in 0..n {
                acc += a[i].conj() * b[i] * bj * self.dd[(i, j)];
            }
        }
        acc.re
    }

    pub fn rotate(&self, psi: &DVector<C64>) -> DVector<C64> {
        self.spectrum.vectors.adjoint() * psi
    }

    /// `f(A)` restricted to the support of `A`.
    pub fn function_on_support(&self) -> Operator {
        let f = self.f;
        let thr = Tolerances::DEFAULT.support;
        let m = self.spectrum.map(|x| if x > thr { f.value(x) } else { 0.0 });
        Operator::from_matrix(m, self.dims.clone()).expect("dims match")
    }

    pub fn support_size(&self) -> usize {
        self.on_support.iter().filter(|&&b| b).count()
    }
}

pub fn phi_map(f: ScalarFunction, a: &Operator, b: &Operator) -> Result<Operator> {
    PhiMap::new(f, a)?.apply(b)
}

/// `d/dt Tr(P f(A + tB))` at `t = 0⁺`, computed as `Tr(P Φ_{f,A}(B))`.
///
/// Requires `supp P ⊆ supp A` and `A + tB ⪰ 0` at the probe `t = 1e-8`. For
/// functions without `t f(t) → 0` (e.g. `x^{-1}`) the value is a lower bound.
pub fn directional_derivative(p: &Operator, f: ScalarFunction, a: &Operator, b: &Operator) -> Result<Derivative> {
    let phi = PhiMap::new(f, a)?;
    let thr = Tolerances::DEFAULT.support;
    if !support_contained(&p.spectrum(), phi.spectrum(), thr) {
        return Err(Error::Support("supp P is not contained in supp A".into()));
    }
    let probe = a + &(b * 1e-8);
    let min = probe.min_eigenvalue();
    if min < -Tolerances::DEFAULT.psd * a.frobenius_norm().max(1.0) {
        return Err(Error::NotPsd(min));
    }
    let value = p.trace_product(&phi.apply(b)?);
    let bound = if f.vanishes_at_zero_times_t() { Bound::Exact } else { Bound::LowerBound };
    Ok(Derivative { value, bound })
}

/// Derivative of `t ↦ S_α(ψ‖(1−t)σ + tσ')` at `t = 0⁺`, in bits.
///
/// For `α ≠ 1`: `Tr(ψ Φ_{f_α,σ}(σ' − σ)) / ((α − 1) ln2 ⟨ψ|σ^{1−α}|ψ⟩)`.
/// For `α = 1`: `−Tr(ψ Φ_{ln,σ}(σ' − σ)) / ln2`. At `α = 2` the value is a lower bound.
pub fn optimality_derivative(psi: &PureState, sigma: &Operator, sigma_prime: &Operator, alpha: f64) -> Result<Derivative> {
    let probe = OptimalityProbe::new(psi, sigma, alpha)?;
    probe.derivative(sigma_prime)
}

/// Precomputed pieces of [`optimality_derivative`] for a fixed `(ψ, σ, α)`, so
/// many directions `σ'` can be scanned cheaply.
#[derive(Clone, Debug)]
pub struct OptimalityProbe {
    alpha: f64,
    phi: PhiMap,
    psi: DVector<C64>,
    psi_rotated: DVector<C64>,
    /// `⟨ψ|σ^{1−α}|ψ⟩`; 1 for `α = 1`.
    normaliser: f64,
    /// `⟨ψ|Φ(σ)|ψ⟩`.
    base: f64,
    bound: Bound,
}

impl OptimalityProbe {
    pub fn new(psi: &PureState, sigma: &Operator, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(invalid(format!("optimality derivative needs α ∈ (0, 2], got {alpha}")));
        }
        let f = if alpha == 1.0 { ScalarFunction::Log } else { ScalarFunction::renyi(alpha) };
        let phi = PhiMap::new(f, sigma)?;
        let v = psi.amplitudes().clone();
        let p = psi.density();
        if !support_contained(&p.spectrum(), phi.spectrum(), Tolerances::DEFAULT.support) {
            return Err(Error::Support("supp ψ is not contained in supp σ".into()));
        }
        let normaliser = if alpha == 1.0 { 1.0 } else { phi.function_on_support().expectation(&v) };
        let base = phi.expectation(&v, sigma);
        let bound = if f.vanishes_at_zero_times_t() { Bound::Exact } else { Bound::LowerBound };
        let psi_rotated = phi.rotate(&v);
        Ok(OptimalityProbe { alpha, phi, psi: v, psi_rotated, normaliser, base, bound })
    }

    fn assemble(&self, along: f64) -> f64 {
        let directional = along - self.base;
        if self.alpha == 1.0 {
            -directional / LN_2
        } else {
            directional / ((self.alpha - 1.0) * LN_2 * self.normaliser)
        }
    }

    pub fn derivative(&self, sigma_prime: &Operator) -> Result<Derivative> {
        if sigma_prime.side() != self.psi.len() {
            return Err(Error::Dimension("σ' has the wrong size".into()));
        }
        let along = self.phi.expectation(&self.psi, sigma_prime);
        Ok(Derivative { value: self.assemble(along), bound: self.bound })
    }

    /// Derivative towards the pure state `|φ⟩⟨φ|`.
    pub fn derivative_towards_pure(&self, phi: &DVector<C64>) -> Derivative {
        let along = self.phi.rank_one_expectation_rotated(&self.psi_rotated, phi);
        Derivative { value: self.assemble(along), bound: self.bound }
    }

    /// `⟨ψ|σ^{1−α}|ψ⟩`.
    pub fn normaliser(&self) -> f64 {
        self.normaliser
    }
}

/// `√(pq)/(1−α) · f_α^{[1]}(p^{1/α}, q^{1/α})`, which lies in `[0, 1]` for
/// `p, q ∈ (0, 1]` and `α ∈ (0,1) ∪ (1,2]`.
pub fn technical_lemma_value(p: f64, q: f64, alpha: f64) -> Result<f64> {
    if alpha <= 0.0 || alpha == 1.0 || alpha > 2.0 {
        return Err(invalid(format!("α must lie in (0,1) ∪ (1,2], got {alpha}")));
    }
    let dd = divided_difference(ScalarFunction::renyi(alpha), p.powf(1.0 / alpha), q.powf(1.0 / alpha))?;
    Ok((p * q).sqrt() / (1.0 - alpha) * dd)
}

/// Both sides of `(1/r)(xʳ − yʳ)/(x − y) ≤ (√(xy))^{r−1}`, for `r ∈ (−1,0) ∪ (0,1)`.
pub fn power_mean_sides(x: f64, y: f64, r: f64) -> Result<(f64, f64)> {
    if !(r > -1.0 && r < 1.0 && r != 0.0) {
        return Err(invalid(format!("r must lie in (−1,0) ∪ (0,1), got {r}")));
    }
    let lhs = divided_difference(ScalarFunction::Power(r), x, y)? / r;
    Ok((lhs, (x * y).sqrt().powf(r - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::optimal_sigma_alpha;
    use crate::random::{density, full_rank_density, hermitian, stream_rng, unitary};
    use crate::states::{pure_from_schmidt, SchmidtVector};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Independent route: nalgebra eigendecomposition and a second-order one-sided
    /// difference `(−3g(0) + 4g(h) − g(2h)) / 2h`.
    fn finite_difference(p: &Operator, f: ScalarFunction, a: &Operator, b: &Operator, h: f64) -> f64 {
        let g = |t: f64| {
            let m = a.mat() + b.mat() * C64::from(t);
            let e = m.symmetric_eigen();
            let fd = DMatrix::from_diagonal(&e.eigenvalues.map(|x| C64::from(f.value(x))));
            (p.mat() * (&e.eigenvectors * fd * e.eigenvectors.adjoint())).trace().re
        };
        (-3.0 * g(0.0) + 4.0 * g(h) - g(2.0 * h)) / (2.0 * h)
    }

    fn well_conditioned(seed: u64, n: usize) -> Operator {
        let mut rng = stream_rng(seed, "pd", 0);
        full_rank_density(&mut rng, &[n]) * 0.5 + Operator::maximally_mixed(vec![n]) * 0.5
    }

    #[test]
    fn divided_difference_examples() {
        assert_relative_eq!(divided_difference(ScalarFunction::Log, 2.0, 2.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(divided_difference(ScalarFunction::Power(0.5), 4.0, 1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(divided_difference(ScalarFunction::Log, 0.0, 1.0).is_err());
        assert!(divided_difference(ScalarFunction::Power(0.5), 1.0, -1.0).is_err());
    }

    #[test]
    fn divided_difference_continuous_across_switch() {
        for f in [ScalarFunction::Log, ScalarFunction::Power(0.5), ScalarFunction::Power(-0.5), ScalarFunction::Power(-1.0)] {
            for x in [1e-6, 0.3, 1.0, 7.0] {
                let below = divided_difference(f, x, x * (1.0 - 0.999e-7)).unwrap();
                let above = divided_difference(f, x, x * (1.0 - 1.001e-7)).unwrap();
                let scale = f.derivative(x).abs();
                assert!((below - above).abs() <= 1e-8 * scale, "{f:?} at {x}");
            }
        }
    }

    #[test]
    fn divided_difference_symmetric_and_accurate() {
        // Against an exact rational case: Power(−1): f[1](x,y) = −1/(xy).
        for (x, y) in [(0.1, 0.3), (2.0, 2.0 + 1e-5), (1e-4, 5.0)] {
            let v = divided_difference(ScalarFunction::Power(-1.0), x, y).unwrap();
            assert_relative_eq!(v, -1.0 / (x * y), max_relative = 1e-13);
            assert_eq!(v, divided_difference(ScalarFunction::Power(-1.0), y, x).unwrap());
        }
    }

    #[test]
    fn phi_of_a_is_a_times_derivative() {
        let lam = SchmidtVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        for alpha in [0.3, 0.7, 1.5, 2.0] {
            let sigma = optimal_sigma_alpha(&lam, alpha).unwrap();
            let f = ScalarFunction::renyi(alpha);
            let lhs = phi_map(f, &sigma, &sigma).unwrap();
            let rhs = PhiMap::new(f, &sigma).unwrap().function_on_support() * (1.0 - alpha);
            assert!(lhs.max_abs_diff(&rhs) < 1e-12, "α={alpha}");
        }
    }

    #[test]
    fn commuting_case_is_entrywise_derivative() {
        let a = Operator::diagonal(&[0.5, 0.3, 0.2, 0.0], vec![4]).unwrap();
        let b = Operator::diagonal(&[1.0, -2.0, 0.5, 3.0], vec![4]).unwrap();
        let out = phi_map(ScalarFunction::Log, &a, &b).unwrap();
        let expected = Operator::diagonal(&[2.0, -2.0 / 0.3, 2.5, 0.0], vec![4]).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn basis_independence_for_degenerate_a() {
        let mut rng = stream_rng(13, "degenerate-phi", 0);
        let u = unitary(&mut rng, 4);
        let values = vec![0.4, 0.4, 0.2, 0.0];
        let d = DMatrix::from_diagonal(&DVector::from_iterator(4, values.iter().map(|&x| C64::from(x))));
        let a = Operator::from_matrix(&u * d * u.adjoint(), vec![4]).unwrap();
        // Second eigenbasis: rotate inside the degenerate block {0,1}.
        let w = unitary(&mut rng, 2);
        let mut block = DMatrix::<C64>::identity(4, 4);
        block.view_mut((0, 0), (2, 2)).copy_from(&w);
        let u2 = &u * block;
        let b = hermitian(&mut rng, &[4]);
        for f in [ScalarFunction::Log, ScalarFunction::Power(-0.5), ScalarFunction::Power(0.3)] {
            let s1 = Spectrum { values: values.clone(), vectors: u.clone() };
            let s2 = Spectrum { values: values.clone(), vectors: u2.clone() };
            let p1 = PhiMap::from_spectrum(f, s1, vec![4]).apply(&b).unwrap();
            let p2 = PhiMap::from_spectrum(f, s2, vec![4]).apply(&b).unwrap();
            assert!(p1.max_abs_diff(&p2) < 1e-10);
            let p3 = phi_map(f, &a, &b).unwrap();
            assert!(p1.max_abs_diff(&p3) < 1e-10);
        }
    }

    #[test]
    fn zero_direction_gives_zero() {
        let a = well_conditioned(1, 3);
        let p = well_conditioned(2, 3);
        let d = directional_derivative(&p, ScalarFunction::Log, &a, &Operator::zeros(vec![3])).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.bound, Bound::Exact);
    }

    #[test]
    fn matches_finite_difference_on_positive_definite_a() {
        for i in 0..30u64 {
            let n = 2 + (i as usize % 5);
            let a = well_conditioned(100 + i, n);
            let mut rng = stream_rng(i, "fd-dirs", 0);
            let p = density(&mut rng, &[n], n);
            let b = density(&mut rng, &[n], n);
            for f in [ScalarFunction::Log, ScalarFunction::Power(0.5), ScalarFunction::Power(-0.5)] {
                let exact = directional_derivative(&p, f, &a, &b).unwrap().value;
                let fd = finite_difference(&p, f, &a, &b, 1e-5);
                assert!((exact - fd).abs() <= 1e-6 * exact.abs(), "{f:?}: {exact} vs {fd}");
            }
        }
    }

    #[test]
    fn inverse_at_rank_deficient_a_is_a_lower_bound() {
        // A = diag(0.6, 0.4, 0), B moves mass onto the kernel.
        let a = Operator::diagonal(&[0.6, 0.4, 0.0], vec![3]).unwrap();
        let mut rng = stream_rng(3, "lower-bound", 0);
        for _ in 0..20 {
            let v = crate::random::haar_vector(&mut rng, 3);
            let sigma_p = Operator::projector(&v, vec![3]);
            let b = &sigma_p - &a;
            let pv = DVector::from_vec(vec![C64::new(0.8, 0.0), C64::new(0.6, 0.0), C64::from(0.0)]);
            let p = Operator::projector(&pv, vec![3]);
            let d = directional_derivative(&p, ScalarFunction::Power(-1.0), &a, &b).unwrap();
            assert_eq!(d.bound, Bound::LowerBound);
            // Tr(P (A + tB)^{-1}) with P supported on supp A, by one-sided differences.
            let g = |t: f64| {
                let m = (&a + &(&b * t)).mat().clone();
                (p.mat() * m.try_inverse().unwrap()).trace().re
            };
            let h = 1e-6;
            let fd = (-3.0 * g(h) + 4.0 * g(2.0 * h) - g(3.0 * h)) / (2.0 * h);
            assert!(d.value <= fd + 1e-6 * fd.abs().max(1.0), "{} vs {}", d.value, fd);
        }
    }

    #[test]
    fn support_violation_is_reported() {
        let a = Operator::diagonal(&[1.0, 0.0], vec![2]).unwrap();
        let p = Operator::diagonal(&[0.0, 1.0], vec![2]).unwrap();
        assert!(matches!(
            directional_derivative(&p, ScalarFunction::Log, &a, &Operator::zeros(vec![2])),
            Err(Error::Support(_))
        ));
        let b = Operator::diagonal(&[0.0, -1.0], vec![2]).unwrap();
        assert!(matches!(directional_derivative(&a, ScalarFunction::Log, &a, &b), Err(Error::NotPsd(_))));
    }

    #[test]
    fn stationary_direction_is_zero() {
        let lam = SchmidtVector::new(vec![0.6, 0.3, 0.1]).unwrap();
        let psi = pure_from_schmidt(&lam);
        for alpha in [0.3, 1.0, 1.5, 2.0] {
            let sigma = optimal_sigma_alpha(&lam, alpha).unwrap();
            let d = optimality_derivative(&psi, &sigma, &sigma, alpha).unwrap();
            assert!(d.value.abs() < 1e-12, "α={alpha}: {}", d.value);
        }
    }

    #[test]
    fn probe_pure_direction_matches_general_path() {
        let lam = SchmidtVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let psi = pure_from_schmidt(&lam);
        for alpha in [0.4, 1.0, 1.6, 2.0] {
            let sigma = optimal_sigma_alpha(&lam, alpha).unwrap();
            let probe = OptimalityProbe::new(&psi, &sigma, alpha).unwrap();
            let mut rng = stream_rng(1, "probe", 0);
            for _ in 0..10 {
                let phi = crate::random::product_vector(&mut rng, &[3, 3]);
                let fast = probe.derivative_towards_pure(&phi).value;
                let slow = probe.derivative(&Operator::projector(&phi, vec![3, 3])).unwrap().value;
                assert_relative_eq!(fast, slow, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn optimality_derivative_matches_finite_difference_of_entropy() {
        // S_α(ψ‖(1−t)σ + tσ') in bits, differenced with the second-order stencil.
        let lam = SchmidtVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let psi = pure_from_schmidt(&lam);
        let mut rng = stream_rng(4, "opt-fd", 0);
        for alpha in [0.4, 1.0, 1.6] {
            let sigma = full_rank_density(&mut rng, &[3, 3]) * 0.5 + Operator::maximally_mixed(vec![3, 3]) * 0.5;
            let sigma_p = density(&mut rng, &[3, 3], 2);
            let d = optimality_derivative(&psi, &sigma, &sigma_p, alpha).unwrap().value;
            let s = |t: f64| {
                let mix = &sigma * (1.0 - t) + &sigma_p * t;
                crate::measures::renyi_relative_entropy(&psi.density(), &mix, alpha).unwrap().finite().unwrap()
            };
            let h = 1e-5;
            let fd = (-3.0 * s(0.0) + 4.0 * s(h) - s(2.0 * h)) / (2.0 * h);
            assert!((d - fd).abs() <= 1e-6 * d.abs().max(1e-3), "α={alpha}: {d} vs {fd}");
        }
    }

    #[test]
    fn perturbed_sigma_admits_a_descent_direction() {
        let lam = SchmidtVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let psi = pure_from_schmidt(&lam);
        let alpha = 0.7;
        // Wrong diagonal weights on span{|ii⟩}.
        let mut diag = vec![0.0; 9];
        diag[0] = 0.2;
        diag[4] = 0.3;
        diag[8] = 0.5;
        let sigma = Operator::diagonal(&diag, vec![3, 3]).unwrap();
        let probe = OptimalityProbe::new(&psi, &sigma, alpha).unwrap();
        let best = (0..3)
            .map(|i| {
                let mut e = DVector::<C64>::zeros(9);
                e[i * 3 + i] = C64::from(1.0);
                probe.derivative_towards_pure(&e).value
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < -1e-3, "no descent direction found: {best}");
    }

    #[test]
    fn technical_lemma_at_alpha_two_is_one() {
        for (p, q) in [(0.3, 0.7), (1.0, 0.01), (0.5, 0.5)] {
            assert_relative_eq!(technical_lemma_value(p, q, 2.0).unwrap(), 1.0, epsilon = 1e-13);
        }
        assert!(technical_lemma_value(0.5, 0.5, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn technical_lemma_bounds(p in 1e-9f64..=1.0, q in 1e-9f64..=1.0, ai in 0usize..6) {
            let alpha = [0.25, 0.5, 0.75, 1.5, 1.9, 2.0][ai];
            let v = technical_lemma_value(p, q, alpha).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "α={} p={} q={} v={}", alpha, p, q, v);
        }

        #[test]
        fn power_mean_inequality(lx in -8.0f64..8.0, ly in -8.0f64..8.0, r in -0.999f64..0.999) {
            prop_assume!(r.abs() > 1e-3 && (lx - ly).abs() > 1e-12);
            let (lhs, rhs) = power_mean_sides(lx.exp(), ly.exp(), r).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }

        #[test]
        fn phi_is_linear(seed in any::<u64>(), a_coef in -2.0f64..2.0, c_coef in -2.0f64..2.0) {
            let mut rng = stream_rng(seed, "phi-linear", 0);
            let a = density(&mut rng, &[4], 3);
            let b = hermitian(&mut rng, &[4]);
            let c = hermitian(&mut rng, &[4]);
            let map = PhiMap::new(ScalarFunction::Power(-0.3), &a).unwrap();
            let lhs = map.apply(&(&b * a_coef + &c * c_coef)).unwrap();
            let rhs = map.apply(&b).unwrap() * a_coef + map.apply(&c).unwrap() * c_coef;
            let scale = lhs.frobenius_norm().max(1.0);
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10 * scale);
        }
    }
}

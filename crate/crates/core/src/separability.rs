//! Separability certificates, entanglement detection and witnesses.
//!
//! Nothing here decides separability in general. [`certify`] runs a fixed ladder
//! of sufficient criteria and returns `Undecided` when none applies.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{partial_transpose_factors, permute_factors, Operator, C64};
use crate::measures::ExtReal;
use crate::par::{self, Exec};
use crate::random::{separable_pure, stream_rng};
use crate::states::{schmidt, PureState, SchmidtVector};
use crate::tolerance::Tolerances;

/// Split of the tensor factors into party A (listed) and party B (the rest).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    a: Vec<usize>,
}

impl Bipartition {
    pub fn new(mut a: Vec<usize>) -> Self {
        a.sort_unstable();
        a.dedup();
        Bipartition { a }
    }

    /// Factors `0..k` on side A.
    pub fn first(k: usize) -> Self {
        Bipartition { a: (0..k).collect() }
    }

    pub fn a_factors(&self) -> &[usize] {
        &self.a
    }

    pub fn b_factors(&self, n_factors: usize) -> Vec<usize> {
        (0..n_factors).filter(|f| !self.a.contains(f)).collect()
    }

    fn validate(&self, n_factors: usize) -> Result<()> {
        match self.a.iter().find(|&&f| f >= n_factors) {
            Some(&f) => Err(Error::FactorOutOfRange { index: f, count: n_factors }),
            None => Ok(()),
        }
    }

    /// Permutation putting A factors first, with the resulting side dimensions.
    pub fn grouping(&self, dims: &[usize]) -> Result<(Vec<usize>, usize, usize)> {
        self.validate(dims.len())?;
        let b = self.b_factors(dims.len());
        let da = self.a.iter().map(|&f| dims[f]).product();
        let db = b.iter().map(|&f| dims[f]).product();
        let perm = self.a.iter().chain(b.iter()).copied().collect();
        Ok((perm, da, db))
    }

    pub fn side_dims(&self, dims: &[usize]) -> Result<(usize, usize)> {
        let (_, da, db) = self.grouping(dims)?;
        Ok((da, db))
    }

    /// Operator regrouped into exactly two factors `[d_A, d_B]`.
    pub fn regroup(&self, x: &Operator) -> Result<Operator> {
        let (perm, da, db) = self.grouping(x.dims())?;
        permute_factors(x, &perm)?.with_dims(vec![da, db])
    }
}

/// Partial transpose of every B-side factor.
pub fn partial_transpose_cut(x: &Operator, cut: &Bipartition) -> Result<Operator> {
    cut.validate(x.n_factors())?;
    partial_transpose_factors(x, &cut.b_factors(x.n_factors()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeparabilityStatus {
    SeparableCertified,
    EntangledCertified,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub description: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityVerdict {
    pub status: SeparabilityStatus,
    pub evidence: Evidence,
}

impl SeparabilityVerdict {
    fn new(status: SeparabilityStatus, description: impl Into<String>, value: f64) -> Self {
        SeparabilityVerdict { status, evidence: Evidence { description: description.into(), value } }
    }

    pub fn is_separable(&self) -> bool {
        self.status == SeparabilityStatus::SeparableCertified
    }

    pub fn is_entangled(&self) -> bool {
        self.status == SeparabilityStatus::EntangledCertified
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptOutcome {
    pub min_eigenvalue: f64,
    pub verdict: SeparabilityVerdict,
}

/// Smallest eigenvalue of the partial transpose across `cut`.
pub fn min_pt_eigenvalue(rho: &Operator, cut: &Bipartition) -> Result<f64> {
    Ok(partial_transpose_cut(rho, cut)?.min_eigenvalue())
}

/// Peres–Horodecki test. NPT certifies entanglement; PPT certifies separability
/// only when one side is trivial or the sides are 2×2 or 2×3.
pub fn ppt_test(rho: &Operator, cut: &Bipartition) -> Result<PptOutcome> {
    let (da, db) = cut.side_dims(rho.dims())?;
    let min = min_pt_eigenvalue(rho, cut)?;
    let tol = Tolerances::DEFAULT.psd * rho.frobenius_norm().max(1.0);
    let verdict = if min < -tol {
        SeparabilityVerdict::new(SeparabilityStatus::EntangledCertified, "negative partial-transpose eigenvalue", min)
    } else if da.min(db) == 1 || da * db <= 6 {
        SeparabilityVerdict::new(SeparabilityStatus::SeparableCertified, "PPT in dimension ≤ 6", min)
    } else {
        SeparabilityVerdict::new(SeparabilityStatus::Undecided, "PPT; not sufficient in this dimension", min)
    };
    Ok(PptOutcome { min_eigenvalue: min, verdict })
}

/// `min_{c>0} ‖X/c − I‖_F` for a Hermitian `X` with positive trace.
///
/// Every operator within Frobenius distance 1 of the identity is separable, and
/// separability is invariant under positive rescaling, so a value ≤ 1 certifies `X`.
pub fn gurvits_distance(x: &Operator) -> f64 {
    let tr = x.trace_re();
    let fro2 = x.frobenius_norm().powi(2);
    if tr <= 0.0 || fro2 == 0.0 {
        return f64::INFINITY;
    }
    (x.side() as f64 - tr * tr / fro2).max(0.0).sqrt()
}

/// `‖D ρ − I‖_F` for the unit-trace normalisation of `ρ`, with `D` the total dimension.
pub fn gurvits_fixed_scale_distance(rho: &Operator) -> f64 {
    let d = rho.side() as f64;
    let delta = rho * (d / rho.trace_re()) - Operator::identity(rho.dims().to_vec());
    delta.frobenius_norm()
}

/// Separable-ball certificate around the identity, at the best rescaling.
pub fn gurvits_ball(rho: &Operator) -> SeparabilityVerdict {
    let g = gurvits_distance(rho);
    if g <= 1.0 + Tolerances::DEFAULT.gurvits {
        SeparabilityVerdict::new(SeparabilityStatus::SeparableCertified, "Frobenius ball around the identity", g)
    } else {
        SeparabilityVerdict::new(SeparabilityStatus::Undecided, "outside the Frobenius ball around the identity", g)
    }
}

/// Noise robustness `D √(λ₁λ₂)` of a pure state against white noise `I/D`, with
/// `D` the total dimension; `p ψ + (1 − p) I/D` is separable iff
/// `p ≤ 1/(1 + D √(λ₁λ₂))`. Infinite for product states.
pub fn pure_plus_noise_threshold(lambda: &SchmidtVector, total_dim: usize) -> ExtReal {
    if lambda.rank() < 2 {
        return ExtReal::Infinite;
    }
    ExtReal::Finite(total_dim as f64 * (lambda.largest() * lambda.second()).sqrt())
}

/// Largest pure-state weight `p` for which `p ψ + (1 − p) I/D` is separable.
pub fn pure_plus_noise_max_weight(lambda: &SchmidtVector, total_dim: usize) -> f64 {
    match pure_plus_noise_threshold(lambda, total_dim) {
        ExtReal::Infinite => 1.0,
        ExtReal::Finite(r) => 1.0 / (1.0 + r),
    }
}

/// Recognises `ρ = p ψ + (1 − p) I/D` from the spectrum (all but the top
/// eigenvalue equal) and applies the closed-form threshold.
pub fn pure_plus_noise_certificate(rho: &Operator, cut: &Bipartition) -> Result<Option<SeparabilityVerdict>> {
    let (perm, da, db) = cut.grouping(rho.dims())?;
    let spec = rho.spectrum();
    let n = spec.len();
    if n < 2 {
        return Ok(None);
    }
    let tr = rho.trace_re();
    let floor = spec.values[n - 1];
    let tol = 1e-10 * tr.abs().max(1e-300);
    if spec.values[1] - floor > tol || floor < -tol {
        return Ok(None);
    }
    let p = (spec.values[0] - floor) / tr;
    let top = spec.vectors.column(0).into_owned();
    let v = crate::linalg::permute_vector_factors(&top, rho.dims(), &perm)?;
    let psi = PureState::normalized(v, vec![da, db])?;
    let lambda = schmidt(&psi, &Bipartition::first(1))?.coefficients;
    let max_p = pure_plus_noise_max_weight(&lambda, n);
    let status = if p <= max_p * (1.0 + 1e-12) {
        SeparabilityStatus::SeparableCertified
    } else {
        SeparabilityStatus::EntangledCertified
    };
    Ok(Some(SeparabilityVerdict::new(status, format!("pure state plus white noise, separable up to weight {max_p}"), p)))
}

/// A Bell-diagonal two-qubit state is entangled iff its largest weight exceeds 1/2.
pub fn bell_diagonal_entangled(weights: [f64; 4]) -> Result<bool> {
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < -1e-15) || (sum - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("Bell weights {weights:?} are not a probability vector")));
    }
    Ok(weights.iter().copied().fold(f64::NEG_INFINITY, f64::max) > 0.5)
}

/// Hermitian operator with `Tr(W σ) ≥ 0` on states separable across `cut`.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub operator: Operator,
    pub cut: Bipartition,
}

impl Witness {
    pub fn value(&self, rho: &Operator) -> f64 {
        self.operator.trace_product(rho)
    }

    /// Minimum of `Tr(W σ)` over `n` random product pure states.
    pub fn min_on_separable_samples(&self, n: usize, seed: u64, exec: Exec) -> Result<f64> {
        let (perm, da, db) = self.cut.grouping(self.operator.dims())?;
        let grouped = permute_factors(&self.operator, &perm)?;
        Ok(par::min_over(exec, n, |i| {
            let mut rng = stream_rng(seed, "witness-separable", i as u64);
            let sigma = separable_pure(&mut rng, &[da, db]);
            grouped.trace_product(&sigma)
        }))
    }

    pub fn scaled_to_unit_frobenius(&self) -> Witness {
        let n = self.operator.frobenius_norm();
        Witness { operator: self.operator.scale(1.0 / n), cut: self.cut.clone() }
    }
}

/// `W = (|η⟩⟨η|)^Γ` for the eigenvector `η` of the most negative eigenvalue of `ρ^Γ`.
pub fn witness_from_npt(rho: &Operator, cut: &Bipartition) -> Result<Witness> {
    let pt = partial_transpose_cut(rho, cut)?;
    let spec = pt.spectrum();
    let min = spec.min();
    if min >= -Tolerances::DEFAULT.psd * rho.frobenius_norm().max(1.0) {
        return Err(invalid(format!("state is PPT across the cut (min PT eigenvalue {min:e})")));
    }
    let eta: DVector<C64> = spec.vectors.column(spec.len() - 1).into_owned();
    let projector = Operator::projector(&eta, rho.dims().to_vec());
    Ok(Witness { operator: partial_transpose_cut(&projector, cut)?, cut: cut.clone() })
}

/// Largest overlap of a bipartite pure state with a separable state: its top
/// Schmidt coefficient.
pub fn max_sep_overlap_pure(psi: &PureState, cut: &Bipartition) -> Result<f64> {
    Ok(schmidt(psi, cut)?.coefficients.largest())
}

/// Robustness-optimal separable state for `Σ √λ_i |ii⟩`, with an explicit
/// product decomposition of `(ψ + R σ*)/(1 + R)`.
#[derive(Clone, Debug)]
pub struct SigmaStar {
    pub sigma: Operator,
    pub robustness: f64,
    /// Number of equally weighted product vectors averaged in the certificate.
    pub product_terms: usize,
    /// Max-abs residual of the phase average against `ψ + R σ*`.
    pub residual: f64,
}

/// Builds `σ* = (1/R) Σ_{i≠j} √(λ_iλ_j) |ij⟩⟨ij|` on `n × n`, `n = rank(λ)`, and
/// verifies that averaging `|u_t⟩|v_t⟩`, with
/// `u_t = Σ λ_i^{1/4} i^{t_i} |i⟩` and `v_t = Σ λ_j^{1/4} i^{−t_j} |j⟩`, over all
/// phase tuples `t ∈ Z_4^n` (`t_1 = 0`) reproduces `ψ + R σ*`.
pub fn robustness_sigma_star(lambda: &SchmidtVector) -> Result<SigmaStar> {
    let support = lambda.support();
    let n = support.len();
    if n < 2 {
        return Err(invalid("σ* needs Schmidt rank ≥ 2"));
    }
    let roots: Vec<f64> = support.iter().map(|l| l.sqrt()).collect();
    let robustness = roots.iter().sum::<f64>().powi(2) - 1.0;
    let dims = vec![n, n];

    let mut diag = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                diag[i * n + j] = roots[i] * roots[j] / robustness;
            }
        }
    }
    let sigma = Operator::diagonal(&diag, dims.clone())?;

    let quarter: Vec<f64> = support.iter().map(|l| l.powf(0.25)).collect();
    let phases = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
    let terms = 4usize.pow(n as u32 - 1);
    let mut avg = DMatrix::<C64>::zeros(n * n, n * n);
    for code in 0..terms {
        let mut t = vec![0usize; n];
        let mut c = code;
        for ti in t.iter_mut().skip(1) {
            *ti = c % 4;
            c /= 4;
        }
        let u = DVector::from_fn(n, |i, _| phases[t[i]] * quarter[i]);
        let v = DVector::from_fn(n, |j, _| phases[(4 - t[j]) % 4] * quarter[j]);
        let uv = u.kronecker(&v);
        avg += &uv * uv.adjoint();
    }
    avg /= C64::from(terms as f64);

    let psi = crate::states::pure_from_schmidt(lambda).density();
    let target = &psi + &(&sigma * robustness);
    let residual = Operator::from_matrix(avg, dims)?.max_abs_diff(&target);
    Ok(SigmaStar { sigma, robustness, product_terms: terms, residual })
}

/// Sum of singular values of the realigned matrix `R[(i,j),(k,l)] = ρ[(i,k),(j,l)]`.
pub fn ccnr_value(rho: &Operator, cut: &Bipartition) -> Result<f64> {
    let grouped = cut.regroup(rho)?;
    let (da, db) = (grouped.dims()[0], grouped.dims()[1]);
    let m = grouped.mat();
    let realigned = DMatrix::from_fn(da * da, db * db, |r, c| {
        let (i, j) = (r / da, r % da);
        let (k, l) = (c / db, c % db);
        m[(i * db + k, j * db + l)]
    });
    Ok(realigned.singular_values().sum())
}

fn is_product_diagonal(rho: &Operator) -> bool {
    let m = rho.mat();
    let scale = rho.frobenius_norm().max(1e-300);
    let n = rho.side();
    (0..n).all(|c| (0..n).all(|r| r == c || m[(r, c)].norm() <= 1e-14 * scale))
        && (0..n).all(|i| m[(i, i)].re >= -1e-14 * scale)
}

/// Runs the certification ladder on a PSD operator:
/// NPT → Frobenius ball → pure-plus-noise closed form → PPT in dimension ≤ 6 →
/// diagonal in the product basis → CCNR → `Undecided`.
pub fn certify(rho: &Operator, cut: &Bipartition) -> Result<SeparabilityVerdict> {
    let ppt = ppt_test(rho, cut)?;
    if ppt.verdict.is_entangled() {
        return Ok(ppt.verdict);
    }
    let g = gurvits_ball(rho);
    if g.is_separable() {
        return Ok(g);
    }
    if let Some(v) = pure_plus_noise_certificate(rho, cut)? {
        if v.is_separable() {
            return Ok(v);
        }
    }
    if ppt.verdict.is_separable() {
        return Ok(ppt.verdict);
    }
    if is_product_diagonal(rho) {
        return Ok(SeparabilityVerdict::new(
            SeparabilityStatus::SeparableCertified,
            "diagonal in the product basis",
            0.0,
        ));
    }
    let ccnr = ccnr_value(rho, cut)? / rho.trace_re();
    if ccnr > 1.0 + Tolerances::DEFAULT.ccnr {
        return Ok(SeparabilityVerdict::new(SeparabilityStatus::EntangledCertified, "realignment (CCNR) value above 1", ccnr));
    }
    Ok(SeparabilityVerdict::new(SeparabilityStatus::Undecided, "PPT, realignment value ≤ 1, no certificate", ccnr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use crate::random::{density, stream_rng};
    use crate::states::{isotropic, max_entangled, phi_plus, psi_minus, pure_from_schmidt, werner};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cut() -> Bipartition {
        Bipartition::first(1)
    }

    #[test]
    fn ppt_examples() {
        let bell = ppt_test(&phi_plus().density(), &cut()).unwrap();
        assert_relative_eq!(bell.min_eigenvalue, -0.5, epsilon = 1e-14);
        assert!(bell.verdict.is_entangled());

        let iso = ppt_test(&isotropic(2, 2.0 / 3.0).unwrap(), &cut()).unwrap();
        assert_relative_eq!(iso.min_eigenvalue, 0.0, epsilon = 1e-10);

        let w = ppt_test(&werner(3, 0.0).unwrap(), &cut()).unwrap();
        assert_eq!(w.verdict.status, SeparabilityStatus::Undecided);
    }

    #[test]
    fn gurvits_examples() {
        assert!(gurvits_ball(&Operator::maximally_mixed(vec![2, 3])).is_separable());
        for d in 2..=4 {
            let psi = max_entangled(d).unwrap().density();
            let mix = (Operator::identity(vec![d, d]) + psi) * (1.0 / (d * d + 1) as f64);
            assert!(gurvits_ball(&mix).is_separable(), "d={d}");
        }
        let bell = phi_plus().density();
        assert!(!gurvits_ball(&bell).is_separable());
        assert_relative_eq!(gurvits_fixed_scale_distance(&bell), 12f64.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn gurvits_optimal_scale_threshold_is_unit_weight() {
        // X = I − x G with Tr G = 1, ‖G‖_F = 1 (G a pure projector) sits exactly
        // on the boundary at x = 1.
        let g = max_entangled(3).unwrap().density();
        let at = |x: f64| Operator::identity(vec![3, 3]) - &g * x;
        assert!(gurvits_distance(&at(1.0)) <= 1.0 + 1e-12);
        assert!(gurvits_distance(&at(1.0 + 1e-6)) > 1.0);
        assert!(gurvits_distance(&at(0.5)) < 1.0);
    }

    #[test]
    fn gurvits_never_certifies_npt() {
        for i in 0..200 {
            let mut rng = stream_rng(9, "gurvits-npt", i);
            let rho = density(&mut rng, &[2, 3], 1 + (i as usize % 6));
            if gurvits_ball(&rho).is_separable() {
                assert!(min_pt_eigenvalue(&rho, &cut()).unwrap() >= -1e-12);
            }
        }
    }

    #[test]
    fn pure_plus_noise_examples() {
        let bell = SchmidtVector::uniform(2).unwrap();
        assert_eq!(pure_plus_noise_threshold(&bell, 4), ExtReal::Finite(2.0));
        assert_relative_eq!(pure_plus_noise_max_weight(&bell, 4), 1.0 / 3.0, epsilon = 1e-15);
        let product = SchmidtVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(pure_plus_noise_threshold(&product, 4), ExtReal::Infinite);
        let lam = SchmidtVector::new(vec![16.0 / 18.0, 1.0 / 18.0, 1.0 / 18.0]).unwrap();
        match pure_plus_noise_threshold(&lam, 9) {
            ExtReal::Finite(t) => assert_relative_eq!(t, 2.0, epsilon = 1e-14),
            ExtReal::Infinite => panic!("finite threshold expected"),
        }
    }

    fn noisy(lambda: &SchmidtVector, d: usize, p: f64) -> Operator {
        let mut v = DVector::zeros(d * d);
        for (i, l) in lambda.as_slice().iter().enumerate() {
            v[i * d + i] = C64::from(l.sqrt());
        }
        let psi = Operator::projector(&v, vec![d, d]);
        psi * p + Operator::maximally_mixed(vec![d, d]) * (1.0 - p)
    }

    fn bisect_pt_boundary(lambda: &SchmidtVector, d: usize) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if min_pt_eigenvalue(&noisy(lambda, d, mid), &cut()).unwrap() < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn pure_plus_noise_threshold_matches_pt_bisection() {
        // 2×2: PT is exact, so the two boundaries coincide.
        for lam in [vec![0.5, 0.5], vec![0.8, 0.2], vec![0.65, 0.35]] {
            let lambda = SchmidtVector::new(lam).unwrap();
            let b = bisect_pt_boundary(&lambda, 2);
            assert_relative_eq!(b, pure_plus_noise_max_weight(&lambda, 4), epsilon = 1e-6);
        }
        // 3×3: only the NPT side is checked; for these states PT is also tight.
        let lambda = SchmidtVector::new(vec![16.0 / 18.0, 1.0 / 18.0, 1.0 / 18.0]).unwrap();
        let p_max = pure_plus_noise_max_weight(&lambda, 9);
        assert!(min_pt_eigenvalue(&noisy(&lambda, 3, p_max + 1e-6), &cut()).unwrap() < 0.0);
        assert_relative_eq!(bisect_pt_boundary(&lambda, 3), p_max, epsilon = 1e-6);
    }

    #[test]
    fn pure_plus_noise_certificate_recognises_mixtures() {
        let lambda = SchmidtVector::new(vec![0.7, 0.2, 0.1]).unwrap();
        let p_max = pure_plus_noise_max_weight(&lambda, 9);
        let sep = pure_plus_noise_certificate(&noisy(&lambda, 3, 0.9 * p_max), &cut()).unwrap().unwrap();
        assert!(sep.is_separable());
        let ent = pure_plus_noise_certificate(&noisy(&lambda, 3, 1.1 * p_max), &cut()).unwrap().unwrap();
        assert!(!ent.is_separable());
        let mut rng = stream_rng(0, "ppn", 0);
        assert!(pure_plus_noise_certificate(&density(&mut rng, &[3, 3], 3), &cut()).unwrap().is_none());
    }

    fn bell_diagonal(w: [f64; 4]) -> Operator {
        let basis = crate::states::bell_basis();
        basis.iter().zip(w).fold(Operator::zeros(vec![2, 2]), |acc, (b, wi)| acc + b.density() * wi)
    }

    #[test]
    fn bell_diagonal_examples() {
        assert!(bell_diagonal_entangled([1.0, 0.0, 0.0, 0.0]).unwrap());
        assert!(!bell_diagonal_entangled([0.5, 0.5, 0.0, 0.0]).unwrap());
        assert_relative_eq!(min_pt_eigenvalue(&bell_diagonal([0.5, 0.5, 0.0, 0.0]), &cut()).unwrap(), 0.0, epsilon = 1e-14);
        assert!(bell_diagonal_entangled([0.6, 0.2, 0.1, 0.1]).unwrap());
        assert!(ppt_test(&bell_diagonal([0.6, 0.2, 0.1, 0.1]), &cut()).unwrap().verdict.is_entangled());
        assert!(bell_diagonal_entangled([0.6, 0.6, -0.2, 0.0]).is_err());
    }

    #[test]
    fn witness_examples() {
        let w = witness_from_npt(&phi_plus().density(), &cut()).unwrap();
        let expected = partial_transpose_cut(&psi_minus().density(), &cut()).unwrap();
        assert!(w.operator.max_abs_diff(&expected) < 1e-13);
        assert_relative_eq!(w.value(&phi_plus().density()), -0.5, epsilon = 1e-13);

        let rho = werner(4, 1.0).unwrap();
        let w = witness_from_npt(&rho, &cut()).unwrap();
        assert!(w.value(&rho) < 0.0);
        assert_relative_eq!(w.operator.frobenius_norm(), 1.0, epsilon = 1e-12);
        assert!(witness_from_npt(&werner(3, -0.5).unwrap(), &cut()).is_err());
    }

    #[test]
    fn witnesses_of_random_npt_states() {
        let mut found = 0;
        for i in 0..200u64 {
            let mut rng = stream_rng(21, "npt-witness", i);
            let rho = density(&mut rng, &[3, 3], 2);
            if let Ok(w) = witness_from_npt(&rho, &cut()) {
                found += 1;
                assert_relative_eq!(w.operator.frobenius_norm(), 1.0, epsilon = 1e-12);
                assert!(w.value(&rho) < 0.0);
                if found <= 3 {
                    assert!(w.min_on_separable_samples(10_000, i, Exec::Parallel).unwrap() >= -1e-10);
                }
            }
            if found == 50 {
                break;
            }
        }
        assert_eq!(found, 50);
    }

    #[test]
    fn max_overlap_examples() {
        for k in 2..=4 {
            assert_relative_eq!(max_sep_overlap_pure(&max_entangled(k).unwrap(), &cut()).unwrap(), 1.0 / k as f64, epsilon = 1e-14);
        }
        let product = PureState::basis(&[1, 0], vec![2, 2]).unwrap();
        assert_relative_eq!(max_sep_overlap_pure(&product, &cut()).unwrap(), 1.0, epsilon = 1e-14);

        // Sampling oracle over product states for λ = (4/5, 1/5): random starts,
        // each refined by alternating maximisation over one party at a time.
        let psi = PureState::from_real(&[2.0, 0.0, 0.0, 1.0], vec![2, 2]).unwrap();
        let l1 = max_sep_overlap_pure(&psi, &cut()).unwrap();
        assert_relative_eq!(l1, 0.8, epsilon = 1e-14);
        let m = DMatrix::from_fn(2, 2, |i, j| psi.amplitudes()[i * 2 + j]);
        let sampled = par::max_over(Exec::Parallel, 200, |i| {
            let mut rng = stream_rng(3, "overlap", i as u64);
            let mut u = crate::random::haar_vector(&mut rng, 2);
            let mut v = crate::random::haar_vector(&mut rng, 2);
            for _ in 0..20 {
                let a = m.adjoint().transpose() * &v;
                u = a.map(|z| z.conj()) / C64::from(a.norm());
                let b = m.transpose().map(|z| z.conj()) * &u;
                v = b.map(|z| z.conj()) / C64::from(b.norm());
            }
            psi.density().expectation(&u.kronecker(&v))
        });
        assert!(sampled <= l1 + 1e-10);
        assert!(sampled >= l1 - 1e-3, "sampled max {sampled}");
    }

    #[test]
    fn max_overlap_bound_on_many_samples() {
        let mut rng = stream_rng(5, "overlap-lambda", 0);
        let lambda = SchmidtVector::random(&mut rng, 4);
        let psi = pure_from_schmidt(&lambda);
        let rho = psi.density();
        let l1 = max_sep_overlap_pure(&psi, &cut()).unwrap();
        let worst = par::max_over(Exec::Parallel, 10_000, |i| {
            let mut rng = stream_rng(6, "overlap-bound", i as u64);
            rho.trace_product(&separable_pure(&mut rng, &[4, 4]))
        });
        assert!(worst <= l1 + 1e-10);
        let top = PureState::basis(&[0, 0], vec![4, 4]).unwrap().density();
        assert_relative_eq!(rho.trace_product(&top), l1, epsilon = 1e-14);
    }

    #[test]
    fn sigma_star_examples() {
        let bell = SchmidtVector::uniform(2).unwrap();
        let s = robustness_sigma_star(&bell).unwrap();
        let expected = Operator::diagonal(&[0.0, 0.5, 0.5, 0.0], vec![2, 2]).unwrap();
        assert!(s.sigma.max_abs_diff(&expected) < 1e-15);
        let mix = (phi_plus().density() + &s.sigma) * 0.5;
        assert_relative_eq!(min_pt_eigenvalue(&mix, &cut()).unwrap(), 0.0, epsilon = 1e-14);

        for k in 2..=5 {
            let s = robustness_sigma_star(&SchmidtVector::uniform(k).unwrap()).unwrap();
            assert_relative_eq!(s.robustness, (k - 1) as f64, epsilon = 1e-13);
            assert_relative_eq!(s.sigma.trace_re(), 1.0, epsilon = 1e-13);
            assert!(s.residual < 1e-12);
        }

        let s = robustness_sigma_star(&SchmidtVector::new(vec![0.5, 0.3, 0.2]).unwrap()).unwrap();
        assert!(s.residual <= 1e-10);
        assert_eq!(s.product_terms, 16);
        assert!(robustness_sigma_star(&SchmidtVector::new(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn sigma_star_convex_combination_identity() {
        let lambda = SchmidtVector::new(vec![0.6, 0.25, 0.15]).unwrap();
        let s = robustness_sigma_star(&lambda).unwrap();
        let psi = pure_from_schmidt(&lambda).density();
        let r = s.robustness;
        for p in [0.0, 0.1, 0.2, 1.0 / (1.0 + r)] {
            let lhs = &psi * p + &s.sigma * (1.0 - p);
            let w = p * (1.0 + r);
            assert!(w <= 1.0 + 1e-15 && 1.0 - w >= -1e-15);
            let rhs = (&psi + &s.sigma * r) * (w / (1.0 + r)) + &s.sigma * (1.0 - w);
            assert!(lhs.max_abs_diff(&rhs) < 1e-14);
            assert!(min_pt_eigenvalue(&lhs, &cut()).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn ccnr_examples() {
        let mut rng = stream_rng(1, "ccnr", 0);
        let a = density(&mut rng, &[2], 2);
        let b = density(&mut rng, &[3], 2);
        // Realigning ρ⊗σ gives vec(ρ)vec(σ)ᵀ: value ‖ρ‖_F‖σ‖_F, which is 1 for pure
        // factors and below 1 otherwise.
        let mixed = ccnr_value(&kron(&a, &b), &cut()).unwrap();
        assert_relative_eq!(mixed, a.frobenius_norm() * b.frobenius_norm(), epsilon = 1e-12);
        assert!(mixed < 1.0);
        let pa = crate::random::separable_pure(&mut rng, &[2]);
        let pb = crate::random::separable_pure(&mut rng, &[3]);
        assert_relative_eq!(ccnr_value(&kron(&pa, &pb), &cut()).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(ccnr_value(&phi_plus().density(), &cut()).unwrap(), 2.0, epsilon = 1e-12);
        assert!(ccnr_value(&Operator::maximally_mixed(vec![2, 2]), &cut()).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn ladder() {
        assert!(certify(&phi_plus().density(), &cut()).unwrap().is_entangled());
        assert!(certify(&isotropic(3, 0.9).unwrap(), &cut()).unwrap().is_separable());
        assert!(certify(&werner(2, -0.5).unwrap(), &cut()).unwrap().is_separable());
        let diag = Operator::diagonal(&[0.1, 0.2, 0.0, 0.3, 0.1, 0.0, 0.1, 0.1, 0.1], vec![3, 3]).unwrap();
        assert!(certify(&diag, &cut()).unwrap().is_separable());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn separable_verdicts_are_ppt(seed in any::<u64>(), rank in 1usize..=9) {
            let mut rng = stream_rng(seed, "ladder-ppt", 0);
            let rho = density(&mut rng, &[3, 3], rank) * 0.3 + Operator::maximally_mixed(vec![3, 3]) * 0.7;
            let v = certify(&rho, &cut()).unwrap();
            if v.is_separable() {
                prop_assert!(min_pt_eigenvalue(&rho, &cut()).unwrap() >= -1e-10);
            }
        }
    }
}

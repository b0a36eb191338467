//! Named states and Schmidt decompositions.
//!
//! Bell-state conventions: `Φ± = (|00⟩ ± |11⟩)/√2`, `Ψ± = (|01⟩ ± |10⟩)/√2`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{kron, permute_factors, permute_vector_factors, Operator, C64};
use crate::separability::Bipartition;
use crate::tolerance::Tolerances;

/// Unit vector over a product of parties.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
    dims: Vec<usize>,
}

impl PureState {
    pub fn new(amplitudes: DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != amplitudes.len() || dims.contains(&0) {
            return Err(Error::Dimension(format!(
                "dims {dims:?} do not match {} amplitudes",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > Tolerances::DEFAULT.normalization {
            return Err(invalid(format!("state vector has norm {norm}")));
        }
        Ok(PureState { amplitudes, dims })
    }

    /// Normalises `amplitudes` before wrapping them.
    pub fn normalized(amplitudes: DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(invalid("zero vector cannot be normalised"));
        }
        Self::new(amplitudes / C64::from(norm), dims)
    }

    pub fn from_real(amplitudes: &[f64], dims: Vec<usize>) -> Result<Self> {
        let v = DVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|&x| C64::from(x)));
        Self::normalized(v, dims)
    }

    /// Computational basis state `|digits⟩`.
    pub fn basis(digits: &[usize], dims: Vec<usize>) -> Result<Self> {
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(d, n)| d >= n) {
            return Err(invalid(format!("basis digits {digits:?} invalid for dims {dims:?}")));
        }
        let index = digits.iter().zip(&dims).fold(0, |acc, (d, n)| acc * n + d);
        let n: usize = dims.iter().product();
        let mut v = DVector::zeros(n);
        v[index] = C64::from(1.0);
        Ok(PureState { amplitudes: v, dims })
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn density(&self) -> Operator {
        Operator::projector(&self.amplitudes, self.dims.clone())
    }

    /// Entrywise complex conjugate in the computational basis.
    pub fn conj(&self) -> PureState {
        PureState { amplitudes: self.amplitudes.map(|z| z.conj()), dims: self.dims.clone() }
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PureState { amplitudes: self.amplitudes.kronecker(&other.amplitudes), dims }
    }

    pub fn permute_parties(&self, perm: &[usize]) -> Result<PureState> {
        let amplitudes = permute_vector_factors(&self.amplitudes, &self.dims, perm)?;
        Ok(PureState { amplitudes, dims: perm.iter().map(|&p| self.dims[p]).collect() })
    }
}

/// Schmidt coefficients, nonnegative, summing to one and sorted descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SchmidtVector(Vec<f64>);

impl SchmidtVector {
    pub fn new(mut coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(invalid("Schmidt vector is empty"));
        }
        if coefficients.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(invalid(format!("Schmidt coefficients must be nonnegative: {coefficients:?}")));
        }
        let sum: f64 = coefficients.iter().sum();
        if (sum - 1.0).abs() > Tolerances::DEFAULT.normalization {
            return Err(invalid(format!("Schmidt coefficients sum to {sum}")));
        }
        coefficients.sort_by(|a, b| b.total_cmp(a));
        Ok(SchmidtVector(coefficients))
    }

    /// Normalises nonnegative weights into a Schmidt vector.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if sum.is_nan() || sum <= 0.0 {
            return Err(invalid("weights must have positive sum"));
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("uniform Schmidt vector needs k ≥ 1"));
        }
        Ok(SchmidtVector(vec![1.0 / k as f64; k]))
    }

    /// Random Schmidt vector of length `d` with entries bounded away from zero
    /// (weights uniform on `[0.02, 1]` before normalisation).
    pub fn random<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Self {
        SchmidtVector(crate::random::probability_vector(rng, d, 0.02))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.0[0]
    }

    pub fn second(&self) -> f64 {
        self.0.get(1).copied().unwrap_or(0.0)
    }

    /// Number of coefficients above the rank threshold.
    pub fn rank(&self) -> usize {
        self.0.iter().filter(|&&x| x > Tolerances::DEFAULT.schmidt_rank).count()
    }

    /// Drops coefficients at or below the rank threshold (no renormalisation).
    pub fn support(&self) -> Vec<f64> {
        self.0.iter().copied().filter(|&x| x > Tolerances::DEFAULT.schmidt_rank).collect()
    }
}

/// Schmidt decomposition `ψ = Σ √λ_k |a_k⟩|b_k⟩`.
#[derive(Clone, Debug)]
pub struct Schmidt {
    pub coefficients: SchmidtVector,
    /// Columns are `|a_k⟩`, over the A-side factors in ascending order.
    pub basis_a: DMatrix<C64>,
    /// Columns are `|b_k⟩`, over the B-side factors in ascending order.
    pub basis_b: DMatrix<C64>,
}

pub fn schmidt(psi: &PureState, cut: &Bipartition) -> Result<Schmidt> {
    let (perm, da, db) = cut.grouping(psi.dims())?;
    if da == 0 || db == 0 {
        return Err(invalid("Schmidt decomposition needs two nonempty sides"));
    }
    let v = permute_vector_factors(psi.amplitudes(), psi.dims(), &perm)?;
    let m = DMatrix::from_fn(da, db, |i, j| v[i * db + j]);
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V†");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let coeffs: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let sum: f64 = coeffs.iter().sum();
    let coefficients = SchmidtVector(coeffs.iter().map(|c| c / sum).collect());
    let basis_a = DMatrix::from_fn(da, order.len(), |r, c| u[(r, order[c])]);
    // m = U S V†, so |b_k⟩ is row k of V†.
    let basis_b = DMatrix::from_fn(db, order.len(), |r, c| vt[(order[c], r)]);
    Ok(Schmidt { coefficients, basis_a, basis_b })
}

/// Schmidt rank across `cut`.
pub fn schmidt_rank(psi: &PureState, cut: &Bipartition) -> Result<usize> {
    Ok(schmidt(psi, cut)?.coefficients.rank())
}

/// `|φ⁺_d⟩ = Σ_i |ii⟩ / √d`.
pub fn max_entangled(d: usize) -> Result<PureState> {
    if d < 2 {
        return Err(invalid(format!("maximally entangled state needs d ≥ 2, got {d}")));
    }
    let mut v = DVector::zeros(d * d);
    let amp = C64::from(1.0 / (d as f64).sqrt());
    for i in 0..d {
        v[i * d + i] = amp;
    }
    PureState::new(v, vec![d, d])
}

/// The swap `F_d = Σ_ij |ij⟩⟨ji|`.
pub fn flip(d: usize) -> Result<Operator> {
    if d < 2 {
        return Err(invalid(format!("flip operator needs d ≥ 2, got {d}")));
    }
    let mut m = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, j * d + i)] = C64::from(1.0);
        }
    }
    Operator::from_matrix(m, vec![d, d])
}

pub fn phi_plus() -> PureState {
    PureState::from_real(&[1.0, 0.0, 0.0, 1.0], vec![2, 2]).expect("valid Bell state")
}

pub fn phi_minus() -> PureState {
    PureState::from_real(&[1.0, 0.0, 0.0, -1.0], vec![2, 2]).expect("valid Bell state")
}

pub fn psi_plus() -> PureState {
    PureState::from_real(&[0.0, 1.0, 1.0, 0.0], vec![2, 2]).expect("valid Bell state")
}

pub fn psi_minus() -> PureState {
    PureState::from_real(&[0.0, 1.0, -1.0, 0.0], vec![2, 2]).expect("valid Bell state")
}

/// The four Bell states in the order `Φ+, Φ−, Ψ+, Ψ−`.
pub fn bell_basis() -> [PureState; 4] {
    [phi_plus(), phi_minus(), psi_plus(), psi_minus()]
}

/// Werner state `(I − ((β+1)/d) F_d) / (d² − (β+1))`, for `−(d+1) ≤ β ≤ d−1`.
pub fn werner(d: usize, beta: f64) -> Result<Operator> {
    if d < 2 {
        return Err(invalid(format!("Werner state needs d ≥ 2, got {d}")));
    }
    let df = d as f64;
    if !(beta >= -(df + 1.0) && beta <= df - 1.0) {
        return Err(invalid(format!("Werner parameter β = {beta} outside [−{}, {}]", d + 1, d - 1)));
    }
    let f = flip(d)?;
    let unnormalised = Operator::identity(vec![d, d]) - f * ((beta + 1.0) / df);
    Ok(unnormalised * (1.0 / (df * df - (beta + 1.0))))
}

/// Isotropic state `a I/d² + (1 − a) φ⁺_d`.
pub fn isotropic(d: usize, a: f64) -> Result<Operator> {
    if !(0.0..=1.0).contains(&a) {
        return Err(invalid(format!("isotropic weight a = {a} outside [0, 1]")));
    }
    let phi = max_entangled(d)?.density();
    Ok(Operator::maximally_mixed(vec![d, d]) * a + phi * (1.0 - a))
}

/// Smolin state on four qubits with factors ordered `A A′ B B′`:
/// `¼ Σ_k B_k^{AB} ⊗ B_k^{A′B′}` over the four Bell projectors `B_k`.
pub fn smolin() -> Operator {
    let mut acc = Operator::zeros(vec![2, 2, 2, 2]);
    for b in bell_basis() {
        let p = b.density();
        acc = acc + kron(&p, &p);
    }
    // Built as A B A′ B′; reorder to A A′ B B′.
    permute_factors(&(acc * 0.25), &[0, 2, 1, 3]).expect("valid permutation")
}

/// `Σ_{i<r} |i…i⟩ / √r` on `n` parties of local dimension `local_dim`.
pub fn ghz_embedded(n: usize, r: usize, local_dim: usize) -> Result<PureState> {
    if n < 2 || r < 2 {
        return Err(invalid(format!("GHZ state needs N ≥ 2 and r ≥ 2, got N = {n}, r = {r}")));
    }
    if r > local_dim {
        return Err(invalid(format!("GHZ rank r = {r} exceeds local dimension {local_dim}")));
    }
    let dims = vec![local_dim; n];
    let total: usize = dims.iter().product();
    let step: usize = (0..n).map(|k| local_dim.pow(k as u32)).sum();
    let mut v = DVector::zeros(total);
    let amp = C64::from(1.0 / (r as f64).sqrt());
    for i in 0..r {
        v[i * step] = amp;
    }
    PureState::new(v, dims)
}

/// `GHZ_r^(N)` with local dimension `r`.
pub fn ghz(n: usize, r: usize) -> Result<PureState> {
    ghz_embedded(n, r, r)
}

/// `(|100⟩ + |010⟩ + |001⟩)/√3`.
pub fn w_state() -> PureState {
    let mut a = [0.0; 8];
    a[4] = 1.0;
    a[2] = 1.0;
    a[1] = 1.0;
    PureState::from_real(&a, vec![2, 2, 2]).expect("valid W state")
}

/// `Σ_i √λ_i |ii⟩` on `d × d` with `d` the Schmidt rank of `λ`.
pub fn pure_from_schmidt(lambda: &SchmidtVector) -> PureState {
    let support = lambda.support();
    pure_from_schmidt_in(&SchmidtVector(support), lambda.rank()).expect("rank fits")
}

/// `Σ_i √λ_i |ii⟩` embedded in `d × d`, `d ≥ len(λ)`.
pub fn pure_from_schmidt_in(lambda: &SchmidtVector, d: usize) -> Result<PureState> {
    if d < lambda.len() {
        return Err(invalid(format!("{} Schmidt coefficients do not fit in local dimension {d}", lambda.len())));
    }
    let mut v = DVector::zeros(d * d);
    for (i, &l) in lambda.as_slice().iter().enumerate() {
        v[i * d + i] = C64::from(l.sqrt());
    }
    PureState::normalized(v, vec![d, d])
}

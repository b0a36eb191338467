//! A CP map converting one multipartite pure state into another while no
//! witness from a given finite list detects its Choi operator.

use nalgebra::DVector;

use super::{ConstructionResult, SampleConfig, SideCondition};
use crate::channels::Channel;
use crate::error::{invalid, Error, Result};
use crate::linalg::{kron, partial_trace, Operator, C64};
use crate::random::{haar_vector, product_vector, stream_rng};
use crate::states::PureState;

#[derive(Clone, Debug)]
pub struct StochasticOmega {
    pub result: ConstructionResult,
    pub omega: Operator,
    /// Product vector orthogonal to `ψ*` on the input parties.
    pub orthogonal_product: DVector<C64>,
    /// Whether that vector is a computational basis vector.
    pub computational: bool,
    /// `min_i Tr(R_i ω)`, when an `ω` term was needed.
    pub a: Option<f64>,
    /// `min_i ⟨ψ̂|S_i|ψ̂⟩`.
    pub b: f64,
    /// Weight `max(−b, 0)/a` on `ω ⊗ |ψ*⊥⟩⟨ψ*⊥|`.
    pub coefficient: f64,
    /// Product states drawn while assembling `ω`.
    pub samples_used: usize,
}

/// Product vector orthogonal to `target`: a computational basis vector when one
/// exists, otherwise random vectors on parties `2..N` and, on party 1, a vector
/// orthogonal to the contraction of `target` with them.
fn orthogonal_product(target: &DVector<C64>, dims: &[usize], seed: u64) -> Result<(DVector<C64>, bool)> {
    if let Some(i) = (0..target.len()).find(|&i| target[i].norm() < 1e-14) {
        let v = DVector::from_fn(target.len(), |r, _| C64::from(if r == i { 1.0 } else { 0.0 }));
        return Ok((v, true));
    }
    if dims[0] < 2 {
        return Err(invalid("first party needs dimension ≥ 2 for an orthogonal product vector"));
    }
    let mut rng = stream_rng(seed, "stochastic-orthogonal", 0);
    let rest = product_vector(&mut rng, &dims[1..]);
    let r = rest.len();
    // contraction v_i = Σ_j conj(rest_j) target_{i r + j}
    let contraction = DVector::from_fn(dims[0], |i, _| (0..r).map(|j| rest[j].conj() * target[i * r + j]).sum::<C64>());
    let mut first = haar_vector(&mut rng, dims[0]);
    let n2 = contraction.norm_squared();
    if n2 > 0.0 {
        let overlap = contraction.dotc(&first);
        first -= &contraction * (overlap / C64::from(n2));
    }
    let first = &first / C64::from(first.norm());
    Ok((first.kronecker(&rest), false))
}

/// Builds `Ω = (|b|/a) ω ⊗ ψ*⊥ + ψ̂ ⊗ (I − ψ*⊥)` so that `Λ_Ω(ψ) = ψ̂` while
/// `Tr(W_i Ω) ≥ 0` for every witness. The `ω` term is omitted when `b ≥ 0`.
///
/// Witnesses act on the Choi space ordered as the outputs `Ŝ₁…Ŝ_N` followed by
/// the inputs `S₁…S_N`.
pub fn stochastic_omega(
    witnesses: &[Operator],
    psi: &PureState,
    psi_hat: &PureState,
    cfg: &SampleConfig,
) -> Result<StochasticOmega> {
    let n = psi.dims().len();
    if psi_hat.dims().len() != n {
        return Err(Error::Dimension("input and output states need the same number of parties".into()));
    }
    let mut choi_dims = psi_hat.dims().to_vec();
    choi_dims.extend_from_slice(psi.dims());
    if witnesses.iter().any(|w| w.dims() != choi_dims.as_slice()) {
        return Err(Error::Dimension(format!("witnesses must have dims {choi_dims:?}")));
    }
    let (perp, computational) = orthogonal_product(psi.conj().amplitudes(), psi.dims(), cfg.seed)?;
    let p = Operator::projector(&perp, psi.dims().to_vec());
    let rest = Operator::identity(psi.dims().to_vec()) - p.clone();
    let out_id = Operator::identity(psi_hat.dims().to_vec());
    let keep: Vec<usize> = (0..n).collect();
    let traced = |w: &Operator, x: &Operator| -> Result<Operator> { partial_trace(&(w * &kron(&out_id, x)), &keep) };
    let r_ops = witnesses.iter().map(|w| traced(w, &p)).collect::<Result<Vec<_>>>()?;
    let s_ops = witnesses.iter().map(|w| traced(w, &rest)).collect::<Result<Vec<_>>>()?;

    let hat = psi_hat.amplitudes();
    let b = s_ops.iter().map(|s| s.expectation(hat)).fold(f64::INFINITY, f64::min);
    let mut omega_term = Operator::zeros(choi_dims.clone());
    let (mut a, mut coefficient, mut samples_used) = (None, 0.0, 0);
    if b < 0.0 {
        let mut rng = stream_rng(cfg.seed, "stochastic-omega", 0);
        let mut covered = vec![false; r_ops.len()];
        let mut omega = Operator::zeros(psi_hat.dims().to_vec());
        while covered.iter().any(|c| !c) {
            if samples_used >= cfg.samples {
                return Err(Error::SearchFailed(format!(
                    "no product states found for every R_i within {} samples (seed {})",
                    cfg.samples, cfg.seed
                )));
            }
            samples_used += 1;
            let v = product_vector(&mut rng, psi_hat.dims());
            let mut useful = false;
            for (c, r) in covered.iter_mut().zip(&r_ops) {
                if !*c && r.expectation(&v) > 1e-9 * r.frobenius_norm().max(1e-300) {
                    *c = true;
                    useful = true;
                }
            }
            if useful {
                omega = omega + Operator::projector(&v, psi_hat.dims().to_vec());
            }
        }
        let amin = r_ops.iter().map(|r| r.trace_product(&omega)).fold(f64::INFINITY, f64::min);
        coefficient = -b / amin;
        a = Some(amin);
        omega_term = kron(&omega, &p) * coefficient;
    }
    let omega = omega_term + kron(&psi_hat.density(), &rest);

    let parties: Vec<usize> = (0..n).collect();
    let channel = Channel::with_parties(
        omega.clone(),
        psi_hat.dims().to_vec(),
        psi.dims().to_vec(),
        parties.clone(),
        parties,
    )?;
    let out = channel.apply(&psi.density())?;
    let tr = out.trace_re();
    let fidelity = out.expectation(hat) / tr;
    let min_w = witnesses.iter().map(|w| w.trace_product(&omega)).fold(f64::INFINITY, f64::min);
    let side = vec![
        SideCondition::at_least("omega_min_eigenvalue", omega.min_eigenvalue(), 0.0, 1e-10),
        SideCondition::at_least("min_witness_value", min_w, 0.0, 1e-10),
        SideCondition::equals("output_fidelity", fidelity, 1.0, 1e-10),
        SideCondition::equals("output_trace", tr, 1.0, 1e-10),
        SideCondition::at_most("orthogonality", psi.conj().amplitudes().dotc(&perp).norm(), 0.0, 1e-12),
    ];
    let result = ConstructionResult {
        channel,
        side_conditions: side,
        provenance: "stochastic pure-state conversion undetected by finitely many witnesses".into(),
    };
    Ok(StochasticOmega { result, omega, orthogonal_product: perp, computational, a, b, coefficient, samples_used })
}

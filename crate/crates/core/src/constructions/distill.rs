//! Channels that turn entangled (or arbitrary) inputs into two-qubit states with
//! LOCC-distillable entanglement.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ConstructionResult, SampleConfig, SideCondition};
use crate::channels::{Channel, TwoBranch};
use crate::error::{invalid, Error, Result};
use crate::linalg::{kron, partial_trace, partial_transpose_factors, Operator, C64};
use crate::measures::negativity;
use crate::par;
use crate::random::{density, gaussian_matrix, product_vector, stream_rng};
use crate::separability::{gurvits_distance, Bipartition, Witness};
use crate::states::phi_plus;

/// `Λ(X) = Tr(AX) I/4 + Tr((I − A)X) φ⁺₂` with `A = (W + 2I)/3`.
///
/// For a witness with `‖W‖_F ≤ 1` this is dually non-entangling: separable inputs
/// have `Tr(Aσ) ≥ 2/3`, so at most weight 1/3 lands on `φ⁺₂`, and every dual
/// output is proportional to `I + cW` with `|c| ≤ 1/2`.
pub fn witness_channel(witness: &Witness, cfg: &SampleConfig) -> Result<ConstructionResult> {
    let norm = witness.operator.frobenius_norm();
    if norm > 1.0 + 1e-12 {
        return Err(invalid(format!("witness Frobenius norm {norm} exceeds 1; rescale it first")));
    }
    let w = witness.cut.regroup(&witness.operator)?;
    let dims = w.dims().to_vec();
    let effect = (&w + &(Operator::identity(dims.clone()) * 2.0)) * (1.0 / 3.0);
    let phi = phi_plus().density();
    let tb = TwoBranch::new(effect.clone(), Operator::maximally_mixed(vec![2, 2]), phi.clone())?;
    let channel = Channel::from_two_branch(tb.clone())?;

    let spec = effect.spectrum();
    let min_sep = par::min_over(cfg.exec, cfg.samples, |i| {
        let mut rng = stream_rng(cfg.seed, "witness-channel-separable", i as u64);
        w.expectation(&product_vector(&mut rng, &dims))
    });
    let max_phi_weight = par::max_over(cfg.exec, cfg.samples, |i| {
        let mut rng = stream_rng(cfg.seed, "witness-channel-separable", i as u64);
        let v = product_vector(&mut rng, &dims);
        1.0 - tb.first_branch_weight(&Operator::projector(&v, dims.clone()))
    });
    // Fidelity with φ⁺ is Tr(Aσ)/4 + (1 − Tr(Aσ)) ≤ 1/2, the isotropic separability bound.
    let max_fidelity = par::max_over(cfg.exec, cfg.samples, |i| {
        let mut rng = stream_rng(cfg.seed, "witness-channel-separable", i as u64);
        let v = product_vector(&mut rng, &dims);
        tb.apply(&Operator::projector(&v, dims.clone())).expect("dims match").expectation(phi_plus().amplitudes())
    });
    let max_dual_gurvits = par::max_over(cfg.exec, cfg.samples, |i| {
        let mut rng = stream_rng(cfg.seed, "witness-channel-dual", i as u64);
        let sigma = density(&mut rng, &[2, 2], 1 + i % 4);
        gurvits_distance(&tb.dual_apply(&sigma).expect("two-qubit input"))
    });
    let side = vec![
        SideCondition::at_most("witness_frobenius_norm", norm, 1.0, 1e-12),
        SideCondition::at_least("effect_min_eigenvalue", spec.min(), 0.0, 1e-12),
        SideCondition::at_most("effect_max_eigenvalue", spec.max(), 1.0, 1e-12),
        SideCondition::at_least("min_sampled_witness_value", min_sep, 0.0, 1e-10),
        SideCondition::at_most("max_sampled_phi_branch_weight", max_phi_weight, 1.0 / 3.0, 1e-10),
        SideCondition::at_most("max_sampled_output_fidelity", max_fidelity, 0.5, 1e-10),
        SideCondition::at_most("max_sampled_dual_gurvits_distance", max_dual_gurvits, 1.0, 1e-12),
        SideCondition::holds("cptp", channel.is_cptp()),
    ];
    Ok(ConstructionResult {
        channel,
        side_conditions: side,
        provenance: "dually non-entangling channel built from a normalised entanglement witness".into(),
    })
}

/// Result of the search for an entangled two-qubit state not flagged by any
/// projected witness.
#[derive(Clone, Debug)]
pub struct UndetectedSearch {
    pub rho: Operator,
    pub negativity: f64,
    /// `min_i Tr(V_i ρ)`.
    pub min_constraint: f64,
    pub restarts: usize,
}

const RESTARTS: usize = 32;
const STEPS: usize = 400;

/// `Π Tr_{A₁B₁}(W) Π` with `Π` onto `span{|ij⟩ : i, j < 2}` of `A₂B₂`.
fn projected_witness(w: &Operator) -> Result<DMatrix<C64>> {
    let dims = w.dims();
    if dims.len() != 4 || dims[0] < 2 || dims[1] < 2 {
        return Err(Error::Dimension("witness must live on A₂ B₂ A₁ B₁ with |A₂|, |B₂| ≥ 2".into()));
    }
    let reduced = partial_trace(w, &[0, 1])?;
    let db = dims[1];
    let idx = [0, 1, db, db + 1];
    Ok(DMatrix::from_fn(4, 4, |r, c| reduced.mat()[(idx[r], idx[c])]))
}

struct Search<'a> {
    constraints: &'a [DMatrix<C64>],
    /// `Tr(V_i I/4)`.
    at_noise: Vec<f64>,
}

impl Search<'_> {
    /// Largest `t ≤ 1` keeping `(1 − t) I/4 + t ρ_e` inside every half-space.
    fn feasible_weight(&self, rho_e: &DMatrix<C64>) -> f64 {
        let mut t = 1.0_f64;
        for (v, &c0) in self.constraints.iter().zip(&self.at_noise) {
            let g = (v * rho_e).trace().re;
            if g < 0.0 {
                t = t.min(if c0 <= 0.0 { 0.0 } else { c0 / (c0 - g) });
            }
        }
        t
    }

    fn state(&self, g: &DMatrix<C64>) -> DMatrix<C64> {
        let m = g * g.adjoint();
        let tr = m.trace().re;
        let rho_e = m / C64::from(tr);
        let t = self.feasible_weight(&rho_e);
        DMatrix::<C64>::identity(4, 4) * C64::from((1.0 - t) / 4.0) + rho_e * C64::from(t)
    }

    /// `−λ_min(ρ^Γ)`: positive exactly when the candidate is NPT.
    fn score(&self, g: &DMatrix<C64>) -> f64 {
        let rho = Operator::from_matrix(self.state(g), vec![2, 2]).expect("4×4");
        -partial_transpose_factors(&rho, &[1]).expect("two qubits").min_eigenvalue()
    }

    fn climb(&self, mut g: DMatrix<C64>, rng: &mut ChaCha8Rng) -> (f64, DMatrix<C64>) {
        let mut best = self.score(&g);
        let mut step = 0.3;
        for _ in 0..STEPS {
            let scale = g.norm().max(1e-12);
            let trial = &g + gaussian_matrix(rng, 4, g.ncols()) * C64::from(step * scale);
            let s = self.score(&trial);
            if s > best {
                best = s;
                g = trial;
                step = (step * 1.3).min(1.0);
            } else {
                step = (step * 0.8).max(1e-6);
            }
        }
        (best, g)
    }
}

/// Entangled two-qubit `ρ` with `Tr(V_i ρ) ≥ 0` for every projected witness
/// `V_i`, found by maximising the PT negativity along rays from `I/4`.
pub fn search_undetected(constraints: &[DMatrix<C64>], seed: u64) -> Result<UndetectedSearch> {
    let active: Vec<DMatrix<C64>> = constraints.iter().filter(|v| v.norm() > 1e-14).cloned().collect();
    let at_noise = active.iter().map(|v| v.trace().re / 4.0).collect();
    let search = Search { constraints: &active, at_noise };

    let mut starts: Vec<DMatrix<C64>> = crate::states::bell_basis()
        .iter()
        .map(|b| DMatrix::from_column_slice(4, 1, b.amplitudes().as_slice()))
        .collect();
    for r in 0..RESTARTS {
        let mut rng = stream_rng(seed, "undetected-start", r as u64);
        let rank = 1 + r % 2;
        starts.push(gaussian_matrix(&mut rng, 4, rank));
    }
    let results = par::map_indices(crate::par::Exec::default(), starts.len(), |i| {
        let mut rng = stream_rng(seed, "undetected-climb", i as u64);
        search.climb(starts[i].clone(), &mut rng)
    });
    let (score, g) = results
        .into_iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.0.total_cmp(&b.0).then(ib.cmp(ia)))
        .map(|(_, r)| r)
        .expect("at least one start");
    if score <= 1e-12 {
        return Err(Error::SearchFailed(format!(
            "no entangled undetected state found after {} starts (seed {seed})",
            starts.len()
        )));
    }
    let rho = Operator::from_matrix(search.state(&g), vec![2, 2])?;
    let min_constraint = active.iter().map(|v| (v * rho.mat()).trace().re).fold(f64::INFINITY, f64::min);
    Ok(UndetectedSearch {
        negativity: negativity(&rho, &Bipartition::first(1))?,
        rho,
        min_constraint,
        restarts: starts.len(),
    })
}

/// Replacement channel `Λ(X) = Tr(X) ρ`, with `ρ` an entangled two-qubit state
/// (on the first two levels of `A₂B₂`) that none of the witnesses flags.
pub fn undetected_conversion(witnesses: &[Witness], seed: u64) -> Result<(ConstructionResult, UndetectedSearch)> {
    let first = witnesses.first().ok_or_else(|| invalid("need at least one witness"))?;
    let dims = first.operator.dims().to_vec();
    if witnesses.iter().any(|w| w.operator.dims() != dims.as_slice()) {
        return Err(Error::Dimension("witnesses must share the Choi-space dims".into()));
    }
    let constraints = witnesses.iter().map(|w| projected_witness(&w.operator)).collect::<Result<Vec<_>>>()?;
    let found = search_undetected(&constraints, seed)?;

    let (da, db) = (dims[0], dims[1]);
    let mut emb = DMatrix::<C64>::zeros(da * db, da * db);
    let idx = [0, 1, db, db + 1];
    for r in 0..4 {
        for c in 0..4 {
            emb[(idx[r], idx[c])] = found.rho.mat()[(r, c)];
        }
    }
    let rho_out = Operator::from_matrix(emb, vec![da, db])?;
    let choi = kron(&rho_out, &Operator::identity(vec![dims[2], dims[3]]));
    let channel = Channel::from_choi(choi, vec![da, db], vec![dims[2], dims[3]])?;
    let min_w = witnesses.iter().map(|w| w.operator.trace_product(channel.choi())).fold(f64::INFINITY, f64::min);
    let side = vec![
        SideCondition::at_least("min_witness_on_choi", min_w, 0.0, 1e-10),
        SideCondition::at_least("min_projected_constraint", found.min_constraint, 0.0, 1e-10),
        SideCondition::above("output_negativity", found.negativity, 0.0),
        SideCondition::holds("cptp", channel.is_cptp()),
    ];
    let result = ConstructionResult {
        channel,
        side_conditions: side,
        provenance: "replacement channel with entangled output undetected by finitely many witnesses".into(),
    };
    Ok((result, found))
}

/// `(|η⟩⟨η|)^Γ` for a random `η` on `dims`, transposing the B factors of `cut`.
pub fn random_pt_witness<R: Rng + ?Sized>(rng: &mut R, dims: &[usize], cut: &Bipartition) -> Result<Witness> {
    let n: usize = dims.iter().product();
    let eta: DVector<C64> = crate::random::haar_vector(rng, n);
    let projector = Operator::projector(&eta, dims.to_vec());
    let operator = crate::separability::partial_transpose_cut(&projector, cut)?;
    Ok(Witness { operator, cut: cut.clone() })
}

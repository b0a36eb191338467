//! `k`-non-entangling maps: non-entangling even with `k`-dimensional local
//! ancillas, tested through projections of the input onto `k`-dimensional
//! subspaces.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{witness_channel, ConstructionResult, SampleConfig, SideCondition};
use crate::channels::{Channel, TwoBranch};
use crate::error::{invalid, Error, Result};
use crate::linalg::{partial_transpose_factors, Operator, C64};
use crate::par::{self, Exec};
use crate::random::{coisometry, stream_rng};
use crate::separability::{
    certify, gurvits_distance, min_pt_eigenvalue, Bipartition, Evidence, SeparabilityStatus, SeparabilityVerdict,
    Witness,
};
use crate::states::{schmidt, werner, PureState};

/// Co-isometries `P, Q : C^d → C^k` (rows orthonormal).
#[derive(Clone, Debug)]
pub struct ProjectionPair {
    pub p: DMatrix<C64>,
    pub q: DMatrix<C64>,
    pub label: String,
}

impl ProjectionPair {
    /// `P = Q` onto the first `k` computational basis vectors.
    pub fn leading(k: usize, d: usize) -> Self {
        let p = DMatrix::from_fn(k, d, |r, c| C64::from(if r == c { 1.0 } else { 0.0 }));
        ProjectionPair { q: p.clone(), p, label: format!("P=Q leading {k}") }
    }

    pub fn random(seed: u64, index: usize, k: usize, d: usize) -> Self {
        let mut rng = stream_rng(seed, "kne-projection", index as u64);
        let p = coisometry(&mut rng, k, d);
        let q = coisometry(&mut rng, k, d);
        ProjectionPair { p, q, label: format!("random #{index}") }
    }

    pub fn rank(&self) -> usize {
        self.p.nrows()
    }

    fn check(&self, d: usize) -> Result<()> {
        if self.p.ncols() != d || self.q.ncols() != d || self.p.nrows() != self.q.nrows() {
            return Err(Error::Dimension(format!("projection pair does not map C^{d} to a common C^k")));
        }
        Ok(())
    }
}

/// `(P ⊗ Q) X (P ⊗ Q)†` for `X` on `C^d ⊗ C^d`.
pub fn projected_operator(x: &Operator, pair: &ProjectionPair) -> Result<Operator> {
    let [da, db] = x.dims() else {
        return Err(Error::Dimension("projection needs a bipartite operator".into()));
    };
    if da != db {
        return Err(Error::Dimension("projection needs equal local dimensions".into()));
    }
    pair.check(*da)?;
    let k = pair.rank();
    x.conjugate_by(&pair.p.kronecker(&pair.q), vec![k, k])
}

/// `(I_out ⊗ P ⊗ Q) J (I_out ⊗ P ⊗ Q)†` for a channel on `C^d ⊗ C^d`.
pub fn projected_choi(ch: &Channel, pair: &ProjectionPair) -> Result<Operator> {
    let [da, db] = ch.in_dims() else {
        return Err(Error::Dimension("projected Choi needs a bipartite input".into()));
    };
    if da != db {
        return Err(Error::Dimension("projected Choi needs equal local input dimensions".into()));
    }
    pair.check(*da)?;
    let k = pair.rank();
    let dout: usize = ch.out_dims().iter().product();
    let m = DMatrix::<C64>::identity(dout, dout).kronecker(&pair.p.kronecker(&pair.q));
    let mut dims = ch.out_dims().to_vec();
    dims.extend([k, k]);
    ch.choi().conjugate_by(&m, dims)
}

/// Certificate data for one projected Werner block.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WernerProjection {
    /// `c (β + 1)` with `c = Tr(Q P† P Q†)/d`.
    pub strength: f64,
    /// Frobenius-ball distance of the projected block, at the best scale.
    pub gurvits_distance: f64,
}

impl WernerProjection {
    pub fn certified(&self) -> bool {
        self.gurvits_distance <= 1.0 + 1e-12
    }
}

pub fn werner_projection_gurvits(d: usize, beta: f64, pair: &ProjectionPair) -> Result<WernerProjection> {
    let block = projected_operator(&werner(d, beta)?, pair)?;
    let overlap = (&pair.q * pair.p.adjoint() * &pair.p * pair.q.adjoint()).trace().re;
    Ok(WernerProjection { strength: overlap / d as f64 * (beta + 1.0), gurvits_distance: gurvits_distance(&block) })
}

/// Minimum partial-transpose eigenvalue of the `P = Q` projection of the
/// Werner state onto `m` dimensions (unnormalised block).
pub fn werner_projection_pt_min(d: usize, m: usize, beta: f64) -> Result<f64> {
    if m == 0 || m > d {
        return Err(invalid(format!("projection rank {m} must lie in 1..={d}")));
    }
    let block = projected_operator(&werner(d, beta)?, &ProjectionPair::leading(m, d))?;
    min_pt_eigenvalue(&block, &Bipartition::first(1))
}

/// Closed form of [`werner_projection_pt_min`]: `(1 − m(β+1)/d)/(d² − β − 1)`.
pub fn werner_projection_pt_min_closed(d: usize, m: usize, beta: f64) -> f64 {
    let df = d as f64;
    (1.0 - m as f64 * (beta + 1.0) / df) / (df * df - beta - 1.0)
}

fn leading_pairs(k: usize, d: usize) -> Vec<ProjectionPair> {
    vec![ProjectionPair::leading(k, d)]
}

pub fn k_ne_channel(d: usize, k: usize, beta: f64) -> Result<ConstructionResult> {
    k_ne_channel_with(d, k, beta, &SampleConfig::new(1000, 0))
}

/// `Λ_β(X) = Tr(ρ_d(β) X) |00⟩⟨00| + Tr((I − ρ_d(β)) X) |11⟩⟨11|`, which is
/// `k`-non-entangling but not `(k+1)`-non-entangling for `β` in
/// `((d−k−1)/(k+1), (d−k)/k]`.
pub fn k_ne_channel_with(d: usize, k: usize, beta: f64, cfg: &SampleConfig) -> Result<ConstructionResult> {
    if !(2..d).contains(&k) {
        return Err(invalid(format!("need 2 ≤ k < d, got k={k}, d={d}")));
    }
    let (lo, hi) = ((d - k - 1) as f64 / (k + 1) as f64, (d - k) as f64 / k as f64);
    if !(beta > lo && beta <= hi + 1e-12) {
        return Err(invalid(format!("β = {beta} outside the window ({lo}, {hi}]")));
    }
    let effect = werner(d, beta)?;
    let complement = Operator::identity(vec![d, d]) - effect.clone();
    let rho1 = Operator::basis_projector(0, vec![2, 2]);
    let rho2 = Operator::basis_projector(3, vec![2, 2]);
    let channel = Channel::from_two_branch(TwoBranch::new(effect, rho1, rho2)?)?;

    let mut pairs = leading_pairs(k, d);
    pairs.extend((0..cfg.samples).map(|i| ProjectionPair::random(cfg.seed, i, k, d)));
    let projections = par::map_slice(cfg.exec, &pairs, |pair| werner_projection_gurvits(d, beta, pair));
    let projections = projections.into_iter().collect::<Result<Vec<_>>>()?;
    let max_strength = projections.iter().map(|p| p.strength).fold(f64::NEG_INFINITY, f64::max);
    let max_distance = projections.iter().map(|p| p.gurvits_distance).fold(f64::NEG_INFINITY, f64::max);
    let side = vec![
        SideCondition::at_most("max_projected_strength", max_strength, 1.0, 1e-12),
        SideCondition::at_most("max_projected_gurvits_distance", max_distance, 1.0, 1e-12),
        SideCondition::below("next_rank_pt_min", werner_projection_pt_min(d, k + 1, beta)?, 0.0),
        SideCondition::at_most("complement_gurvits_distance", gurvits_distance(&complement), 1.0, 1e-12),
        SideCondition::holds("cptp", channel.is_cptp()),
    ];
    Ok(ConstructionResult {
        channel,
        side_conditions: side,
        provenance: format!("Werner-state measurement channel, {k}-non-entangling but not {}-non-entangling", k + 1),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KneStatus {
    NotKNonEntangling,
    /// No sampled projection produced an entangled Choi block; this does not
    /// prove the property.
    PassedSamples,
}

#[derive(Clone, Debug, Serialize)]
pub struct KneOutcome {
    pub status: KneStatus,
    pub k: usize,
    pub tested: usize,
    pub certified_separable: usize,
    pub undecided: usize,
    /// Label and verdict of the first violating projection.
    pub violation: Option<(String, SeparabilityVerdict)>,
}

fn verdict(status: SeparabilityStatus, description: impl Into<String>, value: f64) -> SeparabilityVerdict {
    SeparabilityVerdict { status, evidence: Evidence { description: description.into(), value } }
}

/// Certifies a projected Choi operator across the channel's `A₂A₁ : B₂B₁` cut.
///
/// When the output register is classical (block-diagonal in the computational
/// basis of a bipartite output) the operator is separable iff every block is,
/// since local basis projections on the output isolate each block.
pub fn certify_projected_choi(choi: &Operator, out_dims: &[usize], cut: &Bipartition) -> Result<SeparabilityVerdict> {
    let n_out = out_dims.len();
    if n_out != 2 || choi.dims().len() != 4 || cut.a_factors() != [0, 2] {
        return certify(choi, cut);
    }
    let o: usize = out_dims.iter().product();
    let kk = choi.side() / o;
    let inner = choi.dims()[2..].to_vec();
    let m = choi.mat();
    let scale = choi.frobenius_norm().max(1e-300);
    let off_block = (0..choi.side()).any(|r| (0..choi.side()).any(|c| r / kk != c / kk && m[(r, c)].norm() > 1e-14 * scale));
    if off_block {
        return certify(choi, cut);
    }
    let mut pending = None;
    for b in 0..o {
        let block = Operator::from_matrix(m.view((b * kk, b * kk), (kk, kk)).into_owned(), inner.clone())?;
        if block.trace_re() <= 1e-14 * scale {
            continue;
        }
        let v = certify(&block, &Bipartition::first(1))?;
        match v.status {
            SeparabilityStatus::EntangledCertified => {
                return Ok(verdict(v.status, format!("output block {b}: {}", v.evidence.description), v.evidence.value));
            }
            SeparabilityStatus::Undecided => pending = pending.or(Some((b, v))),
            SeparabilityStatus::SeparableCertified => {}
        }
    }
    Ok(match pending {
        Some((b, v)) => verdict(v.status, format!("output block {b}: {}", v.evidence.description), v.evidence.value),
        None => verdict(SeparabilityStatus::SeparableCertified, "every classical output block certified separable", 0.0),
    })
}

/// Samples `n` random projection pairs (plus `P = Q` onto the leading basis
/// vectors and any `extra` pairs, tested first) and looks for an entangled
/// projected Choi operator.
pub fn k_ne_sampled_test(
    ch: &Channel,
    k: usize,
    n: usize,
    seed: u64,
    extra: &[ProjectionPair],
    exec: Exec,
) -> Result<KneOutcome> {
    let [d, db] = ch.in_dims() else {
        return Err(Error::Dimension("k-non-entangling test needs a bipartite input".into()));
    };
    if d != db || k == 0 || k > *d {
        return Err(invalid(format!("need equal local input dimensions and 1 ≤ k ≤ d, got {:?}, k={k}", ch.in_dims())));
    }
    let mut pairs = extra.to_vec();
    pairs.extend(leading_pairs(k, *d));
    pairs.extend((0..n).map(|i| ProjectionPair::random(seed, i, k, *d)));
    let cut = ch.choi_cut();
    let verdicts = par::map_slice(exec, &pairs, |pair| {
        certify_projected_choi(&projected_choi(ch, pair)?, ch.out_dims(), &cut)
    });
    let verdicts = verdicts.into_iter().collect::<Result<Vec<_>>>()?;
    let violation = pairs.iter().zip(&verdicts).find(|(_, v)| v.is_entangled()).map(|(p, v)| (p.label.clone(), v.clone()));
    Ok(KneOutcome {
        status: if violation.is_some() { KneStatus::NotKNonEntangling } else { KneStatus::PassedSamples },
        k,
        tested: pairs.len(),
        certified_separable: verdicts.iter().filter(|v| v.is_separable()).count(),
        undecided: verdicts.iter().filter(|v| v.status == SeparabilityStatus::Undecided).count(),
        violation,
    })
}

/// Outcome of testing the witness channel for a rank-3 `η` against
/// 3-dimensional projections onto the Schmidt bases of `η̄`.
#[derive(Clone, Debug, Serialize)]
pub struct ThreeNeAttempt {
    /// `Tr(ρ_d(β) W)`, negative when the witness detects the Werner state.
    pub witness_value: f64,
    pub output_verdict: SeparabilityVerdict,
    pub projected_pt_min: f64,
    pub projected_verdict: SeparabilityVerdict,
}

/// Builds `η` from the most negative partial-transpose eigenvector of the
/// leading 3-dimensional Werner projection, the witness channel for
/// `W = η^Γ`, and certifies its projected Choi operator. PPT is expected, so an
/// `Undecided` verdict is the typical result.
pub fn three_ne_attempt(d: usize, beta: f64, cfg: &SampleConfig) -> Result<ThreeNeAttempt> {
    if d < 4 {
        return Err(invalid("the rank-3 construction needs d ≥ 4"));
    }
    let rho = werner(d, beta)?;
    let block = projected_operator(&rho, &ProjectionPair::leading(3, d))?;
    let pt = partial_transpose_factors(&block, &[1])?.spectrum();
    let small = pt.vectors.column(pt.len() - 1);
    let mut eta = nalgebra::DVector::zeros(d * d);
    for i in 0..3 {
        for j in 0..3 {
            eta[i * d + j] = small[i * 3 + j];
        }
    }
    let eta = PureState::normalized(eta, vec![d, d])?;
    let w = partial_transpose_factors(&eta.density(), &[1])?;
    let witness = Witness { operator: w.clone(), cut: Bipartition::first(1) };
    let built = witness_channel(&witness, cfg)?;
    let output = built.channel.apply(&rho)?;
    let output_verdict = certify(&output, &Bipartition::first(1))?;

    let sch = schmidt(&eta.conj(), &Bipartition::first(1))?;
    let rows = |basis: &DMatrix<C64>| DMatrix::from_fn(3, d, |r, c| basis[(c, r)].conj());
    let pair = ProjectionPair { p: rows(&sch.basis_a), q: rows(&sch.basis_b), label: "Schmidt bases".into() };
    let projected = projected_choi(&built.channel, &pair)?;
    let cut = built.channel.choi_cut();
    Ok(ThreeNeAttempt {
        witness_value: w.trace_product(&rho),
        output_verdict,
        projected_pt_min: min_pt_eigenvalue(&projected, &cut)?,
        projected_verdict: certify_projected_choi(&projected, built.channel.out_dims(), &cut)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::swap_channel;
    use crate::linalg::kron;
    use approx::assert_relative_eq;

    #[test]
    fn werner_window_example() {
        let r = k_ne_channel_with(4, 2, 1.0, &SampleConfig::new(1000, 3)).unwrap();
        assert!(r.all_pass(), "{:?}", r.failures());
        let pt = werner_projection_pt_min(4, 3, 1.0).unwrap();
        assert_relative_eq!(pt, (1.0 - 1.5) / 14.0, epsilon = 1e-13);
        let r = k_ne_channel_with(5, 2, 1.5, &SampleConfig::new(200, 3)).unwrap();
        assert!(r.all_pass(), "{:?}", r.failures());
    }

    #[test]
    fn window_is_enforced() {
        assert!(k_ne_channel(4, 2, 1.2).is_err());
        assert!(k_ne_channel(4, 2, 0.3).is_err());
        assert!(k_ne_channel(4, 4, 0.5).is_err());
        assert!(k_ne_channel(4, 1, 2.0).is_err());
    }

    #[test]
    fn pt_closed_form_matches() {
        for (d, m, beta) in [(4, 3, 1.0), (5, 3, 0.7), (6, 4, 0.2), (5, 2, 1.5)] {
            assert_relative_eq!(
                werner_projection_pt_min(d, m, beta).unwrap(),
                werner_projection_pt_min_closed(d, m, beta),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn equal_projections_give_largest_strength() {
        let lead = werner_projection_gurvits(5, 1.0, &ProjectionPair::leading(2, 5)).unwrap();
        assert_relative_eq!(lead.strength, 2.0 / 5.0 * 2.0, epsilon = 1e-14);
        for i in 0..50 {
            let r = werner_projection_gurvits(5, 1.0, &ProjectionPair::random(9, i, 2, 5)).unwrap();
            assert!(r.strength <= lead.strength + 1e-12);
        }
    }

    #[test]
    fn measurement_channel_hierarchy() {
        let ch = k_ne_channel(4, 2, 1.0).unwrap().channel;
        let at_k = k_ne_sampled_test(&ch, 2, 30, 1, &[], Exec::Parallel).unwrap();
        assert_eq!(at_k.status, KneStatus::PassedSamples);
        assert_eq!(at_k.certified_separable, at_k.tested);
        let above = k_ne_sampled_test(&ch, 3, 30, 1, &[], Exec::Parallel).unwrap();
        assert_eq!(above.status, KneStatus::NotKNonEntangling);
        assert_eq!(above.violation.unwrap().0, "P=Q leading 3");
    }

    #[test]
    fn swap_channel_is_only_one_non_entangling() {
        let ch = swap_channel(3).unwrap();
        assert_eq!(k_ne_sampled_test(&ch, 1, 10, 2, &[], Exec::Parallel).unwrap().status, KneStatus::PassedSamples);
        assert_eq!(k_ne_sampled_test(&ch, 2, 3, 2, &[], Exec::Parallel).unwrap().status, KneStatus::NotKNonEntangling);
    }

    #[test]
    fn projected_choi_equals_channel_on_projected_maximally_entangled_input() {
        // Σ_{ij} Λ(|i⟩⟨j|) ⊗ R|i⟩⟨j|R† with R = P ⊗ Q, built entry by entry.
        let ch = k_ne_channel(4, 2, 1.0).unwrap().channel;
        let pair = ProjectionPair::random(5, 0, 2, 4);
        let r = pair.p.kronecker(&pair.q);
        let mut oracle = Operator::zeros(vec![2, 2, 2, 2]);
        for i in 0..16 {
            for j in 0..16 {
                let mut e = DMatrix::<C64>::zeros(16, 16);
                e[(i, j)] = C64::from(1.0);
                let out = ch.apply(&Operator::from_matrix(e, vec![4, 4]).unwrap()).unwrap();
                let proj = Operator::from_matrix(r.column(i) * r.column(j).adjoint(), vec![2, 2]).unwrap();
                oracle = oracle + kron(&out, &proj);
            }
        }
        assert!(projected_choi(&ch, &pair).unwrap().max_abs_diff(&oracle) < 1e-14);
    }

    #[test]
    fn three_ne_attempt_is_recorded() {
        let a = three_ne_attempt(4, 0.5, &SampleConfig::new(200, 0)).unwrap();
        assert!(a.witness_value < 0.0);
        assert!(a.output_verdict.is_entangled());
        assert!(a.projected_pt_min >= -1e-12);
        // PPT, so NPT detection cannot fire; separability must never be claimed.
        assert!(!a.projected_verdict.is_separable());
    }
}

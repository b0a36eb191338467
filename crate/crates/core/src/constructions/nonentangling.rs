//! Measure-and-prepare conversions between pure states, the two-copy
//! superactivation example and the negativity-increasing PPT-preserving channel.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{ConstructionResult, SampleConfig, SideCondition};
use crate::channels::{Channel, TwoBranch};
use crate::error::{invalid, Error, Result};
use crate::linalg::{permute_factors, Operator, C64};
use crate::measures::{negativity, robustness_pure};
use crate::par;
use crate::random::{product_vector, stream_rng};
use crate::separability::{certify, min_pt_eigenvalue, robustness_sigma_star, Bipartition};
use crate::states::{
    bell_basis, flip, max_entangled, phi_plus, psi_minus, pure_from_schmidt_in, schmidt_rank, smolin, werner, PureState,
    SchmidtVector,
};

const APPLY_TOL: f64 = 1e-10;

/// Largest `|⟨ψ|v⟩|²` over sampled product vectors `v`.
fn max_sampled_overlap(psi: &PureState, cfg: &SampleConfig, label: &str) -> f64 {
    let dims = psi.dims().to_vec();
    let amps = psi.amplitudes();
    par::max_over(cfg.exec, cfg.samples, |i| {
        let mut rng = stream_rng(cfg.seed, label, i as u64);
        let v = product_vector(&mut rng, &dims);
        amps.dotc(&v).norm_sqr()
    })
}

/// Separable state `σ` with `ψ + R(ψ) σ` separable, embedded in `d × d`.
///
/// Returns `σ` with the phase-average residual of its certificate. For a product
/// target the state itself is returned with residual 0.
fn sigma_star_in(lambda: &SchmidtVector, d: usize) -> Result<(Operator, f64)> {
    if lambda.rank() < 2 {
        return Ok((pure_from_schmidt_in(lambda, d)?.density(), 0.0));
    }
    let star = robustness_sigma_star(lambda)?;
    let n = lambda.rank();
    let mut diag = vec![0.0; d * d];
    for i in 0..n {
        for j in 0..n {
            diag[i * d + j] = star.sigma.mat()[(i * n + j, i * n + j)].re;
        }
    }
    Ok((Operator::diagonal(&diag, vec![d, d])?, star.residual))
}

fn is_product_diagonal(x: &Operator) -> bool {
    let m = x.mat();
    let n = x.side();
    (0..n).all(|c| (0..n).all(|r| if r == c { m[(r, c)].re >= -1e-15 } else { m[(r, c)].norm() == 0.0 }))
}

fn sigma_star_conditions(lambda: &SchmidtVector, sigma: &Operator, residual: f64) -> Vec<SideCondition> {
    let mut out = vec![
        SideCondition::holds("noise_state_diagonal_in_product_basis", is_product_diagonal(sigma)),
        SideCondition::equals("noise_state_trace", sigma.trace_re(), 1.0, 1e-12),
    ];
    if lambda.rank() >= 2 {
        out.push(SideCondition::at_most("robustness_certificate_residual", residual, 0.0, 1e-10));
    }
    out
}

/// Conversion `φ⁺_k → ψ` by `Λ(X) = Tr(φ⁺_k X) ψ + Tr((I − φ⁺_k) X) σ*`, possible
/// exactly when `R(ψ) ≤ k − 1`. Refused otherwise.
pub fn maxent_to_pure(k: usize, target: &SchmidtVector, cfg: &SampleConfig) -> Result<ConstructionResult> {
    if k < 1 {
        return Err(invalid("k must be at least 1"));
    }
    let r = robustness_pure(target);
    let budget = (k - 1) as f64;
    if r > budget + 1e-12 {
        return Err(Error::Refused(format!("target robustness {r} exceeds k − 1 = {budget}")));
    }
    let d = target.len();
    let psi = pure_from_schmidt_in(target, d)?;
    let (sigma, residual) = sigma_star_in(target, d)?;
    let phi_k = max_entangled(k)?;
    let tb = TwoBranch::new(phi_k.density(), psi.density(), sigma.clone())?;
    let channel = Channel::from_two_branch(tb)?;

    let mut side = vec![SideCondition::at_most("target_robustness", r, budget, 1e-12)];
    side.extend(sigma_star_conditions(target, &sigma, residual));
    side.push(SideCondition::at_most("separable_input_weight_bound", 1.0 / k as f64, 1.0 / (1.0 + r), 1e-12));
    side.push(SideCondition::at_most(
        "max_sampled_separable_weight",
        max_sampled_overlap(&phi_k, cfg, "maxent-to-pure"),
        1.0 / k as f64,
        1e-12,
    ));
    let out = channel.apply(&phi_k.density())?;
    side.push(SideCondition::at_most("apply_error", out.max_abs_diff(&psi.density()), 0.0, APPLY_TOL));
    side.push(SideCondition::holds("cptp", channel.is_cptp()));
    Ok(ConstructionResult {
        channel,
        side_conditions: side,
        provenance: "maximally entangled state to any pure state of no larger robustness".into(),
    })
}

/// Conversion `ψ → φ` by `Λ(X) = Tr(ψX) φ + Tr((I − ψ)X) σ*`, valid when
/// `1 + R(φ) ≤ 1/λ₁`. The condition is only sufficient, so a refusal says
/// nothing about impossibility.
pub fn pure_to_pure(input: &SchmidtVector, target: &SchmidtVector, cfg: &SampleConfig) -> Result<ConstructionResult> {
    let l1 = input.largest();
    let r = robustness_pure(target);
    if 1.0 + r > 1.0 / l1 + 1e-12 {
        return Err(Error::Refused(format!("sufficient condition fails: 1 + R(φ) = {} > 1/λ₁ = {}", 1.0 + r, 1.0 / l1)));
    }
    let psi = pure_from_schmidt_in(input, input.len())?;
    let d = target.len();
    let phi = pure_from_schmidt_in(target, d)?;
    let (sigma, residual) = sigma_star_in(target, d)?;
    let tb = TwoBranch::new(psi.density(), phi.density(), sigma.clone())?;
    let channel = Channel::from_two_branch(tb)?;

    let mut side = vec![SideCondition::at_most("sufficient_condition", 1.0 + r, 1.0 / l1, 1e-12)];
    side.extend(sigma_star_conditions(target, &sigma, residual));
    side.push(SideCondition::at_most(
        "max_sampled_separable_overlap",
        max_sampled_overlap(&psi, cfg, "pure-to-pure"),
        l1,
        1e-12,
    ));
    let out = channel.apply(&psi.density())?;
    side.push(SideCondition::at_most("apply_error", out.max_abs_diff(&phi.density()), 0.0, APPLY_TOL));
    side.push(SideCondition::holds("cptp", channel.is_cptp()));
    Ok(ConstructionResult { channel, side_conditions: side, provenance: "pure-to-pure conversion from a robustness condition".into() })
}

/// The two constants and their slacks in the inequalities that make the
/// Schmidt-rank-raising channel dually non-entangling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRaisingConstants {
    pub delta: f64,
    pub epsilon: f64,
    /// `1/(1 + d²√((1−ε)ε)/√(d−1)) − (1 − δ)`.
    pub first_slack: f64,
    /// `1 + √(k−1)/√((1−δ)δ) − d²(1 − ε)`.
    pub second_slack: f64,
}

/// `δ = d⁻⁴`, `ε = d⁻¹²` and both slacks.
pub fn rank_raising_constants(k: usize, d: usize) -> RankRaisingConstants {
    let df = d as f64;
    let delta = df.powi(-4);
    let epsilon = df.powi(-12);
    let x = df * df / (df - 1.0).sqrt() * ((1.0 - epsilon) * epsilon).sqrt();
    // 1/(1+x) − (1−δ), rearranged to avoid cancellation.
    let first_slack = delta - x / (1.0 + x);
    let second_slack = 1.0 + ((k - 1) as f64).sqrt() / ((1.0 - delta) * delta).sqrt() - df * df * (1.0 - epsilon);
    RankRaisingConstants { delta, epsilon, first_slack, second_slack }
}

/// Slacks of `λ₁ ≤ 1/(d²√(μ₁μ₂))` and `d²μ₁ ≤ 1 + 1/√(λ₁λ₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DneSlacks {
    pub nonentangling: f64,
    pub dual: f64,
}

pub fn dne_slacks(lambda: &SchmidtVector, mu: &SchmidtVector, d: usize) -> DneSlacks {
    let d2 = (d * d) as f64;
    let nonentangling = 1.0 / (d2 * (mu.largest() * mu.second()).sqrt()) - lambda.largest();
    let dual = 1.0 + 1.0 / (lambda.largest() * lambda.second()).sqrt() - d2 * mu.largest();
    DneSlacks { nonentangling, dual }
}

fn spread(top: f64, rest: usize) -> Vec<f64> {
    let mut v = vec![1.0 - top; rest + 1];
    v[0] = top;
    for x in v.iter_mut().skip(1) {
        *x = (1.0 - top) / rest as f64;
    }
    v
}

/// Dually non-entangling `Λ(X) = Tr(ψX) φ + Tr((I − ψ)X) I/d²` sending a Schmidt
/// rank `k` state to a Schmidt rank `d` state.
pub fn schmidt_rank_increase(k: usize, d: usize, cfg: &SampleConfig) -> Result<ConstructionResult> {
    if k < 2 || d < 2 {
        return Err(invalid(format!("need k, d ≥ 2, got k = {k}, d = {d}")));
    }
    let c = rank_raising_constants(k, d);
    let lambda = SchmidtVector::new(spread(1.0 - c.delta, k - 1))?;
    let mu = SchmidtVector::new(spread(1.0 - c.epsilon, d - 1))?;
    let psi = pure_from_schmidt_in(&lambda, k)?;
    let phi = pure_from_schmidt_in(&mu, d)?;
    let noise = Operator::maximally_mixed(vec![d, d]);
    let tb = TwoBranch::new(psi.density(), phi.density(), noise)?;
    let channel = Channel::from_two_branch(tb.clone())?;
    let cut = Bipartition::first(1);

    let slacks = dne_slacks(&lambda, &mu, d);
    let mut side = vec![
        SideCondition::at_least("first_constant_slack", c.first_slack, 0.0, 0.0),
        SideCondition::at_least("second_constant_slack", c.second_slack, 0.0, 0.0),
        SideCondition::at_least("nonentangling_inequality_slack", slacks.nonentangling, 0.0, 0.0),
        SideCondition::at_least("dual_inequality_slack", slacks.dual, 0.0, 0.0),
    ];
    let out = channel.apply(&psi.density())?;
    side.push(SideCondition::at_most("apply_error", out.max_abs_diff(&phi.density()), 0.0, APPLY_TOL));
    side.push(SideCondition::equals("input_schmidt_rank", schmidt_rank(&psi, &cut)? as f64, k as f64, 0.0));
    side.push(SideCondition::equals("output_schmidt_rank", schmidt_rank(&phi, &cut)? as f64, d as f64, 0.0));

    let uncertified = |dims: [usize; 2], label: &str, map: &(dyn Fn(&Operator) -> Result<Operator> + Sync)| -> f64 {
        let flags = par::map_indices(cfg.exec, cfg.samples, |i| {
            let mut rng = stream_rng(cfg.seed, label, i as u64);
            let v = product_vector(&mut rng, &dims);
            let image = map(&Operator::projector(&v, dims.to_vec())).expect("dimensions match");
            !certify(&image, &cut).map(|v| v.is_separable()).unwrap_or(false)
        });
        flags.into_iter().filter(|&f| f).count() as f64
    };
    side.push(SideCondition::equals(
        "uncertified_sampled_outputs",
        uncertified([k, k], "dne-forward", &|x| tb.apply(x)),
        0.0,
        0.0,
    ));
    side.push(SideCondition::equals(
        "uncertified_sampled_dual_outputs",
        uncertified([d, d], "dne-dual", &|y| tb.dual_apply(y)),
        0.0,
        0.0,
    ));
    side.push(SideCondition::holds("cptp", channel.is_cptp()));
    Ok(ConstructionResult {
        channel,
        side_conditions: side,
        provenance: "dually non-entangling channel raising Schmidt rank from k to d".into(),
    })
}

fn superactivation_branch() -> Result<TwoBranch> {
    let phi = phi_plus().density();
    let mut diag = [0.0; 4];
    diag[1] = 0.5;
    diag[2] = 0.5;
    TwoBranch::new(phi.clone(), phi, Operator::diagonal(&diag, vec![2, 2])?)
}

/// `Λ⊗Λ` applied to the Smolin state, with factors ordered `A B A′ B′`.
#[derive(Clone, Debug)]
pub struct SuperactivationOutput {
    pub output: Operator,
    /// `⟨00, ψ⁻| (output)^Γ |00, ψ⁻⟩`, transposing `B` and `B′`.
    pub expectation: f64,
    /// Smallest eigenvalue of the output's partial transpose across `AA′ : BB′`.
    pub min_pt_eigenvalue: f64,
    /// Largest entry deviation from `¼ φ⁺⊗φ⁺ + (3/16) D⊗D`, `D = |01⟩⟨01| + |10⟩⟨10|`.
    pub closed_form_error: f64,
}

pub fn superactivation_two_copy(channel: &Channel) -> Result<SuperactivationOutput> {
    let two = channel.tensor(channel)?;
    // Smolin is stored A A′ B B′; the two copies act on (A B) and (A′ B′).
    let input = permute_factors(&smolin(), &[0, 2, 1, 3])?;
    let output = two.apply(&input)?;
    let pt = crate::linalg::partial_transpose_factors(&output, &[1, 3])?;
    let probe = PureState::basis(&[0, 0], vec![2, 2])?.tensor(&psi_minus());
    let expectation = pt.expectation(probe.amplitudes());
    let min_pt_eigenvalue = min_pt_eigenvalue(&output, &Bipartition::new(vec![0, 2]))?;

    let phi = phi_plus().density();
    let mut diag = [0.0; 4];
    diag[1] = 1.0;
    diag[2] = 1.0;
    let dd = Operator::diagonal(&diag, vec![2, 2])?;
    let expected = crate::linalg::kron(&phi, &phi) * 0.25 + crate::linalg::kron(&dd, &dd) * (3.0 / 16.0);
    Ok(SuperactivationOutput { closed_form_error: output.max_abs_diff(&expected), output, expectation, min_pt_eigenvalue })
}

/// The single-copy non-entangling two-qubit channel whose two-copy tensor power
/// entangles the Smolin state.
pub fn superactivation(cfg: &SampleConfig) -> Result<ConstructionResult> {
    let tb = superactivation_branch()?;
    let channel = Channel::from_two_branch(tb.clone())?;
    let bells: Vec<DVector<C64>> = bell_basis().iter().map(|b| b.amplitudes().clone()).collect();

    // Outputs are Bell diagonal; entangled only if one weight exceeds 1/2.
    let max_weight = par::max_over(cfg.exec, cfg.samples, |i| {
        let mut rng = stream_rng(cfg.seed, "superactivation-single", i as u64);
        let v = product_vector(&mut rng, &[2, 2]);
        let out = tb.apply(&Operator::projector(&v, vec![2, 2])).expect("two-qubit input");
        bells.iter().map(|b| out.expectation(b)).fold(f64::NEG_INFINITY, f64::max)
    });
    let two = superactivation_two_copy(&channel)?;
    let side = vec![
        SideCondition::at_most("separable_input_branch_weight_bound", 0.5, 0.5, 0.0),
        SideCondition::at_most("max_sampled_output_bell_weight", max_weight, 0.5, 1e-12),
        SideCondition::equals("two_copy_expectation", two.expectation, -1.0 / 16.0, 1e-12),
        SideCondition::at_most("two_copy_min_pt_eigenvalue", two.min_pt_eigenvalue, -1.0 / 16.0, 1e-10),
        SideCondition::at_most("two_copy_closed_form_error", two.closed_form_error, 0.0, 1e-12),
        SideCondition::holds("cptp", channel.is_cptp()),
    ];
    Ok(ConstructionResult {
        channel,
        side_conditions: side,
        provenance: "non-entangling channel whose two-copy tensor power is entangling".into(),
    })
}

/// Mixes `ρ` with white noise just past the PPT boundary.
fn ppt_boundary_mixture(rho: &Operator, cut: &Bipartition) -> Result<Operator> {
    let noise = Operator::maximally_mixed(rho.dims().to_vec());
    let mix = |t: f64| rho * (1.0 - t) + &noise * t;
    if min_pt_eigenvalue(rho, cut)? >= 0.0 {
        return Ok(rho.clone());
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if min_pt_eigenvalue(&mix(mid), cut)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(mix(hi))
}

/// PPT-preserving channel `Λ(X) = Tr(AX) I/d² + Tr((I−A)X) φ⁺_d` with
/// `A = (d I + F)/(d + 1)`, which raises the negativity of the most entangled
/// Werner state by the factor `(d − 1)/2`.
pub fn ppt_preserving_negativity_channel(d: usize, cfg: &SampleConfig) -> Result<ConstructionResult> {
    if d < 2 {
        return Err(invalid("need d ≥ 2"));
    }
    let df = d as f64;
    let f = flip(d)?;
    let a = (Operator::identity(vec![d, d]) * df + f.clone()) * (1.0 / (df + 1.0));
    let phi = max_entangled(d)?.density();
    let tb = TwoBranch::new(a.clone(), Operator::maximally_mixed(vec![d, d]), phi.clone())?;
    let channel = Channel::from_two_branch(tb.clone())?;
    let cut = Bipartition::first(1);
    let threshold = df / (df + 1.0);

    // Tr(Aρ) = (d + Tr(Fρ))/(d+1) and Tr(Fρ) = d⟨φ⁺|ρ^Γ|φ⁺⟩ ≥ 0 on PPT ρ.
    let ppt_samples = (cfg.samples / 20).max(8);
    let min_ppt = par::min_over(cfg.exec, ppt_samples, |i| {
        let mut rng = stream_rng(cfg.seed, "ppt-preserving-inputs", i as u64);
        let rho = crate::random::density(&mut rng, &[d, d], 1 + i % (d * d));
        let ppt = ppt_boundary_mixture(&rho, &cut).expect("square input");
        a.trace_product(&ppt)
    });
    let min_sep = par::min_over(cfg.exec, cfg.samples, |i| {
        let mut rng = stream_rng(cfg.seed, "ppt-preserving-separable", i as u64);
        let v = product_vector(&mut rng, &[d, d]);
        a.expectation(&v)
    });

    let rho = werner(d, df - 1.0)?;
    let out = channel.apply(&rho)?;
    let expected = Operator::maximally_mixed(vec![d, d]) * ((df - 1.0) / (df + 1.0)) + &phi * (2.0 / (df + 1.0));
    let n_in = negativity(&rho, &cut)?;
    let n_out = negativity(&out, &cut)?;
    let side = vec![
        SideCondition::at_least("min_effect_on_sampled_ppt_inputs", min_ppt, threshold, 1e-10),
        SideCondition::at_least("min_effect_on_sampled_separable_inputs", min_sep, threshold, 1e-12),
        SideCondition::at_most("werner_output_error", out.max_abs_diff(&expected), 0.0, 1e-10),
        SideCondition::equals("input_negativity", n_in, 1.0 / df, 1e-10),
        SideCondition::equals("output_negativity", n_out, (df - 1.0) / (2.0 * df), 1e-10),
        SideCondition::equals("negativity_ratio", n_out / n_in, (df - 1.0) / 2.0, 1e-9),
        SideCondition::below("choi_pt_min_eigenvalue", channel.choi_pt_min_eigenvalue()?, 0.0),
        SideCondition::holds("cptp", channel.is_cptp()),
    ];
    Ok(ConstructionResult {
        channel,
        side_conditions: side,
        provenance: "PPT-preserving channel that is not a PPT map and increases negativity".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::renyi_entropy;
    use approx::assert_relative_eq;

    fn cfg() -> SampleConfig {
        SampleConfig::new(500, 7)
    }

    fn assert_valid(r: &ConstructionResult) {
        assert!(r.all_pass(), "failed side conditions: {:?}", r.failures());
    }

    #[test]
    fn maxent_to_rank_three_target() {
        let lambda = SchmidtVector::new(vec![16.0 / 18.0, 1.0 / 18.0, 1.0 / 18.0]).unwrap();
        let r = maxent_to_pure(2, &lambda, &cfg()).unwrap();
        assert_valid(&r);
        let out = r.channel.apply(&max_entangled(2).unwrap().density()).unwrap();
        let top = out.spectrum().vectors.column(0).into_owned();
        let psi = PureState::normalized(top, vec![3, 3]).unwrap();
        assert_eq!(schmidt_rank(&psi, &Bipartition::first(1)).unwrap(), 3);
        assert_relative_eq!(renyi_entropy(&lambda, 0.5).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn maxent_refusals_and_downhill() {
        assert!(matches!(maxent_to_pure(2, &SchmidtVector::uniform(3).unwrap(), &cfg()), Err(Error::Refused(_))));
        assert_valid(&maxent_to_pure(3, &SchmidtVector::uniform(2).unwrap(), &cfg()).unwrap());
        assert_valid(&maxent_to_pure(2, &SchmidtVector::new(vec![1.0, 0.0]).unwrap(), &cfg()).unwrap());
    }

    #[test]
    fn maxent_refusal_boundary_matches_robustness() {
        // λ = (1 − t, t) has R = 2√(t(1−t)); R = 1 exactly at t = 1/2.
        for t in [0.3, 0.45, 0.4999] {
            let l = SchmidtVector::new(vec![1.0 - t, t]).unwrap();
            assert!(maxent_to_pure(2, &l, &cfg()).is_ok(), "t={t}");
        }
        let l = SchmidtVector::new(vec![0.4, 0.35, 0.25]).unwrap();
        let r = robustness_pure(&l);
        assert!(r > 1.0 && r < 2.0);
        assert!(maxent_to_pure(2, &l, &cfg()).is_err());
        assert!(maxent_to_pure(3, &l, &cfg()).is_ok());
    }

    #[test]
    fn pure_to_pure_cases() {
        let half = SchmidtVector::uniform(2).unwrap();
        let target = SchmidtVector::new(vec![0.8, 0.2]).unwrap();
        assert_valid(&pure_to_pure(&half, &target, &cfg()).unwrap());
        let skewed = SchmidtVector::new(vec![0.9, 0.1]).unwrap();
        assert!(matches!(pure_to_pure(&skewed, &half, &cfg()), Err(Error::Refused(_))));
        // Uniform input reduces to the maximally entangled case.
        let a = pure_to_pure(&SchmidtVector::uniform(3).unwrap(), &half, &cfg()).unwrap();
        let b = maxent_to_pure(3, &half, &cfg()).unwrap();
        assert!(a.channel.choi().max_abs_diff(b.channel.choi()) < 1e-12);
    }

    #[test]
    fn rank_raising_constants_have_nonnegative_slack() {
        for d in 2..=10 {
            for k in 2..=d {
                let c = rank_raising_constants(k, d);
                assert!(c.first_slack >= 0.0 && c.second_slack >= 0.0, "k={k} d={d}: {c:?}");
            }
        }
    }

    #[test]
    fn schmidt_rank_increase_cases() {
        for (k, d) in [(2, 3), (2, 4), (2, 2), (3, 5)] {
            let r = schmidt_rank_increase(k, d, &SampleConfig::new(200, 3)).unwrap();
            assert_valid(&r);
        }
    }

    #[test]
    fn superactivation_numbers() {
        let r = superactivation(&SampleConfig::new(2000, 1)).unwrap();
        assert_valid(&r);
        let two = superactivation_two_copy(&r.channel).unwrap();
        assert_relative_eq!(two.expectation, -0.0625, epsilon = 1e-12);
        let out = r.channel.apply(&phi_plus().density()).unwrap();
        assert!(out.max_abs_diff(&phi_plus().density()) < 1e-12);
    }

    #[test]
    fn negativity_channel_ratios() {
        for d in [4, 6] {
            let r = ppt_preserving_negativity_channel(d, &SampleConfig::new(200, 2)).unwrap();
            assert_valid(&r);
            assert_relative_eq!(r.condition("negativity_ratio").unwrap().value, (d as f64 - 1.0) / 2.0, epsilon = 1e-9);
            assert!(!r.channel.is_ppt_map());
        }
    }
}

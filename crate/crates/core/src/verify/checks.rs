use nalgebra::DMatrix;
use rand::Rng;

use super::{CheckInfo, Recorder, VerifyConfig};
use crate::calculus::{directional_derivative, power_mean_sides, technical_lemma_value, Bound, OptimalityProbe, ScalarFunction};
use crate::channels::{swap_channel, unitary_channel, Channel, TwoBranch};
use crate::constructions::{
    rank_raising_constants, k_ne_channel_with, k_ne_sampled_test, maxent_to_pure, ppt_preserving_negativity_channel,
    projected_choi, pure_to_pure, random_pt_witness, schmidt_rank_increase, stochastic_omega, superactivation,
    superactivation_two_copy, three_ne_attempt, undetected_conversion, werner_projection_gurvits,
    werner_projection_pt_min, witness_channel, KneStatus, ProjectionPair,
};
use crate::error::{invalid, Result};
use crate::linalg::{kron, Operator, C64};
use crate::measures::{
    negativity, optimal_sigma_alpha, relative_entropy_of_entanglement_pure, renyi_entropy, renyi_relative_entropy,
    renyi_relative_entropy_pure,
    robustness_pure,
};
use crate::par;
use crate::random::{density, full_rank_density, product_vector, stream_rng, unitary};
use crate::separability::{max_sep_overlap_pure, min_pt_eigenvalue, witness_from_npt, Bipartition, SeparabilityStatus};
use crate::states::{ghz, isotropic, phi_plus, pure_from_schmidt, schmidt_rank, w_state, werner, PureState, SchmidtVector};

macro_rules! check {
    ($id:literal, $tol:expr, $run:ident, $desc:literal, $anchor:literal) => {
        CheckInfo { id: $id, description: $desc, anchor: $anchor, tolerance: $tol, run: $run }
    };
}

pub(super) static REGISTRY: &[CheckInfo] = &[
    check!("appendixA.constants", 0.0, rank_raising, "δ = d⁻⁴, ε = d⁻¹² satisfy both Schmidt-rank-raising inequalities for d = 2..10",
        "the constants δ = d^-4 and ε = d^-12 satisfy both inequalities"),
    check!("calculus.frechet-derivative", 1e-6, frechet, "directional derivatives via divided differences match finite differences",
        "d/dt Tr(P f(A+tB)) at t=0 equals Tr(P Φ_{f,A}(B))"),
    check!("calculus.unequal-arguments-bound", 1e-12, unequal_arguments, "the p ≠ q divided-difference ratio never exceeds 1",
        "sqrt(pq)/(1-α) (p^((1-α)/α) - q^((1-α)/α))/(p^(1/α) - q^(1/α)) ≤ 1 for p ≠ q"),
    check!("calculus.power-mean-lemma", 1e-12, power_mean, "(1/r)(xʳ − yʳ)/(x − y) ≤ (√(xy))^{r−1} on 10⁴ samples",
        "(1/r)(x^r - y^r)/(x - y) ≤ (sqrt(xy))^(r-1) for r in (-1,0) ∪ (0,1)"),
    check!("calculus.technical-lemma", 1e-12, technical, "√(pq)/(1−α) f_α^{[1]}(p^{1/α}, q^{1/α}) lies in [0, 1]",
        "0 ≤ sqrt(pq)/(1-α) f_α^[1](p^(1/α), q^(1/α)) ≤ 1"),
    check!("channels.two-branch-dual", 1e-12, two_branch, "two-branch map: Choi formula, dual pairing and CPTP",
        "Λ(X) = Tr(AX)ρ1 + Tr((I-A)X)ρ2 with Choi ρ1⊗Aᵀ + ρ2⊗(I-A)ᵀ"),
    check!("distill.finite-witness", 1e-10, finite_witness, "an entangled two-qubit state undetected by finitely many witnesses is reached",
        "a map undetected by finitely many witnesses outputs a distillable state"),
    check!("distill.npt-conversion", 1e-6, npt_conversion, "witness channels turn 50 NPT Werner-family states into NPT two-qubit states",
        "every NPT state converts to a distillable two-qubit state under a dually non-entangling PPT map"),
    check!("dne.schmidt-rank-increase", 1e-10, dne_schmidt, "dually non-entangling map raising Schmidt rank k → d",
        "dually non-entangling maps can raise the Schmidt rank"),
    check!("isotropic.ppt-threshold", 1e-9, isotropic_threshold, "bisection on the PT spectrum locates a* = d/(d+1)",
        "the isotropic state is PPT iff a ≥ d/(d+1)"),
    check!("kne.hierarchy", 1e-12, kne_hierarchy, "Werner measurement channel is k- but not (k+1)-non-entangling",
        "a k-non-entangling map that is not (k+1)-non-entangling"),
    check!("kne.projection-lemma", 1e-12, kne_projection, "projected Choi operators equal the map on projected maximally entangled inputs",
        "k-non-entangling iff projected Choi operators are separable for all k-dim projections"),
    check!("kne.separable-maps-complete", 1e-12, separable_complete, "a local-unitary map passes the d-dimensional projection test",
        "separable maps are d-non-entangling and completely non-entangling"),
    check!("kne.three-ne-best-effort", 1e-12, three_ne, "rank-3 witness channel, projected onto η's Schmidt bases (best effort)",
        "the dually non-entangling PPT distillation maps are not 3-non-entangling"),
    check!("maxent.robustness-conversion", 1e-12, maxent, "φ⁺_k → ψ exactly when R(ψ) ≤ k − 1",
        "the maximally entangled state of rank k converts to ψ iff R(ψ) ≤ k-1"),
    check!("negativity.ppt-preserving-ratio", 1e-10, negativity_ratio, "PPT-preserving map raises negativity by (d−1)/2",
        "N(Λ(ρ))/N(ρ) = (d-1)/2"),
    check!("overlap.max-separable-lambda1", 1e-10, max_overlap, "max separable overlap of a pure state equals λ₁",
        "max over separable σ of Tr(ψσ) equals the largest Schmidt coefficient"),
    check!("pure.robustness-conversion", 1e-12, pure_conversion, "ψ → φ when 1 + R(φ) ≤ 1/λ₁",
        "ψ converts to φ whenever 1 + R(φ) ≤ 1/λ1"),
    check!("renyi.ER-alpha-equivalence", 1e-10, er_equivalence, "S_α(ψ‖σ*) = E_{1/α}(ψ) with first-order optimality",
        "E_{R,α}(ψ) = E_{1/α}(ψ) for α in [0,2]"),
    check!("renyi.corollary-state", 1e-12, corollary_state, "λ = (16,1,1)/18: E_{1/2} = 1, E_α > 1 below 1/2, reachable from φ⁺₂",
        "α-entropies of entanglement with α < 1/2 can increase"),
    check!("stochastic.ghz-to-w", 1e-10, stochastic, "GHZ → W by a map no listed witness detects",
        "any pure state converts stochastically to any other under witness-undetected maps"),
    check!("superactivation.minus-one-sixteenth", 1e-12, superactivation_check, "two copies of a non-entangling map entangle the Smolin state",
        "the expectation of the two-copy output's partial transpose equals -1/16"),
    check!("werner.projection-thresholds", 1e-6, werner_thresholds, "projected Werner blocks: Gurvits boundary (d−k)/k, NPT boundary (d−k−1)/(k+1)",
        "(P⊗Q)ρ_d(β)(P⊗Q)† is separable for all k-dim P, Q iff β ≤ (d-k)/k"),
    check!("witness.nonentangling-channel", 1e-10, witness_nonentangling, "the witness channel is dually non-entangling and PPT",
        "Λ with A = (W + 2I)/3 is dually non-entangling"),
];

pub(super) static COVERAGE: &[(&str, &[&str])] = &[
    ("two-branch channel form, Choi and dual formulas", &["channels.two-branch-dual"]),
    ("maximally entangled to pure conversion", &["maxent.robustness-conversion"]),
    ("α-entropy increase below α = 1/2", &["renyi.corollary-state"]),
    ("α-relative entropy of entanglement equals the 1/α entropy", &["renyi.ER-alpha-equivalence"]),
    ("maximal separable overlap equals λ₁", &["overlap.max-separable-lambda1"]),
    ("pure to pure conversion", &["pure.robustness-conversion"]),
    ("dual non-entanglement of the pure measure-and-prepare map", &["dne.schmidt-rank-increase"]),
    ("Schmidt rank increase under dually non-entangling maps", &["dne.schmidt-rank-increase", "appendixA.constants"]),
    ("negativity increase under PPT-preserving maps", &["negativity.ppt-preserving-ratio", "isotropic.ppt-threshold"]),
    ("superactivation of non-entangling maps", &["superactivation.minus-one-sixteenth"]),
    ("witness channel is dually non-entangling", &["witness.nonentangling-channel"]),
    ("distillation of NPT states by non-entangling maps", &["distill.npt-conversion"]),
    ("distillation with PPT dually non-entangling maps", &["distill.npt-conversion"]),
    ("distillation by maps undetected by finitely many witnesses", &["distill.finite-witness"]),
    ("stochastic conversion by witness-undetected maps", &["stochastic.ghz-to-w"]),
    ("separable maps are completely non-entangling", &["kne.separable-maps-complete"]),
    ("k-non-entangling via projected Choi operators", &["kne.projection-lemma"]),
    ("separability of projected Werner states", &["werner.projection-thresholds"]),
    ("k- but not (k+1)-non-entangling maps", &["kne.hierarchy"]),
    ("distillation maps are not 3-non-entangling", &["kne.three-ne-best-effort"]),
    ("divided differences and directional derivatives", &["calculus.frechet-derivative"]),
    ("divided-difference bound in [0, 1]", &["calculus.technical-lemma"]),
    ("power-mean divided-difference inequality", &["calculus.power-mean-lemma"]),
    ("p ≠ q divided-difference bound", &["calculus.unequal-arguments-bound"]),
    ("choice of constants for the Schmidt rank increase", &["appendixA.constants"]),
];

fn rank_raising(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let dims: Vec<usize> = cfg.dim.map(|d| vec![d]).unwrap_or_else(|| (2..=10).collect());
    rec.param("d", &dims);
    let mut worst = (f64::INFINITY, f64::INFINITY);
    for &d in &dims {
        if d < 2 {
            return Err(invalid("d must be at least 2"));
        }
        for k in 2..=d {
            let c = rank_raising_constants(k, d);
            worst = (worst.0.min(c.first_slack), worst.1.min(c.second_slack));
        }
        let c = rank_raising_constants(d, d);
        rec.equal(&format!("delta.d{d}"), c.delta, (d as f64).powi(-4), 0.0);
        rec.equal(&format!("epsilon.d{d}"), c.epsilon, (d as f64).powi(-12), 0.0);
    }
    rec.at_least("min_first_slack", worst.0, 0.0, 0.0);
    rec.at_least("min_second_slack", worst.1, 0.0, 0.0);
    Ok(())
}

/// `Tr(P f(A + tB))` through nalgebra's eigensolver, differentiated by the
/// second-order one-sided stencil `(−3g(0) + 4g(h) − g(2h))/2h`.
fn finite_difference(p: &Operator, f: ScalarFunction, a: &Operator, b: &Operator, h: f64) -> f64 {
    let g = |t: f64| {
        let m = a.mat() + b.mat() * C64::from(t);
        let e = m.symmetric_eigen();
        let fd = DMatrix::from_diagonal(&e.eigenvalues.map(|x| C64::from(f.value(x))));
        (p.mat() * (&e.eigenvectors * fd * e.eigenvectors.adjoint())).trace().re
    };
    (-3.0 * g(0.0) + 4.0 * g(h) - g(2.0 * h)) / (2.0 * h)
}

fn frechet(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let n = cfg.samples_or(100);
    let h = 1e-5;
    rec.param("instances", n);
    rec.param("h", h);
    rec.param("directions", "positive semidefinite");
    let cases = [("log", ScalarFunction::Log), ("power_0.5", ScalarFunction::Power(0.5)), ("power_-0.5", ScalarFunction::Power(-0.5))];
    for (name, f) in cases {
        let errors = par::map_indices(cfg.exec, n, |i| -> Result<f64> {
            let mut rng = stream_rng(cfg.seed, "frechet", i as u64);
            let dim = 2 + i % 5;
            let a = full_rank_density(&mut rng, &[dim]) * 0.5 + Operator::maximally_mixed(vec![dim]) * 0.5;
            let p = density(&mut rng, &[dim], 1 + i % dim);
            let b = density(&mut rng, &[dim], 1 + (i / 2) % dim);
            let exact = directional_derivative(&p, f, &a, &b)?.value;
            let fd = finite_difference(&p, f, &a, &b, h);
            Ok((exact - fd).abs() / fd.abs().max(1e-300))
        });
        let worst = errors.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
        rec.at_most(&format!("max_relative_error.{name}"), worst, 0.0, 1e-6);
    }
    Ok(())
}

/// Mixes uniform and log-uniform draws on `(0, 1]` so tiny arguments are exercised.
fn unit_draw(rng: &mut impl Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0 - rng.random::<f64>()
    } else {
        10f64.powf(-8.0 * rng.random::<f64>())
    }
}

fn sample_pq(rng: &mut impl Rng) -> (f64, f64) {
    (unit_draw(rng), unit_draw(rng))
}

/// `α ∈ [0.05, 2)` (or `2` exactly with probability 1/20), away from `α = 1`.
/// Below 0.05, `p^{1/α}` underflows for the smallest sampled `p`.
fn alpha_sample(rng: &mut impl Rng, include_two: bool) -> f64 {
    if include_two && rng.random_bool(0.05) {
        return 2.0;
    }
    loop {
        let a = 0.05 + 1.95 * rng.random::<f64>();
        if (a - 1.0).abs() > 1e-6 {
            return a;
        }
    }
}

fn technical(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let n = cfg.samples_or(10_000);
    rec.param("samples", n);
    rec.param("alpha_range", [0.05, 2.0]);
    let values = par::map_indices(cfg.exec, n, |i| {
        let mut rng = stream_rng(cfg.seed, "technical-lemma", i as u64);
        let (p, q) = sample_pq(&mut rng);
        let alpha = alpha_sample(&mut rng, true);
        technical_lemma_value(p, q, alpha)
    });
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    let tol = rec.tol(1e-12);
    rec.count("violations", values.iter().filter(|&&v| !(-tol..=1.0 + tol).contains(&v)).count(), 0);
    rec.at_least("min_value", values.iter().copied().fold(f64::INFINITY, f64::min), 0.0, 1e-12);
    rec.at_most("max_value", values.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0, 1e-12);
    Ok(())
}

fn power_mean(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let n = cfg.samples_or(10_000);
    rec.param("samples", n);
    let ratios = par::map_indices(cfg.exec, n, |i| -> Result<f64> {
        let mut rng = stream_rng(cfg.seed, "power-mean-lemma", i as u64);
        let x = 10f64.powf(6.0 * rng.random::<f64>() - 3.0);
        let y = 10f64.powf(6.0 * rng.random::<f64>() - 3.0);
        let r = loop {
            let r = 2.0 * rng.random::<f64>() - 1.0;
            if r.abs() > 1e-9 && r > -1.0 {
                break r;
            }
        };
        let (lhs, rhs) = power_mean_sides(x, y, r)?;
        Ok(lhs / rhs)
    });
    let ratios = ratios.into_iter().collect::<Result<Vec<_>>>()?;
    let tol = rec.tol(1e-12);
    rec.count("violations", ratios.iter().filter(|&&q| q > 1.0 + tol).count(), 0);
    rec.at_most("max_lhs_over_rhs", ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0, 1e-12);
    Ok(())
}

fn unequal_arguments(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let n = cfg.samples_or(10_000);
    rec.param("samples", n);
    rec.param("alpha_range", [0.05, 2.0]);
    let values = par::map_indices(cfg.exec, n, |i| {
        let mut rng = stream_rng(cfg.seed, "unequal-arguments", i as u64);
        let (p, q) = loop {
            let (p, q) = sample_pq(&mut rng);
            if (p - q).abs() > 1e-6 * p.max(q) {
                break (p, q);
            }
        };
        let alpha = alpha_sample(&mut rng, false);
        // direct evaluation, independent of the divided-difference routine
        let num = p.powf((1.0 - alpha) / alpha) - q.powf((1.0 - alpha) / alpha);
        let den = p.powf(1.0 / alpha) - q.powf(1.0 / alpha);
        (p * q).sqrt() / (1.0 - alpha) * num / den
    });
    let tol = rec.tol(1e-12);
    // Subtraction loses about |log| relative digits near p ≈ q, so allow 1e-9 there.
    rec.count("violations", values.iter().filter(|&&v| v > 1.0 + tol.max(1e-9)).count(), 0);
    rec.at_most("max_value", values.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0, 1e-9);
    Ok(())
}

fn two_branch(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let mut rng = stream_rng(cfg.seed, "two-branch", 0);
    let in_dims = [2, 3];
    let effect = density(&mut rng, &in_dims, 3) * 2.5;
    let effect = &effect * (1.0 / effect.max_eigenvalue().max(1.0));
    let rho1 = density(&mut rng, &[2, 2], 2);
    let rho2 = density(&mut rng, &[2, 2], 4);
    let tb = TwoBranch::new(effect.clone(), rho1.clone(), rho2.clone())?;
    let ch = Channel::from_two_branch(tb.clone())?;
    let complement = Operator::identity(in_dims.to_vec()) - effect.clone();
    let formula = kron(&rho1, &effect.transpose()) + kron(&rho2, &complement.transpose());
    rec.at_most("choi_formula_error", ch.choi().max_abs_diff(&formula.with_dims(vec![2, 2, 2, 3])?), 0.0, 1e-12);
    let (mut apply_err, mut dual_err) = (0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let x = density(&mut rng, &in_dims, 2);
        let y = density(&mut rng, &[2, 2], 3);
        let fx = tb.apply(&x)?;
        apply_err = apply_err.max(fx.max_abs_diff(&ch.apply(&x)?));
        dual_err = dual_err.max((y.trace_product(&fx) - tb.dual_apply(&y)?.trace_product(&x)).abs());
        dual_err = dual_err.max(tb.dual_apply(&y)?.max_abs_diff(&ch.dual_apply(&y)?));
    }
    rec.at_most("choi_vs_branch_apply", apply_err, 0.0, 1e-12);
    rec.at_most("dual_pairing_error", dual_err, 0.0, 1e-12);
    rec.holds("cptp", ch.is_cptp());
    Ok(())
}

fn choi_witnesses(seed: u64, label: &str, dims: &[usize], cuts: &[Bipartition], n: usize) -> Result<Vec<crate::separability::Witness>> {
    let mut rng = stream_rng(seed, label, 0);
    (0..n).map(|i| random_pt_witness(&mut rng, dims, &cuts[i % cuts.len()])).collect()
}

fn finite_witness(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let n = cfg.samples_or(10);
    rec.param("witnesses", n);
    let ws = choi_witnesses(cfg.seed, "finite-witness", &[2, 2, 2, 2], &[Bipartition::new(vec![0, 2])], n)?;
    let (r, found) = undetected_conversion(&ws, cfg.seed)?;
    rec.side_conditions("construction", &r);
    rec.above("found_negativity", found.negativity, 0.0);
    rec.at_least("found_min_constraint", found.min_constraint, 0.0, 1e-10);
    Ok(())
}

/// Werner-family NPT states on `2×2`, `2×3` and `3×3`; the `2×3` member is the
/// `3×3` Werner state with A restricted to two levels.
fn npt_family(seed: u64, i: usize) -> Result<Operator> {
    let mut rng = stream_rng(seed, "npt-family", i as u64);
    let u: f64 = rng.random();
    match i % 3 {
        0 => werner(2, 0.05 + 0.95 * u),
        1 => {
            let rho = werner(3, 0.55 + 1.45 * u)?;
            let p = DMatrix::from_fn(2, 3, |r, c| C64::from(if r == c { 1.0 } else { 0.0 }));
            let block = rho.conjugate_by(&p.kronecker(&DMatrix::identity(3, 3)), vec![2, 3])?;
            Ok(&block * (1.0 / block.trace_re()))
        }
        _ => werner(3, 0.05 + 1.95 * u),
    }
}

fn npt_conversion(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let n = cfg.samples_or(50);
    rec.param("states", n);
    let cut = Bipartition::first(1);
    let rows = par::map_indices(cfg.exec, n, |i| -> Result<[f64; 5]> {
        let rho = npt_family(cfg.seed, i)?;
        let w = witness_from_npt(&rho, &cut)?;
        let r = witness_channel(&w, &crate::constructions::SampleConfig::new(200, cfg.seed ^ i as u64))?;
        let out = r.channel.apply(&rho)?;
        Ok([
            min_pt_eigenvalue(&rho, &cut)?,
            out.expectation(phi_plus().amplitudes()),
            min_pt_eigenvalue(&out, &cut)?,
            f64::from(u8::from(r.channel.is_ppt_map())),
            f64::from(u8::from(r.all_pass())),
        ])
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let fold = |j: usize, init: f64, f: fn(f64, f64) -> f64| rows.iter().map(|r| r[j]).fold(init, f);
    rec.below("max_input_pt_min", fold(0, f64::NEG_INFINITY, f64::max), 0.0);
    rec.above("min_output_fidelity", fold(1, f64::INFINITY, f64::min), 0.5);
    rec.at_most("max_output_pt_min", fold(2, f64::NEG_INFINITY, f64::max), -1e-6, 0.0);
    rec.count("ppt_maps", rows.iter().filter(|r| r[3] == 1.0).count(), n);
    rec.count("side_conditions_pass", rows.iter().filter(|r| r[4] == 1.0).count(), n);
    Ok(())
}

fn dne_schmidt(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let cases: Vec<(usize, usize)> = match (cfg.k, cfg.dim) {
        (Some(k), Some(d)) => vec![(k, d)],
        (None, None) => vec![(2, 3), (2, 4), (3, 5)],
        _ => return Err(invalid("give both --k and --dim, or neither")),
    };
    rec.param("cases", &cases);
    let sc = cfg.sample_config(300);
    for (k, d) in cases {
        let r = schmidt_rank_increase(k, d, &sc)?;
        rec.side_conditions(&format!("k{k}_d{d}"), &r);
    }
    Ok(())
}

fn isotropic_threshold(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let dims: Vec<usize> = cfg.dim.map(|d| vec![d]).unwrap_or_else(|| (2..=6).collect());
    rec.param("d", &dims);
    let cut = Bipartition::first(1);
    for d in dims {
        let pt = |a: f64| min_pt_eigenvalue(&isotropic(d, a)?, &cut);
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if pt(mid)? >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let df = d as f64;
        rec.equal(&format!("threshold.d{d}"), 0.5 * (lo + hi), df / (df + 1.0), 1e-9);
    }
    Ok(())
}

fn kne_hierarchy(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let (d, k, beta) = (cfg.dim.unwrap_or(4), cfg.k.unwrap_or(2), cfg.beta.unwrap_or(1.0));
    rec.param("d", d);
    rec.param("k", k);
    rec.param("beta", beta);
    let r = k_ne_channel_with(d, k, beta, &cfg.sample_config(1000))?;
    rec.side_conditions("construction", &r);
    let n = cfg.samples_or(40);
    let at_k = k_ne_sampled_test(&r.channel, k, n, cfg.seed, &[], cfg.exec)?;
    let above = k_ne_sampled_test(&r.channel, k + 1, n, cfg.seed, &[], cfg.exec)?;
    rec.holds("passes_at_k", at_k.status == KneStatus::PassedSamples);
    rec.count("certified_separable_at_k", at_k.certified_separable, at_k.tested);
    rec.holds("violation_at_k_plus_1", above.status == KneStatus::NotKNonEntangling);
    Ok(())
}

fn kne_projection(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let d = cfg.dim.unwrap_or(3);
    rec.param("d", d);
    let mut rng = stream_rng(cfg.seed, "kne-projection-lemma", 0);
    let effect = density(&mut rng, &[d, d], 3);
    let effect = &effect * (1.0 / effect.max_eigenvalue());
    let ch = Channel::from_two_branch(TwoBranch::new(effect, density(&mut rng, &[2, 2], 2), density(&mut rng, &[2, 2], 3))?)?;
    let pair = ProjectionPair::random(cfg.seed, 0, 2, d);
    // Σ_{ij} Λ(|i⟩⟨j|) ⊗ R|i⟩⟨j|R† with R = P ⊗ Q
    let r = pair.p.kronecker(&pair.q);
    let n = d * d;
    let mut oracle = Operator::zeros(vec![2, 2, 2, 2]);
    for i in 0..n {
        for j in 0..n {
            let mut e = DMatrix::<C64>::zeros(n, n);
            e[(i, j)] = C64::from(1.0);
            let out = ch.apply(&Operator::from_matrix(e, vec![d, d])?)?;
            oracle = oracle + kron(&out, &Operator::from_matrix(r.column(i) * r.column(j).adjoint(), vec![2, 2])?);
        }
    }
    rec.at_most("projected_choi_identity_error", projected_choi(&ch, &pair)?.max_abs_diff(&oracle), 0.0, 1e-12);

    let swap = swap_channel(d)?;
    let n = cfg.samples_or(10);
    rec.holds("swap_passes_k1", k_ne_sampled_test(&swap, 1, n, cfg.seed, &[], cfg.exec)?.status == KneStatus::PassedSamples);
    rec.holds("swap_violates_k2", k_ne_sampled_test(&swap, 2, n, cfg.seed, &[], cfg.exec)?.status == KneStatus::NotKNonEntangling);
    Ok(())
}

fn separable_complete(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let d = cfg.dim.unwrap_or(2);
    rec.param("d", d);
    let mut rng = stream_rng(cfg.seed, "separable-map", 0);
    let local = unitary(&mut rng, d).kronecker(&unitary(&mut rng, d));
    let ch = unitary_channel(&local, vec![d, d])?;
    let outcome = k_ne_sampled_test(&ch, d, cfg.samples_or(20), cfg.seed, &[], cfg.exec)?;
    rec.holds("passes_at_d", outcome.status == KneStatus::PassedSamples);
    rec.holds("ppt_map", ch.is_ppt_map());
    let two = ch.tensor(&ch)?;
    rec.at_least("tensor_square_choi_pt_min", two.choi_pt_min_eigenvalue()?, 0.0, 1e-12);
    Ok(())
}

fn three_ne(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let (d, beta) = (cfg.dim.unwrap_or(4), cfg.beta.unwrap_or(0.5));
    rec.param("d", d);
    rec.param("beta", beta);
    let a = three_ne_attempt(d, beta, &cfg.sample_config(300))?;
    rec.param("projected_verdict", &a.projected_verdict);
    rec.below("witness_value", a.witness_value, 0.0);
    rec.holds("output_entangled", a.output_verdict.is_entangled());
    rec.at_least("projected_pt_min", a.projected_pt_min, 0.0, 1e-12);
    // best effort: an Undecided verdict is recorded, a separable claim would be wrong
    rec.holds("not_claimed_separable", a.projected_verdict.status != SeparabilityStatus::SeparableCertified);
    Ok(())
}

fn maxent(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let (k, d) = (cfg.k.unwrap_or(2), cfg.dim.unwrap_or(3));
    rec.param("k", k);
    rec.param("d", d);
    // λ_t = (1 − t) e₁ + t·uniform; robustness grows with t
    let family = |t: f64| {
        let mut v = vec![t / d as f64; d];
        v[0] += 1.0 - t;
        SchmidtVector::new(v)
    };
    let budget = (k - 1) as f64;
    let (mut lo, mut hi) = (0.0, 1.0);
    if robustness_pure(&family(1.0)?) <= budget {
        return Err(invalid(format!("every target in dimension {d} has robustness ≤ {budget}; pick a larger d")));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if robustness_pure(&family(mid)?) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sc = cfg.sample_config(500);
    let inside = maxent_to_pure(k, &family(lo * (1.0 - 1e-9))?, &sc)?;
    rec.side_conditions("inside", &inside);
    let outside = maxent_to_pure(k, &family(hi + 1e-9)?, &sc);
    rec.holds("refused_outside", matches!(outside, Err(crate::Error::Refused(_))));
    rec.equal("boundary_robustness", robustness_pure(&family(lo)?), budget, 1e-12);
    Ok(())
}

fn negativity_ratio(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let dims: Vec<usize> = cfg.dim.map(|d| vec![d]).unwrap_or_else(|| vec![4, 5, 6]);
    rec.param("d", &dims);
    let sc = cfg.sample_config(400);
    for d in dims {
        let r = ppt_preserving_negativity_channel(d, &sc)?;
        let df = d as f64;
        let cut = Bipartition::first(1);
        let rho = werner(d, df - 1.0)?;
        let n_in = negativity(&rho, &cut)?;
        let n_out = negativity(&r.channel.apply(&rho)?, &cut)?;
        rec.equal(&format!("d{d}.input_negativity"), n_in, 1.0 / df, 1e-10);
        rec.equal(&format!("d{d}.output_negativity"), n_out, (df - 1.0) / (2.0 * df), 1e-10);
        rec.equal(&format!("d{d}.ratio"), n_out / n_in, (df - 1.0) / 2.0, 1e-9);
        rec.side_conditions(&format!("d{d}"), &r);
    }
    Ok(())
}

fn max_overlap(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let n = cfg.samples_or(20);
    rec.param("states", n);
    let cut = Bipartition::first(1);
    let (mut err, mut sampled_excess) = (0.0_f64, f64::NEG_INFINITY);
    for i in 0..n {
        let mut rng = stream_rng(cfg.seed, "max-overlap", i as u64);
        let lambda = SchmidtVector::random(&mut rng, 2 + i % 4);
        let psi = pure_from_schmidt(&lambda);
        err = err.max((max_sep_overlap_pure(&psi, &cut)? - lambda.largest()).abs());
        for _ in 0..200 {
            let v = product_vector(&mut rng, psi.dims());
            sampled_excess = sampled_excess.max(psi.amplitudes().dotc(&v).norm_sqr() - lambda.largest());
        }
    }
    rec.at_most("max_overlap_error", err, 0.0, 1e-10);
    rec.at_most("sampled_product_overlap_minus_lambda1", sampled_excess, 0.0, 1e-12);
    Ok(())
}

fn pure_conversion(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let sc = cfg.sample_config(500);
    let input = SchmidtVector::new(vec![0.4, 0.3, 0.3])?;
    // 1 + R(φ) = (Σ√μ)² must stay ≤ 1/λ₁ = 2.5
    let target = SchmidtVector::new(vec![0.75, 0.25])?;
    rec.param("input", input.as_slice());
    rec.param("target", target.as_slice());
    let r = pure_to_pure(&input, &target, &sc)?;
    rec.side_conditions("conversion", &r);
    let strong = SchmidtVector::new(vec![0.9, 0.1])?;
    let refused = pure_to_pure(&strong, &SchmidtVector::uniform(2)?, &sc);
    rec.holds("refused_when_condition_fails", matches!(refused, Err(crate::Error::Refused(_))));
    Ok(())
}

fn er_equivalence(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let alphas: Vec<f64> = cfg.alpha.map(|a| vec![a]).unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]);
    let n_states = 100;
    let n_dirs = cfg.samples_or(1000);
    rec.param("alphas", &alphas);
    rec.param("states", n_states);
    rec.param("directions_per_alpha", n_dirs);
    let lambdas: Vec<SchmidtVector> = (0..n_states)
        .map(|i| SchmidtVector::random(&mut stream_rng(cfg.seed, "er-schmidt", i as u64), 2 + i % 5))
        .collect();
    for &alpha in &alphas {
        let errs = par::map_slice(cfg.exec, &lambdas, |lambda| -> Result<f64> {
            let psi = pure_from_schmidt(lambda);
            let sigma = optimal_sigma_alpha(lambda, alpha)?;
            let s = if alpha == 1.0 {
                renyi_relative_entropy(&psi.density(), &sigma, alpha)?
            } else {
                renyi_relative_entropy_pure(psi.amplitudes(), &sigma, alpha)?
            }
            .to_f64();
            let closed = relative_entropy_of_entanglement_pure(lambda, alpha)?;
            let entropy = renyi_entropy(lambda, 1.0 / alpha)?;
            Ok((s - entropy).abs().max((closed - entropy).abs()))
        });
        let worst = errs.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
        rec.at_most(&format!("alpha{alpha}.max_error"), worst, 0.0, 1e-10);

        let probes = lambdas
            .iter()
            .take(10)
            .map(|l| OptimalityProbe::new(&pure_from_schmidt(l), &optimal_sigma_alpha(l, alpha)?, alpha))
            .collect::<Result<Vec<_>>>()?;
        let derivs = par::map_indices(cfg.exec, n_dirs, |i| {
            let probe = &probes[i % probes.len()];
            let dims = [lambdas[i % probes.len()].len(); 2];
            let mut rng = stream_rng(cfg.seed, "er-directions", i as u64);
            probe.derivative_towards_pure(&product_vector(&mut rng, &dims))
        });
        let min = derivs.iter().map(|d| d.value).fold(f64::INFINITY, f64::min);
        rec.at_least(&format!("alpha{alpha}.min_optimality_derivative"), min, 0.0, 1e-9);
        if alpha == 2.0 {
            rec.holds("alpha2.lower_bound_semantics", derivs.iter().all(|d| d.bound == Bound::LowerBound));
        }
    }
    Ok(())
}

fn corollary_state(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let lambda = SchmidtVector::new(vec![16.0 / 18.0, 1.0 / 18.0, 1.0 / 18.0])?;
    rec.param("lambda", lambda.as_slice());
    rec.equal("entropy_half", renyi_entropy(&lambda, 0.5)?, 1.0, 1e-12);
    for a in [0.1, 0.3, 0.45] {
        rec.at_least(&format!("entropy_{a}_minus_one"), renyi_entropy(&lambda, a)? - 1.0, 1e-6, 0.0);
    }
    let r = maxent_to_pure(2, &lambda, &cfg.sample_config(1000))?;
    rec.side_conditions("conversion", &r);
    let cut = Bipartition::first(1);
    let input = phi_plus();
    let out = r.channel.apply(&input.density())?;
    let spec = out.spectrum();
    let top = PureState::normalized(spec.vectors.column(0).into_owned(), out.dims().to_vec())?;
    rec.equal("output_purity", spec.values[0], 1.0, 1e-12);
    rec.count("input_schmidt_rank", schmidt_rank(&input, &cut)?, 2);
    rec.count("output_schmidt_rank", schmidt_rank(&top, &cut)?, 3);
    Ok(())
}

fn stochastic(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let n = cfg.samples_or(5);
    rec.param("witnesses", n);
    let cuts: Vec<Bipartition> = (0..3).map(|j| Bipartition::new(vec![j, 3 + j])).collect();
    let ws = choi_witnesses(cfg.seed, "stochastic-witnesses", &[2; 6], &cuts, n)?;
    let ops: Vec<Operator> = ws.into_iter().map(|w| w.operator).collect();
    let r = stochastic_omega(&ops, &ghz(3, 2)?, &w_state(), &crate::constructions::SampleConfig::new(20_000, cfg.seed))?;
    rec.side_conditions("omega", &r.result);
    rec.holds("computational_orthogonal_vector", r.computational);
    Ok(())
}

fn superactivation_check(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let r = superactivation(&cfg.sample_config(2000))?;
    let two = superactivation_two_copy(&r.channel)?;
    rec.equal("expectation", two.expectation, -1.0 / 16.0, 1e-12);
    rec.at_most("min_pt_eigenvalue", two.min_pt_eigenvalue, -1.0 / 16.0, 1e-10);
    rec.side_conditions("construction", &r);
    Ok(())
}

fn werner_thresholds(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let cases: Vec<(usize, usize)> = match (cfg.dim, cfg.k) {
        (Some(d), Some(k)) => vec![(d, k)],
        (None, None) => vec![(4, 2), (5, 2), (5, 3), (6, 3)],
        _ => return Err(invalid("give both --dim and --k, or neither")),
    };
    rec.param("cases", &cases);
    rec.param("grid_points", 10);
    for (d, k) in cases {
        if !(2..d).contains(&k) {
            return Err(invalid(format!("need 2 ≤ k < d, got d={d}, k={k}")));
        }
        let lead = ProjectionPair::leading(k, d);
        let sep_boundary = (d - k) as f64 / k as f64;
        let npt_boundary = (d - k - 1) as f64 / (k + 1) as f64;
        let top = (d - 1) as f64;
        let mut mismatches = 0;
        for i in 0..10 {
            let beta = top * i as f64 / 9.0;
            // random pairs never exceed the P = Q strength, so the leading pair decides
            let certified = werner_projection_gurvits(d, beta, &lead)?.certified();
            let scale = 1.0 / ((d * d) as f64 - beta - 1.0);
            let npt = werner_projection_pt_min(d, k + 1, beta)? < -1e-12 * scale;
            let near = |b: f64| (beta - b).abs() <= 1e-9;
            if (certified != (beta <= sep_boundary) && !near(sep_boundary)) || (npt != (beta > npt_boundary) && !near(npt_boundary)) {
                mismatches += 1;
            }
        }
        rec.count(&format!("d{d}_k{k}.grid_mismatches"), mismatches, 0);
        let bisect = |f: &dyn Fn(f64) -> Result<bool>| -> Result<f64> {
            let (mut lo, mut hi) = (0.0, top);
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if f(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        };
        let sep = bisect(&|b| Ok(werner_projection_gurvits(d, b, &lead)?.certified()))?;
        let npt = bisect(&|b| Ok(werner_projection_pt_min(d, k + 1, b)? >= 0.0))?;
        rec.equal(&format!("d{d}_k{k}.gurvits_boundary"), sep, sep_boundary, 1e-6);
        rec.equal(&format!("d{d}_k{k}.npt_boundary"), npt, npt_boundary, 1e-6);
    }
    Ok(())
}

fn witness_nonentangling(cfg: &VerifyConfig, rec: &mut Recorder) -> Result<()> {
    let d = cfg.dim.unwrap_or(3);
    rec.param("d", d);
    let mut rng = stream_rng(cfg.seed, "witness-channel", 0);
    let w = random_pt_witness(&mut rng, &[d, d], &Bipartition::first(1))?;
    let r = witness_channel(&w, &cfg.sample_config(1000))?;
    rec.side_conditions("construction", &r);
    rec.holds("ppt_map", r.channel.is_ppt_map());
    Ok(())
}

//! Entanglement measures. Logarithms are base 2 throughout.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{Operator, Spectrum, C64};
use crate::separability::{partial_transpose_cut, Bipartition};
use crate::states::SchmidtVector;
use crate::tolerance::Tolerances;

/// Real number or `+∞`, kept as an explicit tag rather than a float overflow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == ExtReal::Infinite
    }

    /// The value as an `f64`, mapping the tag to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Infinite => write!(f, "+inf"),
        }
    }
}

/// Order parameter `α ∈ [0, +∞]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Alpha(f64);

impl Alpha {
    pub const INFINITY: Alpha = Alpha(f64::INFINITY);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(invalid(format!("α must lie in [0, +∞], got {alpha}")));
        }
        Ok(Alpha(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/α` with `1/0 = ∞` and `1/∞ = 0`.
    pub fn reciprocal(self) -> Alpha {
        if self.0 == 0.0 {
            Alpha::INFINITY
        } else if self.0.is_infinite() {
            Alpha(0.0)
        } else {
            Alpha(1.0 / self.0)
        }
    }
}

/// Rényi entropy `H_α(λ)` in bits.
pub fn renyi_entropy(lambda: &SchmidtVector, alpha: f64) -> Result<f64> {
    let a = Alpha::new(alpha)?.value();
    let support = lambda.support();
    Ok(if a == 0.0 {
        (support.len() as f64).log2()
    } else if a == 1.0 {
        -support.iter().map(|&l| l * l.log2()).sum::<f64>()
    } else if a.is_infinite() {
        -lambda.largest().log2()
    } else {
        support.iter().map(|&l| l.powf(a)).sum::<f64>().log2() / (1.0 - a)
    })
}

/// Pure-state robustness `(Σ √λ_i)² − 1`.
pub fn robustness_pure(lambda: &SchmidtVector) -> f64 {
    lambda.as_slice().iter().map(|l| l.sqrt()).sum::<f64>().powi(2) - 1.0
}

/// `(‖ρ^Γ‖₁ − Tr ρ)/2`, clamped at zero.
pub fn negativity(rho: &Operator, cut: &Bipartition) -> Result<f64> {
    let pt = partial_transpose_cut(rho, cut)?;
    Ok(((pt.trace_norm() - rho.trace_re()) / 2.0).max(0.0))
}

/// `log₂ ‖ρ^Γ‖₁`.
pub fn log_negativity(rho: &Operator, cut: &Bipartition) -> Result<f64> {
    Ok(partial_transpose_cut(rho, cut)?.trace_norm().log2())
}

/// `f(A)` evaluated on eigenvalues above `threshold`, zero elsewhere.
pub(crate) fn function_on_support(spec: &Spectrum, threshold: f64, f: impl Fn(f64) -> f64) -> nalgebra::DMatrix<C64> {
    spec.map(|x| if x > threshold { f(x) } else { 0.0 })
}

/// Whether the support of `rho` lies inside the support of `sigma`.
pub fn support_contained(rho: &Spectrum, sigma: &Spectrum, threshold: f64) -> bool {
    let p_sigma = sigma.support_projector(threshold);
    let n = rho.len();
    (0..n).filter(|&k| rho.values[k] > threshold).all(|k| {
        let v = rho.vectors.column(k);
        let leak = (v - &p_sigma * v).norm();
        leak <= 1e-6
    })
}

/// Petz–Rényi relative entropy `S_α(ρ‖σ)` in bits, with the support convention:
/// finite whenever `α < 1` or `supp ρ ⊆ supp σ`, otherwise `+∞`.
pub fn renyi_relative_entropy(rho: &Operator, sigma: &Operator, alpha: f64) -> Result<ExtReal> {
    let a = Alpha::new(alpha)?.value();
    if a.is_infinite() {
        return Err(invalid("S_α is defined for finite α"));
    }
    let thr = Tolerances::DEFAULT.support;
    let rs = rho.spectrum();
    let ss = sigma.spectrum();
    let contained = support_contained(&rs, &ss, thr);
    if a >= 1.0 && !contained {
        return Ok(ExtReal::Infinite);
    }
    if a == 1.0 {
        let rho_log = function_on_support(&rs, thr, |x| x * x.ln());
        let log_sigma = function_on_support(&ss, thr, f64::ln);
        let cross = (rho.mat() * log_sigma).trace().re;
        let value = (rho_log.trace().re - cross) / std::f64::consts::LN_2;
        return Ok(ExtReal::Finite(value));
    }
    let rho_a = function_on_support(&rs, thr, |x| x.powf(a));
    let sigma_b = function_on_support(&ss, thr, |x| x.powf(1.0 - a));
    let q = (rho_a * sigma_b).trace().re;
    if q <= 0.0 {
        // Only reachable for α < 1 with orthogonal supports: log 0 / (α − 1) = +∞.
        return Ok(ExtReal::Infinite);
    }
    Ok(ExtReal::Finite(q.log2() / (a - 1.0)))
}

/// Pure-state shortcut `log₂ ⟨ψ|σ^{1−α}|ψ⟩ / (α − 1)` for `α ≠ 1`.
pub fn renyi_relative_entropy_pure(psi: &nalgebra::DVector<C64>, sigma: &Operator, alpha: f64) -> Result<ExtReal> {
    let a = Alpha::new(alpha)?.value();
    if a == 1.0 || a.is_infinite() {
        return Err(invalid("pure-state shortcut needs finite α ≠ 1"));
    }
    let thr = Tolerances::DEFAULT.support;
    let ss = sigma.spectrum();
    if a > 1.0 {
        let p = ss.support_projector(thr);
        let leak = (psi - &p * psi).norm();
        if leak > 1e-6 {
            return Ok(ExtReal::Infinite);
        }
    }
    let m = function_on_support(&ss, thr, |x| x.powf(1.0 - a));
    let q = psi.dotc(&(m * psi)).re;
    if q <= 0.0 {
        return Ok(ExtReal::Infinite);
    }
    Ok(ExtReal::Finite(q.log2() / (a - 1.0)))
}

/// `E_{R,α}(ψ) = E_{1/α}(ψ)` for `α ∈ [0, 2]`; at `α = 0` this is `−log₂ λ₁`.
pub fn relative_entropy_of_entanglement_pure(lambda: &SchmidtVector, alpha: f64) -> Result<f64> {
    let a = Alpha::new(alpha)?;
    if a.value() > 2.0 {
        return Err(invalid(format!("closed form holds for α ∈ [0, 2], got {alpha}")));
    }
    renyi_entropy(lambda, a.reciprocal().value())
}

/// `σ_α = Σ λ_i^{1/α} |ii⟩⟨ii| / Σ_j λ_j^{1/α}` on `n × n`, `n = rank(λ)`.
pub fn optimal_sigma_alpha(lambda: &SchmidtVector, alpha: f64) -> Result<Operator> {
    let a = Alpha::new(alpha)?.value();
    if a == 0.0 || a > 2.0 {
        return Err(invalid(format!("optimal σ is built for α ∈ (0, 2], got {alpha}")));
    }
    let support = lambda.support();
    let n = support.len();
    let weights: Vec<f64> = support.iter().map(|l| l.powf(1.0 / a)).collect();
    let z: f64 = weights.iter().sum();
    let mut diag = vec![0.0; n * n];
    for (i, w) in weights.iter().enumerate() {
        diag[i * n + i] = w / z;
    }
    Operator::diagonal(&diag, vec![n, n])
}

use serde::{Deserialize, Serialize};

use super::operator::Operator;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub trace_norm: f64,
    pub frobenius_norm: f64,
    pub min_eigenvalue: f64,
    pub operator_norm: f64,
}

/// Spectral norms of a Hermitian operator from one eigendecomposition.
pub fn norms(a: &Operator) -> Norms {
    let values = a.eigenvalues();
    Norms {
        trace_norm: values.iter().map(|x| x.abs()).sum(),
        frobenius_norm: a.frobenius_norm(),
        min_eigenvalue: values.last().copied().unwrap_or(0.0),
        operator_norm: values.iter().map(|x| x.abs()).fold(0.0, f64::max),
    }
}

impl Operator {
    /// Sum of absolute eigenvalues (Hermitian input).
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|x| x.abs()).sum()
    }

    /// Largest singular value; valid for non-Hermitian operators too.
    pub fn operator_norm(&self) -> f64 {
        self.mat().singular_values().max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::partial_transpose;
    use crate::random::{density, hermitian, stream_rng};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn density_has_unit_trace_norm() {
        let mut rng = stream_rng(0, "norms", 0);
        let rho = density(&mut rng, &[3, 2], 3);
        assert_relative_eq!(norms(&rho).trace_norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_state_has_unit_frobenius_norm() {
        let mut rng = stream_rng(0, "norms", 1);
        let v = crate::random::haar_vector(&mut rng, 6);
        assert_relative_eq!(Operator::projector(&v, vec![2, 3]).frobenius_norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_transpose_of_max_entangled_has_trace_norm_d() {
        for d in 2..=5 {
            let mut v = DVector::zeros(d * d);
            for i in 0..d {
                v[i * d + i] = 1.0.into();
            }
            let phi = Operator::projector(&v, vec![d, d]) * (1.0 / d as f64);
            let pt = partial_transpose(&phi, 1).unwrap();
            let n = norms(&pt);
            assert_relative_eq!(n.trace_norm, d as f64, epsilon = 1e-12);
            assert_relative_eq!((n.trace_norm - 1.0) / 2.0, (d as f64 - 1.0) / 2.0, epsilon = 1e-12);
            assert_relative_eq!(n.min_eigenvalue, -1.0 / d as f64, epsilon = 1e-13);
        }
    }

    #[test]
    fn operator_norm_agrees_with_spectrum_for_hermitian() {
        let mut rng = stream_rng(0, "norms", 2);
        let h = hermitian(&mut rng, &[5]);
        assert_relative_eq!(h.operator_norm(), norms(&h).operator_norm, epsilon = 1e-12);
    }
}

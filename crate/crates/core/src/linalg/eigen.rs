//! Cyclic complex Jacobi eigensolver for Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary, then applies the real Jacobi rotation that zeroes it. Sweeps repeat
//! until no off-diagonal element exceeds the skip threshold.

use nalgebra::DMatrix;

use super::operator::{Operator, C64};
use crate::error::Result;
use crate::tolerance::Tolerances;

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `A = U diag(values) U†` with `values` sorted descending and
/// the eigenvectors in the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `U f(D) U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
        let n = self.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = C64::from(f(self.values[j]));
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fj);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        self.map(|x| x)
    }

    /// Projector onto the span of eigenvectors whose eigenvalue exceeds `threshold`.
    pub fn support_projector(&self, threshold: f64) -> DMatrix<C64> {
        self.map(|x| if x > threshold { 1.0 } else { 0.0 })
    }
}

/// Hermitian eigendecomposition with an input check at the default tolerance.
pub fn eig_hermitian(a: &Operator) -> Result<Spectrum> {
    a.ensure_hermitian(Tolerances::DEFAULT.hermiticity)?;
    Ok(jacobi_eigh(a.mat()))
}

fn off_diagonal_norm(a: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Diagonalises the Hermitian matrix `a`. Only the Hermitian part of `a` is used.
pub fn jacobi_eigh(a: &DMatrix<C64>) -> Spectrum {
    assert_eq!(a.nrows(), a.ncols(), "jacobi_eigh needs a square matrix");
    let n = a.nrows();
    let mut a = (a + a.adjoint()) * C64::from(0.5);
    let mut v = DMatrix::<C64>::identity(n, n);
    let scale = a.norm();
    let abs_floor = 1e-22 * scale;

    if scale > 0.0 && off_diagonal_norm(&a) > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n.saturating_sub(1) {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let b = apq.norm();
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    if b <= abs_floor || b <= f64::EPSILON * 0.5 * (app * aqq).abs().sqrt() {
                        continue;
                    }
                    rotated = true;
                    rotate(&mut a, &mut v, p, q, apq, b, app, aqq);
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Spectrum { values, vectors }
}

#[allow(clippy::too_many_arguments)]
fn rotate(
    a: &mut DMatrix<C64>,
    v: &mut DMatrix<C64>,
    p: usize,
    q: usize,
    apq: C64,
    b: f64,
    app: f64,
    aqq: f64,
) {
    let n = a.nrows();
    let phase = apq / b;
    let phase_conj = phase.conj();
    let theta = (aqq - app) / (2.0 * b);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // A <- A J, with J_pp = c, J_pq = s, J_qp = -s e^{-iφ}, J_qq = c e^{-iφ}.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * phase_conj * s;
        a[(k, q)] = akp * s + akq * phase_conj * c;
    }
    // A <- J† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, q)] = C64::from(0.0);
    a[(q, p)] = C64::from(0.0);
    a[(p, p)] = C64::from(app - t * b);
    a[(q, q)] = C64::from(aqq + t * b);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * phase_conj * s;
        v[(k, q)] = vkp * s + vkq * phase_conj * c;
    }
}

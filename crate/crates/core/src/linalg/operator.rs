use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::eigen::{jacobi_eigh, Spectrum};
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Square complex matrix whose side length factors as a tensor product of the
/// listed dimensions (first factor most significant in the row-major index).
///
/// Almost every operator in the crate is Hermitian, but the type does not
/// enforce it: Kronecker factors and intermediate products need not be.
/// Use [`Operator::ensure_hermitian`] where Hermiticity is a precondition.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
    dims: Vec<usize>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare { rows: mat.nrows(), cols: mat.ncols() });
        }
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Dimension(format!("invalid factor dims {dims:?}")));
        }
        let side: usize = dims.iter().product();
        if side != mat.nrows() {
            return Err(Error::Dimension(format!(
                "factor dims {dims:?} multiply to {side}, matrix side is {}",
                mat.nrows()
            )));
        }
        Ok(Operator { mat, dims })
    }

    /// Operator with a single factor spanning the whole matrix.
    pub fn from_square(mat: DMatrix<C64>) -> Result<Self> {
        let n = mat.nrows();
        Self::from_matrix(mat, vec![n])
    }

    pub fn from_real_rows(rows: &[&[f64]], dims: Vec<usize>) -> Result<Self> {
        let n = rows.len();
        let mat = DMatrix::from_fn(n, n, |i, j| C64::from(rows[i][j]));
        Self::from_matrix(mat, dims)
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Operator { mat: DMatrix::identity(n, n), dims }
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Operator { mat: DMatrix::zeros(n, n), dims }
    }

    /// Maximally mixed state `I / n`.
    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self::identity(dims) * (1.0 / n as f64)
    }

    pub fn diagonal(values: &[f64], dims: Vec<usize>) -> Result<Self> {
        let v = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::from(x)));
        Self::from_matrix(DMatrix::from_diagonal(&v), dims)
    }

    /// `|v⟩⟨v|` (not normalised).
    pub fn projector(v: &DVector<C64>, dims: Vec<usize>) -> Self {
        Self::outer(v, v, dims)
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &DVector<C64>, v: &DVector<C64>, dims: Vec<usize>) -> Self {
        let mat = u * v.adjoint();
        Self::from_matrix(mat, dims).expect("outer product dims must match vector length")
    }

    /// Computational basis projector `|i⟩⟨i|`.
    pub fn basis_projector(index: usize, dims: Vec<usize>) -> Self {
        let mut op = Self::zeros(dims);
        op.mat[(index, index)] = C64::from(1.0);
        op
    }

    pub fn mat(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    /// Same matrix, regrouped into different tensor factors.
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        Self::from_matrix(self.mat.clone(), dims)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn trace_re(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn adjoint(&self) -> Self {
        Operator { mat: self.mat.adjoint(), dims: self.dims.clone() }
    }

    /// Full transpose in the computational basis.
    pub fn transpose(&self) -> Self {
        Operator { mat: self.mat.transpose(), dims: self.dims.clone() }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Operator { mat: self.mat.map(|z| z.conj()), dims: self.dims.clone() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Max-abs entry of `X − X†`, relative to `‖X‖_F` (absolute when `X = 0`).
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.side();
        let mut dev: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        let scale = self.frobenius_norm();
        if scale > 0.0 {
            dev / scale
        } else {
            dev
        }
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev <= tol {
            Ok(())
        } else {
            Err(Error::NotHermitian(dev))
        }
    }

    /// `(X + X†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let mat = (&self.mat + self.mat.adjoint()) * C64::from(0.5);
        Operator { mat, dims: self.dims.clone() }
    }

    /// `Re Tr(X Y)`; the Hilbert-Schmidt pairing for Hermitian arguments.
    pub fn trace_product(&self, other: &Operator) -> f64 {
        assert_eq!(self.side(), other.side(), "trace_product: side mismatch");
        let n = self.side();
        let mut acc = C64::from(0.0);
        for j in 0..n {
            for i in 0..n {
                acc += self.mat[(i, j)] * other.mat[(j, i)];
            }
        }
        acc.re
    }

    /// `Re ⟨v|X|v⟩`.
    pub fn expectation(&self, v: &DVector<C64>) -> f64 {
        v.dotc(&(&self.mat * v)).re
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.side(), other.side(), "max_abs_diff: side mismatch");
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Eigendecomposition of the Hermitian part, without a Hermiticity check.
    pub fn spectrum(&self) -> Spectrum {
        jacobi_eigh(&self.hermitian_part().mat)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Sandwich `M X M†` with a rectangular `M`; the result carries `dims`.
    pub fn conjugate_by(&self, m: &DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        if m.ncols() != self.side() {
            return Err(Error::Dimension(format!(
                "conjugating matrix has {} columns, operator side is {}",
                m.ncols(),
                self.side()
            )));
        }
        Self::from_matrix(m * &self.mat * m.adjoint(), dims)
    }

    pub fn scale(&self, s: f64) -> Self {
        Operator { mat: &self.mat * C64::from(s), dims: self.dims.clone() }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Operator { mat: &self.mat * s, dims: self.dims.clone() }
    }
}

fn check_same_side(a: &Operator, b: &Operator, op: &str) {
    assert_eq!(a.side(), b.side(), "{op}: operator sides differ ({} vs {})", a.side(), b.side());
}

macro_rules! binop {
    ($trait:ident, $method:ident, $name:literal) => {
        impl $trait<&Operator> for &Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                check_same_side(self, rhs, $name);
                Operator { mat: $trait::$method(&self.mat, &rhs.mat), dims: self.dims.clone() }
            }
        }
        impl $trait<Operator> for Operator {
            type Output = Operator;
            fn $method(self, rhs: Operator) -> Operator {
                $trait::$method(&self, &rhs)
            }
        }
        impl $trait<&Operator> for Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                $trait::$method(&self, rhs)
            }
        }
        impl $trait<Operator> for &Operator {
            type Output = Operator;
            fn $method(self, rhs: Operator) -> Operator {
                $trait::$method(self, &rhs)
            }
        }
    };
}

binop!(Add, add, "add");
binop!(Sub, sub, "sub");
binop!(Mul, mul, "mul");

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, s: f64) -> Operator {
        self.scale(s)
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(mut self, s: f64) -> Operator {
        self.mat *= C64::from(s);
        self
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, op: &Operator) -> Operator {
        op.scale(self)
    }
}

impl Mul<Operator> for f64 {
    type Output = Operator;
    fn mul(self, op: Operator) -> Operator {
        op * self
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self * -1.0
    }
}

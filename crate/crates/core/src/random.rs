//! Seeded random objects: RNG streams, Haar vectors, product states, density
//! operators, Schmidt vectors and isometries.
//!
//! Every random draw in the crate goes through [`stream_rng`], which derives an
//! independent ChaCha stream from `(seed, label, index)`. Work item `i` of a sweep
//! always sees the same numbers no matter which thread runs it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{Operator, C64};

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Independent RNG for sample `index` of the stream named `label`.
pub fn stream_rng(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(label.as_bytes()));
    rng.set_stream(index);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<C64> {
    DVector::from_fn(n, |_, _| complex_gaussian(rng))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-random unit vector in `C^n`.
pub fn haar_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<C64> {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-300 {
            return v / C64::from(norm);
        }
    }
}

/// Product of independent Haar-random unit vectors, one per party.
pub fn product_vector<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> DVector<C64> {
    let mut v = DVector::from_element(1, C64::from(1.0));
    for &d in dims {
        v = v.kronecker(&haar_vector(rng, d));
    }
    v
}

/// Projector onto a random product vector: a random separable pure state.
pub fn separable_pure<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> Operator {
    Operator::projector(&product_vector(rng, dims), dims.to_vec())
}

/// Random Hermitian operator with Gaussian entries (GUE-like, unnormalised).
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> Operator {
    let n: usize = dims.iter().product();
    let g = gaussian_matrix(rng, n, n);
    let h = (&g + g.adjoint()) * C64::from(0.5);
    Operator::from_matrix(h, dims.to_vec()).expect("dims product equals side")
}

/// Random density operator `G G† / Tr(G G†)` with `G` Gaussian `n × rank`.
pub fn density<R: Rng + ?Sized>(rng: &mut R, dims: &[usize], rank: usize) -> Operator {
    let n: usize = dims.iter().product();
    let g = gaussian_matrix(rng, n, rank.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    Operator::from_matrix(m / C64::from(tr), dims.to_vec()).expect("dims product equals side")
}

/// Full-rank random density operator.
pub fn full_rank_density<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> Operator {
    let n: usize = dims.iter().product();
    density(rng, dims, n)
}

/// Random probability vector of length `d`, entries drawn uniformly from
/// `[floor, 1]` before normalisation, sorted descending.
pub fn probability_vector<R: Rng + ?Sized>(rng: &mut R, d: usize, floor: f64) -> Vec<f64> {
    let mut p: Vec<f64> = (0..d).map(|_| rng.random_range(floor..=1.0)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p.sort_by(|a, b| b.total_cmp(a));
    p
}

/// Random `k × d` co-isometry `P` (`P P† = I_k`), from the QR factorisation of a
/// complex Gaussian `d × k` matrix with the phase ambiguity of R removed.
pub fn coisometry<R: Rng + ?Sized>(rng: &mut R, k: usize, d: usize) -> DMatrix<C64> {
    assert!(k <= d, "co-isometry needs k <= d");
    let g = gaussian_matrix(rng, d, k);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / C64::from(rjj.norm()) } else { C64::from(1.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q.adjoint()
}

/// Haar-random unitary of size `d`.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<C64> {
    coisometry(rng, d, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = stream_rng(7, "x", 3).random();
        let b: f64 = stream_rng(7, "x", 3).random();
        let c: f64 = stream_rng(7, "x", 4).random();
        let d: f64 = stream_rng(7, "y", 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn coisometry_rows_are_orthonormal() {
        let mut rng = stream_rng(1, "iso", 0);
        for (k, d) in [(1, 3), (2, 5), (4, 4)] {
            let p = coisometry(&mut rng, k, d);
            let ppd = &p * p.adjoint();
            assert_relative_eq!((ppd - DMatrix::<C64>::identity(k, k)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn density_is_normalised_and_psd() {
        let mut rng = stream_rng(2, "rho", 0);
        let rho = density(&mut rng, &[2, 3], 2);
        assert_relative_eq!(rho.trace_re(), 1.0, epsilon = 1e-12);
        assert!(rho.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn probability_vector_is_sorted() {
        let mut rng = stream_rng(3, "p", 0);
        let p = probability_vector(&mut rng, 6, 0.02);
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert!(p.windows(2).all(|w| w[0] >= w[1]));
    }
}

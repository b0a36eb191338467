//! Kronecker products and tensor-factor reshuffles.
//!
//! Indices are row-major over the factors: for dims `[d0, d1, d2]` the basis
//! state `|i0 i1 i2⟩` sits at `i0·d1·d2 + i1·d2 + i2`.

use nalgebra::{DMatrix, DVector};

use super::operator::{Operator, C64};
use crate::error::{Error, Result};

/// Row-major strides of a factor list.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let mut dims = a.dims().to_vec();
    dims.extend_from_slice(b.dims());
    Operator::from_matrix(a.mat().kronecker(b.mat()), dims).expect("kron dims are consistent")
}

/// `ops[0] ⊗ ops[1] ⊗ …`.
pub fn kron_all(ops: &[&Operator]) -> Operator {
    let (first, rest) = ops.split_first().expect("kron_all needs at least one operator");
    rest.iter().fold((*first).clone(), |acc, op| kron(&acc, op))
}

pub fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    a.kronecker(b)
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::Dimension(format!("permutation {perm:?} has wrong length for {n} factors")));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n {
            return Err(Error::FactorOutOfRange { index: p, count: n });
        }
        if seen[p] {
            return Err(Error::Dimension(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// For the reordering where new factor `i` is old factor `perm[i]`, returns the
/// old flat index of every new flat index.
pub fn permutation_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let n: usize = dims.iter().product();
    let mut map = Vec::with_capacity(n);
    let mut digits = vec![0usize; dims.len()];
    for _ in 0..n {
        map.push(digits.iter().zip(perm).map(|(&dg, &p)| dg * old_strides[p]).sum());
        for pos in (0..digits.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < new_dims[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
    map
}

/// Reorders tensor factors: factor `i` of the result is factor `perm[i]` of `x`.
pub fn permute_factors(x: &Operator, perm: &[usize]) -> Result<Operator> {
    check_permutation(perm, x.n_factors())?;
    let map = permutation_map(x.dims(), perm);
    let n = x.side();
    let src = x.mat();
    let mat = DMatrix::from_fn(n, n, |r, c| src[(map[r], map[c])]);
    Operator::from_matrix(mat, perm.iter().map(|&p| x.dims()[p]).collect())
}

/// Reorders the tensor factors of a vector over `dims`.
pub fn permute_vector_factors(v: &DVector<C64>, dims: &[usize], perm: &[usize]) -> Result<DVector<C64>> {
    check_permutation(perm, dims.len())?;
    let map = permutation_map(dims, perm);
    Ok(DVector::from_fn(v.len(), |r, _| v[map[r]]))
}

/// Transposes a single tensor factor in the computational basis.
pub fn partial_transpose(x: &Operator, factor: usize) -> Result<Operator> {
    partial_transpose_factors(x, &[factor])
}

/// Transposes every listed tensor factor.
pub fn partial_transpose_factors(x: &Operator, factors: &[usize]) -> Result<Operator> {
    let nf = x.n_factors();
    let mut flagged = vec![false; nf];
    for &f in factors {
        if f >= nf {
            return Err(Error::FactorOutOfRange { index: f, count: nf });
        }
        flagged[f] = true;
    }
    let dims = x.dims();
    let st = strides(dims);
    let n = x.side();
    // For each flat index, the part living in flagged factors.
    let flagged_part: Vec<usize> = (0..n)
        .map(|i| (0..nf).filter(|&f| flagged[f]).map(|f| (i / st[f]) % dims[f] * st[f]).sum())
        .collect();
    let src = x.mat();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            let (fr, fc) = (flagged_part[r], flagged_part[c]);
            out[(r - fr + fc, c - fc + fr)] = src[(r, c)];
        }
    }
    Operator::from_matrix(out, dims.to_vec())
}

/// Traces out every factor not listed in `keep`. The result's factors are the kept
/// ones in ascending index order.
pub fn partial_trace(x: &Operator, keep: &[usize]) -> Result<Operator> {
    let nf = x.n_factors();
    if keep.is_empty() {
        return Err(Error::Dimension("partial_trace needs at least one kept factor".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= nf) {
        return Err(Error::FactorOutOfRange { index: bad, count: nf });
    }
    if kept.len() != keep.len() {
        return Err(Error::Dimension(format!("repeated factor in {keep:?}")));
    }
    let traced: Vec<usize> = (0..nf).filter(|f| !kept.contains(f)).collect();
    let perm: Vec<usize> = kept.iter().chain(traced.iter()).copied().collect();
    let map = permutation_map(x.dims(), &perm);
    let keep_dims: Vec<usize> = kept.iter().map(|&k| x.dims()[k]).collect();
    let dk: usize = keep_dims.iter().product();
    let dt: usize = traced.iter().map(|&t| x.dims()[t]).product();
    let src = x.mat();
    let mut out = DMatrix::<C64>::zeros(dk, dk);
    for c in 0..dk {
        for r in 0..dk {
            let mut acc = C64::from(0.0);
            for t in 0..dt {
                acc += src[(map[r * dt + t], map[c * dt + t])];
            }
            out[(r, c)] = acc;
        }
    }
    Operator::from_matrix(out, keep_dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{density, hermitian, stream_rng};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn max_entangled_projector(d: usize) -> Operator {
        let mut v = DVector::<C64>::zeros(d * d);
        for i in 0..d {
            v[i * d + i] = C64::from(1.0 / (d as f64).sqrt());
        }
        Operator::projector(&v, vec![d, d])
    }

    fn flip(d: usize) -> Operator {
        let mut m = DMatrix::<C64>::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + j, j * d + i)] = C64::from(1.0);
            }
        }
        Operator::from_matrix(m, vec![d, d]).unwrap()
    }

    #[test]
    fn kron_examples() {
        let i2 = Operator::identity(vec![2]);
        assert_eq!(kron(&i2, &i2).mat(), Operator::identity(vec![2, 2]).mat());
        let a = Operator::diagonal(&[1.0, 0.0], vec![2]).unwrap();
        let b = Operator::diagonal(&[0.0, 1.0], vec![2]).unwrap();
        let ab = kron(&a, &b);
        assert_eq!(ab.mat(), Operator::diagonal(&[0.0, 1.0, 0.0, 0.0], vec![2, 2]).unwrap().mat());
        assert_eq!(ab.dims(), &[2, 2]);
        let mut rng = stream_rng(0, "kron", 0);
        let big = kron(&hermitian(&mut rng, &[3]), &hermitian(&mut rng, &[4]));
        assert_eq!(big.side(), 12);
        assert_eq!(big.dims(), &[3, 4]);
    }

    #[test]
    fn partial_transpose_of_max_entangled_is_scaled_flip() {
        for d in 2..=4 {
            let phi = max_entangled_projector(d);
            let expected = flip(d) * (1.0 / d as f64);
            for f in 0..2 {
                let pt = partial_transpose(&phi, f).unwrap();
                assert!(pt.max_abs_diff(&expected) < 1e-15);
            }
        }
    }

    #[test]
    fn partial_transpose_index_out_of_range() {
        assert!(matches!(
            partial_transpose(&Operator::identity(vec![2, 2]), 2),
            Err(Error::FactorOutOfRange { index: 2, count: 2 })
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = stream_rng(0, "ptrace", 0);
        let rho = density(&mut rng, &[2], 2);
        let sigma = density(&mut rng, &[3], 3) * 2.5;
        let prod = kron(&rho, &sigma);
        let reduced = partial_trace(&prod, &[0]).unwrap();
        assert!(reduced.max_abs_diff(&(&rho * 2.5)) < 1e-14);

        for d in 2..=4 {
            let phi = max_entangled_projector(d);
            for k in 0..2 {
                let r = partial_trace(&phi, &[k]).unwrap();
                assert!(r.max_abs_diff(&Operator::maximally_mixed(vec![d])) < 1e-15);
            }
        }

        let x = hermitian(&mut rng, &[2, 3, 2]);
        assert_eq!(partial_trace(&x, &[0, 1, 2]).unwrap(), x);
        assert!(partial_trace(&x, &[]).is_err());
        assert!(partial_trace(&x, &[3]).is_err());
    }

    #[test]
    fn partial_trace_keeps_middle_factor() {
        let mut rng = stream_rng(1, "ptrace-mid", 0);
        let a = density(&mut rng, &[2], 2);
        let b = density(&mut rng, &[3], 3);
        let c = density(&mut rng, &[2], 1);
        let abc = kron_all(&[&a, &b, &c]);
        assert!(partial_trace(&abc, &[1]).unwrap().max_abs_diff(&b) < 1e-14);
        assert!(partial_trace(&abc, &[0, 2]).unwrap().max_abs_diff(&kron(&a, &c)) < 1e-14);
    }

    #[test]
    fn permute_factors_swaps_kron_order() {
        let mut rng = stream_rng(2, "perm", 0);
        let a = hermitian(&mut rng, &[2]);
        let b = hermitian(&mut rng, &[3]);
        let c = hermitian(&mut rng, &[4]);
        let abc = kron_all(&[&a, &b, &c]);
        let cab = permute_factors(&abc, &[2, 0, 1]).unwrap();
        assert_eq!(cab.dims(), &[4, 2, 3]);
        assert!(cab.max_abs_diff(&kron_all(&[&c, &a, &b])) < 1e-14);
        assert!(permute_factors(&abc, &[0, 0, 1]).is_err());
        assert!(permute_factors(&abc, &[0, 1]).is_err());
    }

    #[test]
    fn permute_vector_matches_operator() {
        let mut rng = stream_rng(3, "perm-vec", 0);
        let v = crate::random::haar_vector(&mut rng, 12);
        let dims = [2, 3, 2];
        let perm = [1, 2, 0];
        let pv = permute_vector_factors(&v, &dims, &perm).unwrap();
        let p_op = permute_factors(&Operator::projector(&v, dims.to_vec()), &perm).unwrap();
        assert!(p_op.max_abs_diff(&Operator::projector(&pv, vec![3, 2, 2])) < 1e-15);
    }

    fn arbitrary_dims() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(1usize..=4, 1..=3).prop_filter("total dim ≤ 36", |d| {
            d.iter().product::<usize>() <= 36
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn partial_transpose_laws(seed in any::<u64>(), dims in arbitrary_dims(), pick in any::<prop::sample::Index>()) {
            let mut rng = stream_rng(seed, "pt-laws", 0);
            let x = hermitian(&mut rng, &dims);
            let f = pick.index(dims.len());
            let pt = partial_transpose(&x, f).unwrap();
            prop_assert!(partial_transpose(&pt, f).unwrap().max_abs_diff(&x) <= 1e-15);
            prop_assert!((pt.trace() - x.trace()).norm() <= 1e-12);
            prop_assert!(pt.hermiticity_deviation() <= 1e-15);
        }

        #[test]
        fn partial_transpose_of_product(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
            let mut rng = stream_rng(seed, "pt-product", 0);
            let a = hermitian(&mut rng, &[da]);
            let b = hermitian(&mut rng, &[db]);
            let pt = partial_transpose(&kron(&a, &b), 0).unwrap();
            prop_assert!(pt.max_abs_diff(&kron(&a.transpose(), &b)) <= 1e-15);
        }

        #[test]
        fn kron_is_associative(seed in any::<u64>(), d in prop::array::uniform3(1usize..=3)) {
            let mut rng = stream_rng(seed, "kron-assoc", 0);
            let a = hermitian(&mut rng, &[d[0]]);
            let b = hermitian(&mut rng, &[d[1]]);
            let c = hermitian(&mut rng, &[d[2]]);
            let left = kron(&kron(&a, &b), &c);
            let right = kron(&a, &kron(&b, &c));
            prop_assert!(left.max_abs_diff(&right) <= 1e-12);
        }

        #[test]
        fn partial_trace_preserves_trace(seed in any::<u64>(), dims in arbitrary_dims(), pick in any::<prop::sample::Index>()) {
            let mut rng = stream_rng(seed, "ptrace-trace", 0);
            let x = hermitian(&mut rng, &dims);
            let keep = pick.index(dims.len());
            let r = partial_trace(&x, &[keep]).unwrap();
            assert_relative_eq!(r.trace().re, x.trace().re, epsilon = 1e-11);
            prop_assert_eq!(r.dims(), &[dims[keep]]);
        }
    }
}

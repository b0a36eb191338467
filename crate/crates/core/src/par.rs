//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Exec::Parallel`] runs on the rayon
//! global pool; without it every mode runs sequentially. Callers index their work by
//! `usize` and derive randomness from the index, so both modes return identical
//! results in identical order.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Evaluates `f(0), …, f(n-1)` and collects the results in index order.
pub fn map_indices<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps a slice in index order.
pub fn map_slice<S, T, F>(exec: Exec, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indices(exec, items.len(), |i| f(&items[i]))
}

/// Minimum of `f(i)` over `0..n`; `+∞` for `n = 0`.
pub fn min_over<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indices(exec, n, f)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Maximum of `f(i)` over `0..n`; `-∞` for `n = 0`.
pub fn max_over<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indices(exec, n, f)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Counts indices for which `pred(i)` holds.
pub fn count_where<F>(exec: Exec, n: usize, pred: F) -> usize
where
    F: Fn(usize) -> bool + Sync + Send,
{
    map_indices(exec, n, pred).into_iter().filter(|&b| b).count()
}

//! Numerical tolerances shared by every module.
//!
//! Tolerances are relative to the Frobenius norm of the operator involved unless the
//! field documentation says otherwise.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-abs deviation of `X - X†`, relative to `‖X‖_F`.
    pub hermiticity: f64,
    /// Eigenvalues above `-psd` (relative to `‖X‖_F`) count as nonnegative.
    pub psd: f64,
    /// Eigenvalues at or below this (absolute) are outside the support.
    pub support: f64,
    /// Schmidt coefficients at or below this are zero for rank purposes.
    pub schmidt_rank: f64,
    /// Normalization tolerance for state vectors and Schmidt vectors.
    pub normalization: f64,
    /// Slack allowed on the Gurvits-ball radius.
    pub gurvits: f64,
    /// Relative gap `|x - y| / max(x, y)` below which divided differences use `f'`.
    pub divided_difference_switch: f64,
    /// Off-diagonal Frobenius mass (relative) at which Jacobi sweeps stop.
    pub eigen_convergence: f64,
    /// CCNR values above `1 + ccnr` certify entanglement.
    pub ccnr: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermiticity: 1e-12,
        psd: 1e-10,
        support: 1e-12,
        schmidt_rank: 1e-14,
        normalization: 1e-12,
        gurvits: 1e-12,
        divided_difference_switch: 1e-7,
        eigen_convergence: 1e-15,
        ccnr: 1e-9,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

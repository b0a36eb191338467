//! Numerics for entanglement manipulation with channel classes larger than LOCC.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense complex operators with tensor-factor bookkeeping, a Hermitian
//!   eigensolver, partial transpose / partial trace / factor permutation and norms.
//! - [`states`]: named states (maximally entangled, Werner, isotropic, Smolin, GHZ, W)
//!   and Schmidt decompositions.
//! - [`channels`]: Choi-matrix channels, the two-branch measure-and-prepare form,
//!   duals, tensor products and CPTP / PPT-map predicates.
//! - [`separability`]: PPT, Gurvits-ball, CCNR and closed-form certificates, witnesses.
//! - [`measures`]: Rényi entropies of entanglement, robustness, negativity and Rényi
//!   relative entropies.
//! - [`calculus`]: divided differences, the linear map `Φ_{f,A}` and directional
//!   derivatives of trace functionals.
//! - [`constructions`]: the explicit channels (non-entangling, dually non-entangling,
//!   PPT-preserving, k-non-entangling, witness-undetected) with their side conditions.
//! - [`verify`]: a registry of named numerical checks and the JSON/CSV report writer.
//!
//! Sampling-heavy loops go through [`par`], which uses rayon when the `parallel`
//! feature is enabled and falls back to a plain loop otherwise. Every sample draws
//! from its own seeded stream, so results do not depend on the execution mode.

pub mod calculus;
pub mod channels;
pub mod constructions;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod par;
pub mod random;
pub mod separability;
pub mod states;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Operator, C64};
pub use tolerance::Tolerances;

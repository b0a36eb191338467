//! Dense complex linear algebra with tensor-factor bookkeeping.

mod eigen;
pub mod io;
mod norms;
mod operator;
mod tensor;

pub use eigen::{eig_hermitian, jacobi_eigh, Spectrum};
pub use norms::{norms, Norms};
pub use operator::{Operator, C64};
pub use tensor::{
    kron, kron_all, kron_vec, partial_trace, partial_transpose, partial_transpose_factors,
    permute_factors, permute_vector_factors, permutation_map, strides,
};

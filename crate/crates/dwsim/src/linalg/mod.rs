pub mod dense;
pub mod krylov;
pub mod sparse;

pub use dense::{eigh, eigh_csr, eigvalsh_csr, norm, vdot, Eigh};
pub use krylov::{expm_multiply, lowest_eigenpairs};
pub use sparse::{CsrCombination, CsrMatrix};

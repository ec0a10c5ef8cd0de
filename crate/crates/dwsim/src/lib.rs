//! Domain-wall encodings of fermion chains on Ising chains.

pub mod analysis;
pub mod chain;
pub mod encoding;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod experiment;
pub mod linalg;
pub mod operator;
pub mod sw;

pub type C64 = num_complex::Complex64;

pub use error::{Error, Result};
pub use exec::Execution;

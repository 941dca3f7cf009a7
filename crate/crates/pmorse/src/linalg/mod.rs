//! Sparse direct and iterative linear algebra shared by the solvers and the
//! index computations.

pub mod eigen;
pub mod ldl;
pub mod rcm;
pub mod sparse;

pub use eigen::{constrained_smallest, count_below, dense_generalized, lowest_eigenpairs};
pub use ldl::{LdlFactor, SymbolicLdl};
pub use sparse::Csr;

//! pmorse: multiple positive solutions of singularly perturbed p-Laplace
//! Dirichlet problems with 1 < p < 2.
//!
//! The toolkit finds ground states by constrained minimization on the Nehari
//! manifold, locates further critical points of the regularized functionals
//! by deflated Newton continuation in the smoothing parameter alpha, computes
//! Morse indices through assembled quadratic forms on the discrete H1_0
//! space, certifies the inequalities behind the compactness and coercivity
//! estimates, and runs the domain-topology counting experiments (disk vs
//! annulus) from the command line.
//!
//! Scalar reaction kernels are generic over the float type; the FEM and
//! eigenvalue layers run in f64.

pub mod energy;
pub mod error;
pub mod fem;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod morse;
pub mod multisolve;
pub mod nehari;
pub mod nonlinearity;
pub mod solution;

pub use error::{Error, Result};

/// Scalar type of the FEM and solver layers.
pub type Real = f64;

/// Reaction-term specification instantiated at the solver scalar.
pub type Nonlinearity = nonlinearity::NonlinearitySpec<Real>;

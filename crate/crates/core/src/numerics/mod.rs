//! Numerical building blocks shared by the solvers.

pub mod constrained;
pub mod linalg;
pub mod quad;
pub mod roots;

pub use constrained::{diagonal_min, DiagonalMin, EliminationBasis};
pub use linalg::{
    lanczos_largest, nullspace_basis, smallest_generalized_eig, smallest_generalized_eig_graded,
    Cholesky, EigResult,
};
pub use quad::{adaptive_quad, gauss_legendre, gk15};
pub use roots::{first_positive_zero, Root, RootBracket};

//! Numerical extremal problems in Paley–Wiener spaces weighted by the
//! one-level densities of classical symmetry groups.

pub mod debranges;
pub mod density;
pub mod error;
pub mod gram;
pub mod kernel;
pub mod numerics;
pub mod paley_wiener;
pub mod solution;
pub mod solve;
pub mod sweep;
pub mod variational;
pub mod verify;

pub use density::SymmetryGroup;
pub use error::{Error, Result};
pub use paley_wiener::Bandwidth;
pub use solution::{Diagnostics, ExtremalSolution, Route};

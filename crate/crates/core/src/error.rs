use thiserror::Error;

/// Errors raised by the extremal solvers and their numerical building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown symmetry group `{0}` (expected U, Sp, O, SO(even) or SO(odd))")]
    UnknownGroup(String),

    #[error("node window [{n_min}, {n_max}] is invalid: {reason}")]
    InvalidWindow {
        n_min: i64,
        n_max: i64,
        reason: String,
    },

    #[error("factorization broke down at pivot {pivot} (pivot value {value:e})")]
    Factorization { pivot: usize, value: f64 },

    #[error("constraint system leaves no feasible directions (rank {rank} of {dim})")]
    TrivialNullspace { rank: usize, dim: usize },

    #[error("no root found in (0, {lambda_max}]")]
    NoRootInRange { lambda_max: f64 },

    #[error("evaluation point lies within {distance:e} of a pole at {pole} (term r = {r})")]
    PoleProximity { r: usize, pole: f64, distance: f64 },

    #[error("sign change at {lambda} cannot be separated from a pole")]
    PoleStraddle { lambda: f64 },

    #[error("adaptive quadrature exceeded {max} subdivisions (error estimate {estimate:e})")]
    MaxSubdivision { max: usize, estimate: f64 },

    #[error("iterative eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

impl Error {
    /// Short machine-readable tag used in CLI error output and sweep rows.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::UnknownGroup(_) => "unknown_group",
            Error::InvalidWindow { .. } => "invalid_window",
            Error::Factorization { .. } => "factorization",
            Error::TrivialNullspace { .. } => "trivial_nullspace",
            Error::NoRootInRange { .. } => "no_root_in_range",
            Error::PoleProximity { .. } => "pole_proximity",
            Error::PoleStraddle { .. } => "pole_straddle",
            Error::MaxSubdivision { .. } => "max_subdivision",
            Error::NoConvergence { .. } => "no_convergence",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

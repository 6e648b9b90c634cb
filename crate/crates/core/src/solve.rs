//! Route selection for single computations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::debranges::{detroot_value_tol, DetProblem, DET_ROOT_TOL};
use crate::density::SymmetryGroup;
use crate::error::{Error, Result};
use crate::gram::NodeWindow;
use crate::kernel::{kernel_route_tol, KERNEL_ROOT_TOL};
use crate::paley_wiener::Bandwidth;
use crate::solution::ExtremalSolution;
use crate::variational::{default_window, variational_value, ProblemSpec};

/// Requested solver route; `Auto` picks the fastest trusted one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RouteChoice {
    #[default]
    Auto,
    Variational,
    Kernel,
    Debranges,
}

impl RouteChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            RouteChoice::Auto => "auto",
            RouteChoice::Variational => "variational",
            RouteChoice::Kernel => "kernel",
            RouteChoice::Debranges => "debranges",
        }
    }
}

impl fmt::Display for RouteChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RouteChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(RouteChoice::Auto),
            "variational" => Ok(RouteChoice::Variational),
            "kernel" => Ok(RouteChoice::Kernel),
            "debranges" => Ok(RouteChoice::Debranges),
            other => Err(Error::InvalidInput(format!("unknown route `{other}`"))),
        }
    }
}

/// Optional overrides for a single computation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    /// Variational basis size (the window stays centered where the default one is).
    pub nodes: Option<usize>,
    /// Bisection width for the root-finding routes.
    pub tol: Option<f64>,
}

/// Relative disagreement above which a cross-check is reported.
pub const CROSS_CHECK_TOL: f64 = 1e-3;

/// Bandwidths beyond this are outside the range where the weighted kernels are
/// known explicitly; they are computed but flagged.
pub const DELTA_ADVISORY: f64 = 2.0;

pub fn solve(g: SymmetryGroup, delta: Bandwidth, alpha: f64, k: usize, route: RouteChoice) -> Result<ExtremalSolution> {
    solve_with(g, delta, alpha, k, route, &SolveOptions::default())
}

pub fn solve_with(
    g: SymmetryGroup,
    delta: Bandwidth,
    alpha: f64,
    k: usize,
    route: RouteChoice,
    opts: &SolveOptions,
) -> Result<ExtremalSolution> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha = {alpha} is not finite")));
    }
    if let Some(t) = opts.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("tol = {t} must be positive")));
        }
    }
    let mut sol = match route {
        RouteChoice::Auto if k == 1 => kernel(g, delta, alpha, opts)?,
        RouteChoice::Auto => {
            let mut v = variational(g, delta, alpha, k, opts)?;
            if g == SymmetryGroup::U {
                let d = debranges(g, delta, alpha, k, opts)?;
                let rel = (v.a_value - d.a_value).abs() / d.a_value;
                v.diagnostics.convergence_gap = Some(v.a_value - d.a_value);
                if rel > CROSS_CHECK_TOL {
                    v.diagnostics.warnings.push(format!(
                        "variational and determinant routes differ by {rel:.2e} relative"
                    ));
                }
            }
            v
        }
        RouteChoice::Variational => variational(g, delta, alpha, k, opts)?,
        RouteChoice::Kernel => {
            if k != 1 {
                return Err(Error::InvalidInput(format!("the kernel route needs k = 1 (got {k})")));
            }
            kernel(g, delta, alpha, opts)?
        }
        RouteChoice::Debranges => debranges(g, delta, alpha, k, opts)?,
    };
    if g != SymmetryGroup::U && delta.get() > DELTA_ADVISORY {
        sol.diagnostics
            .warnings
            .push(format!("Δ = {delta} exceeds {DELTA_ADVISORY}; weighted kernels are unverified there"));
    }
    Ok(sol)
}

fn kernel(g: SymmetryGroup, delta: Bandwidth, alpha: f64, opts: &SolveOptions) -> Result<ExtremalSolution> {
    kernel_route_tol(g, delta, alpha, opts.tol.unwrap_or(KERNEL_ROOT_TOL))
}

fn debranges(g: SymmetryGroup, delta: Bandwidth, alpha: f64, k: usize, opts: &SolveOptions) -> Result<ExtremalSolution> {
    if g != SymmetryGroup::U {
        return Err(Error::InvalidInput(format!(
            "the determinant route is available for the unweighted space only (got {g})"
        )));
    }
    detroot_value_tol(&DetProblem::new(delta, alpha, k)?, opts.tol.unwrap_or(DET_ROOT_TOL))
}

fn variational(g: SymmetryGroup, delta: Bandwidth, alpha: f64, k: usize, opts: &SolveOptions) -> Result<ExtremalSolution> {
    let mut window = default_window(g, delta, alpha, k)?;
    if let Some(n) = opts.nodes {
        let center = (window.n_min + window.n_max).div_euclid(2);
        window = NodeWindow::centered(center, n)?;
    }
    variational_value(&ProblemSpec::with_window(g, delta, alpha, k, window)?)
}

//! Result records shared by every solver route.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which construction produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Variational,
    Kernel,
    Debranges,
    Sequence,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Variational => "variational",
            Route::Kernel => "kernel",
            Route::Debranges => "debranges",
            Route::Sequence => "sequence",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variational" => Ok(Route::Variational),
            "kernel" => Ok(Route::Kernel),
            "debranges" => Ok(Route::Debranges),
            "sequence" => Ok(Route::Sequence),
            other => Err(Error::InvalidInput(format!("unknown route `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Basis size, quadrature order or truncation count, depending on the route.
    pub nodes: usize,
    /// Route-specific residual: eigen-residual, constraint violation or `|f(λ₀)|`.
    pub residual: f64,
    /// `|value(window) − value(smaller window)|` when a comparison was run.
    pub convergence_gap: Option<f64>,
    /// The root-finding route hit a sign-preserving zero.
    pub tangential: bool,
    /// Numerator and denominator of the reported coefficient vector.
    pub numerator_norm: Option<f64>,
    pub denominator_norm: Option<f64>,
    pub warnings: Vec<String>,
}

/// `λ₀ = 𝔸^{1/(2k)}` together with `𝔸` and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSolution {
    pub lambda0: f64,
    pub a_value: f64,
    pub k: usize,
    pub route: Route,
    pub coeffs: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl ExtremalSolution {
    pub fn from_a_value(a_value: f64, k: usize, route: Route, diagnostics: Diagnostics) -> Self {
        Self {
            lambda0: a_value.powf(1.0 / (2 * k) as f64),
            a_value,
            k,
            route,
            coeffs: None,
            diagnostics,
        }
    }

    pub fn from_lambda0(lambda0: f64, k: usize, route: Route, diagnostics: Diagnostics) -> Self {
        Self {
            lambda0,
            a_value: lambda0.powi(2 * k as i32),
            k,
            route,
            coeffs: None,
            diagnostics,
        }
    }

    /// `√𝔸`, the quantity plotted against `α`.
    pub fn sqrt_a(&self) -> f64 {
        self.a_value.sqrt()
    }
}

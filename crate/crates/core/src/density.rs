//! The five symmetry-group densities
//!
//! Every density has the form `W_G(x) = 1 + γ·sin(2πx)/(2πx) + η·δ₀(x)` and is
//! fully described by the pair `(γ, η)`. The point mass is carried as data and
//! never evaluated pointwise; it only enters quadratic forms.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Katz–Sarnak symmetry type of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymmetryGroup {
    #[serde(rename = "U")]
    U,
    #[serde(rename = "Sp")]
    Sp,
    #[serde(rename = "O")]
    O,
    #[serde(rename = "SO(even)")]
    SoEven,
    #[serde(rename = "SO(odd)")]
    SoOdd,
}

impl SymmetryGroup {
    pub const ALL: [SymmetryGroup; 5] = [
        SymmetryGroup::U,
        SymmetryGroup::Sp,
        SymmetryGroup::O,
        SymmetryGroup::SoEven,
        SymmetryGroup::SoOdd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SymmetryGroup::U => "U",
            SymmetryGroup::Sp => "Sp",
            SymmetryGroup::O => "O",
            SymmetryGroup::SoEven => "SO(even)",
            SymmetryGroup::SoOdd => "SO(odd)",
        }
    }

    pub fn weight(self) -> WeightSpec {
        weight_params(self)
    }
}

impl fmt::Display for SymmetryGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SymmetryGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "U" => Ok(SymmetryGroup::U),
            "Sp" => Ok(SymmetryGroup::Sp),
            "O" => Ok(SymmetryGroup::O),
            "SO(even)" => Ok(SymmetryGroup::SoEven),
            "SO(odd)" => Ok(SymmetryGroup::SoOdd),
            other => Err(Error::UnknownGroup(other.to_string())),
        }
    }
}

/// The `(γ, η)` pair of a density: sine-kernel sign and point mass at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub gamma: f64,
    pub eta: f64,
}

impl WeightSpec {
    /// Whether the density is identically one (the unweighted Paley–Wiener norm).
    pub fn is_flat(&self) -> bool {
        self.gamma == 0.0 && self.eta == 0.0
    }
}

pub fn weight_params(g: SymmetryGroup) -> WeightSpec {
    let (gamma, eta) = match g {
        SymmetryGroup::U => (0.0, 0.0),
        SymmetryGroup::Sp => (-1.0, 0.0),
        SymmetryGroup::O => (0.0, 0.5),
        SymmetryGroup::SoEven => (1.0, 0.0),
        SymmetryGroup::SoOdd => (-1.0, 1.0),
    };
    WeightSpec { gamma, eta }
}

/// `sin(2πx)/(2πx)` with the removable singularity filled in.
pub fn sine_kernel(x: f64) -> f64 {
    let t = 2.0 * PI * x;
    if x.abs() < SMALL_ARG {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

const SMALL_ARG: f64 = 1.0 / (1u64 << 26) as f64;

/// Absolutely continuous part of `W_G` at `x`; the δ₀ mass is excluded.
pub fn weight_ac(g: SymmetryGroup, x: f64) -> f64 {
    let w = weight_params(g);
    1.0 + w.gamma * sine_kernel(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn params_table() {
        assert_eq!(weight_params(SymmetryGroup::U), WeightSpec { gamma: 0.0, eta: 0.0 });
        assert_eq!(weight_params(SymmetryGroup::O), WeightSpec { gamma: 0.0, eta: 0.5 });
        assert_eq!(weight_params(SymmetryGroup::SoOdd), WeightSpec { gamma: -1.0, eta: 1.0 });
        assert_eq!(weight_params(SymmetryGroup::Sp), WeightSpec { gamma: -1.0, eta: 0.0 });
        assert_eq!(weight_params(SymmetryGroup::SoEven), WeightSpec { gamma: 1.0, eta: 0.0 });
    }

    #[test]
    fn ac_values() {
        assert_eq!(weight_ac(SymmetryGroup::Sp, 0.0), 0.0);
        assert_eq!(weight_ac(SymmetryGroup::U, 17.3), 1.0);
        assert_eq!(weight_ac(SymmetryGroup::SoEven, 0.0), 2.0);
    }

    #[test]
    fn parse_round_trip_and_rejects() {
        for g in SymmetryGroup::ALL {
            assert_eq!(g.as_str().parse::<SymmetryGroup>().unwrap(), g);
        }
        for bad in ["u", "SO", "SOeven", "SO(Even)", "", "Sp "] {
            assert!(bad.parse::<SymmetryGroup>().is_err(), "{bad}");
        }
    }

    #[test]
    fn small_argument_branch_is_continuous() {
        let x = 1.0 / (1u64 << 26) as f64;
        let below = sine_kernel(x * 0.999_999);
        let above = sine_kernel(x * 1.000_001);
        assert!((below - above).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn even_bounded_and_decaying(x in -1.0e3f64..1.0e3, gi in 0usize..5) {
            let g = SymmetryGroup::ALL[gi];
            let w = weight_ac(g, x);
            prop_assert_eq!(w, weight_ac(g, -x));
            prop_assert!((0.0..=2.0).contains(&w));
            if x != 0.0 {
                prop_assert!((w - 1.0).abs() <= 1.0 / (2.0 * PI * x.abs()) + 1e-15);
            }
        }
    }
}

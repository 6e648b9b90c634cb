//! Paley–Wiener structure for `E(z) = e^{−iπΔz}`: the sinc node basis, the
//! unweighted reproducing kernel, and the companion functions
//! `A = cos(πΔz)`, `B = sin(πΔz)`, `C = B/A = tan(πΔz)` with their zero lattices.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width `Δ` of the exponential type `πΔ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(delta: f64) -> Result<Self> {
        if delta.is_finite() && delta > 0.0 {
            Ok(Self(delta))
        } else {
            Err(Error::InvalidInput(format!("bandwidth must be positive, got {delta}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Bandwidth {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Bandwidth::new(v)
    }
}

impl From<Bandwidth> for f64 {
    fn from(b: Bandwidth) -> f64 {
        b.0
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const SMALL: f64 = 1.0 / (1u64 << 26) as f64;

/// `sin(πt)/(πt)`.
#[inline]
pub fn sinc(t: f64) -> f64 {
    if t.abs() < SMALL {
        let u = PI * t;
        1.0 - u * u / 6.0
    } else {
        let u = PI * t;
        u.sin() / u
    }
}

/// Node basis function `e_n(x) = sinc(Δx − n)`; `e_n(m/Δ) = δ_{mn}`.
#[inline]
pub fn sinc_node(delta: Bandwidth, n: i64, x: f64) -> f64 {
    let t = delta.get() * x - n as f64;
    if t.abs() < SMALL {
        return sinc(t);
    }
    // sin(π(Δx − n)) = (−1)ⁿ sin(πΔx) loses nothing for large n
    let s = (PI * t).sin();
    s / (PI * t)
}

/// All node functions of a window at once, using `sin(π(Δx−n)) = (−1)ⁿ sin(πΔx)`.
pub fn sinc_nodes(delta: Bandwidth, n_min: i64, n_max: i64, x: f64) -> Vec<f64> {
    let d = delta.get();
    let s0 = (PI * (d * x - (d * x).round())).sin();
    let base = (d * x).round() as i64;
    (n_min..=n_max)
        .map(|n| {
            let t = d * x - n as f64;
            if t.abs() < SMALL {
                sinc(t)
            } else {
                let parity = if (base - n).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                parity * s0 / (PI * t)
            }
        })
        .collect()
}

/// `K_U(w, z) = sin(πΔ(z − w̄)) / (π(z − w̄))`, equal to `Δ` on the diagonal.
pub fn pw_kernel(delta: Bandwidth, w: Complex64, z: Complex64) -> Complex64 {
    let d = delta.get();
    let u = z - w.conj();
    if u.norm() < SMALL {
        let pu = PI * d * u;
        return Complex64::new(d, 0.0) * (Complex64::new(1.0, 0.0) - pu * pu / 6.0);
    }
    (PI * d * u).sin() / (PI * u)
}

/// Real-argument specialization of [`pw_kernel`].
#[inline]
pub fn pw_kernel_real(delta: Bandwidth, w: f64, z: f64) -> f64 {
    delta.get() * sinc(delta.get() * (z - w))
}

/// Companion functions and zero lattices of the Paley–Wiener de Branges space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwStructure {
    pub delta: Bandwidth,
}

impl PwStructure {
    pub fn new(delta: Bandwidth) -> Self {
        Self { delta }
    }

    fn arg(&self, z: Complex64) -> Complex64 {
        z * (PI * self.delta.get())
    }

    pub fn a(&self, z: Complex64) -> Complex64 {
        self.arg(z).cos()
    }

    pub fn b(&self, z: Complex64) -> Complex64 {
        self.arg(z).sin()
    }

    pub fn c(&self, z: Complex64) -> Complex64 {
        self.arg(z).tan()
    }

    pub fn a_real(&self, x: f64) -> f64 {
        (PI * self.delta.get() * x).cos()
    }

    pub fn b_real(&self, x: f64) -> f64 {
        (PI * self.delta.get() * x).sin()
    }

    pub fn a_prime_real(&self, x: f64) -> f64 {
        -PI * self.delta.get() * (PI * self.delta.get() * x).sin()
    }

    /// `ξ_n = sign(n)(|n| − ½)/Δ` for `n ≠ 0`.
    pub fn a_zero(&self, n: i64) -> f64 {
        assert!(n != 0, "A-zeros are indexed by nonzero integers");
        n.signum() as f64 * (n.unsigned_abs() as f64 - 0.5) / self.delta.get()
    }

    /// `η_n = n/Δ`.
    pub fn b_zero(&self, n: i64) -> f64 {
        n as f64 / self.delta.get()
    }

    /// `c_n = −A′(ξ_n)/B(ξ_n) = πΔ`.
    pub fn c_coeff(&self) -> f64 {
        PI * self.delta.get()
    }

    /// `d_n = πΔ`, the B-zero counterpart of `c_n`.
    pub fn d_coeff(&self) -> f64 {
        PI * self.delta.get()
    }

    /// `K(ξ, ξ)` at any real point: `(B′A − A′B)/π = Δ`.
    pub fn diagonal_kernel(&self) -> f64 {
        self.delta.get()
    }
}

/// Partial sum `Σ_{m=1}^{M} 2z / (c_m (ξ_m² − z²))` of the pole expansion of
/// `C(z) = tan(πΔz)`.
pub fn c_series_partial(delta: Bandwidth, z: Complex64, terms: usize) -> Result<Complex64> {
    let pw = PwStructure::new(delta);
    let c = pw.c_coeff();
    let z2 = z * z;
    let mut sum = Complex64::new(0.0, 0.0);
    // smallest terms first
    for m in (1..=terms as i64).rev() {
        let xi = pw.a_zero(m);
        for pole in [xi, -xi] {
            let dist = (z - pole).norm();
            if dist < 1e-9 {
                return Err(Error::PoleProximity {
                    r: m as usize,
                    pole,
                    distance: dist,
                });
            }
        }
        sum += 2.0 * z / (c * (xi * xi - z2));
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn bw(d: f64) -> Bandwidth {
        Bandwidth::new(d).unwrap()
    }

    #[test]
    fn bandwidth_rejects_nonpositive() {
        assert!(Bandwidth::new(0.0).is_err());
        assert!(Bandwidth::new(-1.0).is_err());
        assert!(Bandwidth::new(f64::NAN).is_err());
    }

    #[test]
    fn node_values() {
        assert_eq!(sinc_node(bw(1.0), 0, 0.0), 1.0);
        assert_eq!(sinc_node(bw(2.0), 3, 1.5), 1.0);
        assert!((sinc_node(bw(1.0), 0, 0.5) - 2.0 / PI).abs() < 1e-15);
        let all = sinc_nodes(bw(1.5), -4, 4, 0.37);
        for (i, n) in (-4..=4).enumerate() {
            assert!((all[i] - sinc_node(bw(1.5), n, 0.37)).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_examples() {
        let z0 = Complex64::new(0.0, 0.0);
        assert!((pw_kernel(bw(1.7), z0, z0).re - 1.7).abs() < 1e-15);
        let (alpha, x, d) = (0.83, 0.31, 1.4);
        let k = pw_kernel(bw(d), Complex64::new(alpha + x, 0.0), Complex64::new(alpha - x, 0.0));
        let expected = (2.0 * PI * d * x).sin() / (2.0 * PI * x);
        assert!((k.re - expected).abs() < 1e-14 && k.im.abs() < 1e-15);
        for m in -3i64..=3 {
            for n in -3i64..=3 {
                let k = pw_kernel_real(bw(2.0), m as f64 / 2.0, n as f64 / 2.0);
                let e = if m == n { 2.0 } else { 0.0 };
                assert!((k - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn a_zeros_and_coefficients() {
        for d in [0.5, 1.0, 4.0 / 3.0, 2.0] {
            let pw = PwStructure::new(bw(d));
            for n in (-20i64..=20).filter(|n| *n != 0) {
                let xi = pw.a_zero(n);
                assert!(pw.a_real(xi).abs() < 1e-12);
                assert!((pw.a_prime_real(xi).abs() - PI * d).abs() < 1e-12);
                let c = -pw.a_prime_real(xi) / pw.b_real(xi);
                assert!((c - pw.c_coeff()).abs() < 1e-12);
                assert_eq!(pw.a_zero(-n), -xi);
            }
        }
    }

    #[test]
    fn sine_subtraction() {
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..200 {
            let d = rng.random_range(0.2..3.0);
            let pw = PwStructure::new(bw(d));
            let (x, y) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let lhs = pw.b_real(x) * pw.a_real(y) - pw.a_real(x) * pw.b_real(y);
            assert!((lhs - (PI * d * (x - y)).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_matches_companion_form() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..100 {
            let d = rng.random_range(0.2..3.0);
            let pw = PwStructure::new(bw(d));
            let w = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0));
            let z = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0));
            let lhs = PI * (z - w.conj()) * pw_kernel(bw(d), w, z);
            let rhs = pw.b(z) * pw.a(w.conj()) - pw.a(z) * pw.b(w.conj());
            assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn c_series_examples() {
        let z0 = Complex64::new(0.0, 0.0);
        assert_eq!(c_series_partial(bw(1.0), z0, 10).unwrap(), z0);
        let v = c_series_partial(bw(1.0), Complex64::new(0.25, 0.0), 100_000).unwrap();
        assert!((v.re - 1.0).abs() < 1e-4);
        let v = c_series_partial(bw(2.0), Complex64::new(0.1, 0.0), 100_000).unwrap();
        assert!((v.re - (0.2 * PI).tan()).abs() < 1e-4);
        assert!(matches!(
            c_series_partial(bw(1.0), Complex64::new(1.5, 0.0), 10),
            Err(Error::PoleProximity { r: 2, .. })
        ));
    }

    #[test]
    fn c_series_error_decays_like_one_over_m() {
        // empirically fitted constant: err·M stays bounded by 2|z|Δ/π·(1 + margin)
        let pts = [0.1, 0.25, 0.33, -0.4];
        for d in [1.0, 2.0] {
            for &x in &pts {
                let z = Complex64::new(x / d, 0.0);
                let exact = (PI * d * z.re).tan();
                for m in [1_000usize, 10_000, 100_000] {
                    let err = (c_series_partial(bw(d), z, m).unwrap().re - exact).abs();
                    let bound = 2.0 * z.re.abs() * d / PI * 1.05 / m as f64;
                    assert!(err <= bound, "Δ={d} x={x} M={m}: {err} > {bound}");
                }
            }
        }
    }
}

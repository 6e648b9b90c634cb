//! General-`k` criterion for the Paley–Wiener structure `E(z) = e^{−iπΔz}`:
//! `λ₀` is the first positive zero of `A(α+λ) A(α−λ) det 𝒱(λ)` with
//! `𝒱_{lj}(λ) = Σ_{r<2k} ω^{−r(l+j−1)} C(α + ω^r λ)`, `ω = e^{iπ/k}`,
//! `A = cos(πΔ·)`, `C = tan(πΔ·)`. Also the sequence-space oracle over the
//! zeros of `A`, and two small identities used as self-tests.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::default_lambda_max;
use crate::numerics::{diagonal_min, first_positive_zero};
use crate::paley_wiener::{Bandwidth, PwStructure};
use crate::solution::{Diagnostics, ExtremalSolution, Route};

/// Arguments closer than this to a pole of `C` are rejected by [`v_matrix`].
pub const POLE_GUARD: f64 = 1e-8;

/// Tolerance on the imaginary residue of `𝒱` entries, relative to `1 + max|entry|`.
pub const IMAG_TOL: f64 = 1e-9;

/// Bisection width of determinant roots.
pub const DET_ROOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetProblem {
    pub delta: Bandwidth,
    pub alpha: f64,
    pub k: usize,
    #[serde(skip)]
    pub omega: Complex64,
}

impl DetProblem {
    pub fn new(delta: Bandwidth, alpha: f64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha = {alpha} is not finite")));
        }
        Ok(Self {
            delta,
            alpha,
            k,
            omega: Complex64::from_polar(1.0, PI / k as f64),
        })
    }

    /// `ω^r`, taken directly from the angle to avoid accumulated powers.
    pub fn omega_pow(&self, r: i64) -> Complex64 {
        Complex64::from_polar(1.0, PI * r as f64 / self.k as f64)
    }
}

/// Real part of `𝒱(λ)`, with the discarded imaginary residue.
#[derive(Debug, Clone, PartialEq)]
pub struct VMatrix {
    pub lambda_arg: f64,
    pub entries: DMatrix<f64>,
    pub max_imag: f64,
}

/// `tan(πΔz)` for complex `z`, in the form
/// `(sin 2x + i sinh 2y) / (cos 2x + cosh 2y)` that stays finite off the real axis.
fn tan_pd(delta: f64, z: Complex64) -> Complex64 {
    let x = 2.0 * PI * delta * z.re;
    let y = 2.0 * PI * delta * z.im;
    if y.abs() > 700.0 {
        return Complex64::new(0.0, y.signum());
    }
    let den = x.cos() + y.cosh();
    Complex64::new(x.sin() / den, y.sinh() / den)
}

/// Nearest pole of `tan(πΔ·)` to `z` and its distance.
fn nearest_pole(delta: f64, z: Complex64) -> (f64, f64) {
    let m = (delta * z.re - 0.5).round();
    let pole = (m + 0.5) / delta;
    (pole, (z - pole).norm())
}

/// Sums `Σ_r ω^{−rs} C(α + ω^r λ)` over `r ∈ rs` for `s = 1..2k−1` (index `s − 1`).
fn moment_sums(p: &DetProblem, lambda: f64, rs: impl Iterator<Item = usize>) -> Vec<Complex64> {
    let k = p.k;
    let d = p.delta.get();
    let mut sums = vec![Complex64::new(0.0, 0.0); 2 * k - 1];
    for r in rs {
        let c = tan_pd(d, p.alpha + p.omega_pow(r as i64) * lambda);
        for (idx, s) in (1..2 * k).enumerate() {
            sums[idx] += p.omega_pow(-((r * s) as i64)) * c;
        }
    }
    sums
}

fn hankel(k: usize, sums: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(k, k, |l, j| sums[l + j])
}

/// `𝒱(λ)` for real `λ`.
pub fn v_matrix(p: &DetProblem, lambda: f64) -> Result<VMatrix> {
    let d = p.delta.get();
    for r in 0..2 * p.k {
        let z = p.alpha + p.omega_pow(r as i64) * lambda;
        let (pole, distance) = nearest_pole(d, z);
        if distance <= POLE_GUARD {
            return Err(Error::PoleProximity { r, pole, distance });
        }
    }
    let sums = moment_sums(p, lambda, 0..2 * p.k);
    let v = hankel(p.k, &sums);
    let max_abs = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let max_imag = v.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if max_imag > IMAG_TOL * (1.0 + max_abs) {
        return Err(Error::InvalidInput(format!(
            "𝒱({lambda}) has imaginary residue {max_imag:e} against entries of size {max_abs:e}"
        )));
    }
    Ok(VMatrix {
        lambda_arg: lambda,
        entries: v.map(|c| c.re),
        max_imag,
    })
}

fn det_complex(m: DMatrix<Complex64>) -> Complex64 {
    if m.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    m.lu().determinant()
}

/// `A(α+λ) A(α−λ) det 𝒱(λ)` evaluated without the poles of `C` on the real axis.
///
/// The `r = 0` and `r = k` terms of `𝒱` are `C(α+λ)·J` and `C(α−λ)·P`, with
/// `J = 11ᵀ` and `P_{lj} = (−1)^{l+j−1}` both of rank one. The determinant is
/// therefore bilinear in `a = C(α+λ)` and `b = C(α−λ)`:
/// `det = d₀ + a d₁ + b d₂ + ab d₁₂`. Multiplying by `A₊A₋` turns every `a`
/// and `b` into `B₊/A₊` and `B₋/A₋` cancelled against the prefactor.
/// Returns the value and its imaginary residue.
pub fn regularized_product(p: &DetProblem, lambda: f64) -> (f64, f64) {
    let k = p.k;
    let d = p.delta.get();
    let sums = moment_sums(p, lambda, (1..2 * k).filter(|&r| r != k));
    let v0 = hankel(k, &sums);
    let one = Complex64::new(1.0, 0.0);
    let j = DMatrix::from_element(k, k, one);
    let pm = DMatrix::from_fn(k, k, |l, jj| if (l + jj + 1) % 2 == 0 { one } else { -one });
    let e00 = det_complex(v0.clone());
    let e10 = det_complex(&v0 + &j);
    let e01 = det_complex(&v0 + &pm);
    let e11 = det_complex(&v0 + &j + &pm);
    let d1 = e10 - e00;
    let d2 = e01 - e00;
    let d12 = e11 - e10 - e01 + e00;
    let (bp, ap) = (PI * d * (p.alpha + lambda)).sin_cos();
    let (bm, am) = (PI * d * (p.alpha - lambda)).sin_cos();
    let f = e00 * (ap * am) + d1 * (bp * am) + d2 * (ap * bm) + d12 * (bp * bm);
    (f.re, f.im)
}

/// Start of the determinant scan. Every `𝔸_k ≥ 𝔸_1^k = (2Δ)^{−2k}`, so
/// `λ₀ ≥ 1/(2Δ)`; starting at half of that skips the region near `λ = 0`
/// where the roots-of-unity sums cancel catastrophically.
pub fn scan_start(delta: Bandwidth) -> f64 {
    0.25 / delta.get()
}

/// `λ₀` from the determinant criterion, `𝔸 = λ₀^{2k}`.
pub fn detroot_value(p: &DetProblem) -> Result<ExtremalSolution> {
    detroot_value_tol(p, DET_ROOT_TOL)
}

/// [`detroot_value`] with an explicit bisection width.
pub fn detroot_value_tol(p: &DetProblem, tol: f64) -> Result<ExtremalSolution> {
    let start = scan_start(p.delta);
    let lambda_max = default_lambda_max(p.delta, p.alpha);
    let step = 0.005 / p.delta.get();
    let g = |t: f64| regularized_product(p, start + t).0;
    let root = first_positive_zero(g, step, lambda_max - start, tol)?;
    let lambda0 = start + root.value;
    let (f, im) = regularized_product(p, lambda0);
    let (f_ref, _) = regularized_product(p, start);
    let mut diagnostics = Diagnostics {
        residual: f.abs() / f_ref.abs().max(f64::MIN_POSITIVE),
        tangential: root.tangential,
        ..Default::default()
    };
    let scale = f_ref.abs().max(f.abs()).max(f64::MIN_POSITIVE);
    if im.abs() > IMAG_TOL * (1.0 + scale) {
        diagnostics
            .warnings
            .push(format!("determinant imaginary residue {im:e} at λ₀"));
    }
    if root.tangential {
        diagnostics
            .warnings
            .push(format!("first zero at {lambda0} is tangential"));
    }
    Ok(ExtremalSolution::from_lambda0(lambda0, p.k, Route::Debranges, diagnostics))
}

/// Minimum of `Σ a_n² (ξ_n − α)^{2k} / Σ a_n²` over sequences on the A-zeros
/// `0 < |n| ≤ N` satisfying `Σ a_n (ξ_n − α)^{k−ℓ} = 0`, `ℓ = 1..k`.
pub fn sequence_oracle(delta: Bandwidth, alpha: f64, k: usize, n_trunc: usize) -> Result<ExtremalSolution> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if n_trunc <= k {
        return Err(Error::InvalidInput(format!("truncation {n_trunc} must exceed k = {k}")));
    }
    let pw = PwStructure::new(delta);
    let n = n_trunc as i64;
    let dist: Vec<f64> = (-n..=n)
        .filter(|&m| m != 0)
        .map(|m| pw.a_zero(m) - alpha)
        .collect();
    let c = DMatrix::from_fn(k, dist.len(), |row, col| dist[col].powi((k - 1 - row) as i32));
    let a: Vec<f64> = dist.iter().map(|x| x.powi(2 * k as i32)).collect();
    let sol = diagonal_min(&a, &c)?;
    let cv = &c * &sol.vector;
    let diagnostics = Diagnostics {
        nodes: dist.len(),
        residual: cv.amax(),
        ..Default::default()
    };
    let mut out = ExtremalSolution::from_a_value(sol.value, k, Route::Sequence, diagnostics);
    out.coeffs = Some(sol.vector.iter().copied().collect());
    Ok(out)
}

/// `|2k x^{2k−s−1} y^s / (x^{2k} − y^{2k}) − Σ_{r<2k} ω^{−rs} / (x − ω^r y)|`.
pub fn partial_fraction_check(k: usize, s: usize, x: Complex64, y: Complex64) -> Result<f64> {
    partial_fraction_residual(k, s, s, x, y)
}

/// Same as [`partial_fraction_check`] with the `y` exponent chosen freely.
pub fn partial_fraction_residual(k: usize, s: usize, y_exp: usize, x: Complex64, y: Complex64) -> Result<f64> {
    if k == 0 || s >= 2 * k || y_exp >= 2 * k {
        return Err(Error::InvalidInput(format!("need k ≥ 1 and s < 2k (k = {k}, s = {s})")));
    }
    let two_k = 2 * k as i32;
    let den = x.powi(two_k) - y.powi(two_k);
    if den.norm() == 0.0 {
        return Err(Error::InvalidInput("x^{2k} equals y^{2k}".into()));
    }
    let lhs = (2 * k) as f64 * x.powi(two_k - s as i32 - 1) * y.powi(y_exp as i32) / den;
    let rhs: Complex64 = (0..2 * k)
        .map(|r| {
            let w = Complex64::from_polar(1.0, PI * r as f64 / k as f64);
            let wm = Complex64::from_polar(1.0, -PI * (r * s) as f64 / k as f64);
            wm / (x - w * y)
        })
        .sum();
    Ok((lhs - rhs).norm())
}

/// `½(ξ_{i+1} − ξ_i)`: the extremal distance when `α` sits halfway between
/// consecutive zeros of `A`. Zeros are indexed from 1, so `i = 0` panics.
pub fn midpoint_value(delta: Bandwidth, i: u32) -> f64 {
    let pw = PwStructure::new(delta);
    0.5 * (pw.a_zero(i as i64 + 1) - pw.a_zero(i as i64))
}

/// `½(ξ_i + ξ_{i+1}) = i/Δ`.
pub fn midpoint_alpha(delta: Bandwidth, i: u32) -> f64 {
    let pw = PwStructure::new(delta);
    0.5 * (pw.a_zero(i as i64) + pw.a_zero(i as i64 + 1))
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
    fn omega_powers() {
        for k in 1..=6 {
            let p = DetProblem::new(bw(1.0), 0.0, k).unwrap();
            assert!((p.omega.powi(2 * k as i32) - 1.0).norm() < 1e-14);
            assert!((p.omega.powi(k as i32) + 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn first_order_matrix_is_tangent_difference() {
        let p = DetProblem::new(bw(1.3), 0.4, 1).unwrap();
        let v = v_matrix(&p, 0.17).unwrap();
        let d = 1.3;
        let expected = (PI * d * (0.4 + 0.17)).tan() - (PI * d * (0.4 - 0.17)).tan();
        assert!((v.entries[(0, 0)] - expected).abs() < 1e-12);
    }

    #[test]
    fn first_order_product_is_a_sine() {
        for d in [0.6, 1.0, 2.0] {
            for a in [0.0, 0.35, 2.2] {
                let p = DetProblem::new(bw(d), a, 1).unwrap();
                for l in [0.05, 0.3, 0.77, 1.4] {
                    let (f, im) = regularized_product(&p, l);
                    assert!((f - (2.0 * PI * d * l).sin()).abs() < 1e-12);
                    assert_eq!(im, 0.0);
                }
            }
        }
    }

    #[test]
    fn regularized_product_matches_direct_form_away_from_poles() {
        for k in 2..=3 {
            let p = DetProblem::new(bw(1.0), 0.3, k).unwrap();
            for l in [0.4, 0.55, 0.9] {
                let v = v_matrix(&p, l).unwrap();
                let det = v.entries.clone().lu().determinant();
                let pre = (PI * (0.3 + l)).cos() * (PI * (0.3 - l)).cos();
                let (f, _) = regularized_product(&p, l);
                assert!((pre * det - f).abs() < 1e-9 * (1.0 + f.abs()), "k={k} λ={l}: {} vs {f}", pre * det);
            }
        }
    }

    #[test]
    fn hankel_structure_and_real_entries() {
        let p = DetProblem::new(bw(1.0), 0.3, 2).unwrap();
        let v = v_matrix(&p, 0.1).unwrap();
        assert!((v.entries[(0, 1)] - v.entries[(1, 0)]).abs() < 1e-12);
        assert!(v.max_imag <= 1e-10);
    }

    #[test]
    fn pole_is_reported() {
        // α + λ = 1/2 is a pole of tan(π·)
        let p = DetProblem::new(bw(1.0), 0.25, 1).unwrap();
        match v_matrix(&p, 0.25) {
            Err(Error::PoleProximity { r, pole, .. }) => {
                assert_eq!(r, 0);
                assert!((pole - 0.5).abs() < 1e-15);
            }
            other => panic!("expected a pole report, got {other:?}"),
        }
    }

    #[test]
    fn first_order_root_is_half_spacing() {
        for d in [0.5, 1.0, 4.0 / 3.0, 2.0] {
            for i in 0..=60 {
                let a = 0.05 * i as f64;
                let s = detroot_value(&DetProblem::new(bw(d), a, 1).unwrap()).unwrap();
                assert!((s.lambda0 - 0.5 / d).abs() < 1e-12, "Δ={d} α={a}: {}", s.lambda0);
            }
        }
    }

    #[test]
    fn higher_order_unitary_values() {
        // k = 3: λ₀ = 1/Δ; k = 2: 𝔸 = 0.321173758.../Δ⁴, independent of α
        for d in [1.0, 2.0] {
            for a in [0.0, 0.3, 0.7] {
                let s3 = detroot_value(&DetProblem::new(bw(d), a, 3).unwrap()).unwrap();
                assert!((s3.lambda0 * d - 1.0).abs() < 1e-9, "Δ={d} α={a}: {}", s3.lambda0);
                let s2 = detroot_value(&DetProblem::new(bw(d), a, 2).unwrap()).unwrap();
                assert!((s2.a_value * d.powi(4) / 0.321_173_758_287_677_14 - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sequence_oracle_first_order() {
        let s = sequence_oracle(bw(1.0), 0.0, 1, 200).unwrap();
        assert!((s.a_value / 0.25 - 1.0).abs() < 1e-3);
        let s400 = sequence_oracle(bw(1.0), 0.3, 2, 400).unwrap();
        let s200 = sequence_oracle(bw(1.0), 0.3, 2, 200).unwrap();
        assert!(s400.a_value <= s200.a_value);
    }

    #[test]
    fn partial_fractions() {
        let r = partial_fraction_check(1, 0, Complex64::new(3.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        assert!(r < 1e-15);
        let r = partial_fraction_check(2, 1, Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        assert!(r <= 1e-12);
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let k = rng.random_range(1..=5);
            let s = rng.random_range(0..2 * k);
            let x = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let mut y = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            if (x.norm() - y.norm()).abs() < 0.05 {
                y *= 1.5;
            }
            let lhs = (2 * k) as f64 * x.powi((2 * k - s - 1) as i32) * y.powi(s as i32)
                / (x.powi(2 * k as i32) - y.powi(2 * k as i32));
            let r = partial_fraction_check(k, s, x, y).unwrap();
            assert!(r <= 1e-10 * (1.0 + lhs.norm()), "k={k} s={s}: {r}");
        }
    }

    #[test]
    fn literal_exponent_breaks_the_identity() {
        // with y raised to a power other than s the two sides differ
        let x = Complex64::new(2.0, 0.0);
        let y = Complex64::new(0.5, 0.3);
        assert!(partial_fraction_residual(2, 1, 0, x, y).unwrap() > 0.1);
        assert!(partial_fraction_residual(2, 1, 1, x, y).unwrap() < 1e-12);
    }

    #[test]
    fn midpoints() {
        assert_eq!(midpoint_alpha(bw(1.0), 1), 1.0);
        assert!((midpoint_value(bw(1.0), 1) - 0.5).abs() < 1e-15);
        for i in 1..10 {
            assert!((midpoint_value(bw(2.0), i) - 0.25).abs() < 1e-15);
        }
    }
}

//! Weighted Gram matrices of the sinc node basis.
//!
//! `(G_W)_{mn} = ∫ e_m e_n W_G = δ_{mn}/Δ + γ·S_{mn} + η·δ_{m0}δ_{n0}`, where
//! `S_{mn} = ∫ e_m e_n sin(2πx)/(2πx) dx` is evaluated exactly in the Fourier
//! domain.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::SymmetryGroup;
use crate::error::{Error, Result};
use crate::numerics::Cholesky;
use crate::paley_wiener::Bandwidth;

/// Contiguous range of basis nodes `n/Δ`, `n_min ≤ n ≤ n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeWindow {
    pub n_min: i64,
    pub n_max: i64,
}

impl NodeWindow {
    pub fn new(n_min: i64, n_max: i64) -> Result<Self> {
        if n_min > n_max {
            return Err(Error::InvalidWindow {
                n_min,
                n_max,
                reason: "n_min exceeds n_max".into(),
            });
        }
        Ok(Self { n_min, n_max })
    }

    /// `count` consecutive nodes with `center` in the middle (left-biased for even counts).
    pub fn centered(center: i64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidInput("empty window".into()));
        }
        let left = ((count - 1) / 2) as i64;
        Self::new(center - left, center - left + count as i64 - 1)
    }

    /// Mirror image `[−n_max, −n_min]`.
    pub fn reflected(&self) -> Self {
        Self {
            n_min: -self.n_max,
            n_max: -self.n_min,
        }
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: i64) -> bool {
        (self.n_min..=self.n_max).contains(&n)
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + Clone {
        self.n_min..=self.n_max
    }

    /// Position of node `n` inside the window.
    pub fn position(&self, n: i64) -> Option<usize> {
        self.contains(n).then(|| (n - self.n_min) as usize)
    }

    pub(crate) fn validate_for(&self, group: SymmetryGroup, k: usize) -> Result<()> {
        if group.weight().eta > 0.0 && !self.contains(0) {
            return Err(Error::InvalidWindow {
                n_min: self.n_min,
                n_max: self.n_max,
                reason: format!("{group} carries a point mass at node 0, which the window excludes"),
            });
        }
        if self.len() < k + 2 {
            return Err(Error::InvalidWindow {
                n_min: self.n_min,
                n_max: self.n_max,
                reason: format!("{} nodes cannot support a degree-{k} problem", self.len()),
            });
        }
        Ok(())
    }
}

/// `S_{mn} = ∫ sinc(Δx−m) sinc(Δx−n) sin(2πx)/(2πx) dx`.
///
/// In frequency variables `u, v ∈ [−½, ½]` this is
/// `½ ∬_{|u−v| ≤ 1/Δ} e^{−2πi(um − vn)} du dv`. For `Δ ≤ 1` the band covers the
/// whole square and only `S_00 = ½` survives. Otherwise the integral is the
/// full square minus the corner triangle `u − v > 1/Δ` and its reflection
/// (which contributes the complex conjugate), each done in closed form.
pub fn sin_weight_entry(delta: Bandwidth, m: i64, n: i64) -> f64 {
    let full = if m == 0 && n == 0 { 0.5 } else { 0.0 };
    let d = delta.get();
    if d <= 1.0 {
        return full;
    }
    full - corner_triangle(1.0 / d, m, n).re
}

/// `∫_{u=c−½}^{½} ∫_{v=−½}^{u−c} e^{−2πi(um − vn)} dv du` with leg `t = 1 − c`.
fn corner_triangle(c: f64, m: i64, n: i64) -> Complex64 {
    let t = 1.0 - c;
    let i2pi = Complex64::new(0.0, 2.0 * PI);
    // J(p) = ∫_{c−½}^{½} e^{2πiup} du
    let j = |p: i64| -> Complex64 {
        if p == 0 {
            Complex64::new(t, 0.0)
        } else {
            let pf = p as f64;
            let top = Complex64::from_polar(1.0, PI * pf);
            let bottom = Complex64::from_polar(1.0, 2.0 * PI * pf * (c - 0.5));
            (top - bottom) / (i2pi * pf)
        }
    };
    if n != 0 {
        let nf = n as f64;
        let parity = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let shift = Complex64::from_polar(1.0, -2.0 * PI * nf * c);
        (shift * j(n - m) - parity * j(-m)) / (i2pi * nf)
    } else if m == 0 {
        Complex64::new(0.5 * t * t, 0.0)
    } else {
        // e^{−2πim(c−½)} ∫_0^t w e^{βw} dw, β = −2πim
        let mf = m as f64;
        let beta = Complex64::new(0.0, -2.0 * PI * mf);
        let ebt = (beta * t).exp();
        let inner = ebt * (t / beta - 1.0 / (beta * beta)) + 1.0 / (beta * beta);
        Complex64::from_polar(1.0, -2.0 * PI * mf * (c - 0.5)) * inner
    }
}

/// Precomputed exponentials for [`sin_weight_entry`] over a window (`Δ > 1`),
/// so that each entry costs a handful of complex products.
struct SinWeightTable {
    c: f64,
    t: f64,
    /// `J(p)` for `p ∈ [−p_max, p_max]`.
    j: Vec<Complex64>,
    p_max: i64,
    /// `e^{−2πinc} / (2πin)` and `(−1)^n / (2πin)` by window position.
    shift: Vec<Complex64>,
    parity: Vec<Complex64>,
    n_min: i64,
}

impl SinWeightTable {
    fn new(delta: Bandwidth, window: NodeWindow) -> Self {
        let c = 1.0 / delta.get();
        let t = 1.0 - c;
        let p_max = (window.n_max - window.n_min).max(window.n_min.abs().max(window.n_max.abs()));
        let i2pi = Complex64::new(0.0, 2.0 * PI);
        let j = (-p_max..=p_max)
            .map(|p| {
                if p == 0 {
                    Complex64::new(t, 0.0)
                } else {
                    let pf = p as f64;
                    (Complex64::from_polar(1.0, PI * pf) - Complex64::from_polar(1.0, 2.0 * PI * pf * (c - 0.5)))
                        / (i2pi * pf)
                }
            })
            .collect();
        let (mut shift, mut parity) = (Vec::new(), Vec::new());
        for n in window.indices() {
            if n == 0 {
                shift.push(Complex64::new(0.0, 0.0));
                parity.push(Complex64::new(0.0, 0.0));
            } else {
                let nf = n as f64;
                let sgn = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                shift.push(Complex64::from_polar(1.0, -2.0 * PI * nf * c) / (i2pi * nf));
                parity.push(Complex64::new(sgn, 0.0) / (i2pi * nf));
            }
        }
        Self {
            c,
            t,
            j,
            p_max,
            shift,
            parity,
            n_min: window.n_min,
        }
    }

    fn jv(&self, p: i64) -> Complex64 {
        self.j[(p + self.p_max) as usize]
    }

    fn entry(&self, m: i64, n: i64) -> f64 {
        let full = if m == 0 && n == 0 { 0.5 } else { 0.0 };
        let tri = if n != 0 {
            let pos = (n - self.n_min) as usize;
            self.shift[pos] * self.jv(n - m) - self.parity[pos] * self.jv(-m)
        } else if m == 0 {
            Complex64::new(0.5 * self.t * self.t, 0.0)
        } else {
            let mf = m as f64;
            let beta = Complex64::new(0.0, -2.0 * PI * mf);
            let ebt = (beta * self.t).exp();
            let inner = ebt * (self.t / beta - 1.0 / (beta * beta)) + 1.0 / (beta * beta);
            Complex64::from_polar(1.0, -2.0 * PI * mf * (self.c - 0.5)) * inner
        };
        full - tri.re
    }
}

/// Assembled Gram matrix with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct WeightedGram {
    pub window: NodeWindow,
    pub delta: Bandwidth,
    pub group: SymmetryGroup,
    pub entries: DMatrix<f64>,
    pub factor: Cholesky,
}

/// Pivots below this (squared Cholesky diagonal) mark a poorly conditioned Gram.
pub const CONDITIONING_WARN: f64 = 1e-10;

impl WeightedGram {
    pub fn dim(&self) -> usize {
        self.window.len()
    }

    pub fn min_pivot(&self) -> f64 {
        self.factor.min_pivot()
    }

    pub fn is_well_conditioned(&self) -> bool {
        self.min_pivot() >= CONDITIONING_WARN
    }

    /// `G_W − I/Δ`: the part of the Gram contributed by the weight perturbation.
    pub fn perturbation(&self) -> DMatrix<f64> {
        let inv = 1.0 / self.delta.get();
        let mut t = self.entries.clone();
        for i in 0..t.nrows() {
            t[(i, i)] -= inv;
        }
        t
    }
}

/// Raw entries of `G_W` over `window`, with no definiteness check.
pub fn gram_entries(group: SymmetryGroup, delta: Bandwidth, window: NodeWindow) -> DMatrix<f64> {
    let w = group.weight();
    let n = window.len();
    let inv = 1.0 / delta.get();
    let mut g = DMatrix::<f64>::zeros(n, n);
    if w.gamma != 0.0 {
        if delta.get() <= 1.0 {
            if let Some(p) = window.position(0) {
                g[(p, p)] += w.gamma * 0.5;
            }
        } else {
            let table = SinWeightTable::new(delta, window);
            let lo = window.n_min;
            // upper triangle, columns in parallel; S is symmetric
            let cols: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|j| (0..=j).map(|i| table.entry(lo + i as i64, lo + j as i64)).collect())
                .collect();
            for (j, col) in cols.iter().enumerate() {
                for (i, s) in col.iter().enumerate() {
                    g[(i, j)] = w.gamma * s;
                    g[(j, i)] = w.gamma * s;
                }
            }
        }
    }
    for i in 0..n {
        g[(i, i)] += inv;
    }
    if w.eta != 0.0 {
        if let Some(p) = window.position(0) {
            g[(p, p)] += w.eta;
        }
    }
    g
}

pub fn assemble_gram(group: SymmetryGroup, delta: Bandwidth, window: NodeWindow) -> Result<WeightedGram> {
    if group.weight().eta > 0.0 && !window.contains(0) {
        return Err(Error::InvalidWindow {
            n_min: window.n_min,
            n_max: window.n_max,
            reason: format!("{group} carries a point mass at node 0, which the window excludes"),
        });
    }
    let entries = gram_entries(group, delta, window);
    let factor = Cholesky::new(&entries)?;
    Ok(WeightedGram {
        window,
        delta,
        group,
        entries,
        factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::adaptive_quad;
    use crate::paley_wiener::sinc;
    use nalgebra::SymmetricEigen;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn bw(d: f64) -> Bandwidth {
        Bandwidth::new(d).unwrap()
    }

    /// Quadrature of the defining integral on `[−T, T]` over unit panels.
    /// The integrand is O(x⁻³) with an oscillating factor, so the neglected
    /// tail is far below the comparison tolerance for T = 2000.
    fn quadrature_entry(d: f64, m: i64, n: i64) -> f64 {
        let f = |x: f64| sinc(d * x - m as f64) * sinc(d * x - n as f64) * crate::density::sine_kernel(x);
        let t = 2000;
        (-t..t)
            .map(|a| adaptive_quad(f, a as f64, a as f64 + 1.0, 1e-15).unwrap())
            .sum()
    }

    #[test]
    fn small_bandwidth_factorizes() {
        for d in [0.3, 0.8, 1.0] {
            for m in -3..=3 {
                for n in -3..=3 {
                    let e = if m == 0 && n == 0 { 0.5 } else { 0.0 };
                    assert_eq!(sin_weight_entry(bw(d), m, n), e);
                }
            }
        }
    }

    #[test]
    fn symmetric_and_even() {
        let mut rng = StdRng::seed_from_u64(4);
        for d in [1.2, 4.0 / 3.0, 1.5, 2.0, 2.7] {
            for _ in 0..40 {
                let m = rng.random_range(-30..30);
                let n = rng.random_range(-30..30);
                let s = sin_weight_entry(bw(d), m, n);
                assert!((s - sin_weight_entry(bw(d), n, m)).abs() < 1e-15);
                assert!((s - sin_weight_entry(bw(d), -m, -n)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quadrature_oracle_delta_two_origin() {
        let exact = sin_weight_entry(bw(2.0), 0, 0);
        let q = quadrature_entry(2.0, 0, 0);
        assert!((exact - q).abs() < 1e-8, "{exact} vs {q}");
        assert!((exact - 0.375).abs() < 1e-15);
    }

    #[test]
    fn quadrature_oracle_random_pairs() {
        let mut rng = StdRng::seed_from_u64(8);
        for d in [4.0 / 3.0, 1.5, 2.0] {
            for _ in 0..50 {
                let m = rng.random_range(-12..12);
                let n = rng.random_range(-12..12);
                let q = quadrature_entry(d, m, n);
                assert!((sin_weight_entry(bw(d), m, n) - q).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn table_matches_direct_entries() {
        for d in [1.1, 1.5, 2.0, 3.3] {
            let w = NodeWindow::new(-37, 52).unwrap();
            let t = SinWeightTable::new(bw(d), w);
            for m in w.indices().step_by(7) {
                for n in w.indices().step_by(5) {
                    let direct = sin_weight_entry(bw(d), m, n);
                    assert!((t.entry(m, n) - direct).abs() < 1e-14, "Δ={d} ({m},{n})");
                }
            }
        }
    }

    #[test]
    fn unitary_gram_is_scaled_identity() {
        let g = assemble_gram(SymmetryGroup::U, bw(1.0), NodeWindow::new(-5, 5).unwrap()).unwrap();
        assert_eq!(g.entries, DMatrix::<f64>::identity(11, 11));
        let g = assemble_gram(SymmetryGroup::U, bw(2.0), NodeWindow::new(-5, 5).unwrap()).unwrap();
        assert_eq!(g.entries, DMatrix::<f64>::identity(11, 11) * 0.5);
    }

    #[test]
    fn orthogonal_gram_at_unit_bandwidth() {
        let w = NodeWindow::new(-5, 5).unwrap();
        let g = assemble_gram(SymmetryGroup::O, bw(1.0), w).unwrap();
        let mut expected = DMatrix::<f64>::identity(11, 11);
        expected[(5, 5)] += 0.5;
        assert_eq!(g.entries, expected);
        for other in [SymmetryGroup::SoEven, SymmetryGroup::SoOdd] {
            let h = assemble_gram(other, bw(1.0), w).unwrap();
            assert!((&h.entries - &g.entries).amax() < 1e-12);
        }
    }

    #[test]
    fn point_mass_needs_origin() {
        let w = NodeWindow::new(1, 9).unwrap();
        assert!(matches!(
            assemble_gram(SymmetryGroup::O, bw(1.0), w),
            Err(Error::InvalidWindow { .. })
        ));
        assert!(assemble_gram(SymmetryGroup::Sp, bw(1.0), w).is_ok());
    }

    #[test]
    fn positive_definite_with_uniform_floor() {
        for d in [1.0, 4.0 / 3.0, 1.5, 2.0] {
            for g in SymmetryGroup::ALL {
                for half in [20i64, 100] {
                    let gram = assemble_gram(g, bw(d), NodeWindow::new(-half, half).unwrap()).unwrap();
                    let eig = SymmetricEigen::new(gram.entries.clone());
                    let min = eig.eigenvalues.min();
                    assert!(min > 1e-6, "{g} Δ={d} window ±{half}: λ_min = {min}");
                }
            }
        }
    }

    #[test]
    fn window_helpers() {
        let w = NodeWindow::centered(3, 5).unwrap();
        assert_eq!((w.n_min, w.n_max), (1, 5));
        assert_eq!(w.reflected(), NodeWindow::new(-5, -1).unwrap());
        assert_eq!(w.position(4), Some(3));
        assert!(NodeWindow::new(2, 1).is_err());
    }
}

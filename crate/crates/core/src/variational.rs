//! Rayleigh–Ritz upper bounds for 𝔸 over finite sinc expansions.
//!
//! For coefficients `v` over nodes `n/Δ` satisfying the moment constraints,
//! `(x − α)^k f(x) = Σ v_n (n/Δ − α)^k e_n(x)` holds exactly, so both quadratic
//! forms are exact Gram forms and the minimum over the window is a true upper
//! bound on the infimum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::density::SymmetryGroup;
use crate::error::{Error, Result};
use crate::gram::{assemble_gram, NodeWindow, WeightedGram};
use crate::numerics::{diagonal_min, smallest_generalized_eig_graded, EliminationBasis};
use crate::paley_wiener::{sinc_nodes, Bandwidth};
use crate::solution::{Diagnostics, ExtremalSolution, Route};

/// Input of one extremal computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub group: SymmetryGroup,
    pub delta: Bandwidth,
    pub alpha: f64,
    pub k: usize,
    pub window: NodeWindow,
    pub tol: f64,
}

impl ProblemSpec {
    /// Problem on the default window for `(group, Δ, α, k)`.
    pub fn new(group: SymmetryGroup, delta: Bandwidth, alpha: f64, k: usize) -> Result<Self> {
        let window = default_window(group, delta, alpha, k)?;
        Self::with_window(group, delta, alpha, k, window)
    }

    pub fn with_window(
        group: SymmetryGroup,
        delta: Bandwidth,
        alpha: f64,
        k: usize,
        window: NodeWindow,
    ) -> Result<Self> {
        let p = Self {
            group,
            delta,
            alpha,
            k,
            window,
            tol: 1e-12,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha = {} is not finite", self.alpha)));
        }
        self.window.validate_for(self.group, self.k)
    }

    /// The same problem at `−α` on the mirrored window.
    pub fn reflected(&self) -> Self {
        Self {
            alpha: -self.alpha,
            window: self.window.reflected(),
            ..*self
        }
    }
}

/// Target basis sizes for the default window. The flat weight is solved by a
/// secular bisection that is linear in the window, so it can afford far more.
fn default_node_target(group: SymmetryGroup, k: usize) -> usize {
    match (group, k) {
        (SymmetryGroup::U, _) => 8001,
        (_, 1) => 2401,
        _ => 1201,
    }
}

/// Nodes covering `[min(0,α) − L, max(0,α) + L]` with `L = 12/Δ + 4`, padded
/// evenly on both sides up to the per-route target size. Mirror-symmetric in `α`.
pub fn default_window(group: SymmetryGroup, delta: Bandwidth, alpha: f64, k: usize) -> Result<NodeWindow> {
    if !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha = {alpha} is not finite")));
    }
    let d = delta.get();
    let l = 12.0 / d + 4.0;
    let mut lo = ((alpha.min(0.0) - l) * d).floor() as i64;
    let mut hi = ((alpha.max(0.0) + l) * d).ceil() as i64;
    let target = default_node_target(group, k).max(k + 2) as i64;
    let count = hi - lo + 1;
    if count < target {
        let pad = (target - count + 1) / 2;
        lo -= pad;
        hi += pad;
    }
    NodeWindow::new(lo, hi)
}

/// `C_{ℓn} = (−1)^n (n/Δ − α)^{k−ℓ}` for `ℓ = 1..k`, with `0⁰ = 1`.
pub fn moment_constraints(delta: Bandwidth, alpha: f64, k: usize, window: NodeWindow) -> DMatrix<f64> {
    let d = delta.get();
    let nodes: Vec<i64> = window.indices().collect();
    DMatrix::from_fn(k, nodes.len(), |row, col| {
        let n = nodes[col];
        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        // powi(0) is exactly 1 even at a zero base
        sign * (n as f64 / d - alpha).powi((k - 1 - row) as i32)
    })
}

fn offsets(p: &ProblemSpec) -> Vec<f64> {
    let d = p.delta.get();
    p.window.indices().map(|n| n as f64 / d - p.alpha).collect()
}

/// The `k` window positions closest to `α`, ties broken by position.
fn nearest_positions(dist: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| dist[a].abs().total_cmp(&dist[b].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Smallest weighted Rayleigh quotient over the window.
pub fn variational_value(p: &ProblemSpec) -> Result<ExtremalSolution> {
    p.validate()?;
    if p.group == SymmetryGroup::U {
        variational_flat(p)
    } else {
        let gram = assemble_gram(p.group, p.delta, p.window)?;
        variational_with_gram(p, &gram)
    }
}

/// `G_W = I/Δ`: a diagonal numerator over an identity denominator.
fn variational_flat(p: &ProblemSpec) -> Result<ExtremalSolution> {
    let d = offsets(p);
    let c = moment_constraints(p.delta, p.alpha, p.k, p.window);
    let a: Vec<f64> = d.iter().map(|x| x.powi(2 * p.k as i32)).collect();
    let sol = diagonal_min(&a, &c)?;
    // unit vector → vᵀ(I/Δ)v = 1
    let v: Vec<f64> = sol.vector.iter().map(|x| x * p.delta.get().sqrt()).collect();
    let diagnostics = Diagnostics {
        nodes: p.window.len(),
        residual: constraint_residual(&c, &v),
        numerator_norm: Some(sol.value),
        denominator_norm: Some(1.0),
        ..Default::default()
    };
    let mut out = ExtremalSolution::from_a_value(sol.value, p.k, Route::Variational, diagnostics);
    out.coeffs = Some(v);
    Ok(out)
}

/// Variational solve against a pre-assembled Gram for `p`'s group and window.
pub fn variational_with_gram(p: &ProblemSpec, gram: &WeightedGram) -> Result<ExtremalSolution> {
    p.validate()?;
    if gram.window != p.window || gram.delta != p.delta {
        return Err(Error::InvalidInput("gram does not match the problem window".into()));
    }
    let mut warnings = Vec::new();
    if !gram.is_well_conditioned() {
        warnings.push(format!("gram pivot {:e} below conditioning threshold", gram.min_pivot()));
    }
    let d = offsets(p);
    let c = moment_constraints(p.delta, p.alpha, p.k, p.window);
    let basis = EliminationBasis::new(&c, &nearest_positions(&d, p.k))?;
    let dk: Vec<f64> = d.iter().map(|x| x.powi(p.k as i32)).collect();
    let g = &gram.entries;
    let num_full = DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| dk[i] * g[(i, j)] * dk[j]);
    let num = basis.project(&num_full);
    let den = basis.project(g);
    let eig = smallest_generalized_eig_graded(&num, &den)?;
    let v = basis.expand(eig.vector.as_slice());
    let den_norm = v.dot(&(g * &v));
    let v = v / den_norm.sqrt();
    let dv = DVector::from_fn(v.len(), |i, _| dk[i] * v[i]);
    let num_norm = dv.dot(&(g * &dv));
    let coeffs: Vec<f64> = v.iter().copied().collect();
    let scale = num.norm().max(f64::MIN_POSITIVE);
    let diagnostics = Diagnostics {
        nodes: p.window.len(),
        residual: (eig.residual_norm / scale).max(constraint_residual(&c, &coeffs)),
        numerator_norm: Some(num_norm),
        denominator_norm: Some(1.0),
        warnings,
        ..Default::default()
    };
    let mut out = ExtremalSolution::from_a_value(eig.value, p.k, Route::Variational, diagnostics);
    out.coeffs = Some(coeffs);
    Ok(out)
}

/// Largest `|C v|` entry relative to `‖|C|·|v|‖∞`.
fn constraint_residual(c: &DMatrix<f64>, v: &[f64]) -> f64 {
    (0..c.nrows())
        .map(|r| {
            let (s, m) = (0..c.ncols()).fold((0.0, 0.0), |(s, m), j| {
                (s + c[(r, j)] * v[j], m + (c[(r, j)] * v[j]).abs())
            });
            if m > 0.0 {
                s.abs() / m
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Solves on `p.window` and on the window of half the size around the same
/// center, recording the difference as the convergence gap.
pub fn variational_with_gap(p: &ProblemSpec) -> Result<ExtremalSolution> {
    let mut sol = variational_value(p)?;
    let w = p.window;
    let quarter = (w.len() / 4) as i64;
    let inner = NodeWindow::new(w.n_min + quarter, w.n_max - quarter)?;
    let coarse = ProblemSpec { window: inner, ..*p };
    if coarse.validate().is_ok() {
        let c = variational_value(&coarse)?;
        sol.diagnostics.convergence_gap = Some((c.a_value - sol.a_value).abs());
    }
    Ok(sol)
}

/// `f(x) = Σ v_n sinc(Δx − n)` for the extremizer carried by `sol`.
pub fn extremizer_samples(sol: &ExtremalSolution, p: &ProblemSpec, xs: &[f64]) -> Result<Vec<f64>> {
    let v = sol
        .coeffs
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("{} solution carries no coefficients", sol.route)))?;
    if v.len() != p.window.len() {
        return Err(Error::InvalidInput("coefficient count does not match the window".into()));
    }
    Ok(xs
        .iter()
        .map(|&x| {
            sinc_nodes(p.delta, p.window.n_min, p.window.n_max, x)
                .iter()
                .zip(v)
                .map(|(e, c)| e * c)
                .sum()
        })
        .collect())
}

/// The reported zero-distance bound: `√𝔸` for U, Sp and SO(even); for O and
/// SO(odd) the forced central zero also gives `|α|`, so the smaller is reported.
pub fn zero_distance_bound(g: SymmetryGroup, delta: Bandwidth, alpha: f64) -> Result<f64> {
    let sol = crate::solve::solve(g, delta, alpha, 1, crate::solve::RouteChoice::Auto)?;
    let root = sol.sqrt_a();
    Ok(match g {
        SymmetryGroup::O | SymmetryGroup::SoOdd => root.min(alpha.abs()),
        _ => root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bw(d: f64) -> Bandwidth {
        Bandwidth::new(d).unwrap()
    }

    #[test]
    fn constraint_examples() {
        let c = moment_constraints(bw(1.0), 0.0, 1, NodeWindow::new(-2, 2).unwrap());
        assert_eq!(c.as_slice(), &[1.0, -1.0, 1.0, -1.0, 1.0]);

        let c = moment_constraints(bw(1.0), 0.0, 2, NodeWindow::new(-2, 2).unwrap());
        let row0: Vec<f64> = c.row(0).iter().copied().collect();
        let row1: Vec<f64> = c.row(1).iter().copied().collect();
        assert_eq!(row0, vec![-2.0, 1.0, 0.0, -1.0, 2.0]);
        assert_eq!(row1, vec![1.0, -1.0, 1.0, -1.0, 1.0]);

        let c = moment_constraints(bw(2.0), 0.5, 1, NodeWindow::new(-1, 1).unwrap());
        assert_eq!(c.as_slice(), &[-1.0, 1.0, -1.0]);
    }

    #[test]
    fn zero_to_the_zero_is_one() {
        let c = moment_constraints(bw(1.0), 1.0, 2, NodeWindow::new(0, 2).unwrap());
        assert_eq!(c[(1, 1)], -1.0);
        assert_eq!(c[(0, 1)], 0.0);
    }

    #[test]
    fn default_window_covers_origin_and_center() {
        for (g, a) in [(SymmetryGroup::Sp, 10.0), (SymmetryGroup::O, -3.0), (SymmetryGroup::U, 0.0)] {
            let w = default_window(g, bw(2.0), a, 1).unwrap();
            assert!(w.contains(0) && w.contains((2.0 * a) as i64));
            let r = default_window(g, bw(2.0), -a, 1).unwrap();
            assert_eq!(r, w.reflected());
        }
    }

    #[test]
    fn flat_weight_hits_quarter_delta_squared() {
        for d in [1.0, 4.0 / 3.0, 1.5, 2.0] {
            for a in [0.0, 0.7, 2.0] {
                let p = ProblemSpec::with_window(
                    SymmetryGroup::U,
                    bw(d),
                    a,
                    1,
                    NodeWindow::centered((a * d).round() as i64, 1601).unwrap(),
                )
                .unwrap();
                let s = variational_value(&p).unwrap();
                let exact = 0.25 / (d * d);
                assert!(s.a_value >= exact * (1.0 - 1e-12));
                assert!((s.a_value / exact - 1.0).abs() < 1e-3, "Δ={d} α={a}: {}", s.a_value);
            }
        }
    }

    #[test]
    fn gram_route_agrees_with_flat_route() {
        // feed the U problem through the dense path
        let p = ProblemSpec::with_window(SymmetryGroup::U, bw(1.5), 0.4, 2, NodeWindow::new(-40, 40).unwrap()).unwrap();
        let gram = assemble_gram(SymmetryGroup::U, p.delta, p.window).unwrap();
        let dense = variational_with_gram(&p, &gram).unwrap();
        let flat = variational_value(&p).unwrap();
        assert!((dense.a_value / flat.a_value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coincidence_at_unit_bandwidth() {
        let w = NodeWindow::new(-100, 100).unwrap();
        let o = variational_value(&ProblemSpec::with_window(SymmetryGroup::O, bw(1.0), 0.5, 1, w).unwrap()).unwrap();
        let e = variational_value(&ProblemSpec::with_window(SymmetryGroup::SoEven, bw(1.0), 0.5, 1, w).unwrap()).unwrap();
        assert!((o.a_value - e.a_value).abs() < 1e-10);
    }

    #[test]
    fn extremizer_interpolates_and_satisfies_constraints() {
        let p = ProblemSpec::with_window(SymmetryGroup::Sp, bw(2.0), 0.3, 2, NodeWindow::new(-30, 30).unwrap()).unwrap();
        let s = variational_value(&p).unwrap();
        let v = s.coeffs.clone().unwrap();
        let xs: Vec<f64> = (-30..=30).map(|n| n as f64 / 2.0).collect();
        let f = extremizer_samples(&s, &p, &xs).unwrap();
        for (a, b) in f.iter().zip(&v) {
            assert!((a - b).abs() < 1e-14);
        }
        let c = moment_constraints(p.delta, p.alpha, p.k, p.window);
        let cv = &c * DVector::from_vec(v.clone());
        assert!(cv.amax() < 1e-10, "{cv}");
        let g = assemble_gram(p.group, p.delta, p.window).unwrap();
        let vv = DVector::from_vec(v);
        assert!((vv.dot(&(&g.entries * &vv)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_problems() {
        let tiny = NodeWindow::new(0, 2).unwrap();
        assert!(ProblemSpec::with_window(SymmetryGroup::U, bw(1.0), 0.0, 2, tiny).is_err());
        assert!(ProblemSpec::with_window(SymmetryGroup::U, bw(1.0), 0.0, 0, tiny).is_err());
        assert!(ProblemSpec::with_window(SymmetryGroup::O, bw(1.0), 0.0, 1, NodeWindow::new(1, 9).unwrap()).is_err());
    }
}

//! Reproducing kernels of the weighted spaces and the first-zero criterion
//! `𝔸 = λ₀²`, `λ₀` the first positive zero of `x ↦ K_G(α + x, α − x)`.
//!
//! Three realizations are available:
//!
//! * closed forms for U and O (a rank-one point-mass update of `K_U`);
//! * a Gram-inverse kernel over a finite sinc window;
//! * a spectral kernel solving the weighted reproducing equation on the
//!   Fourier side by Nyström discretization.
//!
//! In Fourier variables `ξ ∈ I = [−Δ/2, Δ/2]` the weighted inner product is
//! `⟨Hφ, ψ⟩` with `(Hφ)(ξ) = φ(ξ) + (γ/2)∫_{I, |ξ−η|≤1} φ(η) dη + η∫_I φ`,
//! so `K(w, ·)` has transform `H⁻¹ e^{−2πiwξ}`. `H` is smooth away from the
//! points `±Δ/2 + ℤ`, and Gauss panels split there converge spectrally.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Dyn, LU};
use num_complex::Complex64;

use crate::density::SymmetryGroup;
use crate::error::{Error, Result};
use crate::gram::{assemble_gram, NodeWindow, WeightedGram};
use crate::numerics::{first_positive_zero, gauss_legendre};
use crate::paley_wiener::{pw_kernel, pw_kernel_real, sinc_nodes, Bandwidth};
use crate::solution::{Diagnostics, ExtremalSolution, Route};

/// Minimum distance in nodes between a Gram-inverse evaluation point and the window edge.
pub const WINDOW_MARGIN: i64 = 30;

/// `K_O(w, z) = K_U(w, z) − ½ K_U(w, 0) K_U(0, z) / (1 + ½ K_U(0, 0))`.
pub fn kernel_o_closed(delta: Bandwidth, w: Complex64, z: Complex64) -> Complex64 {
    point_mass_kernel(delta, 0.5, w, z)
}

/// Kernel of `dx + μδ₀` on the Paley–Wiener space.
fn point_mass_kernel(delta: Bandwidth, mu: f64, w: Complex64, z: Complex64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let k00 = delta.get();
    pw_kernel(delta, w, z) - mu * pw_kernel(delta, w, zero) * pw_kernel(delta, zero, z) / (1.0 + mu * k00)
}

fn point_mass_kernel_real(delta: Bandwidth, mu: f64, w: f64, z: f64) -> f64 {
    let d = delta.get();
    pw_kernel_real(delta, w, z) - mu * pw_kernel_real(delta, w, 0.0) * pw_kernel_real(delta, 0.0, z) / (1.0 + mu * d)
}

/// `K(w, z) = K_U(w, z) − Δ e(w)ᵀ G_W⁻¹ T e(z)` with `T = G_W − I/Δ`.
///
/// Algebraically this is `e(w)ᵀ G_W⁻¹ e(z)` plus the part of `K_U` outside the
/// window, so it is exact whenever the weight perturbation is confined to the
/// window (the flat weight, and every group when `Δ ≤ 1`).
#[derive(Debug, Clone)]
pub struct GramInverseKernel {
    pub gram: WeightedGram,
    perturbation: DMatrix<f64>,
}

impl GramInverseKernel {
    pub fn new(gram: WeightedGram) -> Self {
        let perturbation = gram.perturbation();
        Self { gram, perturbation }
    }

    fn basis(&self, x: f64) -> Vec<f64> {
        let w = self.gram.window;
        sinc_nodes(self.gram.delta, w.n_min, w.n_max, x)
    }

    pub fn eval(&self, w: f64, z: f64) -> f64 {
        let ew = self.basis(w);
        let ez = self.basis(z);
        let tz = &self.perturbation * nalgebra::DVector::from_vec(ez);
        let y = self.gram.factor.solve(tz.as_slice());
        let corr: f64 = ew.iter().zip(&y).map(|(a, b)| a * b).sum();
        pw_kernel_real(self.gram.delta, w, z) - self.gram.delta.get() * corr
    }

    /// `e(w)ᵀ G_W⁻¹ e(z)`: the kernel of the windowed span itself.
    pub fn eval_plain(&self, w: f64, z: f64) -> f64 {
        let ew = self.basis(w);
        let y = self.gram.factor.solve(&self.basis(z));
        ew.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// Largest `λ` such that `α ± λ` stays [`WINDOW_MARGIN`] nodes inside the window.
    pub fn reach(&self, alpha: f64) -> f64 {
        let d = self.gram.delta.get();
        let w = self.gram.window;
        let lo = (w.n_min + WINDOW_MARGIN) as f64 / d;
        let hi = (w.n_max - WINDOW_MARGIN) as f64 / d;
        (alpha - lo).min(hi - alpha)
    }
}

/// Nyström discretization of the Fourier-side operator `H`.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    lu: LU<f64, Dyn, Dyn>,
    /// Evaluations are resolved for `|w|, |z| ≤ w_max`.
    pub w_max: f64,
}

/// One Gauss panel with barycentric interpolation data.
struct Panel {
    lo: f64,
    hi: f64,
    start: usize,
    rule: (Vec<f64>, Vec<f64>),
    bary: Vec<f64>,
}

impl Panel {
    fn len(&self) -> usize {
        self.rule.0.len()
    }

    fn node(&self, i: usize) -> f64 {
        0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * self.rule.0[i]
    }

    /// Adds `scale ∫_u^v p(η) dη` as weights on the panel values, `p` the
    /// panel interpolant. The interpolant has degree `n − 1`, so the same
    /// `n`-point rule on `[u, v]` integrates it exactly.
    fn add_partial(&self, u: f64, v: f64, scale: f64, row: &mut [f64]) {
        let n = self.len();
        let (x, w) = &self.rule;
        let nodes: Vec<f64> = (0..n).map(|i| self.node(i)).collect();
        let mut ell = vec![0.0; n];
        for q in 0..n {
            let s = 0.5 * (u + v) + 0.5 * (v - u) * x[q];
            let sigma = 0.5 * (v - u) * w[q] * scale;
            if let Some(hit) = nodes.iter().position(|&t| t == s) {
                row[self.start + hit] += sigma;
                continue;
            }
            let mut total = 0.0;
            for i in 0..n {
                ell[i] = self.bary[i] / (s - nodes[i]);
                total += ell[i];
            }
            for i in 0..n {
                row[self.start + i] += sigma * ell[i] / total;
            }
        }
    }
}

/// Panel breakpoints: `{±Δ/2 + m} ∩ (−Δ/2, Δ/2)` plus the endpoints.
fn breakpoints(delta: f64) -> Vec<f64> {
    let h = 0.5 * delta;
    let mut pts = vec![-h, h];
    let span = delta.ceil() as i64 + 1;
    for m in -span..=span {
        for base in [-h, h] {
            let p = base + m as f64;
            if p > -h + 1e-12 && p < h - 1e-12 {
                pts.push(p);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

impl SpectralKernel {
    /// Discretization resolving arguments up to `w_max`; `refine` scales every
    /// panel order (1 is the production setting).
    pub fn new(group: SymmetryGroup, delta: Bandwidth, w_max: f64, refine: f64) -> Result<Self> {
        if !(w_max.is_finite() && w_max >= 0.0 && refine > 0.0) {
            return Err(Error::InvalidInput(format!(
                "spectral kernel needs finite w_max ≥ 0 and refine > 0 (got {w_max}, {refine})"
            )));
        }
        let weight = group.weight();
        let d = delta.get();
        let bps = breakpoints(d);
        let mut panels = Vec::with_capacity(bps.len() - 1);
        let mut start = 0;
        for pair in bps.windows(2) {
            let len = pair[1] - pair[0];
            let n = (refine * (PI * w_max.max(1.0) * len + 30.0)).ceil() as usize;
            let rule = gauss_legendre(n);
            let bary = rule
                .0
                .iter()
                .zip(&rule.1)
                .enumerate()
                .map(|(i, (x, w))| {
                    let s = ((1.0 - x * x) * w).sqrt();
                    if i % 2 == 0 {
                        s
                    } else {
                        -s
                    }
                })
                .collect();
            panels.push(Panel {
                lo: pair[0],
                hi: pair[1],
                start,
                rule,
                bary,
            });
            start += n;
        }
        let total = start;
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for p in &panels {
            let half = 0.5 * (p.hi - p.lo);
            for i in 0..p.len() {
                nodes.push(p.node(i));
                weights.push(half * p.rule.1[i]);
            }
        }

        let mut h = DMatrix::<f64>::zeros(total, total);
        let mut row = vec![0.0; total];
        for j in 0..total {
            row.iter_mut().for_each(|x| *x = 0.0);
            if weight.gamma != 0.0 {
                let g2 = 0.5 * weight.gamma;
                let (a, b) = (nodes[j] - 1.0, nodes[j] + 1.0);
                for p in &panels {
                    let u = p.lo.max(a);
                    let v = p.hi.min(b);
                    if v <= u {
                        continue;
                    }
                    if u == p.lo && v == p.hi {
                        for i in 0..p.len() {
                            row[p.start + i] += g2 * weights[p.start + i];
                        }
                    } else {
                        p.add_partial(u, v, g2, &mut row);
                    }
                }
            }
            if weight.eta != 0.0 {
                for (r, w) in row.iter_mut().zip(&weights) {
                    *r += weight.eta * w;
                }
            }
            row[j] += 1.0;
            for (l, r) in row.iter().enumerate() {
                h[(j, l)] = *r;
            }
        }
        let lu = h.lu();
        if !lu.is_invertible() {
            return Err(Error::Factorization {
                pivot: 0,
                value: 0.0,
            });
        }
        Ok(Self {
            nodes,
            weights,
            lu,
            w_max,
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `K(w, z)` for real arguments.
    pub fn eval(&self, w: f64, z: f64) -> f64 {
        let n = self.nodes.len();
        let mut rhs = DMatrix::<f64>::zeros(n, 2);
        for (j, &xi) in self.nodes.iter().enumerate() {
            let (s, c) = (2.0 * PI * w * xi).sin_cos();
            rhs[(j, 0)] = c;
            rhs[(j, 1)] = s;
        }
        let sol = self.lu.solve(&rhs).expect("factorization checked at construction");
        self.nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(j, (&xi, &om))| {
                let (s, c) = (2.0 * PI * z * xi).sin_cos();
                om * (sol[(j, 0)] * c + sol[(j, 1)] * s)
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
pub enum KernelBacking {
    ClosedFormU,
    ClosedFormO,
    GramInverse(Box<GramInverseKernel>),
    Spectral(Box<SpectralKernel>),
}

/// An evaluator of `K_G(w, z)` on real arguments. Immutable once built.
#[derive(Debug, Clone)]
pub struct KernelSurrogate {
    pub group: SymmetryGroup,
    pub delta: Bandwidth,
    pub backing: KernelBacking,
}

impl KernelSurrogate {
    /// Closed form; only U and O have one.
    pub fn closed_form(group: SymmetryGroup, delta: Bandwidth) -> Result<Self> {
        let backing = match group {
            SymmetryGroup::U => KernelBacking::ClosedFormU,
            SymmetryGroup::O => KernelBacking::ClosedFormO,
            other => {
                return Err(Error::InvalidInput(format!("no closed-form kernel for {other}")));
            }
        };
        Ok(Self { group, delta, backing })
    }

    pub fn spectral(group: SymmetryGroup, delta: Bandwidth, w_max: f64) -> Result<Self> {
        Self::spectral_refined(group, delta, w_max, 1.0)
    }

    pub fn spectral_refined(group: SymmetryGroup, delta: Bandwidth, w_max: f64, refine: f64) -> Result<Self> {
        Ok(Self {
            group,
            delta,
            backing: KernelBacking::Spectral(Box::new(SpectralKernel::new(group, delta, w_max, refine)?)),
        })
    }

    pub fn eval(&self, w: f64, z: f64) -> f64 {
        match &self.backing {
            KernelBacking::ClosedFormU => pw_kernel_real(self.delta, w, z),
            KernelBacking::ClosedFormO => point_mass_kernel_real(self.delta, 0.5, w, z),
            KernelBacking::GramInverse(g) => g.eval(w, z),
            KernelBacking::Spectral(s) => s.eval(w, z),
        }
    }

    /// Largest `λ` for which `K(α ± λ, ·)` is resolved by this surrogate.
    pub fn reach(&self, alpha: f64) -> f64 {
        match &self.backing {
            KernelBacking::ClosedFormU | KernelBacking::ClosedFormO => f64::INFINITY,
            KernelBacking::GramInverse(g) => g.reach(alpha),
            KernelBacking::Spectral(s) => s.w_max - alpha.abs(),
        }
    }

    /// Basis size or quadrature order behind the evaluator.
    pub fn size(&self) -> usize {
        match &self.backing {
            KernelBacking::ClosedFormU | KernelBacking::ClosedFormO => 0,
            KernelBacking::GramInverse(g) => g.gram.dim(),
            KernelBacking::Spectral(s) => s.order(),
        }
    }
}

/// Gram-inverse kernel over `window`.
pub fn kernel_numeric(g: SymmetryGroup, delta: Bandwidth, window: NodeWindow) -> Result<KernelSurrogate> {
    let gram = assemble_gram(g, delta, window)?;
    Ok(KernelSurrogate {
        group: g,
        delta,
        backing: KernelBacking::GramInverse(Box::new(GramInverseKernel::new(gram))),
    })
}

/// Default root scan step: the unitary first zero `1/(2Δ)` is crossed by at least four grid points.
pub fn default_scan_step(delta: Bandwidth) -> f64 {
    (1.0 / (8.0 * delta.get())).min(0.01)
}

/// Default root scan ceiling.
pub fn default_lambda_max(delta: Bandwidth, alpha: f64) -> f64 {
    let d = delta.get();
    (4.0 / d).max(2.0 * alpha.abs() + 4.0 / d)
}

/// Bisection width for kernel roots.
pub const KERNEL_ROOT_TOL: f64 = 1e-13;

/// First positive zero of `x ↦ K(α + x, α − x)` and `𝔸 = λ₀²`.
pub fn extremal_via_kernel(
    g: SymmetryGroup,
    delta: Bandwidth,
    alpha: f64,
    surrogate: &KernelSurrogate,
) -> Result<ExtremalSolution> {
    extremal_via_kernel_tol(g, delta, alpha, surrogate, KERNEL_ROOT_TOL)
}

/// [`extremal_via_kernel`] with an explicit bisection width.
pub fn extremal_via_kernel_tol(
    g: SymmetryGroup,
    delta: Bandwidth,
    alpha: f64,
    surrogate: &KernelSurrogate,
    tol: f64,
) -> Result<ExtremalSolution> {
    if surrogate.group != g || surrogate.delta != delta {
        return Err(Error::InvalidInput(format!(
            "surrogate built for ({}, {}) used for ({g}, {delta})",
            surrogate.group, surrogate.delta
        )));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha = {alpha} is not finite")));
    }
    let reach = surrogate.reach(alpha);
    if let KernelBacking::GramInverse(gi) = &surrogate.backing {
        let w = gi.gram.window;
        if !(w.n_min + WINDOW_MARGIN <= 0 && 0 <= w.n_max - WINDOW_MARGIN) {
            return Err(Error::InvalidWindow {
                n_min: w.n_min,
                n_max: w.n_max,
                reason: format!("the origin needs a {WINDOW_MARGIN}-node margin"),
            });
        }
    }
    let lambda_max = default_lambda_max(delta, alpha).min(reach);
    if !(lambda_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "surrogate does not resolve any neighborhood of α = {alpha}"
        )));
    }
    let f = |x: f64| surrogate.eval(alpha + x, alpha - x);
    let root = first_positive_zero(f, default_scan_step(delta), lambda_max, tol)?;
    let scale = f(0.0).abs().max(f64::MIN_POSITIVE);
    let mut diagnostics = Diagnostics {
        nodes: surrogate.size(),
        residual: f(root.value).abs() / scale,
        tangential: root.tangential,
        ..Default::default()
    };
    if root.tangential {
        diagnostics
            .warnings
            .push(format!("first zero at {} is tangential", root.value));
    }
    Ok(ExtremalSolution::from_lambda0(root.value, 1, Route::Kernel, diagnostics))
}

/// Kernel route with the production surrogate: closed forms for U and O, the
/// spectral kernel otherwise. The spectral discretization is first sized for
/// the unitary root scale and enlarged only if no zero is found there.
pub fn kernel_route(g: SymmetryGroup, delta: Bandwidth, alpha: f64) -> Result<ExtremalSolution> {
    kernel_route_tol(g, delta, alpha, KERNEL_ROOT_TOL)
}

/// [`kernel_route`] with an explicit bisection width.
pub fn kernel_route_tol(g: SymmetryGroup, delta: Bandwidth, alpha: f64, tol: f64) -> Result<ExtremalSolution> {
    if matches!(g, SymmetryGroup::U | SymmetryGroup::O) {
        let s = KernelSurrogate::closed_form(g, delta)?;
        return extremal_via_kernel_tol(g, delta, alpha, &s, tol);
    }
    let d = delta.get();
    let first = alpha.abs() + 4.0 / d;
    let s = KernelSurrogate::spectral(g, delta, first)?;
    match extremal_via_kernel_tol(g, delta, alpha, &s, tol) {
        Err(Error::NoRootInRange { lambda_max }) => {
            let full = alpha.abs() + default_lambda_max(delta, alpha);
            if full <= first {
                return Err(Error::NoRootInRange { lambda_max });
            }
            let s = KernelSurrogate::spectral(g, delta, full)?;
            extremal_via_kernel_tol(g, delta, alpha, &s, tol)
        }
        other => other,
    }
}

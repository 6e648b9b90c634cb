//! Rayleigh quotients restricted to the kernel of a small constraint matrix.
//!
//! Two realizations are provided. [`EliminationBasis`] parametrizes `ker C` by
//! solving the constraints for `k` pivot coordinates; unlike an orthonormal
//! basis it keeps a diagonally graded quadratic form graded. [`diagonal_min`]
//! solves the case of a diagonal numerator and identity denominator exactly,
//! by bisection on the inertia of the `k×k` secular matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numerics::linalg::nullspace_basis;

/// Basis of `ker C` of the form `Z = E_free + E_pivot·P`, where `P = −C_p⁻¹ C_f`.
#[derive(Debug, Clone)]
pub struct EliminationBasis {
    pub dim: usize,
    pub pivots: Vec<usize>,
    pub free: Vec<usize>,
    /// `k × (N − k)`: pivot coordinates as functions of the free ones.
    pub pivot_map: DMatrix<f64>,
}

impl EliminationBasis {
    /// `pivots` must select `k` linearly independent columns of the `k×N` matrix `c`.
    pub fn new(c: &DMatrix<f64>, pivots: &[usize]) -> Result<Self> {
        let k = c.nrows();
        let n = c.ncols();
        if pivots.len() != k {
            return Err(Error::InvalidInput(format!(
                "need {k} pivots, got {}",
                pivots.len()
            )));
        }
        if k >= n {
            return Err(Error::TrivialNullspace { rank: k, dim: n });
        }
        let mut is_pivot = vec![false; n];
        for &p in pivots {
            if p >= n || is_pivot[p] {
                return Err(Error::InvalidInput(format!("bad pivot index {p}")));
            }
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..n).filter(|i| !is_pivot[*i]).collect();
        let cp = DMatrix::from_fn(k, k, |r, j| c[(r, pivots[j])]);
        let cf = DMatrix::from_fn(k, free.len(), |r, j| c[(r, free[j])]);
        let lu = cp.lu();
        let solved = lu.solve(&cf).ok_or(Error::TrivialNullspace { rank: k, dim: n })?;
        if solved.iter().any(|x| !x.is_finite()) {
            return Err(Error::TrivialNullspace { rank: k, dim: n });
        }
        Ok(Self {
            dim: n,
            pivots: pivots.to_vec(),
            free,
            pivot_map: -solved,
        })
    }

    pub fn ncols(&self) -> usize {
        self.free.len()
    }

    /// Full coordinates `Z y`.
    pub fn expand(&self, y: &[f64]) -> DVector<f64> {
        let mut v = DVector::<f64>::zeros(self.dim);
        for (j, &f) in self.free.iter().enumerate() {
            v[f] = y[j];
        }
        let p = &self.pivot_map * DVector::from_column_slice(y);
        for (r, &piv) in self.pivots.iter().enumerate() {
            v[piv] = p[r];
        }
        v
    }

    /// `Zᵀ A Z` for symmetric `A`, in `O(N²k)`.
    pub fn project(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let nf = self.free.len();
        let k = self.pivots.len();
        let aff = DMatrix::from_fn(nf, nf, |i, j| a[(self.free[i], self.free[j])]);
        let apf = DMatrix::from_fn(k, nf, |i, j| a[(self.pivots[i], self.free[j])]);
        let app = DMatrix::from_fn(k, k, |i, j| a[(self.pivots[i], self.pivots[j])]);
        let p = &self.pivot_map;
        let cross = p.transpose() * &apf;
        let mut out = aff + &cross + cross.transpose() + p.transpose() * app * p;
        // exact symmetry
        for i in 0..nf {
            for j in 0..i {
                let s = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

/// Solution of `min vᵀ diag(a) v / vᵀ v` over `C v = 0`.
#[derive(Debug, Clone)]
pub struct DiagonalMin {
    pub value: f64,
    /// Unit-norm minimizer.
    pub vector: DVector<f64>,
    pub bisection_steps: usize,
}

/// Number of constrained eigenvalues strictly below `lambda`, from the inertia
/// of the bordered matrix `[[diag(a) − λ, Cᵀ], [C, 0]]`:
/// `#neg = #{a_n < λ} + #pos(M(λ))`, `M(λ) = Σ c_n c_nᵀ / (a_n − λ)`.
fn count_below(a: &[f64], c: &DMatrix<f64>, lambda: f64) -> usize {
    let k = c.nrows();
    let mut below = 0usize;
    let mut m = DMatrix::<f64>::zeros(k, k);
    for (n, &an) in a.iter().enumerate() {
        if an < lambda {
            below += 1;
        }
        let w = 1.0 / (an - lambda);
        for i in 0..k {
            let ci = c[(i, n)] * w;
            for j in 0..=i {
                m[(i, j)] += ci * c[(j, n)];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            m[(j, i)] = m[(i, j)];
        }
    }
    // congruence by the diagonal keeps the inertia and balances the rows
    let scale: Vec<f64> = (0..k)
        .map(|i| {
            let d = m[(i, i)].abs();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let ms = DMatrix::from_fn(k, k, |i, j| m[(i, j)] * scale[i] * scale[j]);
    let positive = SymmetricEigen::new(ms)
        .eigenvalues
        .iter()
        .filter(|e| **e > 0.0)
        .count();
    (below + positive).saturating_sub(k)
}

fn nudge_off_poles(a: &[f64], lambda: f64) -> f64 {
    let mut l = lambda;
    for _ in 0..8 {
        if a.iter().all(|&x| x != l) {
            return l;
        }
        l = l * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE;
    }
    l
}

/// Exact minimization of a diagonal Rayleigh quotient on `ker C` (`C` is `k×N`).
pub fn diagonal_min(a: &[f64], c: &DMatrix<f64>) -> Result<DiagonalMin> {
    let n = a.len();
    let k = c.nrows();
    if c.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "constraint has {} columns for {} unknowns",
            c.ncols(),
            n
        )));
    }
    if k >= n {
        return Err(Error::TrivialNullspace { rank: k, dim: n });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite diagonal".into()));
    }
    let mut sorted = a.to_vec();
    sorted.sort_by(f64::total_cmp);
    // interlacing: a_(1) ≤ λ_min ≤ a_(k+1)
    let mut lo = sorted[0];
    let mut hi = sorted[k];
    if hi > lo {
        let widen = hi.abs().max(1.0) * 1e-12;
        hi += widen;
        if count_below(a, c, nudge_off_poles(a, hi)) == 0 {
            return Err(Error::InvalidInput("interlacing bracket failed".into()));
        }
    }
    let mut steps = 0;
    while hi - lo > 4.0 * f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) && steps < 400 {
        let mid = nudge_off_poles(a, 0.5 * (lo + hi));
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(a, c, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    let value = 0.5 * (lo + hi);
    let vector = diagonal_minimizer(a, c, value)?;
    Ok(DiagonalMin {
        value,
        vector,
        bisection_steps: steps,
    })
}

fn diagonal_minimizer(a: &[f64], c: &DMatrix<f64>, value: f64) -> Result<DVector<f64>> {
    let n = a.len();
    let k = c.nrows();
    let tol = 1e-9 * value.abs().max(1e-300);
    let cluster: Vec<usize> = (0..n).filter(|&i| (a[i] - value).abs() <= tol).collect();
    if !cluster.is_empty() {
        let sub = DMatrix::from_fn(k, cluster.len(), |r, j| c[(r, cluster[j])]);
        if let Ok(z) = nullspace_basis(&sub) {
            let mut v = DVector::<f64>::zeros(n);
            for (j, &i) in cluster.iter().enumerate() {
                v[i] = z[(j, 0)];
            }
            return Ok(&v / v.norm());
        }
    }
    // stationarity: v = (diag(a) − λ)⁻¹ Cᵀ μ with M(λ) μ = 0
    let lambda = nudge_off_poles(a, value);
    let mut m = DMatrix::<f64>::zeros(k, k);
    for (idx, &an) in a.iter().enumerate() {
        let w = 1.0 / (an - lambda);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] += c[(i, idx)] * c[(j, idx)] * w;
            }
        }
    }
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .expect("k ≥ 1");
    let mu = eig.eigenvectors.column(idx);
    let mut v = DVector::<f64>::zeros(n);
    for (i, &an) in a.iter().enumerate() {
        let s: f64 = (0..k).map(|r| c[(r, i)] * mu[r]).sum();
        v[i] = s / (an - lambda);
    }
    let norm = v.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        });
    }
    Ok(v / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::smallest_generalized_eig;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn dense_reference(a: &[f64], c: &DMatrix<f64>) -> f64 {
        let z = nullspace_basis(c).unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(a));
        let m = z.transpose() * d * &z;
        let i = DMatrix::<f64>::identity(z.ncols(), z.ncols());
        smallest_generalized_eig(&m, &i).unwrap().value
    }

    #[test]
    fn matches_dense_route_on_random_instances() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..30 {
            let n = rng.random_range(4..30);
            let k = rng.random_range(1..4.min(n - 1));
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
            let c = DMatrix::<f64>::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
            let exact = diagonal_min(&a, &c).unwrap();
            let dense = dense_reference(&a, &c);
            assert!((exact.value - dense).abs() < 1e-10 * dense.max(1.0), "{} vs {dense}", exact.value);
            assert!((&c * &exact.vector).norm() < 1e-8);
            let q: f64 = exact.vector.iter().zip(&a).map(|(v, a)| v * v * a).sum();
            assert!((q - exact.value).abs() < 1e-8 * exact.value.max(1.0));
        }
    }

    #[test]
    fn attained_on_a_cluster() {
        // two equal diagonal entries and the constraint v0 + v1 + v2 = 0
        let a = [1.0, 1.0, 9.0];
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let r = diagonal_min(&a, &c).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        assert!(r.vector[2].abs() < 1e-12);
    }

    #[test]
    fn elimination_basis_spans_kernel() {
        let mut rng = StdRng::seed_from_u64(2);
        let c = DMatrix::<f64>::from_fn(2, 9, |_, _| rng.random_range(-1.0..1.0));
        let basis = EliminationBasis::new(&c, &[3, 5]).unwrap();
        assert_eq!(basis.ncols(), 7);
        for j in 0..7 {
            let mut y = vec![0.0; 7];
            y[j] = 1.0;
            let v = basis.expand(&y);
            assert!((&c * v).norm() < 1e-13);
        }
        let a = DMatrix::<f64>::from_fn(9, 9, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let projected = basis.project(&a);
        let mut z = DMatrix::<f64>::zeros(9, 7);
        for j in 0..7 {
            let mut y = vec![0.0; 7];
            y[j] = 1.0;
            z.set_column(j, &basis.expand(&y));
        }
        assert!((projected - z.transpose() * a * z).norm() < 1e-13);
    }
}

//! Dense symmetric linear algebra: Cholesky with pivot diagnostics, generalized
//! symmetric eigenproblems, nullspace bases and a reorthogonalized Lanczos
//! iteration for extreme eigenpairs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Upper-triangular Cholesky factor `U` with `A = UᵀU`.
///
/// Stored column-major so that every inner product in the factorization and in
/// the triangular solves runs over a contiguous column slice.
#[derive(Debug, Clone)]
pub struct Cholesky {
    u: DMatrix<f64>,
}

impl Cholesky {
    /// Factors a symmetric positive definite matrix. Only the upper triangle is read.
    ///
    /// Right-looking and blocked: each diagonal block is factored directly,
    /// the block row beside it by triangular substitution, and the trailing
    /// matrix is updated with one matrix product per block.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "cholesky needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut u = a.clone();
        let mut kb = 0;
        while kb < n {
            let nb = BLOCK.min(n - kb);
            let ke = kb + nb;
            factor_diagonal_block(&mut u, kb, nb)?;
            if ke < n {
                let u11 = u.view((kb, kb), (nb, nb)).upper_triangle();
                let a12 = u.view((kb, ke), (nb, n - ke)).clone_owned();
                let x = u11
                    .tr_solve_upper_triangular(&a12)
                    .ok_or(Error::Factorization { pivot: kb, value: 0.0 })?;
                u.view_mut((kb, ke), (nb, n - ke)).copy_from(&x);
                let xt = x.transpose();
                u.view_mut((ke, ke), (n - ke, n - ke)).gemm(-1.0, &xt, &x, 1.0);
            }
            kb = ke;
        }
        for j in 0..n {
            for i in j + 1..n {
                u[(i, j)] = 0.0;
            }
        }
        Ok(Self { u })
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn upper(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// Smallest diagonal entry of `U`, squared. A cheap conditioning proxy.
    pub fn min_pivot(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.u[(i, i)] * self.u[(i, i)])
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `Uᵀ y = b` in place.
    pub fn solve_upper_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let data = self.u.as_slice();
        for i in 0..n {
            let col = &data[i * n..i * n + i];
            let s = b[i] - dot(col, &b[..i]);
            b[i] = s / data[i * n + i];
        }
    }

    /// Solves `U x = y` in place.
    pub fn solve_upper_in_place(&self, y: &mut [f64]) {
        let n = self.dim();
        let data = self.u.as_slice();
        for j in (0..n).rev() {
            let xj = y[j] / data[j * n + j];
            y[j] = xj;
            let col = &data[j * n..j * n + j];
            for (yi, ui) in y[..j].iter_mut().zip(col) {
                *yi -= xj * ui;
            }
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_upper_transpose_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `U⁻ᵀ A U⁻¹` for a symmetric `A`, symmetrized.
    pub fn congruence_inverse(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut y = a.clone();
        for j in 0..n {
            self.solve_upper_transpose_in_place(y.column_mut(j).as_mut_slice());
        }
        let mut x = y.transpose();
        for j in 0..n {
            self.solve_upper_transpose_in_place(x.column_mut(j).as_mut_slice());
        }
        (&x + x.transpose()) * 0.5
    }
}

const BLOCK: usize = 64;

/// Unblocked factorization of the diagonal block at `(k0, k0)`, in place.
fn factor_diagonal_block(u: &mut DMatrix<f64>, k0: usize, nb: usize) -> Result<()> {
    let n = u.nrows();
    for j in k0..k0 + nb {
        for i in k0..=j {
            let s = {
                let data = u.as_slice();
                let ci = &data[i * n + k0..i * n + i];
                let cj = &data[j * n + k0..j * n + i];
                data[j * n + i] - dot(ci, cj)
            };
            if i < j {
                let d = u[(i, i)];
                u[(i, j)] = s / d;
            } else {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::Factorization { pivot: j, value: s });
                }
                u[(j, j)] = s.sqrt();
            }
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest eigenpair of a symmetric-definite pencil.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub value: f64,
    pub vector: DVector<f64>,
    /// `‖M v − value·N v‖ / ‖v‖`.
    pub residual_norm: f64,
}

fn pencil_residual(m: &DMatrix<f64>, n: &DMatrix<f64>, value: f64, v: &DVector<f64>) -> f64 {
    let r = m * v - n * v * value;
    r.norm() / v.norm()
}

/// Minimal `λ` with `M v = λ N v`, by Cholesky reduction of `N` and a dense
/// symmetric eigensolve.
pub fn smallest_generalized_eig(m: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<EigResult> {
    check_pencil(m, n)?;
    let chol = Cholesky::new(n)?;
    let reduced = chol.congruence_inverse(m);
    let eig = SymmetricEigen::new(reduced);
    let (idx, value) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidInput("empty pencil".into()))?;
    let mut v = eig.eigenvectors.column(idx).into_owned();
    chol.solve_upper_in_place(v.as_mut_slice());
    let residual_norm = pencil_residual(m, n, value, &v);
    Ok(EigResult {
        value,
        vector: v,
        residual_norm,
    })
}

/// Minimal `λ` with `M v = λ N v` for `M` positive definite, computed as the
/// reciprocal of the largest eigenvalue of `U⁻ᵀ N U⁻¹` (`M = UᵀU`).
///
/// The largest eigenvalue of a symmetric matrix is obtained to working
/// precision relative to itself, so this keeps full relative accuracy when the
/// spectrum of `M` spans many orders of magnitude (diagonally graded `M`).
pub fn smallest_generalized_eig_graded(m: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<EigResult> {
    check_pencil(m, n)?;
    let chol = Cholesky::new(m)?;
    let dim = m.nrows();
    let apply = |x: &[f64], out: &mut [f64]| {
        let mut y = x.to_vec();
        chol.solve_upper_in_place(&mut y);
        let ny = n * DVector::from_column_slice(&y);
        out.copy_from_slice(ny.as_slice());
        chol.solve_upper_transpose_in_place(out);
    };
    let top = lanczos_largest(dim, apply, 1e-13)?;
    if !(top.value > 0.0) {
        return Err(Error::InvalidInput(
            "denominator form is not positive on the subspace".into(),
        ));
    }
    let value = 1.0 / top.value;
    let mut v = top.vector;
    chol.solve_upper_in_place(v.as_mut_slice());
    let residual_norm = pencil_residual(m, n, value, &v);
    Ok(EigResult {
        value,
        vector: v,
        residual_norm,
    })
}

fn check_pencil(m: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || n.nrows() != n.ncols() || m.nrows() != n.nrows() {
        return Err(Error::InvalidInput(format!(
            "pencil dimensions differ: {}x{} vs {}x{}",
            m.nrows(),
            m.ncols(),
            n.nrows(),
            n.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidInput("empty pencil".into()));
    }
    Ok(())
}

/// Largest eigenpair of a symmetric operator given as a matrix-vector product.
#[derive(Debug, Clone)]
pub struct TopEigen {
    pub value: f64,
    pub vector: DVector<f64>,
    pub residual: f64,
}

/// Lanczos with full reorthogonalization and explicit restarts from the
/// current Ritz vector. Deterministic start vector.
pub fn lanczos_largest<F>(dim: usize, apply: F, rel_tol: f64) -> Result<TopEigen>
where
    F: Fn(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Err(Error::InvalidInput("empty operator".into()));
    }
    let max_basis = dim.min(120);
    let max_restarts = 30;
    let mut start: Vec<f64> = (0..dim)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_749_894_9).sin())
        .collect();
    let mut last_residual = f64::INFINITY;
    let mut ax = vec![0.0; dim];

    for _ in 0..max_restarts {
        normalize(&mut start);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut best: Option<(f64, DVector<f64>, f64)> = None;

        for j in 0..max_basis {
            apply(&basis[j], &mut ax);
            let a = dot(&ax, &basis[j]);
            alpha.push(a);
            let mut w = ax.clone();
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let b = dot(&w, &w).sqrt();

            let m = alpha.len();
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (idx, theta) = eig
                .eigenvalues
                .iter()
                .copied()
                .enumerate()
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("non-empty tridiagonal");
            let s = eig.eigenvectors.column(idx).into_owned();
            let residual = (b * s[m - 1]).abs();
            best = Some((theta, s, residual));

            let scale = theta.abs().max(f64::MIN_POSITIVE);
            if residual <= rel_tol * scale || b <= f64::EPSILON * scale || m == dim {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }

        let (theta, s, residual) = best.expect("at least one Lanczos step");
        let mut ritz = vec![0.0; dim];
        for (coef, q) in s.iter().zip(&basis) {
            for (ri, qi) in ritz.iter_mut().zip(q) {
                *ri += coef * qi;
            }
        }
        normalize(&mut ritz);
        // true residual of the Ritz pair
        apply(&ritz, &mut ax);
        let true_res = ax
            .iter()
            .zip(&ritz)
            .map(|(a, r)| (a - theta * r).powi(2))
            .sum::<f64>()
            .sqrt();
        last_residual = true_res.max(residual);
        if true_res <= 10.0 * rel_tol * theta.abs().max(f64::MIN_POSITIVE)
            || basis.len() == dim
        {
            return Ok(TopEigen {
                value: theta,
                vector: DVector::from_vec(ritz),
                residual: true_res,
            });
        }
        start = ritz;
    }
    Err(Error::NoConvergence {
        iterations: max_restarts * max_basis,
        residual: last_residual,
    })
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Orthonormal basis of `ker C`, with numerical rank taken at `1e-10·‖C‖₂`.
pub fn nullspace_basis(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = c.ncols();
    if n == 0 {
        return Err(Error::InvalidInput("constraint matrix has no columns".into()));
    }
    let rank_basis = if c.nrows() == 0 {
        DMatrix::<f64>::zeros(n, 0)
    } else {
        let svd = c.clone().svd(false, true);
        let sigma_max = svd.singular_values.max();
        let vt = svd.v_t.expect("requested V^T");
        let keep: Vec<usize> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| sigma_max > 0.0 && **s > 1e-10 * sigma_max)
            .map(|(i, _)| i)
            .collect();
        let mut vr = DMatrix::<f64>::zeros(n, keep.len());
        for (col, &i) in keep.iter().enumerate() {
            vr.set_column(col, &vt.row(i).transpose());
        }
        vr
    };
    let r = rank_basis.ncols();
    if r >= n {
        return Err(Error::TrivialNullspace { rank: r, dim: n });
    }
    Ok(orthogonal_complement(&rank_basis))
}

/// Trailing `n − r` columns of the full Householder `Q` of an `n×r` matrix
/// with orthonormal columns.
fn orthogonal_complement(v: &DMatrix<f64>) -> DMatrix<f64> {
    let n = v.nrows();
    let r = v.ncols();
    let mut work = v.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(r);
    for j in 0..r {
        let x: Vec<f64> = (j..n).map(|i| work[(i, j)]).collect();
        let norm = dot(&x, &x).sqrt();
        let mut h = x.clone();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        h[0] -= alpha;
        let hn = dot(&h, &h).sqrt();
        if hn > 0.0 {
            h.iter_mut().for_each(|e| *e /= hn);
        }
        for col in j..r {
            let s: f64 = (j..n).map(|i| h[i - j] * work[(i, col)]).sum();
            for i in j..n {
                work[(i, col)] -= 2.0 * s * h[i - j];
            }
        }
        reflectors.push(h);
    }
    let mut q = DMatrix::<f64>::zeros(n, n - r);
    for col in 0..n - r {
        let mut e = vec![0.0; n];
        e[r + col] = 1.0;
        for (j, h) in reflectors.iter().enumerate().rev() {
            let s: f64 = (j..n).map(|i| h[i - j] * e[i]).sum();
            for i in j..n {
                e[i] -= 2.0 * s * h[i - j];
            }
        }
        q.set_column(col, &DVector::from_vec(e));
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_spd(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::<f64>::identity(n, n) * 0.5
    }

    fn random_sym(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn cholesky_reconstructs_and_solves() {
        let mut rng = StdRng::seed_from_u64(7);
        let a = random_spd(&mut rng, 12);
        let c = Cholesky::new(&a).unwrap();
        let u = c.upper();
        assert!((u.transpose() * u - &a).norm() < 1e-12);
        let b: Vec<f64> = (0..12).map(|i| i as f64 - 3.0).collect();
        let x = c.solve(&b);
        let r = &a * DVector::from_vec(x) - DVector::from_vec(b);
        assert!(r.norm() < 1e-11);
    }

    #[test]
    fn cholesky_reports_pivot() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]);
        match Cholesky::new(&a) {
            Err(Error::Factorization { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blocked_factor_spans_several_blocks() {
        let mut rng = StdRng::seed_from_u64(21);
        let n = 3 * BLOCK + 17;
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &b * b.transpose() + DMatrix::<f64>::identity(n, n) * (n as f64);
        let c = Cholesky::new(&a).unwrap();
        let u = c.upper();
        assert!((u.transpose() * u - &a).amax() < 1e-10 * a.amax());
        let reference = a.clone().cholesky().unwrap().l();
        assert!((reference.transpose() - u).amax() < 1e-10);

        let mut bad = DMatrix::<f64>::identity(n, n);
        bad[(150, 150)] = -1.0;
        match Cholesky::new(&bad) {
            Err(Error::Factorization { pivot, .. }) => assert_eq!(pivot, 150),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagonal_pencil() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let n = DMatrix::<f64>::identity(3, 3);
        let r = smallest_generalized_eig(&m, &n).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        let v = &r.vector / r.vector.norm();
        assert!((v[1].abs() - 1.0).abs() < 1e-12);
        assert!(v[0].abs() < 1e-12 && v[2].abs() < 1e-12);
    }

    #[test]
    fn proportional_pencil() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = random_spd(&mut rng, 6);
        let m = &n * 2.0;
        let r = smallest_generalized_eig(&m, &n).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let g = smallest_generalized_eig_graded(&m, &n).unwrap();
        assert!((g.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_upper_bound() {
        let mut rng = StdRng::seed_from_u64(3);
        let m = random_sym(&mut rng, 8);
        let n = random_spd(&mut rng, 8);
        let r = smallest_generalized_eig(&m, &n).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..1_000_000 {
            let v = DVector::<f64>::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
            let q = v.dot(&(&m * &v)) / v.dot(&(&n * &v));
            best = best.min(q);
        }
        assert!(r.value <= best + 1e-12, "{} > {}", r.value, best);
        assert!(r.residual_norm <= 1e-8 * m.norm());
    }

    #[test]
    fn graded_matches_dense_on_random_pencils() {
        let mut rng = StdRng::seed_from_u64(5);
        for n in [5usize, 17, 40] {
            let m = random_spd(&mut rng, n);
            let b = random_spd(&mut rng, n);
            let d = smallest_generalized_eig(&m, &b).unwrap();
            let g = smallest_generalized_eig_graded(&m, &b).unwrap();
            assert!((d.value - g.value).abs() <= 1e-10 * d.value.abs(), "{} {}", d.value, g.value);
            assert!(g.residual_norm <= 1e-8 * m.norm());
        }
    }

    #[test]
    fn graded_keeps_relative_accuracy() {
        // diag(1, 10^3, ..., 10^15) against the identity: smallest eigenvalue 1
        let diag: Vec<f64> = (0..6).map(|i| 10f64.powi(3 * i)).collect();
        let m = DMatrix::from_diagonal(&DVector::from_vec(diag));
        let n = DMatrix::<f64>::identity(6, 6);
        let g = smallest_generalized_eig_graded(&m, &n).unwrap();
        assert!((g.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn restriction_never_lowers_minimum() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..20 {
            let m = random_sym(&mut rng, 10);
            let n = random_spd(&mut rng, 10);
            let full = smallest_generalized_eig(&m, &n).unwrap().value;
            let k = rng.random_range(2..10);
            let sub = smallest_generalized_eig(
                &m.view((0, 0), (k, k)).into_owned(),
                &n.view((0, 0), (k, k)).into_owned(),
            )
            .unwrap()
            .value;
            assert!(sub >= full - 1e-12);
        }
    }

    #[test]
    fn nullspace_examples() {
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let z = nullspace_basis(&c).unwrap();
        assert_eq!(z.ncols(), 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((z[(0, 0)].abs() - s).abs() < 1e-14);
        assert!((z[(0, 0)] + z[(1, 0)]).abs() < 1e-14);

        let z0 = nullspace_basis(&DMatrix::<f64>::zeros(2, 4)).unwrap();
        assert_eq!(z0.ncols(), 4);
        assert!((z0.transpose() * &z0 - DMatrix::<f64>::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn nullspace_random_full_rank() {
        let mut rng = StdRng::seed_from_u64(21);
        let c = DMatrix::<f64>::from_fn(3, 10, |_, _| rng.random_range(-1.0..1.0));
        let z = nullspace_basis(&c).unwrap();
        assert_eq!(z.ncols(), 7);
        assert!((&c * &z).norm() <= 1e-12);
        assert!((z.transpose() * &z - DMatrix::<f64>::identity(7, 7)).norm() <= 1e-12);
    }

    #[test]
    fn nullspace_rejects_full_rank_square() {
        let c = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(
            nullspace_basis(&c),
            Err(Error::TrivialNullspace { rank: 3, dim: 3 })
        ));
    }
}

//! Lowest eigenpairs of the assembled operators.
//!
//! Small problems are solved densely. Larger symmetric ones use block
//! inverse iteration on `A - σI` with `σ` below the spectrum (so the shifted
//! matrix is SPD and admits a banded Cholesky factor), with a Rayleigh–Ritz
//! step every sweep so that multiple eigenvalues are resolved cleanly.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm, orthonormalize, BandCholesky, CsrMatrix, NotPositiveDefinite};
use crate::operator::OperatorMatrix;

/// Problems up to this size are solved densely.
pub const DENSE_LIMIT: usize = 3000;
pub const MAX_PAIRS: usize = 6;
pub const MAX_ITERATIONS: usize = 500;
/// Residuals are certified against `RESIDUAL_FACTOR·‖A‖∞`.
pub const RESIDUAL_FACTOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("requested {k} eigenpairs, at most {MAX_PAIRS} are supported")]
    TooManyPairs { k: usize },
    #[error("requested {k} eigenpairs of a {n}x{n} operator")]
    NotEnoughUnknowns { k: usize, n: usize },
    #[error("full decomposition of a {n}x{n} operator exceeds the dense limit")]
    TooLarge { n: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("ground state changes sign (value {value:e} at node {node})")]
    PerronFailure { node: usize, value: f64 },
    #[error("ground state is not simple (lambda0 = {lambda0}, lambda1 = {lambda1})")]
    DegenerateGround { lambda0: f64, lambda1: f64 },
    #[error("operator is not symmetric")]
    NotSymmetric,
    #[error("eigenvalue {index} is complex (imaginary part {imag:e})")]
    ComplexEigenvalue { index: usize, imag: f64 },
    #[error(transparent)]
    Factorization(#[from] NotPositiveDefinite),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Dense,
    SubspaceIteration { iterations: usize },
    DenseNonsymmetric,
}

/// Lowest eigenpairs `λ₀ ≤ λ₁ ≤ …` of `A`, with eigenfunctions normalized so
/// that `Σ φ² hⁿ = 1` and the largest entry of each positive.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
    /// `‖Aφ - λφ‖₂ / ‖φ‖₂`.
    pub residuals: Vec<f64>,
    pub cell_volume: f64,
    pub matrix_norm: f64,
    pub method: SolveMethod,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn ground_state(&self) -> &[f64] {
        &self.eigenfunctions[0]
    }

    pub fn gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }

    /// Discrete inner product `Σ u v hⁿ`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, v) * self.cell_volume
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    pub fn certified(&self) -> bool {
        self.max_residual() <= RESIDUAL_FACTOR * self.matrix_norm
    }
}

/// The `k` smallest eigenpairs of a symmetric operator. The ground state is
/// sign-normalized and must be strictly positive.
pub fn smallest_eigenpairs(op: &OperatorMatrix, k: usize) -> Result<SpectralResult, EigenError> {
    if k > MAX_PAIRS {
        return Err(EigenError::TooManyPairs { k });
    }
    let n = op.dim();
    if k == 0 || k > n {
        return Err(EigenError::NotEnoughUnknowns { k, n });
    }
    if !op.symmetric || op.matrix.asymmetry() > 0.0 {
        return Err(EigenError::NotSymmetric);
    }
    let (values, vectors, method) = if n <= DENSE_LIMIT {
        let (v, w) = dense_lowest(&op.matrix, k);
        (v, w, SolveMethod::Dense)
    } else {
        let (v, w, it) = subspace_iteration(&op.matrix, k, op.length_scale)?;
        (v, w, SolveMethod::SubspaceIteration { iterations: it })
    };
    finish(op, values, vectors, method)
}

/// Every eigenpair of a symmetric operator (dense, `N ≤ DENSE_LIMIT`).
pub fn full_decomposition(op: &OperatorMatrix) -> Result<SpectralResult, EigenError> {
    let n = op.dim();
    if n > DENSE_LIMIT {
        return Err(EigenError::TooLarge { n });
    }
    if !op.symmetric || op.matrix.asymmetry() > 0.0 {
        return Err(EigenError::NotSymmetric);
    }
    let (v, w) = dense_lowest(&op.matrix, n);
    finish(op, v, w, SolveMethod::Dense)
}

/// Lowest eigenpairs of a Neumann drift operator, mapped back to
/// eigenfunctions of the drift Laplacian. Symmetrized operators go through
/// [`smallest_eigenpairs`]; general drifts are solved densely and their
/// eigenvalues must be real.
pub fn drift_eigenpairs(op: &OperatorMatrix, k: usize) -> Result<SpectralResult, EigenError> {
    if op.symmetric {
        let mut res = smallest_eigenpairs(op, k)?;
        if let Some(c) = &op.conjugation {
            for f in res.eigenfunctions.iter_mut() {
                f.iter_mut().zip(c).for_each(|(v, ci)| *v *= ci);
                normalize(f, op.cell_volume);
            }
        }
        return Ok(res);
    }
    nonsymmetric_lowest(op, k)
}

fn dense_lowest(a: &CsrMatrix, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(a.to_dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order.truncate(k);
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

fn subspace_iteration(
    a: &CsrMatrix,
    k: usize,
    length_scale: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, usize), EigenError> {
    let n = a.dim();
    let p = (k + 6).min(n);
    let scale = (std::f64::consts::PI / length_scale).powi(2);
    let sigma = a.gershgorin_lower() - scale;
    let chol = BandCholesky::factor(&a.shifted(-sigma))?;
    let tol = RESIDUAL_FACTOR * a.norm_inf();

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut block: Vec<Vec<f64>> = (0..p)
        .map(|c| {
            (0..n)
                .map(|_| {
                    if c == 0 {
                        1.0
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect();
    let mut worst = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        for v in block.iter_mut() {
            chol.solve_in_place(v);
        }
        orthonormalize(&mut block);
        let av: Vec<Vec<f64>> = block.iter().map(|v| a.mul_vec(v)).collect();
        let h = DMatrix::from_fn(p, p, |i, j| {
            0.5 * (dot(&block[i], &av[j]) + dot(&block[j], &av[i]))
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let combine = |src: &[Vec<f64>], col: usize| {
            let mut out = vec![0.0; n];
            for (r, s) in src.iter().enumerate() {
                let y = eig.eigenvectors[(r, col)];
                out.iter_mut().zip(s).for_each(|(o, si)| *o += y * si);
            }
            out
        };
        let ritz: Vec<Vec<f64>> = order.iter().map(|&c| combine(&block, c)).collect();
        worst = 0.0;
        for (m, &c) in order.iter().take(k).enumerate() {
            let aq = combine(&av, c);
            let theta = eig.eigenvalues[c];
            let r: Vec<f64> = aq
                .iter()
                .zip(&ritz[m])
                .map(|(x, y)| x - theta * y)
                .collect();
            worst = worst.max(norm(&r));
        }
        block = ritz;
        if worst <= tol {
            let values = order.iter().take(k).map(|&c| eig.eigenvalues[c]).collect();
            block.truncate(k);
            return Ok((values, block, it));
        }
    }
    Err(EigenError::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: worst,
    })
}

fn nonsymmetric_lowest(op: &OperatorMatrix, k: usize) -> Result<SpectralResult, EigenError> {
    let n = op.dim();
    if n > DENSE_LIMIT {
        return Err(EigenError::TooLarge { n });
    }
    if k > MAX_PAIRS {
        return Err(EigenError::TooManyPairs { k });
    }
    let dense = op.matrix.to_dense();
    let norm_inf = op.norm_inf();
    let ev = dense.complex_eigenvalues();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ev[i].re.total_cmp(&ev[j].re));
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for (index, &i) in order.iter().take(k).enumerate() {
        if ev[i].im.abs() > 1e-8 * norm_inf {
            return Err(EigenError::ComplexEigenvalue {
                index,
                imag: ev[i].im,
            });
        }
        let lambda = ev[i].re;
        // Inverse iteration with a slightly perturbed shift.
        let shift = lambda + 1e-10 * norm_inf.max(1.0);
        let lu = (&dense - DMatrix::identity(n, n) * shift).lu();
        let mut v = nalgebra::DVector::from_element(n, 1.0);
        for _ in 0..4 {
            if let Some(w) = lu.solve(&v) {
                v = &w / w.norm();
            }
        }
        values.push(lambda);
        vectors.push(v.iter().copied().collect());
    }
    finish(op, values, vectors, SolveMethod::DenseNonsymmetric)
}

fn normalize(v: &mut [f64], cell_volume: f64) {
    let nv = (dot(v, v) * cell_volume).sqrt();
    let mut big = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[big].abs() {
            big = i;
        }
    }
    let s = if v[big] < 0.0 { -1.0 / nv } else { 1.0 / nv };
    v.iter_mut().for_each(|x| *x *= s);
}

fn finish(
    op: &OperatorMatrix,
    mut values: Vec<f64>,
    mut vectors: Vec<Vec<f64>>,
    method: SolveMethod,
) -> Result<SpectralResult, EigenError> {
    for v in vectors.iter_mut() {
        normalize(v, op.cell_volume);
    }
    if op.symmetric {
        // The energy form keeps full relative accuracy for the small
        // eigenvalues; the Rayleigh quotient error is quadratic in the
        // eigenvector error.
        for (lam, v) in values.iter_mut().zip(&vectors) {
            *lam = op.matrix.energy(v) / dot(v, v);
        }
    }
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(lam, v)| {
            let av = op.matrix.mul_vec(v);
            let r: Vec<f64> = av.iter().zip(v.iter()).map(|(x, y)| x - lam * y).collect();
            norm(&r) / norm(v)
        })
        .collect();
    if let Some((node, &value)) = vectors[0].iter().enumerate().find(|(_, x)| **x <= 0.0) {
        return Err(EigenError::PerronFailure { node, value });
    }
    if values.len() > 1 && values[1] - values[0] <= 1e-10 * values[1].abs().max(1.0) {
        return Err(EigenError::DegenerateGround {
            lambda0: values[0],
            lambda1: values[1],
        });
    }
    Ok(SpectralResult {
        eigenvalues: values,
        eigenfunctions: vectors,
        residuals,
        cell_volume: op.cell_volume,
        matrix_norm: op.norm_inf(),
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cell_grid, build_grid, DomainSpec};
    use crate::operator::{assemble_dirichlet, assemble_neumann_drift, Drift, Potential};
    use std::f64::consts::PI;

    fn interval_op(h: f64) -> OperatorMatrix {
        let g = build_grid(&DomainSpec::interval(-0.5, 0.5), h).unwrap();
        assemble_dirichlet(&g, &Potential::zero()).unwrap()
    }

    #[test]
    fn toeplitz_closed_form() {
        let h = 1.0 / 512.0;
        let res = smallest_eigenpairs(&interval_op(h), 2).unwrap();
        let l0 = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        let l1 = 4.0 / (h * h) * (PI * h).sin().powi(2);
        assert!(((res.eigenvalues[0] - l0) / l0).abs() < 1e-12);
        assert!(((res.eigenvalues[1] - l1) / l1).abs() < 1e-12);
        let ratio = (PI * h).sin().powi(2) / (PI * h / 2.0).sin().powi(2);
        assert!((res.eigenvalues[1] / res.eigenvalues[0] - ratio).abs() < 1e-11);
        assert!(res.certified());
        // Bauer–Fike.
        assert!((res.eigenvalues[0] - l0).abs() <= res.residuals[0] + 1e-12 * l0);
    }

    #[test]
    fn orthonormal_and_positive() {
        let g = build_grid(&DomainSpec::unit_square(), 1.0 / 16.0).unwrap();
        let op = assemble_dirichlet(&g, &Potential::zero()).unwrap();
        let res = smallest_eigenpairs(&op, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = res.inner(&res.eigenfunctions[i], &res.eigenfunctions[j]);
                assert!((got - want).abs() < 1e-8);
            }
        }
        assert!(res.ground_state().iter().all(|v| *v > 0.0));
        // Double first excited level of the square.
        assert!((res.eigenvalues[1] - res.eigenvalues[2]).abs() < 1e-9 * res.eigenvalues[1]);
    }

    #[test]
    fn richardson_order_in_one_dimension() {
        let e = |h: f64| smallest_eigenpairs(&interval_op(h), 1).unwrap().eigenvalues[0] - PI * PI;
        let r = e(1.0 / 64.0) / e(1.0 / 128.0);
        assert!((3.8..=4.2).contains(&r), "ratio {r}");
    }

    #[test]
    fn subspace_iteration_matches_dense() {
        let g = build_grid(&DomainSpec::disk([0.0, 0.0], 1.0), 1.0 / 12.0).unwrap();
        let op = assemble_dirichlet(&g, &Potential::radial(2.0, [0.2, 0.0])).unwrap();
        let (dense, _) = dense_lowest(&op.matrix, 4);
        let (it, vecs, _) = subspace_iteration(&op.matrix, 4, op.length_scale).unwrap();
        for (a, b) in dense.iter().zip(&it) {
            assert!((a - b).abs() < 1e-9 * a.abs());
        }
        assert_eq!(vecs.len(), 4);
    }

    #[test]
    fn too_many_pairs() {
        assert_eq!(
            smallest_eigenpairs(&interval_op(0.1), 7).unwrap_err(),
            EigenError::TooManyPairs { k: 7 }
        );
    }

    #[test]
    fn model_drift_forms_agree() {
        let g = build_cell_grid(&DomainSpec::interval(-0.5, 0.5), 1.0 / 128.0).unwrap();
        let sym = drift_eigenpairs(
            &assemble_neumann_drift(&g, &Drift::interval_model(&g)).unwrap(),
            2,
        )
        .unwrap();
        let x: Vec<[f64; 2]> = g
            .nodes()
            .iter()
            .map(|p| [PI * (PI * p[0]).tan(), 0.0])
            .collect();
        let gen =
            drift_eigenpairs(&assemble_neumann_drift(&g, &Drift::Field(x)).unwrap(), 2).unwrap();
        assert!(sym.eigenvalues[0].abs() < 1e-9);
        for lam in [sym.eigenvalues[1], gen.eigenvalues[1]] {
            assert!((lam / (3.0 * PI * PI) - 1.0).abs() < 1e-3, "{lam}");
        }
        // The first nonconstant mode is odd, like 2 sin(πs).
        let w = &sym.eigenfunctions[1];
        let n = w.len();
        for i in 0..n {
            assert!((w[i] + w[n - 1 - i]).abs() < 1e-8);
        }
    }
}

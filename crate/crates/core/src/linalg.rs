//! Small sparse and banded kernels used by the operators and solvers.

use nalgebra::DMatrix;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Entries within a row are
    /// sorted by column; duplicates are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|e| e.1.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Gershgorin lower bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let mut d = 0.0;
                let mut off = 0.0;
                for (j, v) in self.row(i) {
                    if j == i {
                        d += v;
                    } else {
                        off += v.abs();
                    }
                }
                d - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `xᵀAx` for symmetric `A`, accumulated as
    /// `Σ_{i<j} (-a_ij)(x_i - x_j)² + Σ_i (Σ_j a_ij) x_i²`.
    ///
    /// For the M-matrices assembled here every term is a difference of
    /// neighbouring values, so small eigenvalues keep full relative accuracy
    /// even when `‖A‖` is large.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            let mut row_sum = 0.0;
            for (j, v) in self.row(i) {
                row_sum += v;
                if j > i {
                    let d = x[i] - x[j];
                    e -= v * d * d;
                }
            }
            e += row_sum * x[i] * x[i];
        }
        e
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `A + shift·I`.
    pub fn shifted(&self, shift: f64) -> CsrMatrix {
        let rows = (0..self.n)
            .map(|i| {
                let mut r: Vec<(usize, f64)> = self.row(i).collect();
                r.push((i, shift));
                r
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    /// `I + alpha·A`.
    pub fn identity_plus(&self, alpha: f64) -> CsrMatrix {
        let rows = (0..self.n)
            .map(|i| {
                let mut r: Vec<(usize, f64)> = self.row(i).map(|(j, v)| (j, alpha * v)).collect();
                r.push((i, 1.0));
                r
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("matrix is not positive definite (pivot {pivot} at row {row})")]
pub struct NotPositiveDefinite {
    pub row: usize,
    pub pivot: f64,
}

/// Cholesky factor `L` of a symmetric positive definite band matrix, stored
/// by rows: `band[i*(b+1) + k] = L[i, i-b+k]`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    b: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self, NotPositiveDefinite> {
        let n = a.dim();
        let b = a.bandwidth();
        let w = b + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    band[i * w + (j + b - i)] = v;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            for j in j0..=i {
                // L[i,j] = (A[i,j] - Σ_k L[i,k] L[j,k]) / L[j,j]
                let k0 = j0.max(j.saturating_sub(b));
                let mut s = band[i * w + (j + b - i)];
                for k in k0..j {
                    s -= band[i * w + (k + b - i)] * band[j * w + (k + b - j)];
                }
                if j == i {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(NotPositiveDefinite { row: i, pivot: s });
                    }
                    band[i * w + b] = s.sqrt();
                } else {
                    band[i * w + (j + b - i)] = s / band[j * w + b];
                }
            }
        }
        Ok(BandCholesky { n, b, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = rhs` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, b, w) = (self.n, self.b, self.b + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(b)..i {
                s -= self.band[i * w + (k + b - i)] * x[k];
            }
            x[i] = s / self.band[i * w + b];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + b + 1).min(n) {
                s -= self.band[k * w + (i + b - k)] * x[k];
            }
            x[i] = s / self.band[i * w + b];
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormalizes the columns in place (modified Gram-Schmidt, applied
/// twice). Columns that collapse are replaced by zero vectors.
pub fn orthonormalize(cols: &mut [Vec<f64>]) {
    for _pass in 0..2 {
        for k in 0..cols.len() {
            let (done, rest) = cols.split_at_mut(k);
            let v = &mut rest[0];
            for u in done.iter() {
                let c = dot(u, v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
            let nv = norm(v);
            if nv > 0.0 {
                v.iter_mut().for_each(|x| *x /= nv);
            }
        }
    }
}

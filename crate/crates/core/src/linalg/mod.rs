//! Dense kernels behind the regularizer: centering, covariance, trace
//! identities and a Jacobi eigensolver used as the reference path.
//!
//! Storage is dense row-major throughout.

mod jacobi;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

pub use jacobi::{jacobi_eigenvalues, sym_eigenvalues, JACOBI_MAX_SWEEPS, JACOBI_REL_TOL};

/// Entrywise absolute tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues down to `-PSD_CLAMP_REL * trace` are treated as rounding noise
/// and clamped to zero.
pub const PSD_CLAMP_REL: f64 = 1e-9;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Wraps `data` as a `rows × cols` matrix.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(alloc::format!(
                "matrix data has {} entries, expected {rows}×{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(invalid(alloc::format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Iterator over rows.
    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        let step = self.cols.max(1);
        self.data.chunks_exact(step).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Sum of squared entries.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Largest absolute entry, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

/// `N × D` batch of embeddings, one row per sample.
///
/// Construction rejects empty shapes and non-finite entries. A single-row
/// batch is representable; operations that need a covariance report
/// [`Error::InsufficientSamples`] for it.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch(Matrix);

impl EmbeddingBatch {
    /// Validates `matrix` as an embedding batch.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(invalid("embedding batch must have at least one row and one column"));
        }
        if let Some(pos) = matrix.as_slice().iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos / matrix.cols(), pos % matrix.cols());
            return Err(invalid(alloc::format!("non-finite entry at row {i}, column {j}")));
        }
        Ok(Self(matrix))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn from_vec(n_samples: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(Matrix::new(n_samples, dim, data)?)
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let data = self.0.as_slice().iter().map(|v| v * factor).collect();
        Self::from_vec(self.n_samples(), self.dim(), data)
    }

    /// `offset` added to every row.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim() {
            return Err(invalid("translation vector length must equal batch dimension"));
        }
        let mut m = self.0.clone();
        for i in 0..m.rows() {
            for (v, o) in m.row_mut(i).iter_mut().zip(offset) {
                *v += o;
            }
        }
        Self::new(m)
    }

    /// Rows reordered so that row `i` of the result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_samples() {
            return Err(invalid("permutation length must equal the number of samples"));
        }
        let mut seen = vec![false; order.len()];
        let mut data = Vec::with_capacity(self.0.as_slice().len());
        for &src in order {
            if src >= order.len() || seen[src] {
                return Err(invalid("not a permutation"));
            }
            seen[src] = true;
            data.extend_from_slice(self.0.row(src));
        }
        Self::from_vec(self.n_samples(), self.dim(), data)
    }

    pub(crate) fn require_samples(&self, required: usize) -> Result<()> {
        if self.n_samples() < required {
            return Err(Error::InsufficientSamples {
                required,
                actual: self.n_samples(),
            });
        }
        Ok(())
    }
}

/// Symmetric `D × D` covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(Matrix);

impl CovarianceMatrix {
    /// Accepts a square matrix that is symmetric to within [`SYMMETRY_TOL`].
    pub fn new(matrix: Matrix) -> Result<Self> {
        check_symmetric(&matrix)?;
        Ok(Self(matrix))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

pub(crate) fn check_symmetric(m: &Matrix) -> Result<()> {
    if !m.is_square() || m.rows() == 0 {
        return Err(invalid("matrix must be square and non-empty"));
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let n = m.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > SYMMETRY_TOL {
                return Err(invalid(alloc::format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    values: Vec<f64>,
}

impl EigenSpectrum {
    /// Sorts `values` descending. Rejects NaN.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("eigenvalues must be finite"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Copy with values in `[-PSD_CLAMP_REL * sum, 0)` set to zero.
    ///
    /// Anything more negative is not PSD drift and is rejected.
    pub fn clamped(&self) -> Result<Self> {
        let total = self.values.iter().filter(|v| **v > 0.0).sum::<f64>();
        let floor = -PSD_CLAMP_REL * total;
        let mut values = self.values.clone();
        for v in values.iter_mut() {
            if *v < 0.0 {
                if *v < floor {
                    return Err(invalid(alloc::format!(
                        "eigenvalue {v:e} is below the PSD clamp floor {floor:e}"
                    )));
                }
                *v = 0.0;
            }
        }
        Ok(Self { values })
    }
}

/// Subtracts the column means from every row.
///
/// Means are refined with a second correction pass, and a column whose
/// entries are all identical centers to exact zeros.
pub fn center_rows(batch: &EmbeddingBatch) -> Result<EmbeddingBatch> {
    let means = column_means(batch.matrix());
    let mut m = batch.matrix().clone();
    for i in 0..m.rows() {
        for (v, mean) in m.row_mut(i).iter_mut().zip(&means) {
            *v -= mean;
        }
    }
    EmbeddingBatch::new(m)
}

pub(crate) fn column_means(m: &Matrix) -> Vec<f64> {
    let n = m.rows() as f64;
    let mut means = vec![0.0; m.cols()];
    for row in m.row_iter() {
        for (acc, v) in means.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for acc in means.iter_mut() {
        *acc /= n;
    }
    let mut correction = vec![0.0; m.cols()];
    for row in m.row_iter() {
        for ((acc, v), mean) in correction.iter_mut().zip(row).zip(&means) {
            *acc += v - mean;
        }
    }
    let first = m.row(0);
    for j in 0..m.cols() {
        if m.row_iter().all(|row| row[j] == first[j]) {
            means[j] = first[j];
        } else {
            means[j] += correction[j] / n;
        }
    }
    means
}

/// Unbiased sample covariance `CᵀC / (N − 1)` of the centered batch `C`.
pub fn covariance(batch: &EmbeddingBatch) -> Result<CovarianceMatrix> {
    batch.require_samples(2)?;
    let centered = center_rows(batch)?;
    let c = centered.matrix();
    let d = c.cols();
    let norm = 1.0 / (c.rows() - 1) as f64;
    let mut k = Matrix::zeros(d, d);
    // upper triangle by rank-1 row updates, then mirror
    for row in c.row_iter() {
        for i in 0..d {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            let dst = &mut k.row_mut(i)[i..];
            for (acc, rj) in dst.iter_mut().zip(&row[i..]) {
                *acc += ri * rj;
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = k.get(i, j) * norm;
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    Ok(CovarianceMatrix(k))
}

/// Sum of the diagonal.
pub fn trace(cov: &CovarianceMatrix) -> f64 {
    let m = cov.matrix();
    (0..m.rows()).map(|i| m.get(i, i)).sum()
}

/// `tr(K²)`, evaluated as the squared Frobenius norm of the symmetric `K`.
pub fn trace_of_square(cov: &CovarianceMatrix) -> f64 {
    cov.matrix().frobenius_norm_sq()
}

/// `tr(K)` and `tr(K²)` of the batch covariance, computed from the `N × N`
/// Gram matrix of centered rows in `O(N²D)` without forming the `D × D`
/// covariance.
pub fn gram_traces(batch: &EmbeddingBatch) -> Result<(f64, f64)> {
    batch.require_samples(2)?;
    let centered = center_rows(batch)?;
    let gram = gram_matrix(centered.matrix());
    let n = gram.rows();
    let norm = 1.0 / (n - 1) as f64;
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..n {
        diag += gram.get(i, i);
        for j in (i + 1)..n {
            let g = gram.get(i, j);
            off += g * g;
        }
    }
    let diag_sq: f64 = (0..n).map(|i| gram.get(i, i) * gram.get(i, i)).sum();
    let tr_k = diag * norm;
    let tr_k2 = (diag_sq + 2.0 * off) * norm * norm;
    Ok((tr_k, tr_k2))
}

/// `C Cᵀ` for a row-major `C`.
pub(crate) fn gram_matrix(c: &Matrix) -> Matrix {
    let n = c.rows();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(c.row(i), c.row(j));
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    g
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

//! Embedding-dispersion diagnostics: spectrum concentration and cluster
//! separation of an embedding set.
//!
//! High dispersion shows up as a high Gini index, a low top-m eigenvalue
//! ratio, and low cluster-separation scores.

mod kmeans;

use alloc::format;
use alloc::vec::Vec;

use crate::becr::gini_trace;
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    center_rows, column_means, covariance, gram_matrix, jacobi_eigenvalues, sym_eigenvalues,
    EigenSpectrum, EmbeddingBatch,
};

pub use kmeans::{kmeans, ClusterAssignment, KMEANS_MAX_ITERATIONS, KMEANS_STREAM};
use kmeans::{cluster_means, sq_dist};

/// Default cluster count for reports.
pub const DEFAULT_K: usize = 4;
/// Default number of leading eigenvalues in the variance ratio.
pub const DEFAULT_M: usize = 2;

/// All dispersion metrics for one embedding set.
///
/// Metrics that are undefined for the data (zero covariance, zero scatter)
/// hold the error that explains why.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionReport {
    pub gini_index: Result<f64>,
    pub top_m_eigenvalue_ratio: Result<f64>,
    pub m: usize,
    pub f_test: Result<f64>,
    pub calinski_harabasz: Result<f64>,
    pub k: usize,
    pub n_samples: usize,
    pub dim: usize,
}

/// Descending covariance spectrum of length `D`.
///
/// When `N − 1 < D` the nonzero eigenvalues are taken from the smaller
/// `N × N` matrix `CCᵀ/(N−1)` (same nonzero spectrum as `CᵀC/(N−1)`) and the
/// rest are zero.
pub fn covariance_spectrum(batch: &EmbeddingBatch) -> Result<EigenSpectrum> {
    batch.require_samples(2)?;
    let (n, d) = (batch.n_samples(), batch.dim());
    if n >= d {
        return sym_eigenvalues(&covariance(batch)?);
    }
    let centered = center_rows(batch)?;
    let mut gram = gram_matrix(centered.matrix());
    let norm = 1.0 / (n - 1) as f64;
    gram.as_mut_slice().iter_mut().for_each(|v| *v *= norm);
    let mut values = jacobi_eigenvalues(&gram)?.values().to_vec();
    values.resize(d, 0.0);
    EigenSpectrum::new(values)
}

/// Share of total variance carried by the `m` largest eigenvalues.
pub fn top_m_eigenvalue_ratio(batch: &EmbeddingBatch, m: usize) -> Result<f64> {
    check_m(m, batch.dim())?;
    let spectrum = covariance_spectrum(batch)?.clamped()?;
    ratio_of_leading(&spectrum, m)
}

fn check_m(m: usize, dim: usize) -> Result<()> {
    if m == 0 || m > dim {
        return Err(invalid(format!("m must lie in [1, {dim}], got {m}")));
    }
    Ok(())
}

/// `Σ_{i<m} λᵢ / Σ λᵢ` for a clamped descending spectrum.
pub fn ratio_of_leading(spectrum: &EigenSpectrum, m: usize) -> Result<f64> {
    check_m(m, spectrum.len())?;
    let total = spectrum.sum();
    if total <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let lead: f64 = spectrum.values()[..m].iter().sum();
    Ok((lead / total).clamp(0.0, 1.0))
}

struct Scatter {
    between: f64,
    within: f64,
    n: usize,
    k: usize,
}

impl Scatter {
    fn ratio(&self) -> Result<f64> {
        if self.within == 0.0 {
            if self.between == 0.0 {
                return Err(invalid("between- and within-cluster scatter are both zero"));
            }
            return Ok(f64::INFINITY);
        }
        let df_between = (self.k - 1) as f64;
        let df_within = (self.n - self.k) as f64;
        Ok((self.between / df_between) / (self.within / df_within))
    }
}

fn check_assignment(batch: &EmbeddingBatch, assignment: &ClusterAssignment) -> Result<()> {
    let (n, k) = (batch.n_samples(), assignment.k());
    if assignment.labels().len() != n {
        return Err(invalid("assignment does not cover the batch"));
    }
    if assignment.centroids().cols() != batch.dim() {
        return Err(invalid("centroid dimension differs from batch dimension"));
    }
    if n <= k {
        return Err(invalid(format!("need more samples than clusters (N = {n}, k = {k})")));
    }
    if k < 2 {
        return Err(invalid("need at least two clusters"));
    }
    Ok(())
}

/// One-way ANOVA F statistic `[SSB/(k−1)] / [SSW/(N−k)]` on Euclidean
/// distances to the cluster means implied by the labels.
pub fn f_test(batch: &EmbeddingBatch, assignment: &ClusterAssignment) -> Result<f64> {
    check_assignment(batch, assignment)?;
    let x = batch.matrix();
    let k = assignment.k();
    let labels = assignment.labels();
    let means = cluster_means(x, labels, k);
    let grand = column_means(x);
    let sizes = assignment.sizes();

    let between: f64 = (0..k)
        .map(|c| sizes[c] as f64 * sq_dist(means.row(c), &grand))
        .sum();
    let within: f64 = x
        .row_iter()
        .zip(labels)
        .map(|(row, &l)| sq_dist(row, means.row(l)))
        .sum();
    Scatter {
        between,
        within,
        n: x.rows(),
        k,
    }
    .ratio()
}

/// Calinski–Harabasz score `[tr(B)/(k−1)] / [tr(W)/(N−k)]`.
///
/// Traces are accumulated coordinate by coordinate from the diagonals of the
/// between- and within-cluster scatter matrices. Under Euclidean scatter
/// this is the same quantity as [`f_test`].
pub fn calinski_harabasz(batch: &EmbeddingBatch, assignment: &ClusterAssignment) -> Result<f64> {
    check_assignment(batch, assignment)?;
    let x = batch.matrix();
    let k = assignment.k();
    let labels = assignment.labels();
    let means = cluster_means(x, labels, k);
    let grand = column_means(x);
    let sizes = assignment.sizes();

    let mut trace_b = 0.0;
    let mut trace_w = 0.0;
    for j in 0..x.cols() {
        let mut b_jj = 0.0;
        for c in 0..k {
            let dev = means.get(c, j) - grand[j];
            b_jj += sizes[c] as f64 * dev * dev;
        }
        let mut w_jj = 0.0;
        for (i, &l) in labels.iter().enumerate() {
            let dev = x.get(i, j) - means.get(l, j);
            w_jj += dev * dev;
        }
        trace_b += b_jj;
        trace_w += w_jj;
    }
    Scatter {
        between: trace_b,
        within: trace_w,
        n: x.rows(),
        k,
    }
    .ratio()
}

/// Every dispersion metric for `batch`.
///
/// Out-of-range `k` (outside `[2, N−1]`) or `m` (outside `[1, D]`) fails the
/// whole call; data-dependent failures are recorded per metric.
pub fn dispersion_report(
    batch: &EmbeddingBatch,
    k: usize,
    m: usize,
    seed: u64,
) -> Result<DispersionReport> {
    let (n, d) = (batch.n_samples(), batch.dim());
    check_m(m, d)?;
    if k < 2 || k >= n {
        return Err(invalid(format!("k must lie in [2, {}], got {k}", n.saturating_sub(1))));
    }
    let assignment = kmeans(batch, k, seed)?;
    Ok(DispersionReport {
        gini_index: gini_trace(batch),
        top_m_eigenvalue_ratio: top_m_eigenvalue_ratio(batch, m),
        m,
        f_test: f_test(batch, &assignment),
        calinski_harabasz: calinski_harabasz(batch, &assignment),
        k,
        n_samples: n,
        dim: d,
    })
}

/// Ratios for every `m` in `1..=D`; non-decreasing and ending at 1.
pub fn cumulative_variance_ratios(batch: &EmbeddingBatch) -> Result<Vec<f64>> {
    let spectrum = covariance_spectrum(batch)?.clamped()?;
    (1..=spectrum.len()).map(|m| ratio_of_leading(&spectrum, m)).collect()
}

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::linalg::{EmbeddingBatch, Matrix};

/// Lloyd iteration cap.
pub const KMEANS_MAX_ITERATIONS: usize = 300;

/// Stream id of the ChaCha8 generator used for k-means++ seeding. Other
/// consumers of the same seed should pick a different stream.
pub const KMEANS_STREAM: u64 = 0x6b6d_6561_6e73;

/// Hard clustering of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
    centroids: Matrix,
}

impl ClusterAssignment {
    /// Validates labels against `k` and rejects empty clusters.
    pub fn new(labels: Vec<usize>, k: usize, centroids: Matrix) -> Result<Self> {
        if centroids.rows() != k {
            return Err(invalid("centroid count must equal k"));
        }
        if centroids.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(invalid("centroids must be finite"));
        }
        let sizes = cluster_sizes(&labels, k)?;
        if sizes.contains(&0) {
            return Err(invalid("assignment has an empty cluster"));
        }
        Ok(Self { labels, k, centroids })
    }

    /// Assignment with centroids set to the cluster means of `batch`.
    pub fn from_labels(batch: &EmbeddingBatch, labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.len() != batch.n_samples() {
            return Err(invalid("one label per sample is required"));
        }
        cluster_sizes(&labels, k)?;
        let centroids = cluster_means(batch.matrix(), &labels, k);
        Self::new(labels, k, centroids)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

fn cluster_sizes(labels: &[usize], k: usize) -> Result<Vec<usize>> {
    let mut sizes = vec![0; k];
    for &l in labels {
        if l >= k {
            return Err(invalid(alloc::format!("label {l} out of range for k = {k}")));
        }
        sizes[l] += 1;
    }
    Ok(sizes)
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Seeding draws from a ChaCha8 generator keyed by `seed` on stream
/// [`KMEANS_STREAM`], so results depend only on `(batch, k, seed)`. Ties in
/// the nearest-centroid search go to the lowest cluster index. Iteration
/// stops when labels no longer change or after [`KMEANS_MAX_ITERATIONS`]
/// rounds. A cluster that empties out takes over the point farthest from its
/// own centroid (among clusters that can spare one).
pub fn kmeans(batch: &EmbeddingBatch, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = batch.n_samples();
    if k < 2 || k > n {
        return Err(invalid(alloc::format!("k must lie in [2, {n}], got {k}")));
    }
    let x = batch.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(KMEANS_STREAM);

    let mut centroids = plus_plus_seeds(x, k, &mut rng);
    let mut labels = assign(x, &centroids);
    for _ in 0..KMEANS_MAX_ITERATIONS {
        repair_empty(x, &mut labels, &centroids, k);
        centroids = cluster_means(x, &labels, k);
        let next = assign(x, &centroids);
        if next == labels {
            break;
        }
        labels = next;
    }
    repair_empty(x, &mut labels, &centroids, k);
    let centroids = cluster_means(x, &labels, k);
    ClusterAssignment::new(labels, k, centroids)
}

fn plus_plus_seeds(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = x.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.gen_range(0..n));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, w) in nearest.iter().enumerate() {
                if *w <= 0.0 {
                    continue;
                }
                acc += w;
                if acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target ≥ acc; fall back to the last candidate
            pick.unwrap_or_else(|| nearest.iter().rposition(|w| *w > 0.0).unwrap_or(0))
        } else {
            // all remaining points coincide with a chosen seed
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(pick);
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = w.min(sq_dist(x.row(i), x.row(pick)));
        }
    }
    let rows: Vec<&[f64]> = chosen.iter().map(|&i| x.row(i)).collect();
    Matrix::from_rows(&rows).expect("rows share the batch width")
}

fn assign(x: &Matrix, centroids: &Matrix) -> Vec<usize> {
    x.row_iter()
        .map(|row| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.row_iter().enumerate() {
                let d = sq_dist(row, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn repair_empty(x: &Matrix, labels: &mut [usize], centroids: &Matrix, k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for empty in 0..k {
        if sizes[empty] != 0 {
            continue;
        }
        let mut donor = None;
        let mut far = -1.0;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = sq_dist(x.row(i), centroids.row(l));
            if d > far {
                far = d;
                donor = Some(i);
            }
        }
        // k ≤ N guarantees a cluster with two or more members
        let i = donor.expect("some cluster has at least two points");
        sizes[labels[i]] -= 1;
        labels[i] = empty;
        sizes[empty] = 1;
    }
}

pub(crate) fn cluster_means(x: &Matrix, labels: &[usize], k: usize) -> Matrix {
    let d = x.cols();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (row, &l) in x.row_iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums.row_mut(l).iter_mut().zip(row) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            for s in sums.row_mut(c) {
                *s /= count as f64;
            }
        }
    }
    sums
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

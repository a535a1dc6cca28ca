//! Timing of the three Gini evaluation paths.

use std::time::Instant;

use becr_core::becr::{gini_direct_trace, gini_eigen, gini_from_traces};
use becr_core::linalg::{gram_traces, EmbeddingBatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Largest allowed disagreement between paths before timing starts.
pub const AGREEMENT_TOL: f64 = 1e-8;

/// Stream id for benchmark batch generation.
const BENCH_STREAM: u64 = 0x62_656e_6368;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dim: usize,
    pub gini_eigen: f64,
    pub gini_direct: f64,
    pub gini_gram: f64,
    pub eigen_ms: f64,
    pub direct_ms: f64,
    pub gram_ms: f64,
    pub eigen_over_gram: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n: usize,
    pub repeats: usize,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
    pub tool_version: String,
}

/// Uniform `[−1, 1)` batch, reproducible from `(seed, n, dim)`.
pub fn random_batch(seed: u64, n: usize, dim: usize) -> EmbeddingBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((dim as u64) << 32) ^ n as u64);
    rng.set_stream(BENCH_STREAM);
    let data = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    EmbeddingBatch::from_vec(n, dim, data).expect("finite nonempty batch")
}

pub fn gini_gram(batch: &EmbeddingBatch) -> becr_core::Result<f64> {
    let (tr_k, tr_k2) = gram_traces(batch)?;
    gini_from_traces(tr_k, tr_k2)
}

type Path = fn(&EmbeddingBatch) -> becr_core::Result<f64>;

pub fn run(dims: &[usize], n: usize, repeats: usize, seed: u64) -> CliResult<BenchReport> {
    if repeats == 0 {
        return Err(CliError::Usage("repeats must be at least 1".into()));
    }
    if n < 2 {
        return Err(CliError::Usage(format!("batch size must be at least 2, got {n}")));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(CliError::Usage("dims must be a nonempty list of positive integers".into()));
    }
    let paths: [Path; 3] = [gini_eigen, gini_direct_trace, gini_gram];
    let mut rows = Vec::with_capacity(dims.len());
    for &dim in dims {
        let batch = random_batch(seed, n, dim);
        let mut values = [0.0; 3];
        for (v, path) in values.iter_mut().zip(paths) {
            *v = path(&batch).map_err(CliError::from_data)?;
        }
        let spread = values.iter().cloned().fold(f64::MIN, f64::max)
            - values.iter().cloned().fold(f64::MAX, f64::min);
        if !(spread <= AGREEMENT_TOL) {
            return Err(CliError::Consistency(format!(
                "Gini paths disagree at D = {dim}: eigen {}, direct {}, gram {}",
                values[0], values[1], values[2]
            )));
        }
        let mut times = [0.0; 3];
        for (t, path) in times.iter_mut().zip(paths) {
            *t = median_ms(repeats, || {
                std::hint::black_box(path(std::hint::black_box(&batch)).ok());
            });
        }
        rows.push(BenchRow {
            dim,
            gini_eigen: values[0],
            gini_direct: values[1],
            gini_gram: values[2],
            eigen_ms: times[0],
            direct_ms: times[1],
            gram_ms: times[2],
            eigen_over_gram: times[0] / times[2],
        });
    }
    Ok(BenchReport {
        n,
        repeats,
        seed,
        rows,
        tool_version: crate::report::TOOL_VERSION.to_string(),
    })
}

/// Median wall time of `repeats` calls, in milliseconds.
pub fn median_ms(repeats: usize, mut f: impl FnMut()) -> f64 {
    let samples: Vec<f64> = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    median(samples)
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    }
}

impl BenchReport {
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "N = {}, repeats = {}, seed = {}\n{:>6} {:>12} {:>12} {:>12} {:>10} {:>10}\n",
            self.n, self.repeats, self.seed, "D", "eigen_ms", "direct_ms", "gram_ms", "eigen/gram", "gini"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:>6} {:>12.4} {:>12.4} {:>12.4} {:>10.1} {:>10.6}\n",
                r.dim, r.eigen_ms, r.direct_ms, r.gram_ms, r.eigen_over_gram, r.gini_gram
            ));
        }
        out
    }
}

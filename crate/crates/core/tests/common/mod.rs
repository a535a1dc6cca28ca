#![allow(dead_code)]

use becr_core::linalg::EmbeddingBatch;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn batch_strategy(
    n: std::ops::RangeInclusive<usize>,
    d: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = EmbeddingBatch> {
    (n, d).prop_flat_map(|(n, d)| {
        prop::collection::vec(-10.0..10.0f64, n * d)
            .prop_map(move |data| EmbeddingBatch::from_vec(n, d, data).unwrap())
    })
}

pub fn gaussian_batch(seed: u64, n: usize, d: usize) -> EmbeddingBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    EmbeddingBatch::from_vec(n, d, data).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

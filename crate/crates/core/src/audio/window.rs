use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};

/// Analysis window shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    /// Symmetric Hann, `0.5·(1 − cos(2πn/(L−1)))`.
    #[default]
    Hann,
    Rectangular,
}

/// Window weights of the given length. Hann needs `length ≥ 2`.
pub fn window(kind: WindowKind, length: usize) -> Result<Vec<f64>> {
    match kind {
        WindowKind::Rectangular => {
            if length == 0 {
                return Err(invalid("window length must be positive"));
            }
            Ok(vec![1.0; length])
        }
        WindowKind::Hann => {
            if length < 2 {
                return Err(invalid("hann window needs length ≥ 2"));
            }
            let denom = (length - 1) as f64;
            let mut w: Vec<f64> = (0..length)
                .map(|n| (0.5 * (1.0 - libm::cos(2.0 * PI * n as f64 / denom))).clamp(0.0, 1.0))
                .collect();
            // mirror so the shape is exactly symmetric
            for n in 0..length / 2 {
                w[length - 1 - n] = w[n];
            }
            Ok(w)
        }
    }
}

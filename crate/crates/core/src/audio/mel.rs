use alloc::vec::Vec;

use super::{FrequencyAxis, Spectrogram};
use crate::error::{invalid, Result};
use crate::linalg::Matrix;

/// HTK mel scale, `2595·log₁₀(1 + f/700)`.
pub fn hz_to_mel(hz: f64) -> Result<f64> {
    if !(hz >= 0.0) || !hz.is_finite() {
        return Err(invalid(alloc::format!("frequency {hz} must be finite and ≥ 0")));
    }
    Ok(2595.0 * libm::log10(1.0 + hz / 700.0))
}

/// Inverse of [`hz_to_mel`].
pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::pow(10.0, mel / 2595.0) - 1.0)
}

/// Triangular filters over one-sided STFT bins.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Matrix,
    centers_mel: Vec<f64>,
    center_bins: Vec<usize>,
}

impl MelFilterbank {
    /// `n_mels × n_bins` weights.
    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    /// Unsnapped filter centers on the mel scale, strictly increasing.
    pub fn centers_mel(&self) -> &[f64] {
        &self.centers_mel
    }

    /// FFT bin where each filter peaks with weight 1.
    pub fn center_bins(&self) -> &[usize] {
        &self.center_bins
    }

    /// `frame · Wᵀ` on squared magnitudes.
    pub fn apply(&self, magnitudes: &[f64]) -> Vec<f64> {
        self.weights
            .row_iter()
            .map(|w| w.iter().zip(magnitudes).map(|(w, m)| w * m * m).sum())
            .collect()
    }
}

/// Builds `n_mels` triangular filters for an STFT whose bins sit at
/// `k·bin_hz`, `k = 0..n_bins`.
///
/// Filter edges and centers are `n_mels + 2` points spaced uniformly in mel
/// between `f_lo` and `f_hi`, each snapped to the nearest FFT bin. Filter
/// `i` rises linearly from its left edge bin to weight 1 at its center bin
/// and falls to its right edge bin, so every filter has contiguous support
/// and a peak of exactly 1.
pub fn mel_filterbank(n_bins: usize, bin_hz: f64, n_mels: usize, f_lo: f64, f_hi: f64) -> Result<MelFilterbank> {
    if n_mels == 0 {
        return Err(invalid("need at least one mel filter"));
    }
    if n_bins < 2 || !(bin_hz > 0.0) {
        return Err(invalid("filterbank needs at least two bins and a positive bin spacing"));
    }
    let nyquist = bin_hz * (n_bins - 1) as f64;
    if !(f_lo >= 0.0 && f_lo < f_hi && f_hi <= nyquist * (1.0 + 1e-12)) {
        return Err(invalid(alloc::format!(
            "mel range [{f_lo}, {f_hi}] must satisfy 0 ≤ f_lo < f_hi ≤ {nyquist}"
        )));
    }
    let mel_lo = hz_to_mel(f_lo)?;
    let mel_hi = hz_to_mel(f_hi)?;
    let step = (mel_hi - mel_lo) / (n_mels + 1) as f64;
    let points: Vec<f64> = (0..n_mels + 2).map(|i| mel_lo + step * i as f64).collect();
    let bins: Vec<usize> = points
        .iter()
        .map(|&m| {
            let b = libm::round(mel_to_hz(m) / bin_hz);
            (b.max(0.0) as usize).min(n_bins - 1)
        })
        .collect();

    let mut weights = Matrix::zeros(n_mels, n_bins);
    for i in 0..n_mels {
        let (left, center, right) = (bins[i], bins[i + 1], bins[i + 2]);
        let row = weights.row_mut(i);
        for (j, w) in row.iter_mut().enumerate().take(right + 1).skip(left) {
            *w = if j == center {
                1.0
            } else if j < center {
                (j - left) as f64 / (center - left) as f64
            } else {
                (right - j) as f64 / (right - center) as f64
            };
        }
    }
    Ok(MelFilterbank {
        weights,
        centers_mel: points[1..=n_mels].to_vec(),
        center_bins: bins[1..=n_mels].to_vec(),
    })
}

/// Mel filterbank energies of a linear-frequency STFT.
pub fn mel_spectrogram(spec: &Spectrogram, n_mels: usize, f_lo: f64, f_hi: f64) -> Result<Spectrogram> {
    if spec.axis() != FrequencyAxis::LinearHz {
        return Err(invalid("mel spectrogram needs a linear-frequency STFT input"));
    }
    let freqs = spec.bin_frequencies();
    if freqs.len() < 2 {
        return Err(invalid("input has fewer than two frequency bins"));
    }
    let half_rate = spec.sample_rate() as f64 / 2.0;
    if f_hi > half_rate {
        return Err(invalid(alloc::format!("f_hi {f_hi} exceeds Nyquist {half_rate}")));
    }
    let bank = mel_filterbank(freqs.len(), freqs[1] - freqs[0], n_mels, f_lo, f_hi)?;
    let data: Vec<f64> = spec
        .magnitudes()
        .row_iter()
        .flat_map(|row| bank.apply(row))
        .collect();
    Spectrogram::new(
        Matrix::new(spec.n_frames(), n_mels, data)?,
        FrequencyAxis::Mel,
        bank.centers_mel.clone(),
        spec.frame_hop_seconds(),
        spec.sample_rate(),
    )
}

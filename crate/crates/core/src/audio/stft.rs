use alloc::vec::Vec;

use num_complex::Complex64;

use super::{fft_in_place, window, AudioBuffer, FrequencyAxis, Spectrogram, WindowKind};
use crate::error::{invalid, Result};
use crate::linalg::Matrix;

/// Frame layout of the short-time Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    window_size: usize,
    hop: usize,
    window: WindowKind,
}

impl StftConfig {
    /// `window_size` must be a power of two and `0 < hop ≤ window_size`.
    pub fn new(window_size: usize, hop: usize, window: WindowKind) -> Result<Self> {
        if window_size < 2 || !window_size.is_power_of_two() {
            return Err(invalid(alloc::format!(
                "window size {window_size} must be a power of two ≥ 2"
            )));
        }
        if hop == 0 || hop > window_size {
            return Err(invalid(alloc::format!(
                "hop {hop} must lie in [1, {window_size}]"
            )));
        }
        Ok(Self {
            window_size,
            hop,
            window,
        })
    }

    /// Hop of a quarter window, Hann.
    pub fn with_window_size(window_size: usize) -> Result<Self> {
        Self::new(window_size, (window_size / 4).max(1), WindowKind::Hann)
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    /// One-sided bin count `M/2 + 1`.
    pub fn n_bins(&self) -> usize {
        self.window_size / 2 + 1
    }
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_size: 1024,
            hop: 256,
            window: WindowKind::Hann,
        }
    }
}

/// Precomputed window for repeated frame transforms.
#[derive(Debug, Clone)]
pub struct StftPlan {
    config: StftConfig,
    weights: Vec<f64>,
}

impl StftPlan {
    pub fn new(config: StftConfig) -> Result<Self> {
        let weights = window(config.window, config.window_size)?;
        Ok(Self { config, weights })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    /// `1 + ⌊(len − M)/hop⌋`, or an error if the signal is shorter than a window.
    pub fn n_frames(&self, len: usize) -> Result<usize> {
        let m = self.config.window_size;
        if len < m {
            return Err(invalid(alloc::format!(
                "signal has {len} samples, fewer than the window size {m}"
            )));
        }
        Ok(1 + (len - m) / self.config.hop)
    }

    /// One-sided magnitudes `|X(m, ω)|` of frame `index`.
    pub fn frame(&self, samples: &[f64], index: usize) -> Result<Vec<f64>> {
        let m = self.config.window_size;
        let start = index * self.config.hop;
        let frame = samples
            .get(start..start + m)
            .ok_or_else(|| invalid(alloc::format!("frame {index} runs past the signal")))?;
        let mut buf: Vec<Complex64> = frame
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| Complex64::new(x * w, 0.0))
            .collect();
        fft_in_place(&mut buf)?;
        Ok(buf[..self.config.n_bins()].iter().map(|c| c.norm()).collect())
    }

    /// Assembles frame rows (in frame order) into a spectrogram.
    pub fn assemble(&self, frames: Vec<Vec<f64>>, sample_rate: u32) -> Result<Spectrogram> {
        let bins = self.config.n_bins();
        let n_frames = frames.len();
        let data: Vec<f64> = frames.into_iter().flatten().collect();
        let magnitudes = Matrix::new(n_frames, bins, data)?;
        let m = self.config.window_size as f64;
        let freqs = (0..bins).map(|k| k as f64 * sample_rate as f64 / m).collect();
        Spectrogram::new(
            magnitudes,
            FrequencyAxis::LinearHz,
            freqs,
            self.config.hop as f64 / sample_rate as f64,
            sample_rate,
        )
    }
}

/// Magnitude STFT with one-sided bins at `k·fs/M`.
pub fn stft(audio: &AudioBuffer, config: &StftConfig) -> Result<Spectrogram> {
    let plan = StftPlan::new(*config)?;
    let n = plan.n_frames(audio.len())?;
    let frames = (0..n)
        .map(|i| plan.frame(audio.samples(), i))
        .collect::<Result<Vec<_>>>()?;
    plan.assemble(frames, audio.sample_rate())
}

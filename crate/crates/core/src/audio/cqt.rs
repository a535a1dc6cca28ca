use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::{window, AudioBuffer, FrequencyAxis, Spectrogram, WindowKind};
use crate::error::{invalid, Result};
use crate::linalg::Matrix;

/// Bin layout of the constant-Q transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqtConfig {
    f_min: f64,
    bins_per_octave: usize,
    n_bins: usize,
    window: WindowKind,
}

impl CqtConfig {
    pub fn new(f_min: f64, bins_per_octave: usize, n_bins: usize, window: WindowKind) -> Result<Self> {
        if !(f_min > 0.0 && f_min.is_finite()) {
            return Err(invalid(alloc::format!("f_min {f_min} must be positive")));
        }
        if bins_per_octave == 0 || n_bins == 0 {
            return Err(invalid("bins per octave and bin count must be positive"));
        }
        Ok(Self {
            f_min,
            bins_per_octave,
            n_bins,
            window,
        })
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn bins_per_octave(&self) -> usize {
        self.bins_per_octave
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    /// `Q = 1 / (2^{1/b} − 1)`.
    pub fn q_factor(&self) -> f64 {
        1.0 / (libm::exp2(1.0 / self.bins_per_octave as f64) - 1.0)
    }

    /// `f_k = f_min · 2^{k/b}`, computed as `f_min·2^{r/b}` scaled by an exact
    /// power of two so that `f_{k+b} = 2·f_k` holds bit for bit.
    pub fn center_frequency(&self, k: usize) -> f64 {
        let b = self.bins_per_octave;
        let (octave, rem) = (k / b, k % b);
        let base = self.f_min * libm::exp2(rem as f64 / b as f64);
        libm::ldexp(base, octave as i32)
    }

    /// `N[k] = ⌈Q·fs / f_k⌉`.
    pub fn window_length(&self, k: usize, sample_rate: u32) -> usize {
        libm::ceil(self.q_factor() * sample_rate as f64 / self.center_frequency(k)) as usize
    }

    /// Rejects layouts whose top bin reaches Nyquist.
    pub fn check_nyquist(&self, sample_rate: u32) -> Result<()> {
        let top = self.center_frequency(self.n_bins - 1);
        let nyquist = sample_rate as f64 / 2.0;
        if !(top < nyquist) {
            return Err(invalid(alloc::format!(
                "highest CQT bin {top:.3} Hz is not below Nyquist {nyquist} Hz"
            )));
        }
        Ok(())
    }
}

impl Default for CqtConfig {
    fn default() -> Self {
        Self {
            f_min: 32.70,
            bins_per_octave: 12,
            n_bins: 84,
            window: WindowKind::Hann,
        }
    }
}

/// Precomputed per-bin kernels `W[k,n]·e^{−2πiQn/N[k]} / N[k]`.
#[derive(Debug, Clone)]
pub struct CqtPlan {
    config: CqtConfig,
    sample_rate: u32,
    kernels: Vec<Vec<Complex64>>,
    hop: usize,
}

impl CqtPlan {
    pub fn new(config: CqtConfig, sample_rate: u32) -> Result<Self> {
        config.check_nyquist(sample_rate)?;
        let q = config.q_factor();
        let kernels = (0..config.n_bins)
            .map(|k| {
                let len = config.window_length(k, sample_rate);
                let w = window(config.window, len)?;
                let norm = 1.0 / len as f64;
                Ok(w.iter()
                    .enumerate()
                    .map(|(n, wn)| {
                        let (s, c) = libm::sincos(-2.0 * PI * q * n as f64 / len as f64);
                        Complex64::new(c, s) * (wn * norm)
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let hop = (config.window_length(0, sample_rate) / 2).max(1);
        Ok(Self {
            config,
            sample_rate,
            kernels,
            hop,
        })
    }

    pub fn config(&self) -> &CqtConfig {
        &self.config
    }

    /// Frame advance in samples: half the longest (lowest-bin) window.
    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window_lengths(&self) -> Vec<usize> {
        self.kernels.iter().map(Vec::len).collect()
    }

    /// Frames are centered at `i·hop` for every `i·hop < len`. The signal
    /// must be at least as long as the shortest window.
    pub fn n_frames(&self, len: usize) -> Result<usize> {
        let shortest = self.kernels.last().map_or(0, Vec::len);
        if len < shortest || len == 0 {
            return Err(invalid(alloc::format!(
                "signal has {len} samples, shorter than the smallest CQT window {shortest}"
            )));
        }
        Ok(1 + (len - 1) / self.hop)
    }

    /// Magnitudes `|X[k]|` of every bin for the frame centered at `index·hop`;
    /// samples outside the signal count as zero.
    pub fn frame(&self, samples: &[f64], index: usize) -> Vec<f64> {
        let center = (index * self.hop) as isize;
        self.kernels
            .iter()
            .map(|kernel| {
                let start = center - (kernel.len() / 2) as isize;
                let mut acc = Complex64::new(0.0, 0.0);
                for (n, kv) in kernel.iter().enumerate() {
                    let idx = start + n as isize;
                    if idx < 0 {
                        continue;
                    }
                    match samples.get(idx as usize) {
                        Some(x) => acc += kv * x,
                        None => break,
                    }
                }
                acc.norm()
            })
            .collect()
    }

    pub fn assemble(&self, frames: Vec<Vec<f64>>) -> Result<Spectrogram> {
        let n_frames = frames.len();
        let data: Vec<f64> = frames.into_iter().flatten().collect();
        let freqs = (0..self.config.n_bins)
            .map(|k| self.config.center_frequency(k))
            .collect();
        Spectrogram::new(
            Matrix::new(n_frames, self.config.n_bins, data)?,
            FrequencyAxis::LogCqt,
            freqs,
            self.hop as f64 / self.sample_rate as f64,
            self.sample_rate,
        )
    }
}

/// Constant-Q magnitudes by direct per-frame evaluation of every bin.
pub fn cqt(audio: &AudioBuffer, config: &CqtConfig) -> Result<Spectrogram> {
    let plan = CqtPlan::new(*config, audio.sample_rate())?;
    let n = plan.n_frames(audio.len())?;
    let frames = (0..n).map(|i| plan.frame(audio.samples(), i)).collect();
    plan.assemble(frames)
}

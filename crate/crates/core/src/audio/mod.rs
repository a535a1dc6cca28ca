//! Time–frequency front-ends: STFT, mel filterbank and constant-Q transform.
//!
//! All transforms take an [`AudioBuffer`] (or a linear STFT for the mel
//! stage) and return a [`Spectrogram`] whose rows are frames and whose
//! columns are frequency bins.

mod cqt;
mod fft;
mod mel;
mod stft;
mod window;

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::Matrix;

pub use cqt::{cqt, CqtConfig, CqtPlan};
pub use fft::fft_in_place;
pub use mel::{hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz, MelFilterbank};
pub use stft::{stft, StftConfig, StftPlan};
pub use window::{window, WindowKind};

/// Samples may exceed unit amplitude by this much before being rejected.
pub const AMPLITUDE_SLACK: f64 = 1e-6;

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Non-empty, finite, `|x| ≤ 1 + AMPLITUDE_SLACK`, positive rate.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("audio buffer is empty"));
        }
        if sample_rate == 0 {
            return Err(invalid("sample rate must be positive"));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !s.is_finite() || s.abs() > 1.0 + AMPLITUDE_SLACK)
        {
            return Err(invalid(alloc::format!(
                "sample {i} is non-finite or outside [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// What the columns of a [`Spectrogram`] are indexed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyAxis {
    /// Uniform FFT bins; `bin_frequencies` in Hz.
    LinearHz,
    /// Mel filterbank channels; `bin_frequencies` are filter centers in mel.
    Mel,
    /// Geometrically spaced constant-Q bins; `bin_frequencies` in Hz.
    LogCqt,
}

impl FrequencyAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            FrequencyAxis::LinearHz => "linear_hz",
            FrequencyAxis::Mel => "mel",
            FrequencyAxis::LogCqt => "log_cqt",
        }
    }
}

/// Frames × bins matrix of nonnegative values.
///
/// STFT and CQT store magnitudes; the mel stage stores filterbank energies
/// (weighted sums of squared STFT magnitudes).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    magnitudes: Matrix,
    axis: FrequencyAxis,
    bin_frequencies: Vec<f64>,
    frame_hop_seconds: f64,
    sample_rate: u32,
}

impl Spectrogram {
    pub fn new(
        magnitudes: Matrix,
        axis: FrequencyAxis,
        bin_frequencies: Vec<f64>,
        frame_hop_seconds: f64,
        sample_rate: u32,
    ) -> Result<Self> {
        if bin_frequencies.len() != magnitudes.cols() {
            return Err(invalid("one frequency per bin is required"));
        }
        if bin_frequencies.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("bin frequencies must be strictly increasing"));
        }
        if magnitudes.as_slice().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("spectrogram values must be finite and nonnegative"));
        }
        Ok(Self {
            magnitudes,
            axis,
            bin_frequencies,
            frame_hop_seconds,
            sample_rate,
        })
    }

    pub fn magnitudes(&self) -> &Matrix {
        &self.magnitudes
    }

    pub fn axis(&self) -> FrequencyAxis {
        self.axis
    }

    pub fn bin_frequencies(&self) -> &[f64] {
        &self.bin_frequencies
    }

    pub fn frame_hop_seconds(&self) -> f64 {
        self.frame_hop_seconds
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn n_frames(&self) -> usize {
        self.magnitudes.rows()
    }

    pub fn n_bins(&self) -> usize {
        self.magnitudes.cols()
    }

    /// Per-bin average over frames.
    pub fn mean_over_frames(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n_bins()];
        for row in self.magnitudes.row_iter() {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        let n = self.n_frames().max(1) as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }
}

/// Index of the largest value (first on ties).
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

//! Spectrogram extraction with frame-parallel transforms, plus CSV/JSON output.

use std::io::Write;

use becr_core::audio::{
    mel_spectrogram, AudioBuffer, CqtConfig, CqtPlan, Spectrogram, StftConfig, StftPlan,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrogramParams {
    Stft(StftConfig),
    Mel {
        stft: StftConfig,
        n_mels: usize,
        f_lo: f64,
        f_hi: Option<f64>,
    },
    Cqt(CqtConfig),
}

/// Computes a spectrogram, transforming frames on the current rayon pool.
pub fn compute(audio: &AudioBuffer, params: &SpectrogramParams) -> CliResult<Spectrogram> {
    let data = CliError::from_data;
    match *params {
        SpectrogramParams::Stft(cfg) => parallel_stft(audio, cfg),
        SpectrogramParams::Mel {
            stft,
            n_mels,
            f_lo,
            f_hi,
        } => {
            let linear = parallel_stft(audio, stft)?;
            let f_hi = f_hi.unwrap_or(audio.sample_rate() as f64 / 2.0);
            mel_spectrogram(&linear, n_mels, f_lo, f_hi).map_err(data)
        }
        SpectrogramParams::Cqt(cfg) => {
            let plan = CqtPlan::new(cfg, audio.sample_rate()).map_err(data)?;
            let n = plan.n_frames(audio.len()).map_err(data)?;
            let frames = (0..n)
                .into_par_iter()
                .map(|i| plan.frame(audio.samples(), i))
                .collect();
            plan.assemble(frames).map_err(data)
        }
    }
}

fn parallel_stft(audio: &AudioBuffer, cfg: StftConfig) -> CliResult<Spectrogram> {
    let plan = StftPlan::new(cfg).map_err(CliError::from_params)?;
    let n = plan.n_frames(audio.len()).map_err(CliError::from_data)?;
    let frames = (0..n)
        .into_par_iter()
        .map(|i| plan.frame(audio.samples(), i))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::from_data)?;
    plan.assemble(frames, audio.sample_rate())
        .map_err(CliError::from_data)
}

/// Header row of bin center frequencies, then one row per frame.
pub fn write_csv<W: Write>(spec: &Spectrogram, sink: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(spec.bin_frequencies().iter().map(|f| f.to_string()))
        .map_err(std::io::Error::other)?;
    for row in spec.magnitudes().row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(std::io::Error::other)?;
    }
    w.flush()
}

/// Sidecar describing a spectrogram CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramMeta {
    pub mode: String,
    pub axis: String,
    pub sample_rate: u32,
    pub hop_seconds: f64,
    pub n_frames: usize,
    pub n_bins: usize,
    pub params: serde_json::Value,
    pub tool_version: String,
}

impl SpectrogramMeta {
    pub fn new(spec: &Spectrogram, params: &SpectrogramParams) -> Self {
        let (mode, params_json) = match params {
            SpectrogramParams::Stft(c) => ("stft", stft_json(c)),
            SpectrogramParams::Mel {
                stft,
                n_mels,
                f_lo,
                f_hi,
            } => {
                let mut v = stft_json(stft);
                v["n_mels"] = (*n_mels).into();
                v["f_lo"] = (*f_lo).into();
                v["f_hi"] = f_hi.unwrap_or(spec.sample_rate() as f64 / 2.0).into();
                ("mel", v)
            }
            SpectrogramParams::Cqt(c) => (
                "cqt",
                serde_json::json!({
                    "f_min": c.f_min(),
                    "bins_per_octave": c.bins_per_octave(),
                    "n_bins": c.n_bins(),
                    "q_factor": c.q_factor(),
                    "window": window_name(c.window()),
                }),
            ),
        };
        Self {
            mode: mode.to_string(),
            axis: spec.axis().as_str().to_string(),
            sample_rate: spec.sample_rate(),
            hop_seconds: spec.frame_hop_seconds(),
            n_frames: spec.n_frames(),
            n_bins: spec.n_bins(),
            params: params_json,
            tool_version: crate::report::TOOL_VERSION.to_string(),
        }
    }
}

fn stft_json(c: &StftConfig) -> serde_json::Value {
    serde_json::json!({
        "window_size": c.window_size(),
        "hop": c.hop(),
        "window": window_name(c.window()),
    })
}

fn window_name(kind: becr_core::audio::WindowKind) -> &'static str {
    match kind {
        becr_core::audio::WindowKind::Hann => "hann",
        becr_core::audio::WindowKind::Rectangular => "rectangular",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use becr_core::audio::{cqt, stft};

    fn tone(freq: f64, rate: u32, len: usize) -> AudioBuffer {
        let s = (0..len)
            .map(|n| 0.5 * (2.0 * std::f64::consts::PI * freq * n as f64 / rate as f64).sin())
            .collect();
        AudioBuffer::new(s, rate).unwrap()
    }

    #[test]
    fn parallel_paths_match_serial() {
        let a = tone(440.0, 8000, 6000);
        let cfg = StftConfig::new(256, 64, Default::default()).unwrap();
        assert_eq!(compute(&a, &SpectrogramParams::Stft(cfg)).unwrap(), stft(&a, &cfg).unwrap());
        let c = CqtConfig::new(110.0, 12, 24, Default::default()).unwrap();
        assert_eq!(compute(&a, &SpectrogramParams::Cqt(c)).unwrap(), cqt(&a, &c).unwrap());
    }

    #[test]
    fn csv_has_frequency_header() {
        let a = tone(1000.0, 8000, 1024);
        let cfg = StftConfig::new(256, 256, Default::default()).unwrap();
        let s = compute(&a, &SpectrogramParams::Stft(cfg)).unwrap();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("0,31.25,62.5,"));
        assert_eq!(lines.count(), 4);
    }

    #[test]
    fn meta_records_mode_and_hop() {
        let a = tone(1000.0, 8000, 2048);
        let p = SpectrogramParams::Mel {
            stft: StftConfig::new(512, 128, Default::default()).unwrap(),
            n_mels: 20,
            f_lo: 0.0,
            f_hi: None,
        };
        let s = compute(&a, &p).unwrap();
        let m = SpectrogramMeta::new(&s, &p);
        assert_eq!(m.axis, "mel");
        assert_eq!(m.hop_seconds, 128.0 / 8000.0);
        assert_eq!(m.params["f_hi"], 4000.0);
        assert_eq!(m.n_bins, 20);
    }
}

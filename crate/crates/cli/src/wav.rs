//! RIFF/WAVE ingestion: PCM 16-bit or IEEE float 32-bit, mono or stereo.

use std::io::Read;
use std::path::Path;

use becr_core::audio::AudioBuffer;
use hound::{SampleFormat, WavReader};

/// Scale applied to 16-bit PCM samples.
pub const PCM16_SCALE: f64 = 1.0 / 32768.0;

#[derive(Debug, thiserror::Error)]
pub enum WavError {
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed WAV data: {0}")]
    Parse(String),
}

impl From<hound::Error> for WavError {
    fn from(e: hound::Error) -> Self {
        match e {
            hound::Error::Unsupported => WavError::UnsupportedFormat("codec not supported".into()),
            other => WavError::Parse(other.to_string()),
        }
    }
}

/// Decodes a WAV file to a mono buffer; stereo is averaged per frame.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, WavError> {
    let reader = WavReader::open(path.as_ref())?;
    decode(reader)
}

/// Same as [`load_wav`] for an in-memory or streamed source.
pub fn read_wav<R: Read>(source: R) -> Result<AudioBuffer, WavError> {
    decode(WavReader::new(source)?)
}

fn decode<R: Read>(mut reader: WavReader<R>) -> Result<AudioBuffer, WavError> {
    let spec = reader.spec();
    if !(1..=2).contains(&spec.channels) {
        return Err(WavError::UnsupportedFormat(format!(
            "{} channels (only mono and stereo are supported)",
            spec.channels
        )));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 * PCM16_SCALE))
            .collect::<Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        (fmt, bits) => {
            return Err(WavError::UnsupportedFormat(format!(
                "{bits}-bit {} samples (need 16-bit PCM or 32-bit float)",
                match fmt {
                    SampleFormat::Int => "integer",
                    SampleFormat::Float => "float",
                }
            )))
        }
    };
    let channels = spec.channels as usize;
    if !interleaved.len().is_multiple_of(channels) {
        return Err(WavError::Parse("sample count is not a multiple of the channel count".into()));
    }
    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    AudioBuffer::new(mono, spec.sample_rate).map_err(|e| WavError::Parse(e.to_string()))
}

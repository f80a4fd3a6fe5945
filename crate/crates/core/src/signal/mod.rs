//! Audio ingestion, composite assembly and short-time Fourier features.

mod composite;
mod stft;
mod wav;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use composite::{
    assemble_composite, assemble_composite_with, parse_manifest, read_manifest, write_manifest, Composite, LabelSpan,
    ManifestEntry,
};
pub use stft::{full_spectrum, stft_features, FeatureMatrix, FeatureMeta, Taper, WindowingConfig};
pub use wav::{decode_wav, encode_wav, WavEncoding};

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported audio encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("malformed WAV: {0}")]
    MalformedWav(String),
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("empty manifest")]
    EmptyManifest,
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("sample-rate mismatch: {path} has {found} Hz, expected {expected} Hz")]
    SampleRateMismatch { path: PathBuf, expected: u32, found: u32 },
    #[error("crop {start_s}s+{duration_s}s lies outside {path} ({available_s}s long)")]
    CropOutOfRange {
        path: PathBuf,
        start_s: f64,
        duration_s: f64,
        available_s: f64,
    },
    #[error("invalid windowing config: {0}")]
    InvalidWindowing(String),
    #[error("coefficient count {m} outside 1..={max}")]
    CoefficientsOutOfRange { m: usize, max: usize },
    #[error("signal of {len} samples is shorter than one window of {window_len}")]
    SignalTooShort { len: usize, window_len: usize },
}

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, SignalError> {
        if sample_rate == 0 {
            return Err(SignalError::ZeroSampleRate);
        }
        if samples.is_empty() {
            return Err(SignalError::EmptyAudio);
        }
        Ok(Self { samples, sample_rate })
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

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * c).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Read a WAV file and average its channels into one.
pub fn load_audio(path: &Path) -> Result<AudioSignal, SignalError> {
    let bytes = std::fs::read(path).map_err(|source| SignalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_wav(&bytes)
}

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{AudioSignal, SignalError};
use crate::matrix::RowMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    #[default]
    Box,
    Hamming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowingConfig {
    pub window_len: usize,
    /// Fraction of a window shared with the next one, in `[0, 1)`.
    pub overlap: f64,
    pub taper: Taper,
    /// Width of an optional moving mean along each feature row.
    pub smoothing_len: Option<usize>,
}

impl Default for WindowingConfig {
    fn default() -> Self {
        Self {
            window_len: 6000,
            overlap: 0.0,
            taper: Taper::Box,
            smoothing_len: None,
        }
    }
}

impl WindowingConfig {
    pub fn validate(&self) -> Result<(), SignalError> {
        let bad = |m: String| Err(SignalError::InvalidWindowing(m));
        if self.window_len < 2 {
            return bad(format!("window_len {} < 2", self.window_len));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return bad(format!("overlap {} outside [0, 1)", self.overlap));
        }
        let shared = self.overlap * self.window_len as f64;
        if (shared - shared.round()).abs() > 1e-9 {
            return bad(format!(
                "overlap {} x window_len {} is not a whole number of samples",
                self.overlap, self.window_len
            ));
        }
        if let Some(w) = self.smoothing_len {
            if w == 0 || w % 2 == 0 {
                return bad(format!("smoothing_len {w} must be odd and positive"));
            }
        }
        Ok(())
    }

    /// Samples between consecutive window starts.
    pub fn stride(&self) -> usize {
        self.window_len - (self.overlap * self.window_len as f64).round() as usize
    }

    /// Number of complete windows in a signal of `len` samples.
    pub fn window_count(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            (len - self.window_len) / self.stride() + 1
        }
    }
}

/// Per-window Fourier magnitudes of bins `1..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: RowMatrix,
    pub window_len: usize,
    pub sample_rate: u32,
    pub start_samples: Vec<usize>,
    pub start_times: Vec<f64>,
}

/// Sidecar metadata written next to the feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub n: usize,
    pub m: usize,
    pub window_len: usize,
    pub sample_rate: u32,
    pub start_times: Vec<f64>,
}

impl FeatureMatrix {
    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn m(&self) -> usize {
        self.values.cols()
    }

    pub fn meta(&self) -> FeatureMeta {
        FeatureMeta {
            n: self.n(),
            m: self.m(),
            window_len: self.window_len,
            sample_rate: self.sample_rate,
            start_times: self.start_times.clone(),
        }
    }

    /// One CSV row per window, columns `c1..cm`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((1..=self.m()).map(|j| format!("c{j}")))?;
        for row in self.values.iter_rows() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn taper_weights(taper: Taper, len: usize) -> Option<Vec<f64>> {
    match taper {
        Taper::Box => None,
        Taper::Hamming => {
            let denom = (len - 1) as f64;
            Some(
                (0..len)
                    .map(|i| 0.54 - 0.46 * (std::f64::consts::TAU * i as f64 / denom).cos())
                    .collect(),
            )
        }
    }
}

fn transform(fft: &Arc<dyn Fft<f64>>, window: &[f64], weights: Option<&[f64]>) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = match weights {
        Some(w) => window.iter().zip(w).map(|(x, w)| Complex64::new(x * w, 0.0)).collect(),
        None => window.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
    };
    fft.process(&mut buf);
    buf
}

/// Unnormalized forward DFT of one window after tapering.
pub fn full_spectrum(window: &[f64], taper: Taper) -> Vec<Complex64> {
    let fft = FftPlanner::new().plan_fft_forward(window.len());
    let weights = taper_weights(taper, window.len());
    transform(&fft, window, weights.as_deref())
}

fn moving_mean(row: &mut [f64], width: usize) {
    if width <= 1 {
        return;
    }
    let half = width / 2;
    let mut prefix = Vec::with_capacity(row.len() + 1);
    prefix.push(0.0);
    for &v in row.iter() {
        prefix.push(prefix.last().unwrap() + v);
    }
    for (j, out) in row.iter_mut().enumerate() {
        let lo = j.saturating_sub(half);
        let hi = (j + half + 1).min(prefix.len() - 1);
        *out = ((prefix[hi] - prefix[lo]) / (hi - lo) as f64).max(0.0);
    }
}

/// Split `signal` into windows and keep magnitudes of DFT bins `1..=m` per window.
pub fn stft_features(signal: &AudioSignal, cfg: &WindowingConfig, m: usize) -> Result<FeatureMatrix, SignalError> {
    cfg.validate()?;
    let max = cfg.window_len / 2;
    if m == 0 || m > max {
        return Err(SignalError::CoefficientsOutOfRange { m, max });
    }
    if signal.len() < cfg.window_len {
        return Err(SignalError::SignalTooShort {
            len: signal.len(),
            window_len: cfg.window_len,
        });
    }
    let n = cfg.window_count(signal.len());
    let stride = cfg.stride();
    let fft = FftPlanner::new().plan_fft_forward(cfg.window_len);
    let weights = taper_weights(cfg.taper, cfg.window_len);
    let samples = signal.samples();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let start = i * stride;
            let spec = transform(&fft, &samples[start..start + cfg.window_len], weights.as_deref());
            let mut row: Vec<f64> = spec[1..=m].iter().map(|c| c.norm()).collect();
            if let Some(w) = cfg.smoothing_len {
                moving_mean(&mut row, w);
            }
            row
        })
        .collect();

    let start_samples: Vec<usize> = (0..n).map(|i| i * stride).collect();
    let sr = signal.sample_rate() as f64;
    Ok(FeatureMatrix {
        values: RowMatrix::from_rows(&rows),
        window_len: cfg.window_len,
        sample_rate: signal.sample_rate(),
        start_times: start_samples.iter().map(|&s| s as f64 / sr).collect(),
        start_samples,
    })
}

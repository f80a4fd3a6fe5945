//! Synthetic data with known ground truth: noisy block similarity matrices
//! and harmonic engine-tone audio for several vehicles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, SimilarityGraph};
use crate::matrix::RowMatrix;
use crate::rng::PortableRng;
use crate::signal::{AudioSignal, LabelSpan, ManifestEntry, SignalError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid block spec: {0}")]
    BlockSpec(String),
    #[error("invalid vehicle spec: {0}")]
    VehicleSpec(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Coarse grouping of the fine blocks with its own similarity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hierarchy {
    /// Coarse group of each fine block.
    pub groups: Vec<usize>,
    /// Similarity between different fine blocks of one coarse group.
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockSpec {
    pub block_sizes: Vec<usize>,
    pub in_block_similarity: f64,
    pub cross_block_similarity: f64,
    /// Fraction of off-diagonal pairs flipped between the high and low levels.
    pub noise_fraction: f64,
    pub rng_seed: u64,
    pub hierarchy: Option<Hierarchy>,
}

impl Default for BlockSpec {
    /// Blocks of 40, 30 and 30 points with the last two nested in one coarse block.
    fn default() -> Self {
        Self {
            block_sizes: vec![40, 30, 30],
            in_block_similarity: 0.9,
            cross_block_similarity: 0.05,
            noise_fraction: 0.05,
            rng_seed: 0,
            hierarchy: Some(Hierarchy {
                groups: vec![0, 1, 1],
                similarity: 0.3,
            }),
        }
    }
}

impl BlockSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BlockSpec(m));
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return bad("block sizes must be positive and non-empty".into());
        }
        let (hi, lo) = (self.in_block_similarity, self.cross_block_similarity);
        if !(hi > 0.0 && hi <= 1.0) || !(0.0..1.0).contains(&lo) || hi <= lo {
            return bad(format!("need 0 <= cross ({lo}) < in ({hi}) <= 1"));
        }
        if !(0.0..0.5).contains(&self.noise_fraction) {
            return bad(format!("noise_fraction {} outside [0, 0.5)", self.noise_fraction));
        }
        if let Some(h) = &self.hierarchy {
            if h.groups.len() != self.block_sizes.len() {
                return bad("hierarchy needs one group per block".into());
            }
            if !(h.similarity > lo && h.similarity < hi) {
                return bad(format!(
                    "nested similarity {} must lie between cross and in",
                    h.similarity
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BlockSample {
    /// Dense similarity with unit diagonal.
    pub similarity: RowMatrix,
    pub graph: SimilarityGraph,
    pub fine_labels: Vec<usize>,
    /// Equal to `fine_labels` when no hierarchy is given.
    pub coarse_labels: Vec<usize>,
}

/// Block similarity matrix with symmetric salt-and-pepper flips.
pub fn gen_block_similarity(spec: &BlockSpec) -> Result<BlockSample, SynthError> {
    spec.validate()?;
    let fine_labels: Vec<usize> = spec
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let coarse_labels: Vec<usize> = match &spec.hierarchy {
        Some(h) => {
            // renumber groups densely by first appearance
            let mut dense: Vec<usize> = Vec::new();
            let ids: Vec<usize> = h
                .groups
                .iter()
                .map(|g| match dense.iter().position(|d| d == g) {
                    Some(i) => i,
                    None => {
                        dense.push(*g);
                        dense.len() - 1
                    }
                })
                .collect();
            fine_labels.iter().map(|&b| ids[b]).collect()
        }
        None => fine_labels.clone(),
    };
    let n = fine_labels.len();
    let (hi, lo) = (spec.in_block_similarity, spec.cross_block_similarity);
    let mid = 0.5 * (hi + lo);
    let mut s = RowMatrix::zeros(n, n);
    for i in 0..n {
        s.set(i, i, 1.0);
        for j in (i + 1)..n {
            let v = if fine_labels[i] == fine_labels[j] {
                hi
            } else if coarse_labels[i] == coarse_labels[j] {
                spec.hierarchy.as_ref().map_or(lo, |h| h.similarity)
            } else {
                lo
            };
            s.set(i, j, v);
            s.set(j, i, v);
        }
    }

    let pairs = n * (n - 1) / 2;
    let flips = (spec.noise_fraction * pairs as f64).round() as usize;
    let mut rng = PortableRng::new(spec.rng_seed);
    let mut order: Vec<usize> = (0..pairs).collect();
    for f in 0..flips {
        let pick = f + rng.index(pairs - f);
        order.swap(f, pick);
        let (i, j) = pair_from_index(order[f], n);
        let v = if s.get(i, j) >= mid { lo } else { hi };
        s.set(i, j, v);
        s.set(j, i, v);
    }

    let graph = SimilarityGraph::from_dense(&s, n - 1)?;
    Ok(BlockSample {
        similarity: s,
        graph,
        fine_labels,
        coarse_labels,
    })
}

/// Inverse of the row-major enumeration of pairs `i < j`.
fn pair_from_index(mut idx: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    while idx >= n - 1 - i {
        idx -= n - 1 - i;
        i += 1;
    }
    (i, i + 1 + idx)
}

/// Amplitude envelope of one passage: a raised-cosine rise from `floor` to
/// 1, a plateau, and a symmetric fall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Envelope {
    pub rise_s: f64,
    pub fall_s: f64,
    pub floor: f64,
}

impl Default for Envelope {
    fn default() -> Self {
        Self {
            rise_s: 0.3,
            fall_s: 0.3,
            floor: 0.3,
        }
    }
}

impl Envelope {
    pub fn gain(&self, t: f64, duration: f64) -> f64 {
        let ramp = |x: f64| 0.5 - 0.5 * (std::f64::consts::PI * x.clamp(0.0, 1.0)).cos();
        let up = if self.rise_s > 0.0 { ramp(t / self.rise_s) } else { 1.0 };
        let down = if self.fall_s > 0.0 {
            ramp((duration - t) / self.fall_s)
        } else {
            1.0
        };
        self.floor + (1.0 - self.floor) * up.min(down)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub name: String,
    pub fundamental_hz: f64,
    /// Amplitude of harmonic `h + 1` at index `h`.
    pub harmonic_amps: Vec<f64>,
    /// Standard deviation of the white noise floor.
    pub broadband_level: f64,
    #[serde(default)]
    pub envelope: Envelope,
    /// Relative spread of the fundamental between passages.
    #[serde(default = "default_jitter")]
    pub pitch_jitter: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_jitter() -> f64 {
    0.003
}

/// Three vehicles with fundamentals at 30, 45 and 70 Hz.
pub fn default_vehicle_bank() -> Vec<VehicleSpec> {
    let make = |name: &str, f: f64, amps: &[f64], seed: u64| VehicleSpec {
        name: name.into(),
        fundamental_hz: f,
        harmonic_amps: amps.to_vec(),
        broadband_level: 2.0,
        envelope: Envelope::default(),
        pitch_jitter: default_jitter(),
        rng_seed: seed,
    };
    vec![
        make("white_truck", 30.0, &[1.0, 0.8, 0.6, 0.45, 0.3, 0.2, 0.12, 0.08], 11),
        make("black_truck", 45.0, &[1.0, 0.5, 0.35, 0.2, 0.1, 0.05], 23),
        make("jeep", 70.0, &[0.7, 1.0, 0.5, 0.3, 0.15, 0.08], 37),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Passage {
    pub vehicle: usize,
    pub duration_s: f64,
}

/// Three 2 s passages of each of three vehicles, interleaved.
pub fn default_schedule() -> Vec<Passage> {
    [0, 1, 2, 1, 0, 2, 2, 0, 1]
        .into_iter()
        .map(|vehicle| Passage {
            vehicle,
            duration_s: 2.0,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct VehicleAudio {
    pub signal: AudioSignal,
    /// Clips of `wav_name` in schedule order, one per passage.
    pub manifest: Vec<ManifestEntry>,
    pub spans: Vec<LabelSpan>,
}

const PEAK: f64 = 0.95;

fn validate_vehicles(specs: &[VehicleSpec]) -> Result<(), SynthError> {
    let bad = |m: String| Err(SynthError::VehicleSpec(m));
    if specs.len() < 2 {
        return bad(format!("need at least 2 vehicles, got {}", specs.len()));
    }
    for v in specs {
        if !(v.fundamental_hz > 0.0 && v.fundamental_hz.is_finite()) {
            return bad(format!("{}: fundamental must be positive", v.name));
        }
        if v.harmonic_amps.iter().any(|&a| !(a >= 0.0)) || !v.harmonic_amps.iter().any(|&a| a > 0.0) {
            return bad(format!(
                "{}: need nonnegative harmonic amplitudes, one positive",
                v.name
            ));
        }
        if !(v.broadband_level >= 0.0) {
            return bad(format!("{}: broadband level must be >= 0", v.name));
        }
        if !(0.0..=1.0).contains(&v.envelope.floor) || v.envelope.rise_s < 0.0 || v.envelope.fall_s < 0.0 {
            return bad(format!("{}: bad envelope", v.name));
        }
        if !(0.0..0.1).contains(&v.pitch_jitter) {
            return bad(format!("{}: pitch jitter must lie in [0, 0.1)", v.name));
        }
    }
    for (a, va) in specs.iter().enumerate() {
        for vb in &specs[a + 1..] {
            let lo = va.fundamental_hz.min(vb.fundamental_hz);
            if (va.fundamental_hz - vb.fundamental_hz).abs() < 0.15 * lo {
                return bad(format!("{} and {} fundamentals differ by < 15%", va.name, vb.name));
            }
        }
    }
    Ok(())
}

/// Render the schedule as one composite signal with matching manifest rows
/// naming `wav_name`. The composite is scaled to a peak of 0.95.
pub fn gen_vehicle_audio(
    specs: &[VehicleSpec],
    schedule: &[Passage],
    sample_rate: u32,
    window_len: usize,
    wav_name: &str,
) -> Result<VehicleAudio, SynthError> {
    validate_vehicles(specs)?;
    if schedule.is_empty() {
        return Err(SynthError::Schedule("no passages".into()));
    }
    if sample_rate == 0 || window_len == 0 {
        return Err(SynthError::Schedule(
            "sample rate and window length must be positive".into(),
        ));
    }
    let sr = sample_rate as f64;
    let mut lens = Vec::with_capacity(schedule.len());
    for (p, pass) in schedule.iter().enumerate() {
        if pass.vehicle >= specs.len() {
            return Err(SynthError::Schedule(format!(
                "passage {p} names vehicle {}",
                pass.vehicle
            )));
        }
        let samples = pass.duration_s * sr;
        if !(pass.duration_s > 0.0) || (samples - samples.round()).abs() > 1e-6 {
            return Err(SynthError::Schedule(format!(
                "passage {p}: {} s is not a whole number of samples",
                pass.duration_s
            )));
        }
        lens.push(samples.round() as usize);
    }
    let total: usize = lens.iter().sum();
    if total % window_len != 0 {
        return Err(SynthError::Schedule(format!(
            "total length {total} is not a multiple of the window length {window_len}"
        )));
    }

    let mut samples = Vec::with_capacity(total);
    let mut spans = Vec::with_capacity(schedule.len());
    let mut manifest = Vec::with_capacity(schedule.len());
    for (p, (pass, &len)) in schedule.iter().zip(&lens).enumerate() {
        let v = &specs[pass.vehicle];
        let mut rng = PortableRng::derive(v.rng_seed, p as u64);
        let f0 = v.fundamental_hz * (1.0 + v.pitch_jitter * (2.0 * rng.unit() - 1.0));
        let phases: Vec<f64> = v
            .harmonic_amps
            .iter()
            .map(|_| std::f64::consts::TAU * rng.unit())
            .collect();
        let start = samples.len();
        for i in 0..len {
            let t = i as f64 / sr;
            let tone: f64 = v
                .harmonic_amps
                .iter()
                .zip(&phases)
                .enumerate()
                .map(|(h, (a, ph))| a * (std::f64::consts::TAU * (h + 1) as f64 * f0 * t + ph).sin())
                .sum();
            samples.push(v.envelope.gain(t, pass.duration_s) * tone + v.broadband_level * rng.normal());
        }
        spans.push(LabelSpan {
            label: pass.vehicle,
            start_sample: start,
            end_sample: start + len,
        });
        manifest.push(ManifestEntry {
            path: wav_name.into(),
            label: v.name.clone(),
            start_s: start as f64 / sr,
            duration_s: pass.duration_s,
        });
    }
    let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        let g = PEAK / peak;
        samples.iter_mut().for_each(|x| *x *= g);
    }
    Ok(VehicleAudio {
        signal: AudioSignal::new(samples, sample_rate)?,
        manifest,
        spans,
    })
}

//! Declarative run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use acoustic_cluster::incres::IncresConfig;
use acoustic_cluster::signal::WindowingConfig;
use acoustic_cluster::spectral::KMeansConfig;
use acoustic_cluster::synth::{BlockSpec, Passage, VehicleSpec};
use serde::{Deserialize, Serialize};

use crate::PipelineError;

/// Where the windows come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Input {
    /// Clips listed in a `path,label,start_s,duration_s` CSV. Clip paths are
    /// relative to the manifest.
    Manifest { manifest: PathBuf },
    /// Generated vehicle passages; the built-in bank and schedule when absent.
    Vehicles {
        #[serde(default = "default_sample_rate")]
        sample_rate: u32,
        #[serde(default)]
        vehicles: Option<Vec<VehicleSpec>>,
        #[serde(default)]
        schedule: Option<Vec<Passage>>,
    },
    /// A generated block similarity matrix, clustered directly.
    Blocks {
        #[serde(default)]
        spec: BlockSpec,
    },
}

fn default_sample_rate() -> u32 {
    48_000
}

impl Default for Input {
    fn default() -> Self {
        Input::Vehicles {
            sample_rate: default_sample_rate(),
            vehicles: None,
            schedule: None,
        }
    }
}

/// Fixed cluster count or selection by the largest eigengap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "KRepr", into = "KRepr")]
pub enum KChoice {
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<KRepr> for KChoice {
    type Error = String;

    fn try_from(r: KRepr) -> Result<Self, String> {
        match r {
            KRepr::Count(k) => Ok(KChoice::Fixed(k)),
            KRepr::Word(w) => w.parse(),
        }
    }
}

impl From<KChoice> for KRepr {
    fn from(k: KChoice) -> Self {
        match k {
            KChoice::Auto => KRepr::Word("auto".into()),
            KChoice::Fixed(k) => KRepr::Count(k),
        }
    }
}

impl FromStr for KChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(KChoice::Auto);
        }
        s.parse()
            .map(KChoice::Fixed)
            .map_err(|_| format!("k must be a count or \"auto\", got {s:?}"))
    }
}

impl fmt::Display for KChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KChoice::Auto => f.write_str("auto"),
            KChoice::Fixed(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Spectral,
    Incres,
    IncresEmbedding,
    /// Spectral and INCRES; INCRES labels are the primary output.
    #[default]
    Both,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::Incres => "incres",
            Method::IncresEmbedding => "incres-embedding",
            Method::Both => "both",
        }
    }

    /// The concrete algorithms to run, primary last.
    pub fn runs(self) -> &'static [Method] {
        match self {
            Method::Both => &[Method::Spectral, Method::Incres],
            Method::Spectral => &[Method::Spectral],
            Method::Incres => &[Method::Incres],
            Method::IncresEmbedding => &[Method::IncresEmbedding],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Input,
    pub windowing: WindowingConfig,
    /// Fourier coefficients kept per window.
    pub m: usize,
    /// Neighbor count of the similarity graph.
    pub knn: usize,
    pub k: KChoice,
    /// Largest count considered by eigengap selection.
    pub k_max: usize,
    /// Eigenpairs computed, raised when `k` needs more.
    pub eigenpairs: usize,
    pub method: Method,
    pub incres: IncresConfig,
    pub kmeans: KMeansConfig,
    pub row_normalize: bool,
    pub out: PathBuf,
    pub write_features: bool,
    pub write_graph: bool,
    pub plots: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: Input::default(),
            windowing: WindowingConfig::default(),
            m: 1500,
            knn: 15,
            k: KChoice::Auto,
            k_max: 8,
            eigenpairs: 20,
            method: Method::Both,
            incres: IncresConfig::default(),
            kmeans: KMeansConfig::default(),
            row_normalize: false,
            out: PathBuf::from("out"),
            write_features: false,
            write_graph: false,
            plots: true,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Read a config file; a relative manifest path is taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Input::Manifest { manifest } = &mut cfg.input {
            if manifest.is_relative() {
                if let Some(dir) = path.parent() {
                    *manifest = dir.join(&*manifest);
                }
            }
        }
        Ok(cfg)
    }

    /// Set both clustering seeds.
    pub fn set_seed(&mut self, seed: u64) {
        self.incres.rng_seed = seed;
        self.kmeans.seed = seed;
    }

    /// Checks that need no input data.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.windowing
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.m == 0 || self.m > self.windowing.window_len / 2 {
            return bad(format!(
                "m = {} must lie in 1..={}",
                self.m,
                self.windowing.window_len / 2
            ));
        }
        if self.knn == 0 {
            return bad("knn must be positive".into());
        }
        if self.k_max < 2 {
            return bad(format!("k_max must be at least 2, got {}", self.k_max));
        }
        if let KChoice::Fixed(k) = self.k {
            if k < 2 {
                return bad(format!("k must be at least 2, got {k}"));
            }
        }
        if self.eigenpairs < 2 {
            return bad("eigenpairs must be at least 2".into());
        }
        if self.kmeans.restarts == 0 || self.kmeans.max_iter == 0 {
            return bad("kmeans restarts and max_iter must be positive".into());
        }
        let probe = IncresConfig {
            k: 2,
            ..self.incres.clone()
        };
        probe.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        match &self.input {
            Input::Manifest { manifest } if !manifest.is_file() => {
                bad(format!("manifest {} does not exist", manifest.display()))
            }
            Input::Blocks { spec } => spec.validate().map_err(|e| PipelineError::Config(e.to_string())),
            _ => Ok(()),
        }
    }
}

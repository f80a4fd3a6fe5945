//! Incremental reseeding: plant seeds inside the current clusters, grow
//! them by random-walk propagation until every vertex is reached, harvest
//! by argmax, and repeat with a growing number of seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::SimilarityGraph;
use crate::matrix::RowMatrix;
use crate::partition::Partition;
use crate::rng::{derive_seed, PortableRng};
use crate::spectral::{kmeans, KMeansConfig, KMeansResult, SpectralError};

#[derive(Debug, Error, PartialEq)]
pub enum IncresError {
    #[error("INCRES needs k >= 2, got {0}")]
    TooFewClusters(usize),
    #[error("INCRES needs at least one iteration")]
    NoIterations,
    #[error("seed_rate must be positive, got {0}")]
    SeedRate(f64),
    #[error("cannot form {k} clusters from {n} vertices")]
    ClusterCount { k: usize, n: usize },
    #[error("seed matrix has {got} rows, graph has {n} vertices")]
    Dimension { got: usize, n: usize },
    #[error(transparent)]
    KMeans(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncresConfig {
    pub k: usize,
    pub iterations: usize,
    /// Seeds per cluster at iteration `t` are `max(1, floor(seed_rate * t))`.
    pub seed_rate: f64,
    pub rng_seed: u64,
    /// Propagation steps allowed per iteration; `None` means `10 n`.
    pub grow_cap: Option<usize>,
}

impl Default for IncresConfig {
    fn default() -> Self {
        Self {
            k: 3,
            iterations: 200,
            seed_rate: 0.1,
            rng_seed: 0,
            grow_cap: None,
        }
    }
}

impl IncresConfig {
    pub fn validate(&self) -> Result<(), IncresError> {
        if self.k < 2 {
            return Err(IncresError::TooFewClusters(self.k));
        }
        if self.iterations == 0 {
            return Err(IncresError::NoIterations);
        }
        if !(self.seed_rate > 0.0 && self.seed_rate.is_finite()) {
            return Err(IncresError::SeedRate(self.seed_rate));
        }
        Ok(())
    }

    pub fn seeds_at(&self, t: usize) -> usize {
        ((self.seed_rate * t as f64).floor() as usize).max(1)
    }
}

/// Column-stochastic random-walk matrix `P = S D^{-1}`, stored by row.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

pub fn transition_matrix(graph: &SimilarityGraph) -> TransitionMatrix {
    let d = graph.degrees();
    TransitionMatrix {
        rows: (0..graph.n())
            .map(|i| graph.neighbors(i).iter().map(|&(j, s)| (j, s / d[j])).collect())
            .collect(),
    }
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> RowMatrix {
        let n = self.n();
        let mut out = RowMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                out.set(i, j, p);
            }
        }
        out
    }

    /// `P F`.
    pub fn apply(&self, f: &SeedMatrix) -> SeedMatrix {
        let k = f.k();
        let mut out = RowMatrix::zeros(self.n(), k);
        for (i, row) in self.rows.iter().enumerate() {
            let dst = out.row_mut(i);
            for &(j, p) in row {
                for (d, s) in dst.iter_mut().zip(f.values.row(j)) {
                    *d += p * s;
                }
            }
        }
        SeedMatrix { values: out }
    }

    /// `(F + P F) / 2`, the lazy walk. Support never shrinks under it.
    pub fn lazy_apply(&self, f: &SeedMatrix) -> SeedMatrix {
        let mut out = self.apply(f);
        for (o, x) in out.values.as_mut_slice().iter_mut().zip(f.values.as_slice()) {
            *o = 0.5 * (*o + x);
        }
        out
    }
}

/// `n x k` nonnegative mass; column `c` belongs to cluster `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedMatrix {
    pub values: RowMatrix,
}

impl SeedMatrix {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            values: RowMatrix::zeros(n, k),
        }
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn k(&self) -> usize {
        self.values.cols()
    }

    pub fn column_mass(&self) -> Vec<f64> {
        (0..self.k()).map(|c| self.values.column(c).iter().sum()).collect()
    }

    pub fn row_supported(&self, i: usize) -> bool {
        self.values.row(i).iter().any(|&v| v > 0.0)
    }

    pub fn fully_supported(&self) -> bool {
        (0..self.n()).all(|i| self.row_supported(i))
    }
}

/// Drop `seeds_per_cluster` seeds into each cluster, uniformly with
/// replacement among its members; an empty cluster draws from all points.
pub fn plant(partition: &Partition, seeds_per_cluster: usize, rng: &mut PortableRng) -> SeedMatrix {
    let n = partition.len();
    let k = partition.k();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in partition.labels().iter().enumerate() {
        members[l].push(i);
    }
    let mut f = SeedMatrix::zeros(n, k);
    for (c, m) in members.iter().enumerate() {
        for _ in 0..seeds_per_cluster {
            let i = if m.is_empty() {
                rng.index(n)
            } else {
                m[rng.index(m.len())]
            };
            f.values.set(i, c, f.values.get(i, c) + 1.0);
        }
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowOutcome {
    pub seeds: SeedMatrix,
    pub steps: usize,
    /// The cap was reached with some rows still unreached.
    pub cap_exhausted: bool,
}

/// Apply the lazy walk `(I + P) / 2` until every row carries mass, or `cap`
/// steps. A plain `P` step can move mass off a vertex (on bipartite pieces
/// it oscillates forever); the lazy step reaches exactly the vertices within
/// `t` hops after `t` steps and still conserves column mass.
pub fn grow(f: SeedMatrix, p: &TransitionMatrix, cap: usize) -> Result<GrowOutcome, IncresError> {
    if f.n() != p.n() {
        return Err(IncresError::Dimension { got: f.n(), n: p.n() });
    }
    let mut f = f;
    let mut steps = 0;
    while !f.fully_supported() {
        if steps == cap {
            return Ok(GrowOutcome {
                seeds: f,
                steps,
                cap_exhausted: true,
            });
        }
        f = p.lazy_apply(&f);
        steps += 1;
    }
    Ok(GrowOutcome {
        seeds: f,
        steps,
        cap_exhausted: false,
    })
}

/// Row-wise argmax (ties to the smallest cluster). Rows without mass keep
/// their label from `previous`, or 0 without one.
pub fn harvest(f: &SeedMatrix, previous: Option<&Partition>) -> Partition {
    let labels = (0..f.n())
        .map(|i| {
            let row = f.values.row(i);
            if !row.iter().any(|&v| v > 0.0) {
                return previous.map_or(0, |p| p.labels()[i]);
            }
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Partition::new(labels, f.k())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncresResult {
    pub partition: Partition,
    /// Grown seed matrix of the final iteration.
    pub seeds: SeedMatrix,
    pub grow_steps: Vec<usize>,
    pub cap_exhausted: Vec<bool>,
}

/// Run metadata as written next to the labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncresMeta {
    pub k: usize,
    pub iterations: usize,
    pub seed_rate: f64,
    pub rng_seed: u64,
    pub grow_steps_per_iteration: Vec<usize>,
    pub cap_exhausted_flags: Vec<bool>,
}

impl IncresResult {
    pub fn meta(&self, cfg: &IncresConfig) -> IncresMeta {
        IncresMeta {
            k: cfg.k,
            iterations: cfg.iterations,
            seed_rate: cfg.seed_rate,
            rng_seed: cfg.rng_seed,
            grow_steps_per_iteration: self.grow_steps.clone(),
            cap_exhausted_flags: self.cap_exhausted.clone(),
        }
    }

    pub fn any_cap_exhausted(&self) -> bool {
        self.cap_exhausted.iter().any(|&b| b)
    }
}

/// Full plant/grow/harvest loop from a uniform random partition.
pub fn incres_cluster(graph: &SimilarityGraph, cfg: &IncresConfig) -> Result<IncresResult, IncresError> {
    cfg.validate()?;
    let n = graph.n();
    if cfg.k > n {
        return Err(IncresError::ClusterCount { k: cfg.k, n });
    }
    let p = transition_matrix(graph);
    let cap = cfg.grow_cap.unwrap_or(10 * n);
    let mut rng = PortableRng::new(cfg.rng_seed);
    let mut partition = Partition::new((0..n).map(|_| rng.index(cfg.k)).collect(), cfg.k);
    let mut grow_steps = Vec::with_capacity(cfg.iterations);
    let mut cap_exhausted = Vec::with_capacity(cfg.iterations);
    let mut seeds = SeedMatrix::zeros(n, cfg.k);

    for t in 1..=cfg.iterations {
        let planted = plant(&partition, cfg.seeds_at(t), &mut rng);
        let grown = grow(planted, &p, cap)?;
        partition = harvest(&grown.seeds, Some(&partition));
        grow_steps.push(grown.steps);
        cap_exhausted.push(grown.cap_exhausted);
        seeds = grown.seeds;
    }
    Ok(IncresResult {
        partition,
        seeds,
        grow_steps,
        cap_exhausted,
    })
}

/// Seed used for the `j`-cluster run inside [`incres_embedding`].
pub fn embedding_run_seed(rng_seed: u64, j: usize) -> u64 {
    derive_seed(rng_seed, j as u64)
}

/// One column per `j = 2..=k` built from a `j`-cluster INCRES run.
///
/// Clusters of each run are ranked by size (descending, ties to the lower
/// label) and rank `r` maps to the level `1 - 2r/(j-1)` in `[-1, 1]`. For
/// `j = 2` the column is that signed indicator; for `j > 2` the level is
/// scaled by the harvest margin `F[i, label] / sum_c F[i, c]`.
pub fn incres_embedding(graph: &SimilarityGraph, k: usize, cfg: &IncresConfig) -> Result<RowMatrix, IncresError> {
    if k < 2 {
        return Err(IncresError::TooFewClusters(k));
    }
    let columns: Vec<Vec<f64>> = (2..=k)
        .into_par_iter()
        .map(|j| {
            let run_cfg = IncresConfig {
                k: j,
                rng_seed: embedding_run_seed(cfg.rng_seed, j),
                ..cfg.clone()
            };
            let run = incres_cluster(graph, &run_cfg)?;
            Ok(encode_column(&run))
        })
        .collect::<Result<_, IncresError>>()?;
    let n = graph.n();
    let mut out = RowMatrix::zeros(n, k - 1);
    for (c, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            out.set(i, c, v);
        }
    }
    Ok(out)
}

fn encode_column(run: &IncresResult) -> Vec<f64> {
    let j = run.partition.k();
    let sizes = run.partition.sizes();
    let mut by_size: Vec<usize> = (0..j).collect();
    by_size.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut level = vec![0.0; j];
    for (rank, &c) in by_size.iter().enumerate() {
        level[c] = 1.0 - 2.0 * rank as f64 / (j - 1) as f64;
    }
    run.partition
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            if j == 2 {
                return level[l];
            }
            let row = run.seeds.values.row(i);
            let total: f64 = row.iter().sum();
            let margin = if total > 0.0 { row[l] / total } else { 1.0 / j as f64 };
            level[l] * margin
        })
        .collect()
}

/// k-means on [`incres_embedding`].
pub fn incres_embedding_cluster(
    graph: &SimilarityGraph,
    k: usize,
    cfg: &IncresConfig,
    kmeans_cfg: &KMeansConfig,
) -> Result<KMeansResult, IncresError> {
    let emb = incres_embedding(graph, k, cfg)?;
    Ok(kmeans(&emb, k, kmeans_cfg)?)
}

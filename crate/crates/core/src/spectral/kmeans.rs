//! Lloyd's algorithm with k-means++ seeding and best-of-n restarts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::matrix::{squared_distance, RowMatrix};
use crate::partition::Partition;
use crate::rng::PortableRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once the relative WCSS decrease falls to this value.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iter: 300,
            tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub partition: Partition,
    pub centroids: RowMatrix,
    pub wcss: f64,
    /// Lloyd iterations of each restart, in restart order.
    pub iterations: Vec<usize>,
    /// WCSS after every iteration of the selected restart.
    pub wcss_history: Vec<f64>,
    /// Fewer distinct points than clusters.
    pub degenerate: bool,
}

/// Outcome of one Lloyd run from fixed initial centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub labels: Vec<usize>,
    pub centroids: RowMatrix,
    pub wcss: f64,
    pub iterations: usize,
    pub wcss_history: Vec<f64>,
}

fn nearest(point: &[f64], centroids: &RowMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter_rows().enumerate() {
        let d = squared_distance(point, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding. Returns the centroids and whether the D^2 mass
/// vanished before `k` centers were chosen.
pub fn plus_plus_init(points: &RowMatrix, k: usize, rng: &mut PortableRng) -> (RowMatrix, bool) {
    let n = points.rows();
    let mut chosen = vec![rng.index(n)];
    let mut dist: Vec<f64> = points
        .iter_rows()
        .map(|p| squared_distance(p, points.row(chosen[0])))
        .collect();
    let mut degenerate = false;
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let target = rng.unit() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in dist.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            while dist[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            degenerate = true;
            rng.index(n)
        };
        chosen.push(next);
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(squared_distance(points.row(i), points.row(next)));
        }
    }
    let rows: Vec<&[f64]> = chosen.iter().map(|&i| points.row(i)).collect();
    (RowMatrix::from_rows(&rows), degenerate)
}

/// Lloyd iterations from the given centroids.
///
/// An emptied cluster takes the point farthest from its own centroid among
/// clusters that have more than one member.
pub fn lloyd(points: &RowMatrix, init: RowMatrix, max_iter: usize, tol: f64) -> LloydRun {
    let n = points.rows();
    let k = init.rows();
    let d = points.cols();
    let mut centroids = init;
    let mut labels = vec![0usize; n];
    let mut history = Vec::new();
    let mut iterations = 0;

    for it in 0..max_iter.max(1) {
        iterations = it + 1;
        let mut changed = false;
        let mut sq = vec![0.0; n];
        for i in 0..n {
            let (c, dist) = nearest(points.row(i), &centroids);
            if it == 0 || labels[i] != c {
                changed = true;
            }
            labels[i] = c;
            sq[i] = dist;
        }
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| sq[a].total_cmp(&sq[b]).then(b.cmp(&a)));
            if let Some(i) = donor {
                sizes[labels[i]] -= 1;
                labels[i] = c;
                sizes[c] = 1;
                sq[i] = 0.0;
                changed = true;
            }
        }

        let mut sums = RowMatrix::zeros(k, d);
        for i in 0..n {
            for (s, x) in sums.row_mut(labels[i]).iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                let inv = 1.0 / sizes[c] as f64;
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
        let wcss: f64 = (0..n)
            .map(|i| squared_distance(points.row(i), centroids.row(labels[i])))
            .sum();
        let prev = history.last().copied();
        history.push(wcss);
        if !changed {
            break;
        }
        if let Some(prev) = prev {
            if prev - wcss <= tol * prev {
                break;
            }
        }
    }

    LloydRun {
        wcss: *history.last().unwrap(),
        labels,
        centroids,
        iterations,
        wcss_history: history,
    }
}

/// Best-of-`restarts` k-means on the rows of `points`.
pub fn kmeans(points: &RowMatrix, k: usize, cfg: &KMeansConfig) -> Result<KMeansResult, SpectralError> {
    let n = points.rows();
    if n == 0 || points.cols() == 0 {
        return Err(SpectralError::EmptyInput);
    }
    if k == 0 || k > n {
        return Err(SpectralError::ClusterCount { k, n });
    }
    let restarts = cfg.restarts.max(1);
    let runs: Vec<(LloydRun, bool)> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = PortableRng::derive(cfg.seed, r);
            let (init, degenerate) = plus_plus_init(points, k, &mut rng);
            (lloyd(points, init, cfg.max_iter, cfg.tol), degenerate)
        })
        .collect();

    let iterations = runs.iter().map(|r| r.0.iterations).collect();
    let degenerate = runs.iter().any(|r| r.1);
    // first minimum wins, so ties go to the lowest restart index
    let (best, _) = runs
        .into_iter()
        .reduce(|a, b| if b.0.wcss < a.0.wcss { b } else { a })
        .expect("at least one restart");

    let raw = Partition::new(best.labels, k);
    let canon = raw.canonical();
    let mut order = vec![0usize; k];
    let mut seen = vec![false; k];
    for (&old, &new) in raw.labels().iter().zip(canon.labels()) {
        if !seen[old] {
            seen[old] = true;
            order[new] = old;
        }
    }
    let mut next = canon.labels().iter().max().map_or(0, |m| m + 1);
    for (old, s) in seen.iter().enumerate() {
        if !s {
            order[next] = old;
            next += 1;
        }
    }
    let rows: Vec<&[f64]> = order.iter().map(|&c| best.centroids.row(c)).collect();

    Ok(KMeansResult {
        partition: canon,
        centroids: RowMatrix::from_rows(&rows),
        wcss: best.wcss,
        iterations,
        wcss_history: best.wcss_history,
        degenerate,
    })
}

/// Within-cluster sum of squares of an arbitrary labeling.
pub fn wcss(points: &RowMatrix, labels: &[usize], k: usize) -> f64 {
    let d = points.cols();
    let mut sums = RowMatrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, x) in sums.row_mut(l).iter_mut().zip(points.row(i)) {
            *s += x;
        }
    }
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let inv = 1.0 / counts[l] as f64;
            points
                .row(i)
                .iter()
                .zip(sums.row(l))
                .map(|(x, s)| (x - s * inv).powi(2))
                .sum::<f64>()
        })
        .sum()
}

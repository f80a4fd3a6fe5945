//! Laplacian eigenpairs, spectral-gap cluster counts and spectral clustering.

mod kmeans;

use std::io::Write;

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kmeans::{kmeans, lloyd, plus_plus_init, wcss, KMeansConfig, KMeansResult, LloydRun};

use crate::graph::Laplacian;
use crate::matrix::RowMatrix;

/// Largest accepted `|L v - lambda v|` for a returned eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-8;

const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("requested {p} eigenpairs of a {n}x{n} matrix")]
    PairCount { p: usize, n: usize },
    #[error("eigensolver did not converge (pair {pair:?}, residual {residual:e})")]
    NoConvergence { pair: Option<usize>, residual: f64 },
    #[error("need at least {needed} eigenvalues, got {got}")]
    InsufficientEigenvalues { needed: usize, got: usize },
    #[error("k_max must be at least 2, got {0}")]
    KMaxTooSmall(usize),
    #[error("cannot form {k} clusters from {n} points")]
    ClusterCount { k: usize, n: usize },
    #[error("no points to cluster")]
    EmptyInput,
    #[error("embedding holds {p} eigenvectors but {needed} are required")]
    EmbeddingTooNarrow { p: usize, needed: usize },
}

/// The `p` smallest eigenpairs of a Laplacian, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    pub eigenvalues: Vec<f64>,
    /// `n x p`, one eigenvector per column.
    pub eigenvectors: RowMatrix,
}

impl SpectralEmbedding {
    pub fn p(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n(&self) -> usize {
        self.eigenvectors.rows()
    }

    /// Eigenvector with 0-based index `a`.
    pub fn vector(&self, a: usize) -> Vec<f64> {
        self.eigenvectors.column(a)
    }

    /// Columns `index,eigenvalue`, index starting at 1.
    pub fn write_eigenvalues_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "eigenvalue"])?;
        for (a, l) in self.eigenvalues.iter().enumerate() {
            w.write_record([(a + 1).to_string(), l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Columns `window_index,v1..vp`.
    pub fn write_vectors_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["window_index".to_string()];
        header.extend((1..=self.p()).map(|a| format!("v{a}")));
        w.write_record(&header)?;
        for (i, row) in self.eigenvectors.iter_rows().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Flip `v` so its largest-magnitude entry (first one, within rounding) is positive.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(lead) = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-10)) {
        if *lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// The `p` smallest eigenpairs of `lap`, orthonormal and sign-fixed.
pub fn eigendecompose(lap: &Laplacian, p: usize) -> Result<SpectralEmbedding, SpectralError> {
    let n = lap.n();
    if p == 0 || p > n {
        return Err(SpectralError::PairCount { p, n });
    }
    let eig = SymmetricEigen::try_new(lap.matrix().clone(), f64::EPSILON, EIGEN_MAX_ITER).ok_or(
        SpectralError::NoConvergence {
            pair: None,
            residual: f64::NAN,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let mut eigenvalues = Vec::with_capacity(p);
    let mut vectors = RowMatrix::zeros(n, p);
    for (a, &src) in order.iter().take(p).enumerate() {
        let lambda = eig.eigenvalues[src];
        let mut v: Vec<f64> = eig.eigenvectors.column(src).iter().copied().collect();
        fix_sign(&mut v);
        let dv = DVector::from_column_slice(&v);
        let residual = (lap.matrix() * &dv - &dv * lambda).norm();
        if !(residual < RESIDUAL_TOL) {
            return Err(SpectralError::NoConvergence {
                pair: Some(a),
                residual,
            });
        }
        for (i, x) in v.into_iter().enumerate() {
            vectors.set(i, a, x);
        }
        eigenvalues.push(lambda);
    }
    Ok(SpectralEmbedding {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// `argmax_{k in 2..=k_max} (lambda_{k+1} - lambda_k)` with 1-based eigenvalue
/// indices; ties go to the smaller `k`.
pub fn estimate_k(eigenvalues: &[f64], k_max: usize) -> Result<usize, SpectralError> {
    if k_max < 2 {
        return Err(SpectralError::KMaxTooSmall(k_max));
    }
    if eigenvalues.len() < k_max + 1 {
        return Err(SpectralError::InsufficientEigenvalues {
            needed: k_max + 1,
            got: eigenvalues.len(),
        });
    }
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = (2, f64::NEG_INFINITY);
    for k in 2..=k_max {
        let gap = sorted[k] - sorted[k - 1];
        if gap > best.1 {
            best = (k, gap);
        }
    }
    Ok(best.0)
}

/// Which eigenvectors feed k-means.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnSelection {
    /// Eigenvectors 2..=k (0-based columns 1..k).
    #[default]
    Leading,
    /// Explicit 0-based eigenvector columns.
    Only(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub kmeans: KMeansConfig,
    /// Scale each embedded point to unit length before k-means.
    pub row_normalize: bool,
    pub columns: ColumnSelection,
}

/// k-means on the eigenvector projection of each point.
pub fn spectral_cluster(
    emb: &SpectralEmbedding,
    k: usize,
    cfg: &SpectralConfig,
) -> Result<KMeansResult, SpectralError> {
    if k < 2 {
        return Err(SpectralError::ClusterCount { k, n: emb.n() });
    }
    let cols: Vec<usize> = match &cfg.columns {
        ColumnSelection::Leading => (1..k).collect(),
        ColumnSelection::Only(c) => c.clone(),
    };
    let needed = cols.iter().max().map_or(k, |&c| (c + 1).max(k));
    if emb.p() < needed {
        return Err(SpectralError::EmbeddingTooNarrow { p: emb.p(), needed });
    }
    let mut points = emb.eigenvectors.select_columns(&cols);
    if cfg.row_normalize {
        for i in 0..points.rows() {
            let row = points.row_mut(i);
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
    }
    kmeans(&points, k, &cfg.kmeans)
}

/// Projection of points onto the listed eigenvector columns.
pub fn projection(emb: &SpectralEmbedding, cols: &[usize]) -> RowMatrix {
    emb.eigenvectors.select_columns(cols)
}

//! Adaptive-bandwidth nearest-neighbor similarity graphs and the symmetric
//! normalized Laplacian `I - D^{-1/2} S D^{-1/2}`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::RowMatrix;

/// Neighborhoods whose M-th distance falls below this are treated as degenerate.
pub const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("vector {0} has zero norm")]
    ZeroNorm(usize),
    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("neighbor count {neighbors} outside 1..{n}")]
    NeighborsOutOfRange { neighbors: usize, n: usize },
    #[error("vertex {0} has no positive distance to any other point")]
    DegenerateScale(usize),
    #[error("vertex {0} is isolated (zero degree)")]
    IsolatedVertex(usize),
    #[error("invalid edge ({i}, {j}, {weight}): {reason}")]
    InvalidEdge {
        i: usize,
        j: usize,
        weight: f64,
        reason: &'static str,
    },
    #[error("similarity matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("triplet CSV: {0}")]
    Triplets(String),
}

/// Distance measure used to build neighborhoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Cosine,
    /// Only for tests and comparisons; the pipeline uses cosine.
    Euclidean,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `1 - x.y / (|x| |y|)`, clamped into `[0, 2]`.
pub fn cosine_distance(x: &[f64], y: &[f64]) -> Result<f64, GraphError> {
    if x.len() != y.len() {
        return Err(GraphError::LengthMismatch(x.len(), y.len()));
    }
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 {
        return Err(GraphError::ZeroNorm(0));
    }
    if ny == 0.0 {
        return Err(GraphError::ZeroNorm(1));
    }
    Ok((1.0 - dot(x, y) / (nx * ny)).clamp(0.0, 2.0))
}

/// Sparse symmetric weighted graph with cached degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    neighbor_param: usize,
    adjacency: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
}

/// JSON header accompanying the triplet CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphHeader {
    pub n: usize,
    #[serde(rename = "M")]
    pub neighbor_param: usize,
}

impl SimilarityGraph {
    /// Build from undirected edges `(i, j, S_ij)`. Each pair may appear once.
    pub fn from_edges<I>(n: usize, neighbor_param: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, weight) in edges {
            let invalid = |reason| GraphError::InvalidEdge { i, j, weight, reason };
            if i >= n || j >= n {
                return Err(invalid("vertex out of range"));
            }
            if i == j {
                return Err(invalid("self-loop"));
            }
            if !(weight > 0.0 && weight <= 1.0) {
                return Err(invalid("weight outside (0, 1]"));
            }
            adjacency[i].push((j, weight));
            adjacency[j].push((i, weight));
        }
        for (i, row) in adjacency.iter_mut().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(GraphError::InvalidEdge {
                    i,
                    j: w[0].0,
                    weight: w[1].1,
                    reason: "duplicate edge",
                });
            }
        }
        let degrees: Vec<f64> = adjacency.iter().map(|row| row.iter().map(|e| e.1).sum()).collect();
        if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(GraphError::IsolatedVertex(i));
        }
        Ok(Self {
            neighbor_param,
            adjacency,
            degrees,
        })
    }

    /// Keep every positive off-diagonal entry of a symmetric matrix.
    pub fn from_dense(s: &RowMatrix, neighbor_param: usize) -> Result<Self, GraphError> {
        let n = s.rows();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if s.get(i, j) != s.get(j, i) {
                    return Err(GraphError::Asymmetric(i, j));
                }
                if s.get(i, j) > 0.0 {
                    edges.push((i, j, s.get(i, j)));
                }
            }
        }
        Self::from_edges(n, neighbor_param, edges)
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbor_param(&self) -> usize {
        self.neighbor_param
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Neighbors of `i` with weights, sorted by neighbor index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i]
            .binary_search_by_key(&j, |e| e.0)
            .map_or(0.0, |k| self.adjacency[i][k].1)
    }

    /// Edges with `i < j`, ordered by `(i, j)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |e| e.0 > i).map(move |&(j, w)| (i, j, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn to_dense(&self) -> RowMatrix {
        let n = self.n();
        let mut out = RowMatrix::zeros(n, n);
        for (i, j, w) in self.edges() {
            out.set(i, j, w);
            out.set(j, i, w);
        }
        out
    }

    pub fn header(&self) -> GraphHeader {
        GraphHeader {
            n: self.n(),
            neighbor_param: self.neighbor_param,
        }
    }

    pub fn write_triplets<W: Write>(&self, writer: W) -> csv::Result<()> {
        write_triplets(self.edges(), writer)
    }

    /// Parse `i,j,weight` triplets (header row required) for a graph described by `header`.
    pub fn read_triplets<R: Read>(header: GraphHeader, reader: R) -> Result<Self, GraphError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let cols = rdr.headers().map_err(|e| GraphError::Triplets(e.to_string()))?;
        if cols.iter().ne(["i", "j", "weight"]) {
            return Err(GraphError::Triplets("expected header `i,j,weight`".into()));
        }
        let mut edges = Vec::new();
        for rec in rdr.deserialize::<(usize, usize, f64)>() {
            let (i, j, w) = rec.map_err(|e| GraphError::Triplets(e.to_string()))?;
            if i >= j {
                return Err(GraphError::Triplets(format!("row ({i}, {j}) must have i < j")));
            }
            edges.push((i, j, w));
        }
        Self::from_edges(header.n, header.neighbor_param, edges)
    }
}

fn write_triplets<W: Write>(entries: impl Iterator<Item = (usize, usize, f64)>, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["i", "j", "weight"])?;
    for (i, j, v) in entries {
        w.write_record([i.to_string(), j.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn pairwise_distances(points: &RowMatrix, metric: Metric) -> Result<Vec<Vec<f64>>, GraphError> {
    let n = points.rows();
    let norms: Vec<f64> = points.iter_rows().map(norm).collect();
    if metric == Metric::Cosine {
        if let Some(i) = norms.iter().position(|&v| v == 0.0) {
            return Err(GraphError::ZeroNorm(i));
        }
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let xi = points.row(i);
            (0..n)
                .map(|j| {
                    let xj = points.row(j);
                    match metric {
                        Metric::Cosine => (1.0 - dot(xi, xj) / (norms[i] * norms[j])).clamp(0.0, 2.0),
                        Metric::Euclidean => crate::matrix::squared_distance(xi, xj).sqrt(),
                    }
                })
                .collect()
        })
        .collect())
}

/// Mutual-OR M-nearest-neighbor graph on the rows of `points` using cosine distance.
pub fn knn_graph(points: &RowMatrix, neighbors: usize) -> Result<SimilarityGraph, GraphError> {
    knn_graph_with_metric(points, neighbors, Metric::Cosine)
}

/// Like [`knn_graph`] with an explicit metric.
///
/// `sigma_i` is the distance from `i` to its M-th nearest neighbor (self
/// excluded, ties broken by smaller index) and the stored weight is
/// `exp(-d_ij^2 / (sigma_i sigma_j))`.
pub fn knn_graph_with_metric(
    points: &RowMatrix,
    neighbors: usize,
    metric: Metric,
) -> Result<SimilarityGraph, GraphError> {
    let n = points.rows();
    if neighbors == 0 || neighbors >= n {
        return Err(GraphError::NeighborsOutOfRange { neighbors, n });
    }
    let dist = pairwise_distances(points, metric)?;

    let mut sigma = vec![0.0; n];
    let mut nearest: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| dist[i][a].total_cmp(&dist[i][b]).then(a.cmp(&b)));
        order.truncate(neighbors);
        sigma[i] = dist[i][order[neighbors - 1]];
        if sigma[i] < SIGMA_FLOOR {
            sigma[i] = (0..n)
                .filter(|&j| j != i && dist[i][j] >= SIGMA_FLOOR)
                .map(|j| dist[i][j])
                .min_by(f64::total_cmp)
                .ok_or(GraphError::DegenerateScale(i))?;
        }
        nearest.push(order);
    }

    let mut linked = vec![vec![false; n]; n];
    for (i, row) in nearest.iter().enumerate() {
        for &j in row {
            linked[i.min(j)][i.max(j)] = true;
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if linked[i][j] {
                let w = (-dist[i][j] * dist[i][j] / (sigma[i] * sigma[j])).exp();
                edges.push((i, j, w.max(f64::MIN_POSITIVE)));
            }
        }
    }
    SimilarityGraph::from_edges(n, neighbors, edges)
}

/// Dense symmetric normalized Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: DMatrix<f64>,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Nonzero entries with `i <= j`.
    pub fn write_triplets<W: Write>(&self, writer: W) -> csv::Result<()> {
        let n = self.n();
        let m = &self.matrix;
        let entries = (0..n).flat_map(move |i| (i..n).map(move |j| (i, j, m[(i, j)])).filter(|e| e.2 != 0.0));
        write_triplets(entries, writer)
    }
}

/// `L_s = I - D^{-1/2} S D^{-1/2}`; off-diagonal entries are computed once and mirrored.
pub fn laplacian(graph: &SimilarityGraph) -> Result<Laplacian, GraphError> {
    let n = graph.n();
    if let Some(i) = graph.degrees().iter().position(|&d| d <= 0.0) {
        return Err(GraphError::IsolatedVertex(i));
    }
    let inv_sqrt: Vec<f64> = graph.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut matrix = DMatrix::identity(n, n);
    for (i, j, w) in graph.edges() {
        let v = -w * inv_sqrt[i] * inv_sqrt[j];
        matrix[(i, j)] = v;
        matrix[(j, i)] = v;
    }
    Ok(Laplacian { matrix })
}

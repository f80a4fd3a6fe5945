//! Reference implementations used as test oracles. None of these call into
//! the code paths they check.

#![allow(dead_code)]

use std::collections::VecDeque;

/// Cyclic Jacobi eigenvalue iteration on a dense symmetric matrix.
/// Returns ascending eigenvalues with matching eigenvectors (as columns).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[a][a].partial_cmp(&m[b][b]).unwrap());
    let vals = order.iter().map(|&i| m[i][i]).collect();
    let vecs = order.iter().map(|&c| (0..n).map(|r| v[r][c]).collect()).collect();
    (vals, vecs)
}

/// O(N^2) DFT of a real sequence; returns (re, im) per bin.
pub fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &v) in x.iter().enumerate() {
                let ang = -std::f64::consts::TAU * (k * t % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (re, im)
        })
        .collect()
}

/// Minimum WCSS over every labeling of `xs` into two non-empty groups.
pub fn brute_force_two_means(xs: &[f64]) -> f64 {
    let n = xs.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let mut cost = 0.0;
        for side in [true, false] {
            let members: Vec<f64> = (0..n)
                .filter(|&i| ((mask >> i) & 1 == 1) == side)
                .map(|i| xs[i])
                .collect();
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            cost += members.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        }
        best = best.min(cost);
    }
    best
}

/// Hop distances from `src` in an undirected graph given as adjacency lists.
pub fn bfs_depths(adj: &[Vec<usize>], src: usize) -> Vec<Option<usize>> {
    let mut depth = vec![None; adj.len()];
    depth[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if depth[w].is_none() {
                depth[w] = Some(depth[u].unwrap() + 1);
                queue.push_back(w);
            }
        }
    }
    depth
}

/// Small deterministic LCG for generating test inputs independently of the
/// crate's own generator.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

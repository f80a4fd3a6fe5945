mod common;

use acoustic_cluster::graph::{cosine_distance, knn_graph, laplacian, SimilarityGraph};
use acoustic_cluster::spectral::{
    eigendecompose, estimate_k, kmeans, lloyd, spectral_cluster, KMeansConfig, SpectralConfig,
};
use acoustic_cluster::{Partition, RowMatrix};
use common::{brute_force_two_means, jacobi_eigen, Lcg};
use proptest::prelude::*;

fn random_points(lcg: &mut Lcg, n: usize, m: usize) -> RowMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| lcg.next_f64() + 0.01).collect())
        .collect();
    RowMatrix::from_rows(&rows)
}

fn dense(graph: &SimilarityGraph) -> Vec<Vec<f64>> {
    let lap = laplacian(graph).unwrap();
    let m = lap.matrix();
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[test]
fn laplacian_invariants_on_random_graphs() {
    let mut lcg = Lcg(2024);
    for _ in 0..100 {
        let n = 6 + lcg.below(20);
        let pts = random_points(&mut lcg, n, 5);
        let g = knn_graph(&pts, 1 + lcg.below(n - 2)).unwrap();
        let l = dense(&g);
        let (oracle, _) = jacobi_eigen(&l);
        let emb = eigendecompose(&laplacian(&g).unwrap(), n).unwrap();
        for (a, b) in emb.eigenvalues.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(oracle[0] > -1e-10 && oracle[n - 1] <= 2.0 + 1e-10);
        assert!(oracle[0].abs() < 1e-8);
        // D^{1/2} 1 is in the null space
        let d = g.degrees();
        let norm = d.iter().sum::<f64>().sqrt();
        for i in 0..n {
            let r: f64 = (0..n).map(|j| l[i][j] * d[j].sqrt() / norm).sum();
            assert!(r.abs() < 1e-10);
        }
        for i in 0..n {
            for j in 0..n {
                assert!((l[i][j] - l[j][i]).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn complete_graph_spectrum() {
    let n = 3;
    let edges = vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)];
    let g = SimilarityGraph::from_edges(n, 2, edges).unwrap();
    let emb = eigendecompose(&laplacian(&g).unwrap(), 3).unwrap();
    assert!(emb.eigenvalues[0].abs() < 1e-12);
    assert!((emb.eigenvalues[1] - 1.5).abs() < 1e-12);
    assert!((emb.eigenvalues[2] - 1.5).abs() < 1e-12);
}

#[test]
fn eigenvectors_match_dense_oracle_up_to_sign() {
    let mut lcg = Lcg(5);
    let pts = random_points(&mut lcg, 30, 4);
    let g = knn_graph(&pts, 6).unwrap();
    let l = dense(&g);
    let (vals, vecs) = jacobi_eigen(&l);
    let emb = eigendecompose(&laplacian(&g).unwrap(), 5).unwrap();
    for a in 0..5 {
        // skip near-degenerate pairs, whose bases are not unique
        let gap = (a > 0)
            .then(|| vals[a] - vals[a - 1])
            .unwrap_or(1.0)
            .min(vals[a + 1] - vals[a]);
        if gap < 1e-6 {
            continue;
        }
        let ours = emb.vector(a);
        let dot: f64 = ours.iter().zip(&vecs[a]).map(|(x, y)| x * y).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn block_affinities_give_k_near_zero_eigenvalues() {
    // three well separated directions; M = cluster size - 1 keeps the
    // components apart while making each one dense
    let mut lcg = Lcg(8);
    let mut rows = Vec::new();
    for c in 0..3 {
        for _ in 0..15 {
            let mut v = vec![0.01; 6];
            v[2 * c] = 1.0 + 0.05 * lcg.next_f64();
            v[2 * c + 1] = 1.0 + 0.05 * lcg.next_f64();
            rows.push(v);
        }
    }
    let pts = RowMatrix::from_rows(&rows);
    let g = knn_graph(&pts, 14).unwrap();
    let emb = eigendecompose(&laplacian(&g).unwrap(), 9).unwrap();
    assert_eq!(estimate_k(&emb.eigenvalues, 8).unwrap(), 3);
    let res = spectral_cluster(&emb, 3, &SpectralConfig::default()).unwrap();
    let truth = Partition::new((0..45).map(|i| i / 15).collect(), 3);
    assert!(res.partition.same_grouping(&truth));
}

#[test]
fn kmeans_matches_exhaustive_two_means() {
    let mut lcg = Lcg(31);
    let mut hits = 0;
    for _ in 0..100 {
        let xs: Vec<f64> = (0..8).map(|_| lcg.next_f64() * 10.0).collect();
        let best = brute_force_two_means(&xs);
        let pts = RowMatrix::from_vec(8, 1, xs.clone());
        let res = kmeans(&pts, 2, &KMeansConfig::default()).unwrap();
        assert!(res.wcss >= best - 1e-9, "undercut the exhaustive optimum");
        if res.wcss <= best + 1e-9 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn lloyd_wcss_never_increases() {
    let mut lcg = Lcg(77);
    for _ in 0..20 {
        let pts = random_points(&mut lcg, 60, 3);
        let init = RowMatrix::from_rows(&[
            pts.row(0).to_vec(),
            pts.row(1).to_vec(),
            pts.row(2).to_vec(),
            pts.row(3).to_vec(),
        ]);
        let run = lloyd(&pts, init, 300, 0.0);
        for w in run.wcss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}

#[test]
fn lloyd_grouping_ignores_centroid_order() {
    let mut lcg = Lcg(12);
    let pts = random_points(&mut lcg, 50, 2);
    let rows: Vec<Vec<f64>> = [4, 9, 17].iter().map(|&i| pts.row(i).to_vec()).collect();
    let a = lloyd(&pts, RowMatrix::from_rows(&rows), 300, 1e-9);
    let permuted = vec![rows[2].clone(), rows[0].clone(), rows[1].clone()];
    let b = lloyd(&pts, RowMatrix::from_rows(&permuted), 300, 1e-9);
    assert!(Partition::new(a.labels, 3).same_grouping(&Partition::new(b.labels, 3)));
}

#[test]
fn kmeans_is_deterministic_for_a_seed() {
    let mut lcg = Lcg(1);
    let pts = random_points(&mut lcg, 80, 3);
    let cfg = KMeansConfig::default();
    assert_eq!(kmeans(&pts, 4, &cfg).unwrap(), kmeans(&pts, 4, &cfg).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn knn_graph_is_permutation_equivariant(seed in any::<u64>(), m in 1usize..6) {
        let mut lcg = Lcg(seed);
        let n = 15;
        let pts = random_points(&mut lcg, n, 4);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, lcg.below(i + 1));
        }
        let rows: Vec<Vec<f64>> = perm.iter().map(|&p| pts.row(p).to_vec()).collect();
        let permuted = RowMatrix::from_rows(&rows);
        // ties between distances could legitimately break differently
        let distinct = {
            let mut ds: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| cosine_distance(pts.row(i), pts.row(j)).unwrap()).collect();
            ds.sort_by(f64::total_cmp);
            ds.windows(2).all(|w| w[1] - w[0] > 1e-12)
        };
        prop_assume!(distinct);
        let a = knn_graph(&pts, m).unwrap();
        let b = knn_graph(&permuted, m).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((a.weight(perm[i], perm[j]) - b.weight(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn knn_graph_ignores_row_scaling(seed in any::<u64>(), c in 0.01f64..1000.0) {
        let mut lcg = Lcg(seed);
        let pts = random_points(&mut lcg, 12, 3);
        let a = knn_graph(&pts, 3).unwrap();
        let b = knn_graph(&pts.map(|x| x * c), 3).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                prop_assert!((a.weight(i, j) - b.weight(i, j)).abs() < 1e-9);
            }
        }
    }
}

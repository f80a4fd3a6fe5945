#![no_main]

use acoustic_cluster::graph::{GraphHeader, SimilarityGraph};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // first byte picks the vertex count, the rest is the triplet CSV
    let Some((&n, body)) = data.split_first() else {
        return;
    };
    let header = GraphHeader {
        n: n as usize,
        neighbor_param: 1,
    };
    if let Ok(g) = SimilarityGraph::read_triplets(header, body) {
        for i in 0..g.n() {
            assert!(g.degrees()[i] > 0.0);
            for &(j, w) in g.neighbors(i) {
                assert_eq!(g.weight(j, i), w);
            }
        }
    }
});

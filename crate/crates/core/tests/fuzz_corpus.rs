//! Replays the checked-in fuzz seeds through the same entry points the fuzz
//! targets drive.

use std::fs;
use std::path::PathBuf;

use acoustic_cluster::graph::{GraphHeader, SimilarityGraph};
use acoustic_cluster::signal::{decode_wav, parse_manifest};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn wav_seeds() {
    for (name, bytes) in seeds("decode_wav") {
        let res = decode_wav(&bytes);
        assert_eq!(res.is_ok(), name != "truncated.wav", "{name}: {res:?}");
        if let Ok(s) = res {
            assert!(s.samples().iter().all(|v| v.is_finite() && v.abs() <= 1.0), "{name}");
        }
    }
}

#[test]
fn manifest_seeds() {
    for (name, bytes) in seeds("parse_manifest") {
        let res = parse_manifest(bytes.as_slice(), None);
        let valid = matches!(name.as_str(), "basic.csv" | "quoted.csv");
        assert_eq!(res.is_ok(), valid, "{name}: {res:?}");
    }
}

#[test]
fn triplet_seeds() {
    for (name, bytes) in seeds("read_triplets") {
        let (&n, body) = bytes.split_first().unwrap();
        let header = GraphHeader {
            n: n as usize,
            neighbor_param: 1,
        };
        let res = SimilarityGraph::read_triplets(header, body);
        let valid = matches!(name.as_str(), "triangle.csv" | "path.csv");
        assert_eq!(res.is_ok(), valid, "{name}: {res:?}");
    }
}

use acoustic_cluster::eval::{confusion, purity, window_truth};
use acoustic_cluster::graph::{cosine_distance, laplacian};
use acoustic_cluster::signal::{stft_features, WindowingConfig};
use acoustic_cluster::spectral::{eigendecompose, spectral_cluster, ColumnSelection, SpectralConfig};
use acoustic_cluster::synth::{
    default_schedule, default_vehicle_bank, gen_block_similarity, gen_vehicle_audio, BlockSpec, Envelope, Passage,
};

#[test]
fn default_mirror_has_144_windows() {
    let audio = gen_vehicle_audio(&default_vehicle_bank(), &default_schedule(), 48_000, 6000, "v.wav").unwrap();
    assert_eq!(audio.signal.len(), 864_000);
    assert_eq!(audio.spans.len(), 9);
    let feats = stft_features(&audio.signal, &WindowingConfig::default(), 1500).unwrap();
    let truth = window_truth(&audio.spans, &feats.start_samples, 6000).unwrap();
    assert_eq!(feats.n(), 144);
    assert_eq!(truth.labels.iter().max(), Some(&2));
    assert!(audio.signal.samples().iter().all(|s| s.abs() <= 0.95 + 1e-12));
}

#[test]
fn vehicle_audio_is_deterministic() {
    let a = gen_vehicle_audio(&default_vehicle_bank(), &default_schedule(), 48_000, 6000, "v.wav").unwrap();
    let b = gen_vehicle_audio(&default_vehicle_bank(), &default_schedule(), 48_000, 6000, "v.wav").unwrap();
    assert_eq!(a.signal, b.signal);
    assert_eq!(a.manifest, b.manifest);
}

#[test]
fn noiseless_single_vehicle_windows_share_one_direction() {
    let mut bank = default_vehicle_bank();
    for v in &mut bank {
        v.broadband_level = 0.0;
        v.pitch_jitter = 0.0;
        v.envelope = Envelope {
            rise_s: 0.0,
            fall_s: 0.0,
            floor: 1.0,
        };
    }
    // integer fundamental lands every harmonic on a bin at 8 Hz spacing
    bank[0].fundamental_hz = 32.0;
    let schedule = vec![Passage {
        vehicle: 0,
        duration_s: 2.0,
    }];
    let audio = gen_vehicle_audio(&bank, &schedule, 48_000, 6000, "v.wav").unwrap();
    let feats = stft_features(&audio.signal, &WindowingConfig::default(), 1500).unwrap();
    for i in 0..feats.n() {
        for j in (i + 1)..feats.n() {
            let d = cosine_distance(feats.values.row(i), feats.values.row(j)).unwrap();
            assert!(d < 1e-6, "windows {i},{j}: {d}");
        }
    }
}

#[test]
fn between_class_distance_exceeds_within_class() {
    let audio = gen_vehicle_audio(&default_vehicle_bank(), &default_schedule(), 48_000, 6000, "v.wav").unwrap();
    let feats = stft_features(&audio.signal, &WindowingConfig::default(), 1500).unwrap();
    let truth = window_truth(&audio.spans, &feats.start_samples, 6000).unwrap().labels;
    let (mut w, mut wn, mut b, mut bn) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..feats.n() {
        for j in (i + 1)..feats.n() {
            let d = cosine_distance(feats.values.row(i), feats.values.row(j)).unwrap();
            if truth[i] == truth[j] {
                w += d;
                wn += 1;
            } else {
                b += d;
                bn += 1;
            }
        }
    }
    assert!(b / bn as f64 > w / wn as f64);
}

#[test]
fn rejects_close_fundamentals_and_ragged_schedules() {
    let mut bank = default_vehicle_bank();
    bank[1].fundamental_hz = 32.0;
    assert!(gen_vehicle_audio(&bank, &default_schedule(), 48_000, 6000, "v.wav").is_err());
    let odd = vec![Passage {
        vehicle: 0,
        duration_s: 0.1,
    }];
    assert!(gen_vehicle_audio(&default_vehicle_bank(), &odd, 48_000, 6000, "v.wav").is_err());
    assert!(gen_vehicle_audio(&default_vehicle_bank()[..1], &default_schedule(), 48_000, 6000, "v.wav").is_err());
}

#[test]
fn block_similarity_is_symmetric_with_unit_diagonal() {
    let s = gen_block_similarity(&BlockSpec::default()).unwrap();
    let n = s.fine_labels.len();
    for i in 0..n {
        assert_eq!(s.similarity.get(i, i), 1.0);
        for j in 0..n {
            assert_eq!(s.similarity.get(i, j), s.similarity.get(j, i));
            if i != j {
                assert_eq!(s.graph.weight(i, j), s.similarity.get(i, j));
            }
        }
    }
    assert_eq!(s.graph.neighbor_param(), n - 1);
}

#[test]
fn noiseless_blocks_give_piecewise_constant_fiedler_vector() {
    let spec = BlockSpec {
        noise_fraction: 0.0,
        hierarchy: None,
        ..Default::default()
    };
    let s = gen_block_similarity(&spec).unwrap();
    let emb = eigendecompose(&laplacian(&s.graph).unwrap(), 3).unwrap();
    let v = emb.vector(1);
    for i in 1..v.len() {
        if s.fine_labels[i] == s.fine_labels[i - 1] {
            assert!((v[i] - v[i - 1]).abs() < 1e-8);
        }
    }
}

#[test]
fn spectral_recovers_noisy_blocks_over_seeds() {
    for seed in 0..20 {
        let s = gen_block_similarity(&BlockSpec {
            rng_seed: seed,
            ..Default::default()
        })
        .unwrap();
        let emb = eigendecompose(&laplacian(&s.graph).unwrap(), 4).unwrap();
        let res = spectral_cluster(&emb, 3, &SpectralConfig::default()).unwrap();
        let p = purity(&confusion(&s.fine_labels, &res.partition).unwrap()).unwrap();
        assert!(p >= 0.98, "seed {seed}: purity {p}");
    }
}

#[test]
fn single_eigenvector_variant_is_no_better_than_leading() {
    let s = gen_block_similarity(&BlockSpec::default()).unwrap();
    let emb = eigendecompose(&laplacian(&s.graph).unwrap(), 4).unwrap();
    let only = SpectralConfig {
        columns: ColumnSelection::Only(vec![2]),
        ..Default::default()
    };
    let fine = |cfg: &SpectralConfig| {
        let res = spectral_cluster(&emb, 3, cfg).unwrap();
        purity(&confusion(&s.fine_labels, &res.partition).unwrap()).unwrap()
    };
    assert!(fine(&only) <= fine(&SpectralConfig::default()));
}

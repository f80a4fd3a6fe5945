use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use acoustic_cluster::signal::{encode_wav, AudioSignal, WavEncoding};
use acoustic_cluster_cli::{emit_plots, run_pipeline, Input, KChoice, Method, PipelineConfig};

fn acluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acluster"))
        .args(args)
        .output()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_wav_is_a_config_error_with_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.csv");
    fs::write(&manifest, "path,label,start_s,duration_s\nabsent.wav,car,0,2\n").unwrap();
    let out = dir.path().join("run");
    let res = acluster(&["run", "--manifest", path_str(&manifest), "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!out.exists());
}

#[test]
fn synth_then_spectral_run_writes_expected_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("run");
    assert!(acluster(&["synth", "--out", path_str(&data)]).status.success());
    let res = acluster(&[
        "run",
        "--manifest",
        path_str(&data.join("manifest.csv")),
        "--method",
        "spectral",
        "--k",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let labels = fs::read_to_string(out.join("labels.csv")).unwrap();
    let mut lines = labels.lines();
    assert_eq!(lines.next(), Some("window_index,start_s,cluster,true_label"));
    assert_eq!(lines.count(), 144);

    let cm: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("confusion_spectral.json")).unwrap()).unwrap();
    let counts = cm["confusion"]["counts"].as_array().unwrap();
    assert_eq!(counts.len(), 3);
    assert!(counts.iter().all(|r| r.as_array().unwrap().len() == 3));

    let spectrum = fs::read_to_string(out.join("plots/spectrum.svg")).unwrap();
    assert_eq!(spectrum.matches("<circle").count(), 20);
    let vectors = fs::read_to_string(out.join("plots/eigenvectors.svg")).unwrap();
    assert_eq!(vectors.matches("<polyline").count(), 20);
}

#[test]
fn numerical_failure_removes_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    // one second gives 8 windows, too few for 15 neighbors
    let tone: Vec<f64> = (0..48_000).map(|t| (t as f64 * 0.01).sin() * 0.5 + 0.01).collect();
    let wav = dir.path().join("short.wav");
    fs::write(
        &wav,
        encode_wav(&AudioSignal::new(tone, 48_000).unwrap(), WavEncoding::Float32),
    )
    .unwrap();
    let manifest = dir.path().join("manifest.csv");
    fs::write(&manifest, "path,label,start_s,duration_s\nshort.wav,car,0,1\n").unwrap();
    let out = dir.path().join("run");
    let res = acluster(&[
        "run",
        "--manifest",
        path_str(&manifest),
        "--k",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(res.status.code(), Some(4), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!out.exists());
}

#[test]
fn malformed_wav_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("junk.wav"), b"RIFF....WAVEjunk").unwrap();
    let manifest = dir.path().join("manifest.csv");
    fs::write(&manifest, "path,label,start_s,duration_s\njunk.wav,car,0,1\n").unwrap();
    let out = dir.path().join("run");
    let res = acluster(&["run", "--manifest", path_str(&manifest), "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("run");
    fs::write(
        &cfg,
        format!(
            "method = \"incres\"\nk = 5\nout = {:?}\n[input]\nkind = \"blocks\"\n",
            path_str(&out)
        ),
    )
    .unwrap();
    let res = acluster(&["run", "--config", path_str(&cfg), "--k", "3", "--no-plots"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["k"], 3);
    assert_eq!(report["primary"], "incres");
    assert!(!out.join("plots").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "neighbours = 4\n").unwrap();
    assert_eq!(acluster(&["run", "--config", path_str(&cfg)]).status.code(), Some(2));
}

#[test]
fn plot_command_needs_run_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        acluster(&["plot", "--run", path_str(dir.path())]).status.code(),
        Some(3)
    );
}

#[test]
fn block_input_heatmap_and_incres_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        input: Input::Blocks {
            spec: Default::default(),
        },
        method: Method::IncresEmbedding,
        k: KChoice::Fixed(3),
        out: dir.path().to_path_buf(),
        ..Default::default()
    };
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.n, 100);
    assert!(report.method("incres-embedding").unwrap().purity >= 0.98);
    let heat = fs::read_to_string(dir.path().join("plots/similarity.svg")).unwrap();
    // unit diagonal renders white
    assert!(heat.matches("rgb(255,255,255)").count() >= 100);
    assert!(dir.path().join("plots/incres_traces.svg").is_file());
}

#[test]
fn plots_are_byte_identical_across_renders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        input: Input::Blocks {
            spec: Default::default(),
        },
        out: dir.path().to_path_buf(),
        ..Default::default()
    };
    run_pipeline(&cfg).unwrap();
    let read_all = || -> Vec<Vec<u8>> {
        let mut names: Vec<_> = fs::read_dir(dir.path().join("plots"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        names.sort();
        names.iter().map(|p| fs::read(p).unwrap()).collect()
    };
    let first = read_all();
    emit_plots(dir.path()).unwrap();
    assert_eq!(first, read_all());
}

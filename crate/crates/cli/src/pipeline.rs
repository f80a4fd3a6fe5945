//! End-to-end run: input, features, graph, spectrum, clustering, evaluation.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use acoustic_cluster::eval::{self, align_labels, confusion, matched_count, purity, ConfusionMatrix, WindowTruth};
use acoustic_cluster::graph::{knn_graph, laplacian, SimilarityGraph};
use acoustic_cluster::incres::{incres_cluster, incres_embedding_cluster, IncresConfig, IncresMeta};
use acoustic_cluster::signal::{assemble_composite, read_manifest, stft_features, AudioSignal, FeatureMatrix};
use acoustic_cluster::spectral::{self, eigendecompose, estimate_k, spectral_cluster, SpectralConfig};
use acoustic_cluster::synth::{default_schedule, default_vehicle_bank, gen_block_similarity, gen_vehicle_audio};
use acoustic_cluster::{Error, Partition, RowMatrix};
use serde::{Deserialize, Serialize};

use crate::config::{Input, KChoice, Method, PipelineConfig};
use crate::plots::emit_plots;
use crate::PipelineError;

/// Misclassified windows this close to a passage edge count as boundary errors.
pub const BOUNDARY_MARGIN: usize = 3;

/// Points of the decimated waveform written for plotting.
const WAVEFORM_BUCKETS: usize = 2000;

/// Dense similarity is written for heatmaps up to this many points.
const SIMILARITY_MAX_N: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub purity: f64,
    pub confusion: ConfusionMatrix,
    /// Class matched to each cluster.
    pub alignment: Vec<Option<usize>>,
    pub matched: usize,
    pub misclassified: Vec<usize>,
    /// Share of misclassified windows within the boundary margin of a passage.
    pub boundary_error_fraction: Option<f64>,
    pub wcss: Option<f64>,
    pub cap_exhausted: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub n: usize,
    /// Coefficients per window; absent for block input.
    pub m: Option<usize>,
    pub k: usize,
    pub k_auto: Option<usize>,
    pub eigenvalues: Vec<f64>,
    pub class_names: Vec<String>,
    pub methods: Vec<MethodReport>,
    pub primary: String,
    /// Wall-clock seconds per stage. The only field that varies between runs.
    pub timings_s: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }
}

#[derive(Serialize)]
struct ConfusionFile<'a> {
    method: &'a str,
    purity: f64,
    confusion: &'a ConfusionMatrix,
    /// Columns reordered so that column `t` holds the cluster matched to class `t`.
    aligned: ConfusionMatrix,
}

/// Everything downstream of the input stage needs.
struct Prepared {
    graph: SimilarityGraph,
    truth: Vec<usize>,
    class_names: Vec<String>,
    start_times: Option<Vec<f64>>,
    windows: Option<WindowTruth>,
    features: Option<FeatureMatrix>,
    signal: Option<AudioSignal>,
    similarity: Option<RowMatrix>,
}

/// Files created by this run, removed again if the run fails.
struct Artifacts {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
}

impl Artifacts {
    fn open(dir: &Path) -> Result<Self, PipelineError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<(PathBuf, BufWriter<File>), PipelineError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        self.files.push(path.clone());
        Ok((path, BufWriter::new(file)))
    }

    fn write_with<F>(&mut self, name: &str, f: F) -> Result<(), PipelineError>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let (path, mut w) = self.create(name)?;
        f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), PipelineError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    fn discard(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        let plots = self.dir.join("plots");
        if plots.is_dir() && fs::read_dir(&plots).is_ok_and(|mut d| d.next().is_none()) {
            let _ = fs::remove_dir(&plots);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn io_err(path: &Path, source: io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn stage<T, E: Into<Error>>(name: &'static str, r: Result<T, E>) -> Result<T, PipelineError> {
    r.map_err(|e| PipelineError::Stage {
        stage: name,
        source: e.into(),
    })
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.0.entry(name.to_string()).or_default() += start.elapsed().as_secs_f64();
        out
    }
}

/// Run the configured pipeline and write its artifacts to `cfg.out`. Input
/// files are checked before anything is written; on failure every file this
/// run created is removed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let manifest = match &cfg.input {
        Input::Manifest { manifest } => Some(check_manifest(manifest)?),
        _ => None,
    };
    let mut artifacts = Artifacts::open(&cfg.out)?;
    match execute(cfg, manifest, &mut artifacts) {
        Ok(report) => Ok(report),
        Err(e) => {
            artifacts.discard();
            Err(e)
        }
    }
}

fn check_manifest(path: &Path) -> Result<Vec<acoustic_cluster::signal::ManifestEntry>, PipelineError> {
    let entries = stage("input", read_manifest(path))?;
    let mut seen = HashSet::new();
    for e in &entries {
        if seen.insert(&e.path) && !e.path.is_file() {
            return Err(PipelineError::Config(format!(
                "manifest {} references missing file {}",
                path.display(),
                e.path.display()
            )));
        }
    }
    Ok(entries)
}

fn execute(
    cfg: &PipelineConfig,
    manifest: Option<Vec<acoustic_cluster::signal::ManifestEntry>>,
    artifacts: &mut Artifacts,
) -> Result<RunReport, PipelineError> {
    let mut timer = Timer(BTreeMap::new());
    let prep = prepare(cfg, manifest, &mut timer)?;
    let n = prep.graph.n();

    let lap = timer.time("laplacian", || stage("laplacian", laplacian(&prep.graph)))?;
    let wanted = match cfg.k {
        KChoice::Fixed(k) => cfg.eigenpairs.max(cfg.k_max + 1).max(k),
        KChoice::Auto => cfg.eigenpairs.max(cfg.k_max + 1),
    };
    let p = wanted.min(n);
    let emb = timer.time("eigen", || stage("eigen", eigendecompose(&lap, p)))?;
    let k_auto = if p > cfg.k_max {
        Some(stage("k-selection", estimate_k(&emb.eigenvalues, cfg.k_max))?)
    } else {
        None
    };
    let k = match cfg.k {
        KChoice::Fixed(k) => k,
        KChoice::Auto => k_auto.ok_or_else(|| {
            PipelineError::Config(format!("auto k needs more than k_max = {} points, got {n}", cfg.k_max))
        })?,
    };
    if k > n {
        return Err(PipelineError::Config(format!("k = {k} exceeds the {n} points")));
    }

    let incres_cfg = IncresConfig {
        k,
        ..cfg.incres.clone()
    };
    let mut results: Vec<(Method, Partition, Option<f64>, Option<bool>)> = Vec::new();
    let mut meta: Option<IncresMeta> = None;
    for &method in cfg.method.runs() {
        match method {
            Method::Spectral => {
                let spec_cfg = SpectralConfig {
                    kmeans: cfg.kmeans.clone(),
                    row_normalize: cfg.row_normalize,
                    columns: spectral::ColumnSelection::Leading,
                };
                let r = timer.time("spectral", || stage("spectral", spectral_cluster(&emb, k, &spec_cfg)))?;
                results.push((method, r.partition, Some(r.wcss), None));
            }
            Method::Incres => {
                let r = timer.time("incres", || stage("incres", incres_cluster(&prep.graph, &incres_cfg)))?;
                meta = Some(r.meta(&incres_cfg));
                let exhausted = r.any_cap_exhausted();
                results.push((method, r.partition, None, Some(exhausted)));
            }
            Method::IncresEmbedding => {
                let r = timer.time("incres-embedding", || {
                    stage(
                        "incres-embedding",
                        incres_embedding_cluster(&prep.graph, k, &incres_cfg, &cfg.kmeans),
                    )
                })?;
                results.push((method, r.partition, Some(r.wcss), None));
            }
            Method::Both => unreachable!("expanded by Method::runs"),
        }
    }

    let mut methods = Vec::new();
    for (method, partition, wcss, cap) in &results {
        let rep = timer.time("evaluation", || evaluate(method.name(), &prep, partition, *wcss, *cap))?;
        methods.push(rep);
    }

    // artifacts
    timer.time("write", || -> Result<(), PipelineError> {
        let (_, primary_part, ..) = results.last().expect("at least one method runs");
        write_labels(artifacts, "labels.csv", &prep, primary_part)?;
        for (method, part, ..) in &results {
            write_labels(artifacts, &format!("labels_{}.csv", method.name()), &prep, part)?;
        }
        for rep in &methods {
            let order = aligned_order(&rep.alignment, rep.confusion.classes());
            artifacts.write_json(
                &format!("confusion_{}.json", rep.method),
                &ConfusionFile {
                    method: &rep.method,
                    purity: rep.purity,
                    confusion: &rep.confusion,
                    aligned: rep.confusion.permute_columns(&order),
                },
            )?;
        }
        artifacts.write_with("spectrum.csv", |w| emb.write_eigenvalues_csv(w).map_err(csv_io))?;
        artifacts.write_with("embedding.csv", |w| emb.write_vectors_csv(w).map_err(csv_io))?;
        if let Some(meta) = &meta {
            artifacts.write_json("incres_meta.json", meta)?;
        }
        if let Some(sig) = &prep.signal {
            artifacts.write_with("waveform.csv", |w| write_waveform(sig, w))?;
        }
        if let Some(feats) = &prep.features {
            artifacts.write_with("class_spectra.csv", |w| write_class_spectra(feats, &prep, w))?;
            if cfg.write_features {
                artifacts.write_with("features.csv", |w| feats.write_csv(w).map_err(csv_io))?;
                artifacts.write_json("features.json", &feats.meta())?;
            }
        }
        if cfg.write_graph {
            artifacts.write_with("graph.csv", |w| prep.graph.write_triplets(w).map_err(csv_io))?;
            artifacts.write_json("graph.json", &prep.graph.header())?;
            artifacts.write_with("laplacian.csv", |w| lap.write_triplets(w).map_err(csv_io))?;
        }
        let dense = prep
            .similarity
            .clone()
            .or_else(|| (n <= SIMILARITY_MAX_N).then(|| prep.graph.to_dense()));
        if let Some(s) = dense {
            artifacts.write_with("similarity.csv", |w| write_dense(&s, w))?;
        }
        Ok(())
    })?;

    let report = RunReport {
        config: cfg.clone(),
        n,
        m: prep.features.as_ref().map(FeatureMatrix::m),
        k,
        k_auto,
        eigenvalues: emb.eigenvalues.clone(),
        class_names: prep.class_names.clone(),
        primary: results.last().map(|r| r.0.name().to_string()).unwrap_or_default(),
        methods,
        timings_s: BTreeMap::new(),
    };
    if cfg.plots {
        let files = timer.time("plots", || emit_plots(&cfg.out))?;
        artifacts.files.extend(files);
    }
    let report = RunReport {
        timings_s: timer.0,
        ..report
    };
    artifacts.write_json("report.json", &report)?;
    Ok(report)
}

fn prepare(
    cfg: &PipelineConfig,
    manifest: Option<Vec<acoustic_cluster::signal::ManifestEntry>>,
    timer: &mut Timer,
) -> Result<Prepared, PipelineError> {
    let (signal, spans, class_names) = match (&cfg.input, manifest) {
        (Input::Blocks { spec }, _) => {
            let sample = timer.time("input", || stage("input", gen_block_similarity(spec)))?;
            let classes = sample.fine_labels.iter().max().map_or(0, |m| m + 1);
            return Ok(Prepared {
                graph: sample.graph,
                truth: sample.fine_labels,
                class_names: (0..classes).map(|b| format!("block {b}")).collect(),
                start_times: None,
                windows: None,
                features: None,
                signal: None,
                similarity: Some(sample.similarity),
            });
        }
        (Input::Manifest { .. }, Some(entries)) => {
            let comp = timer.time("input", || stage("input", assemble_composite(&entries)))?;
            (comp.signal, comp.spans, comp.label_names)
        }
        (Input::Manifest { manifest }, None) => {
            return Err(PipelineError::Config(format!(
                "manifest {} was not read",
                manifest.display()
            )))
        }
        (
            Input::Vehicles {
                sample_rate,
                vehicles,
                schedule,
            },
            _,
        ) => {
            let bank = vehicles.clone().unwrap_or_else(default_vehicle_bank);
            let sched = schedule.clone().unwrap_or_else(default_schedule);
            let audio = timer
                .time("input", || {
                    gen_vehicle_audio(&bank, &sched, *sample_rate, cfg.windowing.window_len, "synthetic.wav")
                })
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            (audio.signal, audio.spans, bank.iter().map(|v| v.name.clone()).collect())
        }
    };
    let features = timer.time("features", || {
        stage("features", stft_features(&signal, &cfg.windowing, cfg.m))
    })?;
    let windows = stage(
        "evaluation",
        eval::window_truth(&spans, &features.start_samples, cfg.windowing.window_len),
    )?;
    let graph = timer.time("graph", || stage("graph", knn_graph(&features.values, cfg.knn)))?;
    Ok(Prepared {
        graph,
        truth: windows.labels.clone(),
        class_names,
        start_times: Some(features.start_times.clone()),
        windows: Some(windows),
        features: Some(features),
        signal: Some(signal),
        similarity: None,
    })
}

fn evaluate(
    method: &str,
    prep: &Prepared,
    partition: &Partition,
    wcss: Option<f64>,
    cap_exhausted: Option<bool>,
) -> Result<MethodReport, PipelineError> {
    let cm = stage("evaluation", confusion(&prep.truth, partition))?;
    let mut cm = cm.with_row_names(&prep.class_names);
    cm.col_names = (0..cm.clusters()).map(|c| format!("cluster {c}")).collect();
    let alignment = align_labels(&cm);
    let wrong = stage("evaluation", eval::misclassified(&prep.truth, partition))?;
    let boundary_error_fraction = prep.windows.as_ref().map(|w| {
        if wrong.is_empty() {
            1.0
        } else {
            wrong.iter().filter(|&&i| w.near_boundary(i, BOUNDARY_MARGIN)).count() as f64 / wrong.len() as f64
        }
    });
    Ok(MethodReport {
        method: method.to_string(),
        purity: stage("evaluation", purity(&cm))?,
        matched: matched_count(&cm, &alignment),
        confusion: cm,
        alignment,
        misclassified: wrong,
        boundary_error_fraction,
        wcss,
        cap_exhausted,
    })
}

fn aligned_order(alignment: &[Option<usize>], classes: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..classes)
        .filter_map(|t| alignment.iter().position(|&a| a == Some(t)))
        .collect();
    order.extend((0..alignment.len()).filter(|&c| alignment[c].is_none()));
    order
}

fn write_labels(artifacts: &mut Artifacts, name: &str, prep: &Prepared, part: &Partition) -> Result<(), PipelineError> {
    artifacts.write_with(name, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["window_index", "start_s", "cluster", "true_label"])
            .map_err(csv_io)?;
        for (i, (&c, &t)) in part.labels().iter().zip(&prep.truth).enumerate() {
            let start = prep.start_times.as_ref().map_or(String::new(), |s| s[i].to_string());
            out.write_record([i.to_string(), start, c.to_string(), prep.class_names[t].clone()])
                .map_err(csv_io)?;
        }
        out.flush()
    })
}

/// Per-bucket minimum and maximum of the signal.
fn write_waveform(sig: &AudioSignal, w: &mut impl Write) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time_s", "min", "max"]).map_err(csv_io)?;
    let s = sig.samples();
    let buckets = WAVEFORM_BUCKETS.min(s.len());
    for b in 0..buckets {
        let (lo, hi) = (b * s.len() / buckets, (b + 1) * s.len() / buckets);
        let chunk = &s[lo..hi];
        let min = chunk.iter().copied().fold(f64::INFINITY, f64::min);
        let max = chunk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let t = lo as f64 / sig.sample_rate() as f64;
        out.write_record([t.to_string(), min.to_string(), max.to_string()])
            .map_err(csv_io)?;
    }
    out.flush()
}

/// Mean feature vector of each true class, one row per class.
fn write_class_spectra(feats: &FeatureMatrix, prep: &Prepared, w: &mut impl Write) -> io::Result<()> {
    let m = feats.m();
    let classes = prep.class_names.len();
    let mut sums = vec![vec![0.0; m]; classes];
    let mut counts = vec![0usize; classes];
    for (i, &t) in prep.truth.iter().enumerate() {
        counts[t] += 1;
        for (s, v) in sums[t].iter_mut().zip(feats.values.row(i)) {
            *s += v;
        }
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["class".to_string()];
    header.extend((1..=m).map(|c| format!("c{c}")));
    out.write_record(&header).map_err(csv_io)?;
    for (t, row) in sums.iter().enumerate() {
        let mut rec = vec![prep.class_names[t].clone()];
        rec.extend(row.iter().map(|s| (s / counts[t].max(1) as f64).to_string()));
        out.write_record(&rec).map_err(csv_io)?;
    }
    out.flush()
}

fn write_dense(s: &RowMatrix, w: &mut impl Write) -> io::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in s.iter_rows() {
        out.write_record(row.iter().map(f64::to_string)).map_err(csv_io)?;
    }
    out.flush()
}

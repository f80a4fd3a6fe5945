//! Deterministic SVG renderings of run artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::PipelineError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Width of the moving mean applied to coefficient overlays.
pub const OVERLAY_SMOOTHING: usize = 5;

/// Minimal SVG document with a fixed plotting frame.
struct Svg {
    body: String,
    x: (f64, f64),
    y: (f64, f64),
}

impl Svg {
    fn new(title: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let mut svg = Self {
            body: String::new(),
            x: widen(x),
            y: widen(y),
        };
        let _ = write!(
            svg.body,
            "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n\
             <rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
            WIDTH / 2.0,
            escape(title),
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        for (v, px, py, anchor) in [
            (svg.x.0, MARGIN, HEIGHT - MARGIN + 15.0, "start"),
            (svg.x.1, WIDTH - MARGIN, HEIGHT - MARGIN + 15.0, "end"),
            (svg.y.0, MARGIN - 5.0, HEIGHT - MARGIN, "end"),
            (svg.y.1, MARGIN - 5.0, MARGIN + 10.0, "end"),
        ] {
            let _ = writeln!(
                svg.body,
                "<text x=\"{px:.2}\" y=\"{py:.2}\" font-size=\"10\" text-anchor=\"{anchor}\">{}</text>",
                tick(v)
            );
        }
        svg
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn polyline(&mut self, points: &[(f64, f64)], color: &str) {
        let mut pts = String::new();
        for &(x, y) in points {
            let _ = write!(pts, "{:.2},{:.2} ", self.px(x), self.py(y));
        }
        let _ = writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\"/>",
            pts.trim_end()
        );
    }

    fn marker(&mut self, x: f64, y: f64, color: &str) {
        let _ = writeln!(
            self.body,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
            self.px(x),
            self.py(y)
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n{}</svg>\n",
            self.body
        )
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Header and rows of a CSV artifact.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path, has_header: bool) -> Result<Self, PipelineError> {
        let missing = || PipelineError::MissingArtifact(path.to_path_buf());
        if !path.is_file() {
            return Err(missing());
        }
        let mut r = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .from_path(path)
            .map_err(|e| PipelineError::Plot(format!("{}: {e}", path.display())))?;
        let header = if has_header {
            r.headers()
                .map_err(|e| PipelineError::Plot(format!("{}: {e}", path.display())))?
                .iter()
                .map(String::from)
                .collect()
        } else {
            Vec::new()
        };
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| PipelineError::Plot(format!("{}: {e}", path.display())))?;
        Ok(Self { header, rows })
    }

    fn column(&self, path: &Path, name: &str) -> Result<usize, PipelineError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PipelineError::Plot(format!("{}: no column {name}", path.display())))
    }

    fn floats(&self, path: &Path, col: usize) -> Result<Vec<f64>, PipelineError> {
        self.rows
            .iter()
            .map(|r| {
                r.get(col)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| PipelineError::Plot(format!("{}: non-numeric cell", path.display())))
            })
            .collect()
    }
}

/// Eigenvalues against their index, one marker each.
pub fn spectrum_svg(eigenvalues: &[f64]) -> String {
    let mut svg = Svg::new(
        "Laplacian spectrum",
        (1.0, eigenvalues.len() as f64),
        bounds(eigenvalues.iter().copied().chain([0.0])),
    );
    for (a, &v) in eigenvalues.iter().enumerate() {
        svg.marker((a + 1) as f64, v, PALETTE[0]);
    }
    svg.finish()
}

/// One polyline per column over the point index.
pub fn traces_svg(title: &str, columns: &[Vec<f64>]) -> String {
    let n = columns.first().map_or(0, Vec::len);
    let mut svg = Svg::new(
        title,
        (0.0, n.saturating_sub(1) as f64),
        bounds(columns.iter().flatten().copied()),
    );
    for (c, col) in columns.iter().enumerate() {
        let pts: Vec<(f64, f64)> = col.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
        svg.polyline(&pts, PALETTE[c % PALETTE.len()]);
    }
    svg.finish()
}

/// Envelope of the composite signal from per-bucket extremes.
pub fn waveform_svg(times: &[f64], mins: &[f64], maxs: &[f64]) -> String {
    let mut svg = Svg::new(
        "Composite waveform",
        bounds(times.iter().copied()),
        bounds(mins.iter().chain(maxs).copied()),
    );
    let upper: Vec<(f64, f64)> = times.iter().copied().zip(maxs.iter().copied()).collect();
    let lower: Vec<(f64, f64)> = times.iter().copied().zip(mins.iter().copied()).collect();
    svg.polyline(&upper, PALETTE[0]);
    svg.polyline(&lower, PALETTE[0]);
    svg.finish()
}

/// Centered moving mean, truncated at the edges.
pub fn moving_mean(x: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Overlay of per-class mean coefficients after smoothing.
pub fn coefficients_svg(names: &[String], spectra: &[Vec<f64>]) -> String {
    let smoothed: Vec<Vec<f64>> = spectra.iter().map(|s| moving_mean(s, OVERLAY_SMOOTHING)).collect();
    let m = smoothed.first().map_or(0, Vec::len);
    let mut svg = Svg::new(
        "Mean Fourier magnitude by class",
        (1.0, m as f64),
        bounds(smoothed.iter().flatten().copied().chain([0.0])),
    );
    for (c, s) in smoothed.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect();
        svg.polyline(&pts, PALETTE[c % PALETTE.len()]);
    }
    for (c, name) in names.iter().enumerate() {
        let _ = writeln!(
            svg.body,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"{}\" text-anchor=\"end\">{}</text>",
            WIDTH - MARGIN - 5.0,
            MARGIN + 15.0 * (c + 1) as f64,
            PALETTE[c % PALETTE.len()],
            escape(name)
        );
    }
    svg.finish()
}

/// One row of colored cells per labeling, windows left to right.
pub fn timeline_svg(rows: &[(String, Vec<usize>)]) -> String {
    let n = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max(1);
    let mut svg = Svg::new("Cluster timeline", (0.0, n as f64), (0.0, rows.len() as f64));
    let cell_w = (WIDTH - 2.0 * MARGIN) / n as f64;
    let row_h = (HEIGHT - 2.0 * MARGIN) / rows.len().max(1) as f64;
    for (r, (name, labels)) in rows.iter().enumerate() {
        let y = MARGIN + r as f64 * row_h;
        for (i, &l) in labels.iter().enumerate() {
            let _ = writeln!(
                svg.body,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                MARGIN + i as f64 * cell_w,
                y + 0.1 * row_h,
                cell_w,
                0.8 * row_h,
                PALETTE[l % PALETTE.len()]
            );
        }
        let _ = writeln!(
            svg.body,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{}</text>",
            MARGIN - 5.0,
            y + 0.5 * row_h + 3.0,
            escape(name)
        );
    }
    svg.finish()
}

/// Grayscale heatmap of a matrix with entries in `[0, 1]`: white is 1, black is 0.
pub fn heatmap_svg(title: &str, matrix: &[Vec<f64>]) -> String {
    let n = matrix.len().max(1);
    let side = HEIGHT - 2.0 * MARGIN;
    let cell = side / n as f64;
    let left = (WIDTH - side) / 2.0;
    let mut body = String::new();
    let _ = writeln!(
        body,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            let _ = writeln!(
                body,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({g},{g},{g})\"/>",
                left + j as f64 * cell,
                MARGIN + i as f64 * cell,
                cell,
                cell
            );
        }
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n{body}</svg>\n"
    )
}

fn dense_labels(values: impl IntoIterator<Item = String>) -> Vec<usize> {
    let mut seen: Vec<String> = Vec::new();
    values
        .into_iter()
        .map(|v| match seen.iter().position(|s| *s == v) {
            Some(i) => i,
            None => {
                seen.push(v);
                seen.len() - 1
            }
        })
        .collect()
}

const LABEL_FILES: [(&str, &str); 3] = [
    ("spectral", "labels_spectral.csv"),
    ("incres", "labels_incres.csv"),
    ("incres-embedding", "labels_incres-embedding.csv"),
];

/// Render every plot the artifacts in `run_dir` support into `run_dir/plots`.
///
/// `spectrum.csv`, `embedding.csv` and `labels.csv` are required; waveform,
/// coefficient, INCRES and heatmap plots are drawn when their inputs exist.
/// Returns the files written.
pub fn emit_plots(run_dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let spectrum_path = run_dir.join("spectrum.csv");
    let embedding_path = run_dir.join("embedding.csv");
    let labels_path = run_dir.join("labels.csv");
    let spectrum = Table::read(&spectrum_path, true)?;
    let embedding = Table::read(&embedding_path, true)?;
    let labels = Table::read(&labels_path, true)?;

    let mut plots: Vec<(&str, String)> = Vec::new();
    let eig = spectrum.floats(&spectrum_path, spectrum.column(&spectrum_path, "eigenvalue")?)?;
    plots.push(("spectrum.svg", spectrum_svg(&eig)));

    let vectors: Vec<Vec<f64>> = (1..embedding.header.len())
        .map(|c| embedding.floats(&embedding_path, c))
        .collect::<Result<_, _>>()?;
    plots.push(("eigenvectors.svg", traces_svg("Laplacian eigenvectors", &vectors)));

    let truth_col = labels.column(&labels_path, "true_label")?;
    let mut timeline = vec![(
        "truth".to_string(),
        dense_labels(labels.rows.iter().map(|r| r[truth_col].clone())),
    )];
    let mut incres_traces = Vec::new();
    for (name, file) in LABEL_FILES {
        let path = run_dir.join(file);
        if !path.is_file() {
            continue;
        }
        let t = Table::read(&path, true)?;
        let col = t.column(&path, "cluster")?;
        let clusters: Vec<usize> = t.floats(&path, col)?.into_iter().map(|v| v as usize).collect();
        if name.starts_with("incres") {
            incres_traces.push(clusters.iter().map(|&c| c as f64).collect::<Vec<f64>>());
        }
        timeline.push((name.to_string(), clusters));
    }
    plots.push(("timeline.svg", timeline_svg(&timeline)));
    if !incres_traces.is_empty() {
        plots.push((
            "incres_traces.svg",
            traces_svg("INCRES cluster per point", &incres_traces),
        ));
    }

    let waveform_path = run_dir.join("waveform.csv");
    if waveform_path.is_file() {
        let w = Table::read(&waveform_path, true)?;
        let col = |name| w.column(&waveform_path, name).and_then(|c| w.floats(&waveform_path, c));
        plots.push((
            "waveform.svg",
            waveform_svg(&col("time_s")?, &col("min")?, &col("max")?),
        ));
    }
    let spectra_path = run_dir.join("class_spectra.csv");
    if spectra_path.is_file() {
        let s = Table::read(&spectra_path, true)?;
        let names: Vec<String> = s.rows.iter().map(|r| r[0].clone()).collect();
        let values: Vec<Vec<f64>> = s
            .rows
            .iter()
            .map(|r| r[1..].iter().map(|v| v.parse().unwrap_or(0.0)).collect())
            .collect();
        plots.push(("coefficients.svg", coefficients_svg(&names, &values)));
    }
    let sim_path = run_dir.join("similarity.csv");
    if sim_path.is_file() {
        let s = Table::read(&sim_path, false)?;
        let m: Vec<Vec<f64>> = (0..s.rows.len())
            .map(|r| s.rows[r].iter().map(|v| v.parse().unwrap_or(0.0)).collect())
            .collect();
        plots.push(("similarity.svg", heatmap_svg("Similarity matrix", &m)));
    }

    let dir = run_dir.join("plots");
    fs::create_dir_all(&dir).map_err(|source| PipelineError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    for (name, svg) in plots {
        let path = dir.join(name);
        if let Err(source) = fs::write(&path, svg) {
            for w in &written {
                let _ = fs::remove_file(w);
            }
            return Err(PipelineError::Io { path, source });
        }
        written.push(path);
    }
    Ok(written)
}

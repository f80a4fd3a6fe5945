//! Confusion matrices, purity, label alignment and window ground truth.

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::partition::Partition;
use crate::signal::LabelSpan;

/// Above this many clusters, [`align_labels`] switches to a greedy match.
pub const EXHAUSTIVE_ALIGN_MAX: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{truth} true labels but {partition} cluster labels")]
    LengthMismatch { truth: usize, partition: usize },
    #[error("confusion matrix is empty")]
    Empty,
    #[error("confusion rows have unequal lengths")]
    Ragged,
    #[error("window {0} does not fall inside any labeled span")]
    Uncovered(usize),
}

/// Counts of points by (true class, obtained cluster).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<usize>>) -> Result<Self, EvalError> {
        let cols = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != cols) {
            return Err(EvalError::Ragged);
        }
        Ok(Self {
            row_names: (0..counts.len()).map(|t| format!("class {t}")).collect(),
            col_names: (0..cols).map(|c| format!("cluster {c}")).collect(),
            counts,
        })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn clusters(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn with_row_names(mut self, names: &[String]) -> Self {
        for (dst, src) in self.row_names.iter_mut().zip(names) {
            dst.clone_from(src);
        }
        self
    }

    /// Copy with columns reordered so that column `i` is old column `order[i]`.
    pub fn permute_columns(&self, order: &[usize]) -> Self {
        Self {
            row_names: self.row_names.clone(),
            col_names: order.iter().map(|&c| self.col_names[c].clone()).collect(),
            counts: self
                .counts
                .iter()
                .map(|r| order.iter().map(|&c| r[c]).collect())
                .collect(),
        }
    }

    /// GitHub-flavoured markdown table, true classes down, clusters across.
    pub fn to_markdown(&self) -> String {
        let mut widths = vec![self.row_names.iter().map(String::len).max().unwrap_or(0).max(4)];
        for (c, name) in self.col_names.iter().enumerate() {
            let w = self.counts.iter().map(|r| r[c].to_string().len()).max().unwrap_or(0);
            widths.push(name.len().max(w));
        }
        let mut out = String::new();
        let line = |cells: Vec<String>| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:>w$}", w = *w))
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        let mut head = vec!["true".to_string()];
        head.extend(self.col_names.iter().cloned());
        out += &line(head);
        out += &format!(
            "|{}|\n",
            widths.iter().map(|w| format!("{}:", "-".repeat(w + 1))).join("|")
        );
        for (name, row) in self.row_names.iter().zip(&self.counts) {
            let mut cells = vec![name.clone()];
            cells.extend(row.iter().map(usize::to_string));
            out += &line(cells);
        }
        out
    }
}

/// `counts[t][c] = |{i : truth(i) = t, label(i) = c}|`.
pub fn confusion(truth: &[usize], partition: &Partition) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != partition.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            partition: partition.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let classes = truth.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0usize; partition.k()]; classes];
    for (&t, &c) in truth.iter().zip(partition.labels()) {
        counts[t][c] += 1;
    }
    ConfusionMatrix::from_counts(counts)
}

/// `(1/n) sum_c max_t counts[t][c]`.
pub fn purity(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let n = cm.total();
    if n == 0 {
        return Err(EvalError::Empty);
    }
    let hits: usize = (0..cm.clusters())
        .map(|c| cm.counts.iter().map(|r| r[c]).max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / n as f64)
}

/// Total of `counts[mapping[c]][c]` over mapped clusters.
pub fn matched_count(cm: &ConfusionMatrix, mapping: &[Option<usize>]) -> usize {
    mapping
        .iter()
        .enumerate()
        .filter_map(|(c, t)| t.map(|t| cm.counts[t][c]))
        .sum()
}

/// One-to-one cluster-to-class assignment maximizing matched counts.
///
/// Exhaustive over injective maps in lexicographic order (first optimum
/// wins, so the identity is kept on ties) while both sides are at most
/// [`EXHAUSTIVE_ALIGN_MAX`]; greedy on the largest remaining cell beyond.
pub fn align_labels(cm: &ConfusionMatrix) -> Vec<Option<usize>> {
    let (t, c) = (cm.classes(), cm.clusters());
    if t.max(c) > EXHAUSTIVE_ALIGN_MAX {
        return greedy_align(cm);
    }
    let mut best: Vec<Option<usize>> = vec![None; c];
    let mut best_score = None;
    if c <= t {
        for perm in (0..t).permutations(c) {
            let mapping: Vec<Option<usize>> = perm.into_iter().map(Some).collect();
            let score = matched_count(cm, &mapping);
            if best_score.is_none_or(|b| score > b) {
                best_score = Some(score);
                best = mapping;
            }
        }
    } else {
        for perm in (0..c).permutations(t) {
            let mut mapping = vec![None; c];
            for (class, &cluster) in perm.iter().enumerate() {
                mapping[cluster] = Some(class);
            }
            let score = matched_count(cm, &mapping);
            if best_score.is_none_or(|b| score > b) {
                best_score = Some(score);
                best = mapping;
            }
        }
    }
    best
}

fn greedy_align(cm: &ConfusionMatrix) -> Vec<Option<usize>> {
    let mut cells: Vec<(usize, usize, usize)> = (0..cm.classes())
        .flat_map(|t| (0..cm.clusters()).map(move |c| (t, c)))
        .map(|(t, c)| (cm.counts[t][c], t, c))
        .collect();
    cells.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut mapping = vec![None; cm.clusters()];
    let mut class_used = vec![false; cm.classes()];
    for (_, t, c) in cells {
        if mapping[c].is_none() && !class_used[t] {
            mapping[c] = Some(t);
            class_used[t] = true;
        }
    }
    mapping
}

/// Points whose cluster does not map to their true class under [`align_labels`].
pub fn misclassified(truth: &[usize], partition: &Partition) -> Result<Vec<usize>, EvalError> {
    let cm = confusion(truth, partition)?;
    let mapping = align_labels(&cm);
    Ok(truth
        .iter()
        .zip(partition.labels())
        .enumerate()
        .filter(|(_, (&t, &c))| mapping[c] != Some(t))
        .map(|(i, _)| i)
        .collect())
}

/// Fraction of point pairs on which two partitions agree.
pub fn rand_index(a: &Partition, b: &Partition) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions of different sizes");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let (la, lb) = (a.labels(), b.labels());
    let mut agree = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if (la[i] == la[j]) == (lb[i] == lb[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}

/// Per-window ground truth derived from composite label spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowTruth {
    pub labels: Vec<usize>,
    /// Index of the span holding each window.
    pub passage: Vec<usize>,
    /// Position of the window among the windows of its span.
    pub offset: Vec<usize>,
    /// Number of windows assigned to each span.
    pub passage_windows: Vec<usize>,
}

impl WindowTruth {
    /// Within `margin` windows of the start or end of its passage.
    pub fn near_boundary(&self, i: usize, margin: usize) -> bool {
        let len = self.passage_windows[self.passage[i]];
        self.offset[i] < margin || self.offset[i] + margin >= len
    }
}

/// Label each window by the span covering its midpoint sample.
pub fn window_truth(spans: &[LabelSpan], start_samples: &[usize], window_len: usize) -> Result<WindowTruth, EvalError> {
    let mut labels = Vec::with_capacity(start_samples.len());
    let mut passage = Vec::with_capacity(start_samples.len());
    let mut offset = Vec::with_capacity(start_samples.len());
    let mut passage_windows = vec![0usize; spans.len()];
    for (w, &s) in start_samples.iter().enumerate() {
        let mid = s + window_len / 2;
        let idx = spans
            .iter()
            .position(|sp| sp.start_sample <= mid && mid < sp.end_sample)
            .ok_or(EvalError::Uncovered(w))?;
        labels.push(spans[idx].label);
        passage.push(idx);
        offset.push(passage_windows[idx]);
        passage_windows[idx] += 1;
    }
    Ok(WindowTruth {
        labels,
        passage,
        offset,
        passage_windows,
    })
}

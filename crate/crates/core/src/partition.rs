use serde::{Deserialize, Serialize};

/// Cluster label per data point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Panics if any label is `>= k`.
    pub fn new(labels: Vec<usize>, k: usize) -> Self {
        assert!(labels.iter().all(|&l| l < k), "label out of range for k = {k}");
        Self { labels, k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &l in &self.labels {
            out[l] += 1;
        }
        out
    }

    pub fn has_empty_cluster(&self) -> bool {
        self.sizes().contains(&0)
    }

    /// Members of cluster `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == c).collect()
    }

    /// Relabel clusters in order of first appearance; empty clusters go last.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        for &l in &self.labels {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
        }
        Self {
            labels: self.labels.iter().map(|&l| map[l]).collect(),
            k: self.k,
        }
    }

    /// True when both describe the same set partition.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        self.len() == other.len() && self.canonical().labels == other.canonical().labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_relabels_by_first_appearance() {
        let p = Partition::new(vec![2, 2, 0, 1, 0], 3);
        assert_eq!(p.canonical().labels(), &[0, 0, 1, 2, 1]);
        assert!(p.same_grouping(&Partition::new(vec![1, 1, 0, 2, 0], 3)));
        assert!(!p.same_grouping(&Partition::new(vec![1, 1, 0, 0, 0], 3)));
    }

    #[test]
    fn sizes_and_members() {
        let p = Partition::new(vec![1, 1, 0], 3);
        assert_eq!(p.sizes(), vec![1, 2, 0]);
        assert!(p.has_empty_cluster());
        assert_eq!(p.members(1), vec![0, 1]);
    }

    #[test]
    #[should_panic]
    fn label_out_of_range_panics() {
        let _ = Partition::new(vec![0, 3], 3);
    }
}

//! Clustering of field names from a precomputed distance matrix.
//!
//! Cluster ids are canonical for every algorithm: cluster 0 holds the
//! smallest index among non-noise points, cluster 1 the next smallest
//! index not in cluster 0, and so on.

mod affinity;
mod dbscan;
mod hdbscan;

use serde::{Deserialize, Serialize};

use crate::distance::DistanceMetricId;

pub use affinity::{affinity_propagation, AffinityParams};
pub use dbscan::{dbscan, DbscanParams};
pub use hdbscan::{hdbscan, HdbscanParams};

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("distance matrix is empty")]
    EmptyMatrix,
    #[error("no clusters: every point is noise")]
    AllNoise,
    #[error("cluster file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    AffinityPropagation,
    Dbscan,
    Hdbscan,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::AffinityPropagation => "affinity_propagation",
            Algorithm::Dbscan => "dbscan",
            Algorithm::Hdbscan => "hdbscan",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = ClusterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "affinity_propagation" | "ap" => Ok(Algorithm::AffinityPropagation),
            "dbscan" => Ok(Algorithm::Dbscan),
            "hdbscan" => Ok(Algorithm::Hdbscan),
            other => Err(ClusterError::InvalidParameter(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// The hyperparameter record of a clustering run, tagged by algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "params", rename_all = "snake_case")]
pub enum ClusterParams {
    AffinityPropagation(AffinityParams),
    Dbscan(DbscanParams),
    Hdbscan(HdbscanParams),
}

impl ClusterParams {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ClusterParams::AffinityPropagation(_) => Algorithm::AffinityPropagation,
            ClusterParams::Dbscan(_) => Algorithm::Dbscan,
            ClusterParams::Hdbscan(_) => Algorithm::Hdbscan,
        }
    }

    /// Default parameters for `algorithm`.
    pub fn defaults(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::AffinityPropagation => ClusterParams::AffinityPropagation(AffinityParams::default()),
            Algorithm::Dbscan => ClusterParams::Dbscan(DbscanParams::default()),
            Algorithm::Hdbscan => ClusterParams::Hdbscan(HdbscanParams::default()),
        }
    }
}

/// Runs the algorithm selected by `params`.
pub fn run(d: &crate::distance::DistanceMatrix, params: &ClusterParams) -> Result<ClusterSet, ClusterError> {
    match params {
        ClusterParams::AffinityPropagation(p) => affinity_propagation(d, p),
        ClusterParams::Dbscan(p) => dbscan(d, p),
        ClusterParams::Hdbscan(p) => hdbscan(d, p),
    }
}

/// Disjoint assignment of corpus indices to clusters. Points in no
/// cluster are noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub params: ClusterParams,
    pub metric: DistanceMetricId,
    labels: Vec<Option<usize>>,
    clusters: Vec<Vec<usize>>,
    exemplars: Option<Vec<usize>>,
    converged: bool,
}

impl ClusterSet {
    /// Builds a set from arbitrary per-point labels, renumbering clusters
    /// canonically. `exemplars` pairs an arbitrary label with its exemplar.
    pub(crate) fn from_labels(
        params: ClusterParams,
        metric: DistanceMetricId,
        raw: &[Option<usize>],
        exemplars: Option<&[(usize, usize)]>,
        converged: bool,
    ) -> Self {
        let mut remap = std::collections::HashMap::new();
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        let labels: Vec<Option<usize>> = raw
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.map(|l| {
                    let id = *remap.entry(l).or_insert_with(|| {
                        clusters.push(Vec::new());
                        clusters.len() - 1
                    });
                    clusters[id].push(i);
                    id
                })
            })
            .collect();
        let exemplars = exemplars.map(|pairs| {
            let mut ex = vec![usize::MAX; clusters.len()];
            for (label, point) in pairs {
                if let Some(&id) = remap.get(label) {
                    ex[id] = *point;
                }
            }
            ex
        });
        ClusterSet {
            params,
            metric,
            labels,
            clusters,
            exemplars,
            converged,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.params.algorithm()
    }

    /// Number of points covered (clustered or noise).
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, index: usize) -> Option<usize> {
        self.labels[index]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    /// Non-noise clusters; members in ascending order.
    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn noise(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|i| self.labels[*i].is_none()).collect()
    }

    /// Per-cluster exemplar index (affinity propagation only).
    pub fn exemplars(&self) -> Option<&[usize]> {
        self.exemplars.as_deref()
    }

    /// False when an iterative algorithm stopped at its iteration cap.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn to_record(&self) -> ClusterRecord {
        ClusterRecord {
            params: self.params.clone(),
            metric: self.metric,
            n: self.labels.len(),
            clusters: self.clusters.clone(),
            noise: self.noise(),
            exemplars: self.exemplars.clone(),
            converged: self.converged,
            stats: cluster_stats(self).ok(),
        }
    }

    pub fn from_record(record: ClusterRecord) -> Result<Self, ClusterError> {
        let mut raw = vec![None; record.n];
        let mut assigned = vec![false; record.n];
        let points = record
            .clusters
            .iter()
            .enumerate()
            .flat_map(|(c, members)| members.iter().map(move |m| (Some(c), *m)))
            .chain(record.noise.iter().map(|m| (None, *m)));
        for (label, m) in points {
            if m >= record.n || assigned[m] {
                return Err(ClusterError::Format(format!("index {m} out of range or assigned twice")));
            }
            assigned[m] = true;
            raw[m] = label;
        }
        if let Some(i) = assigned.iter().position(|a| !a) {
            return Err(ClusterError::Format(format!("index {i} is not assigned")));
        }
        if record.clusters.iter().any(Vec::is_empty) {
            return Err(ClusterError::Format("empty cluster".into()));
        }
        let pairs: Option<Vec<(usize, usize)>> = record
            .exemplars
            .as_ref()
            .map(|ex| ex.iter().copied().enumerate().collect());
        if let Some(ex) = &record.exemplars {
            if ex.len() != record.clusters.len() || ex.iter().enumerate().any(|(c, e)| raw.get(*e) != Some(&Some(c))) {
                return Err(ClusterError::Format("exemplar is not a member of its cluster".into()));
            }
        }
        Ok(Self::from_labels(
            record.params,
            record.metric,
            &raw,
            pairs.as_deref(),
            record.converged,
        ))
    }

    pub fn to_json(&self) -> Result<String, ClusterError> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Self, ClusterError> {
        Self::from_record(serde_json::from_str(s)?)
    }
}

/// Serialized form of a [`ClusterSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    #[serde(flatten)]
    pub params: ClusterParams,
    pub metric: DistanceMetricId,
    pub n: usize,
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplars: Option<Vec<usize>>,
    pub converged: bool,
    pub stats: Option<ClusterStats>,
}

/// Size statistics over non-noise clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub num_clusters: usize,
    pub avg_size: f64,
    pub median_size: f64,
    /// Population standard deviation.
    pub std_dev_size: f64,
    pub biggest: usize,
    pub smallest: usize,
    pub num_smallest: usize,
}

pub fn cluster_stats(cs: &ClusterSet) -> Result<ClusterStats, ClusterError> {
    let sizes: Vec<usize> = cs.clusters().iter().map(Vec::len).collect();
    size_stats(&sizes).ok_or(ClusterError::AllNoise)
}

pub(crate) fn size_stats(sizes: &[usize]) -> Option<ClusterStats> {
    if sizes.is_empty() {
        return None;
    }
    let values: Vec<f64> = sizes.iter().map(|s| *s as f64).collect();
    let avg = mean(&values);
    let var = values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / values.len() as f64;
    let smallest = *sizes.iter().min().unwrap();
    Some(ClusterStats {
        num_clusters: sizes.len(),
        avg_size: avg,
        median_size: median(&values),
        std_dev_size: var.sqrt(),
        biggest: *sizes.iter().max().unwrap(),
        smallest,
        num_smallest: sizes.iter().filter(|s| **s == smallest).count(),
    })
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median; mean of the middle pair for even counts. `values` must be
/// non-empty.
pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(labels: &[Option<usize>]) -> ClusterSet {
        ClusterSet::from_labels(
            ClusterParams::defaults(Algorithm::Dbscan),
            DistanceMetricId::Levenshtein,
            labels,
            None,
            true,
        )
    }

    #[test]
    fn stats_two_clusters() {
        let s = cluster_stats(&set(&[Some(0), Some(0), Some(0), Some(1), Some(1)])).unwrap();
        assert_eq!(
            s,
            ClusterStats {
                num_clusters: 2,
                avg_size: 2.5,
                median_size: 2.5,
                std_dev_size: 0.5,
                biggest: 3,
                smallest: 2,
                num_smallest: 1,
            }
        );
    }

    #[test]
    fn stats_single_cluster() {
        let s = cluster_stats(&set(&[Some(4); 7])).unwrap();
        assert_eq!((s.num_clusters, s.avg_size, s.median_size), (1, 7.0, 7.0));
        assert_eq!((s.biggest, s.smallest, s.std_dev_size, s.num_smallest), (7, 7, 0.0, 1));
    }

    #[test]
    fn stats_exclude_noise_and_fail_on_all_noise() {
        let s = cluster_stats(&set(&[None, Some(3), Some(3), None])).unwrap();
        assert_eq!(s.num_clusters, 1);
        assert_eq!(s.biggest, 2);
        assert!(matches!(cluster_stats(&set(&[None, None])), Err(ClusterError::AllNoise)));
    }

    #[test]
    fn labels_are_canonicalized() {
        let cs = set(&[Some(7), None, Some(2), Some(7), Some(2)]);
        assert_eq!(cs.labels(), &[Some(0), None, Some(1), Some(0), Some(1)]);
        assert_eq!(cs.clusters(), &[vec![0, 3], vec![2, 4]]);
        assert_eq!(cs.noise(), vec![1]);
    }

    #[test]
    fn json_round_trip_and_shape() {
        let cs = ClusterSet::from_labels(
            ClusterParams::defaults(Algorithm::AffinityPropagation),
            DistanceMetricId::JaroWinkler,
            &[Some(1), Some(1), Some(0)],
            Some(&[(1, 1), (0, 2)]),
            true,
        );
        let json = cs.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["algorithm"], "affinity_propagation");
        assert_eq!(v["metric"], "jaro_winkler");
        assert_eq!(v["params"]["damping"], 0.9);
        assert_eq!(v["clusters"], serde_json::json!([[0, 1], [2]]));
        assert_eq!(v["exemplars"], serde_json::json!([1, 2]));
        assert_eq!(v["stats"]["num_clusters"], 2);
        assert_eq!(ClusterSet::from_json(&json).unwrap(), cs);
    }

    #[test]
    fn record_validation() {
        let mut rec = set(&[Some(0), None]).to_record();
        rec.noise.push(0);
        assert!(ClusterSet::from_record(rec).is_err());
        let mut rec = set(&[Some(0), None]).to_record();
        rec.noise.clear();
        assert!(ClusterSet::from_record(rec).is_err());
    }

    #[test]
    fn relabeling_does_not_change_stats() {
        let a = set(&[Some(0), Some(1), Some(1), Some(2), Some(2), Some(2)]);
        let b = set(&[Some(9), Some(4), Some(4), Some(1), Some(1), Some(1)]);
        assert_eq!(cluster_stats(&a).unwrap(), cluster_stats(&b).unwrap());
    }
}

//! HDBSCAN over precomputed distances.
//!
//! Steps: core distances, mutual-reachability minimum spanning tree (dense
//! Prim), single-linkage hierarchy, condensed tree at `min_cluster_size`,
//! then excess-of-mass selection. The root of the condensed tree is never
//! selected, so a dataset with no split into two large-enough groups comes
//! out as all noise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClusterError, ClusterParams, ClusterSet};
use crate::distance::DistanceMatrix;

/// Distances below this are treated as this value when converting to
/// density (`lambda = 1 / distance`), keeping stabilities finite.
const MIN_LAMBDA_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    /// Neighbor rank defining the core distance; the point itself is rank 1.
    pub min_samples: usize,
}

impl Default for HdbscanParams {
    fn default() -> Self {
        HdbscanParams {
            min_cluster_size: 2,
            min_samples: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Merge {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

/// An edge of the condensed tree: `child` is a point (`< n`) or a cluster
/// id (`>= n`, the root being `n`).
#[derive(Debug, Clone, Copy)]
struct CondensedEdge {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

pub fn hdbscan(d: &DistanceMatrix, params: &HdbscanParams) -> Result<ClusterSet, ClusterError> {
    if params.min_cluster_size < 2 || params.min_samples == 0 {
        return Err(ClusterError::InvalidParameter(format!(
            "min_cluster_size must be >= 2 and min_samples >= 1 (got {}, {})",
            params.min_cluster_size, params.min_samples
        )));
    }
    let n = d.len();
    let labels = if n < 2 {
        vec![None; n]
    } else {
        let core = core_distances(d, params.min_samples);
        let mst = mutual_reachability_mst(d, &core);
        let merges = single_linkage(n, mst);
        let condensed = condense(n, &merges, params.min_cluster_size);
        let selected = select_clusters(n, &condensed);
        label_points(n, &condensed, &selected)
    };
    Ok(ClusterSet::from_labels(
        ClusterParams::Hdbscan(params.clone()),
        d.metric(),
        &labels,
        None,
        true,
    ))
}

fn core_distances(d: &DistanceMatrix, min_samples: usize) -> Vec<f64> {
    let n = d.len();
    let rank = min_samples.min(n) - 1;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<f32> = (0..n).map(|j| d.get(i, j)).collect();
            let (_, kth, _) = row.select_nth_unstable_by(rank, f32::total_cmp);
            f64::from(*kth)
        })
        .collect()
}

/// Prim's algorithm on the dense mutual-reachability graph. Returns edges
/// `(a, b, weight)` in insertion order.
fn mutual_reachability_mst(d: &DistanceMatrix, core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mreach = |a: usize, b: usize| core[a].max(core[b]).max(f64::from(d.get(a, b)));
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if !in_tree[j] {
                let w = mreach(current, j);
                if w < best[j] {
                    best[j] = w;
                    from[j] = current;
                }
            }
        }
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < next_w) {
                next = j;
                next_w = best[j];
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, next_w));
        current = next;
    }
    edges
}

/// Builds the single-linkage dendrogram. Node `n + k` is the k-th merge.
fn single_linkage(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Vec<Merge> {
    edges.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    let mut size = vec![1usize; 2 * n - 1];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merges = Vec::with_capacity(n - 1);
    for (k, (a, b, w)) in edges.into_iter().enumerate() {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        let node = n + k;
        parent[ra] = node;
        parent[rb] = node;
        size[node] = size[ra] + size[rb];
        merges.push(Merge {
            left: ra,
            right: rb,
            distance: w,
            size: size[node],
        });
    }
    merges
}

fn node_size(n: usize, merges: &[Merge], node: usize) -> usize {
    if node < n {
        1
    } else {
        merges[node - n].size
    }
}

fn leaves(n: usize, merges: &[Merge], node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let m = merges[x - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
}

fn lambda_of(distance: f64) -> f64 {
    1.0 / distance.max(MIN_LAMBDA_DISTANCE)
}

fn condense(n: usize, merges: &[Merge], min_cluster_size: usize) -> Vec<CondensedEdge> {
    let root = 2 * n - 2;
    let mut cluster_of = vec![0usize; 2 * n - 1];
    cluster_of[root] = n;
    let mut next_label = n + 1;
    let mut out = Vec::new();
    let mut fallen = Vec::new();
    let mut stack = vec![root];

    while let Some(node) = stack.pop() {
        let m = merges[node - n];
        let lambda = lambda_of(m.distance);
        let parent = cluster_of[node];
        let (ls, rs) = (node_size(n, merges, m.left), node_size(n, merges, m.right));
        let big_left = ls >= min_cluster_size;
        let big_right = rs >= min_cluster_size;

        let mut drop_points = |child: usize, out: &mut Vec<CondensedEdge>| {
            fallen.clear();
            leaves(n, merges, child, &mut fallen);
            for &p in &fallen {
                out.push(CondensedEdge {
                    parent,
                    child: p,
                    lambda,
                    size: 1,
                });
            }
        };

        match (big_left, big_right) {
            (true, true) => {
                for (child, size) in [(m.left, ls), (m.right, rs)] {
                    cluster_of[child] = next_label;
                    out.push(CondensedEdge {
                        parent,
                        child: next_label,
                        lambda,
                        size,
                    });
                    next_label += 1;
                }
                stack.push(m.right);
                stack.push(m.left);
            }
            (false, false) => {
                drop_points(m.left, &mut out);
                drop_points(m.right, &mut out);
            }
            (true, false) => {
                drop_points(m.right, &mut out);
                if m.left >= n {
                    cluster_of[m.left] = parent;
                    stack.push(m.left);
                } else {
                    drop_points(m.left, &mut out);
                }
            }
            (false, true) => {
                drop_points(m.left, &mut out);
                if m.right >= n {
                    cluster_of[m.right] = parent;
                    stack.push(m.right);
                } else {
                    drop_points(m.right, &mut out);
                }
            }
        }
    }
    out
}

/// Excess-of-mass selection. Returns a flag per cluster id offset by `n`.
fn select_clusters(n: usize, condensed: &[CondensedEdge]) -> Vec<bool> {
    let num_clusters = condensed
        .iter()
        .filter(|e| e.child >= n)
        .map(|e| e.child - n + 1)
        .max()
        .unwrap_or(1);
    let mut birth = vec![0f64; num_clusters];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); num_clusters];
    for e in condensed.iter().filter(|e| e.child >= n) {
        birth[e.child - n] = e.lambda;
        children[e.parent - n].push(e.child - n);
    }
    let mut stability = vec![0f64; num_clusters];
    for e in condensed {
        let c = e.parent - n;
        stability[c] += (e.lambda - birth[c]) * e.size as f64;
    }

    let mut selected = vec![true; num_clusters];
    selected[0] = false;
    // children always carry larger ids than their parent
    for c in (1..num_clusters).rev() {
        let subtree: f64 = children[c].iter().map(|k| stability[*k]).sum();
        if subtree > stability[c] {
            selected[c] = false;
            stability[c] = subtree;
        } else {
            let mut stack = children[c].clone();
            while let Some(k) = stack.pop() {
                selected[k] = false;
                stack.extend_from_slice(&children[k]);
            }
        }
    }
    selected
}

fn label_points(n: usize, condensed: &[CondensedEdge], selected: &[bool]) -> Vec<Option<usize>> {
    let mut cluster_parent = vec![usize::MAX; selected.len()];
    let mut point_parent = vec![n; n];
    for e in condensed {
        if e.child >= n {
            cluster_parent[e.child - n] = e.parent - n;
        } else {
            point_parent[e.child] = e.parent - n;
        }
    }
    point_parent
        .iter()
        .map(|&start| {
            let mut c = start;
            loop {
                if selected[c] {
                    return Some(c);
                }
                if c == 0 {
                    return None;
                }
                c = cluster_parent[c];
            }
        })
        .collect()
}

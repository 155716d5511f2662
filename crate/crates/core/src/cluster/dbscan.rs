//! DBSCAN over precomputed distances.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClusterError, ClusterParams, ClusterSet};
use crate::distance::DistanceMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DbscanParams {
    /// Neighborhood radius, inclusive.
    pub eps: f64,
    /// Minimum neighborhood size for a core point, counting the point itself.
    pub min_pts: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        DbscanParams { eps: 0.25, min_pts: 2 }
    }
}

/// Density-based clustering.
///
/// Core points are connected when within `eps` of each other; each
/// connected component of core points is a cluster. A non-core point within
/// `eps` of some core point joins the cluster, among those it touches,
/// whose smallest core index is lowest (the cluster a sequential scan in
/// index order reaches first). Every other point is noise.
pub fn dbscan(d: &DistanceMatrix, params: &DbscanParams) -> Result<ClusterSet, ClusterError> {
    if params.eps.is_nan() || params.eps <= 0.0 || params.min_pts == 0 {
        return Err(ClusterError::InvalidParameter(format!(
            "eps must be > 0 and min_pts >= 1 (got eps={}, min_pts={})",
            params.eps, params.min_pts
        )));
    }
    let n = d.len();
    let eps = params.eps;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).filter(|&j| f64::from(d.get(i, j)) <= eps).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= params.min_pts).collect();

    let mut component: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !core[start] || component[start].is_some() {
            continue;
        }
        component[start] = Some(next);
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if core[q] && component[q].is_none() {
                    component[q] = Some(next);
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }

    // components are numbered by their smallest core index, so the minimum
    // id among touching components is the one reached first
    let labels: Vec<Option<usize>> = (0..n)
        .map(|i| {
            if core[i] {
                component[i]
            } else {
                neighbors[i].iter().filter_map(|&j| if core[j] { component[j] } else { None }).min()
            }
        })
        .collect();

    Ok(ClusterSet::from_labels(
        ClusterParams::Dbscan(params.clone()),
        d.metric(),
        &labels,
        None,
        true,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::DistanceMetricId;

    fn groups(sizes: &[usize], within: f32, across: f32) -> DistanceMatrix {
        let g: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, s)| std::iter::repeat_n(b, *s)).collect();
        DistanceMatrix::from_fn(g.len(), DistanceMetricId::Jaro, |i, j| if g[i] == g[j] { within } else { across })
    }

    #[test]
    fn two_groups() {
        let cs = dbscan(&groups(&[3, 4], 0.1, 0.9), &DbscanParams { eps: 0.2, min_pts: 2 }).unwrap();
        assert_eq!(cs.clusters(), &[vec![0, 1, 2], vec![3, 4, 5, 6]]);
        assert!(cs.noise().is_empty());
    }

    #[test]
    fn all_far_apart_is_noise() {
        let cs = dbscan(&groups(&[1, 1, 1, 1], 0.0, 0.9), &DbscanParams { eps: 0.2, min_pts: 2 }).unwrap();
        assert_eq!(cs.num_clusters(), 0);
        assert_eq!(cs.noise(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn max_eps_single_cluster() {
        let cs = dbscan(&groups(&[2, 3], 0.1, 0.9), &DbscanParams { eps: 1.0, min_pts: 1 }).unwrap();
        assert_eq!(cs.clusters(), &[vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn border_point_goes_to_first_reached_cluster() {
        // only 1 and 4 are core; 0 borders both
        let pos = [0.0f32, -0.15, -0.2, -0.25, 0.15, 0.2, 0.25];
        let d = DistanceMatrix::from_fn(7, DistanceMetricId::Jaro, |i, j| (pos[i] - pos[j]).abs());
        let cs = dbscan(&d, &DbscanParams { eps: 0.16, min_pts: 4 }).unwrap();
        assert_eq!(cs.clusters(), &[vec![0, 1, 2, 3], vec![4, 5, 6]]);
    }

    #[test]
    fn rejects_bad_params() {
        let d = groups(&[2], 0.1, 0.9);
        assert!(dbscan(&d, &DbscanParams { eps: 0.0, min_pts: 2 }).is_err());
        assert!(dbscan(&d, &DbscanParams { eps: 0.1, min_pts: 0 }).is_err());
    }
}

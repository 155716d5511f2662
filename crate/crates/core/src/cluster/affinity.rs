//! Affinity propagation by responsibility/availability message passing.
//!
//! Similarities are `s(i, k) = -D[i][k]` with the preference on the
//! diagonal. Before iterating, every similarity receives a perturbation of
//! order machine epsilon drawn from a fixed-seed generator; this breaks
//! exact ties between symmetric points without making runs depend on
//! anything but the input. Row updates run in parallel and every reduction
//! has a fixed summation order, so assignments are identical for any
//! worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{median, ClusterError, ClusterParams, ClusterSet};
use crate::distance::DistanceMatrix;

const TIE_BREAK_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AffinityParams {
    pub damping: f64,
    pub max_iter: usize,
    pub convergence_iter: usize,
    /// Self-similarity; `None` means the median off-diagonal similarity.
    pub preference: Option<f64>,
}

impl Default for AffinityParams {
    fn default() -> Self {
        AffinityParams {
            damping: 0.9,
            max_iter: 1000,
            convergence_iter: 50,
            preference: None,
        }
    }
}

impl AffinityParams {
    fn validate(&self) -> Result<(), ClusterError> {
        if !(0.5..1.0).contains(&self.damping) {
            return Err(ClusterError::InvalidParameter(format!(
                "damping must be in [0.5, 1), got {}",
                self.damping
            )));
        }
        if self.max_iter == 0 || self.convergence_iter == 0 {
            return Err(ClusterError::InvalidParameter(
                "max_iter and convergence_iter must be positive".into(),
            ));
        }
        if matches!(self.preference, Some(p) if !p.is_finite()) {
            return Err(ClusterError::InvalidParameter("preference must be finite".into()));
        }
        Ok(())
    }
}

/// Clusters the points of `d` by affinity propagation.
///
/// The returned parameter record carries the preference actually used. If
/// the exemplar set has not stabilized after `max_iter` iterations the
/// current exemplars are still used and the set is flagged as not
/// converged.
pub fn affinity_propagation(d: &DistanceMatrix, params: &AffinityParams) -> Result<ClusterSet, ClusterError> {
    params.validate()?;
    let n = d.len();
    if n == 0 {
        return Err(ClusterError::EmptyMatrix);
    }
    let tri = d.lower_triangle();
    let preference = params.preference.unwrap_or_else(|| {
        if tri.is_empty() {
            0.0
        } else {
            -median(&tri.iter().map(|v| f64::from(*v)).collect::<Vec<_>>())
        }
    });
    let used = ClusterParams::AffinityPropagation(AffinityParams {
        preference: Some(preference),
        ..params.clone()
    });
    let finish = |labels: Vec<Option<usize>>, exemplars: Vec<usize>, converged: bool| {
        let pairs: Vec<(usize, usize)> = exemplars.iter().enumerate().map(|(c, e)| (c, *e)).collect();
        ClusterSet::from_labels(used.clone(), d.metric(), &labels, Some(&pairs), converged)
    };

    if n == 1 {
        return Ok(finish(vec![Some(0)], vec![0], true));
    }

    // Every off-diagonal similarity equal: message passing cannot separate
    // the points, so the outcome follows from comparing the preference with
    // the shared similarity.
    let first = tri[0];
    if tri.iter().all(|v| *v == first) {
        let s = -f64::from(first);
        return Ok(if preference > s {
            finish((0..n).map(Some).collect(), (0..n).collect(), true)
        } else {
            finish(vec![Some(0); n], vec![0], true)
        });
    }

    let mut s = vec![0f64; n * n];
    for i in 0..n {
        for k in 0..n {
            s[i * n + k] = if i == k { preference } else { -f64::from(d.get(i, k)) };
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(TIE_BREAK_SEED);
    for v in s.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += (f64::EPSILON * *v + f64::MIN_POSITIVE * 100.0) * z;
    }

    let damping = params.damping;
    let mut r = vec![0f64; n * n];
    let mut a = vec![0f64; n * n];
    let mut colsum = vec![0f64; n];
    let mut history = vec![vec![false; n]; params.convergence_iter];
    let mut converged = false;

    for it in 0..params.max_iter {
        r.par_chunks_mut(n).enumerate().for_each(|(i, r_row)| {
            let s_row = &s[i * n..(i + 1) * n];
            let a_row = &a[i * n..(i + 1) * n];
            let (mut best, mut best_k, mut second) = (f64::NEG_INFINITY, 0, f64::NEG_INFINITY);
            for k in 0..n {
                let v = a_row[k] + s_row[k];
                if v > best {
                    second = best;
                    best = v;
                    best_k = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let competing = if k == best_k { second } else { best };
                r_row[k] = damping * r_row[k] + (1.0 - damping) * (s_row[k] - competing);
            }
        });

        let r_ref = &r;
        colsum.par_iter_mut().enumerate().for_each(|(k, sum)| {
            let mut acc = 0.0;
            for i in 0..n {
                if i != k {
                    acc += r_ref[i * n + k].max(0.0);
                }
            }
            *sum = acc;
        });

        a.par_chunks_mut(n).enumerate().for_each(|(i, a_row)| {
            for k in 0..n {
                let new = if i == k {
                    colsum[k]
                } else {
                    (r_ref[k * n + k] + colsum[k] - r_ref[i * n + k].max(0.0)).min(0.0)
                };
                a_row[k] = damping * a_row[k] + (1.0 - damping) * new;
            }
        });

        let slot = &mut history[it % params.convergence_iter];
        let mut count = 0;
        for k in 0..n {
            slot[k] = a[k * n + k] + r[k * n + k] > 0.0;
            count += usize::from(slot[k]);
        }
        if it + 1 >= params.convergence_iter && count > 0 {
            let stable = (0..n).all(|k| {
                let on = history.iter().filter(|h| h[k]).count();
                on == 0 || on == params.convergence_iter
            });
            if stable {
                converged = true;
                break;
            }
        }
    }

    let exemplars: Vec<usize> = (0..n).filter(|&k| a[k * n + k] + r[k * n + k] > 0.0).collect();
    if !converged {
        log::warn!(
            "affinity propagation did not converge within {} iterations",
            params.max_iter
        );
    }
    if exemplars.is_empty() {
        log::warn!("affinity propagation produced no exemplars; all points are unassigned");
        return Ok(finish(vec![None; n], Vec::new(), converged));
    }

    let labels: Vec<Option<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if let Ok(c) = exemplars.binary_search(&i) {
                return Some(c);
            }
            let mut best = 0;
            let mut best_sim = f32::NEG_INFINITY;
            for (c, &e) in exemplars.iter().enumerate() {
                let sim = -d.get(i, e);
                if sim > best_sim {
                    best_sim = sim;
                    best = c;
                }
            }
            Some(best)
        })
        .collect();
    Ok(finish(labels, exemplars, converged))
}

//! Cosine and edit similarity, and the field × term similarity scan.
//!
//! The scan works on unit-normalized `f32` copies of the embeddings, padded
//! to a multiple of eight lanes, and computes every cell with the same
//! fixed-order dot product. Materialized and pruned modes therefore see
//! bit-identical cell values, independent of blocking or thread count.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{jaro_winkler, levenshtein_chars, scaled_edit};
use crate::embedding::TermEmbedding;

const LANES: usize = 8;
/// Fields processed together against one cached block of terms.
const FIELD_BLOCK: usize = 32;
/// Terms per cache block.
const TERM_BLOCK: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimilarityError {
    #[error("zero vector at {side} index {index}")]
    ZeroVector { side: &'static str, index: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Cosine similarity `x·y / (‖x‖‖y‖)` computed in `f64` and clamped to
/// `[-1, 1]`.
pub fn cosine_similarity(x: &[f32], y: &[f32]) -> Result<f64, SimilarityError> {
    if x.len() != y.len() {
        return Err(SimilarityError::DimensionMismatch(x.len(), y.len()));
    }
    let (mut dot, mut nx, mut ny) = (0f64, 0f64, 0f64);
    for (a, b) in x.iter().zip(y) {
        let (a, b) = (f64::from(*a), f64::from(*b));
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    if nx == 0.0 {
        return Err(SimilarityError::ZeroVector { side: "left", index: 0 });
    }
    if ny == 0.0 {
        return Err(SimilarityError::ZeroVector { side: "right", index: 0 });
    }
    Ok((dot / (nx * ny).sqrt()).clamp(-1.0, 1.0))
}

/// Cosine similarity between two term embeddings.
pub fn co_sim(x: &TermEmbedding, y: &TermEmbedding) -> Result<f64, SimilarityError> {
    cosine_similarity(&x.vector, &y.vector)
}

/// String similarity paired with cosine similarity when scoring candidates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditSimilarity {
    /// `1 - levenshtein(a, b) / max(|a|, |b|)`.
    #[default]
    Levenshtein,
    JaroWinkler,
}

impl EditSimilarity {
    pub fn score(self, a: &str, b: &str) -> f64 {
        match self {
            EditSimilarity::Levenshtein => edit_sim(a, b),
            EditSimilarity::JaroWinkler => jaro_winkler(a, b),
        }
    }
}

/// `1 - levenshtein(a, b) / max(|a|, |b|)`; 1 when both are empty.
pub fn edit_sim(a: &str, b: &str) -> f64 {
    let ac: Vec<char> = a.chars().collect();
    let bc: Vec<char> = b.chars().collect();
    1.0 - scaled_edit(levenshtein_chars(&ac, &bc), ac.len(), bc.len())
}

/// Row-major matrix of unit-normalized vectors, zero-padded to whole lanes.
#[derive(Debug, Clone)]
pub struct UnitVectors {
    dimension: usize,
    stride: usize,
    data: Vec<f32>,
}

impl UnitVectors {
    pub fn new(vectors: &[TermEmbedding], side: &'static str) -> Result<Self, SimilarityError> {
        let dimension = vectors.first().map_or(0, |v| v.vector.len());
        let stride = dimension.div_ceil(LANES) * LANES;
        let mut data = vec![0f32; stride * vectors.len()];
        data.par_chunks_mut(stride.max(1))
            .zip(vectors.par_iter())
            .enumerate()
            .try_for_each(|(index, (row, v))| {
                if v.vector.len() != dimension {
                    return Err(SimilarityError::DimensionMismatch(dimension, v.vector.len()));
                }
                let norm = v.vector.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(SimilarityError::ZeroVector { side, index });
                }
                for (dst, x) in row.iter_mut().zip(&v.vector) {
                    *dst = (f64::from(*x) / norm) as f32;
                }
                Ok(())
            })?;
        Ok(UnitVectors {
            dimension,
            stride,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.stride).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }
}

#[inline]
fn lane_dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0f32; LANES];
    for (ca, cb) in a.chunks_exact(LANES).zip(b.chunks_exact(LANES)) {
        for k in 0..LANES {
            acc[k] += ca[k] * cb[k];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

/// Visits every `(field, term, cosine)` cell, grouped by blocks of fields.
/// `visit` receives the field block start and a closure-friendly callback
/// per cell; the cell order within one field is ascending term index.
fn scan<S, I, V>(fields: &UnitVectors, terms: &UnitVectors, init: I, visit: V) -> Vec<S>
where
    S: Send,
    I: Fn(usize) -> S + Sync,
    V: Fn(&mut S, usize, f32) + Sync,
{
    assert_eq!(fields.stride, terms.stride, "dimension mismatch");
    let n = fields.len();
    let blocks: Vec<usize> = (0..n).step_by(FIELD_BLOCK).collect();
    let per_block: Vec<Vec<S>> = blocks
        .into_par_iter()
        .map(|start| {
            let end = (start + FIELD_BLOCK).min(n);
            let mut states: Vec<S> = (start..end).map(&init).collect();
            for t0 in (0..terms.len()).step_by(TERM_BLOCK) {
                let t1 = (t0 + TERM_BLOCK).min(terms.len());
                for (offset, state) in states.iter_mut().enumerate() {
                    let f = fields.row(start + offset);
                    for t in t0..t1 {
                        let s = lane_dot(f, terms.row(t)).clamp(-1.0, 1.0);
                        visit(state, t, s);
                    }
                }
            }
            states
        })
        .collect();
    per_block.into_iter().flatten().collect()
}

/// Dense `N × M` cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.cols + j]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    /// Applies the pruning rule of [`top_k_similarities`] to a materialized
    /// matrix.
    pub fn prune(&self, top_k: usize, floor: f32) -> Vec<Vec<ScoredTerm>> {
        (0..self.rows)
            .map(|i| {
                let mut kept = TopK::new(top_k);
                for (j, s) in self.row(i).iter().enumerate() {
                    if *s >= floor {
                        kept.push(ScoredTerm { term: j, score: *s });
                    }
                }
                kept.into_sorted()
            })
            .collect()
    }
}

/// A term index with its cosine similarity to some field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredTerm {
    pub term: usize,
    pub score: f32,
}

fn scored_order(a: &ScoredTerm, b: &ScoredTerm) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.term.cmp(&b.term))
}

/// Bounded best-first collector. Keeps the `k` best items under
/// `scored_order`, which is a total order, so the result is independent of
/// insertion order.
struct TopK {
    k: usize,
    items: Vec<ScoredTerm>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK { k, items: Vec::new() }
    }

    fn push(&mut self, item: ScoredTerm) {
        if self.k == 0 {
            return;
        }
        if self.items.len() == self.k {
            let worst = self.items.last().unwrap();
            if scored_order(&item, worst) != Ordering::Less {
                return;
            }
            self.items.pop();
        }
        let pos = self
            .items
            .partition_point(|x| scored_order(x, &item) == Ordering::Less);
        self.items.insert(pos, item);
    }

    fn into_sorted(self) -> Vec<ScoredTerm> {
        self.items
    }
}

/// Materializes every field × term cosine similarity.
pub fn build_similarity_matrix(
    fields: &[TermEmbedding],
    terms: &[TermEmbedding],
) -> Result<SimilarityMatrix, SimilarityError> {
    let (f, t) = prepare(fields, terms)?;
    let cols = terms.len();
    let rows = scan(&f, &t, |_| Vec::with_capacity(cols), |row: &mut Vec<f32>, _, s| row.push(s));
    Ok(SimilarityMatrix {
        rows: fields.len(),
        cols,
        values: rows.into_iter().flatten().collect(),
    })
}

/// For each field, the `top_k` terms with cosine similarity `>= floor`,
/// best first (ties by lower term index), without materializing the matrix.
pub fn top_k_similarities(
    fields: &[TermEmbedding],
    terms: &[TermEmbedding],
    top_k: usize,
    floor: f32,
) -> Result<Vec<Vec<ScoredTerm>>, SimilarityError> {
    let (f, t) = prepare(fields, terms)?;
    Ok(scan(
        &f,
        &t,
        |_| TopK::new(top_k),
        |kept: &mut TopK, term, score| {
            if score >= floor {
                kept.push(ScoredTerm { term, score });
            }
        },
    )
    .into_iter()
    .map(TopK::into_sorted)
    .collect())
}

pub(crate) fn prepare(
    fields: &[TermEmbedding],
    terms: &[TermEmbedding],
) -> Result<(UnitVectors, UnitVectors), SimilarityError> {
    let f = UnitVectors::new(fields, "field")?;
    let t = UnitVectors::new(terms, "term")?;
    if !fields.is_empty() && !terms.is_empty() && f.dimension != t.dimension {
        return Err(SimilarityError::DimensionMismatch(f.dimension, t.dimension));
    }
    Ok((f, t))
}

/// Runs `visit` over all cells, keeping per-field state; used by the
/// aligner's screened scan.
pub(crate) fn scan_cells<S, I, V>(fields: &UnitVectors, terms: &UnitVectors, init: I, visit: V) -> Vec<S>
where
    S: Send,
    I: Fn(usize) -> S + Sync,
    V: Fn(&mut S, usize, f32) + Sync,
{
    scan(fields, terms, init, visit)
}

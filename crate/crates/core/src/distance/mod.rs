//! String distance metrics and the pairwise distance matrix.

mod matrix;
mod metrics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingError, TermEmbedder};
use crate::similarity::cosine_similarity;

pub use matrix::{build_distance_matrix, DistanceMatrix, MatrixError};
pub use metrics::{
    damerau_levenshtein, jaccard_tokens, jaro, jaro_winkler, levenshtein, WINKLER_MAX_PREFIX,
    WINKLER_SCALE,
};
pub(crate) use metrics::{levenshtein_chars, scaled_edit};

#[derive(Debug, thiserror::Error)]
pub enum DistanceError {
    #[error("the cosine_embedding metric requires an embedding store")]
    MissingStore,
    #[error("unknown distance metric `{0}`")]
    UnknownMetric(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// The six supported distance metrics. Serialized names and numeric ids
/// are part of the on-disk formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetricId {
    Levenshtein,
    DamerauLevenshtein,
    Jaro,
    JaroWinkler,
    JaccardTokens,
    CosineEmbedding,
}

impl DistanceMetricId {
    pub const ALL: [DistanceMetricId; 6] = [
        DistanceMetricId::Levenshtein,
        DistanceMetricId::DamerauLevenshtein,
        DistanceMetricId::Jaro,
        DistanceMetricId::JaroWinkler,
        DistanceMetricId::JaccardTokens,
        DistanceMetricId::CosineEmbedding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistanceMetricId::Levenshtein => "levenshtein",
            DistanceMetricId::DamerauLevenshtein => "damerau_levenshtein",
            DistanceMetricId::Jaro => "jaro",
            DistanceMetricId::JaroWinkler => "jaro_winkler",
            DistanceMetricId::JaccardTokens => "jaccard_tokens",
            DistanceMetricId::CosineEmbedding => "cosine_embedding",
        }
    }

    /// Numeric id used in the binary matrix header.
    pub fn code(self) -> u16 {
        self as u16
    }

    pub fn from_code(code: u16) -> Option<Self> {
        Self::ALL.get(usize::from(code)).copied()
    }

    pub fn needs_store(self) -> bool {
        self == DistanceMetricId::CosineEmbedding
    }
}

impl fmt::Display for DistanceMetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceMetricId {
    type Err = DistanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| DistanceError::UnknownMetric(s.to_string()))
    }
}

/// Cosine distance between two embedding vectors, clamped to `[0, 1]`.
/// A zero vector is at distance 1 from any nonzero vector and 0 from
/// another zero vector.
pub fn cosine_vector_distance(x: &[f32], y: &[f32]) -> f64 {
    match cosine_similarity(x, y) {
        Ok(s) => (1.0 - s).clamp(0.0, 1.0),
        Err(_) => {
            let zero = |v: &[f32]| v.iter().all(|c| *c == 0.0);
            if zero(x) && zero(y) {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Cosine distance between the term embeddings of two normalized names.
pub fn cosine_embedding_distance(a: &str, b: &str, store: &TermEmbedder) -> Result<f64, DistanceError> {
    let x = store.embed(a)?;
    let y = store.embed(b)?;
    Ok(cosine_vector_distance(&x.vector, &y.vector))
}

/// Distance on the common `[0, 1]` scale. Edit distances are divided by
/// the longer length; Jaro and Jaro-Winkler become `1 - similarity`.
pub fn normalized_distance(
    metric: DistanceMetricId,
    a: &str,
    b: &str,
    store: Option<&TermEmbedder>,
) -> Result<f64, DistanceError> {
    let d = match metric {
        DistanceMetricId::Levenshtein => {
            let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
            scaled_edit(levenshtein_chars(&ac, &bc), ac.len(), bc.len())
        }
        DistanceMetricId::DamerauLevenshtein => scaled_edit(
            damerau_levenshtein(a, b),
            a.chars().count(),
            b.chars().count(),
        ),
        DistanceMetricId::Jaro => 1.0 - jaro(a, b),
        DistanceMetricId::JaroWinkler => 1.0 - jaro_winkler(a, b),
        DistanceMetricId::JaccardTokens => jaccard_tokens(a, b),
        DistanceMetricId::CosineEmbedding => {
            cosine_embedding_distance(a, b, store.ok_or(DistanceError::MissingStore)?)?
        }
    };
    Ok(d.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{IdfTable, WordVectorTable};

    fn store() -> TermEmbedder {
        let vecs = WordVectorTable::from_entries([
            ("tumor", vec![1.0, 0.0]),
            ("region", vec![0.0, 1.0]),
            ("site", vec![1.0, 1.0]),
        ])
        .unwrap();
        TermEmbedder::new(vecs, IdfTable::default())
    }

    #[test]
    fn metric_names_round_trip() {
        for m in DistanceMetricId::ALL {
            assert_eq!(m.name().parse::<DistanceMetricId>().unwrap(), m);
            assert_eq!(DistanceMetricId::from_code(m.code()), Some(m));
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("hamming".parse::<DistanceMetricId>().is_err());
    }

    #[test]
    fn normalized_examples() {
        let d = normalized_distance(DistanceMetricId::Levenshtein, "kitten", "sitting", None).unwrap();
        assert!((d - 3.0 / 7.0).abs() < 1e-12);
        assert_eq!(normalized_distance(DistanceMetricId::JaroWinkler, "abc", "abc", None).unwrap(), 0.0);
        assert_eq!(normalized_distance(DistanceMetricId::JaccardTokens, "abc", "xyz", None).unwrap(), 1.0);
        assert_eq!(normalized_distance(DistanceMetricId::Levenshtein, "", "", None).unwrap(), 0.0);
    }

    #[test]
    fn cosine_requires_store() {
        assert!(matches!(
            normalized_distance(DistanceMetricId::CosineEmbedding, "tumor", "site", None),
            Err(DistanceError::MissingStore)
        ));
    }

    #[test]
    fn cosine_examples() {
        let s = store();
        assert_eq!(cosine_embedding_distance("tumor", "tumor", &s).unwrap(), 0.0);
        assert_eq!(cosine_embedding_distance("tumor", "region", &s).unwrap(), 1.0);
        assert_eq!(cosine_embedding_distance("tumor region", "region tumor", &s).unwrap(), 0.0);
        let d = normalized_distance(DistanceMetricId::CosineEmbedding, "tumor", "site", Some(&s)).unwrap();
        assert!((d - (1.0 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-7);
    }

    #[test]
    fn zero_vectors_have_defined_distance() {
        assert_eq!(cosine_vector_distance(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(cosine_vector_distance(&[0.0, 0.0], &[1.0, 0.0]), 1.0);
        // opposite vectors clamp to 1
        assert_eq!(cosine_vector_distance(&[1.0, 0.0], &[-1.0, 0.0]), 1.0);
    }
}

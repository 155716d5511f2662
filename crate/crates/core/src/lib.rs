//! Align free-text metadata field names with ontology terms.
//!
//! Field names are normalized, clustered by string distance, embedded with
//! IDF-weighted word vectors, and matched against ontology labels by a
//! blend of cosine and edit similarity.

pub mod align;
pub mod cluster;
pub mod distance;
pub mod embedding;
pub mod external;
pub mod fixture;
pub mod normalize;
pub mod ontology;
pub mod pipeline;
pub mod serve;
pub mod similarity;

//! A small deterministic dataset: 20 field names, 50 ontology terms in 3
//! ontologies, and a 10-word vocabulary. Used by the examples and tests.

use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::{ClusterParams, DbscanParams};
use crate::distance::DistanceMetricId;
use crate::pipeline::RunConfig;

pub const VOCABULARY: [&str; 10] = [
    "tumor", "region", "tissue", "source", "cell", "type", "organ", "sample", "depth", "site",
];

pub const ONTOLOGIES: [&str; 3] = ["ANAT", "CELL", "ENVO"];

pub const DIMENSION: usize = 16;

/// Raw field names. The first 12 normalize to labels of terms 0..12 (see
/// [`MATCHED_TERMS`]); the rest are near misses or unrelated.
pub const FIELD_NAMES: [&str; 20] = [
    "tumorRegion",
    "Tumor-Tissue",
    "tumor_source",
    "TUMOR CELL",
    "tumor type",
    "tumorOrgan",
    "Tumor Sample",
    "tumor_depth",
    "tumor site",
    "region tumor",
    "regionTissue",
    "region-source",
    "tumour region",
    "tissue types",
    "sample depth m",
    "cell_type_2",
    "organ sites",
    "geoLocation",
    "collection date",
    "host age",
];

/// For each of the first 12 fields, the term whose label it equals.
pub const MATCHED_TERMS: [usize; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

/// The 50 term labels: ordered pairs of distinct vocabulary words.
pub fn term_labels() -> Vec<String> {
    let mut out = Vec::new();
    for a in VOCABULARY {
        for b in VOCABULARY {
            if a != b && out.len() < 50 {
                out.push(format!("{a} {b}"));
            }
        }
    }
    out
}

/// `iri\tlabel\tontology_id` rows. Labels are written in mixed styles so
/// normalization matters.
pub fn terms_tsv() -> String {
    let mut s = String::from("iri\tlabel\tontology_id\n");
    for (i, label) in term_labels().iter().enumerate() {
        let onto = ONTOLOGIES[i % 3];
        let styled = match i % 4 {
            0 => label.clone(),
            1 => label.replace(' ', "_"),
            2 => label.to_uppercase(),
            _ => label.replace(' ', "-"),
        };
        s.push_str(&format!("http://example.org/{onto}/T{i:03}\t{styled}\t{onto}\n"));
    }
    s
}

/// Word vectors in text format, drawn from a fixed seed.
pub fn vectors_txt() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut s = String::new();
    for w in VOCABULARY {
        s.push_str(w);
        for _ in 0..DIMENSION {
            let v: f32 = rng.random_range(-1.0..1.0);
            s.push_str(&format!(" {v:.5}"));
        }
        s.push('\n');
    }
    s
}

pub fn idf_tsv() -> String {
    VOCABULARY
        .iter()
        .enumerate()
        .map(|(i, w)| format!("{w}\t{:.4}\n", 0.5 + 0.25 * i as f64))
        .collect()
}

pub fn fields_txt() -> String {
    FIELD_NAMES.iter().map(|f| format!("{f}\n")).collect()
}

/// Writes the inputs into `dir` and returns a config that runs on them,
/// writing to `dir/out`.
pub fn write_inputs(dir: &Path) -> io::Result<RunConfig> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("fields.txt"), fields_txt())?;
    fs::write(dir.join("vectors.txt"), vectors_txt())?;
    fs::write(dir.join("idf.tsv"), idf_tsv())?;
    fs::write(dir.join("terms.tsv"), terms_tsv())?;
    Ok(RunConfig {
        corpus: dir.join("fields.txt"),
        corpus_column: None,
        vectors: dir.join("vectors.txt"),
        idf: dir.join("idf.tsv"),
        terms: dir.join("terms.tsv"),
        output_dir: dir.join("out"),
        metric: DistanceMetricId::JaroWinkler,
        clustering: ClusterParams::Dbscan(DbscanParams { eps: 0.2, min_pts: 2 }),
        threshold_r: 0.85,
        top_k: 10,
        cosine_floor: None,
        edit_similarity: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::normalize;

    #[test]
    fn shapes() {
        let labels = term_labels();
        assert_eq!(labels.len(), 50);
        let mut uniq = labels.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 50);
        for (f, t) in FIELD_NAMES.iter().zip(MATCHED_TERMS) {
            assert_eq!(normalize(f).unwrap(), labels[t], "{f}");
        }
        let mut norm: Vec<_> = FIELD_NAMES.iter().map(|f| normalize(f).unwrap()).collect();
        norm.sort();
        norm.dedup();
        assert_eq!(norm.len(), 20);
    }
}

//! Field-to-term alignment, per-cluster ontology recommendations and
//! coverage.
//!
//! A term is a candidate for a field when the mean of cosine similarity and
//! edit similarity exceeds the threshold. Since edit similarity is at most
//! 1, only terms with cosine above `2r - 1` can qualify; the `f32` scan
//! screens on that bound with a small slack, and survivors are rescored in
//! `f64`. The result equals an exhaustive double loop.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{mean, median, ClusterError, ClusterSet};
use crate::embedding::TermEmbedding;
use crate::normalize::FieldName;
use crate::ontology::TermIndex;
use crate::similarity::{cosine_similarity, prepare, scan_cells, EditSimilarity, SimilarityError};

/// Margin between the `f32` screen and the exact bound. The scan's rounding
/// error on unit vectors is orders of magnitude smaller.
const SCREEN_SLACK: f32 = 1e-4;

/// Nearest in-cluster neighbors listed per field.
pub const NEIGHBOR_COUNT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignParams {
    /// Candidates need `(co_sim + edit_sim) / 2` strictly above this.
    pub threshold: f64,
    pub top_k: usize,
    /// Optional independent requirement `co_sim >= cosine_floor`.
    pub cosine_floor: Option<f64>,
    pub edit_similarity: EditSimilarity,
}

impl Default for AlignParams {
    fn default() -> Self {
        AlignParams {
            threshold: 0.85,
            top_k: 10,
            cosine_floor: None,
            edit_similarity: EditSimilarity::Levenshtein,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentCandidate {
    pub field_index: usize,
    pub term_ref: usize,
    pub co_sim: f64,
    pub edit_sim: f64,
    pub combined: f64,
}

/// Best first: combined score, then cosine, then lower term index.
pub fn candidate_order(a: &AlignmentCandidate, b: &AlignmentCandidate) -> Ordering {
    b.combined
        .total_cmp(&a.combined)
        .then_with(|| b.co_sim.total_cmp(&a.co_sim))
        .then_with(|| a.term_ref.cmp(&b.term_ref))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentMap {
    pub params: AlignParams,
    candidates: Vec<Vec<AlignmentCandidate>>,
}

impl AlignmentMap {
    pub fn new(params: AlignParams, candidates: Vec<Vec<AlignmentCandidate>>) -> Self {
        AlignmentMap { params, candidates }
    }

    pub fn candidates(&self, field_index: usize) -> &[AlignmentCandidate] {
        self.candidates.get(field_index).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[AlignmentCandidate]> {
        self.candidates.iter().map(Vec::as_slice)
    }

    pub fn aligned_fields(&self) -> usize {
        self.candidates.iter().filter(|c| !c.is_empty()).count()
    }
}

/// Scores one pair exactly. The strings compared are the embeddings'
/// labels.
pub fn score_pair(
    field_index: usize,
    field: &TermEmbedding,
    term_ref: usize,
    term: &TermEmbedding,
    edit: EditSimilarity,
) -> Result<AlignmentCandidate, SimilarityError> {
    let co_sim = cosine_similarity(&field.vector, &term.vector)?;
    let edit_sim = edit.score(&field.label, &term.label);
    Ok(AlignmentCandidate {
        field_index,
        term_ref,
        co_sim,
        edit_sim,
        combined: (co_sim + edit_sim) / 2.0,
    })
}

fn accepts(c: &AlignmentCandidate, params: &AlignParams) -> bool {
    c.combined > params.threshold && params.cosine_floor.is_none_or(|f| c.co_sim >= f)
}

/// Aligns every field against every term. `fields[i]` is field `i` and
/// `terms[j]` is term reference `j`; labels should be normalized forms.
pub fn align(
    fields: &[TermEmbedding],
    terms: &[TermEmbedding],
    params: &AlignParams,
) -> Result<AlignmentMap, SimilarityError> {
    let (f, t) = prepare(fields, terms)?;
    let mut bound = 2.0 * params.threshold - 1.0;
    if let Some(floor) = params.cosine_floor {
        bound = bound.max(floor);
    }
    let screen = (bound as f32) - SCREEN_SLACK;
    let survivors = scan_cells(&f, &t, |_| Vec::<u32>::new(), |kept, term, cos| {
        if cos >= screen {
            kept.push(term as u32);
        }
    });
    let candidates = survivors
        .into_par_iter()
        .enumerate()
        .map(|(i, kept)| {
            let mut out = Vec::new();
            for j in kept {
                let j = j as usize;
                let c = score_pair(i, &fields[i], j, &terms[j], params.edit_similarity)?;
                if accepts(&c, params) {
                    out.push(c);
                }
            }
            out.sort_by(candidate_order);
            out.truncate(params.top_k);
            Ok(out)
        })
        .collect::<Result<Vec<_>, SimilarityError>>()?;
    Ok(AlignmentMap::new(params.clone(), candidates))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecommendation {
    pub cluster_id: usize,
    pub ontology_id: String,
    pub covered_fields: Vec<usize>,
    pub covered_count: usize,
}

/// The ontology with candidates for the most members of a cluster; ties go
/// to the lexicographically smallest id.
pub fn recommend_ontology(
    cluster_id: usize,
    members: &[usize],
    map: &AlignmentMap,
    index: &TermIndex,
) -> Option<ClusterRecommendation> {
    let mut covered: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &m in members {
        let mut ontologies: Vec<&str> = map
            .candidates(m)
            .iter()
            .filter_map(|c| index.get(c.term_ref).map(|t| t.ontology_id.as_str()))
            .collect();
        ontologies.sort_unstable();
        ontologies.dedup();
        for o in ontologies {
            covered.entry(o).or_default().push(m);
        }
    }
    let mut best: Option<(&str, Vec<usize>)> = None;
    for (o, fields) in covered {
        if best.as_ref().is_none_or(|(_, b)| fields.len() > b.len()) {
            best = Some((o, fields));
        }
    }
    best.map(|(o, mut fields)| {
        fields.sort_unstable();
        ClusterRecommendation {
            cluster_id,
            ontology_id: o.to_string(),
            covered_count: fields.len(),
            covered_fields: fields,
        }
    })
}

pub fn recommend_all(clusters: &ClusterSet, map: &AlignmentMap, index: &TermIndex) -> Vec<ClusterRecommendation> {
    clusters
        .clusters()
        .iter()
        .enumerate()
        .filter_map(|(id, members)| recommend_ontology(id, members, map, index))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub num_clusters: usize,
    pub num_recs: usize,
    pub coverage_pct: f64,
    /// Over clusters with a recommendation; 0 when there are none.
    pub avg_fields_covered: f64,
    pub median_fields_covered: f64,
}

pub fn coverage_from(num_clusters: usize, recs: &[ClusterRecommendation]) -> Result<CoverageReport, ClusterError> {
    if num_clusters == 0 {
        return Err(ClusterError::AllNoise);
    }
    let counts: Vec<f64> = recs.iter().map(|r| r.covered_count as f64).collect();
    let (avg, med) = if counts.is_empty() {
        (0.0, 0.0)
    } else {
        (mean(&counts), median(&counts))
    };
    Ok(CoverageReport {
        num_clusters,
        num_recs: recs.len(),
        coverage_pct: 100.0 * recs.len() as f64 / num_clusters as f64,
        avg_fields_covered: avg,
        median_fields_covered: med,
    })
}

pub fn coverage_report(
    clusters: &ClusterSet,
    map: &AlignmentMap,
    index: &TermIndex,
) -> Result<CoverageReport, ClusterError> {
    coverage_from(clusters.num_clusters(), &recommend_all(clusters, map, index))
}

// ---------------------------------------------------------------------------
// Report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub term_ref: usize,
    pub iri: String,
    pub label: String,
    pub ontology_id: String,
    pub co_sim: f64,
    pub edit_sim: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborRecord {
    pub index: usize,
    pub normalized: String,
    pub distance: f32,
    /// The neighbor's best candidate, if any.
    pub top_candidate: Option<CandidateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldAlignment {
    pub index: usize,
    pub normalized: String,
    pub cluster: Option<usize>,
    pub candidates: Vec<CandidateRecord>,
    pub neighbors: Vec<NeighborRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    #[serde(flatten)]
    pub align: AlignParams,
    /// Always `"mean_of_cosine_and_edit"`.
    pub threshold_rule: String,
    pub num_terms: usize,
}

/// Contents of `alignments.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub params: ReportParams,
    pub fields: Vec<FieldAlignment>,
    pub recommendations: Vec<ClusterRecommendation>,
    pub coverage: CoverageReport,
}

impl AlignmentReport {
    /// Assembles the report. `distance(i, j)` is used to rank the members
    /// of a field's cluster for the neighbor annotation, which never
    /// affects scores.
    pub fn build<D>(
        corpus: &[FieldName],
        clusters: &ClusterSet,
        map: &AlignmentMap,
        index: &TermIndex,
        distance: D,
    ) -> Result<Self, ClusterError>
    where
        D: Fn(usize, usize) -> f32 + Sync,
    {
        let record = |c: &AlignmentCandidate| {
            let t = &index.terms()[c.term_ref];
            CandidateRecord {
                term_ref: c.term_ref,
                iri: t.iri.clone(),
                label: t.label.clone(),
                ontology_id: t.ontology_id.clone(),
                co_sim: c.co_sim,
                edit_sim: c.edit_sim,
                combined: c.combined,
            }
        };
        let fields = corpus
            .par_iter()
            .map(|f| {
                let cluster = clusters.label(f.index);
                let neighbors = match cluster {
                    Some(c) => nearest_members(f.index, &clusters.clusters()[c], &distance)
                        .into_iter()
                        .map(|(j, d)| NeighborRecord {
                            index: j,
                            normalized: corpus[j].normalized.clone(),
                            distance: d,
                            top_candidate: map.candidates(j).first().map(record),
                        })
                        .collect(),
                    None => Vec::new(),
                };
                FieldAlignment {
                    index: f.index,
                    normalized: f.normalized.clone(),
                    cluster,
                    candidates: map.candidates(f.index).iter().map(record).collect(),
                    neighbors,
                }
            })
            .collect();
        let recommendations = recommend_all(clusters, map, index);
        let coverage = coverage_from(clusters.num_clusters(), &recommendations)?;
        Ok(AlignmentReport {
            params: ReportParams {
                align: map.params.clone(),
                threshold_rule: "mean_of_cosine_and_edit".into(),
                num_terms: index.len(),
            },
            fields,
            recommendations,
            coverage,
        })
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

fn nearest_members<D: Fn(usize, usize) -> f32>(i: usize, members: &[usize], distance: &D) -> Vec<(usize, f32)> {
    let mut near: Vec<(usize, f32)> = members
        .iter()
        .filter(|&&j| j != i)
        .map(|&j| (j, distance(i, j)))
        .collect();
    near.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    near.truncate(NEIGHBOR_COUNT);
    near
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{ClusterParams, DbscanParams};
    use crate::distance::DistanceMetricId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn emb(label: &str, v: &[f32]) -> TermEmbedding {
        TermEmbedding {
            label: label.into(),
            vector: v.to_vec(),
        }
    }

    fn cand(field: usize, term: usize) -> AlignmentCandidate {
        AlignmentCandidate {
            field_index: field,
            term_ref: term,
            co_sim: 1.0,
            edit_sim: 1.0,
            combined: 1.0,
        }
    }

    fn brute(fields: &[TermEmbedding], terms: &[TermEmbedding], p: &AlignParams) -> Vec<Vec<AlignmentCandidate>> {
        fields
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut v: Vec<_> = terms
                    .iter()
                    .enumerate()
                    .map(|(j, t)| score_pair(i, f, j, t, p.edit_similarity).unwrap())
                    .filter(|c| accepts(c, p))
                    .collect();
                v.sort_by(candidate_order);
                v.truncate(p.top_k);
                v
            })
            .collect()
    }

    #[test]
    fn identical_label_and_vector_rank_first() {
        let fields = [emb("tumor region", &[0.3, 0.7, 0.1])];
        let terms = [
            emb("tumor site", &[0.3, 0.7, 0.12]),
            emb("tumor region", &[0.3, 0.7, 0.1]),
        ];
        let m = align(&fields, &terms, &AlignParams::default()).unwrap();
        let c = m.candidates(0);
        assert_eq!(c[0].term_ref, 1);
        assert_eq!(c[0].combined, 1.0);
        assert!(c.iter().all(|c| c.combined > 0.85));
    }

    #[test]
    fn mean_below_threshold_is_excluded() {
        // cosine 0.9 with edit similarity 0.5 averages to 0.7
        let c = AlignmentCandidate {
            field_index: 0,
            term_ref: 0,
            co_sim: 0.9,
            edit_sim: 0.5,
            combined: 0.7,
        };
        assert!(!accepts(&c, &AlignParams::default()));
        let fields = [emb("abcd", &[1.0, 0.0])];
        let terms = [emb("abxy", &[0.9, (1.0f32 - 0.81).sqrt()])];
        let m = align(&fields, &terms, &AlignParams::default()).unwrap();
        assert!(m.candidates(0).is_empty());
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let words = ["tumor", "region", "site", "cell", "type", "organ"];
        for _ in 0..20 {
            let mut mk = |n: usize| -> Vec<TermEmbedding> {
                (0..n)
                    .map(|_| {
                        let a = words[rng.random_range(0..words.len())];
                        let b = words[rng.random_range(0..words.len())];
                        let v: Vec<f32> = (0..6).map(|_| rng.random_range(0.2f32..1.0)).collect();
                        emb(&format!("{a} {b}"), &v)
                    })
                    .collect()
            };
            let fields = mk(20);
            let terms = mk(50);
            for threshold in [0.5, 0.8, 0.85, 0.95] {
                let p = AlignParams {
                    threshold,
                    top_k: 4,
                    ..Default::default()
                };
                let m = align(&fields, &terms, &p).unwrap();
                let expected = brute(&fields, &terms, &p);
                for (i, e) in expected.iter().enumerate() {
                    assert_eq!(m.candidates(i), e.as_slice());
                }
            }
        }
    }

    #[test]
    fn cosine_floor_applies_independently() {
        let fields = [emb("cell type", &[1.0, 0.0])];
        let terms = [emb("cell type", &[0.8, 0.6])];
        let p = AlignParams {
            threshold: 0.85,
            ..Default::default()
        };
        assert_eq!(align(&fields, &terms, &p).unwrap().candidates(0).len(), 1);
        let p = AlignParams {
            cosine_floor: Some(0.85),
            ..p
        };
        assert!(align(&fields, &terms, &p).unwrap().candidates(0).is_empty());
    }

    #[test]
    fn zero_vector_reported() {
        let err = align(&[emb("abc", &[0.0, 0.0])], &[emb("abc", &[1.0, 0.0])], &AlignParams::default()).unwrap_err();
        assert_eq!(err, SimilarityError::ZeroVector { side: "field", index: 0 });
    }

    fn index3() -> TermIndex {
        TermIndex::from_rows([
            ("http://o1/a", "alpha term", "O1"),
            ("http://o2/b", "beta term", "O2"),
            ("http://o7/c", "gamma term", "O7"),
        ])
        .unwrap()
    }

    #[test]
    fn recommendation_tie_goes_to_smaller_id() {
        let map = AlignmentMap::new(
            AlignParams::default(),
            vec![vec![cand(0, 0)], vec![cand(1, 0), cand(1, 1)], vec![cand(2, 1)]],
        );
        let r = recommend_ontology(0, &[0, 1, 2], &map, &index3()).unwrap();
        assert_eq!((r.ontology_id.as_str(), r.covered_count), ("O1", 2));
        assert_eq!(r.covered_fields, vec![0, 1]);
        let r2 = recommend_ontology(0, &[2, 0, 1], &map, &index3()).unwrap();
        assert_eq!(r, r2);
    }

    #[test]
    fn recommendation_absent_or_unanimous() {
        let empty = AlignmentMap::new(AlignParams::default(), vec![vec![]; 3]);
        assert!(recommend_ontology(0, &[0, 1, 2], &empty, &index3()).is_none());
        let all7 = AlignmentMap::new(
            AlignParams::default(),
            (0..3).map(|i| vec![cand(i, 2)]).collect(),
        );
        let r = recommend_ontology(4, &[0, 1, 2], &all7, &index3()).unwrap();
        assert_eq!((r.cluster_id, r.ontology_id.as_str(), r.covered_count), (4, "O7", 3));
    }

    fn rec(count: usize) -> ClusterRecommendation {
        ClusterRecommendation {
            cluster_id: 0,
            ontology_id: "O".into(),
            covered_fields: (0..count).collect(),
            covered_count: count,
        }
    }

    #[test]
    fn coverage_examples() {
        let c = coverage_from(4, &[rec(2), rec(3), rec(7)]).unwrap();
        assert_eq!(c.num_recs, 3);
        assert_eq!(c.coverage_pct, 75.0);
        assert_eq!(c.avg_fields_covered, 4.0);
        assert_eq!(c.median_fields_covered, 3.0);
        let c = coverage_from(2, &[rec(1), rec(1)]).unwrap();
        assert_eq!((c.coverage_pct, c.avg_fields_covered, c.median_fields_covered), (100.0, 1.0, 1.0));
        assert!(matches!(coverage_from(0, &[]), Err(ClusterError::AllNoise)));
    }

    #[test]
    fn report_lists_nearest_neighbors() {
        let corpus = crate::normalize::build_corpus(
            ["alpha term", "alpha terms", "alpha termss", "alpha termsss", "zzz qqq"]
                .into_iter()
                .map(crate::normalize::RawFieldName::new)
                .collect(),
        )
        .unwrap();
        let d = crate::distance::build_distance_matrix(
            &corpus.iter().map(|f| f.normalized.as_str()).collect::<Vec<_>>(),
            DistanceMetricId::Levenshtein,
            None,
        )
        .unwrap();
        let clusters = crate::cluster::run(&d, &ClusterParams::Dbscan(DbscanParams { eps: 0.3, min_pts: 2 })).unwrap();
        let map = AlignmentMap::new(AlignParams::default(), vec![vec![cand(0, 0)], vec![], vec![], vec![], vec![]]);
        let report = AlignmentReport::build(&corpus, &clusters, &map, &index3(), |i, j| d.get(i, j)).unwrap();
        let f3 = &report.fields[3];
        assert_eq!(f3.neighbors.iter().map(|n| n.index).collect::<Vec<_>>(), [2, 1, 0]);
        assert_eq!(f3.neighbors[2].top_candidate.as_ref().unwrap().iri, "http://o1/a");
        assert!(report.fields[4].neighbors.is_empty());
        assert_eq!(report.coverage.num_recs, 1);
        let back = AlignmentReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }
}

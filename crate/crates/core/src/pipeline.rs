//! End-to-end runs: normalize, distances, cluster, embed, align, recommend.
//!
//! Every artifact is first written with a `.partial` suffix; the suffixes
//! are removed only after all stages succeed, so a failed run leaves its
//! partial outputs marked as such. Runs are deterministic: identical
//! configuration and inputs give byte-identical artifacts.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{align, AlignParams, AlignmentReport, CoverageReport};
use crate::cluster::{self, cluster_stats, ClusterParams, ClusterSet, ClusterStats};
use crate::distance::{build_distance_matrix, cosine_vector_distance, normalized_distance, DistanceMetricId};
use crate::embedding::{read_embeddings, write_embeddings, IdfTable, TermEmbedder, WordVectorTable};
use crate::normalize::{build_corpus, read_raw_csv, read_raw_lines, write_corpus_csv, FieldName};
use crate::ontology::TermIndex;
use crate::similarity::EditSimilarity;

pub const CORPUS_FILE: &str = "corpus.csv";
pub const DISTANCES_FILE: &str = "distances.bin";
pub const CLUSTERS_FILE: &str = "clusters.json";
pub const FIELD_EMBEDDINGS_FILE: &str = "field_embeddings.bin";
pub const TERM_EMBEDDINGS_FILE: &str = "term_embeddings.bin";
pub const ALIGNMENTS_FILE: &str = "alignments.json";
pub const REPORT_FILE: &str = "report.json";

const ARTIFACTS: [&str; 6] = [
    CORPUS_FILE,
    DISTANCES_FILE,
    CLUSTERS_FILE,
    FIELD_EMBEDDINGS_FILE,
    TERM_EMBEDDINGS_FILE,
    ALIGNMENTS_FILE,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Normalize,
    Distances,
    Cluster,
    Embed,
    Align,
    Recommend,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Normalize => "normalize",
            Stage::Distances => "distances",
            Stage::Cluster => "cluster",
            Stage::Embed => "embed",
            Stage::Align => "align",
            Stage::Recommend => "recommend",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: Stage, message: String },
}

impl PipelineError {
    /// Process exit code: 2 for configuration errors, 3 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage { .. } => 3,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            PipelineError::Config(_) => None,
        }
    }
}

fn stage_err<E: fmt::Display>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

fn default_metric() -> DistanceMetricId {
    DistanceMetricId::JaroWinkler
}

fn default_clustering() -> ClusterParams {
    ClusterParams::AffinityPropagation(Default::default())
}

fn default_threshold() -> f64 {
    0.85
}

fn default_top_k() -> usize {
    10
}

/// Run configuration, read from TOML.
///
/// ```toml
/// corpus = "fields.txt"
/// vectors = "vectors.txt"
/// idf = "idf.tsv"
/// terms = "terms.tsv"
/// output_dir = "out"
/// metric = "jaro_winkler"
/// threshold_r = 0.85
/// top_k = 10
///
/// [clustering]
/// algorithm = "dbscan"
/// params = { eps = 0.2, min_pts = 2 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Newline-delimited field names, or CSV when `corpus_column` is set.
    pub corpus: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_column: Option<String>,
    pub vectors: PathBuf,
    pub idf: PathBuf,
    /// Term table with header `iri\tlabel\tontology_id`.
    pub terms: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_metric")]
    pub metric: DistanceMetricId,
    #[serde(default = "default_clustering")]
    pub clustering: ClusterParams,
    #[serde(default = "default_threshold")]
    pub threshold_r: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosine_floor: Option<f64>,
    #[serde(default)]
    pub edit_similarity: EditSimilarity,
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self, PipelineError> {
        let config: RunConfig = toml::from_str(s).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.vectors,
            &mut self.idf,
            &mut self.terms,
            &mut self.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.threshold_r.is_finite() {
            return Err(PipelineError::Config("threshold_r must be finite".into()));
        }
        if self.top_k == 0 {
            return Err(PipelineError::Config("top_k must be positive".into()));
        }
        Ok(())
    }

    pub fn align_params(&self) -> AlignParams {
        AlignParams {
            threshold: self.threshold_r,
            top_k: self.top_k,
            cosine_floor: self.cosine_floor,
            edit_similarity: self.edit_similarity,
        }
    }

    /// Input paths with the first stage that reads each.
    fn inputs(&self) -> Vec<(&Path, Stage)> {
        let store_stage = if self.metric.needs_store() {
            Stage::Distances
        } else {
            Stage::Embed
        };
        vec![
            (self.corpus.as_path(), Stage::Normalize),
            (self.vectors.as_path(), store_stage),
            (self.idf.as_path(), store_stage),
            (self.terms.as_path(), Stage::Embed),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHash {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCounts {
    pub raw_fields: usize,
    pub fields: usize,
    pub terms: usize,
    pub clusters: usize,
    pub noise: usize,
    pub aligned_fields: usize,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub counts: RunCounts,
    pub cluster_stats: ClusterStats,
    pub converged: bool,
    pub coverage: CoverageReport,
    pub artifacts: Vec<ArtifactHash>,
}

impl RunReport {
    pub fn load(run_dir: &Path) -> Result<Self, PipelineError> {
        let path = run_dir.join(REPORT_FILE);
        let text = fs::read_to_string(&path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    fn partial(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}.partial"))
    }

    fn write<F>(&mut self, stage: Stage, name: &str, f: F) -> Result<(), PipelineError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), String>,
    {
        let path = self.partial(name);
        let file = File::create(&path).map_err(|e| stage_err(stage)(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(stage_err(stage))?;
        w.flush().map_err(stage_err(stage))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn commit(&self, stage: Stage) -> Result<Vec<ArtifactHash>, PipelineError> {
        let mut hashes = Vec::new();
        for name in &self.written {
            let final_path = self.dir.join(name);
            fs::rename(self.partial(name), &final_path).map_err(stage_err(stage))?;
            let bytes = fs::read(&final_path).map_err(stage_err(stage))?;
            hashes.push(ArtifactHash {
                name: name.clone(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            });
        }
        Ok(hashes)
    }
}

fn load_store(config: &RunConfig, stage: Stage) -> Result<TermEmbedder, PipelineError> {
    let vectors = WordVectorTable::load(&config.vectors)
        .map_err(|e| stage_err(stage)(format!("{}: {e}", config.vectors.display())))?;
    let idf = IdfTable::load(&config.idf).map_err(|e| stage_err(stage)(format!("{}: {e}", config.idf.display())))?;
    Ok(TermEmbedder::new(vectors, idf))
}

fn read_corpus(config: &RunConfig) -> Result<(usize, Vec<FieldName>), PipelineError> {
    let err = stage_err(Stage::Normalize);
    let file = File::open(&config.corpus).map_err(|e| err(format!("{}: {e}", config.corpus.display())))?;
    let source = config.corpus.display().to_string();
    let raws = match &config.corpus_column {
        Some(col) => read_raw_csv(BufReader::new(file), col, &source),
        None => read_raw_lines(BufReader::new(file), &source),
    }
    .map_err(stage_err(Stage::Normalize))?;
    let raw_count = raws.len();
    Ok((raw_count, build_corpus(raws).map_err(stage_err(Stage::Normalize))?))
}

/// Executes a full run and writes every artifact plus `report.json` into
/// `config.output_dir`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, PipelineError> {
    config.validate()?;
    for (path, stage) in config.inputs() {
        if !path.is_file() {
            return Err(PipelineError::Stage {
                stage,
                message: format!("input not found: {}", path.display()),
            });
        }
    }
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", config.output_dir.display())))?;
    for name in ARTIFACTS.iter().chain([&REPORT_FILE]) {
        for path in [config.output_dir.join(name), config.output_dir.join(format!("{name}.partial"))] {
            if path.exists() {
                fs::remove_file(&path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
            }
        }
    }
    let mut out = Output {
        dir: config.output_dir.clone(),
        written: Vec::new(),
    };

    log::info!("stage normalize: {}", config.corpus.display());
    let (raw_fields, corpus) = read_corpus(config)?;
    out.write(Stage::Normalize, CORPUS_FILE, |w| {
        write_corpus_csv(&corpus, w).map_err(|e| e.to_string())
    })?;
    let names: Vec<&str> = corpus.iter().map(|f| f.normalized.as_str()).collect();

    log::info!("stage distances: {} fields, metric {}", names.len(), config.metric);
    let mut store = None;
    if config.metric.needs_store() {
        store = Some(load_store(config, Stage::Distances)?);
    }
    let distances = build_distance_matrix(&names, config.metric, store.as_ref()).map_err(stage_err(Stage::Distances))?;
    out.write(Stage::Distances, DISTANCES_FILE, |w| {
        distances.write_to(w).map_err(|e| e.to_string())
    })?;

    log::info!("stage cluster: {}", config.clustering.algorithm().name());
    let clusters: ClusterSet = cluster::run(&distances, &config.clustering).map_err(stage_err(Stage::Cluster))?;
    let stats = cluster_stats(&clusters).map_err(stage_err(Stage::Cluster))?;
    let clusters_json = clusters.to_json().map_err(stage_err(Stage::Cluster))?;
    out.write(Stage::Cluster, CLUSTERS_FILE, |w| {
        w.write_all(clusters_json.as_bytes()).map_err(|e| e.to_string())
    })?;

    log::info!("stage embed");
    let store = match store {
        Some(s) => s,
        None => load_store(config, Stage::Embed)?,
    };
    let index = TermIndex::load(&config.terms)
        .map_err(|e| stage_err(Stage::Embed)(format!("{}: {e}", config.terms.display())))?;
    let field_embs = store.embed_all(&names).map_err(stage_err(Stage::Embed))?;
    let term_embs = store.embed_all(&index.normalized_labels()).map_err(stage_err(Stage::Embed))?;
    let dim = store.dimension();
    out.write(Stage::Embed, FIELD_EMBEDDINGS_FILE, |w| {
        write_embeddings(&field_embs, dim, w).map_err(|e| e.to_string())
    })?;
    out.write(Stage::Embed, TERM_EMBEDDINGS_FILE, |w| {
        write_embeddings(&term_embs, dim, w).map_err(|e| e.to_string())
    })?;

    log::info!("stage align: {} x {}", field_embs.len(), term_embs.len());
    let map = align(&field_embs, &term_embs, &config.align_params()).map_err(stage_err(Stage::Align))?;

    log::info!("stage recommend");
    let report = AlignmentReport::build(&corpus, &clusters, &map, &index, |i, j| distances.get(i, j))
        .map_err(stage_err(Stage::Recommend))?;
    let report_json = report.to_json().map_err(stage_err(Stage::Recommend))?;
    out.write(Stage::Recommend, ALIGNMENTS_FILE, |w| {
        w.write_all(report_json.as_bytes()).map_err(|e| e.to_string())
    })?;

    let artifacts = out.commit(Stage::Recommend)?;
    let run_report = RunReport {
        config: config.clone(),
        counts: RunCounts {
            raw_fields,
            fields: corpus.len(),
            terms: index.len(),
            clusters: clusters.num_clusters(),
            noise: clusters.noise().len(),
            aligned_fields: map.aligned_fields(),
        },
        cluster_stats: stats,
        converged: clusters.converged(),
        coverage: report.coverage,
        artifacts,
    };
    let text = serde_json::to_string_pretty(&run_report).map_err(stage_err(Stage::Recommend))?;
    fs::write(config.output_dir.join(REPORT_FILE), text).map_err(stage_err(Stage::Recommend))?;
    Ok(run_report)
}

/// Paths read by [`align_from_artifacts`].
#[derive(Debug, Clone)]
pub struct AlignInputs {
    pub corpus: PathBuf,
    pub clusters: PathBuf,
    pub field_embeddings: PathBuf,
    pub term_embeddings: PathBuf,
    pub terms: PathBuf,
}

/// Rebuilds the alignment report from stored artifacts. Neighbor
/// distances are recomputed with the metric recorded in the cluster file;
/// the embedding metric uses the stored field embeddings.
pub fn align_from_artifacts(inputs: &AlignInputs, params: &AlignParams) -> Result<AlignmentReport, String> {
    let open = |p: &Path| File::open(p).map_err(|e| format!("{}: {e}", p.display()));
    let corpus = crate::normalize::read_corpus_csv(open(&inputs.corpus)?).map_err(|e| e.to_string())?;
    let clusters_text = fs::read_to_string(&inputs.clusters).map_err(|e| format!("{}: {e}", inputs.clusters.display()))?;
    let clusters = ClusterSet::from_json(&clusters_text).map_err(|e| e.to_string())?;
    let (_, field_embs) = read_embeddings(BufReader::new(open(&inputs.field_embeddings)?)).map_err(|e| e.to_string())?;
    let (_, term_embs) = read_embeddings(BufReader::new(open(&inputs.term_embeddings)?)).map_err(|e| e.to_string())?;
    let index = TermIndex::load(&inputs.terms).map_err(|e| e.to_string())?;

    if clusters.len() != corpus.len() || field_embs.len() != corpus.len() {
        return Err("corpus, clusters and field embeddings disagree on the number of fields".into());
    }
    if corpus.iter().zip(&field_embs).any(|(f, e)| f.normalized != e.label) {
        return Err("field embedding labels do not match the corpus".into());
    }
    if term_embs.len() != index.len() || index.terms().iter().zip(&term_embs).any(|(t, e)| t.normalized_label != e.label) {
        return Err("term embeddings do not match the term table".into());
    }

    let map = align(&field_embs, &term_embs, params).map_err(|e| e.to_string())?;
    let metric = clusters.metric;
    let names: Vec<&str> = corpus.iter().map(|f| f.normalized.as_str()).collect();
    let distance = |i: usize, j: usize| -> f32 {
        let d = if metric.needs_store() {
            cosine_vector_distance(&field_embs[i].vector, &field_embs[j].vector)
        } else {
            normalized_distance(metric, names[i], names[j], None).unwrap_or(1.0)
        };
        d.clamp(0.0, 1.0) as f32
    };
    AlignmentReport::build(&corpus, &clusters, &map, &index, distance).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_round_trip() {
        let c = RunConfig::from_toml(
            "corpus = 'f.txt'\nvectors = 'v.txt'\nidf = 'i.tsv'\nterms = 't.tsv'\noutput_dir = 'out'\n",
        )
        .unwrap();
        assert_eq!(c.metric, DistanceMetricId::JaroWinkler);
        assert_eq!(c.threshold_r, 0.85);
        assert_eq!(c.top_k, 10);
        assert_eq!(c.clustering, default_clustering());
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn config_clustering_table() {
        let c = RunConfig::from_toml(
            "corpus = 'f'\nvectors = 'v'\nidf = 'i'\nterms = 't'\noutput_dir = 'o'\n\
             [clustering]\nalgorithm = 'dbscan'\nparams = { eps = 0.3 }\n",
        )
        .unwrap();
        let ClusterParams::Dbscan(p) = c.clustering else { panic!() };
        assert_eq!((p.eps, p.min_pts), (0.3, 2));
    }

    #[test]
    fn config_errors_exit_two() {
        for bad in ["corpus = 'f'", "corpus='f'\nvectors='v'\nidf='i'\nterms='t'\noutput_dir='o'\nbogus=1", "corpus='f'\nvectors='v'\nidf='i'\nterms='t'\noutput_dir='o'\ntop_k=0"] {
            let e = RunConfig::from_toml(bad).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn missing_vectors_fail_at_embed() {
        let dir = tempfile::tempdir().unwrap();
        let p = |n: &str| dir.path().join(n);
        fs::write(p("f.txt"), "tumor region\n").unwrap();
        fs::write(p("i.tsv"), "tumor\t1.0\n").unwrap();
        fs::write(p("t.tsv"), "iri\tlabel\tontology_id\nhttp://x/1\ttumor region\tA\n").unwrap();
        let config = RunConfig::from_toml(&format!(
            "corpus = '{}'\nvectors = '{}'\nidf = '{}'\nterms = '{}'\noutput_dir = '{}'\n",
            p("f.txt").display(),
            p("missing.txt").display(),
            p("i.tsv").display(),
            p("t.tsv").display(),
            p("out").display()
        ))
        .unwrap();
        let err = run_pipeline(&config).unwrap_err();
        assert_eq!(err.stage(), Some(Stage::Embed));
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("missing.txt"));
    }
}

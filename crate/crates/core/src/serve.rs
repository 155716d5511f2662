//! HTTP API over a finished run directory for the curation UI.
//!
//! Run artifacts are read once at startup and never written. Curation
//! decisions go to an append-only JSON-lines journal; the current mapping
//! is the fold of the journal with the last decision per field winning.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::align::{AlignmentReport, ClusterRecommendation, FieldAlignment};
use crate::cluster::{cluster_stats, ClusterSet, ClusterStats};
use crate::distance::DistanceMatrix;
use crate::normalize::{read_corpus_csv, FieldName};
use crate::ontology::escape_tsv;
use crate::pipeline::{RunReport, ALIGNMENTS_FILE, CLUSTERS_FILE, CORPUS_FILE, DISTANCES_FILE};

pub const JOURNAL_FILE: &str = "decisions.jsonl";
pub const EXPORT_HEADER: &str = "normalized_field\tiri\tlabel\tontology_id";

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot load {path}: {message}")]
    Load { path: PathBuf, message: String },
    #[error("corrupt decision journal {path} at line {line}: {content}")]
    CorruptJournal { path: PathBuf, line: usize, content: String },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChosenTerm {
    pub iri: String,
    pub ontology_id: String,
}

/// One curation event. `chosen: None` rejects every candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationDecision {
    pub field_index: usize,
    pub chosen: Option<ChosenTerm>,
    pub decided_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct DecisionRequest {
    pub field_index: usize,
    pub iri: Option<String>,
    pub ontology_id: Option<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionStatus {
    Pending,
    Accepted,
    Rejected,
}

struct Journal {
    path: PathBuf,
    file: File,
    latest: BTreeMap<usize, CurationDecision>,
}

impl Journal {
    fn open(path: &Path) -> Result<Self, ServeError> {
        let mut latest = BTreeMap::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let d: CurationDecision = serde_json::from_str(&line).map_err(|_| ServeError::CorruptJournal {
                    path: path.to_path_buf(),
                    line: i + 1,
                    content: line.clone(),
                })?;
                latest.insert(d.field_index, d);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Journal {
            path: path.to_path_buf(),
            file,
            latest,
        })
    }

    fn append(&mut self, d: CurationDecision) -> std::io::Result<()> {
        let mut line = serde_json::to_string(&d).map_err(std::io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        self.latest.insert(d.field_index, d);
        Ok(())
    }

    fn status(&self, field_index: usize) -> DecisionStatus {
        match self.latest.get(&field_index) {
            None => DecisionStatus::Pending,
            Some(d) if d.chosen.is_some() => DecisionStatus::Accepted,
            Some(_) => DecisionStatus::Rejected,
        }
    }
}

/// Everything the API serves, loaded from a run directory.
pub struct RunData {
    pub corpus: Vec<FieldName>,
    pub clusters: ClusterSet,
    pub alignments: AlignmentReport,
    pub distances: DistanceMatrix,
    pub report: RunReport,
}

impl RunData {
    pub fn load(run_dir: &Path) -> Result<Self, ServeError> {
        let load_err = |name: &str, e: &dyn std::fmt::Display| ServeError::Load {
            path: run_dir.join(name),
            message: e.to_string(),
        };
        let read = |name: &str| fs::read_to_string(run_dir.join(name)).map_err(|e| load_err(name, &e));
        let corpus = read_corpus_csv(read(CORPUS_FILE)?.as_bytes()).map_err(|e| load_err(CORPUS_FILE, &e))?;
        let clusters = ClusterSet::from_json(&read(CLUSTERS_FILE)?).map_err(|e| load_err(CLUSTERS_FILE, &e))?;
        let alignments =
            AlignmentReport::from_json(&read(ALIGNMENTS_FILE)?).map_err(|e| load_err(ALIGNMENTS_FILE, &e))?;
        let distances = DistanceMatrix::load(&run_dir.join(DISTANCES_FILE)).map_err(|e| load_err(DISTANCES_FILE, &e))?;
        let report = RunReport::load(run_dir).map_err(|e| ServeError::Load {
            path: run_dir.to_path_buf(),
            message: e.to_string(),
        })?;
        if clusters.len() != corpus.len() || alignments.fields.len() != corpus.len() || distances.len() != corpus.len() {
            return Err(ServeError::Load {
                path: run_dir.to_path_buf(),
                message: "artifacts disagree on the number of fields".into(),
            });
        }
        Ok(RunData {
            corpus,
            clusters,
            alignments,
            distances,
            report,
        })
    }
}

#[derive(Clone)]
pub struct AppState {
    data: Arc<RunData>,
    journal: Arc<Mutex<Journal>>,
}

impl AppState {
    /// Opens the journal (creating it if absent). A line that does not
    /// parse refuses startup.
    pub fn new(data: RunData, journal_path: &Path) -> Result<Self, ServeError> {
        Ok(AppState {
            data: Arc::new(data),
            journal: Arc::new(Mutex::new(Journal::open(journal_path)?)),
        })
    }

    pub fn open(run_dir: &Path, journal_path: Option<&Path>) -> Result<Self, ServeError> {
        let journal = journal_path.map_or_else(|| run_dir.join(JOURNAL_FILE), Path::to_path_buf);
        Self::new(RunData::load(run_dir)?, &journal)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/clusters", get(list_clusters))
        .route("/api/clusters/{id}", get(get_cluster))
        .route("/api/fields/{index}/alignments", get(field_alignments))
        .route("/api/decisions", post(post_decision))
        .route("/api/export", get(export))
        .route("/api/meta", get(meta))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(state: AppState, addr: SocketAddr) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    log::info!("serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

#[derive(Serialize)]
struct ClusterSummary<'a> {
    id: usize,
    size: usize,
    exemplar: Option<usize>,
    recommendation: Option<&'a ClusterRecommendation>,
    decided: usize,
}

#[derive(Serialize)]
struct ClusterList<'a> {
    clusters: Vec<ClusterSummary<'a>>,
    noise: Vec<usize>,
    stats: Option<ClusterStats>,
}

fn recommendation(data: &RunData, id: usize) -> Option<&ClusterRecommendation> {
    data.alignments.recommendations.iter().find(|r| r.cluster_id == id)
}

async fn list_clusters(State(s): State<AppState>) -> Response {
    let journal = s.journal.lock().await;
    let data = &s.data;
    let clusters = data
        .clusters
        .clusters()
        .iter()
        .enumerate()
        .map(|(id, members)| ClusterSummary {
            id,
            size: members.len(),
            exemplar: data.clusters.exemplars().map(|e| e[id]),
            recommendation: recommendation(data, id),
            decided: members.iter().filter(|m| journal.latest.contains_key(m)).count(),
        })
        .collect();
    Json(ClusterList {
        clusters,
        noise: data.clusters.noise(),
        stats: cluster_stats(&data.clusters).ok(),
    })
    .into_response()
}

#[derive(Serialize)]
struct MemberView<'a> {
    index: usize,
    raw: &'a str,
    normalized: &'a str,
    status: DecisionStatus,
    top_combined: Option<f64>,
}

#[derive(Serialize)]
struct IntraClusterStats {
    size: usize,
    aligned_members: usize,
    mean_distance: Option<f64>,
    max_distance: Option<f32>,
}

#[derive(Serialize)]
struct ClusterDetail<'a> {
    id: usize,
    exemplar: Option<usize>,
    members: Vec<MemberView<'a>>,
    stats: IntraClusterStats,
    recommendation: Option<&'a ClusterRecommendation>,
}

async fn get_cluster(State(s): State<AppState>, UrlPath(id): UrlPath<usize>) -> Response {
    let data = &s.data;
    let Some(members) = data.clusters.clusters().get(id) else {
        return error(StatusCode::NOT_FOUND, format!("no cluster {id}"));
    };
    let journal = s.journal.lock().await;
    let views = members
        .iter()
        .map(|&m| {
            let f = &data.corpus[m];
            MemberView {
                index: m,
                raw: &f.raw.text,
                normalized: &f.normalized,
                status: journal.status(m),
                top_combined: data.alignments.fields[m].candidates.first().map(|c| c.combined),
            }
        })
        .collect();
    let mut pair_sum = 0f64;
    let mut pairs = 0usize;
    let mut max_distance: Option<f32> = None;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            let d = data.distances.get(i, j);
            pair_sum += f64::from(d);
            pairs += 1;
            max_distance = Some(max_distance.map_or(d, |m| m.max(d)));
        }
    }
    Json(ClusterDetail {
        id,
        exemplar: data.clusters.exemplars().map(|e| e[id]),
        members: views,
        stats: IntraClusterStats {
            size: members.len(),
            aligned_members: members
                .iter()
                .filter(|&&m| !data.alignments.fields[m].candidates.is_empty())
                .count(),
            mean_distance: (pairs > 0).then(|| pair_sum / pairs as f64),
            max_distance,
        },
        recommendation: recommendation(data, id),
    })
    .into_response()
}

#[derive(Serialize)]
struct FieldView<'a> {
    #[serde(flatten)]
    alignment: &'a FieldAlignment,
    status: DecisionStatus,
    decision: Option<&'a CurationDecision>,
}

async fn field_alignments(State(s): State<AppState>, UrlPath(index): UrlPath<usize>) -> Response {
    let Some(alignment) = s.data.alignments.fields.get(index) else {
        return error(StatusCode::NOT_FOUND, format!("no field {index}"));
    };
    let journal = s.journal.lock().await;
    Json(FieldView {
        alignment,
        status: journal.status(index),
        decision: journal.latest.get(&index),
    })
    .into_response()
}

async fn post_decision(State(s): State<AppState>, Json(req): Json<DecisionRequest>) -> Response {
    let Some(field) = s.data.alignments.fields.get(req.field_index) else {
        return error(StatusCode::NOT_FOUND, format!("no field {}", req.field_index));
    };
    let chosen = match (req.iri, req.ontology_id) {
        (None, None) => None,
        (Some(iri), Some(ontology_id)) => {
            if !field.candidates.iter().any(|c| c.iri == iri && c.ontology_id == ontology_id) {
                return error(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    format!("{iri} ({ontology_id}) is not a candidate for field {}", req.field_index),
                );
            }
            Some(ChosenTerm { iri, ontology_id })
        }
        _ => {
            return error(
                StatusCode::UNPROCESSABLE_ENTITY,
                "iri and ontology_id must be given together",
            )
        }
    };
    let decision = CurationDecision {
        field_index: req.field_index,
        chosen,
        decided_at: Utc::now(),
        note: req.note,
    };
    let mut journal = s.journal.lock().await;
    if let Err(e) = journal.append(decision.clone()) {
        log::error!("journal {} write failed: {e}", journal.path.display());
        return error(StatusCode::INTERNAL_SERVER_ERROR, "could not record decision");
    }
    (StatusCode::CREATED, Json(decision)).into_response()
}

/// The accepted mapping as TSV, one row per field whose latest decision
/// chose a term.
pub fn export_tsv(data: &RunData, latest: &BTreeMap<usize, CurationDecision>) -> String {
    let mut out = format!("{EXPORT_HEADER}\n");
    for (index, d) in latest {
        let Some(chosen) = &d.chosen else { continue };
        let field = &data.alignments.fields[*index];
        let label = field
            .candidates
            .iter()
            .find(|c| c.iri == chosen.iri && c.ontology_id == chosen.ontology_id)
            .map_or("", |c| c.label.as_str());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            escape_tsv(&field.normalized),
            escape_tsv(&chosen.iri),
            escape_tsv(label),
            escape_tsv(&chosen.ontology_id)
        ));
    }
    out
}

async fn export(State(s): State<AppState>) -> Response {
    let journal = s.journal.lock().await;
    let body = export_tsv(&s.data, &journal.latest);
    ([(header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8")], body).into_response()
}

async fn meta(State(s): State<AppState>) -> Response {
    let r = &s.data.report;
    Json(serde_json::json!({
        "config": r.config,
        "counts": r.counts,
        "coverage": r.coverage,
        "artifacts": r.artifacts,
        "align_params": s.data.alignments.params,
        "cluster_params": s.data.clusters.params,
        "metric": s.data.clusters.metric,
    }))
    .into_response()
}

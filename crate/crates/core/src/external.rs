//! Client for an external annotator service speaking the BioPortal
//! Annotator REST convention (text in, annotated classes out), and a
//! comparison of its coverage with ours.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::time::{sleep, Instant};

use crate::align::AlignmentReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorConfig {
    /// Full annotator URL, e.g. `https://data.bioontology.org/annotator`.
    pub endpoint: String,
    pub api_key: Option<String>,
    /// Extra query parameters passed through unchanged (`ontologies`,
    /// `longest_only`, `whole_word_only`, ...).
    #[serde(default)]
    pub options: BTreeMap<String, String>,
    /// Minimum spacing between request starts.
    pub min_interval: Duration,
    /// Retries after the first attempt for 429, 5xx and transport errors.
    pub max_retries: u32,
    /// Delay before the first retry; doubles each retry.
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl AnnotatorConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        AnnotatorConfig {
            endpoint: endpoint.into(),
            api_key: None,
            options: BTreeMap::new(),
            min_interval: Duration::from_millis(100),
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
        }
    }
}

/// A term proposed by the external service. Shaped like an alignment
/// candidate, with the similarity components absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCandidate {
    pub field_index: usize,
    pub iri: String,
    pub ontology_id: String,
    pub label: Option<String>,
    pub co_sim: Option<f64>,
    pub edit_sim: Option<f64>,
    pub combined: Option<f64>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExternalOutcome {
    Ok { candidates: Vec<ExternalCandidate> },
    Error { message: String, attempts: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalFieldResult {
    pub field_index: usize,
    pub text: String,
    pub outcome: ExternalOutcome,
}

impl ExternalFieldResult {
    pub fn candidates(&self) -> &[ExternalCandidate] {
        match &self.outcome {
            ExternalOutcome::Ok { candidates } => candidates,
            ExternalOutcome::Error { .. } => &[],
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self.outcome, ExternalOutcome::Error { .. })
    }
}

#[derive(Debug, Deserialize)]
struct Annotation {
    #[serde(rename = "annotatedClass")]
    annotated_class: AnnotatedClass,
}

#[derive(Debug, Deserialize)]
struct AnnotatedClass {
    #[serde(rename = "@id")]
    id: String,
    #[serde(rename = "prefLabel")]
    pref_label: Option<String>,
    links: Option<Links>,
}

#[derive(Debug, Deserialize)]
struct Links {
    ontology: Option<String>,
}

/// Ontology acronym from an ontology link such as
/// `http://data.bioontology.org/ontologies/NCIT`.
fn ontology_acronym(link: &str) -> String {
    link.trim_end_matches('/').rsplit('/').next().unwrap_or(link).to_string()
}

/// Parses an annotator response body into candidates, keeping the first
/// occurrence of each `(iri, ontology)` pair.
pub fn parse_annotations(field_index: usize, body: &str) -> Result<Vec<ExternalCandidate>, serde_json::Error> {
    let annotations: Vec<Annotation> = serde_json::from_str(body)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in annotations {
        let c = a.annotated_class;
        let ontology_id = c
            .links
            .and_then(|l| l.ontology)
            .map(|o| ontology_acronym(&o))
            .unwrap_or_default();
        if seen.insert((c.id.clone(), ontology_id.clone())) {
            out.push(ExternalCandidate {
                field_index,
                iri: c.id,
                ontology_id,
                label: c.pref_label,
                co_sim: None,
                edit_sim: None,
                combined: None,
                source: "external".into(),
            });
        }
    }
    Ok(out)
}

pub struct AnnotatorClient {
    config: AnnotatorConfig,
    http: reqwest::Client,
}

enum Attempt {
    Done(Vec<ExternalCandidate>),
    Retry(String),
    Fail(String),
}

impl AnnotatorClient {
    pub fn new(config: AnnotatorConfig) -> Result<Self, reqwest::Error> {
        let http = reqwest::Client::builder().timeout(config.timeout).build()?;
        Ok(AnnotatorClient { config, http })
    }

    async fn attempt(&self, field_index: usize, text: &str) -> Attempt {
        let mut params: Vec<(&str, &str)> = vec![("text", text)];
        params.extend(self.config.options.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        let url = match reqwest::Url::parse_with_params(&self.config.endpoint, &params) {
            Ok(u) => u,
            Err(e) => return Attempt::Fail(format!("bad endpoint: {e}")),
        };
        let mut req = self.http.get(url).header("Accept", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", format!("apikey token={key}"));
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let body = match resp.text().await {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status.is_success() {
            return match parse_annotations(field_index, &body) {
                Ok(c) => Attempt::Done(c),
                Err(e) => Attempt::Fail(format!("unparseable response: {e}")),
            };
        }
        let message = format!("HTTP {status}");
        if status.is_server_error() || status.as_u16() == 429 {
            Attempt::Retry(message)
        } else {
            Attempt::Fail(message)
        }
    }

    /// Annotates each text in order. Failures are recorded per field and
    /// never abort the batch.
    pub async fn annotate(&self, texts: &[String]) -> Vec<ExternalFieldResult> {
        let mut next_slot = Instant::now();
        let mut results = Vec::with_capacity(texts.len());
        for (field_index, text) in texts.iter().enumerate() {
            let mut attempts = 0;
            let mut backoff = self.config.initial_backoff;
            let outcome = loop {
                let now = Instant::now();
                if next_slot > now {
                    sleep(next_slot - now).await;
                }
                next_slot = Instant::now() + self.config.min_interval;
                attempts += 1;
                match self.attempt(field_index, text).await {
                    Attempt::Done(candidates) => break ExternalOutcome::Ok { candidates },
                    Attempt::Fail(message) => break ExternalOutcome::Error { message, attempts },
                    Attempt::Retry(message) => {
                        if attempts > self.config.max_retries {
                            break ExternalOutcome::Error { message, attempts };
                        }
                        log::warn!("field {field_index}: {message}; retrying in {backoff:?}");
                        sleep(backoff).await;
                        backoff *= 2;
                    }
                }
            };
            results.push(ExternalFieldResult {
                field_index,
                text: text.clone(),
                outcome,
            });
        }
        results
    }
}

/// Blocking wrapper around [`AnnotatorClient::annotate`].
pub fn annotate_external(config: AnnotatorConfig, texts: &[String]) -> Result<Vec<ExternalFieldResult>, reqwest::Error> {
    let client = AnnotatorClient::new(config)?;
    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .expect("tokio runtime");
    Ok(rt.block_on(client.annotate(texts)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub fields: usize,
    pub aligned_internal: usize,
    pub aligned_external: usize,
    pub aligned_both: usize,
    pub only_internal: usize,
    pub only_external: usize,
    pub external_errors: usize,
    /// Fields where both sources propose at least one common IRI.
    pub shared_term: usize,
}

/// Counts fields aligned by each source. `external` is indexed by field
/// index, as produced by annotating the corpus in order.
pub fn compare(internal: &AlignmentReport, external: &[ExternalFieldResult]) -> ComparisonReport {
    let ext: BTreeMap<usize, &ExternalFieldResult> = external.iter().map(|r| (r.field_index, r)).collect();
    let mut r = ComparisonReport {
        fields: internal.fields.len(),
        aligned_internal: 0,
        aligned_external: 0,
        aligned_both: 0,
        only_internal: 0,
        only_external: 0,
        external_errors: external.iter().filter(|e| e.is_error()).count(),
        shared_term: 0,
    };
    for f in &internal.fields {
        let ours = !f.candidates.is_empty();
        let theirs = ext.get(&f.index).map_or(&[][..], |e| e.candidates());
        let has_theirs = !theirs.is_empty();
        r.aligned_internal += usize::from(ours);
        r.aligned_external += usize::from(has_theirs);
        match (ours, has_theirs) {
            (true, true) => r.aligned_both += 1,
            (true, false) => r.only_internal += 1,
            (false, true) => r.only_external += 1,
            (false, false) => {}
        }
        if theirs.iter().any(|t| f.candidates.iter().any(|c| c.iri == t.iri)) {
            r.shared_term += 1;
        }
    }
    r
}

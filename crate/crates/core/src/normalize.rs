//! Field-name normalization and corpus construction.
//!
//! Normalization runs four fixed steps: split lower→upper CamelCase
//! boundaries, map every non-ASCII-alphabetic character to a space,
//! lowercase, then collapse whitespace runs and trim. Results with fewer
//! than [`MIN_LETTERS`] letters are dropped.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

/// Minimum number of letters (spaces excluded) a normalized name must keep.
pub const MIN_LETTERS: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("every input field name was filtered out during normalization")]
    EmptyCorpus,
    #[error("line {line}: empty field name")]
    EmptyInput { line: usize },
    #[error("column `{0}` not found in CSV header")]
    MissingColumn(String),
    #[error("corpus CSV line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A field name as found in the source repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawFieldName {
    pub text: String,
    pub source_id: Option<String>,
}

impl RawFieldName {
    pub fn new(text: impl Into<String>) -> Self {
        RawFieldName {
            text: text.into(),
            source_id: None,
        }
    }

    pub fn with_source(text: impl Into<String>, source_id: impl Into<String>) -> Self {
        RawFieldName {
            text: text.into(),
            source_id: Some(source_id.into()),
        }
    }
}

/// A deduplicated, normalized field name with its stable corpus index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldName {
    pub raw: RawFieldName,
    pub normalized: String,
    pub index: usize,
}

/// Normalizes a raw field name, or returns `None` when fewer than three
/// letters survive.
///
/// ```
/// use ontoalign::normalize::normalize;
/// assert_eq!(normalize("geoLocation").as_deref(), Some("geo location"));
/// assert_eq!(normalize("ab"), None);
/// ```
pub fn normalize(raw: &str) -> Option<String> {
    let mut out = String::with_capacity(raw.len() + 4);
    let mut prev: Option<char> = None;
    let mut pending_space = false;
    let mut letters = 0usize;

    for c in raw.chars() {
        let camel_break = matches!(prev, Some(p) if p.is_ascii_lowercase()) && c.is_ascii_uppercase();
        prev = Some(c);
        if !c.is_ascii_alphabetic() {
            pending_space = true;
            continue;
        }
        if (pending_space || camel_break) && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.push(c.to_ascii_lowercase());
        letters += 1;
    }

    (letters >= MIN_LETTERS).then_some(out)
}

/// Normalizes, filters, and deduplicates raw names. Indices follow first
/// occurrence order.
pub fn build_corpus(raws: Vec<RawFieldName>) -> Result<Vec<FieldName>, CorpusError> {
    let mut seen = HashSet::new();
    let mut corpus = Vec::new();
    for raw in raws {
        let Some(normalized) = normalize(&raw.text) else {
            log::debug!("dropping field name {:?}: too short after normalization", raw.text);
            continue;
        };
        if !seen.insert(normalized.clone()) {
            continue;
        }
        corpus.push(FieldName {
            raw,
            normalized,
            index: corpus.len(),
        });
    }
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(corpus)
}

/// Reads one raw field name per line. Blank lines are rejected.
pub fn read_raw_lines<R: Read>(reader: R, source: &str) -> Result<Vec<RawFieldName>, CorpusError> {
    let text = std::io::read_to_string(reader)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            return Err(CorpusError::EmptyInput { line: i + 1 });
        }
        out.push(RawFieldName::with_source(line, format!("{source}:{}", i + 1)));
    }
    Ok(out)
}

/// Reads raw field names from the named column of a headed CSV.
pub fn read_raw_csv<R: Read>(
    reader: R,
    column: &str,
    source: &str,
) -> Result<Vec<RawFieldName>, CorpusError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| CorpusError::MissingColumn(column.to_string()))?;
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let text = record.get(col).unwrap_or("");
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyInput { line });
        }
        out.push(RawFieldName::with_source(text, format!("{source}:{line}")));
    }
    Ok(out)
}

/// Writes the corpus as CSV with columns `index,raw,normalized`.
pub fn write_corpus_csv<W: Write>(corpus: &[FieldName], writer: W) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "raw", "normalized"])?;
    for f in corpus {
        w.write_record([f.index.to_string().as_str(), &f.raw.text, &f.normalized])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a corpus CSV written by [`write_corpus_csv`].
pub fn read_corpus_csv<R: Read>(reader: R) -> Result<Vec<FieldName>, CorpusError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let pos = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let (ci, cr, cn) = (pos("index")?, pos("raw")?, pos("normalized")?);
    let mut corpus = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let index: usize = record
            .get(ci)
            .unwrap_or("")
            .parse()
            .map_err(|_| CorpusError::Format {
                line,
                message: "index is not a non-negative integer".into(),
            })?;
        if index != corpus.len() {
            return Err(CorpusError::Format {
                line,
                message: format!("expected index {}, found {index}", corpus.len()),
            });
        }
        let normalized = record.get(cn).unwrap_or("").to_string();
        if normalize(&normalized).as_deref() != Some(normalized.as_str()) {
            return Err(CorpusError::Format {
                line,
                message: format!("{normalized:?} is not in normalized form"),
            });
        }
        corpus.push(FieldName {
            raw: RawFieldName::new(record.get(cr).unwrap_or("")),
            normalized,
            index,
        });
    }
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(corpus)
}

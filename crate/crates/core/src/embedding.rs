//! Word vectors, IDF statistics, and IDF-weighted term embeddings.
//!
//! A term embedding is the IDF-weighted mean of the word vectors of the
//! label's tokens:
//!
//! ```text
//! x(term) = Σ idf(w) · x(w) / Σ idf(w),   w ∈ tokens(label)
//! ```
//!
//! Out-of-vocabulary words fall back to the table's default vector and
//! default IDF. Tokens are summed in sorted order so the result does not
//! depend on word order, and the sum is carried in `f64` before rounding
//! to `f32`.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Read, Write};

use rayon::prelude::*;

/// IDF assigned to words missing from the IDF table.
pub const DEFAULT_IDF: f64 = 0.01;
/// Words must occur in at least this many documents to receive an IDF.
pub const DEFAULT_MIN_DOC_FREQ: usize = 5;

const EMBEDDING_MAGIC: &[u8; 4] = b"OAEM";
const EMBEDDING_VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("label {label:?} has no tokens")]
    EmptyLabel { label: String, index: Option<usize> },
    #[error("embedding file: {0}")]
    Binary(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EmbeddingError {
    fn format(line: usize, message: impl Into<String>) -> Self {
        EmbeddingError::Format {
            line,
            message: message.into(),
        }
    }
}

/// Pretrained word vectors with a fallback vector for unknown words.
#[derive(Debug, Clone)]
pub struct WordVectorTable {
    dimension: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    default_vector: Vec<f32>,
}

impl WordVectorTable {
    /// Builds a table from `(word, vector)` pairs. Later duplicates win.
    /// The default vector is the componentwise mean of the final entries.
    pub fn from_entries<I, S>(entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut dimension = None;
        let mut index = HashMap::new();
        let mut data = Vec::new();
        for (n, (word, vector)) in entries.into_iter().enumerate() {
            let word = word.into();
            let dim = *dimension.get_or_insert(vector.len());
            if vector.len() != dim || dim == 0 {
                return Err(EmbeddingError::format(
                    n + 1,
                    format!("expected {dim} components, found {}", vector.len()),
                ));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::format(n + 1, "non-finite component"));
            }
            Self::insert(&mut index, &mut data, dim, word, &vector);
        }
        let dimension =
            dimension.ok_or_else(|| EmbeddingError::format(0, "no vectors; dimension unknown"))?;
        let default_vector = mean_vector(&data, dimension);
        Ok(WordVectorTable {
            dimension,
            index,
            data,
            default_vector,
        })
    }

    fn insert(
        index: &mut HashMap<String, usize>,
        data: &mut Vec<f32>,
        dim: usize,
        word: String,
        vector: &[f32],
    ) {
        if let Some(&row) = index.get(&word) {
            log::warn!("duplicate word vector for {word:?}; later entry wins");
            data[row * dim..(row + 1) * dim].copy_from_slice(vector);
        } else {
            index.insert(word, data.len() / dim);
            data.extend_from_slice(vector);
        }
    }

    /// Parses the whitespace-separated text format `word v1 ... vd`.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut dimension = None;
        let mut index = HashMap::new();
        let mut data = Vec::new();
        let mut buf = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let mut parts = line.split(' ').filter(|p| !p.is_empty());
            let Some(word) = parts.next() else {
                return Err(EmbeddingError::format(line_no, "blank line"));
            };
            buf.clear();
            for p in parts {
                let v: f32 = p
                    .trim_end_matches('\r')
                    .parse()
                    .map_err(|_| EmbeddingError::format(line_no, format!("non-numeric component {p:?}")))?;
                if !v.is_finite() {
                    return Err(EmbeddingError::format(line_no, format!("non-finite component {p:?}")));
                }
                buf.push(v);
            }
            let dim = *dimension.get_or_insert(buf.len());
            if dim == 0 {
                return Err(EmbeddingError::format(line_no, "word has no components"));
            }
            if buf.len() != dim {
                return Err(EmbeddingError::format(
                    line_no,
                    format!("expected {dim} components, found {}", buf.len()),
                ));
            }
            Self::insert(&mut index, &mut data, dim, word.to_string(), &buf);
        }
        let dimension =
            dimension.ok_or_else(|| EmbeddingError::format(0, "empty vector file; dimension unknown"))?;
        let default_vector = mean_vector(&data, dimension);
        Ok(WordVectorTable {
            dimension,
            index,
            data,
            default_vector,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, EmbeddingError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&row| &self.data[row * self.dimension..(row + 1) * self.dimension])
    }

    pub fn default_vector(&self) -> &[f32] {
        &self.default_vector
    }

    /// Replaces the out-of-vocabulary vector.
    pub fn with_default_vector(mut self, vector: Vec<f32>) -> Result<Self, EmbeddingError> {
        if vector.len() != self.dimension || vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::format(0, "default vector has wrong dimension or non-finite values"));
        }
        self.default_vector = vector;
        Ok(self)
    }
}

fn mean_vector(data: &[f32], dim: usize) -> Vec<f32> {
    let rows = data.len() / dim;
    let mut sum = vec![0f64; dim];
    for row in data.chunks_exact(dim) {
        for (s, v) in sum.iter_mut().zip(row) {
            *s += f64::from(*v);
        }
    }
    sum.into_iter().map(|s| (s / rows as f64) as f32).collect()
}

/// Per-word inverse document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    entries: HashMap<String, f64>,
    default_idf: f64,
}

impl Default for IdfTable {
    fn default() -> Self {
        IdfTable {
            entries: HashMap::new(),
            default_idf: DEFAULT_IDF,
        }
    }
}

impl IdfTable {
    pub fn new(entries: HashMap<String, f64>, default_idf: f64) -> Result<Self, EmbeddingError> {
        if !(default_idf > 0.0 && default_idf.is_finite()) {
            return Err(EmbeddingError::format(0, "default idf must be positive"));
        }
        if let Some((w, v)) = entries.iter().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(EmbeddingError::format(0, format!("idf for {w:?} must be positive, found {v}")));
        }
        Ok(IdfTable {
            entries,
            default_idf,
        })
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn default_idf(&self) -> f64 {
        self.default_idf
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multiplies every IDF, including the default, by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, EmbeddingError> {
        IdfTable::new(
            self.entries.iter().map(|(w, v)| (w.clone(), v * factor)).collect(),
            self.default_idf * factor,
        )
    }

    /// Reads a two-column `word<TAB>idf` file.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut entries = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (word, value) = line
                .split_once('\t')
                .ok_or_else(|| EmbeddingError::format(line_no, "expected `word<TAB>idf`"))?;
            let idf: f64 = value
                .trim()
                .parse()
                .map_err(|_| EmbeddingError::format(line_no, format!("idf {value:?} is not a number")))?;
            if !(idf > 0.0 && idf.is_finite()) {
                return Err(EmbeddingError::format(line_no, format!("idf must be positive, found {idf}")));
            }
            entries.insert(word.to_string(), idf);
        }
        Ok(IdfTable {
            entries,
            default_idf: DEFAULT_IDF,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, EmbeddingError> {
        let file = std::fs::File::open(path)?;
        Self::from_tsv(std::io::BufReader::new(file))
    }

    /// Writes entries sorted by word.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut words: Vec<_> = self.entries.iter().collect();
        words.sort_by(|a, b| a.0.cmp(b.0));
        for (word, idf) in words {
            writeln!(w, "{word}\t{idf}")?;
        }
        Ok(())
    }
}

/// Computes `idf(w) = ln(D / df(w))` over a document stream, dropping words
/// seen in fewer than `min_doc_freq` documents. Words present in every
/// document get `ln(D / (D - 0.5))` so all IDFs stay positive.
pub fn compute_idf<I, D, S>(docs: I, min_doc_freq: usize) -> IdfTable
where
    I: IntoIterator<Item = D>,
    D: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut df: HashMap<String, usize> = HashMap::new();
    let mut total = 0usize;
    let mut seen = HashSet::new();
    for doc in docs {
        total += 1;
        seen.clear();
        for token in doc {
            let token = token.as_ref();
            if seen.insert(token.to_string()) {
                *df.entry(token.to_string()).or_default() += 1;
            }
        }
    }
    let d = total as f64;
    let entries = df
        .into_iter()
        .filter(|(_, f)| *f >= min_doc_freq)
        .map(|(w, f)| {
            let idf = if f == total {
                (d / (d - 0.5)).ln()
            } else {
                (d / f as f64).ln()
            };
            (w, idf)
        })
        .collect();
    IdfTable {
        entries,
        default_idf: DEFAULT_IDF,
    }
}

/// A label paired with its embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TermEmbedding {
    pub label: String,
    pub vector: Vec<f32>,
}

/// IDF-weighted mean of the word vectors of `label`'s space-separated tokens.
pub fn term_embedding(
    label: &str,
    vecs: &WordVectorTable,
    idf: &IdfTable,
) -> Result<TermEmbedding, EmbeddingError> {
    let mut tokens: Vec<&str> = label.split(' ').filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() {
        return Err(EmbeddingError::EmptyLabel {
            label: label.to_string(),
            index: None,
        });
    }
    tokens.sort_unstable();

    let weighted: Vec<(&[f32], f64)> = tokens
        .into_iter()
        .map(|token| match vecs.get(token) {
            Some(v) => (v, idf.get(token).unwrap_or(idf.default_idf())),
            None => (vecs.default_vector(), idf.default_idf()),
        })
        .collect();
    // Weights are normalized before use so that equal weights become
    // exactly 1/n whatever their scale.
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    let mut acc = vec![0f64; vecs.dimension()];
    for (vector, w) in weighted {
        let share = w / total;
        for (a, x) in acc.iter_mut().zip(vector) {
            *a += share * f64::from(*x);
        }
    }
    Ok(TermEmbedding {
        label: label.to_string(),
        vector: acc.into_iter().map(|a| a as f32).collect(),
    })
}

/// Embeds every label in order, in parallel.
pub fn embed_corpus<S: AsRef<str> + Sync>(
    labels: &[S],
    vecs: &WordVectorTable,
    idf: &IdfTable,
) -> Result<Vec<TermEmbedding>, EmbeddingError> {
    labels
        .par_iter()
        .enumerate()
        .map(|(i, l)| {
            term_embedding(l.as_ref(), vecs, idf).map_err(|e| match e {
                EmbeddingError::EmptyLabel { label, .. } => EmbeddingError::EmptyLabel {
                    label,
                    index: Some(i),
                },
                other => other,
            })
        })
        .collect()
}

/// Word vectors plus IDF statistics: everything needed to embed a label.
#[derive(Debug, Clone)]
pub struct TermEmbedder {
    pub vectors: WordVectorTable,
    pub idf: IdfTable,
}

impl TermEmbedder {
    pub fn new(vectors: WordVectorTable, idf: IdfTable) -> Self {
        TermEmbedder { vectors, idf }
    }

    pub fn embed(&self, label: &str) -> Result<TermEmbedding, EmbeddingError> {
        term_embedding(label, &self.vectors, &self.idf)
    }

    pub fn embed_all<S: AsRef<str> + Sync>(&self, labels: &[S]) -> Result<Vec<TermEmbedding>, EmbeddingError> {
        embed_corpus(labels, &self.vectors, &self.idf)
    }

    pub fn dimension(&self) -> usize {
        self.vectors.dimension()
    }
}

/// Writes embeddings in the `OAEM` binary layout: magic, `u16` version,
/// `u64` count, `u32` dimension, then per term a `u32` label length, the
/// UTF-8 label, and `dimension` `f32` values. All integers little-endian.
pub fn write_embeddings<W: Write>(embeddings: &[TermEmbedding], dimension: usize, mut w: W) -> Result<(), EmbeddingError> {
    w.write_all(EMBEDDING_MAGIC)?;
    w.write_all(&EMBEDDING_VERSION.to_le_bytes())?;
    w.write_all(&(embeddings.len() as u64).to_le_bytes())?;
    w.write_all(&(dimension as u32).to_le_bytes())?;
    for e in embeddings {
        if e.vector.len() != dimension {
            return Err(EmbeddingError::Binary(format!(
                "embedding for {:?} has {} components, expected {dimension}",
                e.label,
                e.vector.len()
            )));
        }
        w.write_all(&(e.label.len() as u32).to_le_bytes())?;
        w.write_all(e.label.as_bytes())?;
        for v in &e.vector {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an `OAEM` file, returning the dimension and the embeddings.
pub fn read_embeddings<R: Read>(mut r: R) -> Result<(usize, Vec<TermEmbedding>), EmbeddingError> {
    let mut header = [0u8; 18];
    r.read_exact(&mut header)
        .map_err(|_| EmbeddingError::Binary("truncated header".into()))?;
    if &header[0..4] != EMBEDDING_MAGIC {
        return Err(EmbeddingError::Binary("bad magic".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != EMBEDDING_VERSION {
        return Err(EmbeddingError::Binary(format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(header[6..14].try_into().unwrap());
    let dimension = u32::from_le_bytes(header[14..18].try_into().unwrap()) as usize;
    let mut out = Vec::new();
    let mut len_buf = [0u8; 4];
    let mut vec_buf = vec![0u8; dimension * 4];
    for i in 0..count {
        r.read_exact(&mut len_buf)
            .map_err(|_| EmbeddingError::Binary(format!("truncated at term {i}")))?;
        let mut label = vec![0u8; u32::from_le_bytes(len_buf) as usize];
        r.read_exact(&mut label)
            .map_err(|_| EmbeddingError::Binary(format!("truncated label at term {i}")))?;
        let label = String::from_utf8(label)
            .map_err(|_| EmbeddingError::Binary(format!("label {i} is not UTF-8")))?;
        r.read_exact(&mut vec_buf)
            .map_err(|_| EmbeddingError::Binary(format!("truncated vector at term {i}")))?;
        let vector = vec_buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(TermEmbedding { label, vector });
    }
    Ok((dimension, out))
}

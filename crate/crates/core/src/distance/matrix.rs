use std::io::{Read, Write};

use rayon::prelude::*;

use super::{cosine_vector_distance, normalized_distance, DistanceError, DistanceMetricId};
use crate::embedding::TermEmbedder;

const MATRIX_MAGIC: &[u8; 4] = b"OADM";
const MATRIX_VERSION: u16 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("distance matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Symmetric pairwise distances stored as the strict lower triangle in
/// row-major order: `(1,0), (2,0), (2,1), (3,0), ...`. The diagonal is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    metric: DistanceMetricId,
    values: Vec<f32>,
}

#[inline]
fn tri_index(i: usize, j: usize) -> usize {
    debug_assert!(i > j);
    i * (i - 1) / 2 + j
}

impl DistanceMatrix {
    /// Wraps an existing lower-triangular buffer. Every value must be
    /// finite and within `[0, 1]`.
    pub fn from_lower_triangle(
        n: usize,
        metric: DistanceMetricId,
        values: Vec<f32>,
    ) -> Result<Self, MatrixError> {
        let expected = n * n.saturating_sub(1) / 2;
        if values.len() != expected {
            return Err(MatrixError::Format(format!(
                "expected {expected} values for n={n}, found {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(MatrixError::Format(format!(
                "value {} at position {pos} outside [0, 1]",
                values[pos]
            )));
        }
        Ok(DistanceMatrix { n, metric, values })
    }

    /// Builds a matrix from a distance function, one row per task.
    pub fn from_fn<F>(n: usize, metric: DistanceMetricId, f: F) -> Self
    where
        F: Fn(usize, usize) -> f32 + Sync,
    {
        let mut values = vec![0f32; n * n.saturating_sub(1) / 2];
        let mut rows: Vec<(usize, &mut [f32])> = Vec::with_capacity(n);
        let mut rest = values.as_mut_slice();
        for i in 1..n {
            let (row, tail) = rest.split_at_mut(i);
            rows.push((i, row));
            rest = tail;
        }
        rows.into_par_iter().for_each(|(i, row)| {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = f(i, j).clamp(0.0, 1.0);
            }
        });
        DistanceMatrix { n, metric, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn metric(&self) -> DistanceMetricId {
        self.metric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => self.values[tri_index(i, j)],
            std::cmp::Ordering::Less => self.values[tri_index(j, i)],
        }
    }

    /// The stored strict lower triangle.
    pub fn lower_triangle(&self) -> &[f32] {
        &self.values
    }

    /// Writes the `OADM` layout: magic, `u16` version, `u16` metric id,
    /// `u64` n, then the triangle as little-endian `f32`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), MatrixError> {
        let mut header = [0u8; HEADER_LEN];
        header[0..4].copy_from_slice(MATRIX_MAGIC);
        header[4..6].copy_from_slice(&MATRIX_VERSION.to_le_bytes());
        header[6..8].copy_from_slice(&self.metric.code().to_le_bytes());
        header[8..16].copy_from_slice(&(self.n as u64).to_le_bytes());
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(64 * 1024);
        for chunk in self.values.chunks(16 * 1024) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, MatrixError> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| MatrixError::Format("truncated header".into()))?;
        if &header[0..4] != MATRIX_MAGIC {
            return Err(MatrixError::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != MATRIX_VERSION {
            return Err(MatrixError::Format(format!("unsupported version {version}")));
        }
        let code = u16::from_le_bytes([header[6], header[7]]);
        let metric = DistanceMetricId::from_code(code)
            .ok_or_else(|| MatrixError::Format(format!("unknown metric id {code}")))?;
        let n = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
        let count = n * n.saturating_sub(1) / 2;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != count * 4 {
            return Err(MatrixError::Format(format!(
                "expected {} payload bytes for n={n}, found {}",
                count * 4,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_lower_triangle(n, metric, values)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), MatrixError> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, MatrixError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

/// Computes all pairwise normalized distances between `names`.
///
/// For `cosine_embedding`, each name is embedded once up front. Each cell
/// depends only on its pair, so the result is identical for any number of
/// worker threads.
pub fn build_distance_matrix<S: AsRef<str> + Sync>(
    names: &[S],
    metric: DistanceMetricId,
    store: Option<&TermEmbedder>,
) -> Result<DistanceMatrix, MatrixError> {
    if metric.needs_store() {
        let store = store.ok_or(DistanceError::MissingStore)?;
        let embeddings = store.embed_all(names).map_err(DistanceError::from)?;
        return Ok(DistanceMatrix::from_fn(names.len(), metric, |i, j| {
            cosine_vector_distance(&embeddings[i].vector, &embeddings[j].vector) as f32
        }));
    }
    Ok(DistanceMatrix::from_fn(names.len(), metric, |i, j| {
        normalized_distance(metric, names[i].as_ref(), names[j].as_ref(), None)
            .expect("string metrics are total") as f32
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_matrix_is_empty() {
        let m = build_distance_matrix(&["aaa"], DistanceMetricId::Levenshtein, None).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m.lower_triangle().is_empty());
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn two_element_matrix() {
        let m = build_distance_matrix(&["aaa", "aab"], DistanceMetricId::Levenshtein, None).unwrap();
        assert_eq!(m.lower_triangle(), &[1.0f32 / 3.0]);
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn triangle_layout_is_row_major() {
        let m = DistanceMatrix::from_fn(4, DistanceMetricId::Jaro, |i, j| (i * 10 + j) as f32 / 100.0);
        let expected: Vec<f32> = [10, 20, 21, 30, 31, 32].iter().map(|v| *v as f32 / 100.0).collect();
        assert_eq!(m.lower_triangle(), expected.as_slice());
    }

    #[test]
    fn binary_layout() {
        let m = build_distance_matrix(&["aaa", "aab", "bbb"], DistanceMetricId::JaroWinkler, None).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 3 * 4);
        assert_eq!(&buf[0..4], b"OADM");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(u16::from_le_bytes([buf[6], buf[7]]), 3);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 3);
        assert_eq!(f32::from_le_bytes(buf[16..20].try_into().unwrap()), m.get(1, 0));
        assert_eq!(DistanceMatrix::read_from(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(DistanceMatrix::read_from(&b"OADM"[..]).is_err());
        let mut buf = Vec::new();
        DistanceMatrix::from_fn(3, DistanceMetricId::Jaro, |_, _| 0.5)
            .write_to(&mut buf)
            .unwrap();
        assert!(DistanceMatrix::read_from(&buf[..buf.len() - 2]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(DistanceMatrix::read_from(bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[6] = 9;
        assert!(DistanceMatrix::read_from(bad.as_slice()).is_err());
        let mut bad = buf;
        bad[16..20].copy_from_slice(&2.0f32.to_le_bytes());
        assert!(DistanceMatrix::read_from(bad.as_slice()).is_err());
    }
}

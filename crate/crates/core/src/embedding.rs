//! Embedding matrices, their on-disk format, and the cosine kernels every
//! later stage is built on.
//!
//! The `.emb` layout is a 20-byte header followed by the row-major payload:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `MSEB`                  |
//! | 4      | 4    | format version (u32 LE) = 1   |
//! | 8      | 4    | dimension D (u32 LE)          |
//! | 12     | 8    | row count N (u64 LE)          |
//! | 20     | 4·N·D| f32 LE values, row-major      |
//!
//! Document ids live in a separate manifest, one UTF-8 id per line, in row
//! order.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::telescope::CandidatePool;

pub const EMB_MAGIC: [u8; 4] = *b"MSEB";
pub const EMB_VERSION: u32 = 1;
pub const EMB_HEADER_LEN: usize = 20;

/// Tolerance used when checking the `normalized` flag on a matrix.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;

/// N embedding vectors of dimension D with their document ids.
///
/// Immutable once built; all constructors validate ids and values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    vectors: Vec<f32>,
    ids: Vec<String>,
    normalized: bool,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, vectors: Vec<f32>, ids: Vec<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if ids.is_empty() {
            return Err(Error::Empty("embedding matrix has no rows"));
        }
        if vectors.len() != dim * ids.len() {
            return Err(Error::CountMismatch {
                what: "vector payload (values)".into(),
                expected: dim * ids.len(),
                actual: vectors.len(),
            });
        }
        validate_ids(&ids)?;
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            dim,
            vectors,
            ids,
            normalized: false,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f32>>, ids: Vec<String>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                    context: Some(format!("row {i}")),
                });
            }
        }
        if rows.len() != ids.len() {
            return Err(Error::CountMismatch {
                what: "id list".into(),
                expected: rows.len(),
                actual: ids.len(),
            });
        }
        Self::new(dim, rows.into_iter().flatten().collect(), ids)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.ids.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.vectors.chunks_exact(self.dim)
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Row-major payload.
    pub fn as_slice(&self) -> &[f32] {
        &self.vectors
    }

    pub fn position_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Returns row `i` as a query vector.
    pub fn query(&self, i: usize) -> QueryEmbedding {
        QueryEmbedding {
            vector: self.row(i).to_vec(),
        }
    }

    /// Writes the binary payload to `path` and the id manifest to `manifest_path`.
    pub fn save(&self, path: &Path, manifest_path: &Path) -> Result<()> {
        write_emb(path, self.dim, &self.vectors)?;
        write_manifest(manifest_path, &self.ids)
    }
}

fn validate_ids(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if id.is_empty() || id.contains('\n') || id.contains('\r') {
            return Err(Error::InvalidArgument(format!(
                "invalid document id {id:?}"
            )));
        }
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// A single query vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryEmbedding {
    vector: Vec<f32>,
}

impl QueryEmbedding {
    pub fn new(vector: Vec<f32>) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::Empty("query vector"));
        }
        if let Some(col) = vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, col });
        }
        Ok(Self { vector })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.vector
    }
}

/// Loads an `.emb` payload and its id manifest.
///
/// Rows are returned exactly as stored; call [`normalize`] explicitly.
pub fn load_embeddings(path: &Path, manifest_path: &Path) -> Result<EmbeddingMatrix> {
    let (dim, count, vectors) = read_emb(path)?;
    let ids = read_manifest(manifest_path)?;
    if ids.len() != count {
        return Err(Error::CountMismatch {
            what: format!("manifest {}", manifest_path.display()),
            expected: count,
            actual: ids.len(),
        });
    }
    EmbeddingMatrix::new(dim, vectors, ids)
}

/// Reads a raw `.emb` file, returning `(dim, count, row-major values)`.
pub fn read_emb(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_emb(&bytes).map_err(|e| match e {
        Error::MalformedHeader { reason, .. } => Error::MalformedHeader {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

pub fn decode_emb(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    let malformed = |reason: &str| Error::MalformedHeader {
        path: Default::default(),
        reason: reason.to_string(),
    };
    if bytes.len() < EMB_HEADER_LEN {
        return Err(malformed("file shorter than header"));
    }
    if bytes[0..4] != EMB_MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != EMB_VERSION {
        return Err(malformed(&format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if dim == 0 {
        return Err(malformed("dimension is zero"));
    }
    if count == 0 {
        return Err(malformed("row count is zero"));
    }
    let count = usize::try_from(count).map_err(|_| malformed("row count overflows"))?;

    let payload = &bytes[EMB_HEADER_LEN..];
    let row_bytes = dim * 4;
    if !payload.len().is_multiple_of(row_bytes) {
        return Err(malformed(&format!(
            "payload of {} bytes is not a whole number of {row_bytes}-byte rows",
            payload.len()
        )));
    }
    let rows = payload.len() / row_bytes;
    if rows != count {
        return Err(Error::CountMismatch {
            what: "payload rows".into(),
            expected: count,
            actual: rows,
        });
    }
    let vectors = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dim, count, vectors))
}

pub fn encode_emb(dim: usize, vectors: &[f32]) -> Vec<u8> {
    assert!(dim > 0 && vectors.len().is_multiple_of(dim));
    let count = (vectors.len() / dim) as u64;
    let mut out = Vec::with_capacity(EMB_HEADER_LEN + vectors.len() * 4);
    out.extend_from_slice(&EMB_MAGIC);
    out.extend_from_slice(&EMB_VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for v in vectors {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_emb(path: &Path, dim: usize, vectors: &[f32]) -> Result<()> {
    fs::write(path, encode_emb(dim, vectors)).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect())
}

pub fn write_manifest(path: &Path, ids: &[String]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = String::with_capacity(ids.iter().map(|s| s.len() + 1).sum());
    for id in ids {
        buf.push_str(id);
        buf.push('\n');
    }
    f.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Scales every row to unit Euclidean norm.
pub fn normalize(m: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut vectors = Vec::with_capacity(m.vectors.len());
    for (i, row) in m.rows().enumerate() {
        let norm = norm_f64(row);
        if norm == 0.0 {
            return Err(Error::ZeroNorm(format!("row {i} (id {:?})", m.ids[i])));
        }
        vectors.extend(row.iter().map(|&v| (v as f64 / norm) as f32));
    }
    Ok(EmbeddingMatrix {
        dim: m.dim,
        vectors,
        ids: m.ids.clone(),
        normalized: true,
    })
}

/// Dot product of two f32 slices accumulated in f64.
#[inline]
pub fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four independent accumulators so the loop is not latency-bound on one add chain.
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(&x, &y)| x as f64 * y as f64)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for l in 0..4 {
            acc[l] += ca[l] as f64 * cb[l] as f64;
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm_f64(a: &[f32]) -> f64 {
    dot_f64(a, a).sqrt()
}

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims(a.len(), b.len()));
    }
    let na = norm_f64(a);
    let nb = norm_f64(b);
    if na == 0.0 {
        return Err(Error::ZeroNorm("first operand".into()));
    }
    if nb == 0.0 {
        return Err(Error::ZeroNorm("second operand".into()));
    }
    Ok((dot_f64(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Dense symmetric M×M similarity matrix, row-major.
///
/// Entries are finite, symmetric and within `[-1, 1]`. The diagonal is not
/// consulted by graph construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    size: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(size: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != size * size {
            return Err(Error::CountMismatch {
                what: "similarity matrix entries".into(),
                expected: size * size,
                actual: data.len(),
            });
        }
        for i in 0..size {
            for j in 0..size {
                let s = data[i * size + j];
                if !s.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if !(-1.0..=1.0).contains(&s) {
                    return Err(Error::InvalidArgument(format!(
                        "similarity ({i}, {j}) = {s} outside [-1, 1]"
                    )));
                }
                if s != data[j * size + i] {
                    return Err(Error::InvalidArgument(format!(
                        "similarity matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { size, data })
    }

    /// Builds a matrix from `f(i, j)` evaluated on the strict upper triangle,
    /// mirrored below, with a unit diagonal. Values are clamped to `[-1, 1]`.
    pub fn from_upper(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            data[i * size + i] = 1.0;
            for j in i + 1..size {
                let s = f(i, j).clamp(-1.0, 1.0);
                data[i * size + j] = s;
                data[j * size + i] = s;
            }
        }
        Self { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }
}

/// All pairwise cosines of the pool's candidate vectors.
pub fn pairwise_similarities(pool: &CandidatePool) -> Result<SimilarityMatrix> {
    pairwise_from_rows(pool.vectors(), pool.dim())
}

/// Pairwise cosines of row-major `rows` of width `dim`.
pub fn pairwise_from_rows(rows: &[f32], dim: usize) -> Result<SimilarityMatrix> {
    if dim == 0 || !rows.len().is_multiple_of(dim) {
        return Err(Error::InvalidArgument(
            "row payload does not match dimension".into(),
        ));
    }
    let m = rows.len() / dim;
    if m == 0 {
        return Err(Error::Empty("candidate pool"));
    }
    let row = |i: usize| &rows[i * dim..(i + 1) * dim];
    let mut inv_norms = Vec::with_capacity(m);
    for i in 0..m {
        let n = norm_f64(row(i));
        if n == 0.0 {
            return Err(Error::ZeroNorm(format!("candidate {i}")));
        }
        inv_norms.push(1.0 / n);
    }
    Ok(SimilarityMatrix::from_upper(m, |i, j| {
        dot_f64(row(i), row(j)) * inv_norms[i] * inv_norms[j]
    }))
}

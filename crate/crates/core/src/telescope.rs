//! Stage-1 retrieval: exact top-M by cosine over the whole corpus.

use std::cmp::Ordering;

use crate::embedding::{dot_f64, norm_f64, EmbeddingMatrix, QueryEmbedding};
use crate::error::{Error, Result};

/// The M candidates handed to the reranker, ordered by descending query
/// cosine with ties broken by ascending corpus index.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    corpus_indices: Vec<usize>,
    ids: Vec<String>,
    dim: usize,
    vectors: Vec<f32>,
    query_scores: Vec<f64>,
}

impl CandidatePool {
    /// Builds a pool from already-ordered parts, checking the ordering invariant.
    pub fn new(
        corpus_indices: Vec<usize>,
        ids: Vec<String>,
        dim: usize,
        vectors: Vec<f32>,
        query_scores: Vec<f64>,
    ) -> Result<Self> {
        let m = corpus_indices.len();
        if m == 0 {
            return Err(Error::Empty("candidate pool"));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for (what, len) in [
            ("pool ids", ids.len()),
            ("pool query scores", query_scores.len()),
            ("pool vectors (rows)", vectors.len() / dim),
        ] {
            if len != m {
                return Err(Error::CountMismatch {
                    what: what.into(),
                    expected: m,
                    actual: len,
                });
            }
        }
        if vectors.len() != m * dim {
            return Err(Error::InvalidArgument(
                "pool vectors not a whole number of rows".into(),
            ));
        }
        for (i, s) in query_scores.iter().enumerate() {
            if !(-1.0..=1.0).contains(s) {
                return Err(Error::InvalidArgument(format!(
                    "query score {s} at position {i} outside [-1, 1]"
                )));
            }
        }
        for i in 1..m {
            let prev = (query_scores[i - 1], corpus_indices[i - 1]);
            let cur = (query_scores[i], corpus_indices[i]);
            if rank_order(prev, cur) != Ordering::Less {
                return Err(Error::InvalidArgument(format!(
                    "pool not sorted by descending score at position {i}"
                )));
            }
        }
        Ok(Self {
            corpus_indices,
            ids,
            dim,
            vectors,
            query_scores,
        })
    }

    pub fn len(&self) -> usize {
        self.corpus_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus_indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn corpus_indices(&self) -> &[usize] {
        &self.corpus_indices
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Row-major M×D candidate vectors.
    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn query_scores(&self) -> &[f64] {
        &self.query_scores
    }
}

/// Total order for (score, index) pairs: higher score first, then lower index.
#[inline]
fn rank_order(a: (f64, usize), b: (f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Scores every row of `rows` against `query` and returns the best `m`
/// `(index, cosine)` pairs in rank order.
fn top_m_scored(query: &[f32], rows: &[f32], dim: usize, m: usize) -> Result<Vec<(usize, f64)>> {
    let qn = norm_f64(query);
    if qn == 0.0 {
        return Err(Error::ZeroNorm("query".into()));
    }
    let mut scored = Vec::with_capacity(rows.len() / dim);
    for (i, row) in rows.chunks_exact(dim).enumerate() {
        let rn = norm_f64(row);
        if rn == 0.0 {
            return Err(Error::ZeroNorm(format!("corpus row {i}")));
        }
        scored.push((i, (dot_f64(query, row) / (qn * rn)).clamp(-1.0, 1.0)));
    }
    let cmp = |a: &(usize, f64), b: &(usize, f64)| rank_order((a.1, a.0), (b.1, b.0));
    if m < scored.len() {
        scored.select_nth_unstable_by(m, cmp);
        scored.truncate(m);
    }
    scored.sort_unstable_by(cmp);
    Ok(scored)
}

/// Exact top-`m` retrieval by cosine similarity.
pub fn retrieve_top_m(
    query: &QueryEmbedding,
    corpus: &EmbeddingMatrix,
    m: usize,
) -> Result<CandidatePool> {
    if query.dim() != corpus.dim() {
        return Err(Error::DimensionMismatch {
            expected: corpus.dim(),
            actual: query.dim(),
            context: Some("query vs corpus".into()),
        });
    }
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    if m > corpus.count() {
        return Err(Error::InvalidArgument(format!(
            "m = {m} exceeds corpus size {}",
            corpus.count()
        )));
    }
    let top = top_m_scored(query.as_slice(), corpus.as_slice(), corpus.dim(), m)?;
    let dim = corpus.dim();
    let mut vectors = Vec::with_capacity(m * dim);
    let mut ids = Vec::with_capacity(m);
    for &(i, _) in &top {
        vectors.extend_from_slice(corpus.row(i));
        ids.push(corpus.id(i).to_string());
    }
    Ok(CandidatePool {
        corpus_indices: top.iter().map(|t| t.0).collect(),
        ids,
        dim,
        vectors,
        query_scores: top.iter().map(|t| t.1).collect(),
    })
}

/// Orders an arbitrary candidate list by query cosine.
///
/// `corpus_indices` of the result are positions in the input list. Ids need
/// not be unique.
pub fn rank_candidates(
    query: &[f32],
    ids: Vec<String>,
    rows: &[f32],
    dim: usize,
) -> Result<CandidatePool> {
    if query.len() != dim {
        return Err(Error::dims(dim, query.len()));
    }
    if dim == 0 || rows.len() != ids.len() * dim {
        return Err(Error::InvalidArgument(
            "candidate rows do not match ids and dimension".into(),
        ));
    }
    if ids.is_empty() {
        return Err(Error::Empty("candidate pool"));
    }
    let top = top_m_scored(query, rows, dim, ids.len())?;
    let mut vectors = Vec::with_capacity(rows.len());
    let mut ordered_ids = Vec::with_capacity(ids.len());
    for &(i, _) in &top {
        vectors.extend_from_slice(&rows[i * dim..(i + 1) * dim]);
        ordered_ids.push(ids[i].clone());
    }
    Ok(CandidatePool {
        corpus_indices: top.iter().map(|t| t.0).collect(),
        ids: ordered_ids,
        dim,
        vectors,
        query_scores: top.iter().map(|t| t.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(
            vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.6, 0.8],
                vec![1.0, 1.0],
            ],
            (0..4).map(|i| format!("d{i}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_retrieval() {
        let c = corpus();
        let pool = retrieve_top_m(&c.query(2), &c, 1).unwrap();
        assert_eq!(pool.corpus_indices(), &[2]);
        assert!((pool.query_scores()[0] - 1.0).abs() < 1e-12);
        assert_eq!(pool.ids(), &["d2".to_string()]);
    }

    #[test]
    fn whole_corpus_sorted() {
        let c = corpus();
        let q = QueryEmbedding::new(vec![1.0, 0.0]).unwrap();
        let pool = retrieve_top_m(&q, &c, 4).unwrap();
        assert_eq!(pool.corpus_indices(), &[0, 3, 2, 1]);
        let s = pool.query_scores();
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn ties_break_by_ascending_index() {
        let c = EmbeddingMatrix::from_rows(
            vec![
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![2.0, 0.0],
                vec![1.0, 0.0],
            ],
            (0..4).map(|i| format!("d{i}")).collect(),
        )
        .unwrap();
        let q = QueryEmbedding::new(vec![1.0, 0.0]).unwrap();
        let pool = retrieve_top_m(&q, &c, 2).unwrap();
        assert_eq!(pool.corpus_indices(), &[1, 2]);
    }

    #[test]
    fn errors() {
        let c = corpus();
        let q = QueryEmbedding::new(vec![1.0, 0.0]).unwrap();
        assert!(retrieve_top_m(&q, &c, 5).is_err());
        assert!(retrieve_top_m(&q, &c, 0).is_err());
        let q3 = QueryEmbedding::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            retrieve_top_m(&q3, &c, 1),
            Err(Error::DimensionMismatch { .. })
        ));
        let zero = QueryEmbedding::new(vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            retrieve_top_m(&zero, &c, 1),
            Err(Error::ZeroNorm(_))
        ));
    }

    #[test]
    fn pool_constructor_checks_order() {
        let ok = CandidatePool::new(
            vec![3, 1],
            vec!["a".into(), "b".into()],
            1,
            vec![1.0, 1.0],
            vec![0.9, 0.9],
        );
        assert!(ok.is_err(), "equal scores must be in ascending index order");
        let ok = CandidatePool::new(
            vec![1, 3],
            vec!["a".into(), "b".into()],
            1,
            vec![1.0, 1.0],
            vec![0.9, 0.9],
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn rank_candidates_keeps_input_positions() {
        let rows = [0.0f32, 1.0, 1.0, 0.0, 1.0, 1.0];
        let pool = rank_candidates(
            &[1.0, 0.0],
            vec!["x".into(), "y".into(), "x".into()],
            &rows,
            2,
        )
        .unwrap();
        assert_eq!(pool.corpus_indices(), &[1, 2, 0]);
        assert_eq!(pool.ids(), &["y", "x", "x"]);
    }
}

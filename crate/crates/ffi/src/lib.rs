//! C ABI for the maniscope reranker.
//!
//! Every function returns an [`MsStatus`]; on failure a message is available
//! from [`ms_last_error_message`] on the same thread. Corpora are opaque
//! handles created by `ms_corpus_*` and released with [`ms_corpus_free`].
//! Panics never cross the boundary; they surface as `MS_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use maniscope::embedding::{load_embeddings, normalize, EmbeddingMatrix};
use maniscope::manifold::{rerank, GeodesicVariant, RerankConfig};
use maniscope::telescope::{rank_candidates, retrieve_top_m};
use maniscope::{Error, QueryEmbedding};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Format = 5,
    ZeroNorm = 6,
    BufferTooSmall = 7,
    Internal = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsVariant {
    /// 1 - d / max finite distance.
    Eq3 = 0,
    /// 1 / (1 + d).
    Inverse = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsRerankConfig {
    pub k: usize,
    pub alpha: f64,
    pub variant: MsVariant,
}

impl From<MsRerankConfig> for RerankConfig {
    fn from(c: MsRerankConfig) -> Self {
        RerankConfig {
            k: c.k,
            alpha: c.alpha,
            variant: match c.variant {
                MsVariant::Eq3 => GeodesicVariant::Eq3MaxNorm,
                MsVariant::Inverse => GeodesicVariant::InverseOnePlusD,
            },
        }
    }
}

/// Opaque corpus handle.
pub struct MsCorpus {
    matrix: EmbeddingMatrix,
    c_ids: Vec<CString>,
}

impl MsCorpus {
    fn new(matrix: EmbeddingMatrix) -> Result<Self, Failure> {
        let c_ids = matrix
            .ids()
            .iter()
            .map(|id| CString::new(id.as_str()))
            .collect::<Result<_, _>>()
            .map_err(|_| Failure::new(MsStatus::Format, "id contains an interior NUL byte"))?;
        Ok(Self { matrix, c_ids })
    }
}

struct Failure {
    status: MsStatus,
    message: String,
}

impl Failure {
    fn new(status: MsStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Self::new(MsStatus::NullPointer, format!("{name} is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } => MsStatus::DimensionMismatch,
            Error::Io { .. } => MsStatus::Io,
            Error::MalformedHeader { .. }
            | Error::CountMismatch { .. }
            | Error::DuplicateId(_)
            | Error::NonFinite { .. }
            | Error::Serialization(_) => MsStatus::Format,
            Error::ZeroNorm(_) => MsStatus::ZeroNorm,
            _ => MsStatus::InvalidArgument,
        };
        Self::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records any failure, and never lets a panic escape.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MsStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            MsStatus::Internal
        }
    }
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(MsStatus::InvalidArgument, format!("{name} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn config_arg(cfg: *const MsRerankConfig) -> RerankConfig {
    if cfg.is_null() {
        RerankConfig::default()
    } else {
        (*cfg).into()
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next `ms_*` call on this thread.
#[no_mangle]
pub extern "C" fn ms_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Defaults: k = 5, alpha = 0.5, max-normalized geodesic similarity.
#[no_mangle]
pub extern "C" fn ms_rerank_config_default() -> MsRerankConfig {
    let d = RerankConfig::default();
    MsRerankConfig {
        k: d.k,
        alpha: d.alpha,
        variant: match d.variant {
            GeodesicVariant::Eq3MaxNorm => MsVariant::Eq3,
            GeodesicVariant::InverseOnePlusD => MsVariant::Inverse,
        },
    }
}

/// Loads a binary embedding file plus its id manifest.
///
/// # Safety
/// `emb_path` and `ids_path` must be NUL-terminated strings; `out` must be
/// writable. On success `*out` owns a handle for [`ms_corpus_free`].
#[no_mangle]
pub unsafe extern "C" fn ms_corpus_load(
    emb_path: *const c_char,
    ids_path: *const c_char,
    out: *mut *mut MsCorpus,
) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let emb = path_arg(emb_path, "emb_path")?;
        let ids = path_arg(ids_path, "ids_path")?;
        let corpus = MsCorpus::new(load_embeddings(&emb, &ids)?)?;
        *out = Box::into_raw(Box::new(corpus));
        Ok(())
    })
}

/// Builds a corpus from `count` row-major vectors of length `dim`. Ids are
/// the row indices as decimal strings.
///
/// # Safety
/// `data` must point to `count * dim` floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_corpus_from_vectors(
    data: *const f32,
    count: usize,
    dim: usize,
    out: *mut *mut MsCorpus,
) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let len = count
            .checked_mul(dim)
            .ok_or_else(|| Failure::new(MsStatus::InvalidArgument, "count * dim overflows"))?;
        let values = slice_arg(data, len, "data")?.to_vec();
        let ids = (0..count).map(|i| i.to_string()).collect();
        let corpus = MsCorpus::new(EmbeddingMatrix::new(dim, values, ids)?)?;
        *out = Box::into_raw(Box::new(corpus));
        Ok(())
    })
}

/// Releases a corpus. NULL is ignored.
///
/// # Safety
/// `corpus` must come from an `ms_corpus_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ms_corpus_free(corpus: *mut MsCorpus) {
    if !corpus.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(corpus))));
    }
}

/// Number of vectors; 0 for NULL.
///
/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_corpus_count(corpus: *const MsCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.matrix.count())
}

/// Vector dimension; 0 for NULL.
///
/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_corpus_dim(corpus: *const MsCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.matrix.dim())
}

/// Id of row `index`, valid while the corpus lives; NULL if out of range.
///
/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_corpus_id(corpus: *const MsCorpus, index: usize) -> *const c_char {
    corpus
        .as_ref()
        .and_then(|c| c.c_ids.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Scales every row to unit length in place.
///
/// # Safety
/// `corpus` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_corpus_normalize(corpus: *mut MsCorpus) -> MsStatus {
    guard(|| {
        let c = corpus.as_mut().ok_or_else(|| Failure::null("corpus"))?;
        c.matrix = normalize(&c.matrix)?;
        Ok(())
    })
}

fn write_ranking(
    order: impl ExactSizeIterator<Item = (usize, f64)>,
    out_indices: *mut usize,
    out_scores: *mut f64,
    capacity: usize,
    out_written: *mut usize,
) -> Result<(), Failure> {
    let n = order.len();
    if capacity < n {
        return Err(Failure::new(
            MsStatus::BufferTooSmall,
            format!("output capacity {capacity} is below {n}"),
        ));
    }
    if out_indices.is_null() {
        return Err(Failure::null("out_indices"));
    }
    for (slot, (idx, score)) in order.enumerate() {
        // SAFETY: caller guarantees `capacity` writable slots.
        unsafe {
            *out_indices.add(slot) = idx;
            if !out_scores.is_null() {
                *out_scores.add(slot) = score;
            }
        }
    }
    if !out_written.is_null() {
        // SAFETY: checked non-null; caller guarantees it is writable.
        unsafe { *out_written = n };
    }
    Ok(())
}

/// Retrieves the `top_m` nearest rows by cosine and reranks them. Writes
/// corpus row indices (best first) and hybrid scores.
///
/// # Safety
/// `corpus` must be a live handle; `query` must hold `dim` floats;
/// `out_indices` (and `out_scores` unless NULL) must hold `capacity` slots;
/// `cfg` and `out_written` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn ms_search(
    corpus: *const MsCorpus,
    query: *const f32,
    dim: usize,
    top_m: usize,
    cfg: *const MsRerankConfig,
    out_indices: *mut usize,
    out_scores: *mut f64,
    capacity: usize,
    out_written: *mut usize,
) -> MsStatus {
    guard(|| {
        let c = corpus.as_ref().ok_or_else(|| Failure::null("corpus"))?;
        let q = QueryEmbedding::new(slice_arg(query, dim, "query")?.to_vec())?;
        let cfg = config_arg(cfg);
        let pool = retrieve_top_m(&q, &c.matrix, top_m)?;
        let result = rerank(&pool, &cfg)?;
        let ranked = result
            .order
            .iter()
            .zip(&result.scores)
            .map(|(&i, &s)| (pool.corpus_indices()[i], s));
        write_ranking(ranked, out_indices, out_scores, capacity, out_written)
    })
}

/// Reranks `count` candidate vectors against `query` without a corpus.
/// Writes input positions (best first) and hybrid scores, `count` each.
///
/// # Safety
/// `query` must hold `dim` floats, `candidates` `count * dim` floats;
/// `out_order` (and `out_scores` unless NULL) must hold `count` slots.
#[no_mangle]
pub unsafe extern "C" fn ms_rerank_vectors(
    query: *const f32,
    candidates: *const f32,
    count: usize,
    dim: usize,
    cfg: *const MsRerankConfig,
    out_order: *mut usize,
    out_scores: *mut f64,
) -> MsStatus {
    guard(|| {
        let q = slice_arg(query, dim, "query")?;
        let len = count
            .checked_mul(dim)
            .ok_or_else(|| Failure::new(MsStatus::InvalidArgument, "count * dim overflows"))?;
        let rows = slice_arg(candidates, len, "candidates")?;
        let ids = (0..count).map(|i| i.to_string()).collect();
        let pool = rank_candidates(q, ids, rows, dim)?;
        let result = rerank(&pool, &config_arg(cfg))?;
        let ranked = result
            .order
            .iter()
            .zip(&result.scores)
            .map(|(&i, &s)| (pool.corpus_indices()[i], s));
        write_ranking(ranked, out_order, out_scores, count, ptr::null_mut())
    })
}

use std::ffi::{CStr, CString};
use std::ptr;

use maniscope::embedding::EmbeddingMatrix;
use maniscope::manifold::{rerank, RerankConfig};
use maniscope::telescope::rank_candidates;
use maniscope_ffi::*;

fn last_error() -> String {
    let p = ms_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// Two short arcs in the plane plus an off-arc point near the query.
fn rows() -> (Vec<f32>, usize) {
    let pts: [(f32, f32, f32); 6] = [
        (1.0, 0.0, 0.0),
        (0.98, 0.2, 0.0),
        (0.92, 0.39, 0.0),
        (0.95, 0.0, 0.31),
        (0.8, 0.6, 0.0),
        (0.0, 1.0, 0.0),
    ];
    (pts.iter().flat_map(|p| [p.0, p.1, p.2]).collect(), 3)
}

#[test]
fn version_and_defaults() {
    let v = unsafe { CStr::from_ptr(ms_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let d = ms_rerank_config_default();
    assert_eq!((d.k, d.alpha, d.variant), (5, 0.5, MsVariant::Eq3));
}

#[test]
fn corpus_lifecycle_from_vectors() {
    let (data, dim) = rows();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(
            ms_corpus_from_vectors(data.as_ptr(), 6, dim, &mut c),
            MsStatus::Ok
        );
        assert!(ms_last_error_message().is_null());
        assert_eq!((ms_corpus_count(c), ms_corpus_dim(c)), (6, 3));
        assert_eq!(CStr::from_ptr(ms_corpus_id(c, 4)).to_str().unwrap(), "4");
        assert!(ms_corpus_id(c, 6).is_null());
        assert_eq!(ms_corpus_normalize(c), MsStatus::Ok);
        ms_corpus_free(c);
        ms_corpus_free(ptr::null_mut());
        assert_eq!(ms_corpus_count(ptr::null()), 0);
    }
}

#[test]
fn search_matches_library() {
    let (data, dim) = rows();
    let q = [1.0f32, 0.05, 0.0];
    let mut c = ptr::null_mut();
    let cfg = MsRerankConfig {
        k: 2,
        alpha: 0.5,
        variant: MsVariant::Inverse,
    };
    let (mut idx, mut scores, mut n) = ([usize::MAX; 8], [0.0f64; 8], 0usize);
    unsafe {
        assert_eq!(
            ms_corpus_from_vectors(data.as_ptr(), 6, dim, &mut c),
            MsStatus::Ok
        );
        let st = ms_search(
            c,
            q.as_ptr(),
            3,
            5,
            &cfg,
            idx.as_mut_ptr(),
            scores.as_mut_ptr(),
            8,
            &mut n,
        );
        assert_eq!(st, MsStatus::Ok);
        ms_corpus_free(c);
    }
    assert_eq!(n, 5);

    let m = EmbeddingMatrix::new(dim, data, (0..6).map(|i| i.to_string()).collect()).unwrap();
    let query = maniscope::QueryEmbedding::new(q.to_vec()).unwrap();
    let pool = maniscope::retrieve_top_m(&query, &m, 5).unwrap();
    let lib = rerank(&pool, &cfg.into()).unwrap();
    let expected: Vec<usize> = lib
        .order
        .iter()
        .map(|&i| pool.corpus_indices()[i])
        .collect();
    assert_eq!(&idx[..5], expected.as_slice());
    assert_eq!(&scores[..5], lib.scores.as_slice());
}

#[test]
fn rerank_vectors_matches_library() {
    let (data, dim) = rows();
    let q = [0.9f32, 0.1, 0.2];
    let (mut order, mut scores) = ([0usize; 6], [0.0f64; 6]);
    let st = unsafe {
        ms_rerank_vectors(
            q.as_ptr(),
            data.as_ptr(),
            6,
            dim,
            ptr::null(),
            order.as_mut_ptr(),
            scores.as_mut_ptr(),
        )
    };
    assert_eq!(st, MsStatus::Ok);
    let pool = rank_candidates(&q, (0..6).map(|i| i.to_string()).collect(), &data, dim).unwrap();
    let lib = rerank(&pool, &RerankConfig::default()).unwrap();
    let expected: Vec<usize> = lib
        .order
        .iter()
        .map(|&i| pool.corpus_indices()[i])
        .collect();
    assert_eq!(order.to_vec(), expected);
    assert_eq!(scores.to_vec(), lib.scores);
}

#[test]
fn load_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let (data, dim) = rows();
    let m = EmbeddingMatrix::new(dim, data, (0..6).map(|i| format!("doc-{i}")).collect()).unwrap();
    let (emb, ids) = (dir.path().join("c.emb"), dir.path().join("ids.txt"));
    m.save(&emb, &ids).unwrap();
    let emb_c = CString::new(emb.to_str().unwrap()).unwrap();
    let ids_c = CString::new(ids.to_str().unwrap()).unwrap();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(
            ms_corpus_load(emb_c.as_ptr(), ids_c.as_ptr(), &mut c),
            MsStatus::Ok
        );
        assert_eq!(
            CStr::from_ptr(ms_corpus_id(c, 2)).to_str().unwrap(),
            "doc-2"
        );
        ms_corpus_free(c);

        let missing = CString::new(dir.path().join("nope.emb").to_str().unwrap()).unwrap();
        assert_eq!(
            ms_corpus_load(missing.as_ptr(), ids_c.as_ptr(), &mut c),
            MsStatus::Io
        );
        assert!(last_error().contains("nope.emb"));

        std::fs::write(&emb, b"JUNKJUNKJUNKJUNKJUNK").unwrap();
        assert_eq!(
            ms_corpus_load(emb_c.as_ptr(), ids_c.as_ptr(), &mut c),
            MsStatus::Format
        );
    }
}

#[test]
fn error_codes() {
    let (data, dim) = rows();
    let q = [1.0f32, 0.0, 0.0];
    let zero = [0.0f32; 3];
    let mut out = [0usize; 6];
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(
            ms_corpus_load(ptr::null(), ptr::null(), &mut c),
            MsStatus::NullPointer
        );
        assert!(last_error().contains("null"));
        assert_eq!(
            ms_corpus_from_vectors(data.as_ptr(), 6, dim, ptr::null_mut()),
            MsStatus::NullPointer
        );
        assert_eq!(
            ms_corpus_from_vectors(data.as_ptr(), 4, 4, &mut c),
            MsStatus::Ok
        );
        assert_eq!(
            ms_search(
                c,
                q.as_ptr(),
                3,
                2,
                ptr::null(),
                out.as_mut_ptr(),
                ptr::null_mut(),
                6,
                ptr::null_mut()
            ),
            MsStatus::DimensionMismatch
        );
        ms_corpus_free(c);

        assert_eq!(
            ms_corpus_from_vectors(data.as_ptr(), 6, dim, &mut c),
            MsStatus::Ok
        );
        assert_eq!(
            ms_search(
                c,
                q.as_ptr(),
                3,
                5,
                ptr::null(),
                out.as_mut_ptr(),
                ptr::null_mut(),
                4,
                ptr::null_mut()
            ),
            MsStatus::BufferTooSmall
        );
        assert_eq!(
            ms_search(
                c,
                q.as_ptr(),
                3,
                9,
                ptr::null(),
                out.as_mut_ptr(),
                ptr::null_mut(),
                6,
                ptr::null_mut()
            ),
            MsStatus::InvalidArgument
        );
        assert_eq!(
            ms_search(
                c,
                zero.as_ptr(),
                3,
                2,
                ptr::null(),
                out.as_mut_ptr(),
                ptr::null_mut(),
                6,
                ptr::null_mut()
            ),
            MsStatus::ZeroNorm
        );
        let bad = MsRerankConfig {
            k: 0,
            alpha: 0.5,
            variant: MsVariant::Eq3,
        };
        assert_eq!(
            ms_search(
                c,
                q.as_ptr(),
                3,
                2,
                &bad,
                out.as_mut_ptr(),
                ptr::null_mut(),
                6,
                ptr::null_mut()
            ),
            MsStatus::InvalidArgument
        );
        assert_eq!(ms_corpus_normalize(ptr::null_mut()), MsStatus::NullPointer);
        ms_corpus_free(c);

        let with_zero: Vec<f32> = data[..3].iter().chain(&zero).copied().collect();
        assert_eq!(
            ms_rerank_vectors(
                q.as_ptr(),
                with_zero.as_ptr(),
                2,
                3,
                ptr::null(),
                out.as_mut_ptr(),
                ptr::null_mut()
            ),
            MsStatus::ZeroNorm
        );
    }
}

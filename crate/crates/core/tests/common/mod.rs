#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use maniscope::SimilarityMatrix;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub struct TestRng(Xoshiro256PlusPlus);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Integer in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn unit_vector(&mut self, dim: usize) -> Vec<f32> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-6 {
                return v.iter().map(|x| (x / n) as f32).collect();
            }
        }
    }

    /// `m` random unit vectors, row-major.
    pub fn unit_vectors(&mut self, m: usize, dim: usize) -> Vec<f32> {
        (0..m).flat_map(|_| self.unit_vector(dim)).collect()
    }

    /// `m` unit vectors scattered tightly around a few random centers, which
    /// makes small-k graphs split into components.
    pub fn clustered_unit_vectors(&mut self, m: usize, dim: usize, centers: usize) -> Vec<f32> {
        let cs: Vec<Vec<f32>> = (0..centers).map(|_| self.unit_vector(dim)).collect();
        (0..m)
            .flat_map(|_| {
                let c = &cs[self.range(0, centers - 1)];
                let v: Vec<f64> = c.iter().map(|&x| x as f64 + 0.05 * self.normal()).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter()
                    .map(move |x| (x / n) as f32)
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Plain double loop of cosines, clamped; no shared code with the library.
#[allow(clippy::needless_range_loop)]
pub fn cosine_loop(rows: &[f32], dim: usize) -> Vec<Vec<f64>> {
    let m = rows.len() / dim;
    let row = |i: usize| &rows[i * dim..(i + 1) * dim];
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let (a, b) = (row(i), row(j));
            let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
            let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
            out[i][j] = (dot / (na * nb)).clamp(-1.0, 1.0);
        }
    }
    out
}

/// Union-kNN edge set by fully sorting each row (similarity desc, index asc).
pub fn knn_union_oracle(sims: &SimilarityMatrix, k: usize) -> BTreeSet<(usize, usize)> {
    let m = sims.size();
    let k = k.min(m.saturating_sub(1));
    let mut edges = BTreeSet::new();
    for i in 0..m {
        let mut js: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        js.sort_by(|&a, &b| {
            sims.get(i, b)
                .partial_cmp(&sims.get(i, a))
                .unwrap()
                .then(a.cmp(&b))
        });
        for &j in &js[..k] {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    edges
}

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// The committed seed-pinned two-chain dataset.
pub fn impostor_fixture_dir() -> PathBuf {
    fixtures_dir().join("synth_impostor")
}

pub fn impostor_fixture_spec() -> maniscope::synthgen::SynthSpec {
    maniscope::synthgen::SynthSpec {
        clusters: 2,
        per_cluster: 8,
        dim: 32,
        chain_step: 0.15,
        noise_sigma: 0.02,
        seed: 7,
        head_angle: maniscope::synthgen::SynthSpec::DEFAULT_HEAD_ANGLE,
        queries_per_cluster: 4,
    }
}

#[derive(serde::Deserialize)]
pub struct SixFixture {
    pub k: usize,
    pub alpha: f64,
    pub variant: String,
    pub query: Vec<f32>,
    pub candidates: Vec<SixCandidate>,
    pub expected: SixExpected,
    pub tolerance: f64,
}

#[derive(serde::Deserialize)]
pub struct SixCandidate {
    pub id: String,
    pub vector: Vec<f32>,
}

#[derive(serde::Deserialize)]
pub struct SixExpected {
    pub pool_ids: Vec<String>,
    pub query_scores: Vec<f64>,
    pub distances: Vec<f64>,
    pub geo: Vec<f64>,
    pub ranked_ids: Vec<String>,
    pub ranked_scores: Vec<f64>,
}

pub fn six_fixture() -> SixFixture {
    let text = std::fs::read_to_string(fixtures_dir().join("six_candidates.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[derive(serde::Deserialize)]
pub struct MetricCase {
    pub name: String,
    pub ranked: Vec<String>,
    pub qrels: std::collections::BTreeMap<String, u32>,
    pub mrr: f64,
    pub ndcg_at_3: f64,
    pub p_at_3: f64,
}

impl MetricCase {
    pub fn qrel_set(&self) -> maniscope::metrics::QrelSet {
        self.qrels
            .iter()
            .fold(maniscope::metrics::QrelSet::new("q"), |s, (d, g)| {
                s.with(d.clone(), *g)
            })
    }
}

pub fn metric_cases() -> Vec<MetricCase> {
    let text = std::fs::read_to_string(fixtures_dir().join("metric_cases.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

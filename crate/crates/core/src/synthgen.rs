//! Synthetic datasets with chain-shaped clusters.
//!
//! Every cluster is an arc on the unit sphere. All arcs leave a shared random
//! "hub" direction along mutually orthogonal tangents, so cluster heads sit
//! close together (an ambiguous term shared by two senses) while the chains
//! diverge. Cosine to a query placed at one head ranks the other cluster's
//! head above the far end of its own chain; geodesics along the chain do not.
//!
//! # Generation procedure
//!
//! The generator is xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64(seed)`). Uniforms are
//! `(next_u64 >> 11) * 2^-53`; normals use Box–Muller with one draw pair per
//! normal (`u1 = 1 - uniform`, `u2 = uniform`, `sqrt(-2 ln u1) cos(2π u2)`).
//! Draws happen in this order:
//!
//! 1. hub: `dim` normals, normalized;
//! 2. per cluster, tangent: `dim` normals, Gram–Schmidt against the hub and
//!    earlier tangents (only the hub once `dim` is exhausted), normalized;
//! 3. per cluster, per document `j`: `dim` normals scaled by
//!    `noise_sigma / sqrt(dim)` added to `cos(s) hub + sin(s) tangent` at
//!    `s = head_angle + j * chain_step`, then normalized;
//! 4. per cluster, per query: the same noise added to the cluster head.
//!
//! Arithmetic is f64; stored vectors are rounded to f32.

use std::collections::BTreeMap;
use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::metrics::QrelSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub clusters: usize,
    pub per_cluster: usize,
    pub dim: usize,
    /// Arc length (radians) between consecutive chain points.
    pub chain_step: f64,
    /// Expected Euclidean norm of the noise added to each point.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Arc length (radians) from the shared hub to every cluster head.
    #[serde(default = "default_head_angle")]
    pub head_angle: f64,
    #[serde(default = "default_queries_per_cluster")]
    pub queries_per_cluster: usize,
}

fn default_head_angle() -> f64 {
    SynthSpec::DEFAULT_HEAD_ANGLE
}

fn default_queries_per_cluster() -> usize {
    1
}

impl SynthSpec {
    pub const DEFAULT_HEAD_ANGLE: f64 = 0.18;

    pub fn new(clusters: usize, per_cluster: usize, dim: usize, seed: u64) -> Self {
        Self {
            clusters,
            per_cluster,
            dim,
            chain_step: 0.15,
            noise_sigma: 0.02,
            seed,
            head_angle: Self::DEFAULT_HEAD_ANGLE,
            queries_per_cluster: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dim < 2 {
            return bad("dim must be at least 2");
        }
        if self.clusters < 2 {
            return bad("clusters must be at least 2");
        }
        if self.per_cluster == 0 || self.queries_per_cluster == 0 {
            return bad("per_cluster and queries_per_cluster must be positive");
        }
        for (name, v) in [
            ("chain_step", self.chain_step),
            ("noise_sigma", self.noise_sigma),
            ("head_angle", self.head_angle),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// Deterministic draw source; see the module docs for the exact procedure.
struct Draws(Xoshiro256PlusPlus);

impl Draws {
    fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    fn normals(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.normal()).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn point_on_arc(hub: &[f64], tangent: &[f64], s: f64) -> Vec<f64> {
    let (sin, cos) = s.sin_cos();
    hub.iter()
        .zip(tangent)
        .map(|(h, t)| cos * h + sin * t)
        .collect()
}

fn noisy_unit(base: &[f64], draws: &mut Draws, scale: f64) -> Vec<f32> {
    let noise = draws.normals(base.len());
    let v: Vec<f64> = base.iter().zip(noise).map(|(b, z)| b + scale * z).collect();
    normalized(v).into_iter().map(|x| x as f32).collect()
}

pub fn doc_id(cluster: usize, j: usize) -> String {
    format!("c{cluster}_d{j}")
}

pub fn query_id(cluster: usize, i: usize) -> String {
    format!("q{cluster}_{i}")
}

/// Generates corpus, queries and binary qrels (own cluster = 1, others = 0).
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let dim = spec.dim;
    let mut draws = Draws::new(spec.seed);

    let hub = normalized(draws.normals(dim));
    let mut tangents: Vec<Vec<f64>> = Vec::with_capacity(spec.clusters);
    for c in 0..spec.clusters {
        let mut t = draws.normals(dim);
        let basis_len = if c + 1 < dim { c } else { 0 };
        for b in std::iter::once(&hub).chain(tangents.iter().take(basis_len)) {
            let p = dot(&t, b);
            t.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        tangents.push(normalized(t));
    }

    let scale = spec.noise_sigma / (dim as f64).sqrt();
    let mut vectors = Vec::with_capacity(spec.clusters * spec.per_cluster * dim);
    let mut ids = Vec::with_capacity(spec.clusters * spec.per_cluster);
    for (c, t) in tangents.iter().enumerate() {
        for j in 0..spec.per_cluster {
            let s = spec.head_angle + j as f64 * spec.chain_step;
            vectors.extend(noisy_unit(&point_on_arc(&hub, t, s), &mut draws, scale));
            ids.push(doc_id(c, j));
        }
    }

    let mut qvectors = Vec::with_capacity(spec.clusters * spec.queries_per_cluster * dim);
    let mut qids = Vec::new();
    let mut qrels = BTreeMap::new();
    for (c, t) in tangents.iter().enumerate() {
        let head = point_on_arc(&hub, t, spec.head_angle);
        for i in 0..spec.queries_per_cluster {
            qvectors.extend(noisy_unit(&head, &mut draws, scale));
            let qid = query_id(c, i);
            let mut set = QrelSet::new(qid.clone());
            for other in 0..spec.clusters {
                for j in 0..spec.per_cluster {
                    set.judgments
                        .insert(doc_id(other, j), u32::from(other == c));
                }
            }
            qrels.insert(qid.clone(), set);
            qids.push(qid);
        }
    }

    Ok(Dataset {
        corpus: EmbeddingMatrix::new(dim, vectors, ids)?,
        queries: EmbeddingMatrix::new(dim, qvectors, qids)?,
        qrels,
    })
}

/// Writes the dataset files plus `synth_spec.json` recording the spec.
pub fn write_dataset(dataset: &Dataset, spec: Option<&SynthSpec>, dir: &Path) -> Result<()> {
    dataset.write(dir)?;
    if let Some(spec) = spec {
        let path = dir.join("synth_spec.json");
        let text = serde_json::to_string_pretty(spec)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

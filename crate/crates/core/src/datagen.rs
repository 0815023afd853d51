//! Deterministic synthetic data: planted-partition multi-view graphs with
//! optionally corrupted views, and Gaussian blobs.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`) seeded with the spec's
//! `seed`; view `v` reads stream `v`, so outputs depend only on the spec and
//! are identical across platforms.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{Semantics, SparseViewGraph};

/// Parameters of [`generate_multiview`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n: usize,
    pub n_clusters: usize,
    pub n_views: usize,
    /// Probability of an edge between two nodes of the same cluster.
    pub p_in: f64,
    /// Probability of an edge between nodes of different clusters.
    pub p_out: f64,
    pub corrupt_views: Vec<usize>,
    /// Fraction of cross-cluster pairs that receive extra weight in a corrupted view.
    pub corrupt_rate: f64,
    /// Size of that extra weight.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 200,
            n_clusters: 4,
            n_views: 4,
            p_in: 0.9,
            p_out: 0.05,
            corrupt_views: vec![3],
            corrupt_rate: 0.5,
            noise_scale: 0.9,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_views == 0 {
            return Err(Error::NoViews);
        }
        if self.n_clusters == 0 || self.n_clusters > self.n {
            return bad(format!(
                "need 1 <= n_clusters <= n, got {} clusters for {} nodes",
                self.n_clusters, self.n
            ));
        }
        for (name, p) in [
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("corrupt_rate", self.corrupt_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            return bad(format!("noise_scale must be positive, got {}", self.noise_scale));
        }
        if let Some(&v) = self.corrupt_views.iter().find(|&&v| v >= self.n_views) {
            return bad(format!("corrupted view {v} out of range for {} views", self.n_views));
        }
        Ok(())
    }
}

/// Contiguous balanced clusters; the last one absorbs the remainder.
pub fn planted_labels(n: usize, n_clusters: usize) -> Vec<usize> {
    let size = (n / n_clusters.max(1)).max(1);
    (0..n).map(|i| (i / size).min(n_clusters - 1)).collect()
}

/// One symmetric similarity graph per view plus the planted labels.
///
/// Each unordered pair gets an edge with probability `p_in` (same cluster) or
/// `p_out` (different clusters) and a weight uniform on `(0, 1]`. In a
/// corrupted view every cross-cluster pair additionally receives
/// `noise_scale` extra weight with probability `corrupt_rate`.
pub fn generate_multiview(spec: &SyntheticSpec) -> Result<(Vec<SparseViewGraph>, Vec<usize>)> {
    spec.validate()?;
    let labels = planted_labels(spec.n, spec.n_clusters);
    let views = (0..spec.n_views)
        .map(|v| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(v as u64);
            let corrupted = spec.corrupt_views.contains(&v);
            let mut edges = Vec::new();
            for i in 0..spec.n {
                for j in i + 1..spec.n {
                    // Fixed number of draws per pair keeps streams aligned across specs.
                    let (u_edge, u_weight, u_noise): (f64, f64, f64) =
                        (rng.random(), rng.random(), rng.random());
                    let same = labels[i] == labels[j];
                    let p = if same { spec.p_in } else { spec.p_out };
                    let mut w = if u_edge < p { 1.0 - u_weight } else { 0.0 };
                    if corrupted && !same && u_noise < spec.corrupt_rate {
                        w += spec.noise_scale;
                    }
                    if w > 0.0 {
                        edges.push(((i, j), w));
                        edges.push(((j, i), w));
                    }
                }
            }
            SparseViewGraph::new(spec.n, edges, Semantics::Similarity)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((views, labels))
}

/// Dense distances `max(w) - w_ij` (missing edges at the maximum distance,
/// zero diagonal), the form the pipelines accept.
pub fn similarity_to_distances(g: &SparseViewGraph) -> Array2<f64> {
    let n = g.n_nodes();
    let top = g.weights().iter().copied().fold(0.0, f64::max);
    let mut d = Array2::from_elem((n, n), top);
    for i in 0..n {
        d[[i, i]] = 0.0;
    }
    for ((i, j), w) in g.iter() {
        d[[i, j]] = top - w;
    }
    d
}

/// `n` points in `dim` dimensions around `n_clusters` centroids whose pairwise
/// distances are at least `separation`, with unit-variance Gaussian noise.
pub fn generate_blobs(
    n: usize,
    n_clusters: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<(Array2<f64>, Vec<usize>)> {
    if n_clusters == 0 || n_clusters > n || dim == 0 {
        return Err(Error::InvalidParameter(format!(
            "cannot place {n_clusters} blobs of {n} points in {dim} dimensions"
        )));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "separation must be >= 0, got {separation}"
        )));
    }
    let labels = planted_labels(n, n_clusters);
    let centroid = |c: usize, k: usize| -> f64 {
        if dim >= n_clusters {
            // Scaled simplex vertices: every pair exactly `separation` apart.
            if k == c {
                separation / std::f64::consts::SQRT_2
            } else {
                0.0
            }
        } else if k == 0 {
            c as f64 * separation
        } else {
            0.0
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, dim));
    for (i, &c) in labels.iter().enumerate() {
        for k in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[[i, k]] = centroid(c, k) + z;
        }
    }
    Ok((x, labels))
}

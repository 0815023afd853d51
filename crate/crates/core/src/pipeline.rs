//! End-to-end pipelines from raw views to cluster labels.
//!
//! Similarity graph fusion (SGF):
//! 1. shared kNN distance graphs
//! 2. per-view distance standardization
//! 3. Gaussian kernel per view (bandwidth = mean edge)
//! 4. consistent graph learning on the similarities
//! 5. keep the `k` largest entries per row, then `(S + S')/2`
//! 6. spectral clustering
//!
//! Distance graph fusion (DGF) learns on the standardized distances and
//! applies the kernel to the fused distances afterwards (bandwidth = mean
//! fused distance).

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{learn_consistent_graph, FusionParams, FusionResult};
use crate::graphs::{
    build_mvdr, build_shared_knn, gaussian_kernel, keep_largest_per_row, mean_bandwidth,
    normalize_knn_distances, scatter_to_sparse, symmetrize_average, Bandwidth, Metric, Semantics,
    SparseViewGraph, ViewInput, gaussian_similarity,
};
use crate::spectral::{spectral_cluster, KMeansConfig, KMeansResult};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    #[default]
    Sgf,
    Dgf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mode: FusionMode,
    /// Neighbours per node, both for the input graphs and the fused graph.
    pub k: usize,
    pub n_clusters: usize,
    pub metric: Metric,
    pub fusion: FusionParams,
    pub kmeans: KMeansConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: FusionMode::Sgf,
            k: 6,
            n_clusters: 2,
            metric: Metric::Euclidean,
            fusion: FusionParams::default(),
            kmeans: KMeansConfig::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn new(mode: FusionMode, n_clusters: usize) -> Self {
        Self {
            mode,
            n_clusters,
            ..Self::default()
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidK { k: self.k, n });
        }
        if self.n_clusters < 2 || self.n_clusters > n {
            return Err(Error::InvalidParameter(format!(
                "need 2 <= clusters <= {n}, got {}",
                self.n_clusters
            )));
        }
        Ok(())
    }
}

/// Wall-clock time per stage. Not part of any deterministic output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub graphs: Duration,
    pub fusion: Duration,
    pub clustering: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub labels: Vec<usize>,
    pub fusion: FusionResult,
    /// Symmetric fused similarity graph that was clustered.
    pub fused: SparseViewGraph,
    /// Leading eigenvalues of the fused graph's normalized affinity, descending.
    pub eigenvalues: Vec<f64>,
    pub eigengap: Option<f64>,
    /// Nodes with no fused edges.
    pub isolated: Vec<usize>,
    pub kmeans: KMeansResult,
    pub timings: StageTimings,
}

pub fn run(views: &[ViewInput], cfg: &PipelineConfig) -> Result<PipelineOutput> {
    match cfg.mode {
        FusionMode::Sgf => run_sgf(views, cfg),
        FusionMode::Dgf => run_dgf(views, cfg),
    }
}

fn standardized_knn(views: &[ViewInput], cfg: &PipelineConfig) -> Result<Vec<SparseViewGraph>> {
    let n = views.first().ok_or(Error::NoViews)?.n_nodes();
    cfg.validate(n)?;
    build_shared_knn(views, cfg.k, cfg.metric)?
        .iter()
        .map(normalize_knn_distances)
        .collect()
}

pub fn run_sgf(views: &[ViewInput], cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let clock = Instant::now();
    let similarities = standardized_knn(views, cfg)?
        .iter()
        .map(|g| gaussian_kernel(g, Bandwidth::Mean))
        .collect::<Result<Vec<_>>>()?;
    let mv = build_mvdr(&similarities)?;
    let graphs = clock.elapsed();

    let clock = Instant::now();
    let fusion = learn_consistent_graph(&mv, &cfg.fusion)?;
    let fused = scatter_to_sparse(fusion.state.fused.as_slice().expect("contiguous"), mv.index(), Semantics::Similarity)?;
    let fusion_time = clock.elapsed();

    finish(fused, fusion, cfg, graphs, fusion_time)
}

pub fn run_dgf(views: &[ViewInput], cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let clock = Instant::now();
    let distances = standardized_knn(views, cfg)?;
    let mv = build_mvdr(&distances)?;
    let graphs = clock.elapsed();

    let clock = Instant::now();
    let fusion = learn_consistent_graph(&mv, &cfg.fusion)?;
    let fused_distances = fusion.state.fused.to_vec();
    let rho = mean_bandwidth(&fused_distances)?;
    let similarity: Vec<f64> = fused_distances
        .iter()
        .map(|&d| gaussian_similarity(d, rho))
        .collect();
    let fused = scatter_to_sparse(&similarity, mv.index(), Semantics::Similarity)?;
    let fusion_time = clock.elapsed();

    finish(fused, fusion, cfg, graphs, fusion_time)
}

fn finish(
    fused: SparseViewGraph,
    fusion: FusionResult,
    cfg: &PipelineConfig,
    graphs: Duration,
    fusion_time: Duration,
) -> Result<PipelineOutput> {
    let clock = Instant::now();
    let fused = symmetrize_average(&keep_largest_per_row(&fused, cfg.k));
    let sc = spectral_cluster(&fused, cfg.n_clusters, cfg.kmeans, cfg.seed)?;
    Ok(PipelineOutput {
        labels: sc.labels,
        eigengap: sc.embedding.eigengap(),
        eigenvalues: sc.embedding.eigenvalues,
        isolated: sc.embedding.isolated,
        kmeans: sc.kmeans,
        fusion,
        fused,
        timings: StageTimings {
            graphs,
            fusion: fusion_time,
            clustering: clock.elapsed(),
        },
    })
}

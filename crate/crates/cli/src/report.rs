use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use mvfuse_core::{ClusteringScores, PipelineOutput, SparseViewGraph};

use crate::args::{MetricArg, ModeArg, ViewsAre};

/// The settings a run actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub views: Vec<String>,
    pub views_are: ViewsAre,
    pub header: bool,
    pub mode: ModeArg,
    pub k: usize,
    pub clusters: usize,
    pub metric: MetricArg,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: Vec<f64>,
    pub max_outer: usize,
    pub tol: f64,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub seed: u64,
    pub truth: Option<String>,
}

/// Wall-clock seconds per stage. Kept apart from everything else because it
/// is the only part of a report that differs between identical runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub read_s: f64,
    pub graphs_s: f64,
    pub fusion_s: f64,
    pub clustering_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub n_nodes: usize,
    pub n_views: usize,
    /// Edges in the shared kNN edge set the optimizer ran on.
    pub n_edges: usize,
    pub alpha: Vec<f64>,
    pub initial_objective: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Leading eigenvalues of the fused graph's normalized affinity.
    pub eigenvalues: Vec<f64>,
    pub eigengap: Option<f64>,
    /// Nodes left without any fused edge.
    pub isolated: Vec<usize>,
    pub labels: Vec<usize>,
    pub metrics: Option<ClusteringScores>,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(
        config: ConfigEcho,
        n_views: usize,
        out: PipelineOutput,
        metrics: Option<ClusteringScores>,
        read_s: f64,
    ) -> Self {
        let t = out.timings;
        let stages = t.graphs.as_secs_f64() + t.fusion.as_secs_f64() + t.clustering.as_secs_f64();
        Self {
            config,
            n_nodes: out.labels.len(),
            n_views,
            n_edges: out.fusion.state.fused.len(),
            alpha: out.fusion.state.alpha.to_vec(),
            initial_objective: out.fusion.initial_objective,
            objective_trace: out.fusion.objective_trace,
            iterations: out.fusion.iterations,
            converged: out.fusion.converged,
            eigenvalues: out.eigenvalues,
            eigengap: out.eigengap,
            isolated: out.isolated,
            labels: out.labels,
            metrics,
            timings: Timings {
                read_s,
                graphs_s: t.graphs.as_secs_f64(),
                fusion_s: t.fusion.as_secs_f64(),
                clustering_s: t.clustering.as_secs_f64(),
                total_s: read_s + stages,
            },
        }
    }
}

/// `i<TAB>j<TAB>weight` per stored entry, 0-based, weights in shortest
/// round-trip form.
pub fn write_graph_tsv(g: &SparseViewGraph, mut w: impl Write) -> io::Result<()> {
    for ((i, j), x) in g.iter() {
        writeln!(w, "{i}\t{j}\t{x:?}")?;
    }
    w.flush()
}

//! Multi-view graph fusion.
//!
//! Several graphs over the same nodes (one per view) are fused into a single
//! graph by splitting every view into a part that agrees with the others and
//! a view-specific part, learning per-view weights on the simplex along the
//! way. The fused graph is then clustered spectrally.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`graphs`] | shared kNN graphs, distance standardization, kernels, dense packing |
//! | [`qpsolvers`] | away-step Frank-Wolfe, batched DCA, small symmetric eigenvalues |
//! | [`fusion`] | objective, subproblem assembly, alternating optimizer |
//! | [`spectral`] | normalized affinity, spectral embedding, k-means |
//! | [`metrics`] | NMI, ARI, ACC, purity |
//! | [`datagen`] | synthetic multi-view graphs and blobs |
//! | [`pipeline`] | SGF and DGF end to end |
//!
//! ```
//! use mvfuse_core::datagen::{generate_multiview, similarity_to_distances, SyntheticSpec};
//! use mvfuse_core::pipeline::{run, FusionMode, PipelineConfig};
//! use mvfuse_core::{metrics, ViewInput};
//!
//! let spec = SyntheticSpec { n: 60, n_clusters: 3, n_views: 3, corrupt_views: vec![], ..Default::default() };
//! let (graphs, truth) = generate_multiview(&spec).unwrap();
//! let views: Vec<ViewInput> = graphs
//!     .iter()
//!     .map(|g| ViewInput::Distances(similarity_to_distances(g)))
//!     .collect();
//! let out = run(&views, &PipelineConfig::new(FusionMode::Sgf, 3)).unwrap();
//! assert!(metrics::nmi(&out.labels, &truth).unwrap() > 0.9);
//! ```

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod fusion;
pub mod graphs;
pub mod metrics;
pub mod pipeline;
pub mod qpsolvers;
pub mod spectral;

pub use error::{Error, Result};
pub use fusion::{learn_consistent_graph, FusionParams, FusionResult, FusionState};
pub use graphs::{
    EdgeIndexSet, Metric, MultiViewDenseGraph, Semantics, SparseViewGraph, ViewInput,
};
pub use metrics::ClusteringScores;
pub use pipeline::{FusionMode, PipelineConfig, PipelineOutput};
pub use spectral::KMeansConfig;

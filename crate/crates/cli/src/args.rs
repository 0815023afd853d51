use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mvfuse_core::{FusionMode, Metric};

#[derive(Debug, Parser)]
#[command(name = "mvfuse", version, about = "Multi-view graph fusion and spectral clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fuse one graph per view and cluster the fused graph.
    Fuse(FuseArgs),
    /// Score predicted labels against ground truth.
    Eval(EvalArgs),
    /// Write a synthetic multi-view dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    #[default]
    Sgf,
    Dgf,
}

impl From<ModeArg> for FusionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sgf => FusionMode::Sgf,
            ModeArg::Dgf => FusionMode::Dgf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    #[default]
    Euclidean,
    Cosine,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Cosine => Metric::Cosine,
        }
    }
}

/// How to read each view file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewsAre {
    /// Rows are instances, columns are features.
    #[default]
    Features,
    /// Square matrix of pairwise distances.
    Distances,
}

#[derive(Debug, Clone, Args)]
pub struct FuseArgs {
    /// One CSV file per view.
    #[arg(required = true)]
    pub views: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub mode: ModeArg,
    /// Nearest neighbours per node.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    /// Number of clusters.
    #[arg(long)]
    pub clusters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e4)]
    pub gamma: f64,
    /// Per-view weights, e.g. `1,1,2`. Defaults to 1 for every view.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub metric: MetricArg,
    #[arg(long = "views-are", value_enum, default_value_t)]
    pub views_are: ViewsAre,
    /// Skip the first line of every CSV input.
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    /// Fused graph as `i<TAB>j<TAB>weight` lines.
    #[arg(long = "graph-out", default_value = "graph.tsv")]
    pub graph_out: PathBuf,
    /// Do not write the fused graph.
    #[arg(long = "no-graph")]
    pub no_graph: bool,
    #[arg(long = "max-outer", default_value_t = 50)]
    pub max_outer: usize,
    /// Relative objective change that stops the optimizer.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Ground-truth labels (one per line); adds scores to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Labels as a JSON array or any JSON object with a `labels` array (such as a fuse report).
    pub pred: PathBuf,
    /// Ground-truth labels, one per line.
    pub truth: PathBuf,
    /// Skip the first line of the truth file.
    #[arg(long)]
    pub header: bool,
    /// Also write the scores here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// TOML file with a `[synth]` table (or the same keys at top level).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub views: Option<usize>,
    #[arg(long = "p-in")]
    pub p_in: Option<f64>,
    #[arg(long = "p-out")]
    pub p_out: Option<f64>,
    /// Comma-separated view indices to corrupt.
    #[arg(long = "corrupt-views", value_delimiter = ',')]
    pub corrupt_views: Option<Vec<usize>>,
    #[arg(long = "corrupt-rate")]
    pub corrupt_rate: Option<f64>,
    #[arg(long = "noise-scale")]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for `view_<i>.csv` and `truth.csv`.
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

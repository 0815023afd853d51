//! The `mvfuse` command line: `fuse`, `eval` and `synth`.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 malformed input or
//! arguments, 3 inconsistent shapes.

pub mod args;
pub mod input;
pub mod report;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use mvfuse_core::datagen::{generate_multiview, similarity_to_distances, SyntheticSpec};
use mvfuse_core::metrics::score_all;
use mvfuse_core::{FusionParams, KMeansConfig, PipelineConfig, ViewInput};

pub use args::{Cli, Command, EvalArgs, FuseArgs, SynthArgs};
pub use report::{ConfigEcho, RunReport, Timings};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "MVFUSE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Shape(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Shape(_) => 3,
        }
    }
}

impl From<mvfuse_core::Error> for CliError {
    fn from(e: mvfuse_core::Error) -> Self {
        use mvfuse_core::Error as E;
        let msg = e.to_string();
        match e {
            E::NodeCountMismatch { .. }
            | E::EdgeSetMismatch { .. }
            | E::ShapeMismatch(_)
            | E::LengthMismatch(..) => CliError::Shape(msg),
            E::NoViews
            | E::InvalidK { .. }
            | E::EmptyEdgeSet
            | E::InvalidEdge { .. }
            | E::DuplicateEdge { .. }
            | E::InvalidWeight { .. }
            | E::InvalidParameter(_)
            | E::NonFinite(_)
            | E::TooFewPoints { .. } => CliError::Input(msg),
            _ => CliError::Failed(msg),
        }
    }
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failed(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| write_err(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| write_err(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| write_err(path, e))
}

/// Installs a global thread pool when [`THREADS_ENV`] is set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool may already exist when embedded in tests; that is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Fuse(a) => fuse(&a).map(|_| ()),
        Command::Eval(a) => eval(&a),
        Command::Synth(a) => synth(&a),
    }
}

pub fn fuse(a: &FuseArgs) -> Result<RunReport, CliError> {
    let clock = Instant::now();
    let mut views = Vec::with_capacity(a.views.len());
    for path in &a.views {
        let m = input::read_matrix(path, a.header)?;
        let view = match a.views_are {
            args::ViewsAre::Features => ViewInput::Features(m),
            args::ViewsAre::Distances => {
                if m.nrows() != m.ncols() {
                    return Err(CliError::Shape(format!(
                        "{}: distance matrix is {}x{}, not square",
                        path.display(),
                        m.nrows(),
                        m.ncols()
                    )));
                }
                ViewInput::Distances(m)
            }
        };
        views.push(view);
    }
    let n = views[0].n_nodes();
    if let Some((path, v)) = a.views.iter().zip(&views).find(|(_, v)| v.n_nodes() != n) {
        return Err(CliError::Shape(format!(
            "{}: {} rows, but {} has {n}",
            path.display(),
            v.n_nodes(),
            a.views[0].display()
        )));
    }
    let truth = match &a.truth {
        Some(path) => {
            let t = input::read_labels(path, a.header)?;
            if t.len() != n {
                return Err(CliError::Shape(format!(
                    "{}: {} labels for {n} nodes",
                    path.display(),
                    t.len()
                )));
            }
            Some(t)
        }
        None => None,
    };
    if !a.lambda.is_empty() && a.lambda.len() != views.len() {
        return Err(CliError::Shape(format!(
            "--lambda has {} values for {} views",
            a.lambda.len(),
            views.len()
        )));
    }
    let read_s = clock.elapsed().as_secs_f64();

    let cfg = PipelineConfig {
        mode: a.mode.into(),
        k: a.k,
        n_clusters: a.clusters,
        metric: a.metric.into(),
        fusion: FusionParams {
            beta: a.beta,
            gamma: a.gamma,
            lambda: a.lambda.clone(),
            max_outer: a.max_outer,
            rel_tol: a.tol,
            ..FusionParams::default()
        },
        kmeans: KMeansConfig::default(),
        seed: a.seed,
    };
    let out = mvfuse_core::pipeline::run(&views, &cfg)?;
    let metrics = truth.map(|t| score_all(&out.labels, &t)).transpose()?;

    if !a.no_graph {
        let mut w = create(&a.graph_out)?;
        report::write_graph_tsv(&out.fused, &mut w).map_err(|e| write_err(&a.graph_out, e))?;
    }
    let echo = ConfigEcho {
        views: a.views.iter().map(|p| p.display().to_string()).collect(),
        views_are: a.views_are,
        header: a.header,
        mode: a.mode,
        k: a.k,
        clusters: a.clusters,
        metric: a.metric,
        beta: a.beta,
        gamma: a.gamma,
        lambda: cfg.fusion.lambda_for(views.len())?.to_vec(),
        max_outer: a.max_outer,
        tol: a.tol,
        kmeans_restarts: cfg.kmeans.restarts,
        kmeans_max_iter: cfg.kmeans.max_iter,
        seed: a.seed,
        truth: a.truth.as_ref().map(|p| p.display().to_string()),
    };
    let report = RunReport::new(echo, views.len(), out, metrics, read_s);
    write_json(&a.out, &report)?;
    println!(
        "{} nodes, {} views, {} edges; {} sweeps{}; wrote {}",
        report.n_nodes,
        report.n_views,
        report.n_edges,
        report.iterations,
        if report.converged { " (converged)" } else { "" },
        a.out.display()
    );
    Ok(report)
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let pred = input::read_json_labels(&a.pred)?;
    let truth = input::read_labels(&a.truth, a.header)?;
    if pred.len() != truth.len() {
        return Err(CliError::Shape(format!(
            "{} predicted labels vs {} true labels",
            pred.len(),
            truth.len()
        )));
    }
    let scores = score_all(&pred, &truth)?;
    let text = serde_json::to_string_pretty(&scores).expect("plain struct");
    println!("{text}");
    if let Some(path) = &a.out {
        write_json(path, &scores)?;
    }
    Ok(())
}

/// The spec from `--config` (a `[synth]` table or top-level keys) with flags
/// layered on top.
pub fn synth_spec(a: &SynthArgs) -> Result<SyntheticSpec, CliError> {
    let mut spec = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let mut table: toml::Table =
                toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let section = match table.remove("synth") {
                Some(toml::Value::Table(t)) => t,
                Some(_) => return Err(CliError::Input(format!("{}: `synth` must be a table", path.display()))),
                None => table,
            };
            section
                .try_into()
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => SyntheticSpec::default(),
    };
    macro_rules! layer {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(x) = a.$flag.clone() { spec.$field = x; })*
        };
    }
    layer!(n => n, clusters => n_clusters, views => n_views, p_in => p_in, p_out => p_out,
        corrupt_views => corrupt_views, corrupt_rate => corrupt_rate, noise_scale => noise_scale, seed => seed);
    spec.validate()?;
    Ok(spec)
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let spec = synth_spec(a)?;
    let (graphs, truth) = generate_multiview(&spec)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| write_err(&a.out_dir, e))?;
    for (v, g) in graphs.iter().enumerate() {
        let path = a.out_dir.join(format!("view_{v}.csv"));
        let mut w = create(&path)?;
        for row in similarity_to_distances(g).rows() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{}", line.join(",")).map_err(|e| write_err(&path, e))?;
        }
        w.flush().map_err(|e| write_err(&path, e))?;
    }
    let path = a.out_dir.join("truth.csv");
    let mut w = create(&path)?;
    for l in &truth {
        writeln!(w, "{l}").map_err(|e| write_err(&path, e))?;
    }
    w.flush().map_err(|e| write_err(&path, e))?;
    println!(
        "wrote {} distance views and truth.csv for {} nodes to {}",
        graphs.len(),
        spec.n,
        a.out_dir.display()
    );
    Ok(())
}

//! Spectral clustering of a fused similarity graph.
//!
//! The embedding uses the leading eigenvectors of `D^{-1/2} S D^{-1/2}` (the
//! smallest of the symmetric normalized Laplacian), unit-normalizes the rows
//! and clusters them with k-means++ seeded Lloyd iterations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::SparseViewGraph;

/// Graphs up to this many nodes are decomposed densely.
pub const DENSE_LIMIT: usize = 2000;
/// Residual tolerance for the iterative eigen-solver.
pub const KRYLOV_TOL: f64 = 1e-8;

const ISOLATED_DEGREE: f64 = 1e-12;

/// Symmetric sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
    isolated: Vec<usize>,
}

impl AffinityMatrix {
    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// Nodes whose degree was numerically zero; their rows and columns are zero.
    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        row.binary_search(&j)
            .map(|p| self.data[self.indptr[i] + p])
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for p in self.indptr[i]..self.indptr[i + 1] {
                m[[i, self.indices[p]]] = self.data[p];
            }
        }
        m
    }

    fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| {
            (self.indptr[i]..self.indptr[i + 1])
                .map(|p| self.data[p] * x[self.indices[p]])
                .sum()
        })
    }
}

/// `N = D^{-1/2} S D^{-1/2}` for a symmetric nonnegative `S`. Nodes with
/// degree below `1e-12` get zero rows and columns.
pub fn normalized_affinity(s: &SparseViewGraph) -> Result<AffinityMatrix> {
    let scale = s.weights().iter().fold(1.0f64, |a, &w| a.max(w));
    let asym = s.max_asymmetry();
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let n = s.n_nodes();
    let mut degree = vec![0.0; n];
    for ((i, _), w) in s.iter() {
        degree[i] += w;
    }
    let inv_sqrt: Vec<f64> = degree
        .iter()
        .map(|&d| if d < ISOLATED_DEGREE { 0.0 } else { 1.0 / d.sqrt() })
        .collect();
    let isolated = (0..n).filter(|&i| degree[i] < ISOLATED_DEGREE).collect();
    let indptr = s.row_offsets();
    let indices = s.pairs().iter().map(|&(_, j)| j).collect();
    let data = s
        .iter()
        .map(|((i, j), w)| w * inv_sqrt[i] * inv_sqrt[j])
        .collect();
    Ok(AffinityMatrix {
        n,
        indptr,
        indices,
        data,
        isolated,
    })
}

/// Which eigen-solver [`spectral_embed_with`] uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EigenSolver {
    /// Dense up to [`DENSE_LIMIT`] nodes, block Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

/// Row-normalized spectral embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `n x n_c`, one row per node.
    pub rows: Array2<f64>,
    /// Leading eigenvalues of the normalized affinity, descending. Holds
    /// `n_c + 1` values when `n_c < n` so the eigengap can be read off.
    pub eigenvalues: Vec<f64>,
    /// Rows that were numerically zero and left unnormalized.
    pub zero_rows: Vec<usize>,
    pub isolated: Vec<usize>,
}

impl Embedding {
    /// `lambda_{n_c} - lambda_{n_c + 1}` of the normalized affinity.
    pub fn eigengap(&self) -> Option<f64> {
        let k = self.rows.ncols();
        (self.eigenvalues.len() > k).then(|| self.eigenvalues[k - 1] - self.eigenvalues[k])
    }
}

pub fn spectral_embed(s: &SparseViewGraph, n_c: usize) -> Result<Embedding> {
    spectral_embed_with(s, n_c, EigenSolver::Auto)
}

pub fn spectral_embed_with(
    s: &SparseViewGraph,
    n_c: usize,
    solver: EigenSolver,
) -> Result<Embedding> {
    let n = s.n_nodes();
    if n_c < 2 || n_c > n {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= clusters <= {n}, got {n_c}"
        )));
    }
    let affinity = normalized_affinity(s)?;
    let nev = (n_c + 1).min(n);
    let dense = match solver {
        EigenSolver::Auto => n <= DENSE_LIMIT,
        EigenSolver::Dense => true,
        EigenSolver::Krylov => false,
    };
    let (eigenvalues, mut vectors) = if dense {
        top_eigenpairs_dense(&affinity, nev)
    } else {
        top_eigenpairs_krylov(&affinity, nev, KRYLOV_TOL)?
    };

    let mut rows = Array2::zeros((n, n_c));
    for c in 0..n_c {
        let mut col = vectors.column_mut(c);
        fix_sign(col.as_mut_slice());
        for i in 0..n {
            rows[[i, c]] = col[i];
        }
    }
    let mut zero_rows = Vec::new();
    for (i, mut row) in rows.outer_iter_mut().enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm < 1e-12 {
            zero_rows.push(i);
        } else {
            row.mapv_inplace(|x| x / norm);
        }
    }
    Ok(Embedding {
        rows,
        eigenvalues,
        zero_rows,
        isolated: affinity.isolated.clone(),
    })
}

/// Makes the largest-magnitude entry (first on ties) positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn sorted_desc(values: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

fn top_eigenpairs_dense(a: &AffinityMatrix, nev: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.n;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for p in a.indptr[i]..a.indptr[i + 1] {
            m[(i, a.indices[p])] = a.data[p];
        }
    }
    let eig = SymmetricEigen::new(m);
    let order = sorted_desc(&eig.eigenvalues);
    let values = order[..nev].iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, nev, |i, c| eig.eigenvectors[(i, order[c])]);
    (values, vectors)
}

/// Leading eigenpairs by restarted block Krylov iteration with full
/// reorthogonalization and Rayleigh-Ritz extraction. A block start handles
/// repeated eigenvalues (one per connected component at eigenvalue 1).
fn top_eigenpairs_krylov(
    a: &AffinityMatrix,
    nev: usize,
    tol: f64,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    const MAX_RESTARTS: usize = 300;
    let n = a.n;
    let block = (nev + 4).min(n);
    let max_basis = n.min((4 * block).max(block + 60));
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d76_6675_7365);
    let mut start: Vec<DVector<f64>> = (0..block)
        .map(|_| DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5))
        .collect();

    let mut worst = f64::INFINITY;
    for _ in 0..MAX_RESTARTS {
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_basis);
        let mut images: Vec<DVector<f64>> = Vec::with_capacity(max_basis);
        let mut frontier = std::mem::take(&mut start);
        while basis.len() < max_basis && !frontier.is_empty() {
            let mut added = Vec::new();
            for mut w in frontier {
                if basis.len() >= max_basis {
                    break;
                }
                let before = w.norm();
                for _ in 0..2 {
                    for q in &basis {
                        let c = q.dot(&w);
                        w.axpy(-c, q, 1.0);
                    }
                }
                let after = w.norm();
                if after <= 1e-10 * before.max(f64::MIN_POSITIVE) {
                    continue;
                }
                w /= after;
                let mw = a.mul_vec(&w);
                basis.push(w);
                images.push(mw.clone());
                added.push(mw);
            }
            frontier = added;
        }
        let m = basis.len();
        let v = DMatrix::from_columns(&basis);
        let mv = DMatrix::from_columns(&images);
        let mut t = v.transpose() * &mv;
        t = 0.5 * (&t + t.transpose());
        let eig = SymmetricEigen::new(t);
        let order = sorted_desc(&eig.eigenvalues);
        let take = nev.min(m);
        let y = DMatrix::from_fn(m, block.min(m), |r, c| eig.eigenvectors[(r, order[c])]);
        let ritz = &v * &y;
        let ritz_images = &mv * &y;

        worst = 0.0;
        for (c, &k) in order.iter().enumerate().take(take) {
            let theta = eig.eigenvalues[k];
            let r = ritz_images.column(c) - theta * ritz.column(c);
            worst = worst.max(r.norm() / theta.abs().max(1.0));
        }
        if take == nev && (worst <= tol || m == n) {
            let values = (0..nev).map(|c| eig.eigenvalues[order[c]]).collect();
            let vectors = ritz.columns(0, nev).into_owned();
            return Ok((values, vectors));
        }
        start = (0..ritz.ncols()).map(|c| ritz.column(c).into_owned()).collect();
        while start.len() < block {
            start.push(DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5));
        }
    }
    Err(Error::NoConvergence(format!(
        "block Krylov residual {worst:e} after {MAX_RESTARTS} restarts"
    )))
}

/// k-means settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares of the kept restart.
    pub inertia: f64,
    pub iterations: usize,
    /// Index of the restart that was kept.
    pub best_restart: usize,
    /// Clusters that ended up with no points.
    pub empty_clusters: Vec<usize>,
    /// Number of distinct points; fewer than `n_c` forces empty clusters.
    pub distinct_points: usize,
}

struct LloydRun {
    labels: Vec<usize>,
    inertia: f64,
    iterations: usize,
    /// Inertia after each assignment step.
    #[cfg_attr(not(test), allow(dead_code))]
    trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, sq_dist(point, &centers[0]));
    for (c, center) in centers.iter().enumerate().skip(1) {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> LloydRun {
    let k = centers.len();
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; points.len()];
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let mut changed = false;
        let mut inertia = 0.0;
        for (label, p) in labels.iter_mut().zip(points) {
            let (c, d) = nearest_center(p, &centers);
            inertia += d;
            if *label != c {
                *label = c;
                changed = true;
            }
        }
        trace.push(inertia);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&c, p) in labels.iter().zip(points) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            // An emptied cluster keeps its previous center.
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = labels
        .iter()
        .zip(points)
        .map(|(&c, p)| sq_dist(p, &centers[c]))
        .sum();
    LloydRun {
        labels,
        inertia,
        iterations,
        trace,
    }
}

/// Best of `restarts` k-means++ / Lloyd runs by within-cluster sum of squares.
///
/// Restart `r` draws from ChaCha8 seeded with `seed` on stream `r`, so results
/// do not depend on how restarts are scheduled; equal objectives keep the
/// lowest restart index.
pub fn kmeans(
    x: &Array2<f64>,
    n_c: usize,
    config: KMeansConfig,
    seed: u64,
) -> Result<KMeansResult> {
    let n = x.nrows();
    if config.restarts == 0 {
        return Err(Error::InvalidParameter("k-means needs at least one restart".into()));
    }
    if n_c == 0 || n_c > n {
        return Err(Error::InvalidParameter(format!(
            "cannot form {n_c} clusters from {n} points"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means input"));
    }
    let points: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();

    let runs: Vec<LloydRun> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let centers = plus_plus_init(&points, n_c, &mut rng);
            lloyd(&points, centers, config.max_iter)
        })
        .collect();
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.inertia < a.1.inertia { b } else { a })
        .expect("at least one restart");

    let mut counts = vec![0usize; n_c];
    for &c in &best.labels {
        counts[c] += 1;
    }
    let mut distinct: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|v| v.to_bits()).collect())
        .collect();
    distinct.sort_unstable();
    distinct.dedup();

    Ok(KMeansResult {
        labels: best.labels,
        inertia: best.inertia,
        iterations: best.iterations,
        best_restart,
        empty_clusters: (0..n_c).filter(|&c| counts[c] == 0).collect(),
        distinct_points: distinct.len(),
    })
}

/// Labels plus diagnostics from [`spectral_cluster`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralClustering {
    pub labels: Vec<usize>,
    pub embedding: Embedding,
    pub kmeans: KMeansResult,
}

/// Embeds `s` with `n_c` eigenvectors and clusters the rows.
pub fn spectral_cluster(
    s: &SparseViewGraph,
    n_c: usize,
    config: KMeansConfig,
    seed: u64,
) -> Result<SpectralClustering> {
    let embedding = spectral_embed(s, n_c)?;
    let km = kmeans(&embedding.rows, n_c, config, seed)?;
    Ok(SpectralClustering {
        labels: km.labels.clone(),
        embedding,
        kmeans: km,
    })
}

//! Per-view kNN graphs over a shared edge set and the multi-view dense
//! representation (MVDR) the optimizer works on.
//!
//! Every view is reduced to the same list of directed node pairs, so all
//! views can be packed into a single `v x n_e` matrix whose columns line up
//! edge-for-edge. The fused graph comes back out through [`scatter_to_sparse`].

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this, a spread or mean is treated as zero.
const DEGENERATE: f64 = 1e-12;

/// Whether edge weights measure closeness or separation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Similarity,
    Distance,
}

/// Pairwise distance used when views are given as feature matrices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 - <x, y> / (|x| |y|)`; a zero vector is at distance 1 from everything.
    Cosine,
}

/// Raw input for one view.
#[derive(Debug, Clone, PartialEq)]
pub enum ViewInput {
    /// Rows are instances, columns are features.
    Features(Array2<f64>),
    /// Precomputed symmetric or asymmetric `n x n` distance matrix.
    Distances(Array2<f64>),
}

impl ViewInput {
    pub fn n_nodes(&self) -> usize {
        match self {
            ViewInput::Features(x) | ViewInput::Distances(x) => x.nrows(),
        }
    }
}

/// Kernel bandwidth for [`gaussian_kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    /// Mean of the graph's edge weights (1 if that mean is numerically zero).
    Mean,
}

/// One view's sparse weighted adjacency.
///
/// Pairs are kept sorted lexicographically, which makes the pairs of a row
/// contiguous and lets two graphs be compared edge-set-wise with `==`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseViewGraph {
    n: usize,
    pairs: Vec<(usize, usize)>,
    weights: Vec<f64>,
    semantics: Semantics,
}

impl SparseViewGraph {
    /// Builds a graph from `((i, j), weight)` entries in any order.
    pub fn new<I>(n: usize, edges: I, semantics: Semantics) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        let mut entries: Vec<((usize, usize), f64)> = edges.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                let (i, j) = w[0].0;
                return Err(Error::DuplicateEdge { i, j });
            }
        }
        let (pairs, weights): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        Self::from_sorted(n, pairs, weights, semantics)
    }

    /// Builds a graph from pairs that are already sorted and unique.
    pub(crate) fn from_sorted(
        n: usize,
        pairs: Vec<(usize, usize)>,
        weights: Vec<f64>,
        semantics: Semantics,
    ) -> Result<Self> {
        if pairs.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} pairs but {} weights",
                pairs.len(),
                weights.len()
            )));
        }
        for (&(i, j), &w) in pairs.iter().zip(&weights) {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidEdge { i, j, n });
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidWeight { i, j, weight: w });
            }
        }
        debug_assert!(pairs.windows(2).all(|p| p[0] < p[1]));
        Ok(Self {
            n,
            pairs,
            weights,
            semantics,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.pairs
            .binary_search(&(i, j))
            .ok()
            .map(|p| self.weights[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.pairs.iter().copied().zip(self.weights.iter().copied())
    }

    /// Offsets such that row `i` occupies `pairs[ptr[i]..ptr[i + 1]]`.
    pub fn row_offsets(&self) -> Vec<usize> {
        let mut ptr = vec![0usize; self.n + 1];
        for &(i, _) in &self.pairs {
            ptr[i + 1] += 1;
        }
        for i in 0..self.n {
            ptr[i + 1] += ptr[i];
        }
        ptr
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n, self.n));
        for ((i, j), w) in self.iter() {
            m[[i, j]] = w;
        }
        m
    }

    /// Largest `|S_ij - S_ji|`, counting a missing entry as zero.
    pub fn max_asymmetry(&self) -> f64 {
        self.iter()
            .map(|((i, j), w)| (w - self.get(j, i).unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }

    fn with_weights(&self, weights: Vec<f64>, semantics: Semantics) -> Result<Self> {
        Self::from_sorted(self.n, self.pairs.clone(), weights, semantics)
    }
}

/// The common list of directed pairs shared by every view (`F`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeIndexSet {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl EdgeIndexSet {
    pub fn new(n: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateEdge {
                    i: w[0].0,
                    j: w[0].1,
                });
            }
        }
        if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= n || j >= n || i == j) {
            return Err(Error::InvalidEdge { i, j, n });
        }
        Ok(Self { n, pairs })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Column of pair `(i, j)` in the dense representation.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.pairs.binary_search(&(i, j)).ok()
    }
}

/// All views packed as rows of one `v x n_e` matrix over a shared [`EdgeIndexSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDenseGraph {
    index: EdgeIndexSet,
    weights: Array2<f64>,
}

impl MultiViewDenseGraph {
    pub fn new(index: EdgeIndexSet, weights: Array2<f64>) -> Result<Self> {
        if weights.ncols() != index.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} columns for {} edges",
                weights.ncols(),
                index.len()
            )));
        }
        if weights.nrows() == 0 {
            return Err(Error::NoViews);
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("view weights"));
        }
        if let Some(((_, col), &w)) = weights.indexed_iter().find(|(_, &w)| w < 0.0) {
            let (i, j) = index.pairs[col];
            return Err(Error::InvalidWeight { i, j, weight: w });
        }
        Ok(Self { index, weights })
    }

    pub fn index(&self) -> &EdgeIndexSet {
        &self.index
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn n_views(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_edges(&self) -> usize {
        self.weights.ncols()
    }

    pub fn into_parts(self) -> (EdgeIndexSet, Array2<f64>) {
        (self.index, self.weights)
    }
}

enum DistanceSource<'a> {
    Matrix(&'a Array2<f64>),
    Features {
        x: &'a Array2<f64>,
        norms: Option<Array1<f64>>,
    },
}

impl<'a> DistanceSource<'a> {
    fn new(view: &'a ViewInput, metric: Metric) -> Result<Self> {
        match view {
            ViewInput::Distances(d) => {
                if d.nrows() != d.ncols() {
                    return Err(Error::ShapeMismatch(format!(
                        "distance matrix is {}x{}",
                        d.nrows(),
                        d.ncols()
                    )));
                }
                if d.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("distance matrix"));
                }
                if let Some(((i, j), &w)) = d.indexed_iter().find(|(_, &w)| w < 0.0) {
                    return Err(Error::InvalidWeight { i, j, weight: w });
                }
                Ok(DistanceSource::Matrix(d))
            }
            ViewInput::Features(x) => {
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("feature matrix"));
                }
                let norms = match metric {
                    Metric::Euclidean => None,
                    Metric::Cosine => Some(x.map_axis(Axis(1), |r| r.dot(&r).sqrt())),
                };
                Ok(DistanceSource::Features { x, norms })
            }
        }
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        match self {
            DistanceSource::Matrix(d) => d[[i, j]],
            DistanceSource::Features { x, norms: None } => {
                euclidean(x.row(i), x.row(j))
            }
            DistanceSource::Features {
                x,
                norms: Some(norms),
            } => {
                let denom = norms[i] * norms[j];
                if denom <= 0.0 {
                    1.0
                } else {
                    (1.0 - x.row(i).dot(&x.row(j)) / denom).max(0.0)
                }
            }
        }
    }

    /// The `k` nearest `j != i`, ties broken by smaller index.
    fn nearest(&self, i: usize, n: usize, k: usize) -> Vec<usize> {
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (self.distance(i, j), j))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
        }
        cand.into_iter().map(|(_, j)| j).collect()
    }
}

fn euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Builds one distance graph per view over the union of every view's directed
/// kNN edges: `(i, j)` is kept when `j` is among the `k` nearest neighbours of
/// `i` in at least one view, and every view then carries its own distance on
/// every kept pair.
pub fn build_shared_knn(
    views: &[ViewInput],
    k: usize,
    metric: Metric,
) -> Result<Vec<SparseViewGraph>> {
    let first = views.first().ok_or(Error::NoViews)?;
    let n = first.n_nodes();
    for (view, input) in views.iter().enumerate() {
        if input.n_nodes() != n {
            return Err(Error::NodeCountMismatch {
                view,
                expected: n,
                found: input.n_nodes(),
            });
        }
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let sources = views
        .iter()
        .map(|v| DistanceSource::new(v, metric))
        .collect::<Result<Vec<_>>>()?;

    let mut pairs: Vec<(usize, usize)> = sources
        .iter()
        .flat_map(|src| {
            (0..n)
                .into_par_iter()
                .flat_map_iter(|i| src.nearest(i, n, k).into_iter().map(move |j| (i, j)))
                .collect::<Vec<_>>()
        })
        .collect();
    pairs.par_sort_unstable();
    pairs.dedup();

    sources
        .iter()
        .map(|src| {
            let weights: Vec<f64> = pairs.par_iter().map(|&(i, j)| src.distance(i, j)).collect();
            SparseViewGraph::from_sorted(n, pairs.clone(), weights, Semantics::Distance)
        })
        .collect()
}

/// Standardizes a kNN distance graph: `d -> max((d - mu) / sigma + 1, 0)` with
/// the population mean and standard deviation of its edges. Edges more than
/// one deviation below the mean collapse to zero. When the edges are all equal
/// (`sigma < 1e-12`) every edge becomes 1.
pub fn normalize_knn_distances(g: &SparseViewGraph) -> Result<SparseViewGraph> {
    expect_semantics(g, Semantics::Distance)?;
    if g.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    let m = g.n_edges() as f64;
    let mu = g.weights.iter().sum::<f64>() / m;
    let sigma = (g.weights.iter().map(|d| (d - mu) * (d - mu)).sum::<f64>() / m).sqrt();
    let weights = if sigma < DEGENERATE {
        vec![1.0; g.n_edges()]
    } else {
        g.weights
            .iter()
            .map(|d| ((d - mu) / sigma + 1.0).max(0.0))
            .collect()
    };
    g.with_weights(weights, Semantics::Distance)
}

/// Bandwidth from the mean of `values`, falling back to 1 for a zero mean.
pub fn mean_bandwidth(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyEdgeSet);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(if mean < DEGENERATE { 1.0 } else { mean })
}

/// `exp(-d^2 / (2 rho^2))`.
pub fn gaussian_similarity(d: f64, rho: f64) -> f64 {
    (-(d * d) / (2.0 * rho * rho)).exp()
}

/// Turns a distance graph into a similarity graph with a Gaussian kernel.
pub fn gaussian_kernel(g: &SparseViewGraph, bandwidth: Bandwidth) -> Result<SparseViewGraph> {
    expect_semantics(g, Semantics::Distance)?;
    let rho = match bandwidth {
        Bandwidth::Fixed(rho) if rho.is_finite() && rho > 0.0 => rho,
        Bandwidth::Fixed(rho) => {
            return Err(Error::InvalidParameter(format!(
                "kernel bandwidth must be positive, got {rho}"
            )))
        }
        Bandwidth::Mean => mean_bandwidth(&g.weights)?,
    };
    let weights = g
        .weights
        .iter()
        .map(|&d| gaussian_similarity(d, rho))
        .collect();
    g.with_weights(weights, Semantics::Similarity)
}

/// Packs views that share one edge set into the dense representation.
pub fn build_mvdr(views: &[SparseViewGraph]) -> Result<MultiViewDenseGraph> {
    let first = views.first().ok_or(Error::NoViews)?;
    let n = first.n_nodes();
    for (view, g) in views.iter().enumerate().skip(1) {
        if g.n_nodes() != n {
            return Err(Error::NodeCountMismatch {
                view,
                expected: n,
                found: g.n_nodes(),
            });
        }
        if g.pairs != first.pairs {
            return Err(Error::EdgeSetMismatch { view });
        }
    }
    let n_e = first.n_edges();
    let mut weights = Array2::zeros((views.len(), n_e));
    for (mut row, g) in weights.axis_iter_mut(Axis(0)).zip(views) {
        row.assign(&ArrayView1::from(g.weights.as_slice()));
    }
    let index = EdgeIndexSet {
        n,
        pairs: first.pairs.clone(),
    };
    MultiViewDenseGraph::new(index, weights)
}

/// Divides every view's row by its sum.
pub fn row_normalize(mv: &MultiViewDenseGraph) -> Result<MultiViewDenseGraph> {
    let mut weights = mv.weights.clone();
    for (row, mut r) in weights.axis_iter_mut(Axis(0)).enumerate() {
        let total = r.sum();
        if !(total > 0.0) {
            return Err(Error::ZeroRow { row });
        }
        r.mapv_inplace(|w| w / total);
    }
    Ok(MultiViewDenseGraph {
        index: mv.index.clone(),
        weights,
    })
}

/// Inverse of the dense packing for a single row vector.
pub fn scatter_to_sparse(
    s: &[f64],
    index: &EdgeIndexSet,
    semantics: Semantics,
) -> Result<SparseViewGraph> {
    if s.len() != index.len() {
        return Err(Error::ShapeMismatch(format!(
            "vector of length {} for {} edges",
            s.len(),
            index.len()
        )));
    }
    SparseViewGraph::from_sorted(index.n, index.pairs.clone(), s.to_vec(), semantics)
}

/// Keeps the `k` largest entries of every row (ties broken by smaller column).
pub fn keep_largest_per_row(g: &SparseViewGraph, k: usize) -> SparseViewGraph {
    let ptr = g.row_offsets();
    let mut pairs = Vec::with_capacity(g.n * k.min(g.n));
    let mut weights = Vec::with_capacity(pairs.capacity());
    for i in 0..g.n {
        let range = ptr[i]..ptr[i + 1];
        let mut row: Vec<usize> = range.collect();
        if row.len() > k {
            // Sorted by descending weight, then ascending column.
            row.sort_by(|&a, &b| {
                g.weights[b]
                    .total_cmp(&g.weights[a])
                    .then(g.pairs[a].1.cmp(&g.pairs[b].1))
            });
            row.truncate(k);
            row.sort_unstable();
        }
        for p in row {
            pairs.push(g.pairs[p]);
            weights.push(g.weights[p]);
        }
    }
    SparseViewGraph {
        n: g.n,
        pairs,
        weights,
        semantics: g.semantics,
    }
}

/// `(S + S^T) / 2` over the union of both structures.
pub fn symmetrize_average(g: &SparseViewGraph) -> SparseViewGraph {
    let mut entries: Vec<((usize, usize), f64)> = Vec::with_capacity(2 * g.n_edges());
    for ((i, j), w) in g.iter() {
        entries.push(((i, j), 0.5 * w));
        entries.push(((j, i), 0.5 * w));
    }
    entries.sort_by_key(|e| e.0);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(entries.len());
    let mut weights: Vec<f64> = Vec::with_capacity(entries.len());
    for (pair, w) in entries {
        match pairs.last() {
            Some(&last) if last == pair => *weights.last_mut().expect("paired") += w,
            _ => {
                pairs.push(pair);
                weights.push(w);
            }
        }
    }
    SparseViewGraph {
        n: g.n,
        pairs,
        weights,
        semantics: g.semantics,
    }
}

fn expect_semantics(g: &SparseViewGraph, want: Semantics) -> Result<()> {
    if g.semantics == want {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "expected a {want:?} graph, got {:?}",
            g.semantics
        )))
    }
}

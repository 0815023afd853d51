//! Independent reference implementations used by the oracle and acceptance
//! tests. Nothing here calls into the solver code under test.

#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

/// Uniform point on the probability simplex (normalized exponentials).
pub fn simplex_point(rng: &mut ChaCha8Rng, v: usize) -> Array1<f64> {
    let e: Vec<f64> = (0..v).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    Array1::from_iter(e.into_iter().map(|x| x / total))
}

/// Random PSD matrix `M'M` with Gaussian-ish entries.
pub fn random_psd(rng: &mut ChaCha8Rng, v: usize) -> Array2<f64> {
    let m = uniform_matrix(rng, v, v, -1.0, 1.0);
    m.t().dot(&m)
}

pub fn to_nalgebra(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

pub fn largest_eigenvalue(m: &Array2<f64>) -> f64 {
    to_nalgebra(m).symmetric_eigen().eigenvalues.max()
}

/// Global minimum of `1/2 a'Ha - c'a` over the simplex for PSD `H`, by
/// solving the equality-constrained KKT system on every face and keeping
/// the feasible solutions.
pub fn simplex_qp_oracle(h: &Array2<f64>, c: &Array1<f64>) -> f64 {
    let v = c.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << v) {
        let support: Vec<usize> = (0..v).filter(|&i| mask & (1 << i) != 0).collect();
        let m = support.len();
        let mut kkt = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[(a, b)] = h[[i, j]];
            }
            kkt[(a, m)] = 1.0;
            kkt[(m, a)] = 1.0;
            rhs[a] = c[i];
        }
        rhs[m] = 1.0;
        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        if (0..m).any(|a| sol[a] < -1e-12 || !sol[a].is_finite()) {
            continue;
        }
        let mut x = Array1::zeros(v);
        for (a, &i) in support.iter().enumerate() {
            x[i] = sol[a].max(0.0);
        }
        let f = 0.5 * x.dot(&h.dot(&x)) - c.dot(&x);
        best = best.min(f);
    }
    best
}

/// Minimum of `1/2 x'Dx - l'x` over the grid `{0, step, ..} x {0, step, ..}`
/// clipped to the box `[0, u]` (upper bounds included).
pub fn box_grid_oracle_2d(d: &Array2<f64>, l: [f64; 2], u: [f64; 2], step: f64) -> f64 {
    let axis = |hi: f64| {
        let n = (hi / step).floor() as usize;
        let mut pts: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
        if pts.last().is_some_and(|&p| p < hi) {
            pts.push(hi);
        }
        pts
    };
    let mut best = f64::INFINITY;
    for &x in &axis(u[0]) {
        for &y in &axis(u[1]) {
            let f = 0.5 * (d[[0, 0]] * x * x + 2.0 * d[[0, 1]] * x * y + d[[1, 1]] * y * y)
                - l[0] * x
                - l[1] * y;
            best = best.min(f);
        }
    }
    best
}

/// The fusion objective evaluated term by term with explicit loops.
pub fn objective_oracle(
    w: &Array2<f64>,
    a: &Array2<f64>,
    alpha: &[f64],
    s: &[f64],
    lambda: &[f64],
    beta: f64,
    gamma: f64,
) -> f64 {
    let (v, n_e) = w.dim();
    let mut f = 0.0;
    for i in 0..v {
        for j in 0..n_e {
            let r = alpha[i] * a[[i, j]] - s[j];
            f += lambda[i] * r * r;
        }
    }
    for i in 0..v {
        for l in 0..v {
            let b = if i == l { beta } else { gamma };
            let mut inner = 0.0;
            for j in 0..n_e {
                inner += (w[[i, j]] - a[[i, j]]) * (w[[l, j]] - a[[l, j]]);
            }
            f += b * lambda[i] * lambda[l] * alpha[i] * alpha[l] * inner;
        }
    }
    f
}

type Counts<K> = HashMap<K, f64>;

/// Joint and marginal label counts from scratch.
fn joint_counts(pred: &[usize], truth: &[usize]) -> (Counts<(usize, usize)>, Counts<usize>, Counts<usize>) {
    let mut joint = HashMap::new();
    let mut rows = HashMap::new();
    let mut cols = HashMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *joint.entry((p, t)).or_insert(0.0) += 1.0;
        *rows.entry(p).or_insert(0.0) += 1.0;
        *cols.entry(t).or_insert(0.0) += 1.0;
    }
    (joint, rows, cols)
}

pub fn nmi_oracle(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let (joint, rows, cols) = joint_counts(pred, truth);
    if rows.len() == 1 || cols.len() == 1 {
        return if rows.len() == cols.len() { 1.0 } else { 0.0 };
    }
    let h = |m: &HashMap<usize, f64>| -> f64 { m.values().map(|&c| -(c / n) * (c / n).ln()).sum() };
    let mi: f64 = joint
        .iter()
        .map(|(&(p, t), &c)| (c / n) * ((c / n) / ((rows[&p] / n) * (cols[&t] / n))).ln())
        .sum();
    mi / (h(&rows) * h(&cols)).sqrt()
}

/// Rand-index style counts by enumerating all pairs.
pub fn ari_oracle(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len();
    let (mut both, mut same_pred, mut same_truth) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let p = pred[i] == pred[j];
            let t = truth[i] == truth[j];
            both += f64::from(u8::from(p && t));
            same_pred += f64::from(u8::from(p));
            same_truth += f64::from(u8::from(t));
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let expected = same_pred * same_truth / pairs;
    let max = 0.5 * (same_pred + same_truth);
    if max == expected {
        return if both == same_pred && both == same_truth { 1.0 } else { 0.0 };
    }
    (both - expected) / (max - expected)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best accuracy over every injective relabeling (factorial enumeration).
pub fn acc_oracle(pred: &[usize], truth: &[usize]) -> f64 {
    let mut p_ids: Vec<usize> = pred.to_vec();
    p_ids.sort_unstable();
    p_ids.dedup();
    let mut t_ids: Vec<usize> = truth.to_vec();
    t_ids.sort_unstable();
    t_ids.dedup();
    let k = p_ids.len().max(t_ids.len());
    let mut best = 0usize;
    for perm in permutations(k) {
        // Predicted id p_ids[a] maps to true id t_ids[perm[a]] when both exist.
        let hits = pred
            .iter()
            .zip(truth)
            .filter(|&(p, t)| {
                let a = p_ids.binary_search(p).unwrap();
                t_ids.get(perm[a]) == Some(t)
            })
            .count();
        best = best.max(hits);
    }
    best as f64 / pred.len() as f64
}

pub fn purity_oracle(pred: &[usize], truth: &[usize]) -> f64 {
    let (joint, rows, _) = joint_counts(pred, truth);
    let hits: f64 = rows
        .keys()
        .map(|&p| {
            joint
                .iter()
                .filter(|&(&(q, _), _)| q == p)
                .map(|(_, &c)| c)
                .fold(0.0, f64::max)
        })
        .sum();
    hits / pred.len() as f64
}

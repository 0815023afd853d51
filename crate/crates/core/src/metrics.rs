//! Partition agreement scores: NMI, ARI, accuracy under the best one-to-one
//! label matching, and purity.
//!
//! Labels are arbitrary `usize` ids; only the partition they induce matters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of points per (predicted, true) cluster pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    n: u64,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch(pred.len(), truth.len()));
        }
        let rows = dense_ids(pred);
        let cols = dense_ids(truth);
        let n_rows = rows.iter().copied().max().map_or(0, |m| m + 1);
        let n_cols = cols.iter().copied().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0u64; n_cols]; n_rows];
        for (&r, &c) in rows.iter().zip(&cols) {
            counts[r][c] += 1;
        }
        Ok(Self {
            counts,
            n: pred.len() as u64,
        })
    }

    /// `counts[predicted][true]`.
    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.n
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let n_cols = self.counts.first().map_or(0, Vec::len);
        (0..n_cols)
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }
}

/// Maps ids to `0..k` in increasing id order.
fn dense_ids(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    for &l in labels {
        map.entry(l).or_insert(0usize);
    }
    for (k, v) in map.values_mut().enumerate() {
        *v = k;
    }
    labels.iter().map(|l| map[l]).collect()
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the geometric mean of the two entropies.
///
/// If either partition has a single cluster the score is 1 when both do (the
/// partitions then coincide) and 0 otherwise.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.n == 0 {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    let n = table.n as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let (h_pred, h_true) = (entropy(&rows, n), entropy(&cols, n));
    if rows.len() == 1 || cols.len() == 1 {
        return Ok(if rows.len() == cols.len() { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (r, row) in table.counts.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            if count > 0 {
                let joint = count as f64;
                mi += joint / n * ((n * joint) / (rows[r] as f64 * cols[c] as f64)).ln();
            }
        }
    }
    Ok((mi / (h_pred * h_true).sqrt()).clamp(0.0, 1.0))
}

fn choose2(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index (pair counting, corrected for chance).
///
/// When the chance-corrected denominator vanishes (both partitions trivial)
/// the score is 1 for identical partitions and 0 otherwise.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.n < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: table.n as usize,
        });
    }
    let index: f64 = table.counts.iter().flatten().map(|&c| choose2(c)).sum();
    let a: f64 = table.row_sums().into_iter().map(choose2).sum();
    let b: f64 = table.col_sums().into_iter().map(choose2).sum();
    let expected = a * b / choose2(table.n);
    let max = 0.5 * (a + b);
    if max == expected {
        return Ok(if index == a && index == b { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Fraction of points matched under the best one-to-one mapping of
/// predicted clusters to true classes.
pub fn acc(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.n == 0 {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    let matched = max_weight_matching(&table.counts);
    Ok(matched as f64 / table.n as f64)
}

/// Sum over predicted clusters of their largest true-class count, over `n`.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.n == 0 {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    let hits: u64 = table
        .counts
        .iter()
        .map(|r| r.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / table.n as f64)
}

/// All four scores at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringScores {
    pub nmi: f64,
    pub ari: f64,
    pub acc: f64,
    pub purity: f64,
}

pub fn score_all(pred: &[usize], truth: &[usize]) -> Result<ClusteringScores> {
    Ok(ClusteringScores {
        nmi: nmi(pred, truth)?,
        ari: ari(pred, truth)?,
        acc: acc(pred, truth)?,
        purity: purity(pred, truth)?,
    })
}

/// Maximum total weight of a one-to-one row/column assignment.
///
/// Hungarian algorithm (potentials form) on the square-padded cost matrix
/// `max - w`.
pub fn max_weight_matching(weights: &[Vec<u64>]) -> u64 {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let size = rows.max(cols);
    if size == 0 {
        return 0;
    }
    let top = weights.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost = |r: usize, c: usize| -> i64 {
        let w = if r < rows && c < cols { weights[r][c] as i64 } else { 0 };
        top - w
    };
    let assignment = hungarian_min(size, cost);
    assignment
        .iter()
        .enumerate()
        .filter(|&(r, &c)| r < rows && c < cols)
        .map(|(r, &c)| weights[r][c])
        .sum()
}

/// Minimum-cost perfect assignment on a `size x size` matrix; returns the
/// column assigned to each row.
fn hungarian_min(size: usize, cost: impl Fn(usize, usize) -> i64) -> Vec<usize> {
    const INF: i64 = i64::MAX / 4;
    // 1-based with a sentinel column 0.
    let mut u = vec![0i64; size + 1];
    let mut v = vec![0i64; size + 1];
    let mut p = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=size {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; size];
    for j in 1..=size {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

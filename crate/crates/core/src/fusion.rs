//! Consistent graph learning.
//!
//! Every view `W_i` (one row of the dense representation) is split into a
//! consistent part `A_i` (with `0 <= A_i <= W_i`) and an inconsistent part
//! `E_i = W_i - A_i`. The fused graph `s`, view weights `alpha` (on the
//! simplex) and the consistent parts minimize
//!
//! ```text
//! f = sum_i lambda_i |alpha_i A_i - s|^2
//!   + sum_{i,l} B_il lambda_i lambda_l alpha_i alpha_l <E_i, E_l>
//! ```
//!
//! where `B` has `beta` on the diagonal and `gamma` elsewhere. `B` is never
//! materialized. The optimizer alternates three exact or descent steps:
//! a simplex QP in `alpha` (away-step Frank-Wolfe), a closed form for `s`,
//! and a batch of box QPs in `A` sharing one Hessian (DCA).

use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{row_normalize, MultiViewDenseGraph};
use crate::qpsolvers::{
    afw_solve, dca_solve, BatchBoxQp, SimplexQp, DEFAULT_AFW_EPS, DEFAULT_AFW_MAX_ITER,
    DEFAULT_DCA_ITERS,
};

/// Weights and stopping rules for [`learn_consistent_graph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionParams {
    /// Penalty on the magnitude of each view's inconsistent part.
    pub beta: f64,
    /// Penalty on inconsistent parts that overlap across views.
    pub gamma: f64,
    /// Per-view importance, all strictly positive. Empty means 1 for every view.
    pub lambda: Vec<f64>,
    pub max_outer: usize,
    /// Stop once `|f_prev - f| / max(1, f_prev) < rel_tol`.
    pub rel_tol: f64,
    pub afw_eps: f64,
    pub afw_max_iter: usize,
    pub dca_iters: usize,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            gamma: 1e4,
            lambda: Vec::new(),
            max_outer: 50,
            rel_tol: 1e-6,
            afw_eps: DEFAULT_AFW_EPS,
            afw_max_iter: DEFAULT_AFW_MAX_ITER,
            dca_iters: DEFAULT_DCA_ITERS,
        }
    }
}

impl FusionParams {
    pub fn with_penalties(beta: f64, gamma: f64) -> Self {
        Self {
            beta,
            gamma,
            ..Self::default()
        }
    }

    /// The view weights for `v` views, validated.
    pub fn lambda_for(&self, v: usize) -> Result<Array1<f64>> {
        let lambda = if self.lambda.is_empty() {
            Array1::ones(v)
        } else if self.lambda.len() == v {
            Array1::from(self.lambda.clone())
        } else {
            return Err(Error::ShapeMismatch(format!(
                "{} view weights for {v} views",
                self.lambda.len()
            )));
        };
        if lambda.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidParameter(
                "every lambda must be finite and > 0".into(),
            ));
        }
        Ok(lambda)
    }

    fn validate(&self) -> Result<()> {
        for (name, x) in [("beta", self.beta), ("gamma", self.gamma)] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {x}"
                )));
            }
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be >= 0".into()));
        }
        if !(self.afw_eps > 0.0) {
            return Err(Error::InvalidParameter("afw_eps must be > 0".into()));
        }
        if self.dca_iters == 0 {
            return Err(Error::InvalidParameter("dca_iters must be >= 1".into()));
        }
        Ok(())
    }

    fn coupling(&self, i: usize, l: usize) -> f64 {
        if i == l {
            self.beta
        } else {
            self.gamma
        }
    }
}

/// The optimization variables over the dense representation.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionState {
    /// Consistent parts, `v x n_e`.
    pub consistent: Array2<f64>,
    /// View weights on the simplex.
    pub alpha: Array1<f64>,
    /// Fused edge weights, one per edge of the shared index set.
    pub fused: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult {
    pub state: FusionState,
    /// Row-normalized view weights the optimizer actually ran on.
    pub normalized: Array2<f64>,
    /// Objective before the first sweep.
    pub initial_objective: f64,
    /// Objective after each full `(alpha, s, A)` sweep.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn check_shapes(w: &Array2<f64>, state: &FusionState, lambda: &Array1<f64>) -> Result<()> {
    let (v, n_e) = w.dim();
    if state.consistent.dim() != (v, n_e)
        || state.alpha.len() != v
        || state.fused.len() != n_e
        || lambda.len() != v
    {
        return Err(Error::ShapeMismatch(format!(
            "W {:?}, A {:?}, alpha {}, s {}, lambda {}",
            w.dim(),
            state.consistent.dim(),
            state.alpha.len(),
            state.fused.len(),
            lambda.len()
        )));
    }
    Ok(())
}

/// Gram matrix `E E'` of the inconsistent parts.
fn inconsistency_gram(w: &Array2<f64>, a: &Array2<f64>) -> Array2<f64> {
    let e = w - a;
    e.dot(&e.t())
}

/// Objective value of `state` for view weights `w` (already normalized as the
/// optimizer sees them).
pub fn objective_value(w: &Array2<f64>, state: &FusionState, params: &FusionParams) -> Result<f64> {
    let lambda = params.lambda_for(w.nrows())?;
    check_shapes(w, state, &lambda)?;
    let mut consistency = 0.0;
    for (i, row) in state.consistent.axis_iter(Axis(0)).enumerate() {
        let alpha = state.alpha[i];
        let dev: f64 = row
            .iter()
            .zip(state.fused.iter())
            .map(|(&a, &s)| (alpha * a - s) * (alpha * a - s))
            .sum();
        consistency += lambda[i] * dev;
    }
    let t = &lambda * &state.alpha;
    let gram = inconsistency_gram(w, &state.consistent);
    let mut inconsistency = 0.0;
    for i in 0..w.nrows() {
        for l in 0..w.nrows() {
            inconsistency += params.coupling(i, l) * (t[i] * t[l]) * gram[[i, l]];
        }
    }
    Ok(consistency + inconsistency)
}

/// The `alpha` subproblem `q(alpha) = 1/2 alpha'H alpha - c'alpha` with
/// `H = 2 (T + P)`, `T = diag(lambda_i |A_i|^2)`,
/// `P_il = B_il lambda_i lambda_l <E_i, E_l>` and `c_i = 2 lambda_i <A_i, s>`.
/// `q` differs from the objective by a term independent of `alpha`.
pub fn assemble_alpha_qp(
    w: &Array2<f64>,
    consistent: &Array2<f64>,
    fused: ArrayView1<f64>,
    params: &FusionParams,
) -> Result<SimplexQp> {
    let v = w.nrows();
    let lambda = params.lambda_for(v)?;
    if consistent.dim() != w.dim() || fused.len() != w.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "W {:?}, A {:?}, s {}",
            w.dim(),
            consistent.dim(),
            fused.len()
        )));
    }
    let gram = inconsistency_gram(w, consistent);
    let mut hessian = Array2::zeros((v, v));
    for i in 0..v {
        for l in 0..v {
            hessian[[i, l]] = 2.0 * params.coupling(i, l) * (lambda[i] * lambda[l]) * gram[[i, l]];
        }
        let h = consistent.row(i).dot(&consistent.row(i));
        hessian[[i, i]] += 2.0 * lambda[i] * h;
    }
    let linear = Array1::from_shape_fn(v, |i| 2.0 * lambda[i] * consistent.row(i).dot(&fused));
    SimplexQp::new(hessian, linear)
}

/// Closed-form minimizer over `s`: `s = t'A` with `t = lambda o alpha / sum(lambda)`.
pub fn update_s(
    consistent: &Array2<f64>,
    alpha: ArrayView1<f64>,
    lambda: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    let v = consistent.nrows();
    if alpha.len() != v || lambda.len() != v {
        return Err(Error::ShapeMismatch(format!(
            "A has {v} rows, alpha {}, lambda {}",
            alpha.len(),
            lambda.len()
        )));
    }
    let total: f64 = lambda.sum();
    let t = Zip::from(&lambda)
        .and(&alpha)
        .map_collect(|&l, &a| l * a / total);
    Ok(t.dot(consistent))
}

/// The `A` subproblem: one box QP per edge, all with Hessian `D = 2 (Q + K)`
/// where `Q = diag(lambda_i alpha_i^2)` and `K_il = B_il t_i t_l`,
/// `t = lambda o alpha`. Linear terms are `L = 2 (t s' + K W)`; upper bounds `W`.
pub fn assemble_a_qp(
    w: &Array2<f64>,
    alpha: ArrayView1<f64>,
    fused: ArrayView1<f64>,
    params: &FusionParams,
) -> Result<BatchBoxQp> {
    let v = w.nrows();
    let lambda = params.lambda_for(v)?;
    if alpha.len() != v || fused.len() != w.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "W {:?}, alpha {}, s {}",
            w.dim(),
            alpha.len(),
            fused.len()
        )));
    }
    let t = &lambda * &alpha;
    let k = Array2::from_shape_fn((v, v), |(i, l)| params.coupling(i, l) * (t[i] * t[l]));
    let mut hessian = 2.0 * &k;
    for i in 0..v {
        hessian[[i, i]] += 2.0 * lambda[i] * alpha[i] * alpha[i];
    }
    let outer = t
        .view()
        .insert_axis(Axis(1))
        .dot(&fused.insert_axis(Axis(0)));
    let linear = 2.0 * (outer + k.dot(w));
    BatchBoxQp::new(hessian, linear, w.clone())
}

/// Alternating minimization over `(alpha, s, A)`.
///
/// Views are row-normalized first, then `A = W`, `alpha = 1/v` and `s` is set
/// by its closed form. Each sweep warm-starts Frank-Wolfe at the current
/// `alpha`, refreshes `s` and runs DCA from the current `A`; the objective is
/// recorded after every sweep.
pub fn learn_consistent_graph(
    mv: &MultiViewDenseGraph,
    params: &FusionParams,
) -> Result<FusionResult> {
    params.validate()?;
    let v = mv.n_views();
    let lambda = params.lambda_for(v)?;
    let w = row_normalize(mv)?.into_parts().1;

    let mut state = FusionState {
        consistent: w.clone(),
        alpha: Array1::from_elem(v, 1.0 / v as f64),
        fused: Array1::zeros(w.ncols()),
    };
    state.fused = update_s(&state.consistent, state.alpha.view(), lambda.view())?;
    let initial_objective = objective_value(&w, &state, params)?;

    let mut trace = Vec::with_capacity(params.max_outer);
    let mut previous = initial_objective;
    let mut converged = false;
    for _ in 0..params.max_outer {
        let qp = assemble_alpha_qp(&w, &state.consistent, state.fused.view(), params)?;
        state.alpha = afw_solve(&qp, state.alpha.view(), params.afw_eps, params.afw_max_iter)?.alpha;

        state.fused = update_s(&state.consistent, state.alpha.view(), lambda.view())?;

        let batch = assemble_a_qp(&w, state.alpha.view(), state.fused.view(), params)?;
        state.consistent = dca_solve(&batch, &state.consistent, params.dca_iters)?;

        let f = objective_value(&w, &state, params)?;
        trace.push(f);
        if (previous - f).abs() / previous.max(1.0) < params.rel_tol {
            converged = true;
            break;
        }
        previous = f;
    }

    Ok(FusionResult {
        iterations: trace.len(),
        state,
        normalized: w,
        initial_objective,
        objective_trace: trace,
        converged,
    })
}

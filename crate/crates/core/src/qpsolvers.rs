//! Quadratic-program kernels used by the alternating optimizer.
//!
//! * [`afw_solve`]: away-step Frank-Wolfe for `min 1/2 a'Ha - c'a` over the
//!   probability simplex, with exact line search.
//! * [`dca_solve`]: a batch of box-constrained QPs `min 1/2 x'Dx - l'x`,
//!   `0 <= x <= u`, that share one Hessian `D`, solved together by the
//!   `rho I - D` splitting of DCA. `D` may be indefinite.
//! * [`largest_eigenvalue`]: cyclic Jacobi on the tiny `v x v` Hessians.

use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};

use crate::error::{Error, Result};

/// Symmetry tolerance, relative to the largest entry magnitude.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Tolerance for `sum(alpha) == 1` on inputs.
pub const SIMPLEX_TOL: f64 = 1e-10;

pub const DEFAULT_AFW_EPS: f64 = 1e-8;
pub const DEFAULT_AFW_MAX_ITER: usize = 1000;
pub const DEFAULT_DCA_ITERS: usize = 3;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

fn check_square_symmetric(m: &Array2<f64>, what: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{what} is {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    let scale = m.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

fn max_asymmetry(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
///
/// Intended for the small dense matrices of this crate (one row per view).
pub fn symmetric_eigenvalues(m: &Array2<f64>, tol: f64) -> Result<Vec<f64>> {
    check_square_symmetric(m, "matrix")?;
    let n = m.nrows();
    let mut a = m.clone();
    // Work on the exactly symmetric part.
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = avg;
            a[[j, i]] = avg;
        }
    }
    let off_norm = |a: &Array2<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[[i, j]] * a[[i, j]];
                }
            }
        }
        s.sqrt()
    };
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = f64::EPSILON * frob;

    for _sweep in 0..100 {
        if off_norm(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eig: Vec<f64> = a.diag().to_vec();
    eig.sort_by(f64::total_cmp);
    let scale = eig.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let residual = off_norm(&a);
    if residual > tol * scale {
        return Err(Error::NoConvergence(format!(
            "Jacobi off-diagonal norm {residual:e} after 100 sweeps"
        )));
    }
    Ok(eig)
}

/// Largest eigenvalue of a symmetric matrix, accurate to `tol * max(1, |lambda_max|)`.
pub fn largest_eigenvalue(m: &Array2<f64>, tol: f64) -> Result<f64> {
    if m.nrows() == 0 {
        return Err(Error::ShapeMismatch("empty matrix".into()));
    }
    let eig = symmetric_eigenvalues(m, tol)?;
    Ok(*eig.last().expect("non-empty"))
}

/// A standard quadratic program `min 1/2 a'Ha - c'a` over the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexQp {
    hessian: Array2<f64>,
    linear: Array1<f64>,
}

impl SimplexQp {
    pub fn new(hessian: Array2<f64>, linear: Array1<f64>) -> Result<Self> {
        check_square_symmetric(&hessian, "simplex QP Hessian")?;
        if linear.len() != hessian.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "linear term of length {} for a {}x{} Hessian",
                linear.len(),
                hessian.nrows(),
                hessian.ncols()
            )));
        }
        if linear.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("simplex QP linear term"));
        }
        Ok(Self { hessian, linear })
    }

    pub fn hessian(&self) -> &Array2<f64> {
        &self.hessian
    }

    pub fn linear(&self) -> &Array1<f64> {
        &self.linear
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, alpha: ArrayView1<f64>) -> f64 {
        0.5 * alpha.dot(&self.hessian.dot(&alpha)) - alpha.dot(&self.linear)
    }

    pub fn gradient(&self, alpha: ArrayView1<f64>) -> Array1<f64> {
        self.hessian.dot(&alpha) - &self.linear
    }
}

/// Result of [`afw_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct AfwSolution {
    pub alpha: Array1<f64>,
    pub iterations: usize,
    /// Frank-Wolfe gap `-g'd` at the returned point (last chosen direction).
    pub gap: f64,
    pub converged: bool,
}

fn on_simplex(alpha: ArrayView1<f64>) -> bool {
    alpha.iter().all(|&a| a.is_finite() && a >= 0.0) && (alpha.sum() - 1.0).abs() <= SIMPLEX_TOL
}

/// Step size minimizing `1/2 eta^2 d'Hd + eta g'd` on `(0, eta_max]`.
///
/// Concave or flat curvature along `d` sends the step to the boundary.
pub fn exact_line_search(
    hessian: &Array2<f64>,
    gradient: ArrayView1<f64>,
    direction: ArrayView1<f64>,
    eta_max: f64,
) -> Result<f64> {
    let curvature = direction.dot(&hessian.dot(&direction));
    let slope = gradient.dot(&direction);
    step_along(curvature, slope, eta_max)
}

fn step_along(curvature: f64, slope: f64, eta_max: f64) -> Result<f64> {
    if !(eta_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "maximum step must be positive, got {eta_max}"
        )));
    }
    if curvature <= 0.0 {
        return Ok(eta_max);
    }
    Ok((-slope / curvature).min(eta_max))
}

/// Away-step Frank-Wolfe with exact line search.
///
/// Each iteration compares the Frank-Wolfe vertex (smallest gradient entry)
/// with the away vertex (largest gradient entry on the support), moves along
/// whichever direction promises more decrease and stops once the chosen
/// direction's gap `-g'd` is at most `eps`. Gradient ties go to the smallest
/// index. An away step from a single-atom support is never taken since its
/// maximal step `a_j / (1 - a_j)` is undefined there.
pub fn afw_solve(
    qp: &SimplexQp,
    alpha0: ArrayView1<f64>,
    eps: f64,
    max_iter: usize,
) -> Result<AfwSolution> {
    if alpha0.len() != qp.dim() {
        return Err(Error::ShapeMismatch(format!(
            "start of length {} for a {}-dimensional QP",
            alpha0.len(),
            qp.dim()
        )));
    }
    if !on_simplex(alpha0) {
        return Err(Error::OffSimplex);
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }

    let h = &qp.hessian;
    let mut alpha = alpha0.to_owned();
    let mut gap = f64::INFINITY;
    for iter in 0..max_iter {
        let g = qp.gradient(alpha.view());

        let fw = argmin(g.view());
        let mut d_fw = -&alpha;
        d_fw[fw] += 1.0;
        let fw_gap = -g.dot(&d_fw);

        let away = (0..alpha.len())
            .filter(|&j| alpha[j] > 0.0)
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if g[b] >= g[j] => Some(b),
                _ => Some(j),
            })
            .expect("simplex point has non-empty support");
        let mut d_away = alpha.clone();
        d_away[away] -= 1.0;
        let away_gap = -g.dot(&d_away);

        let use_fw = fw_gap >= away_gap || alpha[away] >= 1.0;
        let (d, eta_max, dir_gap) = if use_fw {
            (d_fw, 1.0, fw_gap)
        } else {
            (d_away, alpha[away] / (1.0 - alpha[away]), away_gap)
        };
        gap = dir_gap;
        if dir_gap <= eps {
            return Ok(AfwSolution {
                alpha,
                iterations: iter,
                gap,
                converged: true,
            });
        }

        let eta = step_along(d.dot(&h.dot(&d)), -dir_gap, eta_max)?;
        alpha.scaled_add(eta, &d);
        if use_fw && eta == 1.0 {
            alpha.fill(0.0);
            alpha[fw] = 1.0;
        } else if !use_fw && eta == eta_max {
            // Drop step: the away vertex leaves the support.
            alpha[away] = 0.0;
        }
        alpha.mapv_inplace(|a| a.max(0.0));
    }
    Ok(AfwSolution {
        alpha,
        iterations: max_iter,
        gap,
        converged: false,
    })
}

fn argmin(x: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate().skip(1) {
        if v < x[best] {
            best = i;
        }
    }
    best
}

/// `n_e` box-constrained QPs sharing one Hessian, one per column of
/// `linear` / `upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchBoxQp {
    hessian: Array2<f64>,
    linear: Array2<f64>,
    upper: Array2<f64>,
}

impl BatchBoxQp {
    pub fn new(hessian: Array2<f64>, linear: Array2<f64>, upper: Array2<f64>) -> Result<Self> {
        check_square_symmetric(&hessian, "batch QP Hessian")?;
        let v = hessian.nrows();
        if linear.nrows() != v || linear.dim() != upper.dim() {
            return Err(Error::ShapeMismatch(format!(
                "Hessian {v}x{v}, linear {:?}, upper {:?}",
                linear.dim(),
                upper.dim()
            )));
        }
        if linear.iter().chain(upper.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("batch QP coefficients"));
        }
        if upper.iter().any(|&u| u < 0.0) {
            return Err(Error::InvalidParameter(
                "upper bounds must be nonnegative".into(),
            ));
        }
        Ok(Self {
            hessian,
            linear,
            upper,
        })
    }

    pub fn hessian(&self) -> &Array2<f64> {
        &self.hessian
    }

    pub fn linear(&self) -> &Array2<f64> {
        &self.linear
    }

    pub fn upper(&self) -> &Array2<f64> {
        &self.upper
    }

    /// `1/2 x'Dx - l'x` for every column `x` of `a`.
    pub fn column_objectives(&self, a: &Array2<f64>) -> Array1<f64> {
        let da = self.hessian.dot(a);
        let mut out = Array1::zeros(a.ncols());
        Zip::from(&mut out)
            .and(a.axis_iter(Axis(1)))
            .and(da.axis_iter(Axis(1)))
            .and(self.linear.axis_iter(Axis(1)))
            .for_each(|o, x, dx, l| *o = 0.5 * x.dot(&dx) - l.dot(&x));
        out
    }

    pub fn is_feasible(&self, a: &Array2<f64>) -> bool {
        a.dim() == self.upper.dim()
            && Zip::from(a)
                .and(&self.upper)
                .fold(true, |ok, &x, &u| ok && x >= 0.0 && x <= u)
    }
}

/// Runs `iters` DCA sweeps on all columns at once:
/// `A <- clamp((rho I - D) A + L) / rho, 0, U)` with `rho = lambda_max(D)`.
///
/// Every sweep keeps each column feasible and does not increase its objective.
pub fn dca_solve(batch: &BatchBoxQp, a0: &Array2<f64>, iters: usize) -> Result<Array2<f64>> {
    if iters == 0 {
        return Err(Error::InvalidParameter("DCA needs at least one iteration".into()));
    }
    if a0.dim() != batch.upper.dim() {
        return Err(Error::ShapeMismatch(format!(
            "start {:?} for bounds {:?}",
            a0.dim(),
            batch.upper.dim()
        )));
    }
    if !batch.is_feasible(a0) {
        return Err(Error::BoxViolation);
    }
    let rho = largest_eigenvalue(&batch.hessian, DEFAULT_EIGEN_TOL)?;
    if !(rho > 0.0) {
        return Err(Error::NonPositiveCurvature(rho));
    }
    let v = batch.hessian.nrows();
    let shifted = Array2::from_diag_elem(v, rho) - &batch.hessian;

    let mut a = a0.clone();
    for _ in 0..iters {
        let mut next = shifted.dot(&a);
        Zip::from(&mut next)
            .and(&batch.linear)
            .and(&batch.upper)
            .for_each(|x, &l, &u| *x = ((*x + l) / rho).max(0.0).min(u));
        a = next;
    }
    Ok(a)
}

//! Ridge-penalized logistic and multinomial regression with
//! per-coefficient penalty weights.
//!
//! The objective is
//!
//! ```text
//! -(1/n) l(xi0, Xi; D) + sum_j w_j ||Xi_j,:||^2
//! ```
//!
//! with an unpenalized intercept. Columns with a finite positive weight are
//! rescaled by `w_j^{-1/2}` so that the problem becomes a uniform ridge fit
//! (`||Theta||_F^2`) on the rescaled design; zero-weight columns join the
//! intercept as unpenalized directions, and infinite weights pin the
//! coefficient at zero. The uniform problem is solved by damped Newton with
//! backtracking, using either the dense Hessian or, when the penalized block
//! is wider than the sample, a Woodbury reduction to an `n(C-1)` system.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Family};
use crate::error::{Error, Result};

/// Per-coefficient quadratic penalty weights, one per design column.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyWeights(Vec<f64>);

impl PenaltyWeights {
    /// Weights must be non-negative; `+inf` fixes a coefficient at zero.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(j) = weights.iter().position(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::config(
                "weights",
                format!("weight {j} is {}, must be >= 0", weights[j]),
            ));
        }
        Ok(Self(weights))
    }

    pub fn uniform(p: usize, weight: f64) -> Result<Self> {
        Self::new(vec![weight; p])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Stopping rules for the Newton iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Max-norm of the gradient of the uniform-ridge objective.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Bound on each intercept component; hitting it marks the fit as
    /// not converged.
    pub intercept_cap: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
            intercept_cap: 30.0,
        }
    }
}

/// Minimizer of the weighted-ridge objective.
///
/// `intercept` has length `C - 1` and `coefficients` is `p x (C - 1)`; for
/// the logistic family both have a single column.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerFit {
    pub intercept: DVector<f64>,
    pub coefficients: DMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub intercept_capped: bool,
}

impl InnerFit {
    /// Squared Euclidean norm of coefficient row `j`.
    pub fn row_norm_sq(&self, j: usize) -> f64 {
        self.coefficients.row(j).norm_squared()
    }
}

/// `-(1/n) l` for the given parameters. Returns `log C` at all-zero
/// parameters.
pub fn negative_log_likelihood(
    data: &Dataset,
    family: Family,
    intercept: &DVector<f64>,
    coefficients: &DMatrix<f64>,
) -> f64 {
    debug_assert!(data.check_family(family).is_ok());
    let eta = linear_predictor(data.design(), intercept, coefficients);
    nll_and_probs(&eta, data.labels()).0
}

/// Negative log-likelihood plus `sum_j w_j ||coef_j||^2`.
pub fn penalized_objective(
    data: &Dataset,
    family: Family,
    weights: &PenaltyWeights,
    intercept: &DVector<f64>,
    coefficients: &DMatrix<f64>,
) -> f64 {
    negative_log_likelihood(data, family, intercept, coefficients)
        + ridge_term(weights.as_slice(), coefficients)
}

/// Gradient of [`penalized_objective`] with respect to the intercept and the
/// coefficients.
pub fn penalized_gradient(
    data: &Dataset,
    weights: &PenaltyWeights,
    intercept: &DVector<f64>,
    coefficients: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = data.n() as f64;
    let eta = linear_predictor(data.design(), intercept, coefficients);
    let (_, probs) = nll_and_probs(&eta, data.labels());
    let resid = residuals(&probs, data.labels());
    let g0 = resid.row_sum().transpose() / n;
    let mut g = data.design().tr_mul(&resid) / n;
    for (j, &w) in weights.as_slice().iter().enumerate() {
        if w.is_finite() && w > 0.0 {
            for c in 0..g.ncols() {
                g[(j, c)] += 2.0 * w * coefficients[(j, c)];
            }
        }
    }
    (g0, g)
}

/// Class probabilities (`n x C`, baseline last) for a design on the same
/// column layout as the coefficients.
pub fn class_probabilities(
    design: &DMatrix<f64>,
    intercept: &DVector<f64>,
    coefficients: &DMatrix<f64>,
) -> DMatrix<f64> {
    let eta = linear_predictor(design, intercept, coefficients);
    let (n, k) = eta.shape();
    let mut out = DMatrix::zeros(n, k + 1);
    for i in 0..n {
        let lse = log_sum_exp_with_zero(eta.row(i).iter().copied());
        for c in 0..k {
            out[(i, c)] = (eta[(i, c)] - lse).exp();
        }
        out[(i, k)] = (-lse).exp();
    }
    out
}

/// Most probable class index per row; ties go to the smaller index.
///
/// For two classes this is exactly "class 0 iff its probability exceeds
/// 1/2", i.e. thresholding at 0.5.
pub fn predict_classes(
    design: &DMatrix<f64>,
    intercept: &DVector<f64>,
    coefficients: &DMatrix<f64>,
) -> Vec<usize> {
    let probs = class_probabilities(design, intercept, coefficients);
    (0..probs.nrows())
        .map(|i| {
            if probs.ncols() == 2 {
                return if probs[(i, 0)] > 0.5 { 0 } else { 1 };
            }
            let mut best = 0;
            for c in 1..probs.ncols() {
                if probs[(i, c)] > probs[(i, best)] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Fits the weighted-ridge GLM with default options and a cold start.
pub fn fit_weighted_ridge(
    data: &Dataset,
    family: Family,
    weights: &PenaltyWeights,
) -> Result<InnerFit> {
    fit_weighted_ridge_with(data, family, weights, &NewtonOptions::default(), None)
}

/// Fits the weighted-ridge GLM, optionally seeded from a previous fit
/// expressed on the same (unrescaled) coefficient scale.
pub fn fit_weighted_ridge_with(
    data: &Dataset,
    family: Family,
    weights: &PenaltyWeights,
    options: &NewtonOptions,
    warm_start: Option<&InnerFit>,
) -> Result<InnerFit> {
    fit_impl(data, family, weights, options, warm_start, Strategy::Auto)
}

/// Linear-algebra path of the Newton step. Only `Auto` is used outside tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) enum Strategy {
    Auto,
    Dense,
    Kernel,
}

pub(crate) fn fit_impl(
    data: &Dataset,
    family: Family,
    weights: &PenaltyWeights,
    options: &NewtonOptions,
    warm_start: Option<&InnerFit>,
    strategy: Strategy,
) -> Result<InnerFit> {
    data.check_family(family)?;
    let p = data.p();
    if weights.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{} penalty weights for {p} columns",
            weights.len()
        )));
    }
    let k = family.score_count(data.classes());
    let w = weights.as_slice();

    // Column roles: unpenalized (joins the intercept), penalized (rescaled),
    // or pinned at zero.
    let mut unpen = Vec::new();
    let mut pen = Vec::new();
    for (j, &wj) in w.iter().enumerate() {
        if wj == 0.0 {
            unpen.push(j);
        } else if wj.is_finite() {
            pen.push(j);
        }
    }

    let n = data.n();
    let x = data.design();
    let mut u = DMatrix::from_element(n, 1 + unpen.len(), 1.0);
    for (a, &j) in unpen.iter().enumerate() {
        u.set_column(a + 1, &x.column(j));
    }
    let mut z = x.select_columns(&pen);
    for (a, &j) in pen.iter().enumerate() {
        z.column_mut(a).scale_mut(1.0 / w[j].sqrt());
    }

    let mut gamma = DMatrix::zeros(u.ncols(), k);
    let mut theta = DMatrix::zeros(z.ncols(), k);
    match warm_start {
        Some(prev) if prev.coefficients.shape() == (p, k) && prev.intercept.len() == k => {
            for c in 0..k {
                gamma[(0, c)] =
                    prev.intercept[c].clamp(-options.intercept_cap, options.intercept_cap);
                for (a, &j) in unpen.iter().enumerate() {
                    gamma[(a + 1, c)] = prev.coefficients[(j, c)];
                }
                for (a, &j) in pen.iter().enumerate() {
                    theta[(a, c)] = prev.coefficients[(j, c)] * w[j].sqrt();
                }
            }
        }
        _ => {
            // Start from the intercept-only fit's log-odds.
            let mut counts = vec![0.0f64; k + 1];
            for &l in data.labels() {
                counts[l] += 1.0;
            }
            let base = counts[k].max(0.5);
            for c in 0..k {
                gamma[(0, c)] = (counts[c].max(0.5) / base)
                    .ln()
                    .clamp(-options.intercept_cap, options.intercept_cap);
            }
        }
    }

    let use_kernel = match strategy {
        Strategy::Dense => false,
        Strategy::Kernel => z.ncols() > 0,
        Strategy::Auto => u.ncols() + z.ncols() > n && z.ncols() > 0,
    };
    let mut solver = NewtonSolver {
        u: &u,
        z: &z,
        labels: data.labels(),
        k,
        gram: use_kernel.then(|| &z * z.transpose()),
    };
    let outcome = solver.minimize(&mut gamma, &mut theta, options)?;

    let mut intercept = DVector::zeros(k);
    let mut coefficients = DMatrix::zeros(p, k);
    for c in 0..k {
        intercept[c] = gamma[(0, c)];
        for (a, &j) in unpen.iter().enumerate() {
            coefficients[(j, c)] = gamma[(a + 1, c)];
        }
        for (a, &j) in pen.iter().enumerate() {
            coefficients[(j, c)] = theta[(a, c)] / w[j].sqrt();
        }
    }
    let objective = outcome.nll + ridge_term(w, &coefficients);
    if !objective.is_finite() {
        return Err(Error::Numeric(
            "non-finite objective at the fitted parameters".into(),
        ));
    }
    Ok(InnerFit {
        intercept,
        coefficients,
        objective,
        iterations: outcome.iterations,
        converged: outcome.converged && !outcome.capped,
        intercept_capped: outcome.capped,
    })
}

fn ridge_term(weights: &[f64], coefficients: &DMatrix<f64>) -> f64 {
    weights
        .iter()
        .enumerate()
        .filter(|(_, w)| w.is_finite() && **w > 0.0)
        .map(|(j, w)| w * coefficients.row(j).norm_squared())
        .sum()
}

fn linear_predictor(
    design: &DMatrix<f64>,
    intercept: &DVector<f64>,
    coefficients: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut eta = design * coefficients;
    for c in 0..eta.ncols() {
        eta.column_mut(c).add_scalar_mut(intercept[c]);
    }
    eta
}

fn log_sum_exp_with_zero(scores: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = scores.clone().fold(0.0f64, f64::max);
    let s: f64 = (-mx).exp() + scores.map(|e| (e - mx).exp()).sum::<f64>();
    mx + s.ln()
}

/// Mean negative log-likelihood and the non-baseline class probabilities.
fn nll_and_probs(eta: &DMatrix<f64>, labels: &[usize]) -> (f64, DMatrix<f64>) {
    let (n, k) = eta.shape();
    let mut probs = DMatrix::zeros(n, k);
    let mut total = 0.0;
    for i in 0..n {
        let lse = log_sum_exp_with_zero(eta.row(i).iter().copied());
        total += lse;
        if labels[i] < k {
            total -= eta[(i, labels[i])];
        }
        for c in 0..k {
            probs[(i, c)] = (eta[(i, c)] - lse).exp();
        }
    }
    (total / n as f64, probs)
}

fn nll_only(eta: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let (n, k) = eta.shape();
    let mut total = 0.0;
    for i in 0..n {
        total += log_sum_exp_with_zero(eta.row(i).iter().copied());
        if labels[i] < k {
            total -= eta[(i, labels[i])];
        }
    }
    total / n as f64
}

fn residuals(probs: &DMatrix<f64>, labels: &[usize]) -> DMatrix<f64> {
    let mut r = probs.clone();
    for (i, &l) in labels.iter().enumerate() {
        if l < r.ncols() {
            r[(i, l)] -= 1.0;
        }
    }
    r
}

/// Flattens an `m x k` parameter block with index `j * k + c`.
fn flatten(a: &DMatrix<f64>) -> DVector<f64> {
    let (m, k) = a.shape();
    DVector::from_fn(m * k, |idx, _| a[(idx / k, idx % k)])
}

fn unflatten(v: &DVector<f64>, m: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, k, |j, c| v[j * k + c])
}

struct Outcome {
    nll: f64,
    iterations: usize,
    converged: bool,
    capped: bool,
}

/// Newton iterations on the uniform-ridge problem
/// `nll(U gamma + Z theta) + ||theta||^2`.
struct NewtonSolver<'a> {
    u: &'a DMatrix<f64>,
    z: &'a DMatrix<f64>,
    labels: &'a [usize],
    k: usize,
    /// `Z Z^T`, present when the Woodbury path is used.
    gram: Option<DMatrix<f64>>,
}

impl NewtonSolver<'_> {
    fn minimize(
        &mut self,
        gamma: &mut DMatrix<f64>,
        theta: &mut DMatrix<f64>,
        options: &NewtonOptions,
    ) -> Result<Outcome> {
        let n = self.u.nrows() as f64;
        let mut eta = self.u * &*gamma + self.z * &*theta;
        let mut capped = false;
        let mut iterations = 0;
        let mut converged = false;

        loop {
            let (nll, probs) = nll_and_probs(&eta, self.labels);
            let objective = nll + theta.norm_squared();
            if !objective.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite objective after {iterations} Newton steps"
                )));
            }
            let resid = residuals(&probs, self.labels);
            let g_gamma = self.u.tr_mul(&resid) / n;
            let g_theta = self.z.tr_mul(&resid) / n + &*theta * 2.0;
            let gmax = g_gamma.amax().max(g_theta.amax());
            if gmax <= options.tolerance {
                converged = true;
                break;
            }
            if iterations >= options.max_iterations {
                break;
            }

            let (mut d_gamma, mut d_theta) = match &self.gram {
                Some(gram) => self.kernel_direction(gram, &probs, &g_gamma, &g_theta)?,
                None => self.dense_direction(&probs, &g_gamma, &g_theta)?,
            };
            let mut slope = g_gamma.dot(&d_gamma) + g_theta.dot(&d_theta);
            if !(slope < 0.0) {
                d_gamma = -&g_gamma;
                d_theta = -&g_theta;
                slope = -(g_gamma.norm_squared() + g_theta.norm_squared());
            }
            let d_eta = self.u * &d_gamma + self.z * &d_theta;

            let mut step = 1.0;
            let slack = 1e-14 * (1.0 + objective.abs());
            let mut accepted = false;
            for _ in 0..60 {
                let trial_eta = &eta + &d_eta * step;
                let trial_theta = &*theta + &d_theta * step;
                let trial = nll_only(&trial_eta, self.labels) + trial_theta.norm_squared();
                if trial.is_finite() && trial <= objective + 1e-4 * step * slope + slack {
                    *gamma += &d_gamma * step;
                    *theta = trial_theta;
                    eta = trial_eta;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            iterations += 1;
            if !accepted {
                // No representable decrease; the iterate is at the noise floor.
                converged = gmax <= options.tolerance.sqrt();
                break;
            }

            for c in 0..self.k {
                let b = gamma[(0, c)];
                let clamped = b.clamp(-options.intercept_cap, options.intercept_cap);
                if clamped != b {
                    capped = true;
                    gamma[(0, c)] = clamped;
                    eta.column_mut(c).add_scalar_mut(clamped - b);
                }
            }
        }

        Ok(Outcome {
            nll: nll_only(&eta, self.labels),
            iterations,
            converged,
            capped,
        })
    }

    /// Solves the full Newton system with the dense Hessian.
    fn dense_direction(
        &self,
        probs: &DMatrix<f64>,
        g_gamma: &DMatrix<f64>,
        g_theta: &DMatrix<f64>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let k = self.k;
        let n = self.u.nrows();
        let q = self.u.ncols();
        let r = self.z.ncols();
        let d0 = q + r;
        let mut a = DMatrix::zeros(n, d0);
        a.columns_mut(0, q).copy_from(self.u);
        a.columns_mut(q, r).copy_from(self.z);

        let mut h = DMatrix::zeros(d0 * k, d0 * k);
        for c in 0..k {
            for c2 in c..k {
                let mut scaled = a.clone();
                for i in 0..n {
                    let wt = probs[(i, c)] * (f64::from(u8::from(c == c2)) - probs[(i, c2)]);
                    scaled.row_mut(i).scale_mut(wt / n as f64);
                }
                let block = a.tr_mul(&scaled);
                for j in 0..d0 {
                    for j2 in 0..d0 {
                        h[(j * k + c, j2 * k + c2)] = block[(j, j2)];
                        h[(j2 * k + c2, j * k + c)] = block[(j, j2)];
                    }
                }
            }
        }
        for idx in q * k..d0 * k {
            h[(idx, idx)] += 2.0;
        }
        let mut g = DMatrix::zeros(d0, k);
        g.rows_mut(0, q).copy_from(g_gamma);
        g.rows_mut(q, r).copy_from(g_theta);
        let rhs = -flatten(&g);
        let step = solve_spd(h, &rhs)?;
        let step = unflatten(&step, d0, k);
        Ok((step.rows(0, q).into_owned(), step.rows(q, r).into_owned()))
    }

    /// Newton direction through the Woodbury identity
    /// `(2I + Z^T W Z / n)^{-1} = (I - Z^T W M^{-1} Z) / 2`,
    /// `M = 2n I + G W`, followed by a Schur complement on the unpenalized
    /// block. Only `n(C-1)`-sized systems are factored.
    fn kernel_direction(
        &self,
        gram: &DMatrix<f64>,
        probs: &DMatrix<f64>,
        g_gamma: &DMatrix<f64>,
        g_theta: &DMatrix<f64>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let k = self.k;
        let n = self.u.nrows();
        let nf = n as f64;
        let q = self.u.ncols();

        // Per-observation curvature blocks diag(pi) - pi pi^T.
        let curv = |i: usize, c: usize, c2: usize| {
            probs[(i, c)] * (f64::from(u8::from(c == c2)) - probs[(i, c2)])
        };
        let apply_w = |v: &DMatrix<f64>| {
            DMatrix::from_fn(n, k, |i, c| {
                (0..k).map(|c2| curv(i, c, c2) * v[(i, c2)]).sum()
            })
        };

        let mut m = DMatrix::zeros(n * k, n * k);
        for i in 0..n {
            for i2 in 0..n {
                let gv = gram[(i, i2)];
                for c in 0..k {
                    for c2 in 0..k {
                        m[(i * k + c, i2 * k + c2)] = gv * curv(i2, c, c2);
                    }
                }
            }
        }
        for idx in 0..n * k {
            m[(idx, idx)] += 2.0 * nf;
        }
        let lu = m.lu();
        let m_solve = |v: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            lu.solve(&flatten(v))
                .map(|s| unflatten(&s, n, k))
                .ok_or_else(|| Error::Numeric("singular Woodbury system".into()))
        };
        // psi(v) with (2I + Z^T W Z/n)^{-1} Z^T v = Z^T psi(v).
        let psi = |v: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            let inner = apply_w(&m_solve(&(gram * v))?);
            Ok((v - inner) * 0.5)
        };

        let zg = self.z * g_theta;
        let wy = apply_w(&m_solve(&zg)?);
        let z_ainv_g = (&zg - gram * &wy) * 0.5;
        let ainv_g = (g_theta - self.z.tr_mul(&wy)) * 0.5;

        let mut schur = DMatrix::zeros(q * k, q * k);
        for j in 0..q {
            for c in 0..k {
                let mut e = DMatrix::zeros(n, k);
                e.set_column(c, &self.u.column(j));
                let v = apply_w(&e) / nf;
                let correction = apply_w(&(gram * psi(&v)?)) / nf;
                let col = self.u.tr_mul(&(v - correction));
                schur.set_column(j * k + c, &flatten(&col));
            }
        }
        let rhs_gamma = -g_gamma + self.u.tr_mul(&apply_w(&z_ainv_g)) / nf;
        let d_gamma = unflatten(&solve_spd(schur, &flatten(&rhs_gamma))?, q, k);
        let vd = apply_w(&(self.u * &d_gamma)) / nf;
        let d_theta = -ainv_g - self.z.tr_mul(&psi(&vd)?);
        Ok((d_gamma, d_theta))
    }
}

/// Solves a symmetric positive (semi)definite system, regularizing or
/// falling back to LU when Cholesky fails.
fn solve_spd(mut h: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = h.diagonal().amax().max(1e-300);
    let mut jitter = 0.0;
    for _ in 0..4 {
        if let Some(chol) = h.clone().cholesky() {
            return Ok(chol.solve(rhs));
        }
        let add = if jitter == 0.0 {
            1e-12 * scale
        } else {
            jitter * 100.0
        };
        for i in 0..h.nrows() {
            h[(i, i)] += add - jitter;
        }
        jitter = add;
    }
    h.lu()
        .solve(rhs)
        .ok_or_else(|| Error::Numeric("singular Newton system".into()))
}

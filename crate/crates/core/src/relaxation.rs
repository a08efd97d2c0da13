//! The Boolean relaxation of best subset selection.
//!
//! For a selection vector `t` in `[0, 1]^{p-m}` the relaxed objective is the
//! value of a ridge-penalized GLM fit whose non-mandatory coefficients carry
//! the weights `(lambda + delta) / t_j^2 - delta`. Its gradient in `t` only
//! needs the fitted coefficients (envelope theorem), so every evaluation costs
//! one inner fit.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Family};
use crate::error::{Error, Result};
use crate::glm::{fit_weighted_ridge_with, InnerFit, NewtonOptions, PenaltyWeights};

/// Smallest selection weight used when forming `t^{-2}` and `t^{-3}` terms.
pub const T_FLOOR: f64 = 1e-8;

/// Seed of the power-iteration start vector.
pub const POWER_ITERATION_SEED: u64 = 0x434f_4d42_5353;

/// A point of the relaxed selection space.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionPoint {
    t: Vec<f64>,
    k: usize,
}

impl SelectionPoint {
    /// `t` must lie in the unit cube; the cardinality constraint is checked
    /// separately by [`SelectionPoint::is_feasible`].
    pub fn new(t: Vec<f64>, k: usize) -> Result<Self> {
        if k == 0 || k > t.len() {
            return Err(Error::config(
                "k",
                format!("must lie in 1..={}, got {k}", t.len()),
            ));
        }
        if let Some(j) = t.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config(
                "t",
                format!("entry {j} is {}, outside [0, 1]", t[j]),
            ));
        }
        Ok(Self { t, k })
    }

    /// The centroid `(k / len) * 1` of the feasible slice.
    pub fn centroid(len: usize, k: usize) -> Result<Self> {
        Self::new(vec![k as f64 / len as f64; len], k)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `sum(t) == k` within `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        (self.t.iter().sum::<f64>() - self.k as f64).abs() <= tol
    }

    /// Moves to `(1 - alpha) t + alpha s` for a binary vertex `s`.
    pub fn step_toward(&mut self, vertex: &[bool], alpha: f64) {
        for (tj, &sj) in self.t.iter_mut().zip(vertex) {
            let target = if sj { 1.0 } else { 0.0 };
            *tj = ((1.0 - alpha) * *tj + alpha * target).clamp(0.0, 1.0);
        }
    }

    /// Max-norm distance to a binary vertex.
    pub fn distance_to(&self, vertex: &[bool]) -> f64 {
        self.t
            .iter()
            .zip(vertex)
            .map(|(tj, &sj)| (tj - if sj { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// Number of entries below [`T_FLOOR`].
    pub fn below_floor(&self) -> usize {
        self.t.iter().filter(|&&v| v < T_FLOOR).count()
    }
}

/// Uniform ridge level and curvature parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationParams {
    pub lambda: f64,
    pub delta: f64,
}

impl RelaxationParams {
    pub fn new(lambda: f64, delta: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::config(
                "lambda",
                format!("must be finite and >= 0, got {lambda}"),
            ));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::config(
                "delta",
                format!("must be finite and > 0, got {delta}"),
            ));
        }
        Ok(Self { lambda, delta })
    }
}

/// Column lengths used to map coefficients between the normalized and the
/// original design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub lengths: Vec<f64>,
    pub applied: bool,
}

impl NormalizationRecord {
    pub fn identity(p: usize) -> Self {
        Self {
            lengths: vec![1.0; p],
            applied: false,
        }
    }

    /// Maps coefficients fitted on the normalized design back to the
    /// original column scale (`beta_j = theta_j / v_j`).
    pub fn to_original(&self, coefficients: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = coefficients.clone();
        for (j, v) in self.lengths.iter().enumerate() {
            out.row_mut(j).scale_mut(1.0 / v);
        }
        out
    }
}

/// Scales every column to unit Euclidean length.
pub fn normalize_columns(data: &Dataset) -> Result<(Dataset, NormalizationRecord)> {
    let mut design = data.design().clone();
    let mut lengths = Vec::with_capacity(data.p());
    for (j, mut col) in design.column_iter_mut().enumerate() {
        let v = col.norm();
        if !(v > 0.0) {
            return Err(Error::ZeroColumn { index: j });
        }
        col.scale_mut(1.0 / v);
        lengths.push(v);
    }
    Ok((
        data.with_design(design)?,
        NormalizationRecord {
            lengths,
            applied: true,
        },
    ))
}

/// Per-column weights `w(t)`: `lambda` on mandatory columns and
/// `(lambda + delta) / t_j^2 - delta` on selectable ones.
///
/// Entries below [`T_FLOOR`] are clamped; the second value counts them.
pub fn penalty_weights(
    t: &SelectionPoint,
    params: RelaxationParams,
    mandatory: usize,
) -> (PenaltyWeights, usize) {
    let RelaxationParams { lambda, delta } = params;
    let mut w = Vec::with_capacity(mandatory + t.len());
    w.extend(std::iter::repeat_n(lambda, mandatory));
    let mut clamped = 0;
    for &tj in t.as_slice() {
        if tj < T_FLOOR {
            clamped += 1;
        }
        let tj = tj.max(T_FLOOR);
        w.push(((lambda + delta) / (tj * tj) - delta).max(0.0));
    }
    (
        PenaltyWeights::new(w).expect("weights are non-negative"),
        clamped,
    )
}

/// Envelope gradient `-2 (lambda + delta) ||Xi_{m+j,:}||^2 / t_j^3`.
pub fn envelope_gradient(
    fit: &InnerFit,
    t: &SelectionPoint,
    params: RelaxationParams,
    mandatory: usize,
) -> Vec<f64> {
    let scale = -2.0 * (params.lambda + params.delta);
    t.as_slice()
        .iter()
        .enumerate()
        .map(|(j, &tj)| {
            let tj = tj.max(T_FLOOR);
            scale * fit.row_norm_sq(mandatory + j) / (tj * tj * tj)
        })
        .collect()
}

/// Result of one relaxed-objective evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub fit: InnerFit,
    pub clamped: usize,
}

/// Evaluates the relaxed objective and its envelope gradient at `t`.
pub fn evaluate(
    data: &Dataset,
    family: Family,
    t: &SelectionPoint,
    params: RelaxationParams,
    options: &NewtonOptions,
    warm_start: Option<&InnerFit>,
) -> Result<Evaluation> {
    if t.len() != data.selectable() {
        return Err(Error::DimensionMismatch(format!(
            "selection point has {} entries, data has {} selectable columns",
            t.len(),
            data.selectable()
        )));
    }
    let (weights, clamped) = penalty_weights(t, params, data.mandatory());
    let fit = fit_weighted_ridge_with(data, family, &weights, options, warm_start)?;
    let gradient = envelope_gradient(&fit, t, params, data.mandatory());
    Ok(Evaluation {
        value: fit.objective,
        gradient,
        fit,
        clamped,
    })
}

/// The relaxed objective `f(t)`: the minimum of the reparameterized inner
/// problem. Non-converged inner fits still report their last objective.
pub fn value_function(
    data: &Dataset,
    family: Family,
    t: &SelectionPoint,
    params: RelaxationParams,
    options: &NewtonOptions,
) -> Result<f64> {
    evaluate(data, family, t, params, options, None).map(|e| e.value)
}

/// Largest eigenvalue of `X^T X` by power iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerIteration {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on `X^T X` using products with `X` and `X^T` only. The
/// estimate is `||X v||^2` for the current unit vector `v`; it stops when
/// the relative change drops below `tolerance`.
pub fn power_iteration(
    x: &DMatrix<f64>,
    tolerance: f64,
    max_iterations: usize,
    seed: u64,
) -> PowerIteration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(x.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    v.normalize_mut();
    let mut estimate = (x * &v).norm_squared();
    for it in 1..=max_iterations {
        let w = x.tr_mul(&(x * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return PowerIteration {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        v = w / norm;
        let next = (x * &v).norm_squared();
        if (next - estimate).abs() <= tolerance * next {
            return PowerIteration {
                value: next,
                iterations: it,
                converged: true,
            };
        }
        estimate = next;
    }
    PowerIteration {
        value: estimate,
        iterations: max_iterations,
        converged: false,
    }
}

/// Curvature level above which the relaxed objective is concave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcavityThreshold {
    pub delta: f64,
    /// Largest eigenvalue of `X_u^T X_u` (or its Frobenius bound).
    pub nu_max: f64,
    pub power_iterations: usize,
    /// Power iteration stalled and `||X_u||_F^2` was used instead.
    pub frobenius_fallback: bool,
}

/// `nu_max / (8n)` for logistic and `nu_max / (4n)` for multinomial
/// regression, where `nu_max` is the top eigenvalue of `X_u^T X_u` over the
/// selectable columns.
pub fn concavity_threshold(data: &Dataset, family: Family) -> Result<ConcavityThreshold> {
    let xu = data
        .design()
        .columns(data.mandatory(), data.selectable())
        .into_owned();
    let pi = power_iteration(&xu, 1e-6, 1000, POWER_ITERATION_SEED);
    let (nu_max, fallback) = if pi.converged {
        (pi.value, false)
    } else {
        (xu.norm_squared(), true)
    };
    if !(nu_max > 0.0 && nu_max.is_finite()) {
        return Err(Error::Numeric(format!(
            "largest eigenvalue estimate is {nu_max}"
        )));
    }
    // H_eta <= (b / n) I with b = 1/4 (logistic) or 1/2 (multinomial), and
    // the threshold is nu_max * b / (2n).
    let delta = nu_max * family.curvature_bound() / (2.0 * data.n() as f64);
    Ok(ConcavityThreshold {
        delta,
        nu_max,
        power_iterations: pi.iterations,
        frobenius_fallback: fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fit_with_row(value: f64) -> InnerFit {
        InnerFit {
            intercept: DVector::zeros(1),
            coefficients: DMatrix::from_element(1, 1, value),
            objective: 0.0,
            iterations: 0,
            converged: true,
            intercept_capped: false,
        }
    }

    #[test]
    fn normalizes_to_unit_length() {
        let x = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 4.0, 0.0]);
        let d = Dataset::binary(x, &[0, 1], 0).unwrap();
        let (nd, rec) = normalize_columns(&d).unwrap();
        assert_relative_eq!(nd.design()[(0, 0)], 0.6);
        assert_relative_eq!(nd.design()[(1, 0)], 0.8);
        assert_eq!(rec.lengths, vec![5.0, 1.0]);
        assert_eq!(nd.design().column(1), d.design().column(1));
    }

    #[test]
    fn zero_column_is_rejected_by_index() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 1.0, 0.0, 3.0]);
        let d = Dataset::binary(x, &[0, 1], 0).unwrap();
        match normalize_columns(&d) {
            Err(Error::ZeroColumn { index }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weight_formula() {
        let p = RelaxationParams::new(0.1, 1.0).unwrap();
        let t = SelectionPoint::new(vec![0.5, 1.0], 1).unwrap();
        let (w, clamped) = penalty_weights(&t, p, 2);
        assert_eq!(clamped, 0);
        assert_eq!(w.as_slice()[..2], [0.1, 0.1]);
        assert_relative_eq!(w.as_slice()[2], 3.4, max_relative = 1e-14);
        assert_relative_eq!(w.as_slice()[3], 0.1, max_relative = 1e-14);

        let p = RelaxationParams::new(0.0, 2.0).unwrap();
        let t = SelectionPoint::new(vec![0.25, 0.0], 1).unwrap();
        let (w, clamped) = penalty_weights(&t, p, 0);
        assert_relative_eq!(w.as_slice()[0], 30.0, max_relative = 1e-14);
        assert_eq!(clamped, 1);
        assert!(w.as_slice()[1] > 1e15);
    }

    #[test]
    fn gradient_formula() {
        let p = RelaxationParams::new(0.0, 1.0).unwrap();
        let t = SelectionPoint::new(vec![0.5], 1).unwrap();
        let g = envelope_gradient(&fit_with_row(0.2), &t, p, 0);
        assert_relative_eq!(g[0], -0.64, max_relative = 1e-14);
        let g = envelope_gradient(&fit_with_row(0.0), &t, p, 0);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn identity_spectrum() {
        let x = DMatrix::<f64>::identity(2, 2);
        let d = Dataset::binary(x, &[0, 1], 0).unwrap();
        let c = concavity_threshold(&d, Family::Logistic).unwrap();
        assert_relative_eq!(c.nu_max, 1.0, max_relative = 1e-12);
        assert_relative_eq!(c.delta, 0.0625, max_relative = 1e-12);
        assert!(!c.frobenius_fallback);
    }

    #[test]
    fn diagonal_spectrum() {
        // X^T X = diag(4, 1)
        let x = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let pi = power_iteration(&x, 1e-12, 1000, POWER_ITERATION_SEED);
        assert!(pi.converged);
        assert_relative_eq!(pi.value, 4.0, max_relative = 1e-10);
    }

    #[test]
    fn stalled_power_iteration_falls_back_to_frobenius() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.2, 0.3, 1.0, 0.5, 0.1]);
        let pi = power_iteration(&x, 0.0, 3, POWER_ITERATION_SEED);
        assert!(!pi.converged);
        assert_eq!(pi.iterations, 3);
        assert!(pi.value <= x.norm_squared());
    }

    #[test]
    fn feasibility_and_steps() {
        let mut t = SelectionPoint::centroid(4, 2).unwrap();
        assert!(t.is_feasible(1e-12));
        let s = [true, false, true, false];
        t.step_toward(&s, 0.25);
        assert!(t.is_feasible(1e-12));
        assert_relative_eq!(t.as_slice()[0], 0.625);
        assert_relative_eq!(t.distance_to(&s), 0.375);
        assert!(SelectionPoint::new(vec![1.2, 0.0], 1).is_err());
        assert!(SelectionPoint::new(vec![0.5, 0.5], 0).is_err());
    }
}

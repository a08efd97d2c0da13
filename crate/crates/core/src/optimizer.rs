//! Frank-Wolfe homotopy over the relaxed selection space.
//!
//! Each of the `2N` iterations raises the curvature parameter along a
//! geometric schedule, solves one weighted-ridge GLM at the current `t`,
//! forms the envelope gradient, picks the vertex holding the `k` smallest
//! gradient entries and moves `t` toward it by a fixed fraction `alpha`. The
//! last vertex is the selected support; it is refitted on the original
//! design.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{complement, kfold, Dataset, Family};
use crate::error::{Error, Result};
use crate::glm::{
    fit_weighted_ridge_with, negative_log_likelihood, predict_classes, NewtonOptions,
    PenaltyWeights,
};
use crate::relaxation::{
    concavity_threshold, evaluate, normalize_columns, ConcavityThreshold, NormalizationRecord,
    RelaxationParams, SelectionPoint,
};

/// Geometric curvature schedule `delta_i = min(delta_min r^i, delta_max)`,
/// `i = 1..=2N`, with `r = (delta_max / delta_min)^{1/N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopySchedule {
    pub delta_min: f64,
    pub delta_max: f64,
    pub grid_size: usize,
    pub rate: f64,
    /// Present when the schedule was derived from the data.
    pub calibration: Option<ConcavityThreshold>,
}

impl HomotopySchedule {
    pub fn new(delta_min: f64, delta_max: f64, grid_size: usize) -> Result<Self> {
        if !(delta_min > 0.0 && delta_min.is_finite()) {
            return Err(Error::config(
                "delta_min",
                format!("must be > 0, got {delta_min}"),
            ));
        }
        if !(delta_max > delta_min && delta_max.is_finite()) {
            return Err(Error::config(
                "delta_max",
                format!("must exceed delta_min = {delta_min}, got {delta_max}"),
            ));
        }
        if grid_size == 0 {
            return Err(Error::config("N", "must be >= 1"));
        }
        Ok(Self {
            delta_min,
            delta_max,
            grid_size,
            rate: (delta_max / delta_min).powf(1.0 / grid_size as f64),
            calibration: None,
        })
    }

    /// Total iteration budget `2N`.
    pub fn iterations(&self) -> usize {
        2 * self.grid_size
    }

    /// Curvature at iteration `i` (1-based). Pinned to `delta_max` from
    /// iteration `N` on.
    pub fn delta(&self, i: usize) -> f64 {
        if i >= self.grid_size {
            self.delta_max
        } else {
            (self.delta_min * self.rate.powi(i as i32)).min(self.delta_max)
        }
    }

    pub fn deltas(&self) -> Vec<f64> {
        (1..=self.iterations()).map(|i| self.delta(i)).collect()
    }
}

/// `delta_max = delta_conc` and `delta_min = 1e-3 delta_conc` for data that
/// is already column-normalized.
pub fn calibrate_schedule(
    data: &Dataset,
    family: Family,
    grid_size: usize,
) -> Result<HomotopySchedule> {
    let threshold = concavity_threshold(data, family)?;
    let mut schedule = HomotopySchedule::new(1e-3 * threshold.delta, threshold.delta, grid_size)?;
    schedule.calibration = Some(threshold);
    Ok(schedule)
}

/// Penalty used when refitting the selected support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RefitPenalty {
    /// The run's own `lambda`.
    SameAsLambda,
    Ridge(f64),
    /// Ridge level chosen from [`REFIT_LAMBDA_GRID`] by k-fold held-out
    /// negative log-likelihood.
    CrossValidated {
        folds: usize,
        seed: u64,
    },
}

/// Candidate ridge levels for cross-validated refits.
pub const REFIT_LAMBDA_GRID: [f64; 8] = [0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub k: usize,
    pub lambda: f64,
    pub alpha: f64,
    /// Early stop once `||t - s||_inf < epsilon`; 0 disables it.
    pub epsilon: f64,
    pub grid_size: usize,
    /// Explicit schedule; calibrated from the data when absent.
    pub schedule: Option<HomotopySchedule>,
    pub normalize: bool,
    pub refit: RefitPenalty,
    pub newton: NewtonOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            k: 1,
            lambda: 0.0,
            alpha: 0.01,
            epsilon: 0.0,
            grid_size: 25,
            schedule: None,
            normalize: true,
            refit: RefitPenalty::SameAsLambda,
            newton: NewtonOptions::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn with_k(&self, k: usize) -> Self {
        Self { k, ..self.clone() }
    }

    /// Validates settings that do not depend on `k`.
    pub fn validate_common(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(
                "lambda",
                format!("must be finite and >= 0, got {}", self.lambda),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(
                "alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config(
                "epsilon",
                format!("must be finite and >= 0, got {}", self.epsilon),
            ));
        }
        if self.grid_size == 0 {
            return Err(Error::config("N", "must be >= 1"));
        }
        match self.refit {
            RefitPenalty::Ridge(l) if !(l >= 0.0 && l.is_finite()) => Err(Error::config(
                "refit",
                format!("ridge level must be >= 0, got {l}"),
            )),
            RefitPenalty::CrossValidated { folds, .. } if folds < 2 => Err(Error::config(
                "cv-folds",
                format!("must be >= 2, got {folds}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn validate(&self, selectable: usize) -> Result<()> {
        if self.k < 1 || self.k > selectable {
            return Err(Error::config(
                "k",
                format!("k must satisfy 1 <= k <= {selectable}, got {}", self.k),
            ));
        }
        self.validate_common()
    }
}

/// Per-run trajectory record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub deltas: Vec<f64>,
    /// Relaxed objective at each iterate (NaN where the inner fit failed).
    pub values: Vec<f64>,
    pub vertex_changes: usize,
    pub inner_nonconverged: usize,
    pub inner_failures: usize,
    pub clamped_weights: usize,
    pub newton_iterations: usize,
    pub iterations: usize,
    pub early_stopped: bool,
    pub final_t: Vec<f64>,
}

/// Refitted model on a fixed set of original columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Refit {
    /// Retained original column indices, mandatory columns first.
    pub columns: Vec<usize>,
    pub intercept: DVector<f64>,
    /// `columns.len() x (C - 1)` on the original scale.
    pub coefficients: DMatrix<f64>,
    /// `-(1/n) l + lambda ||beta||^2` at the fit.
    pub objective: f64,
    pub lambda: f64,
    pub converged: bool,
}

impl Refit {
    /// Predicted class indices for a design with the full original layout.
    pub fn predict(&self, design: &DMatrix<f64>) -> Vec<usize> {
        predict_classes(
            &design.select_columns(&self.columns),
            &self.intercept,
            &self.coefficients,
        )
    }

    /// Share of rows whose predicted class differs from the label.
    pub fn misclassification(&self, data: &Dataset) -> f64 {
        let pred = self.predict(data.design());
        let wrong = pred
            .iter()
            .zip(data.labels())
            .filter(|(a, b)| a != b)
            .count();
        wrong as f64 / data.n() as f64
    }
}

/// Outcome of one homotopy run at a fixed model size.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetResult {
    pub k: usize,
    /// Binary vertex over the selectable columns; exactly `k` entries set.
    pub support: Vec<bool>,
    pub refit: Refit,
    pub schedule: HomotopySchedule,
    pub diagnostics: Diagnostics,
    pub wall_time_s: f64,
}

impl SubsetResult {
    /// Selected positions among the selectable columns (0-based).
    pub fn selected(&self) -> Vec<usize> {
        support_indices(&self.support)
    }
}

pub(crate) fn support_indices(support: &[bool]) -> Vec<usize> {
    support
        .iter()
        .enumerate()
        .filter_map(|(j, &s)| s.then_some(j))
        .collect()
}

/// A dataset prepared for repeated runs: normalized copy plus a shared
/// schedule.
#[derive(Debug, Clone)]
pub struct Problem {
    pub original: Dataset,
    pub normalized: Dataset,
    pub normalization: NormalizationRecord,
    pub family: Family,
    pub schedule: HomotopySchedule,
}

impl Problem {
    pub fn new(data: &Dataset, family: Family, config: &OptimizerConfig) -> Result<Self> {
        data.check_family(family)?;
        config.validate_common()?;
        let (normalized, normalization) = if config.normalize {
            normalize_columns(data)?
        } else {
            (data.clone(), NormalizationRecord::identity(data.p()))
        };
        let schedule = match &config.schedule {
            Some(s) if s.grid_size == config.grid_size => s.clone(),
            Some(s) => HomotopySchedule {
                calibration: s.calibration,
                ..HomotopySchedule::new(s.delta_min, s.delta_max, config.grid_size)?
            },
            None => calibrate_schedule(&normalized, family, config.grid_size)?,
        };
        Ok(Self {
            original: data.clone(),
            normalized,
            normalization,
            family,
            schedule,
        })
    }

    /// Runs the homotopy for `config.k` and refits the selected support.
    pub fn run(&self, config: &OptimizerConfig) -> Result<SubsetResult> {
        config.validate(self.normalized.selectable())?;
        let start = Instant::now();
        let (support, diagnostics) =
            homotopy(&self.normalized, self.family, config, &self.schedule)?;
        let lambda_refit = match config.refit {
            RefitPenalty::SameAsLambda => config.lambda,
            RefitPenalty::Ridge(l) => l,
            RefitPenalty::CrossValidated { folds, seed } => cross_validated_ridge(
                &self.original,
                self.family,
                &support,
                folds,
                seed,
                &config.newton,
            )?,
        };
        let refit = refit_with(
            &self.original,
            self.family,
            &support,
            lambda_refit,
            &config.newton,
        )?;
        Ok(SubsetResult {
            k: config.k,
            support,
            refit,
            schedule: self.schedule.clone(),
            diagnostics,
            wall_time_s: start.elapsed().as_secs_f64(),
        })
    }
}

/// Normalizes, calibrates and runs the homotopy on `data`.
pub fn run(data: &Dataset, family: Family, config: &OptimizerConfig) -> Result<SubsetResult> {
    config.validate(data.selectable())?;
    Problem::new(data, family, config)?.run(config)
}

/// Binary vertex with ones at the `k` smallest entries of `gradient`; ties
/// go to the smaller index.
pub fn lmo(gradient: &[f64], k: usize) -> Result<Vec<bool>> {
    if k == 0 || k > gradient.len() {
        return Err(Error::config(
            "k",
            format!("k must satisfy 1 <= k <= {}, got {k}", gradient.len()),
        ));
    }
    if let Some(j) = gradient.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!(
            "gradient entry {j} is {}",
            gradient[j]
        )));
    }
    let mut order: Vec<usize> = (0..gradient.len()).collect();
    let cmp = |a: &usize, b: &usize| gradient[*a].total_cmp(&gradient[*b]).then(a.cmp(b));
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, cmp);
    }
    let mut vertex = vec![false; gradient.len()];
    for &j in &order[..k] {
        vertex[j] = true;
    }
    Ok(vertex)
}

fn homotopy(
    data: &Dataset,
    family: Family,
    config: &OptimizerConfig,
    schedule: &HomotopySchedule,
) -> Result<(Vec<bool>, Diagnostics)> {
    let mut t = SelectionPoint::centroid(data.selectable(), config.k)?;
    let mut diag = Diagnostics::default();
    let mut warm = None;
    let mut vertex: Option<Vec<bool>> = None;

    for i in 1..=schedule.iterations() {
        let delta = schedule.delta(i);
        let params = RelaxationParams::new(config.lambda, delta)?;
        diag.deltas.push(delta);
        diag.iterations = i;
        let eval = match evaluate(data, family, &t, params, &config.newton, warm.as_ref()) {
            Ok(e) => e,
            Err(Error::Numeric(_)) => {
                diag.inner_failures += 1;
                diag.values.push(f64::NAN);
                warm = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        diag.values.push(eval.value);
        diag.clamped_weights += eval.clamped;
        diag.newton_iterations += eval.fit.iterations;
        if !eval.fit.converged {
            diag.inner_nonconverged += 1;
        }
        let s = lmo(&eval.gradient, config.k)?;
        if vertex.as_ref().is_some_and(|prev| prev != &s) {
            diag.vertex_changes += 1;
        }
        t.step_toward(&s, config.alpha);
        warm = Some(eval.fit);
        let done = config.epsilon > 0.0 && t.distance_to(&s) < config.epsilon;
        vertex = Some(s);
        if done {
            diag.early_stopped = true;
            break;
        }
    }

    diag.final_t = t.as_slice().to_vec();
    match vertex {
        Some(s) => Ok((s, diag)),
        None => Err(Error::AllIterationsFailed(diag.iterations)),
    }
}

/// Penalized refit on the mandatory columns plus the selected ones, on the
/// design as given.
pub fn refit(data: &Dataset, family: Family, support: &[bool], lambda: f64) -> Result<Refit> {
    refit_with(data, family, support, lambda, &NewtonOptions::default())
}

pub fn refit_with(
    data: &Dataset,
    family: Family,
    support: &[bool],
    lambda: f64,
    options: &NewtonOptions,
) -> Result<Refit> {
    if support.len() != data.selectable() {
        return Err(Error::DimensionMismatch(format!(
            "support has {} entries, data has {} selectable columns",
            support.len(),
            data.selectable()
        )));
    }
    let m = data.mandatory();
    let columns: Vec<usize> = (0..m)
        .chain(support_indices(support).into_iter().map(|j| m + j))
        .collect();
    fit_columns(data, family, &columns, lambda, options)
}

fn fit_columns(
    data: &Dataset,
    family: Family,
    columns: &[usize],
    lambda: f64,
    options: &NewtonOptions,
) -> Result<Refit> {
    data.check_family(family)?;
    let k = family.score_count(data.classes());
    if columns.is_empty() {
        // Intercept only: the MLE matches the empirical class log-odds.
        let mut counts = vec![0.0f64; k + 1];
        for &l in data.labels() {
            counts[l] += 1.0;
        }
        let cap = options.intercept_cap;
        let base = counts[k];
        let intercept = DVector::from_fn(k, |c, _| {
            if base == 0.0 || counts[c] == 0.0 {
                if counts[c] > base {
                    cap
                } else {
                    -cap
                }
            } else {
                (counts[c] / base).ln().clamp(-cap, cap)
            }
        });
        let coefficients = DMatrix::zeros(0, k);
        let converged = intercept.iter().all(|b| b.abs() < cap);
        let objective =
            negative_log_likelihood(data, family, &intercept, &DMatrix::zeros(data.p(), k));
        return Ok(Refit {
            columns: Vec::new(),
            intercept,
            coefficients,
            objective,
            lambda,
            converged,
        });
    }
    let sub = data.select_columns(columns, 0)?;
    let weights = PenaltyWeights::uniform(columns.len(), lambda)?;
    let fit = fit_weighted_ridge_with(&sub, family, &weights, options, None)?;
    Ok(Refit {
        columns: columns.to_vec(),
        intercept: fit.intercept,
        coefficients: fit.coefficients,
        objective: fit.objective,
        lambda,
        converged: fit.converged,
    })
}

/// Chooses the refit ridge level on the selected columns by k-fold
/// held-out negative log-likelihood; ties go to the smaller level.
pub fn cross_validated_ridge(
    data: &Dataset,
    family: Family,
    support: &[bool],
    folds: usize,
    seed: u64,
    options: &NewtonOptions,
) -> Result<f64> {
    let m = data.mandatory();
    let columns: Vec<usize> = (0..m)
        .chain(support_indices(support).into_iter().map(|j| m + j))
        .collect();
    let splits = kfold(data.n(), folds, seed)?;
    let mut best = (f64::INFINITY, REFIT_LAMBDA_GRID[0]);
    for &lambda in &REFIT_LAMBDA_GRID {
        let mut loss = 0.0;
        for test in &splits {
            let train = data.select_rows(&complement(data.n(), test))?;
            let held = data.select_rows(test)?;
            let fit = fit_columns(&train, family, &columns, lambda, options)?;
            let mut full = DMatrix::zeros(data.p(), fit.intercept.len());
            for (a, &j) in fit.columns.iter().enumerate() {
                full.set_row(j, &fit.coefficients.row(a));
            }
            loss +=
                negative_log_likelihood(&held, family, &fit.intercept, &full) * test.len() as f64;
        }
        if loss < best.0 {
            best = (loss, lambda);
        }
    }
    Ok(best.1)
}

//! Model-size paths: one homotopy run per `k`, a shared schedule, and
//! tuning of `k` on held-out data.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{complement, kfold, Dataset, Family};
use crate::error::{Error, Result};
use crate::optimizer::{HomotopySchedule, OptimizerConfig, Problem, SubsetResult};

/// Result for one model size; failures are kept so the path can continue.
#[derive(Debug, Clone)]
pub struct PathEntry {
    pub k: usize,
    pub result: std::result::Result<SubsetResult, String>,
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub entries: Vec<PathEntry>,
    pub schedule: HomotopySchedule,
    pub p: usize,
    pub mandatory: usize,
    pub classes: usize,
    pub selectable: usize,
    pub wall_time_s: f64,
}

impl PathResult {
    pub fn ks(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.k).collect()
    }

    pub fn get(&self, k: usize) -> Option<&SubsetResult> {
        self.entries.iter().find(|e| e.k == k)?.result.as_ref().ok()
    }

    /// One 0/1 row per `k` over the selectable columns (all zeros for a
    /// failed `k`).
    pub fn inclusion_matrix(&self) -> Vec<Vec<u8>> {
        self.entries
            .iter()
            .map(|e| match &e.result {
                Ok(r) => r.support.iter().map(|&s| u8::from(s)).collect(),
                Err(_) => vec![0; self.selectable],
            })
            .collect()
    }

    /// Adjacent model sizes whose supports are not nested.
    pub fn nesting_violations(&self) -> usize {
        self.entries
            .windows(2)
            .filter(|w| match (&w[0].result, &w[1].result) {
                (Ok(a), Ok(b)) => a.support.iter().zip(&b.support).any(|(&x, &y)| x && !y),
                _ => false,
            })
            .count()
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.result.is_err()).count()
    }
}

/// Held-out misclassification per model size and the chosen size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub errors: Vec<(usize, f64)>,
    pub k_opt: usize,
}

fn check_ks(ks: &[usize], selectable: usize) -> Result<()> {
    if ks.is_empty() {
        return Err(Error::config("k", "the model-size grid is empty"));
    }
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > selectable) {
        return Err(Error::config(
            "k",
            format!("k must satisfy 1 <= k <= {selectable}, got {k}"),
        ));
    }
    Ok(())
}

/// Runs the homotopy for every `k` in `ks` with one normalization and one
/// calibrated schedule. Model sizes run in parallel on the current rayon
/// pool; entries come back in the order of `ks`.
pub fn run_path(
    train: &Dataset,
    family: Family,
    ks: &[usize],
    template: &OptimizerConfig,
) -> Result<PathResult> {
    check_ks(ks, train.selectable())?;
    let start = Instant::now();
    let problem = Problem::new(train, family, template)?;
    let entries = ks
        .par_iter()
        .map(|&k| PathEntry {
            k,
            result: problem.run(&template.with_k(k)).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(PathResult {
        entries,
        schedule: problem.schedule,
        p: train.p(),
        mandatory: train.mandatory(),
        classes: train.classes(),
        selectable: train.selectable(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Smallest `k` attaining the minimum error.
pub fn choose_k(errors: &[(usize, f64)]) -> Option<usize> {
    errors
        .iter()
        .filter(|(_, e)| !e.is_nan())
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(k, _)| *k)
}

/// Misclassification of each refitted model on `validation`.
pub fn validation_errors(path: &PathResult, validation: &Dataset) -> Vec<(usize, f64)> {
    path.entries
        .iter()
        .map(|e| match &e.result {
            Ok(r) => (e.k, r.refit.misclassification(validation)),
            Err(_) => (e.k, f64::NAN),
        })
        .collect()
}

/// Picks the model size with the lowest validation misclassification.
pub fn tune(path: &PathResult, validation: &Dataset, family: Family) -> Result<Tuning> {
    validation.check_family(family)?;
    if (validation.p(), validation.mandatory(), validation.classes())
        != (path.p, path.mandatory, path.classes)
    {
        return Err(Error::DimensionMismatch(format!(
            "validation data has {} columns ({} mandatory, {} classes), path was fitted on {} ({}, {})",
            validation.p(),
            validation.mandatory(),
            validation.classes(),
            path.p,
            path.mandatory,
            path.classes
        )));
    }
    let errors = validation_errors(path, validation);
    let k_opt =
        choose_k(&errors).ok_or_else(|| Error::Numeric("every model size failed".into()))?;
    Ok(Tuning { errors, k_opt })
}

/// k-fold cross-validation of the model size on `train`, followed by the
/// full-data path.
pub fn cross_validate(
    train: &Dataset,
    family: Family,
    ks: &[usize],
    template: &OptimizerConfig,
    folds: usize,
    seed: u64,
) -> Result<(PathResult, Tuning)> {
    check_ks(ks, train.selectable())?;
    let splits = kfold(train.n(), folds, seed)?;
    let mut totals = vec![0.0; ks.len()];
    for test in &splits {
        let fit_rows = train.select_rows(&complement(train.n(), test))?;
        let held = train.select_rows(test)?;
        let path = run_path(&fit_rows, family, ks, template)?;
        for (total, (_, err)) in totals.iter_mut().zip(validation_errors(&path, &held)) {
            *total += err * test.len() as f64;
        }
    }
    let errors: Vec<(usize, f64)> = ks
        .iter()
        .zip(&totals)
        .map(|(&k, &t)| (k, t / train.n() as f64))
        .collect();
    let k_opt =
        choose_k(&errors).ok_or_else(|| Error::Numeric("every model size failed".into()))?;
    let path = run_path(train, family, ks, template)?;
    Ok((path, Tuning { errors, k_opt }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choose_k_breaks_ties_toward_smaller_models() {
        assert_eq!(choose_k(&[(1, 0.3), (2, 0.1), (3, 0.1)]), Some(2));
        assert_eq!(choose_k(&[(4, 0.2)]), Some(4));
        let mut errs: Vec<(usize, f64)> = (1..=10).map(|k| (k, 0.1 + 0.01 * k as f64)).collect();
        errs[4].1 = 0.0;
        assert_eq!(choose_k(&errs), Some(5));
        assert_eq!(choose_k(&[(1, f64::NAN), (2, 0.4)]), Some(2));
        assert_eq!(choose_k(&[]), None);
    }

    #[test]
    fn grid_validation() {
        assert!(check_ks(&[], 5).is_err());
        assert!(check_ks(&[0, 1], 5).is_err());
        assert!(check_ks(&[6], 5).is_err());
        assert!(check_ks(&[1, 5], 5).is_ok());
    }
}

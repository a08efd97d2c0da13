//! Synthetic benchmark: AR(1)-correlated Gaussian predictors, a sparse true
//! coefficient vector, and support-recovery metrics over replications.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Family};
use crate::error::{Error, Result};
use crate::optimizer::OptimizerConfig;
use crate::path::{run_path, tune};

/// Shape of the true coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalCase {
    /// The first `k0` coefficients equal 1.
    Equal,
    /// The first `k0` coefficients decay as `0.5^(i-1)`.
    Decay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub case: SignalCase,
    pub k0: usize,
    pub intercept: f64,
    pub seed: u64,
    pub family: Family,
    pub classes: usize,
    pub test_size: usize,
}

impl Default for SimDesign {
    fn default() -> Self {
        Self {
            n: 200,
            p: 30,
            rho: 0.0,
            case: SignalCase::Equal,
            k0: 10,
            intercept: 0.2,
            seed: 1,
            family: Family::Logistic,
            classes: 2,
            test_size: 10_000,
        }
    }
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be >= 1"));
        }
        if self.p == 0 {
            return Err(Error::config("p", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::config(
                "rho",
                format!("must lie in [0, 1), got {}", self.rho),
            ));
        }
        if self.k0 > self.p {
            return Err(Error::config(
                "k0",
                format!("must be <= p = {}, got {}", self.p, self.k0),
            ));
        }
        if !self.intercept.is_finite() {
            return Err(Error::config("intercept", "must be finite"));
        }
        match self.family {
            Family::Logistic if self.classes != 2 => Err(Error::config(
                "classes",
                "logistic designs have exactly 2 classes",
            )),
            Family::Multinomial if self.classes < 2 => Err(Error::config(
                "classes",
                format!("must be >= 2, got {}", self.classes),
            )),
            _ => Ok(()),
        }
    }

    pub fn true_coefficients(&self) -> Vec<f64> {
        (0..self.p)
            .map(|i| match (i < self.k0, self.case) {
                (false, _) => 0.0,
                (true, SignalCase::Equal) => 1.0,
                (true, SignalCase::Decay) => 0.5f64.powi(i as i32),
            })
            .collect()
    }

    pub fn truth(&self) -> Vec<bool> {
        (0..self.p).map(|i| i < self.k0).collect()
    }
}

/// `Sigma_ij = rho^|i-j|`.
pub fn ar1_covariance(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32))
}

#[derive(Debug, Clone)]
pub struct SimData {
    pub train: Dataset,
    pub test: Dataset,
    pub truth: Vec<bool>,
    pub beta: Vec<f64>,
}

/// Draws a training set of `n` rows and a test set of `test_size` rows.
///
/// Rows are `L z` with `L` the Cholesky factor of the AR(1) covariance. For
/// the logistic family labels are Bernoulli with success probability
/// `sigmoid(b0 + x^T beta)`. For `C` classes, class `c < C` gets score
/// `b0 + w_c x^T beta` with `w_c = 1 - 2(c-1)/(C-1)` against a zero
/// baseline score, which reduces to the logistic model when `C = 2`.
pub fn generate(design: &SimDesign) -> Result<SimData> {
    design.validate()?;
    let chol = ar1_covariance(design.p, design.rho)
        .cholesky()
        .ok_or_else(|| Error::Numeric("AR(1) covariance is not positive definite".into()))?;
    let factor_t = chol.l().transpose();
    let beta = design.true_coefficients();
    let mut rng = ChaCha20Rng::seed_from_u64(design.seed);
    let train = draw(design, &factor_t, &beta, design.n, &mut rng)?;
    let test = draw(design, &factor_t, &beta, design.test_size, &mut rng)?;
    Ok(SimData {
        train,
        test,
        truth: design.truth(),
        beta,
    })
}

fn draw(
    design: &SimDesign,
    factor_t: &DMatrix<f64>,
    beta: &[f64],
    rows: usize,
    rng: &mut ChaCha20Rng,
) -> Result<Dataset> {
    let p = design.p;
    let mut z = DMatrix::zeros(rows, p);
    for i in 0..rows {
        for j in 0..p {
            z[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let x = z * factor_t;
    let classes = design.classes;
    let mut labels = Vec::with_capacity(rows);
    for i in 0..rows {
        let signal: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum();
        let u: f64 = rng.random();
        if design.family == Family::Logistic {
            let prob = 1.0 / (1.0 + (-(design.intercept + signal)).exp());
            labels.push(u32::from(u < prob));
        } else {
            let scores: Vec<f64> = (1..classes)
                .map(|c| {
                    let w = 1.0 - 2.0 * (c - 1) as f64 / (classes - 1) as f64;
                    design.intercept + w * signal
                })
                .chain(std::iter::once(0.0))
                .collect();
            let mx = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = scores.iter().map(|s| (s - mx).exp()).collect();
            let mut target = u * weights.iter().sum::<f64>();
            let mut class = classes;
            for (c, w) in weights.iter().enumerate() {
                if target < *w {
                    class = c + 1;
                    break;
                }
                target -= w;
            }
            labels.push(class as u32);
        }
    }
    match design.family {
        Family::Logistic => Dataset::binary(x, &labels, 0),
        Family::Multinomial => Dataset::multiclass(x, &labels, 0, classes),
    }
}

/// Support-recovery metrics of a selected set against the true one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub sensitivity: f64,
    pub specificity: f64,
    pub selection_accuracy: f64,
    pub precision: f64,
    pub f1: f64,
    pub mcc: f64,
    /// Test-set accuracy of the fitted model, when one was scored.
    pub prediction_accuracy: Option<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Confusion-matrix metrics. F1 is 0 when precision + sensitivity = 0 and
/// MCC is 0 when any factor of its denominator vanishes.
pub fn selection_metrics(selected: &[bool], truth: &[bool]) -> Result<SelectionMetrics> {
    if selected.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "selected has {} entries, truth has {}",
            selected.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut fnn, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &t) in selected.iter().zip(truth) {
        match (s, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fnn += 1,
            (false, false) => tn += 1,
        }
    }
    let sensitivity = ratio(tp, tp + fnn);
    let specificity = ratio(tn, tn + fp);
    let precision = ratio(tp, tp + fp);
    let f1 = if precision + sensitivity > 0.0 {
        2.0 * precision * sensitivity / (precision + sensitivity)
    } else {
        0.0
    };
    let factors = [tp + fp, tp + fnn, tn + fp, tn + fnn];
    let mcc = if factors.contains(&0) {
        0.0
    } else {
        let den: f64 = factors.iter().map(|&f| f as f64).product::<f64>().sqrt();
        (tp as f64 * tn as f64 - fp as f64 * fnn as f64) / den
    };
    Ok(SelectionMetrics {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fnn,
        true_negatives: tn,
        sensitivity,
        specificity,
        selection_accuracy: ratio(tp + tn, selected.len()),
        precision,
        f1,
        mcc,
        prediction_accuracy: None,
    })
}

/// One replication of the benchmark protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub seed: u64,
    pub k_opt: usize,
    pub metrics: SelectionMetrics,
    /// Time spent on the model-size path only.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub records: Vec<ReplicationRecord>,
    pub failures: Vec<(usize, String)>,
    pub summary: Vec<MetricSummary>,
}

impl ReplicationReport {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|m| m.metric == metric)
            .map(|m| m.mean)
    }
}

/// Generates, fits the `ks` path, tunes `k` on the test set and scores one
/// replication with seed `design.seed`.
pub fn run_replication(
    design: &SimDesign,
    template: &OptimizerConfig,
    ks: &[usize],
    rep: usize,
) -> Result<ReplicationRecord> {
    let data = generate(design)?;
    let path = run_path(&data.train, design.family, ks, template)?;
    let tuning = tune(&path, &data.test, design.family)?;
    let chosen = path
        .get(tuning.k_opt)
        .ok_or_else(|| Error::Numeric(format!("model size {} failed", tuning.k_opt)))?;
    let mut metrics = selection_metrics(&chosen.support, &data.truth)?;
    metrics.prediction_accuracy = Some(1.0 - chosen.refit.misclassification(&data.test));
    Ok(ReplicationRecord {
        rep,
        seed: design.seed,
        k_opt: tuning.k_opt,
        metrics,
        wall_time_s: path.wall_time_s,
    })
}

/// Runs replications `1..=reps` with seeds `design.seed + r`, in parallel.
/// Failed replications are listed and left out of the summary.
pub fn replicate(
    design: &SimDesign,
    template: &OptimizerConfig,
    ks: &[usize],
    reps: usize,
) -> Result<ReplicationReport> {
    if reps == 0 {
        return Err(Error::config("reps", "must be >= 1"));
    }
    design.validate()?;
    template.validate_common()?;
    let outcomes: Vec<(usize, Result<ReplicationRecord>)> = (1..=reps)
        .into_par_iter()
        .map(|r| {
            let d = SimDesign {
                seed: design.seed.wrapping_add(r as u64),
                ..design.clone()
            };
            (r, run_replication(&d, template, ks, r))
        })
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, out) in outcomes {
        match out {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    let summary = summarize(&records);
    Ok(ReplicationReport {
        records,
        failures,
        summary,
    })
}

/// Column order of the per-replication CSV.
pub const REPLICATION_COLUMNS: [&str; 11] = [
    "rep",
    "seed",
    "k_opt",
    "sensitivity",
    "specificity",
    "sel_accuracy",
    "precision",
    "f1",
    "mcc",
    "pred_accuracy",
    "wall_time_s",
];

fn record_values(r: &ReplicationRecord) -> [f64; 9] {
    let m = &r.metrics;
    [
        r.k_opt as f64,
        m.sensitivity,
        m.specificity,
        m.selection_accuracy,
        m.precision,
        m.f1,
        m.mcc,
        m.prediction_accuracy.unwrap_or(f64::NAN),
        r.wall_time_s,
    ]
}

fn summarize(records: &[ReplicationRecord]) -> Vec<MetricSummary> {
    let rows: Vec<[f64; 9]> = records.iter().map(record_values).collect();
    REPLICATION_COLUMNS[2..]
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let vals: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            let (mean, se) = mean_se(&vals);
            MetricSummary {
                metric: name.to_string(),
                mean,
                se,
            }
        })
        .collect()
}

/// Mean and standard error (sample sd / sqrt(count)); the error is 0 for a
/// single value.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn write_replications_csv<W: Write>(report: &ReplicationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPLICATION_COLUMNS)?;
    for r in &report.records {
        let mut row = vec![r.rep.to_string(), r.seed.to_string()];
        row.extend(record_values(r).iter().enumerate().map(|(c, v)| {
            if c == 0 {
                format!("{v}")
            } else {
                format!("{v:.6}")
            }
        }));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(report: &ReplicationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "mean", "se", "replications", "failures"])?;
    for m in &report.summary {
        w.write_record([
            m.metric.clone(),
            format!("{:.6}", m.mean),
            format!("{:.6}", m.se),
            report.records.len().to_string(),
            report.failures.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

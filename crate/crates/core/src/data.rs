//! Problem instances: a design matrix, class labels and the count of
//! mandatory leading columns.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Response family of the generalized linear model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Logistic,
    Multinomial,
}

impl Family {
    /// Number of linear-predictor columns for `classes` outcome classes
    /// (the last class is the baseline).
    pub fn score_count(self, classes: usize) -> usize {
        classes - 1
    }

    /// Upper bound on the per-observation curvature of the negative
    /// log-likelihood with respect to the linear predictor.
    pub fn curvature_bound(self) -> f64 {
        match self {
            Family::Logistic => 0.25,
            Family::Multinomial => 0.5,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Family::Logistic),
            "multinomial" => Ok(Family::Multinomial),
            other => Err(Error::config(
                "family",
                format!("expected `logistic` or `multinomial`, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Logistic => "logistic",
            Family::Multinomial => "multinomial",
        })
    }
}

/// An immutable problem instance.
///
/// The design excludes the intercept column. Labels are stored as class
/// indices `0..C` where index `C - 1` is the baseline class. Binary data
/// coded `{0, 1}` maps `1 -> 0` and `0 -> 1`, so a binary dataset is
/// directly a two-class multinomial dataset with the same likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: DMatrix<f64>,
    labels: Vec<usize>,
    mandatory: usize,
    classes: usize,
    binary_coding: bool,
}

impl Dataset {
    /// Binary-response dataset with labels in `{0, 1}`.
    pub fn binary(design: DMatrix<f64>, response: &[u32], mandatory: usize) -> Result<Self> {
        let labels = response
            .iter()
            .enumerate()
            .map(|(i, &y)| match y {
                1 => Ok(0),
                0 => Ok(1),
                other => Err(Error::InvalidData(format!(
                    "binary response must be 0 or 1, row {i} has {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(design, labels, mandatory, 2, true)
    }

    /// Multi-class dataset with labels in `{1, ..., classes}`; class
    /// `classes` is the baseline.
    pub fn multiclass(
        design: DMatrix<f64>,
        response: &[u32],
        mandatory: usize,
        classes: usize,
    ) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        let labels = response
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                if y >= 1 && (y as usize) <= classes {
                    Ok(y as usize - 1)
                } else {
                    Err(Error::InvalidData(format!(
                        "class label must lie in 1..={classes}, row {i} has {y}"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(design, labels, mandatory, classes, false)
    }

    fn from_parts(
        design: DMatrix<f64>,
        labels: Vec<usize>,
        mandatory: usize,
        classes: usize,
        binary_coding: bool,
    ) -> Result<Self> {
        let (n, p) = design.shape();
        if n == 0 {
            return Err(Error::InvalidData("design has no rows".into()));
        }
        if p == 0 {
            return Err(Error::InvalidData("design has no columns".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidData(format!(
                "response has {} entries but design has {n} rows",
                labels.len()
            )));
        }
        if mandatory >= p {
            return Err(Error::InvalidData(format!(
                "mandatory count {mandatory} must be smaller than the column count {p}"
            )));
        }
        if let Some(idx) = design.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite design entry at row {}, column {}",
                idx % n,
                idx / n
            )));
        }
        Ok(Self {
            design,
            labels,
            mandatory,
            classes,
            binary_coding,
        })
    }

    /// Checks that `family` is compatible with the label coding.
    pub fn check_family(&self, family: Family) -> Result<()> {
        match family {
            Family::Logistic if self.classes != 2 => Err(Error::InvalidData(format!(
                "logistic family needs a binary response, data has {} classes",
                self.classes
            ))),
            _ => Ok(()),
        }
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    /// Number of leading columns that are always retained.
    pub fn mandatory(&self) -> usize {
        self.mandatory
    }

    /// Number of columns subject to selection.
    pub fn selectable(&self) -> usize {
        self.p() - self.mandatory
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn is_binary_coded(&self) -> bool {
        self.binary_coding
    }

    /// Label of row `i` in the coding the dataset was built from.
    pub fn response_code(&self, i: usize) -> u32 {
        self.code_of(self.labels[i])
    }

    /// Maps an internal class index back to the external label coding.
    pub fn code_of(&self, class: usize) -> u32 {
        if self.binary_coding {
            u32::from(class == 0)
        } else {
            class as u32 + 1
        }
    }

    /// Same labels and mandatory count with a different design of equal shape.
    pub fn with_design(&self, design: DMatrix<f64>) -> Result<Self> {
        if design.shape() != self.design.shape() {
            return Err(Error::DimensionMismatch(format!(
                "replacement design is {:?}, expected {:?}",
                design.shape(),
                self.design.shape()
            )));
        }
        Self::from_parts(
            design,
            self.labels.clone(),
            self.mandatory,
            self.classes,
            self.binary_coding,
        )
    }

    /// Keeps only the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let design = self.design.select_rows(rows);
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Self::from_parts(
            design,
            labels,
            self.mandatory,
            self.classes,
            self.binary_coding,
        )
    }

    /// Design restricted to `columns` (no mandatory semantics attached).
    pub fn columns(&self, columns: &[usize]) -> DMatrix<f64> {
        self.design.select_columns(columns)
    }

    /// A dataset with `columns` as its design; all retained columns are
    /// treated as selectable except the first `mandatory`.
    pub fn select_columns(&self, columns: &[usize], mandatory: usize) -> Result<Self> {
        Self::from_parts(
            self.columns(columns),
            self.labels.clone(),
            mandatory,
            self.classes,
            self.binary_coding,
        )
    }

    /// Checks that `other` can be scored by a model fitted on `self`.
    pub fn check_compatible(&self, other: &Dataset) -> Result<()> {
        if other.p() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} predictor columns, found {}",
                self.p(),
                other.p()
            )));
        }
        if other.mandatory != self.mandatory {
            return Err(Error::DimensionMismatch(format!(
                "expected {} mandatory columns, found {}",
                self.mandatory, other.mandatory
            )));
        }
        if other.classes != self.classes || other.binary_coding != self.binary_coding {
            return Err(Error::DimensionMismatch(format!(
                "expected {} classes, found {}",
                self.classes, other.classes
            )));
        }
        Ok(())
    }
}

/// Test-row indices for each of `folds` folds of a seeded shuffle of
/// `0..n`. Fold sizes differ by at most one.
pub fn kfold(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::config(
            "cv-folds",
            format!("must lie in 2..={n}, got {folds}"),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in order.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

/// Complement of `test` in `0..n`.
pub fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in test {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}

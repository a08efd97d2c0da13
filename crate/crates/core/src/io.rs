//! CSV ingestion and emission of datasets.
//!
//! The first row is a header. One column holds the response; every other
//! column is a predictor. Mandatory predictors are moved to the front of the
//! internal design and a column map records where each one came from.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::{Dataset, Family};
use crate::error::{Error, Result};

/// Label coding of an existing dataset, used to read compatible files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coding {
    pub classes: usize,
    pub binary: bool,
}

impl Coding {
    pub fn of(data: &Dataset) -> Self {
        Self {
            classes: data.classes(),
            binary: data.is_binary_coded(),
        }
    }
}

/// A dataset read from CSV together with its column bookkeeping.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    /// Predictor names in internal order (mandatory first).
    pub variables: Vec<String>,
    /// 1-based position in the file header of each internal column.
    pub file_columns: Vec<usize>,
    pub response: String,
}

impl LoadedData {
    /// Names of the selectable columns in internal order.
    pub fn selectable_names(&self) -> &[String] {
        &self.variables[self.dataset.mandatory()..]
    }
}

const MISSING: [&str; 6] = ["", "NA", "na", "NaN", "nan", "?"];

pub fn read_dataset_file(
    path: &Path,
    response: &str,
    mandatory: &[String],
    family: Family,
    coding: Option<Coding>,
) -> Result<LoadedData> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::InvalidData(format!("cannot open {}: {e}", path.display())))?;
    read_dataset(file, response, mandatory, family, coding)
}

/// Parses a CSV table. Binary responses use 0/1; multi-class responses use
/// 1..C. With `coding` set the labels are read in that coding (for
/// validation files scored against a fitted model).
pub fn read_dataset<R: Read>(
    input: R,
    response: &str,
    mandatory: &[String],
    family: Family,
    coding: Option<Coding>,
) -> Result<LoadedData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let response_col = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::config("response", format!("no column named `{response}`")))?;
    for name in mandatory {
        if name == response {
            return Err(Error::config(
                "mandatory",
                "the response cannot be mandatory",
            ));
        }
        if !header.contains(name) {
            return Err(Error::config(
                "mandatory",
                format!("no column named `{name}`"),
            ));
        }
    }
    let predictors: Vec<usize> = (0..header.len()).filter(|&c| c != response_col).collect();
    if predictors.is_empty() {
        return Err(Error::InvalidData(
            "the file has no predictor columns".into(),
        ));
    }
    let (front, back): (Vec<usize>, Vec<usize>) = predictors
        .iter()
        .partition(|&&c| mandatory.contains(&header[c]));
    let order: Vec<usize> = front.iter().chain(&back).copied().collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 2;
        let field = |c: usize| -> Result<f64> {
            let raw = record.get(c).unwrap_or("").trim();
            if MISSING.contains(&raw) {
                return Err(Error::InvalidData(format!(
                    "missing value in line {row}, column `{}`; impute missing values before ingestion",
                    header[c]
                )));
            }
            raw.parse::<f64>().map_err(|_| {
                Error::InvalidData(format!(
                    "non-numeric value `{raw}` in line {row}, column `{}`",
                    header[c]
                ))
            })
        };
        let y = field(response_col)?;
        if y < 0.0 || y.fract() != 0.0 || y > u32::MAX as f64 {
            return Err(Error::InvalidData(format!(
                "response in line {row} must be a non-negative integer label, got {y}"
            )));
        }
        labels.push(y as u32);
        for &c in &order {
            values.push(field(c)?);
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::InvalidData("the file has no data rows".into()));
    }
    let design = DMatrix::from_row_slice(n, order.len(), &values);
    let m = front.len();

    let binary = match coding {
        Some(c) => c.binary,
        None => family == Family::Logistic || labels.iter().all(|&y| y <= 1),
    };
    let dataset = if binary {
        Dataset::binary(design, &labels, m)?
    } else {
        let classes = match coding {
            Some(c) => c.classes,
            None => labels.iter().copied().max().unwrap_or(0) as usize,
        };
        Dataset::multiclass(design, &labels, m, classes)?
    };
    dataset.check_family(family)?;
    Ok(LoadedData {
        dataset,
        variables: order.iter().map(|&c| header[c].clone()).collect(),
        file_columns: order.iter().map(|&c| c + 1).collect(),
        response: response.to_string(),
    })
}

/// Writes `data` with predictors first and the response last. Values use 17
/// significant digits so they parse back to the same doubles.
pub fn write_dataset<W: Write>(
    data: &Dataset,
    names: &[String],
    response: &str,
    out: W,
) -> Result<()> {
    if names.len() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "{} names for {} columns",
            names.len(),
            data.p()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(names.iter().map(String::as_str).chain([response]))?;
    let x = data.design();
    for i in 0..data.n() {
        let mut row: Vec<String> = (0..data.p())
            .map(|j| format!("{:.16e}", x[(i, j)]))
            .collect();
        row.push(data.response_code(i).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Default predictor names `x1..xp`.
pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

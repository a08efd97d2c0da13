//! Command-line front end: `fit`, `path` and `simulate`.
//!
//! Every setting can also come from a flat TOML file passed with
//! `--config`; keys are the long flag names with `-` replaced by `_`.
//! Flags given on the command line take precedence over the file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::Family;
use crate::error::{Error, Result};
use crate::io::{read_dataset_file, write_dataset, Coding, LoadedData};
use crate::optimizer::{run, Diagnostics, HomotopySchedule, OptimizerConfig, RefitPenalty};
use crate::path::{cross_validate, run_path, tune, PathResult, Tuning};
use crate::simbench::{
    generate, replicate, write_replications_csv, write_summary_csv, SignalCase, SimDesign,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "combss",
    version,
    about = "Best subset selection for logistic and multinomial regression"
)]
pub struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel model sizes and replications.
    #[arg(long, global = true, env = "COMBSS_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a subset of fixed size and refit it.
    Fit(FitArgs),
    /// Run a range of model sizes and tune the size on held-out data.
    Path(PathArgs),
    /// Replicate the synthetic benchmark and summarize selection metrics.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Logistic,
    Multinomial,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Logistic => Family::Logistic,
            FamilyArg::Multinomial => Family::Multinomial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefitArg {
    Lambda,
    Cv,
}

/// Settings shared by all commands.
#[derive(Debug, Clone, Default, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Ridge level of the relaxed problem.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Grid size of the curvature schedule (the run takes 2N iterations).
    #[arg(long = "N")]
    pub grid_size: Option<usize>,
    /// Frank-Wolfe step size.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Early-stopping tolerance on the distance to the current vertex.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip unit-norm column scaling.
    #[arg(long)]
    pub no_normalize: bool,
    /// Ridge level of the refit: the run's lambda, or cross-validated.
    #[arg(long, value_enum)]
    pub refit: Option<RefitArg>,
    #[arg(long)]
    pub cv_folds: Option<usize>,
}

/// Input files.
#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Name of the response column.
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated names of columns that are always kept.
    #[arg(long, value_delimiter = ',')]
    pub mandatory: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Number of selectable columns to keep.
    #[arg(long)]
    pub k: Option<usize>,
    /// JSON output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Largest model size; sizes 1..=k-max are run.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Validation CSV for tuning the model size; k-fold CV on the training
    /// data otherwise.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// Output directory for inclusion.csv, tuning.csv and path.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    /// Signal shape: 1 for equal coefficients, 2 for decaying ones.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub case: Option<u8>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// AR(1) predictor correlation, in [0, 1).
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Size of the true support.
    #[arg(long)]
    pub k0: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Class count for multinomial designs.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    /// Also write each replication's training and test data as CSV.
    #[arg(long)]
    pub write_data: bool,
    /// Output directory for replications.csv and summary.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flat view of a settings file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    data: Option<PathBuf>,
    response: Option<String>,
    mandatory: Option<Vec<String>>,
    family: Option<FamilyArg>,
    lambda: Option<f64>,
    #[serde(rename = "N")]
    grid_size: Option<usize>,
    alpha: Option<f64>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    no_normalize: bool,
    refit: Option<RefitArg>,
    cv_folds: Option<usize>,
    k: Option<usize>,
    k_max: Option<usize>,
    validation: Option<PathBuf>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    case: Option<u8>,
    p: Option<usize>,
    n: Option<usize>,
    rho: Option<f64>,
    reps: Option<usize>,
    k0: Option<usize>,
    classes: Option<usize>,
    test_size: Option<usize>,
    write_data: bool,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))
}

impl MethodArgs {
    fn merged(&self, file: &FileConfig) -> Self {
        Self {
            family: self.family.or(file.family),
            lambda: self.lambda.or(file.lambda),
            grid_size: self.grid_size.or(file.grid_size),
            alpha: self.alpha.or(file.alpha),
            epsilon: self.epsilon.or(file.epsilon),
            seed: self.seed.or(file.seed),
            no_normalize: self.no_normalize || file.no_normalize,
            refit: self.refit.or(file.refit),
            cv_folds: self.cv_folds.or(file.cv_folds),
        }
    }

    fn family(&self) -> Family {
        self.family.unwrap_or(FamilyArg::Logistic).into()
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    fn folds(&self) -> usize {
        self.cv_folds.unwrap_or(5)
    }

    fn optimizer(&self) -> Result<OptimizerConfig> {
        let defaults = OptimizerConfig::default();
        let config = OptimizerConfig {
            lambda: self.lambda.unwrap_or(defaults.lambda),
            alpha: self.alpha.unwrap_or(defaults.alpha),
            epsilon: self.epsilon.unwrap_or(defaults.epsilon),
            grid_size: self.grid_size.unwrap_or(defaults.grid_size),
            normalize: !self.no_normalize,
            refit: match self.refit {
                None | Some(RefitArg::Lambda) => RefitPenalty::SameAsLambda,
                Some(RefitArg::Cv) => RefitPenalty::CrossValidated {
                    folds: self.folds(),
                    seed: self.seed(),
                },
            },
            ..defaults
        };
        config.validate_common()?;
        Ok(config)
    }
}

impl DataArgs {
    fn merged(&self, file: &FileConfig) -> Self {
        Self {
            data: self.data.clone().or_else(|| file.data.clone()),
            response: self.response.clone().or_else(|| file.response.clone()),
            mandatory: self.mandatory.clone().or_else(|| file.mandatory.clone()),
        }
    }

    fn load(&self, family: Family) -> Result<LoadedData> {
        let data = self
            .data
            .as_ref()
            .ok_or_else(|| Error::config("data", "a training CSV is required"))?;
        let response = self
            .response
            .as_ref()
            .ok_or_else(|| Error::config("response", "the response column name is required"))?;
        read_dataset_file(data, response, self.mandatory(), family, None)
    }

    fn mandatory(&self) -> &[String] {
        self.mandatory.as_deref().unwrap_or(&[])
    }
}

/// One column of a fitted model in the JSON output.
#[derive(Debug, Serialize)]
struct ColumnReport {
    name: String,
    /// 1-based position in the input file header.
    column: usize,
    mandatory: bool,
    /// One entry per non-baseline class, on the original scale.
    coefficients: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct FitReport {
    schema_version: u32,
    command: &'static str,
    family: Family,
    classes: usize,
    k: usize,
    /// 1-based file positions of the selected columns.
    support: Vec<usize>,
    support_names: Vec<String>,
    intercept: Vec<f64>,
    /// One row per retained column (mandatory first), `C - 1` entries each.
    coefficients: Vec<Vec<f64>>,
    columns: Vec<ColumnReport>,
    objective: f64,
    refit_lambda: f64,
    refit_converged: bool,
    diagnostics: Diagnostics,
    schedule: HomotopySchedule,
    config: OptimizerConfig,
    wall_time_s: f64,
}

fn fit_report(
    loaded: &LoadedData,
    family: Family,
    config: &OptimizerConfig,
    result: &crate::optimizer::SubsetResult,
) -> FitReport {
    let m = loaded.dataset.mandatory();
    let support: Vec<usize> = result.selected().iter().map(|&j| m + j).collect();
    let refit = &result.refit;
    let columns: Vec<ColumnReport> = refit
        .columns
        .iter()
        .enumerate()
        .map(|(row, &c)| ColumnReport {
            name: loaded.variables[c].clone(),
            column: loaded.file_columns[c],
            mandatory: c < m,
            coefficients: refit.coefficients.row(row).iter().copied().collect(),
        })
        .collect();
    FitReport {
        schema_version: SCHEMA_VERSION,
        command: "fit",
        family,
        classes: loaded.dataset.classes(),
        k: result.k,
        support: support.iter().map(|&c| loaded.file_columns[c]).collect(),
        support_names: support
            .iter()
            .map(|&c| loaded.variables[c].clone())
            .collect(),
        intercept: refit.intercept.iter().copied().collect(),
        coefficients: columns.iter().map(|c| c.coefficients.clone()).collect(),
        columns,
        objective: refit.objective,
        refit_lambda: refit.lambda,
        refit_converged: refit.converged,
        diagnostics: result.diagnostics.clone(),
        schedule: result.schedule.clone(),
        config: config.with_k(result.k),
        wall_time_s: result.wall_time_s,
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text + "\n")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs, file: &FileConfig) -> Result<()> {
    let method = args.method.merged(file);
    let input = args.input.merged(file);
    let family = method.family();
    let k = args
        .k
        .or(file.k)
        .ok_or_else(|| Error::config("k", "k must satisfy k >= 1 and is required"))?;
    let config = method.optimizer()?.with_k(k);
    let loaded = input.load(family)?;
    config.validate(loaded.dataset.selectable())?;
    let result = run(&loaded.dataset, family, &config)?;
    let report = fit_report(&loaded, family, &config, &result);
    let out = args.out.clone().or_else(|| file.out.clone());
    write_json(&report, out.as_deref())?;
    if out.is_some() {
        println!("selected: {}", report.support_names.join(", "));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PathReport {
    schema_version: u32,
    command: &'static str,
    family: Family,
    ks: Vec<usize>,
    k_opt: usize,
    tuning: Vec<(usize, f64)>,
    tuned_on: String,
    selected: Vec<Vec<String>>,
    failures: Vec<(usize, String)>,
    schedule: HomotopySchedule,
    wall_time_s: f64,
}

fn cmd_path(args: &PathArgs, file: &FileConfig) -> Result<()> {
    let method = args.method.merged(file);
    let input = args.input.merged(file);
    let family = method.family();
    let template = method.optimizer()?;
    let loaded = input.load(family)?;
    let selectable = loaded.dataset.selectable();
    let k_max = args.k_max.or(file.k_max).unwrap_or(selectable.min(20));
    if k_max == 0 || k_max > selectable {
        return Err(Error::config(
            "k-max",
            format!("k must satisfy 1 <= k <= {selectable}, got k-max = {k_max}"),
        ));
    }
    let ks: Vec<usize> = (1..=k_max).collect();
    let validation = args.validation.clone().or_else(|| file.validation.clone());
    let (path, tuning, tuned_on) = match validation {
        Some(v) => {
            let held = read_dataset_file(
                &v,
                &loaded.response,
                input.mandatory(),
                family,
                Some(Coding::of(&loaded.dataset)),
            )?;
            if held.variables != loaded.variables {
                return Err(Error::DimensionMismatch(format!(
                    "validation columns {:?} differ from training columns {:?}",
                    held.variables, loaded.variables
                )));
            }
            let path = run_path(&loaded.dataset, family, &ks, &template)?;
            let tuning = tune(&path, &held.dataset, family)?;
            (path, tuning, format!("validation file {}", v.display()))
        }
        None => {
            let folds = method.folds();
            let (path, tuning) = cross_validate(
                &loaded.dataset,
                family,
                &ks,
                &template,
                folds,
                method.seed(),
            )?;
            (path, tuning, format!("{folds}-fold cross-validation"))
        }
    };
    let dir = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    write_inclusion(
        &path,
        loaded.selectable_names(),
        fs::File::create(dir.join("inclusion.csv"))?,
    )?;
    write_tuning(&tuning, fs::File::create(dir.join("tuning.csv"))?)?;
    let m = loaded.dataset.mandatory();
    let report = PathReport {
        schema_version: SCHEMA_VERSION,
        command: "path",
        family,
        ks: path.ks(),
        k_opt: tuning.k_opt,
        tuning: tuning.errors.clone(),
        tuned_on,
        selected: path
            .entries
            .iter()
            .map(|e| match &e.result {
                Ok(r) => r
                    .selected()
                    .iter()
                    .map(|&j| loaded.variables[m + j].clone())
                    .collect(),
                Err(_) => Vec::new(),
            })
            .collect(),
        failures: path
            .entries
            .iter()
            .filter_map(|e| e.result.as_ref().err().map(|msg| (e.k, msg.clone())))
            .collect(),
        schedule: path.schedule.clone(),
        wall_time_s: path.wall_time_s,
    };
    write_json(&report, Some(&dir.join("path.json")))?;
    println!("k_opt = {}", tuning.k_opt);
    if let Some(best) = path.get(tuning.k_opt) {
        let names: Vec<&str> = best
            .selected()
            .iter()
            .map(|&j| loaded.variables[m + j].as_str())
            .collect();
        println!("selected: {}", names.join(", "));
    }
    Ok(())
}

/// Rows are model sizes, columns the selectable variables.
pub fn write_inclusion<W: Write>(path: &PathResult, names: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("k").chain(names.iter().map(String::as_str)))?;
    for (entry, row) in path.entries.iter().zip(path.inclusion_matrix()) {
        let mut rec = vec![entry.k.to_string()];
        rec.extend(row.iter().map(u8::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tuning<W: Write>(tuning: &Tuning, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "validation_error"])?;
    for (k, e) in &tuning.errors {
        w.write_record([k.to_string(), format!("{e:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, file: &FileConfig) -> Result<()> {
    let method = args.method.merged(file);
    let family = method.family();
    let template = method.optimizer()?;
    let defaults = SimDesign::default();
    let classes = match family {
        Family::Logistic => 2,
        Family::Multinomial => args.classes.or(file.classes).unwrap_or(3),
    };
    let design = SimDesign {
        n: args.n.or(file.n).unwrap_or(defaults.n),
        p: args.p.or(file.p).unwrap_or(defaults.p),
        rho: args.rho.or(file.rho).unwrap_or(defaults.rho),
        case: match args.case.or(file.case).unwrap_or(1) {
            1 => SignalCase::Equal,
            2 => SignalCase::Decay,
            other => {
                return Err(Error::config(
                    "case",
                    format!("must be 1 or 2, got {other}"),
                ))
            }
        },
        k0: args.k0.or(file.k0).unwrap_or(defaults.k0),
        intercept: defaults.intercept,
        seed: method.seed(),
        family,
        classes,
        test_size: args
            .test_size
            .or(file.test_size)
            .unwrap_or(defaults.test_size),
    };
    design.validate()?;
    let reps = args.reps.or(file.reps).unwrap_or(50);
    if reps == 0 {
        return Err(Error::config("reps", "must be >= 1"));
    }
    let k_max = args.k_max.or(file.k_max).unwrap_or(design.p.min(20));
    if k_max == 0 || k_max > design.p {
        return Err(Error::config(
            "k-max",
            format!("k must satisfy 1 <= k <= {}, got k-max = {k_max}", design.p),
        ));
    }
    let ks: Vec<usize> = (1..=k_max).collect();
    let dir = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    if args.write_data || file.write_data {
        let data_dir = dir.join("data");
        fs::create_dir_all(&data_dir)?;
        let names = crate::io::default_names(design.p);
        for r in 1..=reps {
            let d = SimDesign {
                seed: design.seed.wrapping_add(r as u64),
                ..design.clone()
            };
            let sim = generate(&d)?;
            write_dataset(
                &sim.train,
                &names,
                "y",
                fs::File::create(data_dir.join(format!("rep{r}_train.csv")))?,
            )?;
            write_dataset(
                &sim.test,
                &names,
                "y",
                fs::File::create(data_dir.join(format!("rep{r}_test.csv")))?,
            )?;
        }
    }
    let report = replicate(&design, &template, &ks, reps)?;
    write_replications_csv(&report, fs::File::create(dir.join("replications.csv"))?)?;
    write_summary_csv(&report, fs::File::create(dir.join("summary.csv"))?)?;
    println!(
        "{} of {} replications succeeded",
        report.records.len(),
        reps
    );
    for (r, msg) in &report.failures {
        println!("replication {r} failed: {msg}");
    }
    println!("{:<14} {:>10}   {:>10}", "metric", "mean", "se");
    for m in &report.summary {
        println!("{:<14} {:>10.4} ± {:>10.4}", m.metric, m.mean, m.se);
    }
    if report.records.is_empty() {
        return Err(Error::Numeric("every replication failed".into()));
    }
    Ok(())
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    let file = load_config(cli.config.as_deref())?;
    let threads = cli.threads.or(file.threads);
    let body = || match &cli.command {
        Command::Fit(a) => cmd_fit(a, &file),
        Command::Path(a) => cmd_path(a, &file),
        Command::Simulate(a) => cmd_simulate(a, &file),
    };
    match threads {
        None => body(),
        Some(0) => Err(Error::config("threads", "must be >= 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?
            .install(body),
    }
}

/// Exit status for an error: 2 for bad input or settings, 1 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_validation() {
        2
    } else {
        1
    }
}

/// Parses the process arguments, runs the command and maps the outcome to
/// an exit status.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_file_values() {
        let file: FileConfig =
            toml::from_str("lambda = 0.5\nN = 10\nalpha = 0.2\nfamily = \"multinomial\"").unwrap();
        let cli = Cli::parse_from(["combss", "fit", "--lambda", "0.1", "--k", "2"]);
        let Command::Fit(args) = cli.command else {
            panic!()
        };
        let m = args.method.merged(&file);
        assert_eq!(m.lambda, Some(0.1));
        assert_eq!(m.grid_size, Some(10));
        assert_eq!(m.family(), Family::Multinomial);
        let cfg = m.optimizer().unwrap();
        assert_eq!((cfg.alpha, cfg.grid_size), (0.2, 10));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("lamda = 1").is_err());
    }
}

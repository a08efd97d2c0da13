//! Best subset selection for logistic and multinomial regression.
//!
//! The discrete search over supports of size `k` is replaced by a
//! continuous relaxation over `t in [0, 1]^p` with `sum t = k`. Each
//! evaluation of the relaxed objective solves a weighted ridge GLM; its
//! gradient comes from the envelope theorem. A Frank-Wolfe homotopy in the
//! curvature parameter drives `t` to a binary vertex, which is refitted.
//!
//! ```no_run
//! use combss_glm::{run, Dataset, Family, OptimizerConfig};
//! # let (x, y) = (nalgebra::DMatrix::<f64>::zeros(10, 3), vec![0u32; 10]);
//! let data = Dataset::binary(x, &y, 0)?;
//! let result = run(&data, Family::Logistic, &OptimizerConfig::default().with_k(2))?;
//! println!("{:?}", result.selected());
//! # Ok::<(), combss_glm::Error>(())
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod glm;
pub mod io;
pub mod optimizer;
pub mod path;
pub mod relaxation;
pub mod simbench;

pub use data::{Dataset, Family};
pub use error::{Error, Result};
pub use glm::{
    fit_weighted_ridge, fit_weighted_ridge_with, InnerFit, NewtonOptions, PenaltyWeights,
};
pub use optimizer::{run, HomotopySchedule, OptimizerConfig, Problem, RefitPenalty, SubsetResult};
pub use path::{cross_validate, run_path, tune, PathResult, Tuning};
pub use relaxation::{concavity_threshold, evaluate, value_function, SelectionPoint};
pub use simbench::{generate, replicate, selection_metrics, SelectionMetrics, SimDesign};

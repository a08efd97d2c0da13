//! Replicates the synthetic benchmark for a few seeds and prints mean and
//! standard error of each selection metric.
//!
//! cargo run --release --example simulation_replicates -- [reps] [rho]

use combss_glm::simbench::{replicate, SimDesign};
use combss_glm::OptimizerConfig;

fn main() -> combss_glm::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().map_or(5, |s| s.parse().expect("reps"));
    let rho: f64 = args.next().map_or(0.6, |s| s.parse().expect("rho"));
    let design = SimDesign {
        n: 200,
        p: 30,
        rho,
        seed: 2024,
        ..Default::default()
    };
    let config = OptimizerConfig {
        grid_size: 50,
        ..Default::default()
    };
    let ks: Vec<usize> = (1..=20).collect();

    let report = replicate(&design, &config, &ks, reps)?;
    for r in &report.records {
        println!(
            "rep {:>2}  k_opt {:>2}  mcc {:.3}  accuracy {:.4}  {:.2}s",
            r.rep,
            r.k_opt,
            r.metrics.mcc,
            r.metrics.prediction_accuracy.unwrap_or(f64::NAN),
            r.wall_time_s
        );
    }
    for m in &report.summary {
        println!("{:<14} {:.4} ± {:.4}", m.metric, m.mean, m.se);
    }
    Ok(())
}

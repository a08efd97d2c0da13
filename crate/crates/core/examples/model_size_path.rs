//! Runs the whole `k = 1..=20` path on a high-dimensional synthetic design,
//! tunes `k` on the test set and prints the inclusion pattern.
//!
//! cargo run --release --example model_size_path -- [p]

use combss_glm::simbench::{generate, SimDesign};
use combss_glm::{run_path, tune, Family, OptimizerConfig};

fn main() -> combss_glm::Result<()> {
    let p: usize = std::env::args()
        .nth(1)
        .map_or(1000, |s| s.parse().expect("p"));
    let design = SimDesign {
        n: 200,
        p,
        rho: 0.5,
        seed: 7,
        test_size: 2000,
        ..Default::default()
    };
    let sim = generate(&design)?;
    let ks: Vec<usize> = (1..=20).collect();

    let path = run_path(
        &sim.train,
        Family::Logistic,
        &ks,
        &OptimizerConfig::default(),
    )?;
    println!(
        "path over {} model sizes took {:.2}s",
        ks.len(),
        path.wall_time_s
    );

    let tuning = tune(&path, &sim.test, Family::Logistic)?;
    for (k, err) in &tuning.errors {
        let picked = path.get(*k).map(|r| r.selected()).unwrap_or_default();
        let hits = picked.iter().filter(|&&j| sim.truth[j]).count();
        println!("k {k:>2}  test error {err:.4}  true positives {hits}");
    }
    println!("k_opt = {}", tuning.k_opt);
    println!("nesting violations: {}", path.nesting_violations());
    Ok(())
}

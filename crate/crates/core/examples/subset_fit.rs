//! Selects a subset of fixed size, with one column forced into the model,
//! and prints the refitted coefficients and the run diagnostics.

use combss_glm::simbench::{generate, SimDesign};
use combss_glm::{run, Family, OptimizerConfig};

fn main() -> combss_glm::Result<()> {
    let sim = generate(&SimDesign {
        n: 200,
        p: 30,
        rho: 0.3,
        seed: 11,
        test_size: 2000,
        ..Default::default()
    })?;
    // Keep column 29 (a noise column) in every model by moving it to the front.
    let order: Vec<usize> = std::iter::once(29).chain(0..29).collect();
    let train = sim.train.select_columns(&order, 1)?;
    let test = sim.test.select_columns(&order, 1)?;

    let config = OptimizerConfig {
        k: 10,
        grid_size: 50,
        ..Default::default()
    };
    let result = run(&train, Family::Logistic, &config)?;
    let chosen: Vec<usize> = result.selected().iter().map(|&j| order[1 + j]).collect();
    println!("selected original columns {chosen:?}");
    println!("intercept {:.4}", result.refit.intercept[0]);
    for (row, &c) in result.refit.columns.iter().enumerate() {
        println!(
            "  x{:<3} {:>8.4}",
            order[c] + 1,
            result.refit.coefficients[(row, 0)]
        );
    }
    println!(
        "test misclassification {:.4}",
        result.refit.misclassification(&test)
    );
    let d = &result.diagnostics;
    println!(
        "{} iterations, {} vertex changes, {} Newton steps, {:.3}s",
        d.iterations, d.vertex_changes, d.newton_iterations, result.wall_time_s
    );
    Ok(())
}

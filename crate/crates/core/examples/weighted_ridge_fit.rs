//! Fits a logistic model with a different ridge weight on each column and
//! shows how an infinite weight removes a column.

use combss_glm::glm::{fit_weighted_ridge, negative_log_likelihood};
use combss_glm::simbench::{generate, SimDesign};
use combss_glm::{Family, PenaltyWeights};

fn main() -> combss_glm::Result<()> {
    let sim = generate(&SimDesign {
        n: 100,
        p: 5,
        k0: 3,
        test_size: 1,
        ..Default::default()
    })?;
    let data = &sim.train;

    for weights in [
        vec![0.0; 5],
        vec![0.01; 5],
        vec![0.01, 0.01, 0.01, 1.0, f64::INFINITY],
    ] {
        let w = PenaltyWeights::new(weights.clone())?;
        let fit = fit_weighted_ridge(data, Family::Logistic, &w)?;
        let nll =
            negative_log_likelihood(data, Family::Logistic, &fit.intercept, &fit.coefficients);
        println!("weights {weights:?}");
        println!("  intercept {:.4}", fit.intercept[0]);
        println!(
            "  coefficients {:.4?}",
            fit.coefficients.column(0).as_slice()
        );
        println!(
            "  objective {:.6}  nll {:.6}  newton steps {}",
            fit.objective, nll, fit.iterations
        );
    }
    Ok(())
}

//! Subset selection for a three-class response, and the two-class case run
//! through both families.

use combss_glm::relaxation::concavity_threshold;
use combss_glm::simbench::{generate, selection_metrics, SimDesign};
use combss_glm::{run, Family, OptimizerConfig};

fn main() -> combss_glm::Result<()> {
    let design = SimDesign {
        n: 300,
        p: 20,
        k0: 5,
        family: Family::Multinomial,
        classes: 3,
        test_size: 3000,
        ..Default::default()
    };
    let sim = generate(&design)?;
    let result = run(
        &sim.train,
        Family::Multinomial,
        &OptimizerConfig {
            k: 5,
            ..Default::default()
        },
    )?;
    let metrics = selection_metrics(&result.support, &sim.truth)?;
    println!(
        "three classes: selected {:?}, mcc {:.3}",
        result.selected(),
        metrics.mcc
    );
    println!(
        "coefficients are {} x {}",
        result.refit.coefficients.nrows(),
        result.refit.coefficients.ncols()
    );
    println!(
        "test misclassification {:.4}",
        result.refit.misclassification(&sim.test)
    );

    let binary = generate(&SimDesign {
        n: 200,
        p: 20,
        k0: 5,
        test_size: 1,
        ..Default::default()
    })?;
    let config = OptimizerConfig {
        k: 5,
        ..Default::default()
    };
    let a = run(&binary.train, Family::Logistic, &config)?;
    let b = run(&binary.train, Family::Multinomial, &config)?;
    println!(
        "two classes: logistic {:?}, multinomial {:?}",
        a.selected(),
        b.selected()
    );
    let dl = concavity_threshold(&binary.train, Family::Logistic)?.delta;
    let dm = concavity_threshold(&binary.train, Family::Multinomial)?.delta;
    println!("threshold ratio {}", dm / dl);
    Ok(())
}

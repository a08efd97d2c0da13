//! Evaluates the relaxed objective and its envelope gradient at a point of
//! the relaxed selection space and compares one entry against a central
//! difference.

use combss_glm::relaxation::{
    concavity_threshold, evaluate, normalize_columns, value_function, RelaxationParams,
};
use combss_glm::simbench::{generate, SimDesign};
use combss_glm::{Family, NewtonOptions, SelectionPoint};

fn main() -> combss_glm::Result<()> {
    let sim = generate(&SimDesign {
        n: 60,
        p: 8,
        k0: 3,
        test_size: 1,
        ..Default::default()
    })?;
    let (data, _) = normalize_columns(&sim.train)?;
    let threshold = concavity_threshold(&data, Family::Logistic)?;
    println!(
        "concavity threshold {:.6} (largest eigenvalue {:.4})",
        threshold.delta, threshold.nu_max
    );

    let params = RelaxationParams::new(0.0, 0.5 * threshold.delta)?;
    let options = NewtonOptions {
        tolerance: 1e-11,
        ..Default::default()
    };
    let t = SelectionPoint::new(vec![0.6, 0.5, 0.4, 0.3, 0.3, 0.3, 0.3, 0.3], 3)?;
    let eval = evaluate(&data, Family::Logistic, &t, params, &options, None)?;
    println!("f(t) = {:.8}", eval.value);
    println!("gradient {:.6?}", eval.gradient);

    let h = 1e-5;
    let mut plus = t.as_slice().to_vec();
    let mut minus = plus.clone();
    plus[0] += h;
    minus[0] -= h;
    let fp = value_function(
        &data,
        Family::Logistic,
        &SelectionPoint::new(plus, 3)?,
        params,
        &options,
    )?;
    let fm = value_function(
        &data,
        Family::Logistic,
        &SelectionPoint::new(minus, 3)?,
        params,
        &options,
    )?;
    println!("central difference for t_1: {:.6}", (fp - fm) / (2.0 * h));
    Ok(())
}

//! Acceptance criteria. Runs every criterion, prints one PASS/FAIL line for
//! each and exits non-zero if any failed.

mod common;

use std::time::Instant;

use combss_glm::optimizer::refit;
use combss_glm::relaxation::{
    concavity_threshold, evaluate, normalize_columns, value_function, RelaxationParams,
};
use combss_glm::simbench::{generate, replicate, SimDesign};
use combss_glm::{run, run_path, Dataset, Family, NewtonOptions, OptimizerConfig, SelectionPoint};
use common::*;
use rand::Rng;

type Outcome = Result<(bool, String), combss_glm::Error>;
type Criterion = (&'static str, fn() -> Outcome);

fn tight() -> NewtonOptions {
    NewtonOptions {
        tolerance: 1e-10,
        ..Default::default()
    }
}

fn low_dimensional_replication() -> Outcome {
    let design = SimDesign {
        n: 200,
        p: 30,
        rho: 0.6,
        seed: 1,
        ..Default::default()
    };
    let config = OptimizerConfig {
        grid_size: 50,
        ..Default::default()
    };
    let ks: Vec<usize> = (1..=20).collect();
    let report = replicate(&design, &config, &ks, 10)?;
    let acc = report.mean("pred_accuracy").unwrap_or(f64::NAN);
    let k = report.mean("k_opt").unwrap_or(f64::NAN);
    let ok = report.failures.is_empty() && (acc - 0.89).abs() <= 0.04 && (k - 9.9).abs() <= 1.5;
    Ok((
        ok,
        format!(
            "mean test accuracy {acc:.4} (0.89 ± 0.04), mean k {k:.2} (9.9 ± 1.5), {} failed reps",
            report.failures.len()
        ),
    ))
}

fn high_dimensional_runtime() -> Outcome {
    let sim = generate(&SimDesign {
        n: 200,
        p: 1000,
        rho: 0.6,
        seed: 3,
        test_size: 1,
        ..Default::default()
    })?;
    let ks: Vec<usize> = (1..=20).collect();
    let start = Instant::now();
    let path = run_path(
        &sim.train,
        Family::Logistic,
        &ks,
        &OptimizerConfig::default(),
    )?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        secs < 60.0 && path.failures() == 0,
        format!("k = 1..20 path on n=200, p=1000 took {secs:.2}s (< 60s)"),
    ))
}

fn envelope_gradient_check() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for inst in 0..50u64 {
        let p = r.random_range(3..=20);
        let k = r.random_range(1..p);
        let (data, _) = normalize_columns(&logistic_instance(40, p, k.min(5), 1000 + inst))?;
        let conc = concavity_threshold(&data, Family::Logistic)?.delta;
        let params = RelaxationParams::new(0.0, conc * 10f64.powf(r.random_range(-3.0..0.0)))?;
        let t = interior_point(p, k, 0.1, &mut r);
        let g = evaluate(&data, Family::Logistic, &t, params, &tight(), None)?.gradient;
        let h = 1e-6;
        let mut fd = Vec::with_capacity(p);
        for j in 0..p {
            let mut up = t.as_slice().to_vec();
            let mut dn = up.clone();
            up[j] += h;
            dn[j] -= h;
            let fu = value_function(
                &data,
                Family::Logistic,
                &SelectionPoint::new(up, k)?,
                params,
                &tight(),
            )?;
            let fl = value_function(
                &data,
                Family::Logistic,
                &SelectionPoint::new(dn, k)?,
                params,
                &tight(),
            )?;
            fd.push((fu - fl) / (2.0 * h));
        }
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = g
            .iter()
            .zip(&fd)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(diff / scale);
    }
    Ok((
        worst <= 1e-4,
        format!("worst relative error over 50 instances {worst:.2e} (<= 1e-4)"),
    ))
}

fn monotone_in_delta() -> Outcome {
    let mut r = rng(4);
    let mut worst = f64::INFINITY;
    for draw in 0..100u64 {
        let p = r.random_range(3..=12);
        let k = r.random_range(1..p);
        let (data, _) = normalize_columns(&logistic_instance(50, p, k.min(4), 2000 + draw))?;
        let conc = concavity_threshold(&data, Family::Logistic)?.delta;
        let lambda = if draw % 2 == 0 {
            0.0
        } else {
            r.random_range(0.0..0.01)
        };
        let d1 = conc * 10f64.powf(r.random_range(-3.0..0.5));
        let d2 = d1 * 10f64.powf(r.random_range(0.01..2.0));
        let t = interior_point(p, k, 0.01, &mut r);
        let f1 = value_function(
            &data,
            Family::Logistic,
            &t,
            RelaxationParams::new(lambda, d1)?,
            &tight(),
        )?;
        let f2 = value_function(
            &data,
            Family::Logistic,
            &t,
            RelaxationParams::new(lambda, d2)?,
            &tight(),
        )?;
        worst = worst.min(f2 - f1);
    }
    Ok((
        worst >= -1e-9,
        format!("min f(delta2) - f(delta1) over 100 draws {worst:.3e} (>= -1e-9)"),
    ))
}

fn concave_past_threshold() -> Outcome {
    let mut r = rng(5);
    let mut worst = f64::INFINITY;
    for pair in 0..100u64 {
        let p = r.random_range(3..=15);
        let k = r.random_range(1..p);
        let (data, _) = normalize_columns(&logistic_instance(50, p, k.min(4), 3000 + pair / 4))?;
        let params =
            RelaxationParams::new(0.0, concavity_threshold(&data, Family::Logistic)?.delta)?;
        let a = interior_point(p, k, 0.01, &mut r);
        let b = interior_point(p, k, 0.01, &mut r);
        let mid: Vec<f64> = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| 0.5 * (x + y))
            .collect();
        let f = |t: &SelectionPoint| value_function(&data, Family::Logistic, t, params, &tight());
        let gap = f(&SelectionPoint::new(mid, k)?)? - 0.5 * (f(&a)? + f(&b)?);
        worst = worst.min(gap);
    }
    Ok((
        worst >= -1e-8,
        format!("min midpoint gap over 100 pairs {worst:.3e} (>= -1e-8)"),
    ))
}

fn exhaustive(data: &Dataset, k: usize) -> combss_glm::Result<(Vec<bool>, f64)> {
    let p = data.p();
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 0u32..(1 << p) {
        if mask.count_ones() as usize == k {
            let s: Vec<bool> = (0..p).map(|j| mask >> j & 1 == 1).collect();
            let obj = refit(data, Family::Logistic, &s, 0.0)?.objective;
            if obj < best.1 {
                best = (s, obj);
            }
        }
    }
    Ok(best)
}

fn brute_force_agreement() -> Outcome {
    let (mut within, mut exact) = (0, 0);
    for seed in 0..20 {
        let data = logistic_instance(200, 10, 3, 4000 + seed);
        let res = run(
            &data,
            Family::Logistic,
            &OptimizerConfig {
                k: 3,
                ..Default::default()
            },
        )?;
        let (support, obj) = exhaustive(&data, 3)?;
        within += usize::from(res.refit.objective <= obj + 0.01 * obj.abs());
        exact += usize::from(res.support == support);
    }
    Ok((
        within == 20 && exact >= 16,
        format!("within 1% in {within}/20, exact argmin in {exact}/20 (need 20 and >= 16)"),
    ))
}

fn scaling_invariance() -> Outcome {
    let mut same = 0;
    for seed in 0..10u64 {
        let data = logistic_instance(150, 20, 5, 5000 + seed);
        let col = (seed as usize * 7) % 20;
        let mut x = data.design().clone();
        x.column_mut(col).scale_mut(7.0);
        let scaled = data.with_design(x)?;
        let cfg = OptimizerConfig {
            k: 5,
            ..Default::default()
        };
        let a = run(&data, Family::Logistic, &cfg)?;
        let b = run(&scaled, Family::Logistic, &cfg)?;
        same += usize::from(a.support == b.support);
    }
    Ok((
        same == 10,
        format!("identical support after scaling one column by 7 in {same}/10"),
    ))
}

fn multinomial_consistency() -> Outcome {
    let mut same = 0;
    let mut ratios_exact = true;
    for seed in 0..10u64 {
        let data = logistic_instance(150, 15, 4, 6000 + seed);
        let cfg = OptimizerConfig {
            k: 4,
            ..Default::default()
        };
        let a = run(&data, Family::Logistic, &cfg)?;
        let b = run(&data, Family::Multinomial, &cfg)?;
        same += usize::from(a.support == b.support);
        let (norm, _) = normalize_columns(&data)?;
        let dl = concavity_threshold(&norm, Family::Logistic)?.delta;
        let dm = concavity_threshold(&norm, Family::Multinomial)?.delta;
        ratios_exact &= dm / dl == 2.0;
    }
    Ok((
        same == 10 && ratios_exact,
        format!("same support in {same}/10, threshold ratio exactly 2: {ratios_exact}"),
    ))
}

fn mcc_trend() -> Outcome {
    let design = SimDesign {
        n: 200,
        p: 30,
        rho: 0.0,
        seed: 9,
        ..Default::default()
    };
    let ks: Vec<usize> = (1..=20).collect();
    let report = replicate(&design, &OptimizerConfig::default(), &ks, 20)?;
    let mcc = report.mean("mcc").unwrap_or(f64::NAN);
    Ok((
        mcc > 0.9 && report.failures.is_empty(),
        format!("mean MCC over 20 replications {mcc:.4} (> 0.9)"),
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "1 low-dimensional replication accuracy and size",
            low_dimensional_replication,
        ),
        ("2 high-dimensional path runtime", high_dimensional_runtime),
        (
            "3 envelope gradient vs finite differences",
            envelope_gradient_check,
        ),
        ("4 monotonicity in delta", monotone_in_delta),
        ("5 concavity at the threshold", concave_past_threshold),
        ("6 exhaustive search agreement", brute_force_agreement),
        ("7 column scaling invariance", scaling_invariance),
        (
            "8 two-class multinomial vs logistic",
            multinomial_consistency,
        ),
        ("9 mean MCC on uncorrelated design", mcc_trend),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "{} criterion {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}

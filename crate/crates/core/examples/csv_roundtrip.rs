//! Writes a simulated dataset to CSV, reads it back with a mandatory column
//! and runs a fit on the parsed data.

use combss_glm::io::{default_names, read_dataset, write_dataset};
use combss_glm::simbench::{generate, SimDesign};
use combss_glm::{run, Family, OptimizerConfig};

fn main() -> combss_glm::Result<()> {
    let sim = generate(&SimDesign {
        n: 150,
        p: 12,
        k0: 4,
        test_size: 1,
        ..Default::default()
    })?;
    let mut buf = Vec::new();
    write_dataset(&sim.train, &default_names(12), "y", &mut buf)?;
    println!(
        "{}",
        String::from_utf8_lossy(&buf)
            .lines()
            .take(2)
            .collect::<Vec<_>>()
            .join("\n")
    );

    let loaded = read_dataset(
        buf.as_slice(),
        "y",
        &["x12".to_string()],
        Family::Logistic,
        None,
    )?;
    println!("internal column order {:?}", loaded.variables);
    let result = run(
        &loaded.dataset,
        Family::Logistic,
        &OptimizerConfig {
            k: 4,
            ..Default::default()
        },
    )?;
    let names: Vec<&str> = result
        .selected()
        .iter()
        .map(|&j| loaded.selectable_names()[j].as_str())
        .collect();
    println!("selected {names:?} alongside mandatory x12");
    Ok(())
}

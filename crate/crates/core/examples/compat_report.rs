//! Runs the compatibility experiment through the harness and prints the
//! report JSON.

use cusplab::harness::{execute, ExperimentConfig, ExperimentKind};

pub fn run_example() -> cusplab::Result<()> {
    let mut config = ExperimentConfig {
        kind: ExperimentKind::Compat,
        samples: 3,
        seed: 5,
        ..ExperimentConfig::default()
    };
    config.geometry.r_max = 12.0;
    let outcome = execute(&config)?;
    for c in &outcome.report.certificates {
        println!("{:<10} {} {:.4e}", c.tag, if c.pass { "pass" } else { "FAIL" }, c.constant);
    }
    println!("{}", serde_json::to_string_pretty(&outcome.report.measured)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> cusplab::Result<()> {
    run_example()
}

//! Growth certification of a planted instance: the weight iteration, the
//! recovered trivial variation and the final certificates.

use cusplab::bootstrap::{run_growth_certification, BootstrapParams};
use cusplab::geometry::{CuspMetric, FlatTorusMetric};
use cusplab::grid::RadialGrid;
use cusplab::sampling::{planted_instance, PlantSpec};
use cusplab::tensor::TrivialEinsteinVariation;

pub fn run_example() -> cusplab::Result<()> {
    let params = BootstrapParams::default();
    let cusp = CuspMetric::new(FlatTorusMetric::square(1.0)?, RadialGrid::new(20.0, 0.01)?);
    let spec = PlantSpec {
        v: TrivialEinsteinVariation::traceless(0.3, 0.1),
        ..PlantSpec::default()
    };
    let inst = planted_instance(cusp, 6, params.envelope()?, spec)?;
    let cert = run_growth_certification(&inst.h, &inst.f, &params, 0)?;
    println!("σ trajectory: {:?}", cert.trajectory);
    for s in &cert.steps {
        println!(
            "σ = {:.2}: c1 {:.3e}, c2 {:.3e}, closure {:.3e}",
            s.sigma, s.c1, s.c2, s.closure_constant
        );
    }
    println!("planted   {:?}", spec.v);
    println!("recovered {:?}", cert.v);
    println!("rate of |ĥ − v|: {:?}", cert.rate.rate);
    for c in &cert.certificates {
        println!("({}) {} C = {:.4e}", c.tag, if c.pass { "pass" } else { "FAIL" }, c.constant);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> cusplab::Result<()> {
    run_example()
}

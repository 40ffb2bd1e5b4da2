//! Fiber averaging of a random Fourier-expanded tensor: the average is the
//! zero mode, and the oscillating part is controlled by `D e^{-r} |h|_{C¹}`.

use cusplab::geometry::FlatTorusMetric;
use cusplab::grid::RadialGrid;
use cusplab::sampling::{random_tensor, rng};
use cusplab::tensor::{average, check_averaging_properties};

pub fn run_example() -> cusplab::Result<()> {
    let grid = RadialGrid::new(4.0, 0.02)?;
    let flat = FlatTorusMetric::square(0.8)?;
    let h = random_tensor(flat, grid, 4, 2, 1.0, 0.5..=1.5, &mut rng(11))?;
    let hat = average(&h);
    let report = check_averaging_properties(&h)?;
    println!("modes stored: {}", h.modes().count());
    println!("sup |ĥ|: {:.4}", hat.sup_norm());
    println!("pointwise constant: {:.4}", report.c_pointwise);
    println!("radial commutation defect: {:.2e}", report.radial_commutation);
    println!("trace commutation defect: {:.2e}", report.trace_commutation);
    println!("oscillation constant: {:.4}", report.c_oscillation);
    Ok(())
}

#[allow(dead_code)]
fn main() -> cusplab::Result<()> {
    run_example()
}

//! The cusp operator on radial tensors: trivial variations lie in its
//! kernel, and the decaying inverse solve reproduces a known field.

use cusplab::grid::RadialGrid;
use cusplab::operator::{apply_l_cusp, solve_l_cusp, BoundaryData};
use cusplab::tensor::{RadialTensorField, TrivialEinsteinVariation, H13, H33};

pub fn run_example() -> cusplab::Result<()> {
    let grid = RadialGrid::new(10.0, 0.01)?;
    let v = TrivialEinsteinVariation::traceless(0.4, -0.2);
    println!("|L v| = {:.2e}", apply_l_cusp(&v.to_radial(grid)).sup_norm());

    let h = RadialTensorField::from_fn(grid, |c, r| match c {
        H33 => (-1.5 * r).exp(),
        H13 => 0.5 * (-2.5 * r).exp(),
        _ => 0.0,
    });
    let f = apply_l_cusp(&h);
    let mut h0 = [0.0; 6];
    for (c, x) in h0.iter_mut().enumerate() {
        *x = h.component(c)[0];
    }
    let boundary = BoundaryData { h0, dh0: None };
    let solved = solve_l_cusp(&f, &boundary, true)?;
    println!("decaying solve error: {:.2e}", solved.sub(&h).sup_norm());
    Ok(())
}

#[allow(dead_code)]
fn main() -> cusplab::Result<()> {
    run_example()
}

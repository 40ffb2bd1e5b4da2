//! Rate transfer for `y'' − 2y' − 4y = e^{-0.3r}`: the decaying fundamental
//! solution is recovered and the remainder is certified against the forcing
//! rate on several truncation radii.

use cusplab::grid::RadialGrid;
use cusplab::ode::{decompose_growth, decompose_growth_l1, GrowthEnvelope, QuadraticODE};

pub fn run_example() -> cusplab::Result<()> {
    let ode = QuadraticODE::q1();
    let (l1, l2) = ode.roots();
    println!("roots {l1:.6}, {l2:.6}");
    let particular = 1.0 / ode.eval(-0.3);
    for r_max in [5.0, 10.0, 20.0] {
        let grid = RadialGrid::new(r_max, 0.01)?;
        let y = grid.sample(|r| 0.7 * (l1 * r).exp() + particular * (-0.3 * r).exp());
        let d = decompose_growth(&grid, &y, &ode, &GrowthEnvelope::new(vec![(1.0, -0.3)])?)?;
        println!(
            "R = {r_max:>4}: A1 = {:.8}, A2 = {:.1e}, constant {:.6}",
            d.a1, d.a2, d.constant
        );
    }

    let grid = RadialGrid::new(20.0, 0.01)?;
    let psi = grid.sample(|r| (-r).exp());
    let y = grid.sample(|r| (l1 * r).exp() + (-0.5 * r).exp() / ode.eval(-0.5));
    let d = decompose_growth_l1(&grid, &y, &ode, 0.5, &psi)?;
    println!("L¹ envelope: ‖ψ‖ = {:.4}, constant {:.4}", d.psi_l1.unwrap_or(0.0), d.constant);
    Ok(())
}

#[allow(dead_code)]
fn main() -> cusplab::Result<()> {
    run_example()
}

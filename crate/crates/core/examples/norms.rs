//! Weighted norms of a forcing with unit `‖f‖_{0,λ}` across the admissible
//! weights, against the closed-form integral bound, and the weighted `H²`
//! norm of a field decaying fast enough to absorb the tangential growth.

use cusplab::geometry::FlatTorusMetric;
use cusplab::grid::RadialGrid;
use cusplab::norms::{norm_0_lambda, norm_integral_bound, weighted_h2, weighted_l2, WeightParams};
use cusplab::sampling::{random_tensor, rng};

pub fn run_example() -> cusplab::Result<()> {
    let grid = RadialGrid::new(15.0, 0.01)?;
    let flat = FlatTorusMetric::square(1.0)?;
    let lambda = 0.5;
    let params = WeightParams::new(lambda, 1.5)?;
    let f = random_tensor(flat, grid, 4, 2, 1.0, 0.6..=1.2, &mut rng(3))?;
    let f = f.scale(1.0 / norm_0_lambda(&f, lambda));
    let h = random_tensor(flat, grid, 4, 1, 1.0, 3.0..=3.5, &mut rng(4))?;
    println!("b = {}, s0 = {}, excluded σ* = {}", params.b(), params.s0(), params.sigma_star());
    println!("{:>6} {:>10} {:>10} {:>10}", "σ", "L²_σ(f)", "bound", "H²_σ(h)");
    for j in 0..=4 {
        let sigma = params.b() * j as f64 / 4.0;
        println!(
            "{sigma:>6.3} {:>10.5} {:>10.5} {:>10.5}",
            weighted_l2(&f, sigma),
            norm_integral_bound(&grid, flat.area(), sigma, lambda),
            weighted_h2(&h, sigma)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> cusplab::Result<()> {
    run_example()
}

//! Level tori of a skewed cusp: diameter and area shrink like `e^{-r}` and
//! `e^{-2r}`, and `λ₁ diam²` is scale invariant.

use cusplab::geometry::{CuspMetric, FlatTorusMetric};
use cusplab::grid::RadialGrid;

pub fn run_example() -> cusplab::Result<()> {
    let flat = FlatTorusMetric::from_basis([1.0, 0.0], [0.3, 1.7])?;
    let cusp = CuspMetric::new(flat, RadialGrid::new(6.0, 0.5)?);
    println!(
        "T(0): area {:.4}, diameter {:.4}, condition {:.3}, λ₁ {:.4}",
        flat.area(),
        flat.diameter(),
        flat.condition_number(),
        flat.lambda1()?
    );
    println!("{:>5} {:>12} {:>12} {:>12}", "r", "diam", "area", "λ₁·diam²");
    for r in cusp.grid.nodes() {
        let d = cusp.level_torus_diameter(r)?;
        let a = cusp.level_torus_area(r)?;
        // λ₁ of T(r) scales like e^{2r}
        let l1 = flat.lambda1()? * (2.0 * r).exp();
        println!("{r:>5.1} {d:>12.4e} {a:>12.4e} {:>12.6}", l1 * d * d);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> cusplab::Result<()> {
    run_example()
}

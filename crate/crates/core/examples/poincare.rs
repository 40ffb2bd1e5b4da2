//! Level-torus Poincaré inequality with constant `e²` on random flat tori.

use cusplab::grid::RadialGrid;
use cusplab::norms::poincare_check;
use cusplab::sampling::{random_flat_torus, random_tensor, stream};

pub fn run_example() -> cusplab::Result<()> {
    let grid = RadialGrid::new(4.0, 0.05)?;
    println!("{:>5} {:>10} {:>10} {:>12}", "torus", "condition", "λ₁diam²", "max lhs/rhs");
    for t in 0..6 {
        let mut rng = stream(17, t);
        let torus = random_flat_torus(&mut rng, 25.0)?;
        let mut worst = 0.0_f64;
        for _ in 0..5 {
            let h = random_tensor(torus, grid, 3, 3, 1.0, 0.0..=2.0, &mut rng)?;
            for r in [0.0, 2.0, 4.0] {
                let p = poincare_check(&h, r)?;
                assert!(p.pass);
                worst = worst.max(p.ratio());
            }
        }
        println!(
            "{t:>5} {:>10.3} {:>10.4} {:>12.3e}",
            torus.condition_number(),
            torus.lambda1()? * torus.diameter().powi(2),
            worst
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> cusplab::Result<()> {
    run_example()
}

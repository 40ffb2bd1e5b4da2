//! Weighted norms on the truncated cusp.
//!
//! Volume integrals go through the co-area formula: a level torus `T(r)` has
//! area `e^{-2r} area(T²)`, so
//!
//! ```text
//! ∫ e^{2σr} |f|² dvol = ∫₀^R e^{2σr} e^{-2r} area · mean_{T(r)} |f|² dr.
//! ```
//!
//! Fiber means of `|f|²` come from Parseval on the stored modes; fiber means
//! of derivative norms come from point samples on the level torus.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::tensor::{RadialTensorField, TensorField};

/// Weight exponent `σ` together with the decay data `(λ, η)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub sigma: f64,
    pub lambda: f64,
    pub eta: f64,
}

impl WeightParams {
    pub fn new(lambda: f64, eta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Parameter(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        if !(eta.is_finite() && eta > 1.0) {
            return Err(Error::Parameter(format!("eta must exceed 1, got {eta}")));
        }
        Ok(Self {
            sigma: 0.0,
            lambda,
            eta,
        })
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Parameter(format!("sigma must be non-negative, got {sigma}")));
        }
        Ok(Self { sigma, ..self })
    }

    /// Terminal weight `b = 2 + λ − η`.
    pub fn b(&self) -> f64 {
        2.0 + self.lambda - self.eta
    }

    /// Output rate `μ(σ) = 2 − η − σ`.
    pub fn mu_of_sigma(&self, sigma: f64) -> f64 {
        2.0 - self.eta - sigma
    }

    pub fn mu(&self) -> f64 {
        self.mu_of_sigma(self.sigma)
    }

    /// Step size bound `s₀ = η − 1`.
    pub fn s0(&self) -> f64 {
        self.eta - 1.0
    }

    /// The excluded weight `σ* = 2 − η`, where `μ(σ) = 0`.
    pub fn sigma_star(&self) -> f64 {
        2.0 - self.eta
    }

    /// `b < 0`: the weight range collapses to `σ = 0`.
    pub fn is_degenerate(&self) -> bool {
        self.b() < 0.0
    }
}

/// `∫₀^R g(r) dr` on the grid, composite Simpson.
pub fn coarea_integrate(grid: &RadialGrid, levelwise: &[f64]) -> f64 {
    grid.integrate(levelwise)
}

fn weighted_root(grid: &RadialGrid, area: f64, sigma: f64, fiber_mean_sq: &[f64]) -> f64 {
    let g: Vec<f64> = grid
        .nodes()
        .zip(fiber_mean_sq)
        .map(|(r, m)| (2.0 * (sigma - 1.0) * r).exp() * area * m)
        .collect();
    coarea_integrate(grid, &g).max(0.0).sqrt()
}

/// `(∫ e^{2σr} |f|² dvol)^{1/2}`, fiber integrals by Parseval.
pub fn weighted_l2(f: &TensorField, sigma: f64) -> f64 {
    let m: Vec<f64> = (0..f.grid().len())
        .map(|i| {
            let (a, b) = f.mode_energy(i);
            a + b
        })
        .collect();
    weighted_root(f.grid(), f.flat().area(), sigma, &m)
}

/// [`weighted_l2`] from point samples of `|f|` on every level torus.
pub fn weighted_l2_direct(f: &TensorField, sigma: f64) -> f64 {
    let m: Vec<f64> = f.fiber_stats(0).iter().map(|s| s.mean_sq[0]).collect();
    weighted_root(f.grid(), f.flat().area(), sigma, &m)
}

/// [`weighted_l2`] of a radial tensor on a torus of the given area.
pub fn weighted_l2_radial(h: &RadialTensorField, area: f64, sigma: f64) -> f64 {
    let m: Vec<f64> = h.norm_profile().iter().map(|x| x * x).collect();
    weighted_root(h.grid(), area, sigma, &m)
}

/// `(∫ e^{2σr} |h|²_{C²} dvol)^{1/2}` with `|h|_{C²} = |h| + |∇h| + |∇²h|`.
pub fn weighted_h2(h: &TensorField, sigma: f64) -> f64 {
    let m: Vec<f64> = h.fiber_stats(2).iter().map(|s| s.mean_sq[2]).collect();
    weighted_root(h.grid(), h.flat().area(), sigma, &m)
}

/// [`weighted_h2`] of a radial tensor.
pub fn weighted_h2_radial(h: &RadialTensorField, area: f64, sigma: f64) -> f64 {
    let m: Vec<f64> = (0..h.grid().len()).map(|i| h.c_norm_at(i, 2).powi(2)).collect();
    weighted_root(h.grid(), area, sigma, &m)
}

/// `‖f‖_{0,λ}` surrogate: `max e^{λr} |f|` over nodes and fiber samples.
pub fn norm_0_lambda(f: &TensorField, lambda: f64) -> f64 {
    f.fiber_stats(0)
        .iter()
        .zip(f.grid().nodes())
        .map(|(s, r)| (lambda * r).exp() * s.max[0])
        .fold(0.0, f64::max)
}

pub fn norm_0_lambda_radial(f: &RadialTensorField, lambda: f64) -> f64 {
    f.norm_profile()
        .iter()
        .zip(f.grid().nodes())
        .map(|(n, r)| (lambda * r).exp() * n)
        .fold(0.0, f64::max)
}

/// `(∫₀^R e^{(2σ−2λ−2)r} dr)^{1/2} √area`: the largest possible
/// `weighted_l2(f, σ)` when `‖f‖_{0,λ} = 1`.
pub fn norm_integral_bound(grid: &RadialGrid, area: f64, sigma: f64, lambda: f64) -> f64 {
    let g = grid.sample(|r| ((2.0 * sigma - 2.0 * lambda - 2.0) * r).exp());
    (coarea_integrate(grid, &g) * area).sqrt()
}

/// Both sides of the level-torus Poincaré inequality
/// `∫_{T(r)} |h − ĥ|² ≤ C diam(T(r))² ∫_{T(r)} |h|²_{C¹}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareCheck {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `e²` times the component factor.
    pub constant: f64,
    pub component_factor: f64,
    pub pass: bool,
}

impl PoincareCheck {
    /// `lhs / rhs`, zero when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

/// The Poincaré inequality is applied to the frame components, which are
/// constant multiples of the coordinate components on `T(r)`; the tangential
/// gradient of `w` is part of `|∇h|`, so the component factor is 1.
pub const POINCARE_COMPONENT_FACTOR: f64 = 1.0;

pub fn poincare_check(h: &TensorField, r: f64) -> Result<PoincareCheck> {
    let i = h.grid().index_of(r)?;
    let r = h.grid().r(i);
    let flat = h.flat();
    let area = (-2.0 * r).exp() * flat.area();
    let diam = (-r).exp() * flat.diameter();
    let lhs = area * h.mode_energy(i).1;
    let stats = h.evaluator().sample(h, i, 1).stats();
    let constant = E * E * POINCARE_COMPONENT_FACTOR;
    let rhs = constant * diam * diam * area * stats.mean_sq[1];
    Ok(PoincareCheck {
        r,
        lhs,
        rhs,
        constant,
        component_factor: POINCARE_COMPONENT_FACTOR,
        pass: lhs <= rhs,
    })
}

/// Integrability of `e^{-2r} e^{2(σ′ + μ(σ))r}` over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuIntegrability {
    /// `2(σ′ − σ − (η − 1))`.
    pub exponent: f64,
    pub integral: f64,
    pub half_integral: f64,
    pub bounded: bool,
}

/// Decides boundedness of the integral under `R → ∞` by comparing the
/// sampled integrand at `R` and `R/2`: bounded exactly when it decays by
/// more than rounding.
pub fn mu_integrability(
    grid: &RadialGrid,
    params: &WeightParams,
    sigma_prime: f64,
) -> MuIntegrability {
    let exponent = 2.0 * (sigma_prime + params.mu()) - 2.0;
    let g = grid.sample(|r| (exponent * r).exp());
    let half = grid.window(0.0, 0.5 * grid.r_max());
    let integral = coarea_integrate(grid, &g);
    let sub = RadialGrid::new(grid.r(half.end - 1), grid.dr())
        .map(|h| coarea_integrate(&h, &g[..h.len()]))
        .unwrap_or(0.0);
    MuIntegrability {
        exponent,
        integral,
        half_integral: sub,
        bounded: g[g.len() - 1] < g[half.end - 1] * (1.0 - 1e-9),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FlatTorusMetric;
    use crate::tensor::H33;
    use approx::assert_relative_eq;

    fn grid() -> RadialGrid {
        RadialGrid::new(20.0, 0.01).unwrap()
    }

    #[test]
    fn params() {
        let p = WeightParams::new(0.5, 1.5).unwrap();
        assert_relative_eq!(p.b(), 1.0);
        assert_relative_eq!(p.sigma_star(), 0.5);
        assert_relative_eq!(p.s0(), 0.5);
        assert!(!p.is_degenerate());
        assert!(WeightParams::new(0.5, 2.8).unwrap().is_degenerate());
        assert!(WeightParams::new(0.5, 1.0).is_err());
        assert!(WeightParams::new(1.0, 1.5).is_err());
    }

    #[test]
    fn closed_form_l2() {
        let g = grid();
        let f = RadialTensorField::from_fn(g, |c, r| if c == H33 { (-0.5 * r).exp() } else { 0.0 });
        let flat = FlatTorusMetric::square(1.0).unwrap();
        let tf = TensorField::from_radial(&f, flat, 2).unwrap();
        assert_relative_eq!(weighted_l2(&tf, 0.0), (1.0f64 / 3.0).sqrt(), epsilon = 1e-8);
        assert_relative_eq!(norm_0_lambda(&tf, 0.5), 1.0, epsilon = 1e-14);
        assert_relative_eq!(
            weighted_l2(&tf.scale(-3.0), 0.0),
            3.0 * weighted_l2(&tf, 0.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn closed_form_h2() {
        let g = grid();
        let h = RadialTensorField::from_fn(g, |c, r| if c == H33 { (-r).exp() } else { 0.0 });
        assert_relative_eq!(weighted_h2_radial(&h, 1.0, 0.0), 1.5, epsilon = 1e-7);
        let flat = FlatTorusMetric::square(1.0).unwrap();
        let tf = TensorField::from_radial(&h, flat, 2).unwrap();
        assert_relative_eq!(weighted_h2(&tf, 0.0), 1.5, epsilon = 1e-7);
    }

    #[test]
    fn coarea_exponential() {
        let g = grid();
        let v = g.sample(|r| (-2.0 * r).exp());
        assert_relative_eq!(coarea_integrate(&g, &v), 0.5 * (1.0 - (-40.0f64).exp()), epsilon = 1e-9);
    }

    #[test]
    fn mu_threshold() {
        let g = grid();
        let p = WeightParams::new(0.5, 1.5).unwrap().with_sigma(0.2).unwrap();
        assert!(mu_integrability(&g, &p, 0.69).bounded);
        assert!(!mu_integrability(&g, &p, 0.70).bounded);
        assert!(!mu_integrability(&g, &p, 0.71).bounded);
    }

    #[test]
    fn radial_poincare_is_trivial() {
        let g = RadialGrid::new(2.0, 0.01).unwrap();
        let h = RadialTensorField::from_fn(g, |c, r| (c as f64 + 1.0) * (-r).exp());
        let tf = TensorField::from_radial(&h, FlatTorusMetric::square(1.0).unwrap(), 2).unwrap();
        let p = poincare_check(&tf, 1.0).unwrap();
        assert_eq!(p.lhs, 0.0);
        assert!(p.pass);
    }
}

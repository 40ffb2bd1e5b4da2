//! Flat tori, cusp metrics and synthetic metric perturbations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::tensor::{frame_scale, TensorField, NCOMP};

/// Lattice enumeration bound for the covering radius. Enough for reduced
/// bases; the harness keeps condition numbers at or below 25.
pub const LATTICE_SEARCH: i32 = 3;

/// Constant metric on `ℝ²/ℤ²` given by its Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct FlatTorusMetric {
    gram: [[f64; 2]; 2],
    inverse: [[f64; 2]; 2],
    diameter: f64,
    shortest_dual_sq: f64,
}

impl TryFrom<[[f64; 2]; 2]> for FlatTorusMetric {
    type Error = Error;

    fn try_from(gram: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(gram)
    }
}

impl From<FlatTorusMetric> for [[f64; 2]; 2] {
    fn from(m: FlatTorusMetric) -> Self {
        m.gram
    }
}

impl FlatTorusMetric {
    pub fn new(gram: [[f64; 2]; 2]) -> Result<Self> {
        let flat = gram.iter().flatten();
        if flat.clone().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMetric("non-finite gram entry".into()));
        }
        let scale = flat.fold(0.0_f64, |m, x| m.max(x.abs()));
        if (gram[0][1] - gram[1][0]).abs() > 1e-12 * scale {
            return Err(Error::InvalidMetric(format!(
                "gram is not symmetric: {} vs {}",
                gram[0][1], gram[1][0]
            )));
        }
        let g12 = 0.5 * (gram[0][1] + gram[1][0]);
        let gram = [[gram[0][0], g12], [g12, gram[1][1]]];
        let det = gram[0][0] * gram[1][1] - g12 * g12;
        if !(gram[0][0] > 0.0 && det > 1e-14 * scale * scale) {
            return Err(Error::InvalidMetric(format!(
                "gram {gram:?} is not positive definite"
            )));
        }
        let inverse = [
            [gram[1][1] / det, -g12 / det],
            [-g12 / det, gram[0][0] / det],
        ];
        let shortest_dual_sq = gauss_reduce(inverse)[0][0];
        let diameter = covering_radius(gram);
        Ok(Self {
            gram,
            inverse,
            diameter,
            shortest_dual_sq,
        })
    }

    /// Square torus with side `side`.
    pub fn square(side: f64) -> Result<Self> {
        Self::new([[side * side, 0.0], [0.0, side * side]])
    }

    /// Torus spanned by the lattice basis `b1, b2 ∈ ℝ²`.
    pub fn from_basis(b1: [f64; 2], b2: [f64; 2]) -> Result<Self> {
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        Self::new([[dot(b1, b1), dot(b1, b2)], [dot(b1, b2), dot(b2, b2)]])
    }

    pub fn gram(&self) -> [[f64; 2]; 2] {
        self.gram
    }

    pub fn inverse(&self) -> [[f64; 2]; 2] {
        self.inverse
    }

    pub fn area(&self) -> f64 {
        (self.gram[0][0] * self.gram[1][1] - self.gram[0][1] * self.gram[1][0]).sqrt()
    }

    /// Covering radius of the lattice, i.e. the intrinsic diameter of the torus.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn condition_number(&self) -> f64 {
        let [[a, b], [_, c]] = self.gram;
        let mean = 0.5 * (a + c);
        let spread = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (mean + spread) / (mean - spread)
    }

    /// `kᵀ G⁻¹ k`.
    pub fn dual_norm_sq(&self, k: (i32, i32)) -> f64 {
        let (x, y) = (k.0 as f64, k.1 as f64);
        let g = &self.inverse;
        g[0][0] * x * x + 2.0 * g[0][1] * x * y + g[1][1] * y * y
    }

    /// Laplace eigenvalue of the Fourier mode `k`.
    pub fn mode_eigenvalue(&self, k: (i32, i32)) -> f64 {
        4.0 * PI * PI * self.dual_norm_sq(k)
    }

    /// First nonzero Laplace eigenvalue. Errors if the scaled Poincaré
    /// premise `λ₁ diam² ≥ e⁻²` fails, which would indicate a broken lattice
    /// computation.
    pub fn lambda1(&self) -> Result<f64> {
        let l1 = 4.0 * PI * PI * self.shortest_dual_sq;
        let premise = l1 * self.diameter * self.diameter;
        if premise < (-2.0_f64).exp() {
            return Err(Error::Internal(format!(
                "λ₁·diam² = {premise} falls below e⁻²"
            )));
        }
        Ok(l1)
    }
}

/// Lagrange-Gauss reduction of a 2×2 Gram matrix. The returned matrix
/// describes a reduced basis: `|b| ≤ a/2`, `a ≤ c`, so `a` is the squared
/// length of a shortest nonzero vector.
fn gauss_reduce(gram: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let (mut a, mut b, mut c) = (gram[0][0], gram[0][1], gram[1][1]);
    for _ in 0..200 {
        if a > c {
            std::mem::swap(&mut a, &mut c);
        }
        let m = (b / a).round();
        if m == 0.0 {
            break;
        }
        c += m * m * a - 2.0 * m * b;
        b -= m * a;
    }
    if a > c {
        std::mem::swap(&mut a, &mut c);
    }
    [[a, b], [b, c]]
}

fn covering_radius(gram: [[f64; 2]; 2]) -> f64 {
    let [[a, b], [_, c]] = gauss_reduce(gram);
    let u = [a.sqrt(), 0.0];
    let w = [b / a.sqrt(), (c - b * b / a).max(0.0).sqrt()];
    let mut points = Vec::new();
    for i in -LATTICE_SEARCH..=LATTICE_SEARCH {
        for j in -LATTICE_SEARCH..=LATTICE_SEARCH {
            if (i, j) != (0, 0) {
                let (i, j) = (i as f64, j as f64);
                points.push([i * u[0] + j * w[0], i * u[1] + j * w[1]]);
            }
        }
    }
    let scale = a.sqrt();
    let mut best = 0.0_f64;
    for (idx, p) in points.iter().enumerate() {
        for q in &points[idx + 1..] {
            let d = 2.0 * (p[0] * q[1] - p[1] * q[0]);
            if d.abs() < 1e-12 * scale * scale {
                continue;
            }
            let pp = p[0] * p[0] + p[1] * p[1];
            let qq = q[0] * q[0] + q[1] * q[1];
            let center = [(pp * q[1] - qq * p[1]) / d, (qq * p[0] - pp * q[0]) / d];
            let radius = center[0].hypot(center[1]);
            if radius <= best {
                continue;
            }
            let empty = points.iter().all(|s| {
                (s[0] - center[0]).hypot(s[1] - center[1]) >= radius * (1.0 - 1e-12)
            });
            if empty {
                best = radius;
            }
        }
    }
    best
}

/// Cusp `T² × [0, R]` with metric `e^{-2r} g_flat + dr²`, discretized
/// radially by `grid`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspMetric {
    pub flat: FlatTorusMetric,
    pub grid: RadialGrid,
}

impl CuspMetric {
    pub fn new(flat: FlatTorusMetric, grid: RadialGrid) -> Self {
        Self { flat, grid }
    }

    pub fn r_max(&self) -> f64 {
        self.grid.r_max()
    }

    fn check(&self, r: f64) -> Result<()> {
        if !(r >= 0.0 && r <= self.r_max() * (1.0 + 1e-14)) {
            return Err(Error::Domain {
                r,
                r_max: self.r_max(),
            });
        }
        Ok(())
    }

    pub fn level_torus_diameter(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok((-r).exp() * self.flat.diameter())
    }

    pub fn level_torus_area(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok((-2.0 * r).exp() * self.flat.area())
    }
}

/// Amplitude and decay rate of the metric perturbation `|g − g_cusp|_{C²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationEnvelope {
    pub epsilon0: f64,
    pub eta: f64,
    pub seed: u64,
}

impl PerturbationEnvelope {
    pub fn new(epsilon0: f64, eta: f64, seed: u64) -> Result<Self> {
        let env = Self {
            epsilon0,
            eta,
            seed,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 1.0) {
            return Err(Error::Parameter(format!(
                "decay rate eta must exceed 1, got {}",
                self.eta
            )));
        }
        if !(self.epsilon0.is_finite() && self.epsilon0 >= 0.0) {
            return Err(Error::Parameter(format!(
                "epsilon0 must be non-negative, got {}",
                self.epsilon0
            )));
        }
        Ok(())
    }

    pub fn at(&self, r: f64) -> f64 {
        self.epsilon0 * (-self.eta * r).exp()
    }
}

/// Highest fiber frequency used by [`synthesize_perturbation`].
pub const PERTURBATION_MODES: i32 = 2;

/// Seeded smooth symmetric tensor `p` with `|p|_{C²} ≤ ε₀ e^{-ηr}` on the grid.
///
/// Each mode carries a frame profile `A_k e^{-ρ_k r}` with `ρ_0 = η` and
/// `ρ_k = η + 2` otherwise, so the per-mode `C²` norm has the closed form
/// `‖A_k‖ e^{-ρr} (1 + √(ρ² + e^{2r}λ_k) + ρ² + e^{2r}λ_k)`. Amplitudes are
/// scaled until the summed bound touches the envelope at its worst node.
pub fn synthesize_perturbation(
    cusp: &CuspMetric,
    env: &PerturbationEnvelope,
    k_max: i32,
) -> Result<TensorField> {
    env.validate()?;
    if k_max < PERTURBATION_MODES {
        return Err(Error::Parameter(format!(
            "Fourier truncation {k_max} cannot hold perturbation modes up to {PERTURBATION_MODES}"
        )));
    }
    let grid = cusp.grid;
    let mut field = TensorField::zeros(cusp.flat, grid, k_max)?;
    if env.epsilon0 == 0.0 {
        return Ok(field);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(env.seed);
    let mut modes: Vec<((i32, i32), [Complex64; NCOMP])> = Vec::new();
    for k1 in 0..=PERTURBATION_MODES {
        for k2 in -PERTURBATION_MODES..=PERTURBATION_MODES {
            if k1 == 0 && k2 < 0 {
                continue;
            }
            let mut amp = [Complex64::new(0.0, 0.0); NCOMP];
            for a in amp.iter_mut() {
                let re = rng.gen_range(-1.0..1.0);
                let im = if (k1, k2) == (0, 0) {
                    0.0
                } else {
                    rng.gen_range(-1.0..1.0)
                };
                *a = Complex64::new(re, im);
            }
            modes.push(((k1, k2), amp));
        }
    }

    let rho = |k: (i32, i32)| if k == (0, 0) { env.eta } else { env.eta + 2.0 };
    let bound_ratio = |r: f64| -> f64 {
        modes
            .iter()
            .map(|(k, amp)| {
                let norm = amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                let p = rho(*k);
                let fiber = (2.0 * r).exp() * cusp.flat.mode_eigenvalue(*k);
                let pair = if *k == (0, 0) { 1.0 } else { 2.0 };
                pair * norm
                    * (-(p - env.eta) * r).exp()
                    * (1.0 + (p * p + fiber).sqrt() + p * p + fiber)
            })
            .sum()
    };
    let worst = grid.nodes().map(bound_ratio).fold(0.0_f64, f64::max);
    let scale = env.epsilon0 / worst;

    for (k, amp) in &modes {
        let p = rho(*k);
        let mut profiles: [Vec<Complex64>; NCOMP] = Default::default();
        for (c, prof) in profiles.iter_mut().enumerate() {
            *prof = grid
                .nodes()
                .map(|r| amp[c] * (scale * (-p * r).exp() / frame_scale(c, r)))
                .collect();
        }
        field.insert_mode(*k, profiles)?;
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn square_torus_invariants() {
        let t = FlatTorusMetric::square(1.0).unwrap();
        assert_relative_eq!(t.diameter(), 0.5_f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(t.area(), 1.0);
        assert_relative_eq!(t.lambda1().unwrap(), 4.0 * PI * PI, epsilon = 1e-12);
        let t2 = FlatTorusMetric::square(2.0).unwrap();
        assert_relative_eq!(t2.lambda1().unwrap(), PI * PI, epsilon = 1e-12);
        assert_relative_eq!(
            FlatTorusMetric::new([[4.0, 0.0], [0.0, 1.0]]).unwrap().area(),
            2.0
        );
    }

    #[test]
    fn hexagonal_covering_radius() {
        // Circumradius of the equilateral triangle with unit sides.
        let t = FlatTorusMetric::from_basis([1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]).unwrap();
        assert_relative_eq!(t.diameter(), 1.0 / 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn reduction_is_basis_independent() {
        let a = FlatTorusMetric::from_basis([1.0, 0.0], [0.3, 0.8]).unwrap();
        let b = FlatTorusMetric::from_basis([1.0, 0.0], [2.3, 0.8]).unwrap();
        assert_relative_eq!(a.diameter(), b.diameter(), epsilon = 1e-12);
        assert_relative_eq!(a.lambda1().unwrap(), b.lambda1().unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn rejects_degenerate_gram() {
        assert!(matches!(
            FlatTorusMetric::new([[1.0, 1.0], [1.0, 1.0]]),
            Err(Error::InvalidMetric(_))
        ));
        assert!(FlatTorusMetric::new([[1.0, 0.2], [0.3, 1.0]]).is_err());
        assert!(FlatTorusMetric::new([[-1.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn level_tori() {
        let grid = RadialGrid::new(20.0, 0.01).unwrap();
        let cusp = CuspMetric::new(FlatTorusMetric::square(1.0).unwrap(), grid);
        assert_relative_eq!(
            cusp.level_torus_diameter(2f64.ln()).unwrap(),
            0.353_553_390_593_273_8,
            epsilon = 1e-12
        );
        assert_relative_eq!(cusp.level_torus_area(2f64.ln()).unwrap(), 0.25, epsilon = 1e-14);
        assert!(matches!(cusp.level_torus_area(21.0), Err(Error::Domain { .. })));
        assert!(cusp.level_torus_diameter(-0.5).is_err());
    }

    #[test]
    fn envelope_validation() {
        assert!(PerturbationEnvelope::new(1e-3, 1.0, 0).is_err());
        assert!(PerturbationEnvelope::new(-1.0, 1.5, 0).is_err());
        assert!(PerturbationEnvelope::new(0.0, 1.5, 0).is_ok());
    }

    #[test]
    fn serde_roundtrip_revalidates() {
        let t = FlatTorusMetric::new([[1.0, 0.2], [0.2, 0.9]]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: FlatTorusMetric = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
        assert!(serde_json::from_str::<FlatTorusMetric>("[[1,2],[2,1]]").is_err());
    }
}

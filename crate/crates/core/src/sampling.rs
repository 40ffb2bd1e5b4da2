//! Seeded random inputs: flat tori, trivial variations, radial and
//! Fourier-expanded tensors, and planted instances with a known answer.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CuspMetric, FlatTorusMetric, PerturbationEnvelope};
use crate::grid::RadialGrid;
use crate::ode::{GrowthEnvelope, QuadraticODE};
use crate::operator::{apply_l_perturbed, OperatorError};
use crate::tensor::{frame_scale, RadialTensorField, TensorField, TrivialEinsteinVariation, NCOMP};

/// Characteristic exponents of the three scalar families.
pub const FUNDAMENTAL_RATES: [f64; 6] = [
    1.0 - 2.236_067_977_499_79,
    1.0 + 2.236_067_977_499_79,
    -1.0,
    3.0,
    0.0,
    2.0,
];

/// Random rates stay at least this far from every characteristic exponent.
pub const RATE_CLEARANCE: f64 = 0.05;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sub-stream `index` of `seed`, independent of how many draws other
/// streams make.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn random_variation<R: Rng>(rng: &mut R) -> TrivialEinsteinVariation {
    TrivialEinsteinVariation::traceless(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random flat torus from a reduced basis `(1, 0), (x, y)` with `|x| ≤ ½`,
/// condition number at most `max_condition`, rescaled to a diameter in
/// `[0.3, 1]`.
pub fn random_flat_torus<R: Rng>(rng: &mut R, max_condition: f64) -> Result<FlatTorusMetric> {
    if !(max_condition >= 1.0) {
        return Err(Error::Parameter(format!(
            "condition bound {max_condition} is below 1"
        )));
    }
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-0.5..=0.5);
        let y_min = (1.0 - x * x).sqrt();
        let y = y_min * (rng.gen_range(0.0..1.0) * max_condition.sqrt().ln()).exp();
        let t = FlatTorusMetric::from_basis([1.0, 0.0], [x, y])?;
        if t.condition_number() > max_condition {
            continue;
        }
        let target: f64 = rng.gen_range(0.3..=1.0);
        let s = target / t.diameter();
        return FlatTorusMetric::from_basis([s, 0.0], [s * x, s * y]);
    }
    Err(Error::Internal("could not draw a flat torus".into()))
}

fn clear_of_roots(rate: f64) -> bool {
    FUNDAMENTAL_RATES
        .iter()
        .all(|root| (rate - root).abs() >= RATE_CLEARANCE)
}

/// A rate uniform in `range`, redrawn until it clears every characteristic
/// exponent.
pub fn random_rate<R: Rng>(rng: &mut R, range: std::ops::Range<f64>) -> f64 {
    loop {
        let rho = rng.gen_range(range.clone());
        if clear_of_roots(rho) {
            return rho;
        }
    }
}

/// Frame components `Σ_j a_j e^{ρ_j r}` with `terms` exponentials per
/// component, amplitudes in `[−amplitude, amplitude]` and rates in `rates`.
pub fn random_radial<R: Rng>(
    grid: RadialGrid,
    rng: &mut R,
    terms: usize,
    amplitude: f64,
    rates: std::ops::Range<f64>,
) -> RadialTensorField {
    let coeffs: Vec<Vec<(f64, f64)>> = (0..NCOMP)
        .map(|_| {
            (0..terms)
                .map(|_| (rng.gen_range(-amplitude..=amplitude), random_rate(rng, rates.clone())))
                .collect()
        })
        .collect();
    RadialTensorField::from_frame_fn(grid, |c, r| {
        coeffs[c].iter().map(|(a, rho)| a * (rho * r).exp()).sum()
    })
}

/// A radial tensor with `∫ e^{-2r}|h|² < ∞` on the half-line: a random
/// trivial variation plus frame exponentials with rates in `[−2.5, 0.9)`.
pub fn random_l2_radial<R: Rng>(grid: RadialGrid, rng: &mut R) -> RadialTensorField {
    let v = random_variation(rng).to_radial(grid);
    random_radial(grid, rng, 3, 1.0, -2.5..0.9).add(&v)
}

/// Random real tensor with modes `|k|∞ ≤ modes`, each frame profile a
/// complex amplitude times `e^{-ρ r}`, `ρ` uniform in `rates`.
pub fn random_tensor<R: Rng>(
    flat: FlatTorusMetric,
    grid: RadialGrid,
    k_max: i32,
    modes: i32,
    amplitude: f64,
    rates: std::ops::RangeInclusive<f64>,
    rng: &mut R,
) -> Result<TensorField> {
    if modes > k_max {
        return Err(Error::Parameter(format!(
            "{modes} active modes exceed truncation {k_max}"
        )));
    }
    let mut h = TensorField::zeros(flat, grid, k_max)?;
    for k in half_plane(modes) {
        let rho = rng.gen_range(rates.clone());
        let amp: [Complex64; NCOMP] = std::array::from_fn(|_| {
            let re = rng.gen_range(-amplitude..=amplitude);
            let im = if k == (0, 0) {
                0.0
            } else {
                rng.gen_range(-amplitude..=amplitude)
            };
            Complex64::new(re, im)
        });
        let prof = std::array::from_fn(|c| {
            grid.nodes()
                .map(|r| amp[c] * ((-rho * r).exp() / frame_scale(c, r)))
                .collect()
        });
        h.insert_mode(k, prof)?;
    }
    Ok(h)
}

/// One representative of each `±k` pair with `|k|∞ ≤ modes`, zero first.
pub fn half_plane(modes: i32) -> Vec<(i32, i32)> {
    let mut out = vec![(0, 0)];
    for k1 in 0..=modes {
        for k2 in -modes..=modes {
            if (k1 == 0 && k2 <= 0) || (k1, k2) == (0, 0) {
                continue;
            }
            out.push((k1, k2));
        }
    }
    out
}

/// Recipe for an instance `h = v + (decaying radial part) + (fiber modes)`
/// with `f = 𝓛h` under a seeded perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub v: TrivialEinsteinVariation,
    /// Size of the radial frame exponentials.
    pub radial_amplitude: f64,
    /// Radial rates are drawn from `[−radial_rate_max, −radial_rate_min]`.
    pub radial_rate_min: f64,
    pub radial_rate_max: f64,
    pub fiber_amplitude: f64,
    /// Frame decay rate of every fiber mode.
    pub fiber_rate: f64,
    pub fiber_modes: i32,
    pub seed: u64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            v: TrivialEinsteinVariation::traceless(0.3, 0.0),
            radial_amplitude: 1e-2,
            radial_rate_min: 1.0,
            radial_rate_max: 2.0,
            fiber_amplitude: 1e-3,
            fiber_rate: 3.0,
            fiber_modes: 1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub cusp: CuspMetric,
    pub spec: PlantSpec,
    pub error: OperatorError,
    pub h: TensorField,
    pub f: TensorField,
}

pub fn planted_instance(
    cusp: CuspMetric,
    k_max: i32,
    envelope: PerturbationEnvelope,
    spec: PlantSpec,
) -> Result<PlantedInstance> {
    if !(spec.radial_rate_min > 0.0 && spec.radial_rate_max > spec.radial_rate_min) {
        return Err(Error::Parameter(format!(
            "radial rate range [{}, {}] must be positive and non-empty",
            spec.radial_rate_min, spec.radial_rate_max
        )));
    }
    let grid = cusp.grid;
    let mut rng = rng(spec.seed);
    let radial = if spec.radial_amplitude > 0.0 {
        random_radial(
            grid,
            &mut rng,
            2,
            spec.radial_amplitude,
            -spec.radial_rate_max..-spec.radial_rate_min,
        )
    } else {
        RadialTensorField::zeros(grid)
    };
    let base = TensorField::from_radial(&spec.v.to_radial(grid).add(&radial), cusp.flat, k_max)?;
    let h = if spec.fiber_amplitude > 0.0 && spec.fiber_modes > 0 {
        let osc = random_tensor(
            cusp.flat,
            grid,
            k_max,
            spec.fiber_modes,
            spec.fiber_amplitude,
            spec.fiber_rate..=spec.fiber_rate,
            &mut rng,
        )?
        .oscillating_part();
        base.add(&osc)
    } else {
        base
    };
    let error = OperatorError::new(envelope)?;
    let f = apply_l_perturbed(&h, &error)?;
    Ok(PlantedInstance {
        cusp,
        spec,
        error,
        h,
        f,
    })
}

/// A scalar problem with known answer `y = A₁ e^{λ₁r} + Σ C_k e^{μ_k r}`
/// solving `y'' + py' + qy = Σ s_k β_k e^{μ_k r}` with `|s_k| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdePlant {
    pub ode: QuadraticODE,
    pub a1: f64,
    pub envelope: GrowthEnvelope,
    pub y: Vec<f64>,
}

/// Minimum distance of planted rates from the characteristic roots.
pub const PLANT_CLEARANCE: f64 = 0.2;

fn random_ode<R: Rng>(rng: &mut R) -> QuadraticODE {
    loop {
        let p = rng.gen_range(-3.0..1.0);
        let q = rng.gen_range(-5.0..1.0);
        if let Ok(ode) = QuadraticODE::new(p, q) {
            let (l1, l2) = ode.roots();
            if l2 - l1 > 0.5 && l2 > 0.0 {
                return ode;
            }
        }
    }
}

fn nonresonant_rate<R: Rng>(rng: &mut R, ode: &QuadraticODE, range: std::ops::Range<f64>) -> f64 {
    let (l1, l2) = ode.roots();
    loop {
        let mu = rng.gen_range(range.clone());
        if (mu - l1).abs() >= PLANT_CLEARANCE && (mu - l2).abs() >= PLANT_CLEARANCE {
            return mu;
        }
    }
}

/// Random equation, one to three forcing exponentials with rates in
/// `[−2, 0.5)`, and the exact solution without growing part.
pub fn ode_plant<R: Rng>(grid: &RadialGrid, rng: &mut R) -> Result<OdePlant> {
    let ode = random_ode(rng);
    let (l1, _) = ode.roots();
    let a1 = rng.gen_range(-1.0..1.0);
    let m = rng.gen_range(1..=3);
    let mut terms = Vec::with_capacity(m);
    let mut parts = Vec::with_capacity(m);
    for _ in 0..m {
        let mu = nonresonant_rate(rng, &ode, -2.0..0.5);
        let beta = rng.gen_range(0.1..2.0);
        let s = rng.gen_range(-1.0..=1.0);
        terms.push((beta, mu));
        parts.push((s * beta / ode.eval(mu), mu));
    }
    let y = grid.sample(|r| {
        a1 * (l1 * r).exp() + parts.iter().map(|(c, mu)| c * (mu * r).exp()).sum::<f64>()
    });
    Ok(OdePlant {
        ode,
        a1,
        envelope: GrowthEnvelope::new(terms)?,
        y,
    })
}

/// Random equation with forcing `s β e^{(a−γ)r}`, bounded by `ψ e^{ar}` with
/// `ψ = β e^{-γr}`.
pub fn ode_plant_l1<R: Rng>(grid: &RadialGrid, rng: &mut R) -> Result<OdePlant> {
    let ode = random_ode(rng);
    let (l1, _) = ode.roots();
    let a1 = rng.gen_range(-1.0..1.0);
    let (a, gamma) = loop {
        let a = nonresonant_rate(rng, &ode, -1.5..0.5);
        let gamma = rng.gen_range(0.5..2.0);
        let (r1, r2) = ode.roots();
        let m = a - gamma;
        if (m - r1).abs() >= PLANT_CLEARANCE && (m - r2).abs() >= PLANT_CLEARANCE {
            break (a, gamma);
        }
    };
    let beta = rng.gen_range(0.1..2.0);
    let s = rng.gen_range(-1.0..=1.0);
    let c = s * beta / ode.eval(a - gamma);
    let y = grid.sample(|r| a1 * (l1 * r).exp() + c * ((a - gamma) * r).exp());
    let psi = grid.sample(|r| beta * (-gamma * r).exp());
    Ok(OdePlant {
        ode,
        a1,
        envelope: GrowthEnvelope::default().with_l1(a, psi)?,
        y,
    })
}

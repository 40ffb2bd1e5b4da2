use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::CuspMetric;
use crate::norms::{
    norm_0_lambda, norm_integral_bound, poincare_check, weighted_h2, weighted_l2,
};
use crate::operator::{apply_l_cusp, apply_l_perturbed};
use crate::sampling::{
    planted_instance, random_flat_torus, random_tensor, random_variation, stream, PlantSpec,
};
use crate::tensor::{average, check_averaging_properties, TensorField};

use super::extract::{extract_trivial_einstein, ForcingEnvelope};
use super::forcing::step1_averaged_forcing;
use super::{BootstrapParams, BootstrapState, DataNorm};

pub const CONDITION_TAGS: [&str; 7] = ["i", "ii", "iii", "iv", "v", "vi", "vii"];

/// Largest acceptable kernel residual of a trivial variation.
pub const KERNEL_TOLERANCE: f64 = 1e-6;
/// Largest acceptable oscillation constant.
pub const OSCILLATION_CEILING: f64 = 10.0;
/// Componentwise tolerance when recovering a planted variation.
pub const RECOVERY_TOLERANCE: f64 = 1e-3;
/// Tori per sample in the Poincaré sweep.
const POINCARE_FIELDS: usize = 4;
/// Maximum condition number of random flat tori.
pub const MAX_CONDITION: f64 = 25.0;

/// One condition of the compatibility assumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub tag: String,
    pub pass: bool,
    pub constant: f64,
    pub samples: usize,
    pub worst: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub b: f64,
    pub sigma_star: f64,
    pub s0: f64,
    pub degenerate: bool,
    pub records: Vec<ConditionRecord>,
}

impl CompatibilityReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn record(&self, tag: &str) -> Option<&ConditionRecord> {
        self.records.iter().find(|r| r.tag == tag)
    }
}

fn worst_of(values: &[f64]) -> (f64, usize) {
    values
        .iter()
        .enumerate()
        .fold((0.0, 0), |(m, k), (i, v)| if *v > m || v.is_nan() { (*v, i) } else { (m, k) })
}

/// Empirical check of conditions (i) to (vii) on seeded random samples.
///
/// (i) and (ii) report the smallest constants in the weighted a priori
/// estimates over the samples; (iii) compares weighted norms of unit
/// `‖·‖_{0,λ}` forcings with the closed-form integral; (iv) checks that
/// trivial variations are in the kernel of the cusp operator, are their own
/// averages and have weighted image of order `ε₀`; (v) sweeps the level-torus
/// Poincaré inequality over random tori; (vi) measures the oscillation
/// constant; (vii) recovers planted variations.
pub fn check_compatibility(
    cusp: &CuspMetric,
    k_max: i32,
    params: &BootstrapParams,
    samples: usize,
    seed: u64,
) -> Result<CompatibilityReport> {
    params.validate()?;
    let w = params.weights()?;
    let error = params.operator_error()?;
    let grid = cusp.grid;
    let flat = cusp.flat;
    let modes = k_max.min(2);
    let sigmas: Vec<f64> = if w.is_degenerate() {
        vec![0.0]
    } else {
        vec![0.0, 0.5 * w.b(), w.b()]
    };
    let field = |s: u64, rates: std::ops::RangeInclusive<f64>| -> Result<TensorField> {
        random_tensor(flat, grid, k_max, modes, 1.0, rates, &mut stream(seed, s))
    };
    let boundary_c2 = |h: &TensorField| h.evaluator().sample(h, 0, 2).stats().max[2];

    // (i), (ii)
    let apriori: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|s| -> Result<(f64, f64)> {
            let h = field(s, 2.5..=3.5)?;
            let lh = apply_l_perturbed(&h, &error)?;
            let bd = boundary_c2(&h);
            let mut c_i = 0.0_f64;
            for &sigma in &sigmas {
                let ratio = weighted_h2(&h, sigma) / (weighted_l2(&lh, sigma) + weighted_l2(&h, sigma) + bd);
                c_i = c_i.max(ratio);
            }
            let c_ii = weighted_l2(&h, 0.0) / (weighted_l2(&lh, 0.0) + bd);
            Ok((c_i, c_ii))
        })
        .collect::<Result<_>>()?;

    // (iii)
    let area = flat.area();
    let integrability: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let f = field(1_000 + s, 0.5..=1.5)?;
            let f = f.scale(1.0 / norm_0_lambda(&f, params.lambda));
            Ok(sigmas
                .iter()
                .map(|&sigma| {
                    weighted_l2(&f, sigma) / norm_integral_bound(&grid, area, sigma, params.lambda)
                })
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;

    // (iv)
    let b_weight = sigmas[sigmas.len() - 1];
    let kernel: Vec<(f64, f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|s| -> Result<(f64, f64, f64)> {
            let v = random_variation(&mut stream(seed, 2_000 + s));
            let vr = v.to_radial(grid);
            let residual = apply_l_cusp(&vr).sup_norm();
            let vf = TensorField::from_radial(&vr, flat, k_max)?;
            let hat_defect = average(&vf).sub(&vr).sup_norm();
            let image = weighted_l2(&apply_l_perturbed(&vf, &error)?, b_weight) / v.norm();
            let c = if params.epsilon0 > 0.0 { image / params.epsilon0 } else { image };
            Ok((residual, hat_defect, c))
        })
        .collect::<Result<_>>()?;

    // (v)
    let levels = [0.0, 0.25 * grid.r_max(), 0.5 * grid.r_max()];
    let poincare: Vec<(f64, bool)> = (0..samples as u64)
        .into_par_iter()
        .map(|s| -> Result<(f64, bool)> {
            let mut rng = stream(seed, 3_000 + s);
            let torus = random_flat_torus(&mut rng, MAX_CONDITION)?;
            let mut worst = 0.0_f64;
            let mut ok = true;
            for _ in 0..POINCARE_FIELDS {
                let h = random_tensor(torus, grid, k_max, modes, 1.0, 0.0..=2.0, &mut rng)?;
                for &r in &levels {
                    let idx = ((r / grid.dr()).round() as usize).min(grid.len() - 1);
                    let p = poincare_check(&h, grid.r(idx))?;
                    worst = worst.max(p.ratio());
                    ok &= p.pass;
                }
            }
            Ok((worst, ok))
        })
        .collect::<Result<_>>()?;

    // (vi)
    let oscillation: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let h = field(4_000 + s, 0.0..=2.0)?;
            Ok(check_averaging_properties(&h)?.c_oscillation)
        })
        .collect::<Result<_>>()?;

    // (vii)
    let final_sigma = params.analysis_sigma(if w.is_degenerate() { 0.0 } else { w.b() });
    let recovery: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|s| -> Result<(f64, f64)> {
            let v = random_variation(&mut stream(seed, 5_000 + s));
            let spec = PlantSpec {
                v,
                seed: seed.wrapping_add(5_000 + s),
                ..Default::default()
            };
            let inst = planted_instance(*cusp, k_max, params.envelope()?, spec)?;
            let norm = DataNorm::new(&inst.h, &inst.f, params.lambda);
            let state = BootstrapState::base(&inst.h, &norm);
            let af = step1_averaged_forcing(
                &inst.h,
                &inst.f,
                &state.v,
                final_sigma,
                params.lambda,
                &error,
                &norm,
            )?;
            let env = ForcingEnvelope::from_forcing(&af, params.lambda, params.epsilon0, &norm);
            let ex = extract_trivial_einstein(
                &average(&inst.h),
                &env,
                params,
                final_sigma,
                state.bound,
                &norm,
            )?;
            let err = (ex.v.v11 - v.v11)
                .abs()
                .max((ex.v.v12 - v.v12).abs())
                .max((ex.v.v22 - v.v22).abs());
            Ok((err, ex.constant))
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(7);
    let finite_record = |tag: &str, values: &[f64], ceiling: f64| {
        let (c, i) = worst_of(values);
        ConditionRecord {
            tag: tag.into(),
            pass: values.iter().all(|v| v.is_finite()) && c <= ceiling,
            constant: c,
            samples: values.len(),
            worst: format!("sample {i}"),
        }
    };
    let c_i: Vec<f64> = apriori.iter().map(|x| x.0).collect();
    let c_ii: Vec<f64> = apriori.iter().map(|x| x.1).collect();
    records.push(finite_record("i", &c_i, params.constant_ceiling));
    records.push(finite_record("ii", &c_ii, params.constant_ceiling));
    records.push(finite_record("iii", &integrability, 1.0 + 1e-9));

    let (res, ri) = worst_of(&kernel.iter().map(|k| k.0).collect::<Vec<_>>());
    let hat = kernel.iter().map(|k| k.1).fold(0.0, f64::max);
    let (c_iv, _) = worst_of(&kernel.iter().map(|k| k.2).collect::<Vec<_>>());
    records.push(ConditionRecord {
        tag: "iv".into(),
        pass: res <= KERNEL_TOLERANCE && hat == 0.0 && c_iv.is_finite(),
        constant: c_iv,
        samples: kernel.len(),
        worst: format!("sample {ri}: kernel residual {res:e}, average defect {hat:e}"),
    });

    let ratios: Vec<f64> = poincare.iter().map(|p| p.0).collect();
    let (pc, pi) = worst_of(&ratios);
    records.push(ConditionRecord {
        tag: "v".into(),
        pass: poincare.iter().all(|p| p.1),
        constant: pc,
        samples: poincare.len() * POINCARE_FIELDS * levels.len(),
        worst: format!("torus {pi}: lhs/rhs {pc:e}"),
    });
    records.push(finite_record("vi", &oscillation, OSCILLATION_CEILING));

    let errs: Vec<f64> = recovery.iter().map(|x| x.0).collect();
    let (e, ei) = worst_of(&errs);
    let (cv, _) = worst_of(&recovery.iter().map(|x| x.1).collect::<Vec<_>>());
    records.push(ConditionRecord {
        tag: "vii".into(),
        pass: e <= RECOVERY_TOLERANCE && cv.is_finite() && cv <= params.constant_ceiling,
        constant: cv,
        samples: recovery.len(),
        worst: format!("sample {ei}: recovery error {e:e}"),
    });

    Ok(CompatibilityReport {
        b: w.b(),
        sigma_star: w.sigma_star(),
        s0: w.s0(),
        degenerate: w.is_degenerate(),
        records,
    })
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Every check compares library output with an
//! oracle computed here: closed forms, an independent finite-difference
//! eigensolver, or sums written out directly.

use std::f64::consts::{E, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;

use cusplab::bootstrap::{run_growth_certification, BootstrapParams};
use cusplab::geometry::{CuspMetric, FlatTorusMetric};
use cusplab::grid::RadialGrid;
use cusplab::harness::{execute, run_experiment, strip_timestamp, ExperimentConfig, ExperimentKind};
use cusplab::norms::{norm_0_lambda, poincare_check, weighted_l2, weighted_l2_direct};
use cusplab::ode::{decompose_growth, solve_bounded, solve_ivp, GrowthEnvelope, QuadraticODE};
use cusplab::operator::{apply_l_cusp, apply_l_full};
use cusplab::sampling::{
    ode_plant, ode_plant_l1, planted_instance, random_flat_torus, random_rate, random_tensor,
    random_variation, stream, PlantSpec,
};
use cusplab::tensor::{average, RadialTensorField, TensorField, TrivialEinsteinVariation, H33};

const SEED: u64 = 20_240_611;
const KERNEL_TOL: f64 = 1e-6;
const RATE_TOL: f64 = 1e-4;
const R_SPREAD: f64 = 0.10;
const EIGEN_TOL: f64 = 0.01;
const COMMUTATION_TOL: f64 = 1e-12;
const GEOMETRY_TOL: f64 = 1e-12;
const RECOVERY_TOL: f64 = 1e-3;
const RATE_SLACK: f64 = 0.05;
const GROWING_TOL: f64 = 1e-6;
const QUADRATURE_TOL: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 1e-8;

type Check = fn() -> Result<String, String>;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("kernel of the cusp operator", kernel_identity),
        ("characteristic rates", fundamental_rates),
        ("rate transfer and R-independence", ode_lemmas),
        ("level-torus Poincaré inequality", poincare),
        ("averaging commutes with the operator", averaging_commutation),
        ("level-torus decay", level_decay),
        ("planted growth certification", end_to_end),
        ("growing coefficients vanish", growing_elimination),
        ("weighted norm quadrature", quadrature),
        ("deterministic reports", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn standard_grid() -> RadialGrid {
    RadialGrid::new(20.0, 0.01).unwrap()
}

fn kernel_identity() -> Result<String, String> {
    let t = Instant::now();
    let grid = standard_grid();
    let mut rng = stream(SEED, 1);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let v = random_variation(&mut rng);
        // oracle: h_ij = e^{-2r} v_ij, traceless, so every row of the
        // operator vanishes identically
        let h = RadialTensorField::from_fn(grid, |c, r| {
            let m = [v.v11, v.v12, v.v22, 0.0, 0.0, 0.0];
            (-2.0 * r).exp() * m[c]
        });
        ensure(h.sub(&v.to_radial(grid)).sup_norm() == 0.0, || {
            "embedded variation differs from e^{-2r} v".into()
        })?;
        worst = worst.max(apply_l_cusp(&h).sup_norm());
    }
    let elapsed = t.elapsed();
    ensure(worst <= KERNEL_TOL, || format!("max residual {worst:e} > {KERNEL_TOL:e}"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("runtime {elapsed:?} ≥ 10 s"))?;
    Ok(format!("max residual {worst:.3e} over 50 variations in {elapsed:.2?}"))
}

fn fundamental_rates() -> Result<String, String> {
    let grid = standard_grid();
    let sqrt5 = 5.0_f64.sqrt();
    // (p, q) of y'' + p y' + q y and the expected roots
    let families = [
        ((-2.0, -4.0), (1.0 - sqrt5, 1.0 + sqrt5)),
        ((-2.0, -3.0), (-1.0, 3.0)),
        ((-2.0, 0.0), (0.0, 2.0)),
    ];
    let tail = grid.window(15.0, 20.0);
    let zero = vec![0.0; grid.len()];
    let mut lines = Vec::new();
    for ((p, q), (lo, hi)) in families {
        let ode = QuadraticODE::new(p, q).map_err(err)?;
        let (bounded, _) = solve_bounded(&grid, &ode, &zero, 1.0).map_err(err)?;
        let growing = solve_ivp(&grid, &ode, &zero, 1.0, hi).map_err(err)?;
        for (y, expected) in [(bounded, lo), (growing, hi)] {
            let fitted = tail_slope(&grid, &y, tail.clone())
                .ok_or_else(|| format!("no tail slope for rate {expected}"))?;
            let rel = if expected == 0.0 {
                fitted.abs()
            } else {
                ((fitted - expected) / expected).abs()
            };
            ensure(rel <= RATE_TOL, || {
                format!("rate {expected}: fitted {fitted}, relative error {rel:e}")
            })?;
            lines.push(format!("{expected:.4}"));
        }
    }
    Ok(format!("tail rates {} within {RATE_TOL:e}", lines.join(", ")))
}

/// Least-squares slope of `ln |y|` over `range`.
fn tail_slope(grid: &RadialGrid, y: &[f64], range: std::ops::Range<usize>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = range
        .filter(|&i| y[i] != 0.0)
        .map(|i| (grid.r(i), y[i].abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn envelope_at(env: &GrowthEnvelope, psi_l1: Option<f64>, r: f64) -> f64 {
    let mut e: f64 = env.terms.iter().map(|t| t.beta * (t.mu * r).exp()).sum();
    if let (Some(l), Some(n)) = (&env.l1, psi_l1) {
        e += n * (l.a * r).exp();
    }
    e
}

fn trapezoid(grid: &RadialGrid, y: &[f64]) -> f64 {
    let h = grid.dr();
    h * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[y.len() - 1]))
}

fn ode_lemmas() -> Result<String, String> {
    let grid = standard_grid();
    let mut worst = [0.0_f64; 2];
    for (suite, l1) in [(0usize, false), (1, true)] {
        for s in 0..100u64 {
            let mut rng = stream(SEED, 2_000 + 1_000 * suite as u64 + s);
            let plant = if l1 {
                ode_plant_l1(&grid, &mut rng)
            } else {
                ode_plant(&grid, &mut rng)
            }
            .map_err(err)?;
            let d = decompose_growth(&grid, &plant.y, &plant.ode, &plant.envelope)
                .map_err(|e| format!("sample {s} (l1 = {l1}): {e}"))?;
            let ode = plant.ode;
            // oracle bound: the particular solution of s β e^{μr} is
            // s β e^{μr} / Q(μ), so the constant cannot exceed max 1/|Q(μ)|
            let bound = if let Some(term) = &plant.envelope.l1 {
                let gamma_part = term.psi[0];
                let norm = trapezoid(&grid, &term.psi);
                let decay = (term.psi[1] / term.psi[0]).ln() / grid.dr();
                gamma_part / norm / ode.eval(term.a + decay).abs()
            } else {
                plant
                    .envelope
                    .terms
                    .iter()
                    .map(|t| 1.0 / ode.eval(t.mu).abs())
                    .fold(0.0, f64::max)
            };
            ensure(d.constant <= bound * (1.0 + 1e-6) + 1e-9, || {
                format!("sample {s} (l1 = {l1}): constant {} exceeds oracle {bound}", d.constant)
            })?;
            // with exponential forcing the fit carries the forcing rates, so
            // A1 is identifiable; an L¹ envelope only fixes A1 up to what the
            // certified bound absorbs, which the node check below covers
            if !l1 {
                ensure((d.a1 - plant.a1).abs() <= 1e-6, || {
                    format!("sample {s}: A1 = {} vs planted {}", d.a1, plant.a1)
                })?;
            }
            let psi_l1 = plant.envelope.l1.as_ref().map(|t| trapezoid(&grid, &t.psi));
            for (i, r) in grid.nodes().enumerate() {
                let rest = (plant.y[i] - d.homogeneous(r)).abs();
                let env = envelope_at(&plant.envelope, psi_l1, r);
                let tol = 1e-10 * (plant.y[i].abs() + d.homogeneous(r).abs())
                    + 64.0 * f64::EPSILON * plant.y.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                ensure(rest <= d.constant * env * (1.0 + 1e-12) + tol, || {
                    format!("sample {s} (l1 = {l1}): envelope violated at r = {r}")
                })?;
            }
            worst[suite] = worst[suite].max(d.constant);
        }
    }

    // R-independence on a fixed instance: y'' − 2y' − 4y = e^{-0.3r} − e^{-1.4r}
    let ode = QuadraticODE::new(-2.0, -4.0).map_err(err)?;
    let l1 = 1.0 - 5.0_f64.sqrt();
    let terms = [(1.0, -0.3, 1.0), (1.0, -1.4, -1.0)];
    let mut constants = Vec::new();
    for r_max in [5.0, 10.0, 20.0, 40.0] {
        let g = RadialGrid::new(r_max, 0.01).map_err(err)?;
        let y = g.sample(|r| {
            0.5 * (l1 * r).exp()
                + terms
                    .iter()
                    .map(|(b, mu, s)| s * b / ode.eval(*mu) * (mu * r).exp())
                    .sum::<f64>()
        });
        let env = GrowthEnvelope::new(terms.iter().map(|t| (t.0, t.1)).collect()).map_err(err)?;
        constants.push(decompose_growth(&g, &y, &ode, &env).map_err(err)?.constant);
    }
    let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = constants.iter().copied().fold(0.0, f64::max);
    let spread = hi / lo - 1.0;
    ensure(spread < R_SPREAD, || {
        format!("constants {constants:?} spread {spread:.3} ≥ {R_SPREAD}")
    })?;
    Ok(format!(
        "100 + 100 plants certified (max constants {:.3}, {:.3}); R-spread {spread:.2e}",
        worst[0], worst[1]
    ))
}

/// Smallest nonzero eigenvalue of the 9-point periodic Laplacian on an
/// `n × n` grid of the unit cell, by Lanczos with full reorthogonalization
/// against the constants.
fn fd_lambda1(gram: [[f64; 2]; 2], n: usize, seed: u64) -> f64 {
    let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
    let inv = [
        [gram[1][1] / det, -gram[0][1] / det],
        [-gram[1][0] / det, gram[0][0] / det],
    ];
    let h2 = 1.0 / (n * n) as f64;
    let idx = |i: isize, j: isize| {
        let m = n as isize;
        (((i % m) + m) % m * m + ((j % m) + m) % m) as usize
    };
    let apply = |u: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for i in 0..n as isize {
            for j in 0..n as isize {
                let c = u[idx(i, j)];
                let d11 = u[idx(i + 1, j)] - 2.0 * c + u[idx(i - 1, j)];
                let d22 = u[idx(i, j + 1)] - 2.0 * c + u[idx(i, j - 1)];
                let d12 = 0.25
                    * (u[idx(i + 1, j + 1)] - u[idx(i + 1, j - 1)] - u[idx(i - 1, j + 1)]
                        + u[idx(i - 1, j - 1)]);
                out[idx(i, j)] = -(inv[0][0] * d11 + 2.0 * inv[0][1] * d12 + inv[1][1] * d22) / h2;
            }
        }
        out
    };
    let dim = n * n;
    let ones = vec![1.0 / (dim as f64).sqrt(); dim];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let orth = |v: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for _ in 0..2 {
            for b in basis {
                let c = dot(v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
    };
    let mut rng = stream(seed, 0);
    let mut q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut basis = vec![ones];
    orth(&mut q, &basis);
    let nq = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= nq);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut previous = f64::INFINITY;
    for step in 1..=1500 {
        let mut w = apply(&q);
        let a = dot(&w, &q);
        alpha.push(a);
        basis.push(q.clone());
        orth(&mut w, &basis);
        let b = dot(&w, &w).sqrt();
        if step % 50 == 0 || b < 1e-12 {
            let m = alpha.len();
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let low = SymmetricEigen::new(t).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if (previous - low).abs() <= 1e-7 * low || b < 1e-12 {
                return low;
            }
            previous = low;
        }
        beta.push(b);
        q = w.into_iter().map(|x| x / b).collect();
    }
    previous
}

fn poincare() -> Result<String, String> {
    let grid = RadialGrid::new(10.0, 0.05).map_err(err)?;
    let k_max = 4;
    let mut worst = 0.0_f64;
    let mut eigen_gap = 0.0_f64;
    let mut cases = 0;
    let gaps: Vec<Result<f64, String>> = (0..100u64)
        .into_par_iter()
        .map(|t| {
            let torus = random_flat_torus(&mut stream(SEED, 4_000 + t), 25.0).map_err(err)?;
            let lambda1 = torus.lambda1().map_err(err)?;
            let fd = fd_lambda1(torus.gram(), 64, SEED + t);
            let rel = (fd - lambda1).abs() / lambda1;
            ensure(rel <= EIGEN_TOL, || {
                format!("torus {t}: λ₁ = {lambda1}, finite differences {fd}, gap {rel:.3e}")
            })?;
            Ok(rel)
        })
        .collect();
    for gap in gaps {
        eigen_gap = eigen_gap.max(gap?);
    }
    for t in 0..100u64 {
        let mut rng = stream(SEED, 4_000 + t);
        let torus = random_flat_torus(&mut rng, 25.0).map_err(err)?;
        ensure(torus.condition_number() <= 25.0 + 1e-9, || {
            format!("torus {t}: condition {}", torus.condition_number())
        })?;
        let g = torus.gram();
        let det = g[0][0] * g[1][1] - g[0][1] * g[0][1];
        let dual = |k: (i32, i32)| {
            let (x, y) = (k.0 as f64, k.1 as f64);
            (g[1][1] * x * x - 2.0 * g[0][1] * x * y + g[0][0] * y * y) / det
        };
        for _ in 0..20 {
            let h = random_tensor(torus, grid, k_max, 3, 1.0, 0.0..=2.0, &mut rng).map_err(err)?;
            for &r in &[0.0, 2.5, 5.0] {
                let check = poincare_check(&h, r).map_err(err)?;
                let i = grid.index_of(r).map_err(err)?;
                // Parseval oracle: fiber means of |w - ŵ|² and of the
                // tangential gradient |∇w|² = e^{2r} 4π² |k|²_dual |ŵ_k|²
                let (mut osc, mut grad) = (0.0, 0.0);
                for (k, _) in h.modes() {
                    if *k == (0, 0) {
                        continue;
                    }
                    let e: f64 = h.frame_coeffs(*k, i).iter().map(|z| z.norm_sqr()).sum();
                    osc += e;
                    grad += (2.0 * r).exp() * 4.0 * PI * PI * dual(*k) * e;
                }
                let diam = (-r).exp() * torus.diameter();
                let oracle = osc <= E * E * diam * diam * grad;
                ensure(oracle && check.pass, || {
                    format!("torus {t}, r = {r}: oracle {oracle}, library {}", check.pass)
                })?;
                worst = worst.max(check.ratio());
                cases += 1;
            }
        }
    }
    Ok(format!(
        "{cases} level checks hold with C = e² (max lhs/rhs {worst:.3e}); λ₁ vs finite differences within {eigen_gap:.2e} on 100 tori"
    ))
}

fn averaging_commutation() -> Result<String, String> {
    let grid = standard_grid();
    let mut worst = 0.0_f64;
    for s in 0..50u64 {
        let mut rng = stream(SEED, 5_000 + s);
        let torus = random_flat_torus(&mut rng, 25.0).map_err(err)?;
        let h = random_tensor(torus, grid, 4, 2, 1.0, 0.0..=2.0, &mut rng).map_err(err)?;
        let lhs = average(&apply_l_full(&h));
        let rhs = apply_l_cusp(&average(&h));
        worst = worst.max(lhs.sub(&rhs).sup_norm());
    }
    ensure(worst <= COMMUTATION_TOL, || format!("defect {worst:e} > {COMMUTATION_TOL:e}"))?;
    Ok(format!("max defect {worst:.3e} over 50 fields"))
}

/// Covering radius by brute force over a grid of the unit cell.
fn sampled_covering_radius(gram: [[f64; 2]; 2], n: usize) -> f64 {
    let dist = |x: f64, y: f64| (gram[0][0] * x * x + 2.0 * gram[0][1] * x * y + gram[1][1] * y * y).sqrt();
    let mut best = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
            let mut m = f64::INFINITY;
            for a in -2..=2 {
                for b in -2..=2 {
                    m = m.min(dist(s - a as f64, t - b as f64));
                }
            }
            best = best.max(m);
        }
    }
    best
}

fn level_decay() -> Result<String, String> {
    let grid = standard_grid();
    let mut worst = 0.0_f64;
    let mut diam_gap = 0.0_f64;
    for s in 0..10u64 {
        let flat = random_flat_torus(&mut stream(SEED, 6_000 + s), 25.0).map_err(err)?;
        let g = flat.gram();
        let area0 = (g[0][0] * g[1][1] - g[0][1] * g[0][1]).sqrt();
        let diam0 = flat.diameter();
        let n = 400;
        let sampled = sampled_covering_radius(g, n);
        let longest = g[0][0].max(g[1][1]).sqrt();
        diam_gap = diam_gap.max((diam0 - sampled) / diam0);
        ensure(diam0 >= sampled - 1e-12 && diam0 <= sampled + 2.0 * longest / n as f64, || {
            format!("torus {s}: diameter {diam0} vs sampled {sampled}")
        })?;
        let cusp = CuspMetric::new(flat, grid);
        for r in grid.nodes() {
            let d = cusp.level_torus_diameter(r).map_err(err)?;
            let a = cusp.level_torus_area(r).map_err(err)?;
            let ed = (d / (diam0 * (-r).exp()) - 1.0).abs();
            let ea = (a / (area0 * (-2.0 * r).exp()) - 1.0).abs();
            worst = worst.max(ed).max(ea);
        }
    }
    ensure(worst <= GEOMETRY_TOL, || format!("relative error {worst:e} > {GEOMETRY_TOL:e}"))?;
    Ok(format!(
        "max relative error {worst:.2e} on 10 tori; diameter within {diam_gap:.1e} of brute-force covering radius"
    ))
}

fn end_to_end() -> Result<String, String> {
    let t = Instant::now();
    let params = BootstrapParams {
        lambda: 0.5,
        eta: 1.5,
        epsilon0: 1e-3,
        seed: SEED,
        ..BootstrapParams::default()
    };
    let planted = TrivialEinsteinVariation::traceless(0.3, 0.0);
    let cusp = CuspMetric::new(FlatTorusMetric::square(1.0).map_err(err)?, standard_grid());
    let spec = PlantSpec {
        v: planted,
        seed: SEED + 1,
        ..PlantSpec::default()
    };
    let inst = planted_instance(cusp, 8, params.envelope().map_err(err)?, spec).map_err(err)?;
    let cert = run_growth_certification(&inst.h, &inst.f, &params, 8).map_err(err)?;
    let elapsed = t.elapsed();

    let expected = [0.0, 0.45, 0.9, 1.0];
    ensure(
        cert.trajectory.len() == expected.len()
            && cert.trajectory.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12),
        || format!("σ trajectory {:?}, expected {expected:?}", cert.trajectory),
    )?;
    ensure(cert.trajectory.iter().all(|s| (s - 0.5).abs() > 1e-9), || {
        "trajectory visits σ* = 0.5".into()
    })?;
    let recovery = (cert.v.v11 - 0.3)
        .abs()
        .max((cert.v.v22 + 0.3).abs())
        .max(cert.v.v12.abs());
    ensure(recovery <= RECOVERY_TOL, || {
        format!("recovered {:?}, error {recovery:e}", cert.v)
    })?;
    for tag in ["a", "b", "c", "d", "e"] {
        let c = cert.certificate(tag).ok_or_else(|| format!("certificate ({tag}) missing"))?;
        ensure(c.pass, || format!("certificate ({tag}) fails with constant {}", c.constant))?;
    }

    // oracle rate: slope of ln |ĥ − v| on [1, 10] for the recovered v,
    // computed here from the zero mode of h
    let grid = *inst.h.grid();
    let rest = inst.h.radial_slice().sub(&cert.v.to_radial(grid));
    let profile: Vec<f64> = (0..grid.len()).map(|i| rest.norm_at(i)).collect();
    let rate = tail_slope(&grid, &profile, grid.window(1.0, 10.0))
        .ok_or("|ĥ − v| vanishes on the fit window")?;
    let limit = -params.lambda + RATE_SLACK;
    ensure(rate <= limit, || format!("fitted rate {rate:.4} > {limit}"))?;
    let library_rate = cert.rate.rate.ok_or("library reports no rate")?;
    ensure(library_rate <= limit, || format!("library rate {library_rate:.4} > {limit}"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("runtime {elapsed:?} ≥ 60 s"))?;
    Ok(format!(
        "v recovered within {recovery:.2e}, rate {rate:.3} (library {library_rate:.3}) ≤ {limit}, (a)–(e) pass, σ: {:?}, {elapsed:.1?}",
        cert.trajectory
    ))
}

fn growing_elimination() -> Result<String, String> {
    let grid = standard_grid();
    let sqrt2 = 2.0_f64.sqrt();
    let mut worst = 0.0_f64;
    for s in 0..20u64 {
        let mut rng = stream(SEED, 8_000 + s);
        let v = random_variation(&mut rng);
        // frame components Σ a e^{ρr} with ρ < 1 so that e^{-2r}|h|² is
        // integrable, plus the variation in the constant frame part
        let parts: Vec<Vec<(f64, f64)>> = (0..6)
            .map(|_| {
                (0..3)
                    .map(|_| (rng.gen_range(-1.0..1.0), random_rate(&mut rng, -2.5..0.9)))
                    .collect()
            })
            .collect();
        let vm = [v.v11, sqrt2 * v.v12, v.v22, 0.0, 0.0, 0.0];
        let frame = |c: usize, r: f64| vm[c] + parts[c].iter().map(|(a, rho)| a * (rho * r).exp()).sum::<f64>();
        let h = RadialTensorField::from_frame_fn(grid, frame);
        let terms = |cs: &[usize], weight: f64| -> Vec<(f64, f64)> {
            cs.iter().flat_map(|&c| parts[c].iter().map(move |(a, rho)| (weight * a.abs(), *rho))).collect()
        };
        // families: trace and h33 (Q1), e^r h_i3 (Q2), e^{2r} h_ij (Q3)
        let e1: Vec<f64> = grid.nodes().map(f64::exp).collect();
        let e2: Vec<f64> = grid.nodes().map(|r| (2.0 * r).exp()).collect();
        let scaled = |c: usize, e: &[f64]| -> Vec<f64> { h.component(c).iter().zip(e).map(|(a, b)| a * b).collect() };
        let q1 = QuadraticODE::new(-2.0, -4.0).map_err(err)?;
        let q2 = QuadraticODE::new(-2.0, -3.0).map_err(err)?;
        let q3 = QuadraticODE::new(-2.0, 0.0).map_err(err)?;
        type Family = (Vec<f64>, QuadraticODE, Vec<(f64, f64)>);
        let families: Vec<Family> = vec![
            (h.trace_profile(), q1, terms(&[0, 2, 5], 1.0)),
            (h.component(H33).to_vec(), q1, terms(&[5], 1.0)),
            (scaled(3, &e1), q2, terms(&[3], 1.0 / sqrt2)),
            (scaled(4, &e1), q2, terms(&[4], 1.0 / sqrt2)),
            (scaled(0, &e2), q3, terms(&[0], 1.0)),
            (scaled(1, &e2), q3, terms(&[1], 1.0 / sqrt2)),
            (scaled(2, &e2), q3, terms(&[2], 1.0)),
        ];
        for (y, ode, t) in families {
            let scale = y.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            let d = decompose_growth(&grid, &y, &ode, &GrowthEnvelope::new(t).map_err(err)?)
                .map_err(|e| format!("field {s}: {e}"))?;
            let rel = d.a2.abs() / scale;
            worst = worst.max(rel);
        }
    }
    ensure(worst <= GROWING_TOL, || format!("growing coefficient {worst:e} > {GROWING_TOL:e}"))?;
    Ok(format!("max relative growing coefficient {worst:.2e} over 20 fields × 7 families"))
}

fn quadrature() -> Result<String, String> {
    let grid = standard_grid();
    let mut worst = 0.0_f64;
    for s in 0..10u64 {
        let mut rng = stream(SEED, 9_000 + s);
        let torus = random_flat_torus(&mut rng, 25.0).map_err(err)?;
        let f = random_tensor(torus, grid, 4, 2, 1.0, 0.5..=1.5, &mut rng).map_err(err)?;
        for sigma in [0.0, 0.25, 0.5, 1.0] {
            let a = weighted_l2(&f, sigma);
            let b = weighted_l2_direct(&f, sigma);
            worst = worst.max((a - b).abs() / b);
        }
    }
    ensure(worst <= QUADRATURE_TOL, || format!("co-area vs direct {worst:e}"))?;

    // |f| = e^{-r/2} on a unit-area torus: ∫ e^{-2r} e^{-r} dr = (1 − e^{-3R}) / 3
    let radial = RadialTensorField::from_fn(grid, |c, r| if c == H33 { (-0.5 * r).exp() } else { 0.0 });
    let f = TensorField::from_radial(&radial, FlatTorusMetric::square(1.0).map_err(err)?, 2).map_err(err)?;
    let closed = ((1.0 - (-60.0f64).exp()) / 3.0).sqrt();
    let gap = (weighted_l2(&f, 0.0) - closed).abs();
    ensure(gap <= CLOSED_FORM_TOL, || format!("closed form off by {gap:e}"))?;
    ensure((norm_0_lambda(&f, 0.5) - 1.0).abs() < 1e-12, || "‖f‖_{0,λ} ≠ 1".into())?;
    Ok(format!("co-area vs direct {worst:.2e}; √(1/3) reproduced within {gap:.2e}"))
}

fn determinism() -> Result<String, String> {
    let config = ExperimentConfig {
        kind: ExperimentKind::Bootstrap,
        seed: 7,
        samples: 2,
        ..ExperimentConfig::default()
    };
    let dirs = [tempfile::tempdir().map_err(err)?, tempfile::tempdir().map_err(err)?];
    for d in &dirs {
        run_experiment(&config, d.path()).map_err(err)?;
    }
    let read = |d: &tempfile::TempDir, name: &str| std::fs::read(d.path().join(name)).map_err(err);
    let a = strip_timestamp(&String::from_utf8(read(&dirs[0], "report.json")?).map_err(err)?).map_err(err)?;
    let b = strip_timestamp(&String::from_utf8(read(&dirs[1], "report.json")?).map_err(err)?).map_err(err)?;
    ensure(a == b, || "report.json differs between reruns".into())?;
    ensure(read(&dirs[0], "profiles.csv")? == read(&dirs[1], "profiles.csv")?, || {
        "profiles.csv differs between reruns".into()
    })?;
    let c = execute(&ExperimentConfig { kind: ExperimentKind::OdeLemma, ..config.clone() }).map_err(err)?;
    let d = execute(&ExperimentConfig { kind: ExperimentKind::OdeLemma, ..config }).map_err(err)?;
    let strip = |o: &cusplab::harness::Outcome| o.report.to_json().and_then(|j| strip_timestamp(&j)).map_err(err);
    ensure(strip(&c)? == strip(&d)?, || "ode-lemma report differs between reruns".into())?;
    Ok(format!("bootstrap and ode-lemma reports identical across reruns ({} bytes)", a.len()))
}

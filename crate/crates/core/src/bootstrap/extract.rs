use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{decompose_growth, GrowthEnvelope, QuadraticODE, RateDecomposition};
use crate::tensor::{RadialTensorField, TrivialEinsteinVariation, H11, H12, H13, H22, H23, H33};

use super::forcing::AveragedForcing;
use super::{BootstrapParams, DataNorm};

/// Relative tolerance on the trace of the candidate variation, on top of
/// the certified remainder of the `u11`, `u22` fits at `R`, which bounds how
/// well their constant coefficients are determined.
pub const TRACE_TOLERANCE: f64 = 1e-5;

/// Bound on the averaged forcing in the form the rate lemmas consume:
/// `decay_beta e^{-λr} + psi_beta ψ(r) e^{μr}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingEnvelope {
    pub decay_beta: f64,
    pub lambda: f64,
    pub psi_beta: f64,
    pub psi: Vec<f64>,
}

impl ForcingEnvelope {
    pub fn from_forcing(af: &AveragedForcing, lambda: f64, epsilon0: f64, norm: &DataNorm) -> Self {
        Self {
            decay_beta: af.c1 * norm.total,
            lambda,
            psi_beta: epsilon0 * af.c2,
            psi: af.psi.clone(),
        }
    }

    /// No forcing at all.
    pub fn none(len: usize, lambda: f64) -> Self {
        Self {
            decay_beta: 0.0,
            lambda,
            psi_beta: 0.0,
            psi: vec![0.0; len],
        }
    }
}

/// One scalar family of the averaged system and its rate decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub name: String,
    pub decomposition: RateDecomposition,
    /// `|A₂| / sup|ĥ|`, the relative size of the growing coefficient.
    pub growing_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub sigma: f64,
    pub mu: f64,
    pub v: TrivialEinsteinVariation,
    pub families: Vec<FamilyFit>,
    /// `|d₁₁ + d₂₂| / sup|ĥ|`, zero when `v′ = 0` is forced.
    pub trace_defect: f64,
    pub scale: f64,
    /// Smallest `c` with `|ĥ − v′|(r) ≤ c B e^{μr}` on the grid.
    pub constant: f64,
    pub worst_node: usize,
}

impl Extraction {
    pub fn family(&self, name: &str) -> Option<&FamilyFit> {
        self.families.iter().find(|f| f.name == name)
    }
}

/// Reads off `v′` from the averaged tensor `ĥ`.
///
/// The scalar families `tr ĥ`, `ĥ33` (roots `1 ± √5`), `e^r ĥ_i3` (roots
/// `−1, 3`) and `e^{2r} ĥ_ij` (roots `0, 2`) are decomposed against the
/// forcing envelope plus `bound·B e^{μ(σ)r}`. Coefficients of the growing
/// rates must vanish; for `μ(σ) ≤ 0` the constant coefficients of
/// `e^{2r} ĥ_ij` form `v′`.
pub fn extract_trivial_einstein(
    h_hat: &RadialTensorField,
    forcing: &ForcingEnvelope,
    params: &BootstrapParams,
    sigma: f64,
    bound: f64,
    norm: &DataNorm,
) -> Result<Extraction> {
    let weights = params.weights()?;
    if params.in_excluded_band(sigma) {
        return Err(Error::Parameter(format!(
            "σ = {sigma} lies within {} of the excluded weight {}",
            params.effective_margin(),
            weights.sigma_star()
        )));
    }
    if sigma > weights.b().max(0.0) + 1e-12 {
        return Err(Error::Parameter(format!(
            "σ = {sigma} exceeds the terminal weight {}",
            weights.b()
        )));
    }
    let grid = *h_hat.grid();
    if forcing.psi.len() != grid.len() {
        return Err(Error::Grid("ψ is not sampled on the grid of ĥ".into()));
    }
    let mu = weights.mu_of_sigma(sigma);
    let scale = h_hat.sup_norm();
    let threshold = params.growth_threshold * scale;

    let mut base_terms = vec![(forcing.decay_beta, -forcing.lambda), (bound * norm.total, mu)];
    base_terms.retain(|t| t.0 > 0.0);
    let envelope = |extra: Option<(f64, f64)>| -> Result<GrowthEnvelope> {
        let mut terms = base_terms.clone();
        terms.extend(extra.filter(|t| t.0 > 0.0));
        let env = GrowthEnvelope::new(terms)?;
        if forcing.psi_beta > 0.0 && forcing.psi.iter().any(|p| *p > 0.0) {
            env.with_l1(mu, forcing.psi.iter().map(|p| forcing.psi_beta * p).collect())
        } else {
            Ok(env)
        }
    };

    let e1: Vec<f64> = grid.nodes().map(f64::exp).collect();
    let e2: Vec<f64> = grid.nodes().map(|r| (2.0 * r).exp()).collect();
    let scaled = |c: usize, e: &[f64]| -> Vec<f64> {
        h_hat.component(c).iter().zip(e).map(|(h, s)| h * s).collect()
    };
    let s_family: Vec<f64> = scaled(H11, &e2)
        .iter()
        .zip(scaled(H22, &e2))
        .map(|(a, b)| a + b)
        .collect();

    let mut families = Vec::new();
    // certified remainder at R: the resolution of each fitted constant
    let resolution = |d: &RateDecomposition, env: &GrowthEnvelope| {
        d.constant * env.value(grid.r_max(), d.psi_l1)
    };
    let mut fit = |name: &str, y: &[f64], ode: QuadraticODE, extra: Option<(f64, f64)>| -> Result<(RateDecomposition, f64)> {
        let env = envelope(extra)?;
        let d = decompose_growth(&grid, y, &ode, &env)?;
        let res = resolution(&d, &env);
        if d.a2.abs() > threshold {
            return Err(Error::L2Violation {
                rate: d.lambda2,
                coefficient: d.a2,
                threshold,
            });
        }
        families.push(FamilyFit {
            name: name.to_string(),
            growing_ratio: if d.a2 == 0.0 { 0.0 } else { d.a2.abs() / scale },
            decomposition: d.clone(),
        });
        Ok((d, res))
    };

    fit("trace", &h_hat.trace_profile(), QuadraticODE::q1(), None)?;
    fit("h33", h_hat.component(H33), QuadraticODE::q1(), None)?;
    let (s, _) = fit("S", &s_family, QuadraticODE::q1(), None)?;
    fit("u13", &scaled(H13, &e1), QuadraticODE::q2(), None)?;
    fit("u23", &scaled(H23, &e1), QuadraticODE::q2(), None)?;
    // u11 and u22 carry half of the decaying solution of S.
    let s_tail = Some((2.0 * s.a1.abs(), s.lambda1));
    let (d11, res11) = fit("u11", &scaled(H11, &e2), QuadraticODE::q3(), s_tail)?;
    let (d22, res22) = fit("u22", &scaled(H22, &e2), QuadraticODE::q3(), s_tail)?;
    let (d12, _) = fit("u12", &scaled(H12, &e2), QuadraticODE::q3(), None)?;

    let (v, trace_defect) = if mu > 0.0 {
        (TrivialEinsteinVariation::zero(), 0.0)
    } else {
        let tr = d11.a1 + d22.a1;
        let tolerance = TRACE_TOLERANCE * scale + res11 + res22;
        if tr.abs() > tolerance {
            return Err(Error::Extraction(format!(
                "candidate variation has trace {tr:e} above {tolerance:e} (scale {scale:e})"
            )));
        }
        (
            TrivialEinsteinVariation::traceless(0.5 * (d11.a1 - d22.a1), d12.a1),
            if tr == 0.0 { 0.0 } else { tr.abs() / scale },
        )
    };

    let rest = h_hat.sub_variation(&v);
    let mut constant = 0.0_f64;
    let mut worst_node = 0;
    for (i, r) in grid.nodes().enumerate() {
        let c = norm.ratio(rest.norm_at(i) * (-mu * r).exp());
        if c > constant {
            constant = c;
            worst_node = i;
        }
    }
    if !constant.is_finite() {
        return Err(Error::Certification {
            tag: "averaged exponential estimate".into(),
            detail: format!("|ĥ − v′| is not bounded by B e^{{μr}} at r = {}", grid.r(worst_node)),
        });
    }
    Ok(Extraction {
        sigma,
        mu,
        v,
        families,
        trace_defect,
        scale,
        constant,
        worst_node,
    })
}

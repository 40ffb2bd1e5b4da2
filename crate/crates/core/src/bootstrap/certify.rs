use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tensor::{average, TensorField, TrivialEinsteinVariation};

use super::compat::{check_compatibility, CompatibilityReport};
use super::extract::Extraction;
use super::step::{analyze, bootstrap_step, StepRecord};
use super::{BootstrapParams, BootstrapState, DataNorm};

/// A measured constant for one growth estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub tag: String,
    pub pass: bool,
    pub constant: f64,
    /// Largest ratio on the outer half of the grid over that on the inner
    /// half; a bounded ratio profile keeps this near or below one.
    pub outer_inner: f64,
    pub worst_r: f64,
}

/// Least-squares exponential rate of `|ĥ − v|` on `[1, R/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: Option<f64>,
    pub window: (f64, f64),
    /// `|ĥ − v|` vanishes to round-off on the window; no rate is meaningful.
    pub degenerate: bool,
}

/// Everything the growth certification measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertification {
    pub norm: DataNorm,
    pub boundary_contract: f64,
    pub compatibility: Option<CompatibilityReport>,
    pub degenerate_range: bool,
    pub trajectory: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub extraction: Extraction,
    pub v: TrivialEinsteinVariation,
    /// `|v − w|` between the variation of the last step and the final one.
    pub path_agreement: f64,
    pub certificates: Vec<Certificate>,
    pub rate: RateFit,
    /// Rows `(r, max|h|, |ĥ − v|, max|h − v|)`.
    pub profiles: Vec<[f64; 4]>,
}

impl GrowthCertification {
    pub fn all_pass(&self) -> bool {
        self.certificates.iter().all(|c| c.pass)
            && self.compatibility.as_ref().is_none_or(|c| c.all_pass())
    }

    pub fn certificate(&self, tag: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.tag == tag)
    }
}

/// Below this multiple of `B` the difference `ĥ − v` is round-off.
const DEGENERATE_FLOOR: f64 = 1e-12;

fn profile_certificate(
    tag: &str,
    ratios: &[f64],
    r: &[f64],
    params: &BootstrapParams,
) -> Certificate {
    let half = r[r.len() - 1] / 2.0;
    let mut constant = 0.0_f64;
    let mut worst = 0;
    let (mut inner, mut outer) = (0.0_f64, 0.0_f64);
    for (i, q) in ratios.iter().enumerate() {
        if *q > constant || q.is_nan() {
            constant = *q;
            worst = i;
        }
        if r[i] <= half {
            inner = inner.max(*q);
        } else {
            outer = outer.max(*q);
        }
    }
    let outer_inner = if outer == 0.0 { 0.0 } else { outer / inner };
    let pass = constant.is_finite()
        && constant <= params.constant_ceiling
        && outer_inner <= 1.0 + params.flatness;
    Certificate {
        tag: tag.to_string(),
        pass,
        constant,
        outer_inner,
        worst_r: r[worst],
    }
}

/// Weight iteration from `σ = 0` to `b`, final extraction and the growth
/// certificates
///
/// * (a) `‖v‖ ≤ C B`,
/// * (b) `|ĥ − v|(r) ≤ C B e^{-λr}`,
/// * (c) `|h − v| ≤ C (B e^{-λr} + ‖h‖_{C¹} e^{-r})`,
/// * (d) `e^{λr}|h − v| ≤ C (B + ‖h‖_{C¹} e^{-(1−λ)r})`,
/// * (e) `|h| ≤ C (B + ‖h‖_{C¹} e^{-r})`.
///
/// `compat_samples = 0` skips the compatibility checks.
pub fn run_growth_certification(
    h: &TensorField,
    f: &TensorField,
    params: &BootstrapParams,
    compat_samples: usize,
) -> Result<GrowthCertification> {
    params.validate()?;
    let weights = params.weights()?;
    let error = params.operator_error()?;
    let compatibility = if compat_samples > 0 {
        let cusp = crate::geometry::CuspMetric::new(*h.flat(), *h.grid());
        Some(check_compatibility(&cusp, h.k_max().max(2), params, compat_samples, params.seed)?)
    } else {
        None
    };

    let norm = DataNorm::new(h, f, params.lambda);
    let trajectory = params.sigma_trajectory()?;
    let mut state = BootstrapState::base(h, &norm);
    let mut steps = Vec::new();
    for _ in 1..trajectory.len() {
        let (next, record) = bootstrap_step(&state, h, f, params, &norm)?;
        steps.push(record);
        state = next;
    }
    let sigma = params.analysis_sigma(state.sigma);
    let (extraction, _) = analyze(&state, h, f, params, &error, &norm, sigma)?;
    let v = extraction.v;
    let path_agreement = steps
        .last()
        .map_or(0.0, |s| s.extraction.v.distance(&v));

    let grid = *h.grid();
    let r: Vec<f64> = grid.nodes().collect();
    let lambda = params.lambda;
    let hat_rest = average(h).sub_variation(&v);
    let rest_stats = h.sub_variation(&v).fiber_stats(0);
    let h_stats = h.fiber_stats(1);
    let c1_sup = h_stats.iter().map(|s| s.max[1]).fold(0.0, f64::max);
    let b = norm.total;

    let hat_rest_norm: Vec<f64> = (0..grid.len()).map(|i| hat_rest.norm_at(i)).collect();
    let rest_max: Vec<f64> = rest_stats.iter().map(|s| s.max[0]).collect();
    let h_max: Vec<f64> = h_stats.iter().map(|s| s.max[0]).collect();
    let safe = |x: f64, d: f64| if x == 0.0 { 0.0 } else { x / d };

    let cert_b: Vec<f64> = (0..grid.len())
        .map(|i| safe(hat_rest_norm[i] * (lambda * r[i]).exp(), b))
        .collect();
    let cert_c: Vec<f64> = (0..grid.len())
        .map(|i| safe(rest_max[i], b * (-lambda * r[i]).exp() + c1_sup * (-r[i]).exp()))
        .collect();
    let cert_d: Vec<f64> = (0..grid.len())
        .map(|i| {
            safe(
                (lambda * r[i]).exp() * rest_max[i],
                b + c1_sup * (-(1.0 - lambda) * r[i]).exp(),
            )
        })
        .collect();
    let cert_e: Vec<f64> = (0..grid.len())
        .map(|i| safe(h_max[i], b + c1_sup * (-r[i]).exp()))
        .collect();
    let a = safe(v.norm(), b);
    let certificates = vec![
        Certificate {
            tag: "a".into(),
            pass: a.is_finite() && a <= params.constant_ceiling,
            constant: a,
            outer_inner: 0.0,
            worst_r: 0.0,
        },
        profile_certificate("b", &cert_b, &r, params),
        profile_certificate("c", &cert_c, &r, params),
        profile_certificate("d", &cert_d, &r, params),
        profile_certificate("e", &cert_e, &r, params),
    ];

    let window = grid.window(1.0_f64.min(grid.r_max()), grid.r_max() / 2.0);
    let window_max = window.clone().map(|i| hat_rest_norm[i]).fold(0.0, f64::max);
    let degenerate = window_max <= DEGENERATE_FLOOR * b || window_max == 0.0;
    let rate = RateFit {
        rate: if degenerate {
            None
        } else {
            grid.log_slope(&hat_rest_norm, window.clone())
        },
        window: (grid.r(window.start), grid.r(window.end.saturating_sub(1))),
        degenerate,
    };

    let profiles = (0..grid.len())
        .map(|i| [r[i], h_max[i], hat_rest_norm[i], rest_max[i]])
        .collect();

    Ok(GrowthCertification {
        boundary_contract: norm.boundary_contract(),
        norm,
        compatibility,
        degenerate_range: weights.is_degenerate(),
        trajectory,
        steps,
        extraction,
        v,
        path_agreement,
        certificates,
        rate,
        profiles,
    })
}

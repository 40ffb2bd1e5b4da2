use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{weighted_h2, weighted_l2, weighted_l2_radial};
use crate::operator::{apply_l_perturbed, OperatorError};
use crate::tensor::{average, TensorField};

use super::extract::{extract_trivial_einstein, Extraction, ForcingEnvelope};
use super::forcing::step1_averaged_forcing;
use super::{BootstrapParams, BootstrapState, DataNorm};

/// Relative slack on inequalities that hold exactly in exact arithmetic.
const SLACK: f64 = 1e-9;

/// Measured quantities of one weight step, all divided by `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub sigma: f64,
    /// Weight the analysis ran at (below `σ` inside the excluded band).
    pub sigma_analysis: f64,
    pub sigma_next: f64,
    pub c1: f64,
    pub c2: f64,
    pub psi_l1: f64,
    /// `‖h − ĥ‖_{L²(ω_{σ+1})}`.
    pub oscillation: f64,
    /// Its Poincaré bound `e D ‖h − v‖_{H²(ω_σ)}`.
    pub oscillation_bound: f64,
    /// `‖ĥ − v′‖_{L²(ω_σ′)}`.
    pub averaged: f64,
    pub averaged_bound: f64,
    /// `‖h − v′‖_{H²(ω_σ′)}`.
    pub closure: f64,
    /// `‖h − v′‖_{H²} / (‖𝓛(h − v′)‖_{L²} + ‖h − v′‖_{L²} + max_{r=0}|h − v′|_{C²})`.
    pub closure_constant: f64,
    pub bound: f64,
    pub extraction: Extraction,
}

fn step_error(tag: &str, detail: String) -> Error {
    Error::Certification {
        tag: tag.to_string(),
        detail,
    }
}

/// Runs the averaged forcing and the extraction at the analysis weight of
/// `state`; shared by the steps and the final certification.
pub(crate) fn analyze(
    state: &BootstrapState,
    h: &TensorField,
    f: &TensorField,
    params: &BootstrapParams,
    error: &OperatorError,
    norm: &DataNorm,
    sigma: f64,
) -> Result<(Extraction, super::AveragedForcing)> {
    let af = step1_averaged_forcing(h, f, &state.v, sigma, params.lambda, error, norm)?;
    let env = ForcingEnvelope::from_forcing(&af, params.lambda, params.epsilon0, norm);
    let ex = extract_trivial_einstein(&average(h), &env, params, sigma, state.bound, norm)?;
    Ok((ex, af))
}

/// One step `(Ass_σ) ⇒ (Ass_σ′)`.
pub fn bootstrap_step(
    state: &BootstrapState,
    h: &TensorField,
    f: &TensorField,
    params: &BootstrapParams,
    norm: &DataNorm,
) -> Result<(BootstrapState, StepRecord)> {
    if !state.bound.is_finite() {
        return Err(step_error("Ass_sigma", format!("bound at σ = {} is not finite", state.sigma)));
    }
    let error = params.operator_error()?;
    let weights = params.weights()?;
    let sigma = params.analysis_sigma(state.sigma);
    let next = params.next_sigma(sigma)?;
    let (ex, af) = analyze(state, h, f, params, &error, norm, sigma)?;
    let area = h.flat().area();

    // Oscillating part: Poincaré on every level torus gains one power of e^r.
    let h_minus_v = h.sub_variation(&state.v);
    let osc = weighted_l2(&h.oscillating_part(), sigma + 1.0);
    let osc_bound = E * h.flat().diameter() * weighted_h2(&h_minus_v, sigma);
    if osc > osc_bound * (1.0 + SLACK) {
        return Err(step_error(
            "h-hat(h) better weighted estimate",
            format!("‖h − ĥ‖ = {osc:e} exceeds the Poincaré bound {osc_bound:e}"),
        ));
    }

    // Averaged part: the pointwise certificate integrated against ω_σ′.
    let exponent = 2.0 * (next - sigma - weights.s0());
    if exponent >= 0.0 {
        return Err(step_error(
            "comp ass - mu(sigma)",
            format!("σ′ = {next} is not below σ + η − 1 = {}", sigma + weights.s0()),
        ));
    }
    let hat_rest = average(h).sub_variation(&ex.v);
    let averaged = weighted_l2_radial(&hat_rest, area, next);
    let integral: f64 = {
        let g = h.grid().sample(|r| (-2.0 * r + 2.0 * (next + ex.mu) * r).exp());
        h.grid().integrate(&g)
    };
    let averaged_bound = ex.constant * norm.total * (integral * area).sqrt();
    if averaged > averaged_bound * (1.0 + SLACK) + f64::MIN_POSITIVE {
        return Err(step_error(
            "hat(h)-v better weighted estimate",
            format!("‖ĥ − v′‖ = {averaged:e} exceeds {averaged_bound:e}"),
        ));
    }

    // Closure: triangle inequality in L², then the weighted a priori estimate.
    let rest = h.sub_variation(&ex.v);
    let l2 = weighted_l2(&rest, next);
    let osc_next = weighted_l2(&h.oscillating_part(), next);
    if l2 > (osc_next + averaged) * (1.0 + SLACK) + f64::MIN_POSITIVE {
        return Err(step_error(
            "h-v better weighted estimate",
            format!("‖h − v′‖ = {l2:e} exceeds {:e}", osc_next + averaged),
        ));
    }
    let closure = weighted_h2(&rest, next);
    let l_rest = weighted_l2(&apply_l_perturbed(&rest, &error)?, next);
    let boundary = rest.evaluator().sample(&rest, 0, 2).stats().max[2];
    let denom = l_rest + l2 + boundary;
    let closure_constant = if closure == 0.0 { 0.0 } else { closure / denom };
    if !closure_constant.is_finite() {
        return Err(step_error(
            "h-v better weighted estimate",
            "H² norm of h − v′ not controlled by its data".into(),
        ));
    }

    let bound = norm.ratio(ex.v.norm()).max(norm.ratio(closure));
    let record = StepRecord {
        sigma: state.sigma,
        sigma_analysis: sigma,
        sigma_next: next,
        c1: af.c1,
        c2: af.c2,
        psi_l1: af.psi_l1_ratio,
        oscillation: norm.ratio(osc),
        oscillation_bound: norm.ratio(osc_bound),
        averaged: norm.ratio(averaged),
        averaged_bound: norm.ratio(averaged_bound),
        closure: norm.ratio(closure),
        closure_constant,
        bound,
        extraction: ex.clone(),
    };
    Ok((
        BootstrapState {
            sigma: next,
            v: ex.v,
            bound,
        },
        record,
    ))
}

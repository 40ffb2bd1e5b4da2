//! The weighted bootstrap on a truncated cusp: compatibility checks, the
//! averaged forcing, extraction of the trivial Einstein variation, the
//! weight iteration and the final growth certificates.
//!
//! Every measured constant is normalized by
//! `B = ‖f‖_{0,λ} + max_{r=0} |h|`, so all certificates are homogeneous of
//! degree zero in `(h, f)`.

mod certify;
mod compat;
mod extract;
mod forcing;
mod step;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PerturbationEnvelope;
use crate::norms::{norm_0_lambda, weighted_h2, WeightParams};
use crate::operator::OperatorError;
use crate::tensor::{TensorField, TrivialEinsteinVariation};

pub use certify::{run_growth_certification, Certificate, GrowthCertification, RateFit};
pub use compat::{
    check_compatibility, CompatibilityReport, ConditionRecord, CONDITION_TAGS, KERNEL_TOLERANCE,
    MAX_CONDITION, OSCILLATION_CEILING,
};
pub use extract::{extract_trivial_einstein, Extraction, FamilyFit, ForcingEnvelope};
pub use forcing::{step1_averaged_forcing, AveragedForcing};
pub use step::{bootstrap_step, StepRecord};

/// Numerical parameters of the bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapParams {
    pub lambda: f64,
    pub eta: f64,
    pub epsilon0: f64,
    /// Seed of the zeroth-order coupling.
    pub seed: u64,
    /// Distance kept from the excluded weight `2 − η`.
    pub margin: f64,
    /// Fraction of the admissible step `min(1, η − 1)` actually taken.
    pub step_factor: f64,
    /// Growing coefficients must stay below this fraction of `sup |ĥ|`.
    pub growth_threshold: f64,
    /// Largest acceptable certified constant.
    pub constant_ceiling: f64,
    /// Largest relative excess of a certificate ratio on the outer half of
    /// the grid over its inner half.
    pub flatness: f64,
}

impl Default for BootstrapParams {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            eta: 1.5,
            epsilon0: 1e-3,
            seed: 0,
            margin: 0.05,
            step_factor: 0.9,
            growth_threshold: 1e-6,
            constant_ceiling: 1e3,
            flatness: 0.5,
        }
    }
}

/// Tolerance on weight comparisons.
const SIGMA_EPS: f64 = 1e-12;

impl BootstrapParams {
    pub fn validate(&self) -> Result<()> {
        WeightParams::new(self.lambda, self.eta)?;
        self.envelope()?;
        let positive = [
            ("margin", self.margin),
            ("step_factor", self.step_factor),
            ("growth_threshold", self.growth_threshold),
            ("constant_ceiling", self.constant_ceiling),
            ("flatness", self.flatness),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.step_factor >= 1.0 {
            return Err(Error::Parameter(format!(
                "step_factor must be below 1, got {}",
                self.step_factor
            )));
        }
        Ok(())
    }

    pub fn weights(&self) -> Result<WeightParams> {
        WeightParams::new(self.lambda, self.eta)
    }

    pub fn envelope(&self) -> Result<PerturbationEnvelope> {
        PerturbationEnvelope::new(self.epsilon0, self.eta, self.seed)
    }

    pub fn operator_error(&self) -> Result<OperatorError> {
        OperatorError::new(self.envelope()?)
    }

    /// Admissible step `min(1, s₀)`.
    pub fn max_step(&self) -> f64 {
        (self.eta - 1.0).min(1.0)
    }

    /// Margin actually enforced: never more than 45% of a step, so that a
    /// nudge past `σ*` stays within one admissible step.
    pub fn effective_margin(&self) -> f64 {
        self.margin.min(0.45 * (self.eta - 1.0))
    }

    fn sigma_star(&self) -> f64 {
        2.0 - self.eta
    }

    /// Whether `σ` lies strictly inside the excluded band around `σ*`.
    pub fn in_excluded_band(&self, sigma: f64) -> bool {
        (sigma - self.sigma_star()).abs() < self.effective_margin() - 1e-9
    }

    /// Weight used for the analysis at the current state: `σ` itself, or
    /// the lower band edge `σ* − m` when `σ` sits in the excluded band.
    /// Estimates at a smaller weight follow from those at `σ`.
    pub fn analysis_sigma(&self, sigma: f64) -> f64 {
        if self.in_excluded_band(sigma) {
            self.sigma_star() - self.effective_margin()
        } else {
            sigma
        }
    }

    /// Next weight from the analysis weight `σ`.
    pub fn next_sigma(&self, sigma: f64) -> Result<f64> {
        let b = self.weights()?.b();
        let m = self.effective_margin();
        let star = self.sigma_star();
        let mut next = b.min(sigma + self.step_factor * self.max_step());
        if (next - star).abs() < m {
            next = if star - m > sigma + SIGMA_EPS {
                star - m
            } else {
                b.min(star + m)
            };
        }
        Ok(next)
    }

    /// The planned weights `0 = σ₀ < σ₁ < … = b`, or `[0]` when `b < 0`.
    pub fn sigma_trajectory(&self) -> Result<Vec<f64>> {
        let w = self.weights()?;
        let mut out = vec![0.0];
        if w.is_degenerate() {
            return Ok(out);
        }
        let b = w.b();
        let cap = (b / (self.step_factor * self.max_step())).ceil() as usize + 2;
        while out[out.len() - 1] < b - SIGMA_EPS {
            let s = out[out.len() - 1];
            let next = self.next_sigma(self.analysis_sigma(s))?;
            if next <= s + SIGMA_EPS || out.len() > cap {
                return Err(Error::Internal(format!(
                    "weight iteration stalled at σ = {s} (next {next})"
                )));
            }
            out.push(next);
        }
        Ok(out)
    }
}

/// `B = ‖f‖_{0,λ} + max_{r=0} |h|` and the boundary contract ratio
/// `max_{r=0} |h|_{C²} / ‖f‖_{0,λ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataNorm {
    pub f_norm: f64,
    pub boundary_c0: f64,
    pub boundary_c2: f64,
    pub total: f64,
}

impl DataNorm {
    pub fn new(h: &TensorField, f: &TensorField, lambda: f64) -> Self {
        let f_norm = norm_0_lambda(f, lambda);
        let s = h.evaluator().sample(h, 0, 2).stats();
        Self {
            f_norm,
            boundary_c0: s.max[0],
            boundary_c2: s.max[2],
            total: f_norm + s.max[0],
        }
    }

    /// `max_{r=0}|h|_{C²} / ‖f‖_{0,λ}`; infinite when `f = 0` but `h ≠ 0`
    /// at the boundary.
    pub fn boundary_contract(&self) -> f64 {
        if self.boundary_c2 == 0.0 {
            0.0
        } else {
            self.boundary_c2 / self.f_norm
        }
    }

    /// `x / B`, zero for a vanishing instance.
    pub fn ratio(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x / self.total
        }
    }
}

/// `(Ass_σ)`: `‖v‖ ≤ C B` and `‖h − v‖_{H²(ω_σ)} ≤ C B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapState {
    pub sigma: f64,
    pub v: TrivialEinsteinVariation,
    pub bound: f64,
}

impl BootstrapState {
    /// `σ = 0`, `v = 0`, bound `‖h‖_{H²} / B`.
    pub fn base(h: &TensorField, norm: &DataNorm) -> Self {
        Self {
            sigma: 0.0,
            v: TrivialEinsteinVariation::zero(),
            bound: norm.ratio(weighted_h2(h, 0.0)),
        }
    }
}

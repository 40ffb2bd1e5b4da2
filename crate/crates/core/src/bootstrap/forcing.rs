use crate::error::{Error, Result};
use crate::operator::{apply_l_full, OperatorError};
use crate::tensor::{average, RadialTensorField, TensorField, TrivialEinsteinVariation};

use super::DataNorm;

/// The perturbation part is a difference of two computed quantities; below
/// this multiple of their size it is indistinguishable from round-off.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

/// The averaged equation `𝓛_cusp ĥ = f̂_c` and the measured envelope
/// `|f̂_c|(r) ≤ c₁ B e^{-λr} + c₂ ε₀ ψ_σ(r) e^{μ(σ)r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedForcing {
    pub sigma: f64,
    pub fc_hat: RadialTensorField,
    /// `ψ_σ(r) = e^{σr} ∫_{T(r)} |h − v|_{C²}`.
    pub psi: Vec<f64>,
    pub c1: f64,
    /// Zero when `ε₀ = 0`; at most `1 / area(T²)` by construction.
    pub c2: f64,
    pub psi_l1: f64,
    /// `‖ψ_σ‖_{L¹} / B`.
    pub psi_l1_ratio: f64,
    pub worst_node_c1: usize,
    pub worst_node_c2: usize,
}

/// Splits `f̂_c = average(𝓛_full h) = f̂ − Ê h` into `f̂ − Ê v`, bounded by
/// the data, and `−Ê(h − v)`, bounded through `ψ_σ`.
pub fn step1_averaged_forcing(
    h: &TensorField,
    f: &TensorField,
    v: &TrivialEinsteinVariation,
    sigma: f64,
    lambda: f64,
    error: &OperatorError,
    norm: &DataNorm,
) -> Result<AveragedForcing> {
    if h.grid() != f.grid() {
        return Err(Error::Grid("h and f live on different grids".into()));
    }
    let grid = *h.grid();
    let fc_hat = average(&apply_l_full(h));
    let v_r = v.to_radial(grid);
    let f_part = average(f).sub(&error.apply_radial(&v_r));
    let e_part = fc_hat.sub(&f_part);

    let area = h.flat().area();
    let eps0 = error.envelope.epsilon0;
    let mu = 2.0 - error.envelope.eta - sigma;
    let stats = h.sub_variation(v).fiber_stats(2);
    let psi: Vec<f64> = grid
        .nodes()
        .zip(&stats)
        .map(|(r, s)| ((sigma - 2.0) * r).exp() * area * s.mean[2])
        .collect();

    let mut c1 = 0.0_f64;
    let mut c2 = 0.0_f64;
    let (mut w1, mut w2) = (0, 0);
    for (i, r) in grid.nodes().enumerate() {
        let a = norm.ratio(f_part.norm_at(i) * (lambda * r).exp());
        if a > c1 {
            c1 = a;
            w1 = i;
        }
        let e = e_part.norm_at(i);
        let floor = ROUNDING_FLOOR * (fc_hat.norm_at(i) + f_part.norm_at(i));
        if e > floor {
            let denom = eps0 * psi[i] * (mu * r).exp();
            let b = if denom > 0.0 { e / denom } else { f64::INFINITY };
            if b > c2 {
                c2 = b;
                w2 = i;
            }
        }
    }
    if !c2.is_finite() {
        return Err(Error::Certification {
            tag: "growth of averaged forcing".into(),
            detail: format!(
                "perturbation term {:e} at r = {} is not covered by ψ",
                e_part.norm_at(w2),
                grid.r(w2)
            ),
        });
    }
    let psi_l1 = grid.integrate_trapezoid(&psi);
    Ok(AveragedForcing {
        sigma,
        fc_hat,
        psi,
        c1,
        c2,
        psi_l1,
        psi_l1_ratio: norm.ratio(psi_l1),
        worst_node_c1: w1,
        worst_node_c2: w2,
    })
}

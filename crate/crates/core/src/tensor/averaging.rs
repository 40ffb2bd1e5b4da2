use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{RadialTensorField, TensorField, NCOMP};

/// Componentwise fiber mean, i.e. the `k = 0` Fourier slice.
pub fn average(h: &TensorField) -> RadialTensorField {
    h.radial_slice()
}

/// Smallest empirical constants for the averaging properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragingReport {
    /// `max |ĥ|(r) / max_{T(r)} |h|`.
    pub c_pointwise: f64,
    /// `max |avg(∂_r h) − ∂_r ĥ|` with the fiber mean taken over samples.
    pub radial_commutation: f64,
    /// `max |tr ĥ − avg(tr h)|`.
    pub trace_commutation: f64,
    /// `max |h − ĥ|(x) / (D e^{-r} max_{T(r)} |h|_{C¹})`.
    pub c_oscillation: f64,
    /// Largest `|h − ĥ|` seen; zero for radial fields.
    pub max_oscillation: f64,
}

pub fn check_averaging_properties(h: &TensorField) -> Result<AveragingReport> {
    for (k, p) in h.modes() {
        if p.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Data(format!("mode {k:?} has non-finite samples")));
        }
    }
    let grid = *h.grid();
    let hat = average(h);
    let osc = h.oscillating_part();
    let ev = h.evaluator();
    let diff = grid.diff();
    let diam = h.flat().diameter();

    let per_node: Vec<[f64; 5]> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let r = grid.r(i);
            let s = ev.sample(h, i, 1);
            let max_c0 = s.c0.iter().copied().fold(0.0, f64::max);
            let max_c1 = s.c_norm(1).into_iter().fold(0.0, f64::max);
            let hat_norm = hat.norm_at(i);
            let c_ii = if max_c0 > 0.0 { hat_norm / max_c0 } else { 0.0 };

            let mut radial = 0.0_f64;
            for c in 0..NCOMP {
                let coeffs: Vec<((i32, i32), Complex64)> = h
                    .modes()
                    .map(|(k, p)| (*k, diff.at(&p[c], i, 1)))
                    .collect();
                let vals = ev.scalar(&coeffs);
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                radial = radial.max((mean - hat.d1(c)[i]).abs());
            }

            let tr_mean = s.trace.iter().sum::<f64>() / s.points() as f64;
            let trace_dev = (tr_mean - hat.trace_at(i)).abs();

            let so = ev.sample(&osc, i, 0);
            let max_osc = so.c0.iter().copied().fold(0.0, f64::max);
            let denom = diam * (-r).exp() * max_c1;
            let c_v = if max_osc == 0.0 { 0.0 } else { max_osc / denom };
            [c_ii, radial, trace_dev, c_v, max_osc]
        })
        .collect();

    let col = |j: usize| per_node.iter().map(|v| v[j]).fold(0.0, f64::max);
    Ok(AveragingReport {
        c_pointwise: col(0),
        radial_commutation: col(1),
        trace_commutation: col(2),
        c_oscillation: col(3),
        max_oscillation: col(4),
    })
}

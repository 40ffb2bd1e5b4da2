//! Pointwise evaluation on level tori by inverse FFT.
//!
//! Derivative norms use the frame of the cusp metric. With `G` the flat
//! Gram matrix and `w` the frame vector of the tensor,
//!
//! ```text
//! |∇h|²  = ‖∂_r w‖² + e^{2r} G^{ij} ⟨∂_i w, ∂_j w⟩
//! |∇²h|² = ‖∂²_r w‖² + 2 e^{2r} G^{ij} ⟨∂_i∂_r w, ∂_j∂_r w⟩
//!          + e^{4r} G^{ia} G^{jb} ⟨∂_ij w, ∂_ab w⟩
//! ```
//!
//! and `|h|_{C^k}` is the sum of the norms of orders `0..=k`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{DiffOp, RadialGrid};

use super::{frame_scale, TensorField, H11, H22, H33, NCOMP, WEIGHT_EXPONENT};

/// Samples a level torus on an `M × M` grid with `M = 2K + 2`, where `K` is
/// the highest active frequency; means of products of two degree-`K`
/// trigonometric polynomials are then exact.
#[derive(Clone)]
pub struct FiberEvaluator {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
    diff: DiffOp,
}

impl std::fmt::Debug for FiberEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiberEvaluator").field("m", &self.m).finish()
    }
}

/// Pointwise norms at the `M²` fiber points of one level torus.
#[derive(Debug, Clone, Default)]
pub struct FiberSample {
    pub c0: Vec<f64>,
    /// `|∇h|`, empty below order 1.
    pub grad: Vec<f64>,
    /// `|∇²h|`, empty below order 2.
    pub hess: Vec<f64>,
    pub trace: Vec<f64>,
}

/// Max, mean and mean square of `|h|_{C^k}` over one level torus, `k = 0, 1, 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FiberStats {
    pub max: [f64; 3],
    pub mean: [f64; 3],
    pub mean_sq: [f64; 3],
}

impl FiberSample {
    pub fn points(&self) -> usize {
        self.c0.len()
    }

    /// `|h|_{C^order}` at every point.
    pub fn c_norm(&self, order: usize) -> Vec<f64> {
        (0..self.points())
            .map(|p| {
                let mut v = self.c0[p];
                if order >= 1 {
                    v += self.grad[p];
                }
                if order >= 2 {
                    v += self.hess[p];
                }
                v
            })
            .collect()
    }

    pub fn stats(&self) -> FiberStats {
        let mut s = FiberStats::default();
        let n = self.points() as f64;
        let order = if !self.hess.is_empty() {
            2
        } else if !self.grad.is_empty() {
            1
        } else {
            0
        };
        for k in 0..=order {
            let v = self.c_norm(k);
            s.max[k] = v.iter().copied().fold(0.0, f64::max);
            s.mean[k] = v.iter().sum::<f64>() / n;
            s.mean_sq[k] = v.iter().map(|x| x * x).sum::<f64>() / n;
        }
        s
    }
}

impl FiberEvaluator {
    pub fn new(active_k: i32, grid: &RadialGrid) -> Self {
        let m = (2 * active_k.max(0) as usize + 2).max(2);
        let fft = FftPlanner::new().plan_fft_inverse(m);
        Self {
            m,
            fft,
            diff: grid.diff(),
        }
    }

    /// Side length `M` of the fiber sample grid.
    pub fn side(&self) -> usize {
        self.m
    }

    fn index(&self, k: (i32, i32)) -> usize {
        let m = self.m as i32;
        (k.0.rem_euclid(m) * m + k.1.rem_euclid(m)) as usize
    }

    /// Real values `Σ_k c_k e^{2πi k·x}` at `x = (a/M, b/M)`, row-major in `a`.
    fn synthesize(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) -> Vec<f64> {
        let m = self.m;
        self.fft.process(buf);
        transpose(buf, scratch, m);
        self.fft.process(scratch);
        transpose(scratch, buf, m);
        buf.iter().map(|z| z.re).collect()
    }

    /// Pointwise norms of `h` over the level torus at node `i`.
    pub fn sample(&self, h: &TensorField, i: usize, order: usize) -> FiberSample {
        let order = order.min(2);
        let m2 = self.m * self.m;
        let r = h.grid().r(i);
        let zero = Complex64::new(0.0, 0.0);
        // Quantity slots per component: W, Wr, W1, W2, Wrr, W1r, W2r, W11, W12, W22.
        let slots = match order {
            0 => 1,
            1 => 4,
            _ => 10,
        };
        let mut bufs = vec![vec![zero; m2]; slots * NCOMP];
        let tau = Complex64::new(0.0, 2.0 * PI);
        for (k, prof) in h.modes() {
            let idx = self.index(*k);
            let (i1, i2) = (tau * k.0 as f64, tau * k.1 as f64);
            for c in 0..NCOMP {
                let s = frame_scale(c, r);
                let kap = WEIGHT_EXPONENT[c];
                let p = prof[c][i];
                let w = p * s;
                bufs[c * slots][idx] = w;
                if order >= 1 {
                    let p1 = self.diff.at(&prof[c], i, 1);
                    let wr = (p1 + p * kap) * s;
                    bufs[c * slots + 1][idx] = wr;
                    bufs[c * slots + 2][idx] = w * i1;
                    bufs[c * slots + 3][idx] = w * i2;
                    if order >= 2 {
                        let p2 = self.diff.at(&prof[c], i, 2);
                        bufs[c * slots + 4][idx] = (p2 + p1 * (2.0 * kap) + p * (kap * kap)) * s;
                        bufs[c * slots + 5][idx] = wr * i1;
                        bufs[c * slots + 6][idx] = wr * i2;
                        bufs[c * slots + 7][idx] = w * i1 * i1;
                        bufs[c * slots + 8][idx] = w * i1 * i2;
                        bufs[c * slots + 9][idx] = w * i2 * i2;
                    }
                }
            }
        }
        let mut scratch = vec![zero; m2];
        let vals: Vec<Vec<f64>> = bufs
            .iter_mut()
            .map(|b| self.synthesize(b, &mut scratch))
            .collect();
        let q = |c: usize, slot: usize, p: usize| vals[c * slots + slot][p];

        let g = h.flat().inverse();
        let e2 = (2.0 * r).exp();
        let mut out = FiberSample {
            c0: Vec::with_capacity(m2),
            trace: Vec::with_capacity(m2),
            ..Default::default()
        };
        for p in 0..m2 {
            let n0: f64 = (0..NCOMP).map(|c| q(c, 0, p).powi(2)).sum();
            out.c0.push(n0.sqrt());
            out.trace.push(q(H33, 0, p) + q(H11, 0, p) + q(H22, 0, p));
            if order >= 1 {
                let mut n1 = 0.0;
                for c in 0..NCOMP {
                    let (a, b) = (q(c, 2, p), q(c, 3, p));
                    n1 += q(c, 1, p).powi(2)
                        + e2 * (g[0][0] * a * a + 2.0 * g[0][1] * a * b + g[1][1] * b * b);
                }
                out.grad.push(n1.max(0.0).sqrt());
            }
            if order >= 2 {
                let mut n2 = 0.0;
                for c in 0..NCOMP {
                    let (a, b) = (q(c, 5, p), q(c, 6, p));
                    let (h11, h12, h22) = (q(c, 7, p), q(c, 8, p), q(c, 9, p));
                    let p11 = g[0][0] * h11 + g[0][1] * h12;
                    let p12 = g[0][0] * h12 + g[0][1] * h22;
                    let p21 = g[0][1] * h11 + g[1][1] * h12;
                    let p22 = g[0][1] * h12 + g[1][1] * h22;
                    n2 += q(c, 4, p).powi(2)
                        + 2.0 * e2 * (g[0][0] * a * a + 2.0 * g[0][1] * a * b + g[1][1] * b * b)
                        + e2 * e2 * (p11 * p11 + 2.0 * p12 * p21 + p22 * p22);
                }
                out.hess.push(n2.max(0.0).sqrt());
            }
        }
        out
    }

    /// Values of one scalar Fourier series (coefficients per mode) on the
    /// fiber grid.
    pub fn scalar(&self, coeffs: &[((i32, i32), Complex64)]) -> Vec<f64> {
        let m2 = self.m * self.m;
        let mut buf = vec![Complex64::new(0.0, 0.0); m2];
        for (k, z) in coeffs {
            buf[self.index(*k)] = *z;
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); m2];
        self.synthesize(&mut buf, &mut scratch)
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    for a in 0..m {
        for b in 0..m {
            dst[b * m + a] = src[a * m + b];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FlatTorusMetric;
    use crate::grid::RadialGrid;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_synthesis_matches_direct_sum() {
        let grid = RadialGrid::new(1.0, 0.1).unwrap();
        let ev = FiberEvaluator::new(2, &grid);
        let c = Complex64::new(0.3, -0.2);
        let coeffs = [((1, -2), c), ((-1, 2), c.conj()), ((0, 0), Complex64::new(0.5, 0.0))];
        let vals = ev.scalar(&coeffs);
        let m = ev.side();
        for a in 0..m {
            for b in 0..m {
                let x = (a as f64 / m as f64, b as f64 / m as f64);
                let phase = 2.0 * PI * (x.0 - 2.0 * x.1);
                let expect = 0.5 + 2.0 * (c * Complex64::from_polar(1.0, phase)).re;
                assert_relative_eq!(vals[a * m + b], expect, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn single_mode_gradient_norm() {
        // h33 = a cos(2π x¹) e^{-r}: |∇h|² mean = a²/2 (e^{-2r} + e^{2r}λ e^{-2r}).
        let grid = RadialGrid::new(2.0, 0.01).unwrap();
        let flat = FlatTorusMetric::square(1.0).unwrap();
        let mut h = TensorField::zeros(flat, grid, 2).unwrap();
        let prof = std::array::from_fn(|c| {
            grid.nodes()
                .map(|r| Complex64::new(if c == H33 { 0.5 * (-r).exp() } else { 0.0 }, 0.0))
                .collect()
        });
        h.insert_mode((1, 0), prof).unwrap();
        let ev = FiberEvaluator::new(h.active_k(), &grid);
        let i = 100;
        let s = ev.sample(&h, i, 1);
        let mean_sq: f64 = s.grad.iter().map(|x| x * x).sum::<f64>() / s.points() as f64;
        let lam = 4.0 * PI * PI;
        let expect = 0.5 * (-2.0f64).exp() * (1.0 + (2.0f64).exp() * lam);
        assert_relative_eq!(mean_sq, expect, max_relative = 1e-8);
    }
}

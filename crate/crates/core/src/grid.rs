//! Uniform radial grid on `[0, R]` with the finite-difference, quadrature and
//! interpolation rules shared by every module.
//!
//! Interior derivatives use the centered 5-point stencils (fourth order). The
//! two nodes nearest each end use 7-point one-sided windows, which keeps the
//! boundary error below the interior one for the second derivative.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest grid accepted by the derivative operators.
pub const MIN_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_max: f64,
    dr: f64,
    n: usize,
}

impl RadialGrid {
    /// Builds the grid `0, dr, 2 dr, ..., R`. `R` must be an integer multiple
    /// of `dr` up to rounding.
    pub fn new(r_max: f64, dr: f64) -> Result<Self> {
        if !(dr.is_finite() && dr > 0.0) {
            return Err(Error::Grid(format!("step must be positive, got {dr}")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::Grid(format!("extent must be positive, got {r_max}")));
        }
        let steps = (r_max / dr).round();
        if ((steps * dr) - r_max).abs() > 1e-9 * r_max.max(1.0) {
            return Err(Error::Grid(format!(
                "extent {r_max} is not a multiple of the step {dr}"
            )));
        }
        let n = steps as usize + 1;
        if n < MIN_NODES {
            return Err(Error::Grid(format!(
                "{n} nodes is too coarse for second derivatives (need {MIN_NODES})"
            )));
        }
        Ok(Self { r_max, dr, n })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.r(i))
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }

    /// Index of the node at radius `r`, if `r` sits on the grid.
    pub fn index_of(&self, r: f64) -> Result<usize> {
        if !(0.0..=self.r_max + 1e-12).contains(&r) {
            return Err(Error::Domain {
                r,
                r_max: self.r_max,
            });
        }
        let i = (r / self.dr).round();
        if (i * self.dr - r).abs() > 1e-9 * self.dr.max(1.0) {
            return Err(Error::Domain {
                r,
                r_max: self.r_max,
            });
        }
        Ok(i as usize)
    }

    /// Indices with `lo <= r <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = ((lo / self.dr - 1e-9).ceil().max(0.0)) as usize;
        let b = (((hi / self.dr) + 1e-9).floor() as usize + 1).min(self.n);
        a.min(b)..b
    }

    pub fn diff(&self) -> DiffOp {
        DiffOp::new(self.n, self.dr)
    }

    /// Composite Simpson weights (3/8 rule on the last three intervals when
    /// the interval count is odd).
    pub fn quadrature_weights(&self) -> Vec<f64> {
        simpson_weights(self.n, self.dr)
    }

    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.n);
        simpson_weights(self.n, self.dr)
            .iter()
            .zip(samples)
            .map(|(w, s)| w * s)
            .sum()
    }

    /// Trapezoidal rule, used where samples arrive from a first-order source.
    pub fn integrate_trapezoid(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.n);
        let inner: f64 = samples[1..self.n - 1].iter().sum();
        self.dr * (inner + 0.5 * (samples[0] + samples[self.n - 1]))
    }

    /// Values at interval midpoints by local cubic interpolation.
    pub fn midpoints(&self, samples: &[f64]) -> Vec<f64> {
        let n = self.n;
        let centered = [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0];
        let left = lagrange_weights(0.5, &[0.0, 1.0, 2.0, 3.0]);
        let right = lagrange_weights(0.5, &[-2.0, -1.0, 0.0, 1.0]);
        (0..n - 1)
            .map(|i| {
                if i == 0 {
                    dot(&left, &samples[0..4])
                } else if i + 2 >= n {
                    dot(&right, &samples[n - 4..n])
                } else {
                    dot(&centered, &samples[i - 1..i + 3])
                }
            })
            .collect()
    }

    /// Least-squares slope of `ln|y|` over the nodes in `range`. Returns
    /// `None` when any sample vanishes.
    pub fn log_slope(&self, y: &[f64], range: std::ops::Range<usize>) -> Option<f64> {
        let pts: Vec<(f64, f64)> = range
            .map(|i| (self.r(i), y[i].abs()))
            .filter(|(_, v)| *v > 0.0)
            .map(|(r, v)| (r, v.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

fn dot(w: &[f64], s: &[f64]) -> f64 {
    w.iter().zip(s).map(|(a, b)| a * b).sum()
}

fn lagrange_weights(x: f64, nodes: &[f64]) -> Vec<f64> {
    fornberg_weights(x, nodes, 0).remove(0)
}

/// Finite-difference weights for derivatives `0..=max_order` at `x0` from
/// arbitrary distinct `nodes` (Fornberg's recursion). Returns
/// `weights[order][node]`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 | 1 => {}
        2 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
        }
        3 => {
            w[0] = h / 3.0;
            w[1] = 4.0 * h / 3.0;
            w[2] = h / 3.0;
        }
        _ => {
            // Simpson needs an even number of intervals; peel a 3/8 panel off
            // the end otherwise.
            let intervals = n - 1;
            let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };
            for i in (0..simpson_end).step_by(2) {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
            }
            if simpson_end != n - 1 {
                let s = simpson_end;
                let k = 3.0 * h / 8.0;
                w[s] += k;
                w[s + 1] += 3.0 * k;
                w[s + 2] += 3.0 * k;
                w[s + 3] += k;
            }
        }
    }
    w
}

/// First and second derivative operators on a grid of `n` nodes.
#[derive(Debug, Clone)]
pub struct DiffOp {
    n: usize,
    center: [[f64; 5]; 2],
    // stencils for the boundary nodes: (window start, weights[order][node])
    edges: Vec<(usize, usize, Vec<Vec<f64>>)>,
    inv_h: [f64; 2],
}

impl DiffOp {
    fn new(n: usize, h: f64) -> Self {
        let offsets: Vec<f64> = (-2..=2).map(f64::from).collect();
        let w = fornberg_weights(0.0, &offsets, 2);
        let mut center = [[0.0; 5]; 2];
        for k in 0..5 {
            center[0][k] = w[1][k];
            center[1][k] = w[2][k];
        }
        let width = n.min(7);
        let mut edges = Vec::new();
        let boundary: Vec<usize> = if n >= 5 {
            vec![0, 1, n - 2, n - 1]
        } else {
            (0..n).collect()
        };
        for i in boundary {
            let start = if i < n / 2 { 0 } else { n - width };
            let nodes: Vec<f64> = (start..start + width).map(|j| j as f64).collect();
            edges.push((i, start, fornberg_weights(i as f64, &nodes, 2)));
        }
        Self {
            n,
            center,
            edges,
            inv_h: [1.0 / h, 1.0 / (h * h)],
        }
    }

    /// Derivative of order 1 or 2 at node `i`.
    pub fn at<T>(&self, values: &[T], i: usize, order: usize) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    {
        debug_assert!(order == 1 || order == 2);
        debug_assert_eq!(values.len(), self.n);
        let scale = self.inv_h[order - 1];
        if i >= 2 && i + 2 < self.n {
            let w = &self.center[order - 1];
            let mut acc = T::default();
            for (k, wk) in w.iter().enumerate() {
                acc = acc + values[i + k - 2] * *wk;
            }
            return acc * scale;
        }
        let (_, start, w) = self
            .edges
            .iter()
            .find(|(node, _, _)| *node == i)
            .expect("boundary stencil");
        let mut acc = T::default();
        for (k, wk) in w[order].iter().enumerate() {
            acc = acc + values[start + k] * *wk;
        }
        acc * scale
    }

    pub fn d1<T>(&self, values: &[T]) -> Vec<T>
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    {
        (0..self.n).map(|i| self.at(values, i, 1)).collect()
    }

    pub fn d2<T>(&self, values: &[T]) -> Vec<T>
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    {
        (0..self.n).map(|i| self.at(values, i, 2)).collect()
    }
}

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

use super::{frame_scale, TrivialEinsteinVariation, COMPONENT_NAMES, H11, H22, H33, NCOMP, WEIGHT_EXPONENT};

/// Symmetric tensor depending on `r` only, with radial derivatives sampled
/// alongside the six components.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTensorField {
    grid: RadialGrid,
    comps: [Vec<f64>; NCOMP],
    d1: [Vec<f64>; NCOMP],
    d2: [Vec<f64>; NCOMP],
}

impl RadialTensorField {
    pub fn new(grid: RadialGrid, comps: [Vec<f64>; NCOMP]) -> Result<Self> {
        for (c, v) in comps.iter().enumerate() {
            if v.len() != grid.len() {
                return Err(Error::Grid(format!(
                    "component {} has {} samples, grid has {}",
                    COMPONENT_NAMES[c],
                    v.len(),
                    grid.len()
                )));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::Data(format!(
                    "component {} is not finite at r = {}",
                    COMPONENT_NAMES[c],
                    grid.r(i)
                )));
            }
        }
        Ok(Self::with_derivatives(grid, comps))
    }

    pub(crate) fn from_parts(grid: RadialGrid, comps: [Vec<f64>; NCOMP]) -> Self {
        Self::with_derivatives(grid, comps)
    }

    fn with_derivatives(grid: RadialGrid, comps: [Vec<f64>; NCOMP]) -> Self {
        let diff = grid.diff();
        let d1 = std::array::from_fn(|c| diff.d1(&comps[c]));
        let d2 = std::array::from_fn(|c| diff.d2(&comps[c]));
        Self {
            grid,
            comps,
            d1,
            d2,
        }
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        let z = || vec![0.0; grid.len()];
        Self {
            grid,
            comps: std::array::from_fn(|_| z()),
            d1: std::array::from_fn(|_| z()),
            d2: std::array::from_fn(|_| z()),
        }
    }

    /// Samples `f(component, r)` on the grid.
    pub fn from_fn(grid: RadialGrid, f: impl Fn(usize, f64) -> f64) -> Self {
        let comps = std::array::from_fn(|c| grid.nodes().map(|r| f(c, r)).collect());
        Self::with_derivatives(grid, comps)
    }

    /// Samples frame components `w_c(r)` and converts them to coordinates.
    pub fn from_frame_fn(grid: RadialGrid, w: impl Fn(usize, f64) -> f64) -> Self {
        Self::from_fn(grid, |c, r| w(c, r) / frame_scale(c, r))
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn d1(&self, c: usize) -> &[f64] {
        &self.d1[c]
    }

    pub fn d2(&self, c: usize) -> &[f64] {
        &self.d2[c]
    }

    pub fn components(&self) -> &[Vec<f64>; NCOMP] {
        &self.comps
    }

    pub fn frame_at(&self, i: usize) -> [f64; NCOMP] {
        let r = self.grid.r(i);
        std::array::from_fn(|c| frame_scale(c, r) * self.comps[c][i])
    }

    /// `∂_r w = s (h' + κ h)`.
    pub fn frame_d1_at(&self, i: usize) -> [f64; NCOMP] {
        let r = self.grid.r(i);
        std::array::from_fn(|c| {
            let k = WEIGHT_EXPONENT[c];
            frame_scale(c, r) * (self.d1[c][i] + k * self.comps[c][i])
        })
    }

    /// `∂²_r w = s (h'' + 2κ h' + κ² h)`.
    pub fn frame_d2_at(&self, i: usize) -> [f64; NCOMP] {
        let r = self.grid.r(i);
        std::array::from_fn(|c| {
            let k = WEIGHT_EXPONENT[c];
            frame_scale(c, r)
                * (self.d2[c][i] + 2.0 * k * self.d1[c][i] + k * k * self.comps[c][i])
        })
    }

    pub fn norm_at(&self, i: usize) -> f64 {
        euclid(&self.frame_at(i))
    }

    pub fn pointwise_norm(&self, r: f64) -> Result<f64> {
        Ok(self.norm_at(self.grid.index_of(r)?))
    }

    pub fn norm_profile(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.norm_at(i)).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len()).map(|i| self.norm_at(i)).fold(0.0, f64::max)
    }

    /// `|h| + |∇h| + …` up to `order` (at most 2) for a radial tensor.
    pub fn c_norm_at(&self, i: usize, order: usize) -> f64 {
        let mut n = self.norm_at(i);
        if order >= 1 {
            n += euclid(&self.frame_d1_at(i));
        }
        if order >= 2 {
            n += euclid(&self.frame_d2_at(i));
        }
        n
    }

    /// Trace with respect to the cusp metric: `h33 + e^{2r}(h11 + h22)`.
    pub fn trace_at(&self, i: usize) -> f64 {
        let r = self.grid.r(i);
        self.comps[H33][i] + (2.0 * r).exp() * (self.comps[H11][i] + self.comps[H22][i])
    }

    pub fn trace(&self, r: f64) -> Result<f64> {
        Ok(self.trace_at(self.grid.index_of(r)?))
    }

    pub fn trace_profile(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.trace_at(i)).collect()
    }

    /// `a·self + b·other`, derivatives combined linearly.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let lin = |x: &[Vec<f64>; NCOMP], y: &[Vec<f64>; NCOMP]| -> [Vec<f64>; NCOMP] {
            std::array::from_fn(|c| x[c].iter().zip(&y[c]).map(|(p, q)| a * p + b * q).collect())
        };
        Self {
            grid: self.grid,
            comps: lin(&self.comps, &other.comps),
            d1: lin(&self.d1, &other.d1),
            d2: lin(&self.d2, &other.d2),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.combine(a, &Self::zeros(self.grid), 0.0)
    }

    pub fn sub_variation(&self, v: &TrivialEinsteinVariation) -> Self {
        self.sub(&v.to_radial(self.grid))
    }

    /// Writes `r, h11, …, h33, |h|, tr h` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["r"];
        header.extend(COMPONENT_NAMES);
        header.extend(["norm", "trace"]);
        w.write_record(&header)?;
        for i in 0..self.grid.len() {
            let mut row = vec![self.grid.r(i)];
            row.extend(self.comps.iter().map(|c| c[i]));
            row.push(self.norm_at(i));
            row.push(self.trace_at(i));
            w.write_record(row.iter().map(|x| format!("{x:e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn euclid(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> RadialGrid {
        RadialGrid::new(20.0, 0.01).unwrap()
    }

    #[test]
    fn norm_examples() {
        let g = grid();
        assert_eq!(RadialTensorField::zeros(g).sup_norm(), 0.0);
        let h = RadialTensorField::from_fn(g, |c, r| if c == H33 { (-r).exp() } else { 0.0 });
        assert_relative_eq!(h.pointwise_norm(1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        let v = TrivialEinsteinVariation::traceless(1.0, 0.0).to_radial(g);
        for i in 0..g.len() {
            assert_relative_eq!(v.norm_at(i), 2f64.sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn trace_examples() {
        let g = grid();
        let metric = RadialTensorField::from_fn(g, |c, r| match c {
            H11 | H22 => (-2.0 * r).exp(),
            H33 => 1.0,
            _ => 0.0,
        });
        for i in (0..g.len()).step_by(97) {
            assert_relative_eq!(metric.trace_at(i), 3.0, epsilon = 1e-12);
        }
        let v = TrivialEinsteinVariation::traceless(0.4, -0.1).to_radial(g);
        assert!(v.trace_profile().iter().all(|t| t.abs() < 1e-15));
    }

    #[test]
    fn c2_norm_of_exponential_h33() {
        let g = grid();
        let h = RadialTensorField::from_fn(g, |c, r| if c == H33 { (-r).exp() } else { 0.0 });
        for i in [0, 100, 1000, 2000] {
            let expect = 3.0 * (-g.r(i)).exp();
            assert_relative_eq!(h.c_norm_at(i, 2), expect, max_relative = 1e-9);
        }
    }

    #[test]
    fn rejects_wrong_length() {
        let g = RadialGrid::new(1.0, 0.1).unwrap();
        let comps = std::array::from_fn(|_| vec![0.0; 5]);
        assert!(matches!(RadialTensorField::new(g, comps), Err(Error::Grid(_))));
    }
}

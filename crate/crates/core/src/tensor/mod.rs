//! Symmetric 2-tensors on the cusp in coordinates `(x¹, x², r)`.
//!
//! Components are stored in the order `h11, h12, h22, h13, h23, h33`. The
//! orthonormal frame of the cusp metric turns them into the frame vector
//! `w = (e^{2r}h11, √2 e^{2r}h12, e^{2r}h22, √2 e^r h13, √2 e^r h23, h33)`
//! whose Euclidean length is the pointwise norm.

mod averaging;
mod fiber;
mod field;
mod radial;

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

pub use averaging::{average, check_averaging_properties, AveragingReport};
pub use fiber::{FiberEvaluator, FiberSample, FiberStats};
pub use field::TensorField;
pub use radial::RadialTensorField;

pub const NCOMP: usize = 6;
pub const H11: usize = 0;
pub const H12: usize = 1;
pub const H22: usize = 2;
pub const H13: usize = 3;
pub const H23: usize = 4;
pub const H33: usize = 5;

pub const COMPONENT_NAMES: [&str; NCOMP] = ["h11", "h12", "h22", "h13", "h23", "h33"];

/// Exponent `κ` with frame component `w_c = m_c e^{κ_c r} h_c`.
pub const WEIGHT_EXPONENT: [f64; NCOMP] = [2.0, 2.0, 2.0, 1.0, 1.0, 0.0];

/// Off-diagonal entries appear twice in the sum over ordered index pairs.
pub const MULTIPLICITY: [f64; NCOMP] = [1.0, SQRT_2, 1.0, SQRT_2, SQRT_2, 1.0];

/// Factor turning component `c` into its frame component at radius `r`.
pub fn frame_scale(c: usize, r: f64) -> f64 {
    MULTIPLICITY[c] * (WEIGHT_EXPONENT[c] * r).exp()
}

/// `e^{-2r} v_ij dx^i dx^j` with a constant traceless `v`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrivialEinsteinVariation {
    pub v11: f64,
    pub v12: f64,
    pub v22: f64,
}

impl TrivialEinsteinVariation {
    /// Rejects any matrix whose trace is not exactly zero.
    pub fn new(v11: f64, v12: f64, v22: f64) -> Result<Self> {
        if !(v11.is_finite() && v12.is_finite() && v22.is_finite()) {
            return Err(Error::Data("non-finite variation entry".into()));
        }
        if v11 + v22 != 0.0 {
            return Err(Error::Parameter(format!(
                "trivial Einstein variation must be traceless, got trace {}",
                v11 + v22
            )));
        }
        Ok(Self { v11, v12, v22 })
    }

    pub fn traceless(v11: f64, v12: f64) -> Self {
        Self {
            v11,
            v12,
            v22: -v11,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// The constant pointwise norm `√(v11² + 2 v12² + v22²)`.
    pub fn norm(&self) -> f64 {
        (self.v11 * self.v11 + 2.0 * self.v12 * self.v12 + self.v22 * self.v22).sqrt()
    }

    pub fn frame(&self) -> [f64; NCOMP] {
        [self.v11, SQRT_2 * self.v12, self.v22, 0.0, 0.0, 0.0]
    }

    pub fn component(&self, c: usize, r: f64) -> f64 {
        let e = (-2.0 * r).exp();
        match c {
            H11 => self.v11 * e,
            H12 => self.v12 * e,
            H22 => self.v22 * e,
            _ => 0.0,
        }
    }

    pub fn to_radial(&self, grid: RadialGrid) -> RadialTensorField {
        RadialTensorField::from_fn(grid, |c, r| self.component(c, r))
    }

    /// Norm of the difference, itself constant in `r`.
    pub fn distance(&self, other: &Self) -> f64 {
        Self {
            v11: self.v11 - other.v11,
            v12: self.v12 - other.v12,
            v22: self.v22 - other.v22,
        }
        .norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            v11: s * self.v11,
            v12: s * self.v12,
            v22: s * self.v22,
        }
    }
}

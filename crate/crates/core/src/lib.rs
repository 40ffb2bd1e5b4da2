//! Numerical laboratory for the linearized Einstein operator on hyperbolic
//! rank-2 cusps `T² × [0, R]` with metric `e^{-2r} g_flat + dr²`.
//!
//! The crate is organized around the objects the estimates act on:
//!
//! * [`geometry`]: flat tori, cusp metrics, level tori, synthetic perturbations.
//! * [`tensor`]: radial and Fourier-expanded symmetric 2-tensors, pointwise
//!   norms, the fiber averaging operator.
//! * [`operator`]: the cusp operator as an ODE system, its modewise extension,
//!   the perturbed operator and the inverse solve.
//! * [`ode`]: constant-coefficient second-order ODEs and the growth-rate
//!   decompositions with certified envelopes.
//! * [`norms`]: weighted integral norms, the weighted sup norm, Poincaré checks.
//! * [`bootstrap`]: compatibility checks, the weight iteration, extraction of
//!   the trivial Einstein variation and the final growth certificates.
//! * [`harness`]: JSON-configured experiments, reports and sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod norms;
pub mod ode;
pub mod operator;
pub mod sampling;
pub mod tensor;

pub use error::{Error, Result};
pub use geometry::{CuspMetric, FlatTorusMetric, PerturbationEnvelope};
pub use grid::RadialGrid;
pub use tensor::{RadialTensorField, TensorField, TrivialEinsteinVariation};

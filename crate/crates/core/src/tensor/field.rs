use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FlatTorusMetric;
use crate::grid::RadialGrid;

use super::fiber::{FiberEvaluator, FiberSample, FiberStats};
use super::{frame_scale, RadialTensorField, TrivialEinsteinVariation, NCOMP};

pub type Mode = (i32, i32);
pub type ModeProfiles = [Vec<Complex64>; NCOMP];

/// Tensor on `T² × [0, R]` as a truncated Fourier series per component,
/// `h_c(x, r) = Σ_k ĥ_{c,k}(r) e^{2πi k·x}` with `|k₁|, |k₂| ≤ K`.
///
/// Only modes that were inserted are stored; absent modes are zero. The
/// reality constraint `ĥ_{-k} = conj(ĥ_k)` is maintained by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    flat: FlatTorusMetric,
    grid: RadialGrid,
    k_max: i32,
    modes: BTreeMap<Mode, ModeProfiles>,
}

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    gram: [[f64; 2]; 2],
    r_max: f64,
    dr: f64,
    nodes: usize,
    k_max: i32,
    modes: Vec<Mode>,
    layout: String,
}

impl TensorField {
    pub fn zeros(flat: FlatTorusMetric, grid: RadialGrid, k_max: i32) -> Result<Self> {
        if k_max < 0 {
            return Err(Error::Parameter(format!("negative Fourier truncation {k_max}")));
        }
        Ok(Self {
            flat,
            grid,
            k_max,
            modes: BTreeMap::new(),
        })
    }

    pub fn from_radial(h: &RadialTensorField, flat: FlatTorusMetric, k_max: i32) -> Result<Self> {
        let mut f = Self::zeros(flat, *h.grid(), k_max)?;
        let profiles = std::array::from_fn(|c| {
            h.component(c).iter().map(|&x| Complex64::new(x, 0.0)).collect()
        });
        f.modes.insert((0, 0), profiles);
        Ok(f)
    }

    pub fn flat(&self) -> &FlatTorusMetric {
        &self.flat
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    /// Sets mode `k` and its conjugate partner `-k`.
    pub fn insert_mode(&mut self, k: Mode, profiles: ModeProfiles) -> Result<()> {
        if k.0.abs() > self.k_max || k.1.abs() > self.k_max {
            return Err(Error::Parameter(format!(
                "mode {k:?} exceeds truncation {}",
                self.k_max
            )));
        }
        for p in &profiles {
            if p.len() != self.grid.len() {
                return Err(Error::Grid(format!(
                    "mode profile has {} samples, grid has {}",
                    p.len(),
                    self.grid.len()
                )));
            }
            if p.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Data(format!("mode {k:?} has non-finite samples")));
            }
        }
        if k == (0, 0) {
            if profiles.iter().flatten().any(|z| z.im != 0.0) {
                return Err(Error::Data("zero mode must be real".into()));
            }
        } else {
            let conj = std::array::from_fn(|c| profiles[c].iter().map(|z| z.conj()).collect());
            self.modes.insert((-k.0, -k.1), conj);
        }
        self.modes.insert(k, profiles);
        Ok(())
    }

    pub fn mode(&self, k: Mode) -> Option<&ModeProfiles> {
        self.modes.get(&k)
    }

    pub fn modes(&self) -> impl Iterator<Item = (&Mode, &ModeProfiles)> {
        self.modes.iter()
    }

    /// Largest `|k|∞` among stored modes.
    pub fn active_k(&self) -> i32 {
        self.modes
            .keys()
            .map(|k| k.0.abs().max(k.1.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Largest violation of `ĥ_{-k} = conj(ĥ_k)`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (k, p) in &self.modes {
            let partner = self.modes.get(&(-k.0, -k.1));
            for c in 0..NCOMP {
                for (i, z) in p[c].iter().enumerate() {
                    let w = partner.map_or(Complex64::new(0.0, 0.0), |q| q[c][i]);
                    worst = worst.max((w - z.conj()).norm());
                }
            }
        }
        worst
    }

    /// The `k = 0` slice as a radial tensor.
    pub fn radial_slice(&self) -> RadialTensorField {
        match self.modes.get(&(0, 0)) {
            Some(p) => RadialTensorField::from_parts(
                self.grid,
                std::array::from_fn(|c| p[c].iter().map(|z| z.re).collect()),
            ),
            None => RadialTensorField::zeros(self.grid),
        }
    }

    /// `h − ĥ`: every mode except `k = 0`.
    pub fn oscillating_part(&self) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .filter(|(k, _)| **k != (0, 0))
                .map(|(k, p)| (*k, p.clone()))
                .collect(),
            ..self.clone_empty()
        }
    }

    /// Applies `f(k, profiles)` to every stored mode. The map must commute
    /// with conjugation for the result to stay real.
    pub fn map_modes(&self, f: impl Fn(Mode, &ModeProfiles) -> ModeProfiles + Sync) -> Self {
        let modes = self
            .modes
            .par_iter()
            .map(|(k, p)| (*k, f(*k, p)))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        Self {
            modes,
            ..self.clone_empty()
        }
    }

    fn clone_empty(&self) -> Self {
        Self {
            flat: self.flat,
            grid: self.grid,
            k_max: self.k_max,
            modes: BTreeMap::new(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let mut out = self.clone_empty();
        out.k_max = self.k_max.max(other.k_max);
        let keys: std::collections::BTreeSet<Mode> =
            self.modes.keys().chain(other.modes.keys()).copied().collect();
        let n = self.grid.len();
        for k in keys {
            let p = self.modes.get(&k);
            let q = other.modes.get(&k);
            let prof = std::array::from_fn(|c| {
                (0..n)
                    .map(|i| {
                        let x = p.map_or(Complex64::new(0.0, 0.0), |p| p[c][i]);
                        let y = q.map_or(Complex64::new(0.0, 0.0), |q| q[c][i]);
                        x * a + y * b
                    })
                    .collect()
            });
            out.modes.insert(k, prof);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_modes(|_, p| std::array::from_fn(|c| p[c].iter().map(|z| z * a).collect()))
    }

    pub fn sub_radial(&self, h: &RadialTensorField) -> Self {
        let other = Self::from_radial(h, self.flat, self.k_max).expect("non-negative truncation");
        self.sub(&other)
    }

    pub fn sub_variation(&self, v: &TrivialEinsteinVariation) -> Self {
        self.sub_radial(&v.to_radial(self.grid))
    }

    /// Frame coefficients `ŵ_k = s ĥ_k` of mode `k` at node `i`.
    pub fn frame_coeffs(&self, k: Mode, i: usize) -> [Complex64; NCOMP] {
        let r = self.grid.r(i);
        match self.modes.get(&k) {
            Some(p) => std::array::from_fn(|c| p[c][i] * frame_scale(c, r)),
            None => [Complex64::new(0.0, 0.0); NCOMP],
        }
    }

    /// Parseval split of the fiber mean of `|h|²` at node `i`:
    /// `(‖ŵ_0‖², Σ_{k≠0} ‖ŵ_k‖²)`.
    pub fn mode_energy(&self, i: usize) -> (f64, f64) {
        let mut zero = 0.0;
        let mut rest = 0.0;
        for k in self.modes.keys() {
            let e: f64 = self.frame_coeffs(*k, i).iter().map(|z| z.norm_sqr()).sum();
            if *k == (0, 0) {
                zero += e;
            } else {
                rest += e;
            }
        }
        (zero, rest)
    }

    pub fn evaluator(&self) -> FiberEvaluator {
        FiberEvaluator::new(self.active_k(), &self.grid)
    }

    /// Fiber samples of the pointwise norms at node `i` up to `order`.
    pub fn fiber_sample(&self, ev: &FiberEvaluator, i: usize, order: usize) -> FiberSample {
        ev.sample(self, i, order)
    }

    /// Per-node fiber statistics of `|h|_{C^k}` for `k ≤ order`.
    pub fn fiber_stats(&self, order: usize) -> Vec<FiberStats> {
        let ev = self.evaluator();
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| ev.sample(self, i, order).stats())
            .collect()
    }

    /// Writes a JSON header line followed by little-endian `(re, im)` pairs
    /// in `(component, mode, node)` order.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let header = BinaryHeader {
            gram: self.flat.gram(),
            r_max: self.grid.r_max(),
            dr: self.grid.dr(),
            nodes: self.grid.len(),
            k_max: self.k_max,
            modes: self.modes.keys().copied().collect(),
            layout: "component,mode,node;f64le re,im".into(),
        };
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for c in 0..NCOMP {
            for p in self.modes.values() {
                for z in &p[c] {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: BinaryHeader = serde_json::from_str(&line)?;
        let flat = FlatTorusMetric::new(header.gram)?;
        let grid = RadialGrid::new(header.r_max, header.dr)?;
        if grid.len() != header.nodes {
            return Err(Error::Data("node count disagrees with grid".into()));
        }
        let mut data: Vec<ModeProfiles> = header
            .modes
            .iter()
            .map(|_| std::array::from_fn(|_| Vec::with_capacity(grid.len())))
            .collect();
        let mut buf = [0u8; 16];
        for c in 0..NCOMP {
            for p in data.iter_mut() {
                for _ in 0..grid.len() {
                    r.read_exact(&mut buf)?;
                    let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
                    p[c].push(Complex64::new(re, im));
                }
            }
        }
        let mut out = Self::zeros(flat, grid, header.k_max)?;
        out.modes = header.modes.into_iter().zip(data).collect();
        Ok(out)
    }
}

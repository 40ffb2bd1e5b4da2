use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapParams;
use crate::error::{Error, Result};
use crate::geometry::{CuspMetric, FlatTorusMetric};
use crate::grid::RadialGrid;
use crate::sampling::PlantSpec;
use crate::tensor::TrivialEinsteinVariation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Compat,
    #[default]
    Bootstrap,
    OdeLemma,
    PoincareSweep,
    NormsSweep,
    Sweep,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Compat => "compat",
            Self::Bootstrap => "bootstrap",
            Self::OdeLemma => "ode-lemma",
            Self::PoincareSweep => "poincare-sweep",
            Self::NormsSweep => "norms-sweep",
            Self::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub gram: [[f64; 2]; 2],
    pub r_max: f64,
    pub dr: f64,
    pub k_max: i32,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            gram: [[1.0, 0.0], [0.0, 1.0]],
            r_max: 20.0,
            dr: 0.01,
            k_max: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub lambda: f64,
    pub eta: f64,
    pub epsilon0: f64,
    pub margin: f64,
    pub step_factor: f64,
    pub growth_threshold: f64,
    pub constant_ceiling: f64,
    pub flatness: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let p = BootstrapParams::default();
        Self {
            lambda: p.lambda,
            eta: p.eta,
            epsilon0: p.epsilon0,
            margin: p.margin,
            step_factor: p.step_factor,
            growth_threshold: p.growth_threshold,
            constant_ceiling: p.constant_ceiling,
            flatness: p.flatness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedConfig {
    pub v11: f64,
    pub v12: f64,
    pub radial_amplitude: f64,
    pub fiber_amplitude: f64,
    pub fiber_rate: f64,
    pub fiber_modes: i32,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        let s = PlantSpec::default();
        Self {
            v11: s.v.v11,
            v12: s.v.v12,
            radial_amplitude: s.radial_amplitude,
            fiber_amplitude: s.fiber_amplitude,
            fiber_rate: s.fiber_rate,
            fiber_modes: s.fiber_modes,
        }
    }
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Eta,
    Lambda,
    Epsilon0,
    #[serde(alias = "R")]
    RMax,
    Dr,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Eta => "eta",
            Self::Lambda => "lambda",
            Self::Epsilon0 => "epsilon0",
            Self::RMax => "r_max",
            Self::Dr => "dr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    #[serde(default)]
    pub values: Vec<f64>,
    /// Experiment run for every value.
    #[serde(default)]
    pub experiment: ExperimentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub geometry: GeometryConfig,
    pub params: ParamsConfig,
    pub planted: PlantedConfig,
    pub samples: usize,
    pub seed: u64,
    pub sweep: Option<SweepConfig>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::default(),
            geometry: GeometryConfig::default(),
            params: ParamsConfig::default(),
            planted: PlantedConfig::default(),
            samples: 8,
            seed: 0,
            sweep: None,
            output: None,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Range checks; every failure is a config error.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        let p = &self.params;
        if !(p.lambda > 0.0 && p.lambda < 1.0) {
            return Err(config_err(format!("lambda must lie in (0, 1), got {}", p.lambda)));
        }
        if !(p.eta > 1.0 && p.eta.is_finite()) {
            return Err(config_err(format!("eta must exceed 1, got {}", p.eta)));
        }
        if !(g.dr > 0.0 && g.dr.is_finite()) {
            return Err(config_err(format!("dr must be positive, got {}", g.dr)));
        }
        if !(g.r_max >= 5.0 * g.dr && g.r_max.is_finite()) {
            return Err(config_err(format!(
                "r_max = {} must be at least 5 dr = {}",
                g.r_max,
                5.0 * g.dr
            )));
        }
        if g.k_max < 2 {
            return Err(config_err(format!("k_max must be at least 2, got {}", g.k_max)));
        }
        if self.samples == 0 {
            return Err(config_err("samples must be positive"));
        }
        if self.planted.fiber_modes > g.k_max {
            return Err(config_err(format!(
                "planted fiber modes {} exceed k_max {}",
                self.planted.fiber_modes, g.k_max
            )));
        }
        self.bootstrap_params().validate().map_err(config_err)?;
        self.cusp().map_err(config_err)?;
        self.plant_spec().map_err(config_err)?;
        if self.kind == ExperimentKind::Sweep {
            match &self.sweep {
                None => return Err(config_err("kind sweep needs a sweep section")),
                Some(s) if s.experiment == ExperimentKind::Sweep => {
                    return Err(config_err("a sweep cannot run sweeps"))
                }
                Some(s) => {
                    for &v in &s.values {
                        self.with_axis(s.axis, v)?.validate()?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn cusp(&self) -> Result<CuspMetric> {
        let flat = FlatTorusMetric::new(self.geometry.gram)?;
        let grid = RadialGrid::new(self.geometry.r_max, self.geometry.dr)?;
        Ok(CuspMetric::new(flat, grid))
    }

    pub fn bootstrap_params(&self) -> BootstrapParams {
        let p = &self.params;
        BootstrapParams {
            lambda: p.lambda,
            eta: p.eta,
            epsilon0: p.epsilon0,
            seed: self.seed,
            margin: p.margin,
            step_factor: p.step_factor,
            growth_threshold: p.growth_threshold,
            constant_ceiling: p.constant_ceiling,
            flatness: p.flatness,
        }
    }

    pub fn plant_spec(&self) -> Result<PlantSpec> {
        let p = &self.planted;
        Ok(PlantSpec {
            v: TrivialEinsteinVariation::traceless(p.v11, p.v12),
            radial_amplitude: p.radial_amplitude,
            fiber_amplitude: p.fiber_amplitude,
            fiber_rate: p.fiber_rate,
            fiber_modes: p.fiber_modes,
            seed: self.seed.wrapping_add(1),
            ..PlantSpec::default()
        })
    }

    /// A copy with one parameter replaced.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match axis {
            SweepAxis::Eta => c.params.eta = value,
            SweepAxis::Lambda => c.params.lambda = value,
            SweepAxis::Epsilon0 => c.params.epsilon0 = value,
            SweepAxis::RMax => c.geometry.r_max = value,
            SweepAxis::Dr => c.geometry.dr = value,
        }
        if let Some(s) = &self.sweep {
            c.kind = s.experiment;
        }
        c.sweep = None;
        Ok(c)
    }
}

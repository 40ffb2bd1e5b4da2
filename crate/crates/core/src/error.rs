use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("radius {r} outside [0, {r_max}]")]
    Domain { r: f64, r_max: f64 },

    #[error("invalid flat metric: {0}")]
    InvalidMetric(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("inconsistent boundary data: {0}")]
    Boundary(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("resonant rate {rate} lies within {band:e} of characteristic root {root}")]
    Resonance { rate: f64, root: f64, band: f64 },

    #[error(
        "decomposition not certified: worst node {node} (r = {r}), residual {residual:e}, envelope {envelope:e}"
    )]
    Decomposition {
        node: usize,
        r: f64,
        residual: f64,
        envelope: f64,
    },

    #[error("growing coefficient {coefficient:e} of rate {rate} exceeds the L2 threshold {threshold:e}")]
    L2Violation {
        rate: f64,
        coefficient: f64,
        threshold: f64,
    },

    #[error("extraction failed: {0}")]
    Extraction(String),

    #[error("certificate [{tag}] failed: {detail}")]
    Certification { tag: String, detail: String },

    #[error("non-finite data: {0}")]
    Data(String),

    #[error("overflow while integrating at r = {r}")]
    Overflow { r: f64 },

    #[error("internal consistency violated: {0}")]
    Internal(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Scalar ODEs `y'' + p y' + q y = u` with distinct real characteristic
//! roots, integrated in the factored form `(D − λ₁)(D − λ₂) y = u`:
//!
//! ```text
//! z = y' − λ₁ y,   z' = λ₂ z + u,   y' = λ₁ y + z.
//! ```
//!
//! The split keeps a pure `e^{λ₁ r}` solution free of growing round-off
//! (its `z` stays identically zero) and lets the bounded solve integrate
//! the growing factor backward, where it is stable.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Rates closer than this to a characteristic root count as resonant.
pub const RESONANCE_BAND: f64 = 1e-6;

/// Magnitude at which forward integration gives up.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// Residuals below this fraction of the local solution size count as zero.
pub const RESIDUAL_FLOOR: f64 = 1e-10;
/// Residuals below this fraction of `max |y|` are roundoff of the fit.
pub const ROUNDOFF: f64 = 64.0 * f64::EPSILON;
/// Rows are weighted by the inverse of `envelope + RELATIVE_WEIGHT·|y|`
/// (of `|y|` without an envelope), floored at `SCALE_FLOOR·max |y|`.
const RELATIVE_WEIGHT: f64 = 1e-8;
const SCALE_FLOOR: f64 = 1e-12;

/// `Q(X) = X² + pX + q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticODE {
    pub p: f64,
    pub q: f64,
}

impl QuadraticODE {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let disc = p * p - 4.0 * q;
        if !(disc > 0.0) {
            return Err(Error::Hypothesis(format!(
                "X² + {p}X + {q} has no two distinct real roots (discriminant {disc})"
            )));
        }
        Ok(Self { p, q })
    }

    /// `X² − 2X − 4`, roots `1 ± √5`.
    pub fn q1() -> Self {
        Self { p: -2.0, q: -4.0 }
    }

    /// `X² − 2X − 3`, roots `−1, 3`.
    pub fn q2() -> Self {
        Self { p: -2.0, q: -3.0 }
    }

    /// `X² − 2X`, roots `0, 2`.
    pub fn q3() -> Self {
        Self { p: -2.0, q: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        x * x + self.p * x + self.q
    }

    /// Ordered roots `λ₁ < λ₂`, computed without cancellation.
    pub fn roots(&self) -> (f64, f64) {
        let disc = (self.p * self.p - 4.0 * self.q).sqrt();
        let t = -0.5 * (self.p + self.p.signum() * disc);
        let (a, b) = if t == 0.0 {
            (0.0, -self.p)
        } else if self.q == 0.0 {
            (0.0, t)
        } else {
            (t, self.q / t)
        };
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Errors if `rate` sits inside the resonance band of either root.
    pub fn check_rate(&self, rate: f64) -> Result<()> {
        let (l1, l2) = self.roots();
        for root in [l1, l2] {
            if (rate - root).abs() < RESONANCE_BAND {
                return Err(Error::Resonance {
                    rate,
                    root,
                    band: RESONANCE_BAND,
                });
            }
        }
        Ok(())
    }
}

/// Ordered characteristic roots; errors unless they are real and distinct.
pub fn roots(ode: &QuadraticODE) -> Result<(f64, f64)> {
    QuadraticODE::new(ode.p, ode.q)?;
    Ok(ode.roots())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTerm {
    pub beta: f64,
    pub mu: f64,
}

/// `‖ψ‖_{L¹} e^{ar}` contribution, `ψ` sampled on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Term {
    pub a: f64,
    pub psi: Vec<f64>,
}

/// Forcing bound `Σ β_k e^{μ_k r}` plus an optional `L¹` term.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub terms: Vec<EnvelopeTerm>,
    pub l1: Option<L1Term>,
}

impl GrowthEnvelope {
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        let env = Self {
            terms: terms
                .into_iter()
                .map(|(beta, mu)| EnvelopeTerm { beta, mu })
                .collect(),
            l1: None,
        };
        env.validate()?;
        Ok(env)
    }

    /// `Σ β_k e^{μ_k r} + ‖ψ‖_{L¹} e^{ar}` given the norm of `ψ`.
    pub fn value(&self, r: f64, psi_l1: Option<f64>) -> f64 {
        let mut e: f64 = self.terms.iter().map(|t| t.beta * (t.mu * r).exp()).sum();
        if let (Some(l), Some(norm)) = (&self.l1, psi_l1) {
            e += norm * (l.a * r).exp();
        }
        e
    }

    pub fn with_l1(mut self, a: f64, psi: Vec<f64>) -> Result<Self> {
        self.l1 = Some(L1Term { a, psi });
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if !(t.beta.is_finite() && t.beta >= 0.0 && t.mu.is_finite()) {
                return Err(Error::Parameter(format!(
                    "envelope term (β = {}, μ = {}) must have finite β ≥ 0",
                    t.beta, t.mu
                )));
            }
        }
        if let Some(l1) = &self.l1 {
            if !l1.a.is_finite() || l1.psi.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Parameter("ψ must be finite and non-negative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDecomposition {
    pub lambda1: f64,
    pub lambda2: f64,
    pub a1: f64,
    pub a2: f64,
    /// Certified constant per envelope term (equal split).
    pub envelope_constants: Vec<f64>,
    pub l1_constant: Option<f64>,
    pub psi_l1: Option<f64>,
    /// The common value of all constants.
    pub constant: f64,
    pub max_residual: f64,
    pub worst_node: usize,
}

impl RateDecomposition {
    pub fn homogeneous(&self, r: f64) -> f64 {
        self.a1 * (self.lambda1 * r).exp() + self.a2 * (self.lambda2 * r).exp()
    }
}

/// Fits `y ≈ A₁ e^{λ₁r} + A₂ e^{λ₂r}` and certifies
/// `|y − A₁e^{λ₁r} − A₂e^{λ₂r}| ≤ Σ c β_k e^{μ_k r} + c ‖ψ‖_{L¹} e^{ar}`
/// at every node with the smallest common constant `c`.
///
/// The least-squares fit weights rows by the inverse envelope, so the
/// far rows where contamination is smallest dominate; a small multiple of
/// `|y|` in the weight keeps a large growing mode from swamping the
/// decaying one. The fit also carries the envelope exponentials as extra columns so
/// exponential particular solutions do not bias `A₁, A₂`.
pub fn decompose_growth(
    grid: &RadialGrid,
    y: &[f64],
    ode: &QuadraticODE,
    env: &GrowthEnvelope,
) -> Result<RateDecomposition> {
    let (l1, l2) = roots(ode)?;
    env.validate()?;
    if y.len() != grid.len() {
        return Err(Error::Grid(format!(
            "{} samples on a grid of {} nodes",
            y.len(),
            grid.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("solution samples are not finite".into()));
    }
    for t in &env.terms {
        ode.check_rate(t.mu)?;
    }
    let psi_l1 = match &env.l1 {
        Some(l) => {
            ode.check_rate(l.a)?;
            if l.psi.len() != grid.len() {
                return Err(Error::Grid("ψ is not sampled on the grid".into()));
            }
            Some(grid.integrate_trapezoid(&l.psi))
        }
        None => None,
    };

    let n = grid.len();
    let envelope: Vec<f64> = grid.nodes().map(|r| env.value(r, psi_l1)).collect();
    let weighted = envelope.iter().all(|e| *e > 0.0);

    let mut rates = vec![l1, l2];
    let mut push_rate = |rate: f64| {
        if rates.iter().all(|x| (x - rate).abs() > 1e-9) {
            rates.push(rate);
        }
    };
    for t in &env.terms {
        if t.beta > 0.0 {
            push_rate(t.mu);
        }
    }
    if let (Some(l), Some(norm)) = (&env.l1, psi_l1) {
        if norm > 0.0 {
            push_rate(l.a);
        }
    }

    let m = rates.len();
    let y_max = y.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let s = if weighted {
                envelope[i] + RELATIVE_WEIGHT * y[i].abs()
            } else {
                y[i].abs()
            };
            s.max(SCALE_FLOOR * y_max).max(f64::MIN_POSITIVE)
        })
        .collect();
    let weight = |i: usize| 1.0 / scale[i];
    let mut a = DMatrix::<f64>::from_fn(n, m, |i, j| weight(i) * (rates[j] * grid.r(i)).exp());
    let b = DVector::<f64>::from_fn(n, |i, _| weight(i) * y[i]);
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Overflow { r: grid.r_max() });
    }
    let norms: Vec<f64> = (0..m).map(|j| a.column(j).norm()).collect();
    for (j, s) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Internal(format!("least squares failed: {e}")))?;
    let a1 = sol[0] / norms[0];
    let a2 = sol[1] / norms[1];

    let mut constant = 0.0_f64;
    let mut max_residual = 0.0_f64;
    let mut worst_node = 0;
    for i in 0..n {
        let r = grid.r(i);
        let h1 = a1 * (l1 * r).exp();
        let h2 = a2 * (l2 * r).exp();
        let res = (y[i] - h1 - h2).abs();
        max_residual = max_residual.max(res);
        let floor = RESIDUAL_FLOOR * (y[i].abs() + h1.abs() + h2.abs()) + ROUNDOFF * y_max;
        if res <= floor {
            continue;
        }
        let ratio = if envelope[i] > 0.0 {
            res / envelope[i]
        } else {
            f64::INFINITY
        };
        if ratio > constant {
            constant = ratio;
            worst_node = i;
        }
    }
    if !constant.is_finite() {
        return Err(Error::Decomposition {
            node: worst_node,
            r: grid.r(worst_node),
            residual: (y[worst_node]
                - a1 * (l1 * grid.r(worst_node)).exp()
                - a2 * (l2 * grid.r(worst_node)).exp())
            .abs(),
            envelope: envelope[worst_node],
        });
    }
    Ok(RateDecomposition {
        lambda1: l1,
        lambda2: l2,
        a1,
        a2,
        envelope_constants: vec![constant; env.terms.len()],
        l1_constant: env.l1.as_ref().map(|_| constant),
        psi_l1,
        constant,
        max_residual,
        worst_node,
    })
}

/// Decomposition under `|u|(r) ≤ e^{ar} ψ(r)`: the certified envelope is
/// `c ‖ψ‖_{L¹} e^{ar}`.
pub fn decompose_growth_l1(
    grid: &RadialGrid,
    y: &[f64],
    ode: &QuadraticODE,
    a: f64,
    psi: &[f64],
) -> Result<RateDecomposition> {
    let env = GrowthEnvelope::default().with_l1(a, psi.to_vec())?;
    decompose_growth(grid, y, ode, &env)
}

/// Fourth-order Runge-Kutta solution of the initial value problem.
pub fn solve_ivp(
    grid: &RadialGrid,
    ode: &QuadraticODE,
    u: &[f64],
    y0: f64,
    y0p: f64,
) -> Result<Vec<f64>> {
    let (l1, l2) = roots(ode)?;
    check_forcing(grid, u)?;
    let h = grid.dr();
    let um = grid.midpoints(u);
    let f = |y: f64, z: f64, s: f64| (l1 * y + z, l2 * z + s);
    let mut y = y0;
    let mut z = y0p - l1 * y0;
    let mut out = Vec::with_capacity(grid.len());
    out.push(y);
    for i in 0..grid.len() - 1 {
        let k1 = f(y, z, u[i]);
        let k2 = f(y + 0.5 * h * k1.0, z + 0.5 * h * k1.1, um[i]);
        let k3 = f(y + 0.5 * h * k2.0, z + 0.5 * h * k2.1, um[i]);
        let k4 = f(y + h * k3.0, z + h * k3.1, u[i + 1]);
        y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        z += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(y.abs() <= OVERFLOW_LIMIT) || !z.is_finite() {
            return Err(Error::Overflow { r: grid.r(i + 1) });
        }
        out.push(y);
    }
    Ok(out)
}

/// Solution with `y(0) = y0` that carries no `e^{λ₂r}` component, obtained
/// by integrating `z` backward from `z(R) = 0`. Returns the samples and the
/// implied `y'(0)`. Requires `λ₂ > 0`.
pub fn solve_bounded(
    grid: &RadialGrid,
    ode: &QuadraticODE,
    u: &[f64],
    y0: f64,
) -> Result<(Vec<f64>, f64)> {
    let (l1, l2) = roots(ode)?;
    if l2 <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "backward integration needs a growing root, got λ₂ = {l2}"
        )));
    }
    check_forcing(grid, u)?;
    let n = grid.len();
    let h = grid.dr();
    let um = grid.midpoints(u);
    let mut z = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let g = |zz: f64, s: f64| l2 * zz + s;
        let z1 = z[i + 1];
        let k1 = g(z1, u[i + 1]);
        let k2 = g(z1 - 0.5 * h * k1, um[i]);
        let k3 = g(z1 - 0.5 * h * k2, um[i]);
        let k4 = g(z1 - h * k3, u[i]);
        z[i] = z1 - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let zm = grid.midpoints(&z);
    let mut y = vec![0.0; n];
    y[0] = y0;
    for i in 0..n - 1 {
        let yi = y[i];
        let k1 = l1 * yi + z[i];
        let k2 = l1 * (yi + 0.5 * h * k1) + zm[i];
        let k3 = l1 * (yi + 0.5 * h * k2) + zm[i];
        let k4 = l1 * (yi + h * k3) + z[i + 1];
        y[i + 1] = yi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(y[i + 1].abs() <= OVERFLOW_LIMIT) {
            return Err(Error::Overflow { r: grid.r(i + 1) });
        }
    }
    Ok((y, l1 * y0 + z[0]))
}

fn check_forcing(grid: &RadialGrid, u: &[f64]) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::Grid(format!(
            "forcing has {} samples, grid has {}",
            u.len(),
            grid.len()
        )));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("forcing is not finite".into()));
    }
    Ok(())
}

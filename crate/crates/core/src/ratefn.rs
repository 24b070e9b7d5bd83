//! Control rate functions for piecewise-linear controls, the composite rate
//! with the skeleton constraint, and endpoint-event minimization over a grid
//! of piecewise-linear controls.
//!
//! Controls start at zero. The control `u` of the driven equation is taken
//! as deterministic, so the rate depends on the noise control `x` only.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, invalid, LdpError, Result};
use crate::ext::ExtReal;
use crate::levy::LevyTriplet;
use crate::linalg::PsdMatrix;
use crate::optim::{bfgs, nelder_mead, InnerOptions};
use crate::paths::{CadlagPath, PathBuilder};
use crate::sde::{residual, solve_skeleton, VectorField};

#[derive(Debug, Clone)]
enum RateKind {
    Brownian { cov: PsdMatrix, scale: f64 },
    Levy(LevyTriplet),
    Product(Vec<RateModel>),
}

/// Rate function `I'` of a small-noise family, evaluated on
/// piecewise-linear controls.
#[derive(Debug, Clone)]
pub struct RateModel {
    dim: usize,
    kind: RateKind,
}

impl RateModel {
    /// `s √ε Σ^{1/2} W`: the action `½ ∫ |ẋ|²` in the `(s²Σ)^{-1}` norm.
    pub fn brownian(covariance: &[f64], dim: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(invalid("brownian rate", "scale must be positive"));
        }
        let scaled: Vec<f64> = covariance.iter().map(|v| v * scale * scale).collect();
        let cov = PsdMatrix::new(&scaled, dim, "brownian covariance")?;
        Ok(Self {
            dim,
            kind: RateKind::Brownian { cov, scale },
        })
    }

    /// `∫ Λ*(ẋ) dt` for the Lévy noise with the given triplet.
    pub fn levy(triplet: LevyTriplet) -> Self {
        Self {
            dim: triplet.dim(),
            kind: RateKind::Levy(triplet),
        }
    }

    /// Independent components acting on consecutive coordinate blocks.
    pub fn product(parts: Vec<RateModel>) -> Result<Self> {
        if parts.is_empty() {
            return Err(invalid("product rate", "needs at least one component"));
        }
        Ok(Self {
            dim: parts.iter().map(|p| p.dim).sum(),
            kind: RateKind::Product(parts),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn brownian_scale(&self) -> Option<f64> {
        match &self.kind {
            RateKind::Brownian { scale, .. } => Some(*scale),
            _ => None,
        }
    }

    /// Velocity with zero running cost.
    pub fn mean_velocity(&self) -> Vec<f64> {
        match &self.kind {
            RateKind::Brownian { .. } => vec![0.0; self.dim],
            RateKind::Levy(t) => t.mean_velocity(),
            RateKind::Product(parts) => parts.iter().flat_map(|p| p.mean_velocity()).collect(),
        }
    }

    /// Running cost `L(v)` at constant velocity `v`.
    pub fn running_cost(&self, v: &[f64]) -> Result<ExtReal> {
        if v.len() != self.dim {
            return Err(LdpError::DimensionMismatch {
                what: "velocity",
                expected: self.dim,
                found: v.len(),
            });
        }
        match &self.kind {
            RateKind::Brownian { cov, .. } => Ok(cov
                .inverse_quad(v)
                .map_or(ExtReal::Infinite, |q| ExtReal::Finite(0.5 * q))),
            RateKind::Levy(t) => t.legendre(v),
            RateKind::Product(parts) => {
                let mut total = ExtReal::Finite(0.0);
                let mut offset = 0;
                for p in parts {
                    total = total + p.running_cost(&v[offset..offset + p.dim])?;
                    if !total.is_finite() {
                        break;
                    }
                    offset += p.dim;
                }
                Ok(total)
            }
        }
    }
}

/// `I'(x)`: `+∞` unless `x(0) = 0` and `x` is continuous, otherwise the sum
/// of `δ_k L(slope_k)` over segments.
pub fn eval_control_rate(model: &RateModel, x: &CadlagPath) -> Result<ExtReal> {
    let d = model.dim();
    if x.dim() != d {
        return Err(LdpError::DimensionMismatch {
            what: "control dimension",
            expected: d,
            found: x.dim(),
        });
    }
    if x.value(0).iter().any(|v| *v != 0.0) || x.has_jumps() {
        return Ok(ExtReal::Infinite);
    }
    let times = x.breakpoints();
    let mut slope = vec![0.0; d];
    let mut total = ExtReal::Finite(0.0);
    for k in 0..times.len() - 1 {
        let dt = times[k + 1] - times[k];
        let (a, b) = (x.value(k), x.left_value(k + 1));
        for i in 0..d {
            slope[i] = (b[i] - a[i]) / dt;
        }
        match model.running_cost(&slope)? {
            ExtReal::Finite(c) => total = total + ExtReal::Finite(dt * c),
            ExtReal::Infinite => return Ok(ExtReal::Infinite),
        }
    }
    Ok(total)
}

/// `I(x, u, y)`: the control rate when `y` solves `y = u + F(y)·x` within
/// `tol` in sup norm (residual grid step `1e-3 T`), `+∞` otherwise.
pub fn eval_composite_rate(
    model: &RateModel,
    field: &VectorField,
    x: &CadlagPath,
    u: &CadlagPath,
    y: &CadlagPath,
    tol: f64,
) -> Result<ExtReal> {
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    if residual(field, u, x, y, 1e-3 * u.horizon())? <= tol {
        eval_control_rate(model, x)
    } else {
        Ok(ExtReal::Infinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// `y_T[c] >= level`.
    TerminalGe,
    /// `|y_T[c] - level| <= tol`.
    TerminalEq,
    /// `sup_t y_t[c] >= level`.
    SupGe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEvent {
    pub kind: EventKind,
    pub coordinate: usize,
    pub level: f64,
    pub tol: f64,
}

impl PathEvent {
    pub fn new(kind: EventKind, coordinate: usize, level: f64, tol: f64) -> Result<Self> {
        if !level.is_finite() || !(tol >= 0.0) {
            return Err(invalid("event", "level must be finite and tol nonnegative"));
        }
        Ok(Self {
            kind,
            coordinate,
            level,
            tol,
        })
    }

    pub fn terminal_ge(coordinate: usize, level: f64) -> Self {
        Self {
            kind: EventKind::TerminalGe,
            coordinate,
            level,
            tol: 0.0,
        }
    }

    /// Distance from satisfying the event; zero when it holds.
    pub fn violation(&self, path: &CadlagPath) -> Result<f64> {
        let c = self.coordinate;
        if c >= path.dim() {
            return Err(invalid("event", "coordinate out of range"));
        }
        Ok(match self.kind {
            EventKind::TerminalGe => (self.level - path.terminal()[c]).max(0.0),
            EventKind::TerminalEq => ((path.terminal()[c] - self.level).abs() - self.tol).max(0.0),
            EventKind::SupGe => {
                let d = path.dim();
                let top = path
                    .values_flat()
                    .iter()
                    .skip(c)
                    .step_by(d)
                    .chain(path.left_values_flat().iter().skip(c).step_by(d))
                    .fold(f64::NEG_INFINITY, |m, v| m.max(*v));
                (self.level - top).max(0.0)
            }
        })
    }

    /// Exact check, with slack `1e-9 max(1, |level|)` for rounding in the
    /// solvers.
    pub fn holds(&self, path: &CadlagPath) -> Result<bool> {
        Ok(self.violation(path)? <= 1e-9 * self.level.abs().max(1.0))
    }
}

/// Piecewise-linear control from 0 with `m` equal segments on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    pub m: usize,
    pub dim: usize,
    pub horizon: f64,
    /// `m` increments of length `dim`, flattened.
    pub increments: Vec<f64>,
}

impl ControlGrid {
    pub fn new(m: usize, dim: usize, horizon: f64) -> Result<Self> {
        Self::from_increments(m, dim, horizon, vec![0.0; m * dim])
    }

    pub fn from_increments(m: usize, dim: usize, horizon: f64, increments: Vec<f64>) -> Result<Self> {
        if m == 0 || dim == 0 {
            return Err(invalid("control grid", "needs m >= 1 and dim >= 1"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid("control grid", "horizon must be positive"));
        }
        if increments.len() != m * dim {
            return Err(LdpError::DimensionMismatch {
                what: "control increments",
                expected: m * dim,
                found: increments.len(),
            });
        }
        Ok(Self {
            m,
            dim,
            horizon,
            increments,
        })
    }

    pub fn to_path(&self) -> Result<CadlagPath> {
        let d = self.dim;
        let mut b = PathBuilder::with_capacity(&vec![0.0; d], self.m + 1);
        for k in 0..self.m {
            let t = self.horizon * (k + 1) as f64 / self.m as f64;
            b.linear_by(t, &self.increments[k * d..(k + 1) * d]);
        }
        b.build()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub m: usize,
    pub starts: usize,
    pub stages: usize,
    pub initial_weight: f64,
    pub weight_growth: f64,
    pub event_tol: f64,
    /// Skeleton solver step; `None` means `1e-2 T`.
    pub step: Option<f64>,
    /// Largest number of decision variables handled by the simplex method.
    pub simplex_max_vars: usize,
    pub inner: InnerOptions,
    pub seed: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            m: 16,
            starts: 8,
            stages: 5,
            initial_weight: 10.0,
            weight_growth: 10.0,
            event_tol: 1e-3,
            step: None,
            simplex_max_vars: 8,
            inner: InnerOptions::default(),
            seed: 0,
        }
    }
}

/// One inner solve: start index, penalty stage and the resulting iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub start: usize,
    pub stage: usize,
    pub weight: f64,
    pub objective: f64,
    pub rate: f64,
    pub violation: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct EndpointResult {
    pub x_star: CadlagPath,
    pub y_star: CadlagPath,
    pub rate: f64,
    pub violation: f64,
    pub feasible: bool,
    pub trace: Vec<TraceRecord>,
}

/// Approximates `inf { I'(x) : y = u + F(y)·x satisfies the event }` over
/// piecewise-linear controls with `opts.m` segments, by quadratic penalty
/// continuation from several starts. The value is an upper bound on the
/// infimum over all finite-variation controls.
pub fn minimize_endpoint(
    model: &RateModel,
    field: &VectorField,
    u: &CadlagPath,
    event: &PathEvent,
    opts: &MinimizeOptions,
) -> Result<EndpointResult> {
    let d = model.dim();
    if field.noise_dim() != d {
        return Err(LdpError::DimensionMismatch {
            what: "field noise dimension",
            expected: d,
            found: field.noise_dim(),
        });
    }
    if event.coordinate >= u.dim() {
        return Err(invalid("event", "coordinate out of range"));
    }
    if opts.starts == 0 || opts.stages == 0 || !(opts.event_tol >= 0.0) {
        return Err(invalid("minimize options", "needs starts, stages >= 1"));
    }
    let horizon = u.horizon();
    let m = opts.m;
    let step = opts.step.unwrap_or(1e-2 * horizon);
    ControlGrid::new(m, d, horizon)?;

    let evaluate = |z: &[f64]| -> Result<(f64, f64, CadlagPath, Option<CadlagPath>)> {
        let x = ControlGrid::from_increments(m, d, horizon, z.to_vec())?.to_path()?;
        match eval_control_rate(model, &x)? {
            ExtReal::Infinite => Ok((f64::INFINITY, f64::INFINITY, x, None)),
            ExtReal::Finite(r) => {
                let y = solve_skeleton(field, u, &x, step)?;
                let v = event.violation(&y)?;
                Ok((r, v, x, Some(y)))
            }
        }
    };
    let penalized = |z: &[f64], w: f64| -> f64 {
        match evaluate(z) {
            Ok((r, v, _, _)) => r + w * v * v,
            Err(_) => f64::INFINITY,
        }
    };

    let dt = horizon / m as f64;
    let mean = model.mean_velocity();
    let base: Vec<f64> = (0..m).flat_map(|_| mean.iter().map(|v| v * dt)).collect();
    let spread = 0.5 * (1.0 + event.level.abs()) / m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut trace = Vec::new();
    let mut best: Option<(f64, f64, CadlagPath, CadlagPath)> = None;
    let mut best_violation = f64::INFINITY;
    let mut consider = |r: f64, v: f64, x: CadlagPath, y: Option<CadlagPath>, best_violation: &mut f64| {
        *best_violation = best_violation.min(v);
        if let Some(y) = y {
            if r.is_finite() && v <= opts.event_tol && best.as_ref().is_none_or(|b| r < b.0) {
                best = Some((r, v, x, y));
            }
        }
    };

    for start in 0..opts.starts {
        let mut z = base.clone();
        if start > 0 {
            let noise: Vec<f64> = (0..base.len())
                .map(|_| spread * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut scale = 1.0;
            for _ in 0..40 {
                let trial: Vec<f64> = base.iter().zip(&noise).map(|(b, e)| b + scale * e).collect();
                if penalized(&trial, 0.0).is_finite() {
                    z = trial;
                    break;
                }
                scale *= 0.5;
            }
        }
        let (r0, v0, x0, y0) = evaluate(&z)?;
        consider(r0, v0, x0, y0, &mut best_violation);
        let mut w = opts.initial_weight;
        for stage in 0..opts.stages {
            let inner = InnerOptions {
                initial_step: spread,
                ..opts.inner
            };
            let obj = |q: &[f64]| penalized(q, w);
            let found = if z.len() <= opts.simplex_max_vars {
                nelder_mead(obj, &z, inner)
            } else {
                bfgs(obj, &z, inner)
            };
            let (r, v, x, y) = evaluate(&found.x)?;
            trace.push(TraceRecord {
                start,
                stage,
                weight: w,
                objective: found.value,
                rate: r,
                violation: v,
                evaluations: found.evaluations,
            });
            consider(r, v, x, y, &mut best_violation);
            if found.value.is_finite() {
                z = found.x;
            }
            w *= opts.weight_growth;
        }
    }

    match best {
        Some((rate, violation, x_star, y_star)) => Ok(EndpointResult {
            x_star,
            y_star,
            rate: rate.max(0.0),
            violation,
            feasible: true,
            trace,
        }),
        None => Err(LdpError::Infeasible {
            best_violation,
            starts: opts.starts,
            trace,
        }),
    }
}

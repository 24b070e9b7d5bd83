//! Pathwise solvers for `Y = U + F(Y_-) · X` and its deterministic skeleton.
//!
//! Both solvers work on the merged breakpoint grid of the control and the
//! noise, with every non-constant segment refined to at most `step`. Jump
//! times of the inputs are always grid points, so jumps are applied exactly
//! as `ΔY = ΔU + F(Y_-) ΔX`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, invalid, LdpError, Result};
use crate::paths::{dist, merged_breakpoints, norm, CadlagPath, PathBuilder, SegmentMode};

type FieldFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

#[derive(Clone)]
pub enum FieldKind {
    /// `F(y) = A` (row-major `n x d`).
    Constant(Vec<f64>),
    /// `F(y) = scale * diag(clamp(y_i, -limit, limit))`, `n = d`.
    ClampLinear { scale: f64, limit: f64 },
    /// `F(y) = scale * diag(tanh(y_i / width))`, `n = d`.
    TanhScaled { scale: f64, width: f64 },
    /// `F(y) = scale * diag(y_i)`; unbounded, only built on request.
    Linear { scale: f64 },
    /// Horizontal concatenation `[F_1 | F_2 | ...]`.
    Stacked(Vec<VectorField>),
    /// User-supplied map writing the row-major `n x d` matrix.
    Custom(Arc<FieldFn>),
}

impl fmt::Debug for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKind::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            FieldKind::ClampLinear { scale, limit } => f
                .debug_struct("ClampLinear")
                .field("scale", scale)
                .field("limit", limit)
                .finish(),
            FieldKind::TanhScaled { scale, width } => f
                .debug_struct("TanhScaled")
                .field("scale", scale)
                .field("width", width)
                .finish(),
            FieldKind::Linear { scale } => f.debug_struct("Linear").field("scale", scale).finish(),
            FieldKind::Stacked(parts) => f.debug_tuple("Stacked").field(parts).finish(),
            FieldKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Coefficient `F: R^n -> R^{n x d}` with declared sup bound and Lipschitz
/// constant (Frobenius norm).
#[derive(Debug, Clone)]
pub struct VectorField {
    n: usize,
    d: usize,
    kind: FieldKind,
    bound: f64,
    lip: f64,
}

/// Sampling check of the declared constants: pairs in a ball of this radius.
const VALIDATION_PAIRS: usize = 10_000;
const VALIDATION_RADIUS: f64 = 100.0;

impl VectorField {
    fn validated(n: usize, d: usize, kind: FieldKind, bound: f64, lip: f64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(invalid("vector field", "dimensions must be positive"));
        }
        if !(lip >= 0.0) || !lip.is_finite() || !(bound >= 0.0) {
            return Err(invalid("vector field", "constants must be nonnegative, lip finite"));
        }
        let field = Self { n, d, kind, bound, lip };
        field.check_constants()?;
        Ok(field)
    }

    pub fn constant(n: usize, d: usize, matrix: &[f64]) -> Result<Self> {
        if matrix.len() != n * d {
            return Err(LdpError::DimensionMismatch {
                what: "constant field matrix",
                expected: n * d,
                found: matrix.len(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("vector field", "matrix must be finite"));
        }
        let bound = norm(matrix);
        Self::validated(n, d, FieldKind::Constant(matrix.to_vec()), bound, 0.0)
    }

    /// `F ≡ c I`.
    pub fn scalar_identity(n: usize, c: f64) -> Result<Self> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = c;
        }
        Self::constant(n, n, &m)
    }

    pub fn clamp_linear(n: usize, scale: f64, limit: f64) -> Result<Self> {
        if !(limit > 0.0) || !scale.is_finite() {
            return Err(invalid("vector field", "clamp limit must be positive"));
        }
        let bound = scale.abs() * limit * (n as f64).sqrt();
        Self::validated(n, n, FieldKind::ClampLinear { scale, limit }, bound, scale.abs())
    }

    pub fn tanh_scaled(n: usize, scale: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !scale.is_finite() {
            return Err(invalid("vector field", "tanh width must be positive"));
        }
        let bound = scale.abs() * (n as f64).sqrt();
        Self::validated(n, n, FieldKind::TanhScaled { scale, width }, bound, scale.abs() / width)
    }

    /// Unbounded linear field; rejected unless `allow_unbounded` is set.
    pub fn linear(n: usize, scale: f64, allow_unbounded: bool) -> Result<Self> {
        if !allow_unbounded {
            return Err(invalid(
                "vector field",
                "linear field is unbounded; use clamp_linear or allow unbounded fields",
            ));
        }
        Self::validated(n, n, FieldKind::Linear { scale }, f64::INFINITY, scale.abs())
    }

    /// A user map with declared constants, checked by sampling.
    pub fn custom<F>(n: usize, d: usize, bound: f64, lip: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::validated(n, d, FieldKind::Custom(Arc::new(f)), bound, lip)
    }

    /// `[F_1 | F_2 | ...]` acting on stacked noise.
    pub fn hstack(parts: Vec<VectorField>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| invalid("vector field", "empty stack"))?;
        let n = first.n;
        if let Some(bad) = parts.iter().find(|p| p.n != n) {
            return Err(LdpError::DimensionMismatch {
                what: "stacked field state dimension",
                expected: n,
                found: bad.n,
            });
        }
        let d = parts.iter().map(|p| p.d).sum();
        let bound = parts.iter().map(|p| p.bound * p.bound).sum::<f64>().sqrt();
        let lip = parts.iter().map(|p| p.lip * p.lip).sum::<f64>().sqrt();
        Ok(Self {
            n,
            d,
            kind: FieldKind::Stacked(parts),
            bound,
            lip,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn noise_dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lipschitz(&self) -> f64 {
        self.lip
    }

    /// The single constant `C` bounding both `|F|` and its Lipschitz constant.
    pub fn constant_c(&self) -> f64 {
        self.bound.max(self.lip)
    }

    /// Writes the row-major `n x d` matrix `F(y)`.
    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        let (n, d) = (self.n, self.d);
        match &self.kind {
            FieldKind::Constant(m) => out.copy_from_slice(m),
            FieldKind::ClampLinear { scale, limit } => {
                out.fill(0.0);
                for i in 0..n {
                    out[i * d + i] = scale * y[i].clamp(-limit, *limit);
                }
            }
            FieldKind::TanhScaled { scale, width } => {
                out.fill(0.0);
                for i in 0..n {
                    out[i * d + i] = scale * (y[i] / width).tanh();
                }
            }
            FieldKind::Linear { scale } => {
                out.fill(0.0);
                for i in 0..n {
                    out[i * d + i] = scale * y[i];
                }
            }
            FieldKind::Stacked(parts) => {
                let mut col = 0;
                for p in parts {
                    let mut buf = vec![0.0; n * p.d];
                    p.eval_into(y, &mut buf);
                    for i in 0..n {
                        out[i * d + col..i * d + col + p.d]
                            .copy_from_slice(&buf[i * p.d..(i + 1) * p.d]);
                    }
                    col += p.d;
                }
            }
            FieldKind::Custom(f) => f(y, out),
        }
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.d];
        self.eval_into(y, &mut out);
        out
    }

    /// `out += F(y) dx`.
    pub fn apply_add(&self, y: &[f64], dx: &[f64], out: &mut [f64]) {
        let (n, d) = (self.n, self.d);
        match &self.kind {
            FieldKind::Constant(m) => {
                for i in 0..n {
                    out[i] += m[i * d..(i + 1) * d].iter().zip(dx).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            FieldKind::ClampLinear { scale, limit } => {
                for i in 0..n {
                    out[i] += scale * y[i].clamp(-limit, *limit) * dx[i];
                }
            }
            FieldKind::TanhScaled { scale, width } => {
                for i in 0..n {
                    out[i] += scale * (y[i] / width).tanh() * dx[i];
                }
            }
            FieldKind::Linear { scale } => {
                for i in 0..n {
                    out[i] += scale * y[i] * dx[i];
                }
            }
            FieldKind::Stacked(parts) => {
                let mut col = 0;
                for p in parts {
                    p.apply_add(y, &dx[col..col + p.d], out);
                    col += p.d;
                }
            }
            FieldKind::Custom(_) => {
                let m = self.eval(y);
                for i in 0..n {
                    out[i] += m[i * d..(i + 1) * d].iter().zip(dx).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
    }

    fn check_constants(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f1e1d);
        let n = self.n;
        let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let len = norm(&v).max(f64::MIN_POSITIVE);
            let r = VALIDATION_RADIUS * rng.random::<f64>().powf(1.0 / n as f64);
            v.iter_mut().for_each(|x| *x *= r / len);
            v
        };
        let mut fa = vec![0.0; self.n * self.d];
        let mut fb = vec![0.0; self.n * self.d];
        for _ in 0..VALIDATION_PAIRS {
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            self.eval_into(&a, &mut fa);
            self.eval_into(&b, &mut fb);
            if fa.iter().any(|v| !v.is_finite()) {
                return Err(invalid("vector field", "field is not finite on the sampled ball"));
            }
            if norm(&fa) > self.bound * (1.0 + 1e-9) + 1e-12 {
                return Err(invalid(
                    "vector field",
                    alloc::format!("declared bound {} violated: |F| = {}", self.bound, norm(&fa)),
                ));
            }
            let gap = dist(&fa, &fb);
            if gap > self.lip * dist(&a, &b) * (1.0 + 1e-9) + 1e-12 {
                return Err(invalid(
                    "vector field",
                    alloc::format!("declared Lipschitz constant {} violated", self.lip),
                ));
            }
        }
        Ok(())
    }
}

/// Inputs of the driven equation `Y = U + F(Y_-) · X`.
#[derive(Debug, Clone)]
pub struct SdeProblem {
    pub field: VectorField,
    pub control: CadlagPath,
    pub noise: CadlagPath,
    /// Maximal grid spacing on non-constant segments.
    pub step: f64,
}

impl SdeProblem {
    pub fn new(field: VectorField, control: CadlagPath, noise: CadlagPath, step: f64) -> Result<Self> {
        check_inputs(&field, &control, &noise, step)?;
        Ok(Self {
            field,
            control,
            noise,
            step,
        })
    }
}

fn check_inputs(field: &VectorField, u: &CadlagPath, x: &CadlagPath, step: f64) -> Result<()> {
    if !(step > 0.0) {
        return Err(domain("step must be positive"));
    }
    if u.dim() != field.state_dim() {
        return Err(LdpError::DimensionMismatch {
            what: "control dimension",
            expected: field.state_dim(),
            found: u.dim(),
        });
    }
    if x.dim() != field.noise_dim() {
        return Err(LdpError::DimensionMismatch {
            what: "noise dimension",
            expected: field.noise_dim(),
            found: x.dim(),
        });
    }
    if u.horizon() != x.horizon() {
        return Err(invalid("sde problem", "control and noise horizons differ"));
    }
    Ok(())
}

/// Merged, refined grid with left and right samples of every input.
struct Grid {
    times: Vec<f64>,
    moving: Vec<bool>,
    samples: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Grid {
    fn build(paths: &[&CadlagPath], step: f64) -> Grid {
        let base = merged_breakpoints(paths);
        let mut times = Vec::with_capacity(base.len());
        let mut moving = Vec::with_capacity(base.len());
        times.push(base[0]);
        for w in base.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let linear = paths.iter().any(|p| {
                let k = p.breakpoints().partition_point(|&s| s <= mid) - 1;
                p.modes()[k.min(p.modes().len() - 1)] == SegmentMode::Linear
            });
            let pieces = if linear {
                (((w[1] - w[0]) / step) - 1e-9).ceil().max(1.0) as usize
            } else {
                1
            };
            for j in 1..=pieces {
                let t = if j == pieces {
                    w[1]
                } else {
                    w[0] + (w[1] - w[0]) * j as f64 / pieces as f64
                };
                times.push(t);
                moving.push(linear);
            }
        }
        let samples = paths.iter().map(|p| p.sample_sweep(&times)).collect();
        Grid {
            times,
            moving,
            samples,
        }
    }

    fn left<'a>(&'a self, path: usize, k: usize, dim: usize) -> &'a [f64] {
        &self.samples[path].0[k * dim..(k + 1) * dim]
    }

    fn right<'a>(&'a self, path: usize, k: usize, dim: usize) -> &'a [f64] {
        &self.samples[path].1[k * dim..(k + 1) * dim]
    }
}

/// Left-point Euler scheme on the merged grid; exact at jump times.
pub fn solve_sde(problem: &SdeProblem) -> Result<CadlagPath> {
    let SdeProblem {
        field,
        control,
        noise,
        step,
    } = problem;
    check_inputs(field, control, noise, *step)?;
    let (n, d) = (field.state_dim(), field.noise_dim());
    let grid = Grid::build(&[control, noise], *step);
    let mut y = grid.right(0, 0, n).to_vec();
    let mut builder = PathBuilder::with_capacity(&y, grid.times.len());
    let mut y_left = vec![0.0; n];
    let mut dx = vec![0.0; d];
    let mut jump = vec![0.0; n];
    for k in 0..grid.times.len() - 1 {
        let t = grid.times[k + 1];
        if grid.moving[k] {
            let (u0, u1) = (grid.right(0, k, n), grid.left(0, k + 1, n));
            for i in 0..n {
                y_left[i] = y[i] + (u1[i] - u0[i]);
            }
            let (x0, x1) = (grid.right(1, k, d), grid.left(1, k + 1, d));
            for j in 0..d {
                dx[j] = x1[j] - x0[j];
            }
            field.apply_add(&y, &dx, &mut y_left);
            builder.linear_to(t, &y_left);
        } else {
            y_left.copy_from_slice(&y);
            builder.hold_to(t);
        }
        apply_jump(field, &grid, k + 1, &y_left, &mut dx, &mut jump);
        if jump.iter().any(|v| *v != 0.0) {
            builder.jump(&jump);
        }
        for i in 0..n {
            y[i] = y_left[i] + jump[i];
        }
    }
    builder.build()
}

/// `jump = ΔU + F(y_left) ΔX` at grid index `k`.
fn apply_jump(field: &VectorField, grid: &Grid, k: usize, y_left: &[f64], dx: &mut [f64], jump: &mut [f64]) {
    let (n, d) = (field.state_dim(), field.noise_dim());
    let (ul, ur) = (grid.left(0, k, n), grid.right(0, k, n));
    for i in 0..n {
        jump[i] = ur[i] - ul[i];
    }
    let (xl, xr) = (grid.left(1, k, d), grid.right(1, k, d));
    let mut any = false;
    for j in 0..d {
        dx[j] = xr[j] - xl[j];
        any |= dx[j] != 0.0;
    }
    if any {
        field.apply_add(y_left, dx, jump);
    }
}

/// Solves the deterministic equation `y = u + F(y) · x` for finite-variation
/// `x`: classical RK4 on `y' = u' + F(y) x'` between jumps, and
/// `y = y_- + Δu + F(y_-) Δx` at jumps.
pub fn solve_skeleton(field: &VectorField, u: &CadlagPath, x: &CadlagPath, step: f64) -> Result<CadlagPath> {
    check_inputs(field, u, x, step)?;
    let (n, d) = (field.state_dim(), field.noise_dim());
    let grid = Grid::build(&[u, x], step);
    let mut y = grid.right(0, 0, n).to_vec();
    let mut builder = PathBuilder::with_capacity(&y, grid.times.len());
    let mut y_left = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut dx = vec![0.0; d];
    let mut jump = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut ks = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for k in 0..grid.times.len() - 1 {
        let (t0, t1) = (grid.times[k], grid.times[k + 1]);
        if grid.moving[k] {
            let h = t1 - t0;
            let (u0, u1) = (grid.right(0, k, n), grid.left(0, k + 1, n));
            for i in 0..n {
                du[i] = (u1[i] - u0[i]) / h;
            }
            let (x0, x1) = (grid.right(1, k, d), grid.left(1, k + 1, d));
            for j in 0..d {
                dx[j] = (x1[j] - x0[j]) / h;
            }
            let rhs = |yv: &[f64], out: &mut [f64]| {
                out.copy_from_slice(&du);
                field.apply_add(yv, &dx, out);
            };
            rhs(&y, &mut ks[0]);
            for (s, c) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
                for i in 0..n {
                    stage[i] = y[i] + c * h * ks[s - 1][i];
                }
                let (_, rest) = ks.split_at_mut(s);
                rhs(&stage, &mut rest[0]);
            }
            for i in 0..n {
                y_left[i] = y[i] + h / 6.0 * (ks[0][i] + 2.0 * ks[1][i] + 2.0 * ks[2][i] + ks[3][i]);
            }
            builder.linear_to(t1, &y_left);
        } else {
            y_left.copy_from_slice(&y);
            builder.hold_to(t1);
        }
        apply_jump(field, &grid, k + 1, &y_left, &mut dx, &mut jump);
        if jump.iter().any(|v| *v != 0.0) {
            builder.jump(&jump);
        }
        for i in 0..n {
            y[i] = y_left[i] + jump[i];
        }
    }
    builder.build()
}

/// Components of an Itô-type noise: drift part, continuous martingale part,
/// and small- and large-jump parts, all of the same dimension `d`.
#[derive(Debug, Clone)]
pub struct ItoParts {
    pub drift: CadlagPath,
    pub continuous: CadlagPath,
    pub small_jumps: CadlagPath,
    pub large_jumps: CadlagPath,
}

impl ItoParts {
    /// The stacked `3d`-dimensional noise `(B, X^c, small + large)`.
    pub fn stacked_noise(&self) -> Result<CadlagPath> {
        let d = self.drift.dim();
        for p in [&self.continuous, &self.small_jumps, &self.large_jumps] {
            if p.dim() != d {
                return Err(LdpError::DimensionMismatch {
                    what: "ito part dimension",
                    expected: d,
                    found: p.dim(),
                });
            }
            if p.horizon() != self.drift.horizon() {
                return Err(invalid("ito parts", "horizons differ"));
            }
        }
        let jumps = self.small_jumps.add(&self.large_jumps)?;
        CadlagPath::stack(&[&self.drift, &self.continuous, &jumps])
    }
}

/// `Y = U + F_1(Y_-)·B + F_2(Y_-)·X^c + F_3(Y_-)·(small + large jumps)`,
/// solved as the driven equation with `F = (F_1, F_2, F_3)` on the stacked
/// noise.
pub fn solve_ito(
    fields: [&VectorField; 3],
    u: &CadlagPath,
    parts: &ItoParts,
    step: f64,
) -> Result<CadlagPath> {
    let noise = parts.stacked_noise()?;
    let field = VectorField::hstack(fields.iter().map(|f| (*f).clone()).collect())?;
    solve_sde(&SdeProblem::new(field, u.clone(), noise, step)?)
}

const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// `sup_t |y(t) - u(t) - (F(y_-) · x)(t)|` over the refined grid, left limits
/// included, with the integral of the given `y` (not re-solved) by 3-point
/// Gauss–Legendre on smooth pieces and exact jump terms.
pub fn residual(field: &VectorField, u: &CadlagPath, x: &CadlagPath, y: &CadlagPath, step: f64) -> Result<f64> {
    check_inputs(field, u, x, step)?;
    if y.dim() != field.state_dim() {
        return Err(LdpError::DimensionMismatch {
            what: "solution dimension",
            expected: field.state_dim(),
            found: y.dim(),
        });
    }
    if y.horizon() != u.horizon() {
        return Err(invalid("residual", "solution horizon differs"));
    }
    let (n, d) = (field.state_dim(), field.noise_dim());
    let grid = Grid::build(&[u, x, y], step);
    let mut integral = vec![0.0; n];
    let mut dx = vec![0.0; d];
    let mut node = vec![0.0; n];
    let mut buf = vec![0.0; n];
    let gap = |yv: &[f64], uv: &[f64], iv: &[f64]| -> f64 {
        (0..n)
            .map(|i| (yv[i] - uv[i] - iv[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut worst = gap(grid.right(2, 0, n), grid.right(0, 0, n), &integral);
    for k in 0..grid.times.len() - 1 {
        let h = grid.times[k + 1] - grid.times[k];
        let (x0, x1) = (grid.right(1, k, d), grid.left(1, k + 1, d));
        let mut moves = false;
        for j in 0..d {
            dx[j] = (x1[j] - x0[j]) / h;
            moves |= dx[j] != 0.0;
        }
        if moves {
            let (y0, y1) = (grid.right(2, k, n), grid.left(2, k + 1, n));
            for (xi, w) in GL3_NODES.iter().zip(GL3_WEIGHTS) {
                let s = 0.5 * (1.0 + xi);
                for i in 0..n {
                    node[i] = y0[i] + s * (y1[i] - y0[i]);
                }
                buf.fill(0.0);
                field.apply_add(&node, &dx, &mut buf);
                for i in 0..n {
                    integral[i] += 0.5 * h * w * buf[i];
                }
            }
        }
        worst = worst.max(gap(grid.left(2, k + 1, n), grid.left(0, k + 1, n), &integral));
        let (xl, xr) = (grid.left(1, k + 1, d), grid.right(1, k + 1, d));
        for j in 0..d {
            dx[j] = xr[j] - xl[j];
        }
        if dx.iter().any(|v| *v != 0.0) {
            field.apply_add(grid.left(2, k + 1, n), &dx, &mut integral);
        }
        worst = worst.max(gap(grid.right(2, k + 1, n), grid.right(0, k + 1, n), &integral));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::E;

    fn pure_jump(jumps: &[(f64, f64)]) -> CadlagPath {
        let mut b = PathBuilder::new(&[0.0]);
        for (t, j) in jumps {
            b.hold_to(*t).jump(&[*j]);
        }
        b.hold_to(1.0).build().unwrap()
    }

    #[test]
    fn field_validation() {
        assert!(VectorField::custom(1, 1, 0.5, 1.0, |y, out| out[0] = y[0].clamp(-1.0, 1.0)).is_err());
        assert!(VectorField::custom(1, 1, 1.0, 0.5, |y, out| out[0] = y[0].clamp(-1.0, 1.0)).is_err());
        assert!(VectorField::custom(1, 1, 1.0, 1.0, |y, out| out[0] = y[0].clamp(-1.0, 1.0)).is_ok());
        assert!(VectorField::linear(1, 1.0, false).is_err());
        assert!(VectorField::linear(1, 1.0, true).is_ok());
        let f = VectorField::clamp_linear(1, 1.0, 10.0).unwrap();
        assert_eq!(f.constant_c(), 10.0);
        assert!(VectorField::tanh_scaled(2, 0.5, 2.0).is_ok());
    }

    #[test]
    fn zero_field_returns_control() {
        let f = VectorField::constant(1, 1, &[0.0]).unwrap();
        let u = PathBuilder::new(&[1.0]).linear_to(0.5, &[2.0]).jump(&[1.0]).hold_to(1.0).build().unwrap();
        let x = pure_jump(&[(0.3, 1.0)]);
        let y = solve_sde(&SdeProblem::new(f.clone(), u.clone(), x.clone(), 0.01).unwrap()).unwrap();
        for t in [0.0, 0.2, 0.5, 0.7, 1.0] {
            assert!((y.eval(t)[0] - u.eval(t)[0]).abs() < 1e-15);
        }
        let s = solve_skeleton(&f, &u, &x, 0.01).unwrap();
        assert!((s.terminal()[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_field_telescopes() {
        let a = VectorField::constant(1, 1, &[2.5]).unwrap();
        let u = CadlagPath::constant(1.0, &[0.3]).unwrap();
        let x = PathBuilder::new(&[1.0]).linear_to(0.4, &[0.5]).jump(&[2.0]).linear_to(1.0, &[1.0]).build().unwrap();
        let y = solve_sde(&SdeProblem::new(a, u, x.clone(), 0.07).unwrap()).unwrap();
        for &t in y.breakpoints() {
            let expect = 0.3 + 2.5 * (x.eval(t)[0] - 1.0);
            assert!((y.eval(t)[0] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn doleans_dade_product() {
        let f = VectorField::clamp_linear(1, 1.0, 10.0).unwrap();
        let u = CadlagPath::constant(1.0, &[1.0]).unwrap();
        let x = pure_jump(&[(0.2, 0.5), (0.5, -0.2), (0.8, 0.1)]);
        let y = solve_sde(&SdeProblem::new(f.clone(), u.clone(), x.clone(), 0.01).unwrap()).unwrap();
        let expect = ((1.0 + 1.0 * 0.5) * (1.0 - 0.2)) * (1.0 + 0.1);
        assert!((y.terminal()[0] - 1.32).abs() < 1e-15);
        assert!((y.terminal()[0] - expect).abs() < 1e-15);
        let s = solve_skeleton(&f, &u, &x, 0.01).unwrap();
        assert_eq!(s.terminal(), y.terminal());
    }

    #[test]
    fn skeleton_exponential() {
        let f = VectorField::clamp_linear(1, 1.0, 10.0).unwrap();
        let u = CadlagPath::constant(1.0, &[1.0]).unwrap();
        let x = CadlagPath::linear(1.0, &[0.0], &[1.0]).unwrap();
        let y = solve_skeleton(&f, &u, &x, 1e-3).unwrap();
        assert!((y.terminal()[0] - E).abs() < 1e-6);
        assert!(residual(&f, &u, &x, &y, 1e-3).unwrap() <= 1e-6);
    }

    #[test]
    fn skeleton_identity_coefficient() {
        let f = VectorField::constant(1, 1, &[1.0]).unwrap();
        let u = CadlagPath::zero(1, 2.0).unwrap();
        let x = CadlagPath::linear(2.0, &[0.0], &[3.0]).unwrap();
        let y = solve_skeleton(&f, &u, &x, 0.1).unwrap();
        assert!((y.eval(1.0)[0] - 1.5).abs() < 1e-14);
        let zero = CadlagPath::zero(1, 2.0).unwrap();
        let u2 = CadlagPath::linear(2.0, &[1.0], &[0.0]).unwrap();
        let y = solve_skeleton(&f, &u2, &zero, 0.1).unwrap();
        assert!((y.eval(0.5)[0] - u2.eval(0.5)[0]).abs() < 1e-15);
    }

    #[test]
    fn residual_examples() {
        let f0 = VectorField::constant(1, 1, &[0.0]).unwrap();
        let u = CadlagPath::linear(1.0, &[0.0], &[1.0]).unwrap();
        let x = CadlagPath::linear(1.0, &[0.0], &[2.0]).unwrap();
        let bumped = u.add(&PathBuilder::new(&[0.0]).hold_to(0.5).jump(&[1.0]).hold_to(1.0).build().unwrap()).unwrap();
        assert!((residual(&f0, &u, &x, &bumped, 1e-3).unwrap() - 1.0).abs() < 1e-12);
        let zero = CadlagPath::zero(1, 1.0).unwrap();
        let f1 = VectorField::constant(1, 1, &[1.0]).unwrap();
        assert_eq!(residual(&f1, &u, &zero, &u, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn ito_reductions() {
        let zero = VectorField::constant(1, 1, &[0.0]).unwrap();
        let one = VectorField::constant(1, 1, &[1.0]).unwrap();
        let a = VectorField::constant(1, 1, &[0.7]).unwrap();
        let u = CadlagPath::constant(1.0, &[0.2]).unwrap();
        let parts = ItoParts {
            drift: CadlagPath::linear(1.0, &[0.0], &[0.5]).unwrap(),
            continuous: PathBuilder::new(&[0.0]).linear_to(0.3, &[0.4]).linear_to(1.0, &[-0.1]).build().unwrap(),
            small_jumps: pure_jump(&[(0.25, 0.05)]),
            large_jumps: pure_jump(&[(0.6, 2.0)]),
        };
        let y = solve_ito([&one, &zero, &zero], &u, &parts, 0.01).unwrap();
        assert!((y.terminal()[0] - 0.7).abs() < 1e-14);
        let y = solve_ito([&zero, &a, &zero], &u, &parts, 0.01).unwrap();
        assert!((y.terminal()[0] - (0.2 + 0.7 * -0.1)).abs() < 1e-14);

        let summed = parts
            .drift
            .add(&parts.continuous)
            .unwrap()
            .add(&parts.small_jumps)
            .unwrap()
            .add(&parts.large_jumps)
            .unwrap();
        let tanh = VectorField::tanh_scaled(1, 1.0, 1.0).unwrap();
        let direct = solve_sde(&SdeProblem::new(tanh.clone(), u.clone(), summed, 0.01).unwrap()).unwrap();
        let via = solve_ito([&tanh, &tanh, &tanh], &u, &parts, 0.01).unwrap();
        for t in [0.1, 0.3, 0.6, 1.0] {
            assert!((direct.eval(t)[0] - via.eval(t)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let f = VectorField::constant(1, 2, &[1.0, 1.0]).unwrap();
        let u = CadlagPath::zero(1, 1.0).unwrap();
        let x = CadlagPath::zero(1, 1.0).unwrap();
        assert!(SdeProblem::new(f.clone(), u.clone(), x.clone(), 0.1).is_err());
        let x2 = CadlagPath::zero(2, 1.0).unwrap();
        assert!(SdeProblem::new(f.clone(), u.clone(), x2.clone(), 0.0).is_err());
        assert!(solve_skeleton(&f, &u, &CadlagPath::zero(2, 2.0).unwrap(), 0.1).is_err());
    }
}

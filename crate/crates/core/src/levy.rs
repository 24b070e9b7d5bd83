//! Scaled Lévy noise `X^ε_t = b^ε t + √ε Σ^{1/2} W_t + L^ε_t` with a finite
//! atomic jump measure, where `L^ε` has jumps `ε x_i` arriving at rate
//! `λ_i / ε`.
//!
//! By default jumps are not compensated. With `compensated = true` the
//! unscaled jumps of size `|x| <= 1` are compensated, which adds the
//! ε-independent drift `-Σ_{|x_i| <= 1} λ_i x_i`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{domain, invalid, LdpError, Result};
use crate::ext::ExtReal;
use crate::linalg::{solve_damped, PsdMatrix};
use crate::paths::{norm, CadlagPath, PathBuilder};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub size: Vec<f64>,
    pub intensity: f64,
}

/// `ν = Σ λ_i δ_{x_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

impl JumpMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if a.size.len() != dim {
                return Err(LdpError::DimensionMismatch {
                    what: "jump atom",
                    expected: dim,
                    found: a.size.len(),
                });
            }
            if a.size.iter().any(|v| !v.is_finite()) || norm(&a.size) == 0.0 {
                return Err(invalid("jump measure", "atoms must be finite and nonzero"));
            }
            if !(a.intensity > 0.0 && a.intensity.is_finite()) {
                return Err(invalid("jump measure", "intensities must be positive and finite"));
            }
        }
        Ok(Self { dim, atoms })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            atoms: Vec::new(),
        }
    }

    /// Single atom `λ δ_x`.
    pub fn single(size: &[f64], intensity: f64) -> Result<Self> {
        Self::new(
            size.len(),
            vec![Atom {
                size: size.to_vec(),
                intensity,
            }],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.intensity).sum()
    }

    /// Largest atom norm (0 for the empty measure).
    pub fn max_size(&self) -> f64 {
        self.atoms.iter().fold(0.0, |m, a| m.max(norm(&a.size)))
    }

    /// `ε^{-1} ν(ε^{-1} ·)`: atoms `(ε x_i, λ_i / ε)`.
    pub fn scaled(&self, eps: f64) -> JumpMeasure {
        JumpMeasure {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    size: a.size.iter().map(|v| eps * v).collect(),
                    intensity: a.intensity / eps,
                })
                .collect(),
        }
    }
}

/// `ε ↦ b^ε`.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftRule {
    Constant(Vec<f64>),
    /// `b^ε = base + ε slope`, uniformly bounded on `(0, 1]`.
    Affine { base: Vec<f64>, slope: Vec<f64> },
}

impl DriftRule {
    pub fn dim(&self) -> usize {
        match self {
            DriftRule::Constant(b) => b.len(),
            DriftRule::Affine { base, .. } => base.len(),
        }
    }

    pub fn at(&self, eps: f64) -> Vec<f64> {
        match self {
            DriftRule::Constant(b) => b.clone(),
            DriftRule::Affine { base, slope } => {
                base.iter().zip(slope).map(|(b, s)| b + eps * s).collect()
            }
        }
    }

    /// The small-noise limit `lim_{ε→0} b^ε`.
    pub fn limit(&self) -> Vec<f64> {
        self.at(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct LevyTriplet {
    dim: usize,
    drift: DriftRule,
    diffusion: PsdMatrix,
    diffusion_sqrt: Vec<f64>,
    jumps: JumpMeasure,
    compensated: bool,
}

/// Characteristics `(B^ε(h_b), C^ε, ν^ε)` of `X^ε`, all linear in time.
#[derive(Debug, Clone, PartialEq)]
pub struct CharTriplet {
    pub dim: usize,
    pub eps: f64,
    pub trunc: f64,
    /// `B^ε_t = t * drift_slope`.
    pub drift_slope: Vec<f64>,
    /// `C^ε_t / ε = t * diffusion_rate` (row-major `d x d`).
    pub diffusion_rate: Vec<f64>,
    /// `ν^ε(dx, dt) = scaled_jumps(dx) dt`.
    pub scaled_jumps: JumpMeasure,
}

impl CharTriplet {
    pub fn first_at(&self, t: f64) -> Vec<f64> {
        self.drift_slope.iter().map(|v| t * v).collect()
    }

    pub fn second_over_eps_at(&self, t: f64) -> Vec<f64> {
        self.diffusion_rate.iter().map(|v| t * v).collect()
    }

    /// Total mass of `ν^ε(·, [0, t])`.
    pub fn jump_mass_at(&self, t: f64) -> f64 {
        t * self.scaled_jumps.total_mass()
    }
}

/// The three real families whose exponential tightness drives the LDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeFamilies {
    /// `V(B^ε(h_b))_t`.
    pub drift_variation: f64,
    /// `‖C^ε_t‖ / ε` (operator norm).
    pub diffusion_over_eps: f64,
    /// `ε ∫ exp(|x|/(ε r) ∨ 1) ν^ε(dx, [0, t])`.
    pub exp_jump_integral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreOptions {
    pub max_iter: usize,
    /// Stop when `|z - ∇Λ(θ)| <= grad_tol * (1 + |z|)`.
    pub grad_tol: f64,
    /// Objective level taken as divergence to `+∞`.
    pub divergence_level: f64,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-13,
            divergence_level: 1e12,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LevyTriplet {
    /// `diffusion` is the row-major `d x d` covariance `Σ`.
    pub fn new(
        drift: DriftRule,
        diffusion: &[f64],
        jumps: JumpMeasure,
        compensated: bool,
    ) -> Result<Self> {
        let dim = drift.dim();
        if dim == 0 {
            return Err(invalid("triplet", "dimension must be positive"));
        }
        if jumps.dim() != dim {
            return Err(LdpError::DimensionMismatch {
                what: "jump measure",
                expected: dim,
                found: jumps.dim(),
            });
        }
        let drifts = match &drift {
            DriftRule::Constant(b) => vec![b],
            DriftRule::Affine { base, slope } => {
                if slope.len() != dim {
                    return Err(LdpError::DimensionMismatch {
                        what: "drift slope",
                        expected: dim,
                        found: slope.len(),
                    });
                }
                vec![base, slope]
            }
        };
        if drifts.iter().any(|b| b.iter().any(|v| !v.is_finite())) {
            return Err(invalid("triplet", "drift must be finite"));
        }
        let diffusion = PsdMatrix::new(diffusion, dim, "diffusion")?;
        let diffusion_sqrt = diffusion.sqrt();
        Ok(Self {
            dim,
            drift,
            diffusion,
            diffusion_sqrt,
            jumps,
            compensated,
        })
    }

    /// Pure compound Poisson noise with no drift or diffusion.
    pub fn compound_poisson(jumps: JumpMeasure) -> Result<Self> {
        let d = jumps.dim();
        Self::new(DriftRule::Constant(vec![0.0; d]), &vec![0.0; d * d], jumps, false)
    }

    /// Driftless Brownian noise with covariance `Σ`.
    pub fn brownian(diffusion: &[f64], dim: usize) -> Result<Self> {
        Self::new(
            DriftRule::Constant(vec![0.0; dim]),
            diffusion,
            JumpMeasure::empty(dim),
            false,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift(&self) -> &DriftRule {
        &self.drift
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion.flat
    }

    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }

    pub fn compensated(&self) -> bool {
        self.compensated
    }

    /// Whether the atom is compensated under this triplet's convention.
    fn is_compensated(&self, atom: &Atom) -> bool {
        self.compensated && norm(&atom.size) <= 1.0
    }

    /// Drift added by compensation: `-Σ_{compensated} λ_i x_i` (ε-free).
    pub fn compensator_drift(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for a in self.jumps.atoms.iter().filter(|a| self.is_compensated(a)) {
            for (o, x) in out.iter_mut().zip(&a.size) {
                *o -= a.intensity * x;
            }
        }
        out
    }

    fn check_eps(eps: f64) -> Result<()> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(domain("eps must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Seeded exact-in-law sample of `X^ε` on `[0, horizon]`.
    pub fn simulate(&self, eps: f64, horizon: f64, grid_step: f64, seed: u64) -> Result<CadlagPath> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.simulate_with(eps, horizon, grid_step, &mut rng)
    }

    /// Sample of `X^ε` drawing from `rng`.
    ///
    /// Jump times are exact compound-Poisson arrivals and become breakpoints.
    /// The Brownian part is sampled exactly at the uniform grid merged with
    /// the jump times and interpolated linearly in between; without a
    /// diffusion part the grid is skipped.
    pub fn simulate_with<R: Rng + ?Sized>(
        &self,
        eps: f64,
        horizon: f64,
        grid_step: f64,
        rng: &mut R,
    ) -> Result<CadlagPath> {
        Self::check_eps(eps)?;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(domain("horizon must be positive"));
        }
        if !(grid_step > 0.0) || grid_step > horizon {
            return Err(domain("grid step must lie in (0, T]"));
        }
        let d = self.dim;

        let total = self.jumps.total_mass();
        let rate = total / eps;
        let mut jump_times = Vec::new();
        let mut jump_atoms = Vec::new();
        if rate > 0.0 {
            let mut t = 0.0;
            loop {
                let e: f64 = rng.sample(Exp1);
                t += e / rate;
                if t >= horizon {
                    break;
                }
                let mut u = rng.random::<f64>() * total;
                let mut idx = self.jumps.atoms.len() - 1;
                for (i, a) in self.jumps.atoms.iter().enumerate() {
                    if u < a.intensity {
                        idx = i;
                        break;
                    }
                    u -= a.intensity;
                }
                jump_times.push(t);
                jump_atoms.push(idx);
            }
        }

        let diffusive = !self.diffusion.is_zero();
        let n_grid = if diffusive {
            ((horizon / grid_step) - 1e-9).ceil().max(1.0) as usize
        } else {
            1
        };
        let grid_at = |i: usize| {
            if i == n_grid {
                horizon
            } else {
                horizon * i as f64 / n_grid as f64
            }
        };

        let drift: Vec<f64> = self
            .drift
            .at(eps)
            .iter()
            .zip(self.compensator_drift())
            .map(|(b, c)| b + c)
            .collect();
        let moving = diffusive || drift.iter().any(|v| *v != 0.0);
        let noise_scale = eps.sqrt();

        let mut builder = PathBuilder::with_capacity(&vec![0.0; d], n_grid + jump_times.len() + 1);
        let mut inc = vec![0.0; d];
        let mut z = vec![0.0; d];
        let (mut gi, mut ji) = (1, 0);
        let mut prev = 0.0;
        while gi <= n_grid {
            let (t, jump) = if ji < jump_times.len() && jump_times[ji] < grid_at(gi) {
                ji += 1;
                (jump_times[ji - 1], Some(jump_atoms[ji - 1]))
            } else {
                gi += 1;
                (grid_at(gi - 1), None)
            };
            let dt = t - prev;
            prev = t;
            if moving {
                for (o, b) in inc.iter_mut().zip(&drift) {
                    *o = b * dt;
                }
                if diffusive {
                    for zi in z.iter_mut() {
                        *zi = rng.sample(StandardNormal);
                    }
                    let s = noise_scale * dt.sqrt();
                    for i in 0..d {
                        inc[i] += s * dot(&self.diffusion_sqrt[i * d..(i + 1) * d], &z);
                    }
                }
                builder.linear_by(t, &inc);
            } else {
                builder.hold_to(t);
            }
            if let Some(idx) = jump {
                let size: Vec<f64> = self.jumps.atoms[idx].size.iter().map(|x| eps * x).collect();
                builder.jump(&size);
            }
        }
        builder.build()
    }

    /// Characteristics of `X^ε` for the truncation `h_b(x) = x 1{|x| <= b}`.
    ///
    /// `B^ε_t = t (b^ε + ∫ h_b(y) ν^ε(dy) - Σ_{compensated} λ_i x_i)`, which
    /// with compensation and `b = 1` is `t (b^ε + ∫_{1<|x|<=1/ε} x ν(dx))`.
    /// `b = +∞` gives the canonical decomposition of the special
    /// semimartingale.
    pub fn characteristics(&self, eps: f64, trunc_b: f64) -> Result<CharTriplet> {
        Self::check_eps(eps)?;
        if !(trunc_b > 0.0) {
            return Err(domain("truncation level must be positive"));
        }
        let scaled = self.jumps.scaled(eps);
        let mut slope: Vec<f64> = self
            .drift
            .at(eps)
            .iter()
            .zip(self.compensator_drift())
            .map(|(b, c)| b + c)
            .collect();
        for a in scaled.atoms.iter().filter(|a| norm(&a.size) <= trunc_b) {
            for (s, y) in slope.iter_mut().zip(&a.size) {
                *s += a.intensity * y;
            }
        }
        Ok(CharTriplet {
            dim: self.dim,
            eps,
            trunc: trunc_b,
            drift_slope: slope,
            diffusion_rate: self.diffusion.flat.clone(),
            scaled_jumps: scaled,
        })
    }

    pub fn three_families(&self, eps: f64, t: f64, trunc_b: f64, r: f64) -> Result<ThreeFamilies> {
        if !(r > 0.0) {
            return Err(domain("r must be positive"));
        }
        if !(t >= 0.0) {
            return Err(domain("t must be nonnegative"));
        }
        let ch = self.characteristics(eps, trunc_b)?;
        let exp_jump_integral = eps
            * t
            * ch
                .scaled_jumps
                .atoms
                .iter()
                .map(|a| a.intensity * (norm(&a.size) / (eps * r)).max(1.0).exp())
                .sum::<f64>();
        Ok(ThreeFamilies {
            drift_variation: t * norm(&ch.drift_slope),
            diffusion_over_eps: t * self.diffusion.op_norm(),
            exp_jump_integral,
        })
    }

    /// `Ξ(X^ε)_t = |V(B^ε)|_t + ε^{-1}|⟨M^c⟩|_t + ε^{-1} ∫ e^{2C|x|/ε}|x|² ν^ε(dx,[0,t])`,
    /// with `B^ε` from the canonical (untruncated) decomposition.
    pub fn xi_process(&self, eps: f64, t: f64, lip_c: f64) -> Result<f64> {
        if !(lip_c > 0.0) {
            return Err(domain("Lipschitz constant must be positive"));
        }
        if !(t >= 0.0) {
            return Err(domain("t must be nonnegative"));
        }
        let ch = self.characteristics(eps, f64::INFINITY)?;
        let jump_term: f64 = ch
            .scaled_jumps
            .atoms
            .iter()
            .map(|a| {
                let s = norm(&a.size);
                a.intensity * (2.0 * lip_c * s / eps).exp() * s * s
            })
            .sum();
        Ok(t * norm(&ch.drift_slope) + t * self.diffusion.op_norm() + t * jump_term / eps)
    }

    /// `Λ(θ) = log E exp⟨θ, X^1_1⟩` with the small-noise limit drift.
    pub fn cumulant(&self, theta: &[f64]) -> f64 {
        let b = self.drift.limit();
        let mut v = dot(theta, &b) + 0.5 * self.diffusion.quad(theta);
        for a in &self.jumps.atoms {
            let s = dot(theta, &a.size);
            let comp = if self.is_compensated(a) { s } else { 0.0 };
            v += a.intensity * (s.exp_m1() - comp);
        }
        v
    }

    /// `∇Λ(θ)` and the row-major Hessian.
    pub fn cumulant_derivatives(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut grad = self.drift.limit();
        let sig = &self.diffusion.flat;
        for i in 0..d {
            grad[i] += dot(&sig[i * d..(i + 1) * d], theta);
        }
        let mut hess = sig.clone();
        for a in &self.jumps.atoms {
            let e = dot(theta, &a.size).exp();
            let c = if self.is_compensated(a) { 1.0 } else { 0.0 };
            for i in 0..d {
                grad[i] += a.intensity * a.size[i] * (e - c);
                for j in 0..d {
                    hess[i * d + j] += a.intensity * e * a.size[i] * a.size[j];
                }
            }
        }
        (grad, hess)
    }

    /// `Λ'(0)`: the zero-cost velocity of the noise.
    pub fn mean_velocity(&self) -> Vec<f64> {
        self.cumulant_derivatives(&vec![0.0; self.dim]).0
    }

    pub fn legendre(&self, z: &[f64]) -> Result<ExtReal> {
        self.legendre_with(z, LegendreOptions::default())
    }

    /// `Λ*(z) = sup_θ (⟨θ, z⟩ - Λ(θ))` by damped Newton ascent from `θ = 0`.
    ///
    /// Returns `Infinite` once the objective passes `divergence_level`.
    pub fn legendre_with(&self, z: &[f64], opts: LegendreOptions) -> Result<ExtReal> {
        if z.len() != self.dim {
            return Err(LdpError::DimensionMismatch {
                what: "legendre argument",
                expected: self.dim,
                found: z.len(),
            });
        }
        let d = self.dim;
        let objective = |th: &[f64]| dot(th, z) - self.cumulant(th);
        let mut theta = vec![0.0; d];
        let mut value = 0.0;
        let tol = opts.grad_tol * (1.0 + norm(z));
        for _ in 0..opts.max_iter {
            let (g_lam, hess) = self.cumulant_derivatives(&theta);
            let grad: Vec<f64> = z.iter().zip(&g_lam).map(|(a, b)| a - b).collect();
            let gnorm = norm(&grad);
            if gnorm <= tol {
                return Ok(ExtReal::Finite(value.max(0.0)));
            }
            let trace: f64 = (0..d).map(|i| hess[i * d + i]).sum();
            let mu = 1e-12 * trace.max(1.0);
            let dir = solve_damped(&hess, &grad, mu).unwrap_or_else(|| grad.clone());
            let slope = dot(&grad, &dir);
            let mut step = 1.0;
            let mut accepted = false;
            let mut trial = vec![0.0; d];
            for _ in 0..80 {
                for i in 0..d {
                    trial[i] = theta[i] + step * dir[i];
                }
                if trial == theta {
                    break;
                }
                let v = objective(&trial);
                if v.is_finite() && v >= value + 1e-4 * step * slope {
                    theta.copy_from_slice(&trial);
                    value = v;
                    accepted = true;
                    break;
                }
                if v.is_finite() && v > value && step < 1e-12 {
                    theta.copy_from_slice(&trial);
                    value = v;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            // Full steps that keep paying off mean a near-flat direction
            // (typically z outside the support): extrapolate along it.
            if accepted && step == 1.0 {
                for _ in 0..64 {
                    step *= 2.0;
                    for i in 0..d {
                        trial[i] = theta[i] + step * 0.5 * dir[i];
                    }
                    let v = objective(&trial);
                    if !(v.is_finite() && v > value) {
                        break;
                    }
                    theta.copy_from_slice(&trial);
                    value = v;
                    if value > opts.divergence_level {
                        break;
                    }
                }
            }
            if value > opts.divergence_level {
                return Ok(ExtReal::Infinite);
            }
            if !accepted {
                // No ascent possible at working precision.
                if gnorm <= 1e-7 * (1.0 + norm(z)) {
                    return Ok(ExtReal::Finite(value.max(0.0)));
                }
                return Err(LdpError::NonConvergence {
                    solver: "legendre",
                    iterations: opts.max_iter,
                    last_iterate: theta,
                });
            }
        }
        Err(LdpError::NonConvergence {
            solver: "legendre",
            iterations: opts.max_iter,
            last_iterate: theta,
        })
    }
}

//! Monte Carlo estimates of `ε log P(event)`, closed-form baselines, and
//! empirical tables for tightness statistics, the purely discontinuous
//! martingale concentration bound, threshold stopping times and stochastic
//! integrals against a catalog of bounded integrands.
//!
//! Sampling is split into blocks of `block_size` paths. Block `b` of
//! series `s` draws from `ChaCha8(seed)` on stream `(s << 32) | b`, so
//! results do not depend on the number of workers.

use ldp_core::{
    merged_breakpoints, solve_sde, Atom, CadlagPath, DriftRule, JumpMeasure, LevyTriplet, ModulusOptions, PathEvent,
    SdeProblem, VectorField,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::stats::{binomial_sigma, clopper_pearson, normal_tail, poisson_tail, quantile, wls_intercept};

/// Which process an event or statistic reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    X,
    U,
    Y,
    /// `(X, U, Y)` stacked; coordinates index the concatenation.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub event: PathEvent,
    pub target: Target,
}

impl EventSpec {
    pub fn needs_solution(&self) -> bool {
        matches!(self.target, Target::Y | Target::Joint)
    }

    pub fn holds(&self, x: &CadlagPath, u: &CadlagPath, y: Option<&CadlagPath>) -> LabResult<bool> {
        let missing = || LabError::Config("event target needs the solved path".into());
        let ok = match self.target {
            Target::X => self.event.holds(x)?,
            Target::U => self.event.holds(u)?,
            Target::Y => self.event.holds(y.ok_or_else(missing)?)?,
            Target::Joint => {
                let y = y.ok_or_else(missing)?;
                self.event.holds(&CadlagPath::stack(&[x, u, y])?)?
            }
        };
        Ok(ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    /// Brownian sampling grid of the noise.
    pub noise_step: f64,
    /// Refinement step of the Euler solver.
    pub solver_step: f64,
    pub block_size: usize,
    pub workers: usize,
}

impl McOptions {
    pub fn for_horizon(horizon: f64) -> Self {
        Self {
            noise_step: 1e-2 * horizon,
            solver_step: 1e-2 * horizon,
            block_size: 10_000,
            workers: 1,
        }
    }
}

fn block_rng(seed: u64, series: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((series << 32) | block);
    rng
}

/// Runs `f(rng, count)` on every block and returns block results in order.
fn run_blocks<A, F>(n: u64, seed: u64, series: u64, opts: &McOptions, f: F) -> LabResult<Vec<A>>
where
    A: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> LabResult<A> + Sync,
{
    let size = opts.block_size.max(1) as u64;
    let blocks = n.div_ceil(size);
    let job = |b: u64| {
        let mut rng = block_rng(seed, series, b);
        f(&mut rng, size.min(n - b * size))
    };
    if opts.workers <= 1 {
        return (0..blocks).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| LabError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..blocks).into_par_iter().map(job).collect())
}

fn check_eps_list(eps_list: &[f64]) -> LabResult<()> {
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(LabError::Config("eps values must lie in (0, 1]".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::Config("eps list must be strictly decreasing".into()));
    }
    Ok(())
}

fn solve(field: &VectorField, u: &CadlagPath, x: CadlagPath, step: f64) -> LabResult<CadlagPath> {
    Ok(solve_sde(&SdeProblem::new(field.clone(), u.clone(), x, step)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEntry {
    pub eps: f64,
    pub samples: Option<u64>,
    pub hits: Option<u64>,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `ε ln p̂`, absent when `p̂ = 0`.
    pub eps_log_p: Option<f64>,
}

impl RateEntry {
    fn from_counts(eps: f64, hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        let (lo, hi) = clopper_pearson(hits, n, 0.95);
        Self {
            eps,
            samples: Some(n),
            hits: Some(hits),
            p_hat: p,
            ci_low: lo,
            ci_high: hi,
            eps_log_p: (hits > 0).then(|| eps * p.ln()),
        }
    }

    fn exact(eps: f64, p: f64) -> Self {
        Self {
            eps,
            samples: None,
            hits: None,
            p_hat: p,
            ci_low: p,
            ci_high: p,
            eps_log_p: (p > 0.0).then(|| eps * p.ln()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCurve {
    pub method: String,
    pub entries: Vec<RateEntry>,
    /// Weighted linear extrapolation of `ε ln p` to `ε = 0`; present with at
    /// least three usable entries.
    pub fitted_limit: Option<f64>,
}

/// Weights `1/σ²` with `σ = ε (ln hi - ln lo) / (2 * 1.96)`; uniform for
/// exact entries.
fn fit_limit(entries: &[RateEntry]) -> Option<f64> {
    let pts: Vec<(f64, f64, f64)> = entries
        .iter()
        .filter_map(|e| {
            let y = e.eps_log_p?;
            if e.samples.is_none() {
                return Some((e.eps, y, 1.0));
            }
            if !(e.ci_low > 0.0) {
                return None;
            }
            let sigma = e.eps * (e.ci_high.ln() - e.ci_low.ln()) / (2.0 * 1.96);
            (sigma > 0.0).then(|| (e.eps, y, 1.0 / (sigma * sigma)))
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    wls_intercept(&pts)
}

/// Monte Carlo estimate of `P(event)` for each `ε`: simulate `X^ε`, solve
/// `Y = U + F(Y_-)·X^ε` when needed, and count.
#[allow(clippy::too_many_arguments)]
pub fn rate_curve(
    triplet: &LevyTriplet,
    field: &VectorField,
    u: &CadlagPath,
    event: &EventSpec,
    eps_list: &[f64],
    n: u64,
    seed: u64,
    opts: &McOptions,
) -> LabResult<RateCurve> {
    if n < 1000 {
        return Err(LabError::Config("rate curves need at least 1000 samples per eps".into()));
    }
    check_eps_list(eps_list)?;
    let horizon = u.horizon();
    let mut entries = Vec::with_capacity(eps_list.len());
    for (i, &eps) in eps_list.iter().enumerate() {
        let blocks = run_blocks(n, seed, i as u64, opts, |rng, count| {
            let mut hits = 0u64;
            for _ in 0..count {
                let x = triplet.simulate_with(eps, horizon, opts.noise_step, rng)?;
                let y = if event.needs_solution() {
                    Some(solve(field, u, x.clone(), opts.solver_step)?)
                } else {
                    None
                };
                if event.holds(&x, u, y.as_ref())? {
                    hits += 1;
                }
            }
            Ok(hits)
        })?;
        entries.push(RateEntry::from_counts(eps, blocks.iter().sum(), n));
    }
    if entries.iter().all(|e| e.hits == Some(0)) {
        return Err(LabError::Degenerate(
            "event never observed at any eps; use larger eps or more samples".into(),
        ));
    }
    Ok(RateCurve {
        method: "monte_carlo".into(),
        fitted_limit: fit_limit(&entries),
        entries,
    })
}

/// Closed-form terminal-tail baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ExactFamily {
    /// `Y_T = sigma √ε W_T`.
    Gaussian { sigma: f64, horizon: f64 },
    /// `Y_T = ε jump N`, `N ~ Poisson(lambda T / ε)`.
    Poisson { lambda: f64, jump: f64, horizon: f64 },
}

impl ExactFamily {
    /// `P(Y_T >= a)` at noise level `ε`.
    pub fn probability(&self, a: f64, eps: f64) -> f64 {
        match *self {
            ExactFamily::Gaussian { sigma, horizon } => normal_tail(a / (sigma * (eps * horizon).sqrt())),
            ExactFamily::Poisson { lambda, jump, horizon } => {
                let k = (a / (eps * jump) - 1e-9).ceil().max(0.0) as u64;
                poisson_tail(k, lambda * horizon / eps)
            }
        }
    }

    /// `inf { I(y) : y_T >= a }`.
    pub fn limit_rate(&self, a: f64) -> f64 {
        match *self {
            ExactFamily::Gaussian { sigma, horizon } => {
                let a = a.max(0.0);
                a * a / (2.0 * sigma * sigma * horizon)
            }
            ExactFamily::Poisson { lambda, jump, horizon } => {
                let v = a / (jump * horizon);
                if v <= lambda {
                    0.0
                } else {
                    horizon * (v * (v / lambda).ln() - v + lambda)
                }
            }
        }
    }
}

pub fn exact_tail_curve(family: &ExactFamily, a: f64, eps_list: &[f64]) -> LabResult<RateCurve> {
    check_eps_list(eps_list)?;
    let entries: Vec<RateEntry> = eps_list.iter().map(|&e| RateEntry::exact(e, family.probability(a, e))).collect();
    let method = match family {
        ExactFamily::Gaussian { .. } => "exact_gaussian",
        ExactFamily::Poisson { .. } => "exact_poisson",
    };
    Ok(RateCurve {
        method: method.into(),
        fitted_limit: fit_limit(&entries),
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statistic {
    SupNorm,
    SkorokhodModulus { rho: f64 },
    MaxJump,
    CountLargeJumps { r: f64 },
    QuadraticVariation,
}

impl Statistic {
    pub fn evaluate(&self, path: &CadlagPath) -> LabResult<f64> {
        let t = path.horizon();
        Ok(match *self {
            Statistic::SupNorm => path.sup_norm(t)?,
            Statistic::SkorokhodModulus { rho } => path.skorokhod_modulus(t, rho, ModulusOptions::default())?.value,
            Statistic::MaxJump => path.jump_stats(t, f64::MIN_POSITIVE)?.max_jump,
            Statistic::CountLargeJumps { r } => path.jump_stats(t, r)?.count_large as f64,
            Statistic::QuadraticVariation => path.quadratic_variation(t)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceedanceRow {
    pub eps: f64,
    pub a: f64,
    pub samples: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub eps_log_p: Option<f64>,
}

fn exceedance_rows(eps: f64, a_list: &[f64], counts: &[u64], n: u64) -> Vec<ExceedanceRow> {
    a_list
        .iter()
        .zip(counts)
        .map(|(&a, &hits)| {
            let p = hits as f64 / n as f64;
            ExceedanceRow {
                eps,
                a,
                samples: n,
                hits,
                p_hat: p,
                eps_log_p: (hits > 0).then(|| eps * p.ln()),
            }
        })
        .collect()
}

fn add_counts(blocks: Vec<Vec<u64>>, len: usize) -> Vec<u64> {
    blocks.into_iter().fold(vec![0; len], |mut acc, b| {
        acc.iter_mut().zip(b).for_each(|(a, c)| *a += c);
        acc
    })
}

/// `P(statistic >= a)` on `X^ε` (or on the solution when `on_solution`).
#[allow(clippy::too_many_arguments)]
pub fn tightness_probe(
    statistic: &Statistic,
    on_solution: bool,
    triplet: &LevyTriplet,
    field: &VectorField,
    u: &CadlagPath,
    eps_list: &[f64],
    a_list: &[f64],
    n: u64,
    seed: u64,
    opts: &McOptions,
) -> LabResult<Vec<ExceedanceRow>> {
    check_eps_list(eps_list)?;
    let horizon = u.horizon();
    let mut rows = Vec::new();
    for (i, &eps) in eps_list.iter().enumerate() {
        let blocks = run_blocks(n, seed, i as u64, opts, |rng, count| {
            let mut hits = vec![0u64; a_list.len()];
            for _ in 0..count {
                let x = triplet.simulate_with(eps, horizon, opts.noise_step, rng)?;
                let path = if on_solution {
                    solve(field, u, x, opts.solver_step)?
                } else {
                    x
                };
                let s = statistic.evaluate(&path)?;
                for (h, a) in hits.iter_mut().zip(a_list) {
                    if s >= *a {
                        *h += 1;
                    }
                }
            }
            Ok(hits)
        })?;
        rows.extend(exceedance_rows(eps, a_list, &add_counts(blocks, a_list.len()), n));
    }
    Ok(rows)
}

/// `sup_{0 < |x| <= 1/2} |x - ln(1 + x)| / x²`, maximized numerically.
pub fn concentration_constant() -> f64 {
    let g = |x: f64| (x - x.ln_1p()).abs() / (x * x);
    let n = 20_000;
    let (mut best_x, mut best) = (0.5, g(0.5));
    for i in 0..=n {
        let x = -0.5 + i as f64 / n as f64;
        if x.abs() > 1e-6 && g(x) > best {
            best = g(x);
            best_x = x;
        }
    }
    // Golden-section refinement on the bracketing cell, clipped to the domain.
    let h = 1.0 / n as f64;
    let (mut lo, mut hi) = ((best_x - h).max(-0.5), (best_x + h).min(0.5));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let (c, d) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if g(c) >= g(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    best.max(g(0.5 * (lo + hi))).max(g(-0.5))
}

/// `2 exp(-θ a + C θ² b)` with `θ = min(1/(2A), a/(2 C b))`.
pub fn concentration_bound(a: f64, b: f64, max_jump: f64, c: f64) -> f64 {
    let theta = (1.0 / (2.0 * max_jump)).min(a / (2.0 * c * b));
    2.0 * (-theta * a + c * theta * theta * b).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub a: f64,
    pub b: f64,
    pub samples: u64,
    pub hits: u64,
    pub empirical: f64,
    pub bound: f64,
    pub sigma: f64,
    pub pass: bool,
}

/// The default martingale: jumps `±1` with intensity `1/2` each.
pub fn default_martingale_jumps() -> JumpMeasure {
    JumpMeasure::new(
        1,
        vec![
            Atom { size: vec![1.0], intensity: 0.5 },
            Atom { size: vec![-1.0], intensity: 0.5 },
        ],
    )
    .expect("valid atoms")
}

/// Frequency of `{sup_{s<=t} |M_s| >= a, Σ_{s<=t} |ΔM_s|² < b}` for the
/// compensated martingale with jumps `ε x_i` at rate `λ_i / ε`, against the
/// exponential bound.
#[allow(clippy::too_many_arguments)]
pub fn pure_disc_bound_check(
    jumps: &JumpMeasure,
    eps: f64,
    t: f64,
    a_list: &[f64],
    b_list: &[f64],
    n: u64,
    seed: u64,
    opts: &McOptions,
) -> LabResult<Vec<BoundRow>> {
    if jumps.is_empty() {
        return Err(LabError::Config("martingale needs at least one atom".into()));
    }
    if a_list.iter().chain(b_list).any(|v| !(*v > 0.0)) {
        return Err(LabError::Config("a and b values must be positive".into()));
    }
    let d = jumps.dim();
    let mut drift = vec![0.0; d];
    for atom in jumps.atoms() {
        for (b, x) in drift.iter_mut().zip(&atom.size) {
            *b -= atom.intensity * x;
        }
    }
    let triplet = LevyTriplet::new(DriftRule::Constant(drift), &vec![0.0; d * d], jumps.clone(), false)?;
    let cells: Vec<(f64, f64)> = a_list.iter().flat_map(|&a| b_list.iter().map(move |&b| (a, b))).collect();
    let blocks = run_blocks(n, seed, 0, opts, |rng, count| {
        let mut hits = vec![0u64; cells.len()];
        for _ in 0..count {
            let m = triplet.simulate_with(eps, t, opts.noise_step, rng)?;
            let sup = m.sup_norm(t)?;
            let sq: f64 = (1..m.num_breakpoints()).map(|k| m.jump_norm(k).powi(2)).sum();
            for (h, (a, b)) in hits.iter_mut().zip(&cells) {
                if sup >= *a && sq < *b {
                    *h += 1;
                }
            }
        }
        Ok(hits)
    })?;
    let counts = add_counts(blocks, cells.len());
    let c = concentration_constant();
    let max_jump = eps * jumps.max_size();
    Ok(cells
        .iter()
        .zip(counts)
        .map(|(&(a, b), hits)| {
            let bound = concentration_bound(a, b, max_jump, c);
            let empirical = hits as f64 / n as f64;
            let sigma = binomial_sigma(bound.min(1.0), n);
            BoundRow {
                a,
                b,
                samples: n,
                hits,
                empirical,
                bound,
                sigma,
                pass: empirical <= bound + 3.0 * sigma,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlominskiRow {
    pub eps: f64,
    pub p: f64,
    pub samples: u64,
    pub min_gap_min: f64,
    pub min_gap_q01: f64,
    pub min_gap_q05: f64,
    pub min_gap_median: f64,
    pub max_oscillation_mean: f64,
    pub max_oscillation_max: f64,
}

/// Smallest gap between consecutive threshold crossings up to `end` (or
/// `end` itself when nothing crosses), and the largest oscillation over the
/// induced intervals.
pub fn crossing_summary(path: &CadlagPath, threshold: f64, end: f64) -> LabResult<(f64, f64)> {
    let times = path.stopping_times(&[threshold], end)?;
    let crossings = times.len() - 2;
    let min_gap = if crossings == 0 {
        end.min(path.horizon())
    } else {
        times[..=crossings]
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    };
    let mut osc: f64 = 0.0;
    for w in times.windows(2) {
        osc = osc.max(path.interval_oscillation(w[0], w[1])?);
    }
    Ok((min_gap, osc))
}

/// Distribution of the minimal stopping-time gap for thresholds `a ≡ 1/p`.
pub fn slominski_probe(
    triplet: &LevyTriplet,
    eps_list: &[f64],
    p_list: &[f64],
    n: u64,
    horizon: f64,
    seed: u64,
    opts: &McOptions,
) -> LabResult<Vec<SlominskiRow>> {
    check_eps_list(eps_list)?;
    if p_list.iter().any(|p| !(*p > 0.0)) {
        return Err(LabError::Config("p values must be positive".into()));
    }
    let mut rows = Vec::new();
    for (i, &eps) in eps_list.iter().enumerate() {
        let blocks = run_blocks(n, seed, i as u64, opts, |rng, count| {
            let mut out = vec![Vec::with_capacity(count as usize); p_list.len()];
            for _ in 0..count {
                let x = triplet.simulate_with(eps, horizon, opts.noise_step, rng)?;
                for (slot, p) in out.iter_mut().zip(p_list) {
                    slot.push(crossing_summary(&x, 1.0 / p, horizon)?);
                }
            }
            Ok(out)
        })?;
        for (j, &p) in p_list.iter().enumerate() {
            let mut gaps: Vec<f64> = blocks.iter().flat_map(|b| b[j].iter().map(|s| s.0)).collect();
            let oscs: Vec<f64> = blocks.iter().flat_map(|b| b[j].iter().map(|s| s.1)).collect();
            gaps.sort_by(f64::total_cmp);
            rows.push(SlominskiRow {
                eps,
                p,
                samples: n,
                min_gap_min: gaps[0],
                min_gap_q01: quantile(&gaps, 0.01),
                min_gap_q05: quantile(&gaps, 0.05),
                min_gap_median: quantile(&gaps, 0.5),
                max_oscillation_mean: oscs.iter().sum::<f64>() / oscs.len() as f64,
                max_oscillation_max: oscs.iter().cloned().fold(0.0, f64::max),
            });
        }
    }
    Ok(rows)
}

/// Predictable integrands bounded by one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Integrand {
    /// `H ≡ sign`, with `sign` in `[-1, 1]`.
    Constant { sign: f64 },
    /// `H = +1` on `[0, t_1]`, then alternating sign after each listed time.
    SignFlip { times: Vec<f64> },
    /// `H_s = sign(Y_{s-})` of the first solution coordinate (`+1` at zero).
    FeedbackSign,
}

impl Integrand {
    pub fn label(&self) -> String {
        match self {
            Integrand::Constant { sign } => format!("constant({sign})"),
            Integrand::SignFlip { times } => {
                let t: Vec<String> = times.iter().map(|t| t.to_string()).collect();
                format!("sign_flip({})", t.join(";"))
            }
            Integrand::FeedbackSign => "feedback_sign".into(),
        }
    }

    fn check(&self) -> LabResult<()> {
        match self {
            Integrand::Constant { sign } if !(sign.abs() <= 1.0) => {
                Err(LabError::Config("constant integrand must lie in [-1, 1]".into()))
            }
            Integrand::SignFlip { times } if times.windows(2).any(|w| w[1] <= w[0]) => {
                Err(LabError::Config("sign flip times must increase".into()))
            }
            _ => Ok(()),
        }
    }

    /// Value on `(t, ·]` given flips strictly before (`strict`) or up to `t`.
    fn value(&self, t: f64, strict: bool, y: Option<f64>) -> f64 {
        match self {
            Integrand::Constant { sign } => *sign,
            Integrand::SignFlip { times } => {
                let flips = times.iter().filter(|&&s| if strict { s < t } else { s <= t }).count();
                if flips % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Integrand::FeedbackSign => {
                if y.unwrap_or(0.0) < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// `sup_t |(H · x)_t|` with left-point sums on the breakpoint grid.
pub fn integral_sup(h: &Integrand, x: &CadlagPath, y: Option<&CadlagPath>) -> f64 {
    let mut times = match y {
        Some(y) => merged_breakpoints(&[x, y]),
        None => x.breakpoints().to_vec(),
    };
    if let Integrand::SignFlip { times: flips } = h {
        times.extend(flips.iter().copied().filter(|&s| s > 0.0 && s < x.horizon()));
        times.sort_by(f64::total_cmp);
        times.dedup();
    }
    let d = x.dim();
    let (xl, xr) = x.sample_sweep(&times);
    let ys = y.map(|y| {
        let dy = y.dim();
        let (l, r) = y.sample_sweep(&times);
        (l, r, dy)
    });
    let y_at = |k: usize, left: bool| ys.as_ref().map(|(l, r, dy)| if left { l[k * dy] } else { r[k * dy] });
    let mut integral = vec![0.0; d];
    let mut sup: f64 = 0.0;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    for k in 0..times.len() - 1 {
        let hv = h.value(times[k], false, y_at(k, false));
        for i in 0..d {
            integral[i] += hv * (xl[(k + 1) * d + i] - xr[k * d + i]);
        }
        sup = sup.max(norm(&integral));
        let hj = h.value(times[k + 1], true, y_at(k + 1, true));
        for i in 0..d {
            integral[i] += hj * (xr[(k + 1) * d + i] - xl[(k + 1) * d + i]);
        }
        sup = sup.max(norm(&integral));
    }
    sup
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UetRow {
    pub integrand: String,
    pub eps: f64,
    pub a: f64,
    pub samples: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub eps_log_p: Option<f64>,
}

/// `P(sup_t |(H · X^ε)_t| >= a)` for each integrand of the catalog.
#[allow(clippy::too_many_arguments)]
pub fn uet_probe(
    triplet: &LevyTriplet,
    field: &VectorField,
    u: &CadlagPath,
    integrands: &[Integrand],
    eps_list: &[f64],
    a_list: &[f64],
    n: u64,
    seed: u64,
    opts: &McOptions,
) -> LabResult<Vec<UetRow>> {
    check_eps_list(eps_list)?;
    integrands.iter().try_for_each(Integrand::check)?;
    let feedback = integrands.iter().any(|h| matches!(h, Integrand::FeedbackSign));
    let horizon = u.horizon();
    let cells = integrands.len() * a_list.len();
    let mut rows = Vec::new();
    for (i, &eps) in eps_list.iter().enumerate() {
        let blocks = run_blocks(n, seed, i as u64, opts, |rng, count| {
            let mut hits = vec![0u64; cells];
            for _ in 0..count {
                let x = triplet.simulate_with(eps, horizon, opts.noise_step, rng)?;
                let y = if feedback {
                    Some(solve(field, u, x.clone(), opts.solver_step)?)
                } else {
                    None
                };
                for (j, h) in integrands.iter().enumerate() {
                    let s = integral_sup(h, &x, y.as_ref());
                    for (k, a) in a_list.iter().enumerate() {
                        if s >= *a {
                            hits[j * a_list.len() + k] += 1;
                        }
                    }
                }
            }
            Ok(hits)
        })?;
        let counts = add_counts(blocks, cells);
        for (j, h) in integrands.iter().enumerate() {
            for (k, &a) in a_list.iter().enumerate() {
                let c = counts[j * a_list.len() + k];
                let p = c as f64 / n as f64;
                rows.push(UetRow {
                    integrand: h.label(),
                    eps,
                    a,
                    samples: n,
                    hits: c,
                    p_hat: p,
                    eps_log_p: (c > 0).then(|| eps * p.ln()),
                });
            }
        }
    }
    Ok(rows)
}

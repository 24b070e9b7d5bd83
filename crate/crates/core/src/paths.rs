//! Piecewise càdlàg paths on `[0, T]` and the path statistics built on them.
//!
//! A [`CadlagPath`] is a finite list of breakpoints `0 = t_0 < ... < t_K = T`
//! carrying a right value and a left limit at each breakpoint, with each
//! segment `[t_k, t_{k+1})` either constant or linear. The class is closed
//! under every operation in this crate, and variation, oscillation and
//! threshold crossings are computed exactly on it.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::mem;



use crate::error::{domain, invalid, LdpError, Result};
use crate::ext::ExtReal;

/// Interpolation rule on a segment `[t_k, t_{k+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentMode {
    /// Equal to the right value at `t_k` throughout.
    Constant,
    /// Interpolates the right value at `t_k` to the left limit at `t_{k+1}`.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    left: Vec<f64>,
    modes: Vec<SegmentMode>,
}

/// Jump statistics up to a time: largest jump, and count and absolute sum of
/// jumps strictly larger than the cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpStats {
    pub max_jump: f64,
    pub count_large: usize,
    pub sum_large: f64,
}

/// Result of a partition-modulus computation.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionModulus {
    pub horizon: f64,
    pub rho: f64,
    pub value: f64,
    /// Cut times `0 = t_0 < ... < t_k = horizon` of an optimal partition.
    pub cuts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModulusOptions {
    /// Number of points of the uniform refinement grid merged with the
    /// breakpoints to form the candidate cut set.
    pub grid_points: usize,
}

impl Default for ModulusOptions {
    fn default() -> Self {
        Self { grid_points: 256 }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl CadlagPath {
    /// Builds a path from raw parts, checking every structural invariant.
    ///
    /// `values` and `left_values` are row-major, one `dim`-vector per
    /// breakpoint; `modes` has one entry per segment.
    pub fn new(
        dim: usize,
        times: Vec<f64>,
        values: Vec<f64>,
        left_values: Vec<f64>,
        modes: Vec<SegmentMode>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("path", "dimension must be positive"));
        }
        let k = times.len();
        if k < 2 {
            return Err(invalid("path", "need at least the breakpoints 0 and T"));
        }
        if times[0] != 0.0 {
            return Err(invalid("path", "first breakpoint must be 0"));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("path", "breakpoints must be finite and strictly increasing"));
        }
        if values.len() != k * dim || left_values.len() != k * dim {
            return Err(LdpError::DimensionMismatch {
                what: "path values",
                expected: k * dim,
                found: values.len().min(left_values.len()),
            });
        }
        if modes.len() != k - 1 {
            return Err(LdpError::DimensionMismatch {
                what: "segment modes",
                expected: k - 1,
                found: modes.len(),
            });
        }
        if values.iter().chain(&left_values).any(|v| !v.is_finite()) {
            return Err(invalid("path", "values must be finite"));
        }
        if values[..dim] != left_values[..dim] {
            return Err(invalid("path", "left value at time 0 must equal the value (no jump at 0)"));
        }
        for (s, mode) in modes.iter().enumerate() {
            if *mode == SegmentMode::Constant
                && values[s * dim..(s + 1) * dim] != left_values[(s + 1) * dim..(s + 2) * dim]
            {
                return Err(invalid(
                    "path",
                    alloc::format!("constant segment {s} does not end at its own value"),
                ));
            }
        }
        Ok(Self {
            dim,
            times,
            values,
            left: left_values,
            modes,
        })
    }

    /// The path identically equal to `value` on `[0, horizon]`.
    pub fn constant(horizon: f64, value: &[f64]) -> Result<Self> {
        PathBuilder::new(value).hold_to(horizon).build()
    }

    pub fn zero(dim: usize, horizon: f64) -> Result<Self> {
        Self::constant(horizon, &vec![0.0; dim])
    }

    /// Straight line from `start` at 0 to `end` at `horizon`.
    pub fn linear(horizon: f64, start: &[f64], end: &[f64]) -> Result<Self> {
        PathBuilder::new(start).linear_to(horizon, end).build()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("path has breakpoints")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.times
    }

    pub fn num_breakpoints(&self) -> usize {
        self.times.len()
    }

    pub fn values_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn left_values_flat(&self) -> &[f64] {
        &self.left
    }

    pub fn modes(&self) -> &[SegmentMode] {
        &self.modes
    }

    /// Right value at breakpoint `k`.
    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Left limit at breakpoint `k`.
    pub fn left_value(&self, k: usize) -> &[f64] {
        &self.left[k * self.dim..(k + 1) * self.dim]
    }

    /// Euclidean size of the jump at breakpoint `k`.
    pub fn jump_norm(&self, k: usize) -> f64 {
        dist(self.value(k), self.left_value(k))
    }

    /// Jump vector at breakpoint `k`.
    pub fn jump(&self, k: usize) -> Vec<f64> {
        self.value(k)
            .iter()
            .zip(self.left_value(k))
            .map(|(r, l)| r - l)
            .collect()
    }

    pub fn has_jumps(&self) -> bool {
        (1..self.times.len()).any(|k| self.value(k) != self.left_value(k))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(domain(alloc::format!(
                "time {t} outside [0, {}]",
                self.horizon()
            )));
        }
        Ok(())
    }

    /// Largest `k` with `t_k <= t`.
    fn locate(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    fn interp_into(&self, seg: usize, t: f64, out: &mut [f64]) {
        let d = self.dim;
        let start = &self.values[seg * d..(seg + 1) * d];
        match self.modes[seg] {
            SegmentMode::Constant => out.copy_from_slice(start),
            SegmentMode::Linear => {
                let end = &self.left[(seg + 1) * d..(seg + 2) * d];
                let (t0, t1) = (self.times[seg], self.times[seg + 1]);
                let w = (t - t0) / (t1 - t0);
                for ((o, a), b) in out.iter_mut().zip(start).zip(end) {
                    *o = a + w * (b - a);
                }
            }
        }
    }

    /// Writes `x(t)` into `out`. `t` is clamped to `[0, T]`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let t = t.clamp(0.0, self.horizon());
        let k = self.locate(t);
        if self.times[k] == t {
            out.copy_from_slice(self.value(k));
        } else {
            self.interp_into(k, t, out);
        }
    }

    /// Writes `x(t-)` into `out` (with `x(0-) = x(0)`).
    pub fn eval_left_into(&self, t: f64, out: &mut [f64]) {
        let t = t.clamp(0.0, self.horizon());
        if t == 0.0 {
            out.copy_from_slice(self.value(0));
            return;
        }
        let k = self.times.partition_point(|&s| s < t) - 1;
        if self.times[k + 1] == t {
            out.copy_from_slice(self.left_value(k + 1));
        } else {
            self.interp_into(k, t, out);
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_left(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_left_into(t, &mut out);
        out
    }

    /// Value at the horizon.
    pub fn terminal(&self) -> &[f64] {
        self.value(self.times.len() - 1)
    }

    /// Left and right values at a nondecreasing sequence of times, in one
    /// forward sweep. Returns flat `(left, right)` buffers.
    pub fn sample_sweep(&self, times: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut lefts = vec![0.0; times.len() * d];
        let mut rights = vec![0.0; times.len() * d];
        let mut k = 0;
        let last = self.times.len() - 1;
        for (i, &t) in times.iter().enumerate() {
            while k < last && self.times[k + 1] <= t {
                k += 1;
            }
            let (l, r) = (&mut lefts[i * d..(i + 1) * d], &mut rights[i * d..(i + 1) * d]);
            if self.times[k] == t {
                r.copy_from_slice(self.value(k));
                l.copy_from_slice(self.left_value(k));
            } else if k == last {
                // beyond the horizon: frozen
                r.copy_from_slice(self.value(k));
                l.copy_from_slice(self.value(k));
            } else {
                self.interp_into(k, t, r);
                l.copy_from_slice(r);
            }
        }
        (lefts, rights)
    }

    /// Mode of the segment of `self` covering `(t0, t1)`, assuming no
    /// breakpoint of `self` lies strictly inside.
    fn mode_between(&self, t0: f64, t1: f64) -> SegmentMode {
        let mid = 0.5 * (t0 + t1);
        let k = self.locate(mid).min(self.modes.len() - 1);
        self.modes[k]
    }

    /// `alpha * self + beta * other` on the merged breakpoint grid.
    pub fn linear_combination(&self, alpha: f64, other: &CadlagPath, beta: f64) -> Result<Self> {
        check_compatible(self, other)?;
        let times = merged_breakpoints(&[self, other]);
        let (la, ra) = self.sample_sweep(&times);
        let (lb, rb) = other.sample_sweep(&times);
        let comb = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect()
        };
        let values = comb(&ra, &rb);
        let mut left = comb(&la, &lb);
        let d = self.dim;
        left[..d].copy_from_slice(&values[..d]);
        let modes = segment_modes(&times, &[self, other]);
        for (s, m) in modes.iter().enumerate() {
            if *m == SegmentMode::Constant {
                let v = values[s * d..(s + 1) * d].to_vec();
                left[(s + 1) * d..(s + 2) * d].copy_from_slice(&v);
            }
        }
        Self::new(d, times, values, left, modes)
    }

    pub fn add(&self, other: &CadlagPath) -> Result<Self> {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &CadlagPath) -> Result<Self> {
        self.linear_combination(1.0, other, -1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.left.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Concatenates coordinates of paths sharing a horizon.
    pub fn stack(paths: &[&CadlagPath]) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| invalid("path stack", "no paths given"))?;
        for p in paths {
            if p.horizon() != first.horizon() {
                return Err(invalid("path stack", "horizons differ"));
            }
        }
        let times = merged_breakpoints(paths);
        let dim: usize = paths.iter().map(|p| p.dim).sum();
        let mut values = vec![0.0; times.len() * dim];
        let mut left = vec![0.0; times.len() * dim];
        let mut offset = 0;
        for p in paths {
            let (l, r) = p.sample_sweep(&times);
            for i in 0..times.len() {
                values[i * dim + offset..i * dim + offset + p.dim]
                    .copy_from_slice(&r[i * p.dim..(i + 1) * p.dim]);
                left[i * dim + offset..i * dim + offset + p.dim]
                    .copy_from_slice(&l[i * p.dim..(i + 1) * p.dim]);
            }
            offset += p.dim;
        }
        left[..dim].copy_from_slice(&values[..dim]);
        let modes = segment_modes(&times, paths);
        Self::new(dim, times, values, left, modes)
    }

    /// The coordinates `start..start + len` as a path of dimension `len`.
    pub fn project(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.dim {
            return Err(domain("coordinate block out of range"));
        }
        let pick = |flat: &[f64]| -> Vec<f64> {
            flat.chunks(self.dim)
                .flat_map(|row| row[start..start + len].iter().copied())
                .collect()
        };
        Self::new(
            len,
            self.times.clone(),
            pick(&self.values),
            pick(&self.left),
            self.modes.clone(),
        )
    }

    /// `n >= 2` samples of `x` at uniformly spaced times including 0 and T.
    pub fn uniform_samples(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let n = n.max(2);
        let horizon = self.horizon();
        let times: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { horizon } else { horizon * i as f64 / (n - 1) as f64 })
            .collect();
        let (_, right) = self.sample_sweep(&times);
        (times, right)
    }

    /// `sup_{s <= t} |x(s)|`, including left limits.
    pub fn sup_norm(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let mut best = norm(&self.eval(t));
        for k in 0..self.times.len() {
            if self.times[k] > t {
                break;
            }
            best = best.max(norm(self.value(k))).max(norm(self.left_value(k)));
        }
        Ok(best)
    }

    /// Largest jump up to `t`, and count and absolute sum of jumps of size
    /// strictly greater than `r`.
    pub fn jump_stats(&self, t: f64, r: f64) -> Result<JumpStats> {
        self.check_time(t)?;
        if !(r > 0.0) {
            return Err(domain("jump cutoff r must be positive"));
        }
        let mut stats = JumpStats {
            max_jump: 0.0,
            count_large: 0,
            sum_large: 0.0,
        };
        for k in 1..self.times.len() {
            if self.times[k] > t {
                break;
            }
            let size = self.jump_norm(k);
            stats.max_jump = stats.max_jump.max(size);
            if size > r {
                stats.count_large += 1;
                stats.sum_large += size;
            }
        }
        Ok(stats)
    }

    /// Total (Euclidean) variation on `[0, t]`.
    ///
    /// Always finite on this path class; the extended return type keeps the
    /// contract shared with the rate-function evaluators.
    pub fn variation(&self, t: f64) -> Result<ExtReal> {
        self.check_time(t)?;
        let mut total = 0.0;
        let mut buf = vec![0.0; self.dim];
        for k in 0..self.times.len() {
            let tk = self.times[k];
            if tk > t {
                break;
            }
            if k > 0 {
                total += self.jump_norm(k);
            }
            if k + 1 < self.times.len() && self.modes[k] == SegmentMode::Linear {
                if self.times[k + 1] <= t {
                    total += dist(self.left_value(k + 1), self.value(k));
                } else {
                    self.interp_into(k, t, &mut buf);
                    total += dist(&buf, self.value(k));
                }
            }
        }
        Ok(ExtReal::Finite(total))
    }

    /// Pathwise quadratic variation on `[0, t]`: squared linear-segment
    /// increments plus squared jumps.
    pub fn quadratic_variation(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let mut total = 0.0;
        let mut buf = vec![0.0; self.dim];
        for k in 0..self.times.len() {
            if self.times[k] > t {
                break;
            }
            if k > 0 {
                total += self.jump_norm(k).powi(2);
            }
            if k + 1 < self.times.len() && self.modes[k] == SegmentMode::Linear {
                if self.times[k + 1] <= t {
                    total += dist(self.left_value(k + 1), self.value(k)).powi(2);
                } else {
                    self.interp_into(k, t, &mut buf);
                    total += dist(&buf, self.value(k)).powi(2);
                }
            }
        }
        Ok(total)
    }

    /// Oscillation `sup_{s,u in [a,b)} |x(s) - x(u)|`.
    pub fn interval_oscillation(&self, a: f64, b: f64) -> Result<f64> {
        self.check_time(a)?;
        self.check_time(b)?;
        if b <= a {
            return Ok(0.0);
        }
        let mut pts: Vec<Vec<f64>> = vec![self.eval(a)];
        for k in 0..self.times.len() {
            let tk = self.times[k];
            if tk > a && tk < b {
                pts.push(self.left_value(k).to_vec());
                pts.push(self.value(k).to_vec());
            }
        }
        pts.push(self.eval_left(b));
        let mut diam: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                diam = diam.max(dist(&pts[i], &pts[j]));
            }
        }
        Ok(diam)
    }

    /// Partition modulus `w_T(x, rho)`: the infimum, over partitions
    /// `0 = t_0 < ... < t_k = T` whose intervals except the last are longer
    /// than `rho`, of the largest interval oscillation.
    ///
    /// Cuts are searched among the breakpoints merged with a uniform grid of
    /// `opts.grid_points` points; the search itself is an exact min-max
    /// dynamic program over that candidate set.
    pub fn skorokhod_modulus(
        &self,
        horizon: f64,
        rho: f64,
        opts: ModulusOptions,
    ) -> Result<PartitionModulus> {
        if !(horizon > 0.0) || horizon > self.horizon() {
            return Err(domain("modulus horizon must lie in (0, T]"));
        }
        if !(rho > 0.0) || rho >= horizon {
            return Err(domain("rho must satisfy 0 < rho < T"));
        }
        let cand = modulus_candidates(self, horizon, opts.grid_points);
        let (value, cuts) = min_max_partition(self, &cand, rho, horizon);
        Ok(PartitionModulus {
            horizon,
            rho,
            value,
            cuts,
        })
    }

    /// Threshold stopping times: `T_0 = 0`, and `T_{i+1}` is the first time
    /// after `T_i` at which `|x(t) - x(T_i)|` or `|x(t-) - x(T_i)|` reaches
    /// `a_i`. The sequence is truncated at `min(n_end, T)`, which is always
    /// the last element. Thresholds past the end of `thresholds` reuse the
    /// last one.
    pub fn stopping_times(&self, thresholds: &[f64], n_end: f64) -> Result<Vec<f64>> {
        if thresholds.is_empty() || thresholds.iter().any(|a| !(*a > 0.0)) {
            return Err(domain("thresholds must be a nonempty positive sequence"));
        }
        if !(n_end > 0.0) {
            return Err(domain("truncation time must be positive"));
        }
        let end = n_end.min(self.horizon());
        let d = self.dim;
        let mut out = vec![0.0];
        let mut current = 0.0;
        let mut anchor = self.value(0).to_vec();
        let mut buf = vec![0.0; d];
        let last = self.times.len() - 1;
        loop {
            let a = thresholds[(out.len() - 1).min(thresholds.len() - 1)];
            let mut k = self.locate(current).min(last - 1);
            let mut start = current;
            let hit = loop {
                let seg_end = self.times[k + 1];
                if self.modes[k] == SegmentMode::Linear && start < seg_end {
                    self.eval_into(start, &mut buf);
                    let w0: Vec<f64> = buf.iter().zip(&anchor).map(|(x, p)| x - p).collect();
                    let dt = seg_end - self.times[k];
                    let v: Vec<f64> = self
                        .left_value(k + 1)
                        .iter()
                        .zip(self.value(k))
                        .map(|(e, s)| (e - s) / dt)
                        .collect();
                    if let Some(tau) = first_exit(&w0, &v, a) {
                        if start + tau < seg_end {
                            break Some(start + tau);
                        }
                    }
                }
                let left_hit = dist(self.left_value(k + 1), &anchor) >= a;
                let right_hit = dist(self.value(k + 1), &anchor) >= a;
                if left_hit || right_hit {
                    break Some(seg_end);
                }
                if seg_end >= end || k + 1 == last {
                    break None;
                }
                start = seg_end;
                k += 1;
            };
            match hit {
                Some(t) if t < end => {
                    out.push(t);
                    current = t;
                    anchor = self.eval(t);
                }
                _ => {
                    out.push(end);
                    return Ok(out);
                }
            }
        }
    }

    /// Splits off the jumps larger than `b`: returns `(large, remainder)`
    /// where `large` is the pure-jump path summing the jumps of norm `> b`
    /// and `remainder = self - large`.
    pub fn truncation_split(&self, b: f64) -> Result<(CadlagPath, CadlagPath)> {
        if !(b > 0.0) {
            return Err(domain("truncation level must be positive"));
        }
        let d = self.dim;
        let mut builder = PathBuilder::new(&vec![0.0; d]);
        for k in 1..self.times.len() {
            if self.jump_norm(k) > b {
                builder.hold_to(self.times[k]);
                builder.jump(&self.jump(k));
            }
        }
        if builder.current_time() < self.horizon() {
            builder.hold_to(self.horizon());
        }
        let large = builder.build()?;
        let remainder = self.sub(&large)?;
        Ok((large, remainder))
    }
}

/// Smallest `tau > 0` with `|w0 + tau v| = a`, given `|w0| < a`.
fn first_exit(w0: &[f64], v: &[f64], a: f64) -> Option<f64> {
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv == 0.0 {
        return None;
    }
    let bq: f64 = w0.iter().zip(v).map(|(x, y)| x * y).sum();
    let cq: f64 = w0.iter().map(|x| x * x).sum::<f64>() - a * a;
    if cq >= 0.0 {
        return Some(0.0);
    }
    let disc = (bq * bq - vv * cq).sqrt();
    let tau = if bq >= 0.0 { -cq / (bq + disc) } else { (disc - bq) / vv };
    Some(tau)
}

fn check_compatible(a: &CadlagPath, b: &CadlagPath) -> Result<()> {
    if a.dim != b.dim {
        return Err(LdpError::DimensionMismatch {
            what: "path dimension",
            expected: a.dim,
            found: b.dim,
        });
    }
    if a.horizon() != b.horizon() {
        return Err(invalid("path pair", "horizons differ"));
    }
    Ok(())
}

/// Sorted union of the breakpoints of several paths.
pub fn merged_breakpoints(paths: &[&CadlagPath]) -> Vec<f64> {
    let mut times: Vec<f64> = paths.iter().flat_map(|p| p.times.iter().copied()).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();
    times
}

/// Mode of each merged segment: linear if any input is linear there.
fn segment_modes(times: &[f64], paths: &[&CadlagPath]) -> Vec<SegmentMode> {
    times
        .windows(2)
        .map(|w| {
            if paths
                .iter()
                .any(|p| p.mode_between(w[0], w[1]) == SegmentMode::Linear)
            {
                SegmentMode::Linear
            } else {
                SegmentMode::Constant
            }
        })
        .collect()
}

/// Candidate cut times on `[0, horizon]`: breakpoints plus a uniform grid.
pub(crate) fn modulus_candidates(path: &CadlagPath, horizon: f64, grid_points: usize) -> Vec<f64> {
    let g = grid_points.max(2);
    let mut cand: Vec<f64> = path
        .times
        .iter()
        .copied()
        .filter(|&t| t <= horizon)
        .chain((0..g).map(|i| horizon * i as f64 / (g - 1) as f64))
        .collect();
    cand.push(horizon);
    cand.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    cand.dedup();
    cand
}

/// Interior partition intervals must be strictly longer than `rho`; the
/// slack absorbs rounding in grid arithmetic.
pub(crate) fn gap_admissible(gap: f64, rho: f64, horizon: f64) -> bool {
    gap > rho + 1e-9 * horizon
}

/// Min-max DP over candidate cuts. Interval `[c_i, c_j)` has oscillation
/// equal to the diameter of `{x(c_i)} ∪ {x(c_m-), x(c_m) : i < m < j} ∪ {x(c_j-)}`
/// because every breakpoint is a candidate and segments are affine.
fn min_max_partition(path: &CadlagPath, cand: &[f64], rho: f64, horizon: f64) -> (f64, Vec<f64>) {
    let n = cand.len();
    let (lefts, rights) = path.sample_sweep(cand);
    let d = path.dim;
    let l = |j: usize| &lefts[j * d..(j + 1) * d];
    let r = |j: usize| &rights[j * d..(j + 1) * d];

    let mut best = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    best[0] = 0.0;
    let mut final_best = f64::INFINITY;
    let mut final_prev = 0;
    // Scalar paths track the running range; vector paths keep the point set.
    let scalar = d == 1;

    for i in 0..n - 1 {
        if !best[i].is_finite() || best[i] >= final_best {
            continue;
        }
        let mut lo = r(i)[0];
        let mut hi = lo;
        let mut core_pts: Vec<&[f64]> = vec![r(i)];
        let mut core_diam = 0.0f64;
        for j in i + 1..n {
            let lj = l(j);
            let w = if scalar {
                core_diam.max(hi - lj[0]).max(lj[0] - lo)
            } else {
                core_pts
                    .iter()
                    .fold(core_diam, |acc, q| acc.max(dist(q, lj)))
            };
            let cost = best[i].max(w);
            if cost >= final_best {
                break;
            }
            if j == n - 1 {
                final_best = cost;
                final_prev = i;
            } else if gap_admissible(cand[j] - cand[i], rho, horizon) && cost < best[j] {
                best[j] = cost;
                prev[j] = i;
            }
            if scalar {
                for v in [lj[0], r(j)[0]] {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                core_diam = hi - lo;
            } else {
                for q in [lj, r(j)] {
                    core_diam = core_pts.iter().fold(core_diam, |acc, p| acc.max(dist(p, q)));
                    core_pts.push(q);
                }
            }
        }
    }

    let mut cuts = vec![cand[n - 1]];
    let mut at = final_prev;
    loop {
        cuts.push(cand[at]);
        if at == 0 {
            break;
        }
        at = prev[at];
    }
    cuts.reverse();
    (final_best, cuts)
}

/// Incremental construction of paths segment by segment.
#[derive(Debug, Clone)]
pub struct PathBuilder {
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    left: Vec<f64>,
    modes: Vec<SegmentMode>,
}

impl PathBuilder {
    pub fn new(start: &[f64]) -> Self {
        Self {
            dim: start.len(),
            times: vec![0.0],
            values: start.to_vec(),
            left: start.to_vec(),
            modes: Vec::new(),
        }
    }

    pub fn with_capacity(start: &[f64], breakpoints: usize) -> Self {
        let mut b = Self::new(start);
        b.times.reserve(breakpoints);
        b.values.reserve(breakpoints * b.dim);
        b.left.reserve(breakpoints * b.dim);
        b.modes.reserve(breakpoints);
        b
    }

    pub fn current_time(&self) -> f64 {
        *self.times.last().expect("builder has a breakpoint")
    }

    pub fn current_value(&self) -> &[f64] {
        &self.values[self.values.len() - self.dim..]
    }

    /// Linear segment ending (left limit) at `end` at time `t`.
    pub fn linear_to(&mut self, t: f64, end: &[f64]) -> &mut Self {
        self.times.push(t);
        self.left.extend_from_slice(end);
        self.values.extend_from_slice(end);
        self.modes.push(SegmentMode::Linear);
        self
    }

    /// Linear segment ending at `current + delta` at time `t`.
    pub fn linear_by(&mut self, t: f64, delta: &[f64]) -> &mut Self {
        let d = self.dim;
        let start = self.values.len() - d;
        for i in 0..d {
            let v = self.values[start + i] + delta[i];
            self.left.push(v);
            self.values.push(v);
        }
        self.times.push(t);
        self.modes.push(SegmentMode::Linear);
        self
    }

    /// Constant segment up to time `t`.
    pub fn hold_to(&mut self, t: f64) -> &mut Self {
        let cur = self.current_value().to_vec();
        self.times.push(t);
        self.left.extend_from_slice(&cur);
        self.values.extend_from_slice(&cur);
        self.modes.push(SegmentMode::Constant);
        self
    }

    /// Adds `delta` to the right value at the current breakpoint.
    pub fn jump(&mut self, delta: &[f64]) -> &mut Self {
        let start = self.values.len() - self.dim;
        for (v, dv) in self.values[start..].iter_mut().zip(delta) {
            *v += dv;
        }
        self
    }

    /// Validates and returns the path, leaving the builder empty.
    pub fn build(&mut self) -> Result<CadlagPath> {
        if self.times.len() > 1 && self.times[0] == 0.0 && self.values[..self.dim] != self.left[..self.dim] {
            return Err(invalid("path", "jump at time 0"));
        }
        CadlagPath::new(
            self.dim,
            mem::take(&mut self.times),
            mem::take(&mut self.values),
            mem::take(&mut self.left),
            mem::take(&mut self.modes),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn jumpy() -> CadlagPath {
        PathBuilder::new(&[0.0])
            .hold_to(0.2)
            .jump(&[1.0])
            .hold_to(0.5)
            .jump(&[-0.3])
            .hold_to(0.9)
            .jump(&[2.0])
            .hold_to(1.0)
            .build()
            .unwrap()
    }

    #[test]
    fn rejects_bad_paths() {
        assert!(CadlagPath::new(1, vec![0.0, 0.0], vec![0.0; 2], vec![0.0; 2], vec![SegmentMode::Linear]).is_err());
        assert!(CadlagPath::new(1, vec![0.1, 1.0], vec![0.0; 2], vec![0.0; 2], vec![SegmentMode::Linear]).is_err());
        // jump at 0
        assert!(CadlagPath::new(1, vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![SegmentMode::Linear]).is_err());
        // constant segment that moves
        assert!(CadlagPath::new(1, vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![SegmentMode::Constant]).is_err());
    }

    #[test]
    fn eval_left_and_right() {
        let p = jumpy();
        assert_eq!(p.eval(0.2), vec![1.0]);
        assert_eq!(p.eval_left(0.2), vec![0.0]);
        assert_eq!(p.eval(0.3), vec![1.0]);
        let lin = CadlagPath::linear(2.0, &[0.0], &[4.0]).unwrap();
        assert_eq!(lin.eval(0.5), vec![1.0]);
        assert_eq!(lin.eval_left(2.0), vec![4.0]);
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(CadlagPath::zero(1, 1.0).unwrap().sup_norm(1.0).unwrap(), 0.0);
        let lin = CadlagPath::linear(1.0, &[0.0], &[2.0]).unwrap();
        assert_eq!(lin.sup_norm(1.0).unwrap(), 2.0);
        let j = PathBuilder::new(&[0.0]).hold_to(0.5).jump(&[-3.0]).hold_to(1.0).build().unwrap();
        assert_eq!(j.sup_norm(1.0).unwrap(), 3.0);
        assert_eq!(j.sup_norm(0.4).unwrap(), 0.0);
        assert!(j.sup_norm(1.5).is_err());
        assert!(j.sup_norm(-0.1).is_err());
    }

    #[test]
    fn jump_stats_examples() {
        let c = CadlagPath::linear(1.0, &[0.0], &[1.0]).unwrap();
        let s = c.jump_stats(1.0, 0.5).unwrap();
        assert_eq!((s.max_jump, s.count_large, s.sum_large), (0.0, 0, 0.0));
        let p = jumpy();
        let s = p.jump_stats(1.0, 0.5).unwrap();
        assert_eq!((s.max_jump, s.count_large, s.sum_large), (2.0, 2, 3.0));
        let s = p.jump_stats(0.4, 0.5).unwrap();
        assert_eq!((s.max_jump, s.count_large, s.sum_large), (1.0, 1, 1.0));
        assert!(p.jump_stats(1.0, 0.0).is_err());
    }

    #[test]
    fn variation_examples() {
        let lin = CadlagPath::linear(1.0, &[0.0], &[1.0]).unwrap();
        assert_eq!(lin.variation(1.0).unwrap(), ExtReal::Finite(1.0));
        assert_eq!(lin.variation(0.25).unwrap(), ExtReal::Finite(0.25));
        let saw = PathBuilder::new(&[0.0]).linear_to(0.5, &[1.0]).linear_to(1.0, &[0.0]).build().unwrap();
        assert_eq!(saw.variation(1.0).unwrap(), ExtReal::Finite(2.0));
        let pj = PathBuilder::new(&[0.0])
            .hold_to(0.3)
            .jump(&[1.0])
            .hold_to(0.6)
            .jump(&[-2.0])
            .hold_to(1.0)
            .build()
            .unwrap();
        assert_eq!(pj.variation(0.8).unwrap(), ExtReal::Finite(3.0));
    }

    #[test]
    fn quadratic_variation_counts_segments_and_jumps() {
        let p = PathBuilder::new(&[0.0])
            .linear_to(0.5, &[0.5])
            .jump(&[1.0])
            .linear_to(1.0, &[1.0])
            .build()
            .unwrap();
        assert!((p.quadratic_variation(1.0).unwrap() - (0.25 + 1.0 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn modulus_examples() {
        let j = PathBuilder::new(&[0.0]).hold_to(0.6).jump(&[1.0]).hold_to(1.0).build().unwrap();
        let m = j.skorokhod_modulus(1.0, 0.3, ModulusOptions::default()).unwrap();
        assert_eq!(m.value, 0.0);
        assert!(m.cuts.contains(&0.6));

        let lin = CadlagPath::linear(1.0, &[0.0], &[1.0]).unwrap();
        let m = lin.skorokhod_modulus(1.0, 0.3, ModulusOptions { grid_points: 101 }).unwrap();
        assert!((0.3..=0.34).contains(&m.value), "{}", m.value);
        assert!((m.value - 0.31).abs() < 1e-12);

        let c = CadlagPath::constant(1.0, &[5.0]).unwrap();
        assert_eq!(c.skorokhod_modulus(1.0, 0.5, ModulusOptions::default()).unwrap().value, 0.0);
        assert!(c.skorokhod_modulus(1.0, 1.0, ModulusOptions::default()).is_err());
    }

    #[test]
    fn modulus_vector_path_matches_norm_of_scalar() {
        // 2-d path moving along a fixed direction behaves like the scalar path
        let s = PathBuilder::new(&[0.0]).linear_to(0.4, &[1.0]).jump(&[-2.0]).linear_to(1.0, &[0.5]).build().unwrap();
        let v = PathBuilder::new(&[0.0, 0.0])
            .linear_to(0.4, &[0.6, 0.8])
            .jump(&[-1.2, -1.6])
            .linear_to(1.0, &[0.3, 0.4])
            .build()
            .unwrap();
        let o = ModulusOptions { grid_points: 51 };
        let ms = s.skorokhod_modulus(1.0, 0.2, o).unwrap().value;
        let mv = v.skorokhod_modulus(1.0, 0.2, o).unwrap().value;
        assert!((ms - mv).abs() < 1e-12);
    }

    #[test]
    fn stopping_time_examples() {
        let lin = CadlagPath::linear(1.0, &[0.0], &[1.0]).unwrap();
        assert_eq!(lin.stopping_times(&[0.25], 1.0).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let c = CadlagPath::constant(2.0, &[1.0]).unwrap();
        assert_eq!(c.stopping_times(&[0.1], 1.5).unwrap(), vec![0.0, 1.5]);
        let j = PathBuilder::new(&[0.0]).hold_to(0.5).jump(&[1.0]).hold_to(1.0).build().unwrap();
        let ts = j.stopping_times(&[0.4], 1.0).unwrap();
        assert_eq!(ts[1], 0.5);
        assert!(lin.stopping_times(&[0.0], 1.0).is_err());
    }

    #[test]
    fn truncation_examples() {
        let lin = CadlagPath::linear(1.0, &[0.0], &[1.0]).unwrap();
        let (large, rem) = lin.truncation_split(0.1).unwrap();
        assert!(!large.has_jumps());
        assert_eq!(large.sup_norm(1.0).unwrap(), 0.0);
        assert_eq!(rem.eval(0.3), lin.eval(0.3));

        let p = PathBuilder::new(&[0.0]).hold_to(0.3).jump(&[0.5]).hold_to(0.7).jump(&[2.0]).hold_to(1.0).build().unwrap();
        let (large, rem) = p.truncation_split(1.0).unwrap();
        let stats = large.jump_stats(1.0, 1e-9).unwrap();
        assert_eq!(stats.count_large, 1);
        assert_eq!(large.eval(1.0), vec![2.0]);
        assert!(rem.jump_stats(1.0, 1e-9).unwrap().max_jump <= 1.0);
        let (large, _) = p.truncation_split(5.0).unwrap();
        assert!(!large.has_jumps());
    }

    #[test]
    fn stack_and_project_roundtrip() {
        let a = CadlagPath::linear(1.0, &[0.0], &[1.0]).unwrap();
        let b = PathBuilder::new(&[2.0]).hold_to(0.5).jump(&[1.0]).hold_to(1.0).build().unwrap();
        let s = CadlagPath::stack(&[&a, &b]).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.eval(0.75), vec![0.75, 3.0]);
        assert_eq!(s.eval_left(0.5), vec![0.5, 2.0]);
        assert_eq!(s.project(1, 1).unwrap().eval(0.9), vec![3.0]);
    }
}

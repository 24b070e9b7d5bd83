//! Unconstrained minimizers used by the path-space rate optimization.
//! Objectives may return `+∞` (or NaN, treated as `+∞`) outside their domain.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub max_iter: usize,
    /// Nelder–Mead: spread of simplex values; BFGS: sup norm of the gradient.
    pub tol: f64,
    /// Nelder–Mead initial simplex edge.
    pub initial_step: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            max_iter: 4000,
            tol: 1e-10,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: InnerOptions) -> Minimum {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(f(x))
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();
    let mut iterations = 0;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    while iterations < opts.max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let (best, worst) = (values[0], values[n]);
        let size = simplex[1..]
            .iter()
            .map(|p| p.iter().zip(&simplex[0]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(0.0f64, f64::max);
        if best.is_finite() && worst - best <= opts.tol * (best.abs() + opts.tol) && size <= 1e-9 {
            break;
        }
        if size <= 1e-14 {
            break;
        }
        centroid.fill(0.0);
        for p in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |coef: f64, out: &mut [f64]| {
            for i in 0..n {
                out[i] = centroid[i] + coef * (simplex[n][i] - centroid[i]);
            }
        };
        along(-1.0, &mut trial);
        let fr = eval(&trial, &mut evals);
        if fr < values[0] {
            along(-2.0, &mut trial2);
            let fe = eval(&trial2, &mut evals);
            if fe < fr {
                simplex[n].copy_from_slice(&trial2);
                values[n] = fe;
            } else {
                simplex[n].copy_from_slice(&trial);
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n].copy_from_slice(&trial);
            values[n] = fr;
            continue;
        }
        let (coef, reference) = if fr < values[n] { (-0.5, fr) } else { (0.5, values[n]) };
        along(coef, &mut trial2);
        let fc = eval(&trial2, &mut evals);
        if fc < reference {
            simplex[n].copy_from_slice(&trial2);
            values[n] = fc;
            continue;
        }
        for k in 1..=n {
            for i in 0..n {
                simplex[k][i] = simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i]);
            }
            values[k] = eval(&simplex[k], &mut evals);
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        evaluations: evals,
    }
}

/// Central differences, falling back to one-sided ones at the domain edge.
fn gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], fx: f64, evals: &mut usize, g: &mut [f64]) {
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        p[i] = x[i] + h;
        let up = sanitize(f(&p));
        p[i] = x[i] - h;
        let down = sanitize(f(&p));
        p[i] = x[i];
        *evals += 2;
        g[i] = match (up.is_finite(), down.is_finite()) {
            (true, true) => (up - down) / (2.0 * h),
            (true, false) => (up - fx) / h,
            (false, true) => (fx - down) / h,
            (false, false) => 0.0,
        };
    }
}

/// Quasi-Newton descent with finite-difference gradients and Armijo
/// backtracking. Requires a finite value at `x0`.
pub fn bfgs<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: InnerOptions) -> Minimum {
    let n = x0.len();
    let mut evals = 1usize;
    let mut x = x0.to_vec();
    let mut fx = sanitize(f(&x));
    let mut g = vec![0.0; n];
    if !fx.is_finite() {
        return Minimum {
            x,
            value: fx,
            iterations: 0,
            evaluations: evals,
        };
    }
    gradient(&mut f, &x, fx, &mut evals, &mut g);
    let identity = |h: &mut Vec<f64>| {
        h.fill(0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    let mut hinv = vec![0.0; n * n];
    identity(&mut hinv);
    let mut fresh = true;
    let mut iterations = 0;
    let mut dir = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    while iterations < opts.max_iter {
        iterations += 1;
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= opts.tol {
            break;
        }
        for i in 0..n {
            dir[i] = -(0..n).map(|j| hinv[i * n + j] * g[j]).sum::<f64>();
        }
        let mut slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
        if !(slope < 0.0) {
            identity(&mut hinv);
            for i in 0..n {
                dir[i] = -g[i];
            }
            slope = -g.iter().map(|v| v * v).sum::<f64>();
            fresh = true;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            for i in 0..n {
                xn[i] = x[i] + alpha * dir[i];
            }
            let fnew = sanitize(f(&xn));
            evals += 1;
            if fnew <= fx + 1e-4 * alpha * slope {
                accepted = Some(fnew);
                break;
            }
            alpha *= 0.5;
        }
        let Some(fnew) = accepted else {
            if fresh {
                break;
            }
            identity(&mut hinv);
            fresh = true;
            continue;
        };
        gradient(&mut f, &xn, fnew, &mut evals, &mut gn);
        let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let decrease = fx - fnew;
        x.copy_from_slice(&xn);
        g.copy_from_slice(&gn);
        fx = fnew;
        if sy > 1e-300 {
            let hy: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| hinv[i * n + j] * y[j]).sum())
                .collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += (1.0 + yhy * rho) * rho * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            fresh = false;
        }
        if decrease.abs() <= 1e-16 * fx.abs().max(1e-300) && s.iter().all(|v| v.abs() <= 1e-14) {
            break;
        }
    }
    Minimum {
        x,
        value: fx,
        iterations,
        evaluations: evals,
    }
}

//! Binomial intervals, closed-form tails and the small regression used to
//! extrapolate `ε log p` curves.

use statrs::distribution::{Beta, ContinuousCDF, Normal};
use statrs::function::gamma::gamma_lr;

/// Exact (Clopper–Pearson) interval for `hits` successes in `n` trials at
/// the given two-sided coverage.
pub fn clopper_pearson(hits: u64, n: u64, coverage: f64) -> (f64, f64) {
    assert!(n > 0 && hits <= n, "need 0 <= hits <= n, n > 0");
    let alpha = 1.0 - coverage;
    let (k, n) = (hits as f64, n as f64);
    let lo = if hits == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).expect("positive shape").inverse_cdf(alpha / 2.0)
    };
    let hi = if hits as f64 == n {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).expect("positive shape").inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// `P(Z >= x)` for a standard normal `Z`.
pub fn normal_tail(x: f64) -> f64 {
    Normal::standard().sf(x)
}

/// `P(N >= k)` for `N ~ Poisson(mean)`.
pub fn poisson_tail(k: u64, mean: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        gamma_lr(k as f64, mean)
    }
}

/// Binomial standard deviation `sqrt(p (1 - p) / n)`.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Intercept of the weighted least-squares line through `(x_i, y_i)`.
/// Returns `None` for fewer than two distinct abscissae.
pub fn wls_intercept(points: &[(f64, f64, f64)]) -> Option<f64> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, w) in points {
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    if points.len() < 2 || !(det.abs() > 1e-300) {
        return None;
    }
    Some((sxx * sy - sx * sxy) / det)
}

/// Lower nearest-rank quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = (q * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clopper_pearson_reference_values() {
        // Reference values from an independent beta quantile implementation.
        let (lo, hi) = clopper_pearson(12_700, 1_000_000, 0.9973);
        assert!((lo - 0.012366659179084406).abs() < 1e-9);
        assert!((hi - 0.01303952618017708).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(0, 50, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(1.0 / 50.0))).abs() < 1e-9);
        assert_eq!(clopper_pearson(7, 7, 0.95).1, 1.0);
    }

    #[test]
    fn tails() {
        assert!((normal_tail(1.0 / 0.02f64.sqrt()) / 7.687298972140091e-13 - 1.0).abs() < 1e-9);
        assert!((poisson_tail(20, 10.0) - 0.0034543419758568334).abs() < 1e-14);
        assert_eq!(poisson_tail(0, 3.0), 1.0);
    }

    #[test]
    fn intercept_of_exact_line() {
        let pts: Vec<(f64, f64, f64)> = [0.1, 0.2, 0.4].iter().map(|&x| (x, 2.0 - 3.0 * x, 1.0 + x)).collect();
        assert!((wls_intercept(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(wls_intercept(&pts[..1]).is_none());
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.0);
    }
}

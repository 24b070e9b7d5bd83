//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::time::Instant;

use ldp_core::{
    minimize_endpoint, residual, solve_sde, solve_skeleton, CadlagPath, DriftRule, ExtReal, JumpMeasure, LevyTriplet,
    MinimizeOptions, ModulusOptions, PathBuilder, PathEvent, RateModel, SdeProblem, VectorField,
};
use ldplab::config::{DEFAULT_BOUND_A, DEFAULT_BOUND_B};
use ldplab::diagnostics::{
    default_martingale_jumps, exact_tail_curve, pure_disc_bound_check, rate_curve, EventSpec, ExactFamily, McOptions,
    Target,
};
use ldplab::stats::{binomial_sigma, clopper_pearson, normal_tail, poisson_tail};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn brownian_setup() -> (LevyTriplet, VectorField, CadlagPath) {
    (
        LevyTriplet::brownian(&[1.0], 1).unwrap(),
        VectorField::scalar_identity(1, 1.0).unwrap(),
        CadlagPath::zero(1, 1.0).unwrap(),
    )
}

fn single_worker() -> McOptions {
    McOptions::for_horizon(1.0)
}

/// `p` inside the 0.9973 Clopper-Pearson interval and within three binomial
/// standard deviations of `p_hat`.
fn agrees(hits: u64, n: u64, p: f64) -> (bool, String) {
    let (lo, hi) = clopper_pearson(hits, n, 0.9973);
    let p_hat = hits as f64 / n as f64;
    let sigma = binomial_sigma(p, n);
    let ok = lo <= p && p <= hi && (p_hat - p).abs() <= 3.0 * sigma;
    (ok, format!("p_hat={p_hat:.6e} exact={p:.6e} ci=[{lo:.6e}, {hi:.6e}] 3sigma={:.3e}", 3.0 * sigma))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let eps = [0.1, 0.05, 0.02, 0.01, 0.005];
    let fam = ExactFamily::Gaussian { sigma: 1.0, horizon: 1.0 };
    let curve = exact_tail_curve(&fam, 1.0, &eps).map_err(|e| e.to_string())?;
    let vals: Vec<f64> = curve.entries.iter().map(|e| e.eps_log_p.unwrap()).collect();
    let last_ok = (vals[4] + 0.5).abs() <= 0.06;
    let monotone = vals.windows(2).all(|w| w[1] > w[0] && (w[1] + 0.5).abs() < (w[0] + 0.5).abs());
    let (_, field, u) = brownian_setup();
    let model = RateModel::brownian(&[1.0], 1, 1.0).unwrap();
    let opts = MinimizeOptions { m: 16, ..Default::default() };
    let res = minimize_endpoint(&model, &field, &u, &PathEvent::terminal_ge(0, 1.0), &opts).map_err(|e| e.to_string())?;
    let rate_ok = (res.rate - 0.5).abs() <= 0.01 && res.feasible;
    let secs = start.elapsed().as_secs_f64();
    check(
        last_ok && monotone && rate_ok && secs < 10.0,
        format!("eps*ln p={vals:.4?} rate={:.5} time={secs:.2}s", res.rate),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (trip, field, u) = brownian_setup();
    let event = EventSpec { event: PathEvent::terminal_ge(0, 0.5), target: Target::Y };
    let n = 1_000_000;
    let curve = rate_curve(&trip, &field, &u, &event, &[0.05], n, 20_240_601, &single_worker())
        .map_err(|e| e.to_string())?;
    let p = normal_tail(0.5 / 0.05f64.sqrt());
    let (ok, detail) = agrees(curve.entries[0].hits.unwrap(), n, p);
    let secs = start.elapsed().as_secs_f64();
    check(ok && secs < 120.0, format!("{detail} time={secs:.1}s"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let trip = LevyTriplet::compound_poisson(JumpMeasure::single(&[1.0], 1.0).unwrap()).unwrap();
    let target = 2.0 * 2f64.ln() - 1.0;
    let leg = match trip.legendre(&[2.0]).map_err(|e| e.to_string())? {
        ExtReal::Finite(v) => v,
        ExtReal::Infinite => f64::INFINITY,
    };
    let leg_ok = (leg - 0.38629).abs() <= 1e-4 && (leg - target).abs() <= 1e-4;
    let fam = ExactFamily::Poisson { lambda: 1.0, jump: 1.0, horizon: 1.0 };
    let curve = exact_tail_curve(&fam, 2.0, &[0.1, 0.05, 0.02, 0.01, 0.005]).map_err(|e| e.to_string())?;
    let vals: Vec<f64> = curve.entries.iter().map(|e| e.eps_log_p.unwrap()).collect();
    let converging = vals.windows(2).all(|w| (w[1] + target).abs() < (w[0] + target).abs());
    let exact_ok = (vals[4] + target).abs() <= 0.08 && converging;
    let field = VectorField::scalar_identity(1, 1.0).unwrap();
    let u = CadlagPath::zero(1, 1.0).unwrap();
    let event = EventSpec { event: PathEvent::terminal_ge(0, 2.0), target: Target::Y };
    let n = 1_000_000;
    let mc = rate_curve(&trip, &field, &u, &event, &[0.1], n, 7, &single_worker()).map_err(|e| e.to_string())?;
    let (mc_ok, detail) = agrees(mc.entries[0].hits.unwrap(), n, poisson_tail(20, 10.0));
    let secs = start.elapsed().as_secs_f64();
    check(
        leg_ok && exact_ok && mc_ok && secs < 120.0,
        format!("legendre(2)={leg:.6} eps*ln p={vals:.4?} {detail} time={secs:.1}s"),
    )
}

fn criterion_4() -> Outcome {
    let lin = VectorField::linear(1, 1.0, true).map_err(|e| e.to_string())?;
    let one = CadlagPath::constant(1.0, &[1.0]).unwrap();
    let x = CadlagPath::linear(1.0, &[0.0], &[1.0]).unwrap();
    let y = solve_skeleton(&lin, &one, &x, 1e-3).map_err(|e| e.to_string())?;
    let e_err = (y.terminal()[0] - std::f64::consts::E).abs();
    let r1 = residual(&lin, &one, &x, &y, 1e-3).map_err(|e| e.to_string())?;
    let jumps = PathBuilder::new(&[0.0])
        .hold_to(0.3)
        .jump(&[0.1])
        .hold_to(0.6)
        .jump(&[0.2])
        .hold_to(1.0)
        .build()
        .unwrap();
    let z = solve_skeleton(&lin, &one, &jumps, 1e-3).map_err(|e| e.to_string())?;
    let prod_err = (z.terminal()[0] - 1.32).abs();
    let r2 = residual(&lin, &one, &jumps, &z, 1e-3).map_err(|e| e.to_string())?;
    check(
        e_err <= 1e-6 && prod_err <= 4.0 * f64::EPSILON && r1 <= 1e-6 && r2 <= 1e-6,
        format!("|y(1)-e|={e_err:.2e} |prod-1.32|={prod_err:.2e} residuals={r1:.2e},{r2:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let (lambda, sigma2) = (1.5, 0.7);
    let trip = LevyTriplet::new(
        DriftRule::Constant(vec![0.0]),
        &[sigma2],
        JumpMeasure::single(&[2.0], lambda).unwrap(),
        false,
    )
    .map_err(|e| e.to_string())?;
    let ch = trip.characteristics(0.5, 1.0).map_err(|e| e.to_string())?;
    let times = [0.0, 0.25, 0.5, 1.0, 3.0];
    let b_ok = times.iter().all(|&t| ch.first_at(t)[0] == 2.0 * lambda * t);
    let c_ok = times.iter().all(|&t| ch.second_over_eps_at(t)[0] == t * sigma2);
    let v3: Vec<f64> = [0.5, 0.1, 0.02]
        .iter()
        .map(|&e| trip.three_families(e, 1.0, 1.0, 1.0).map(|f| f.exp_jump_integral))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let spread = v3.iter().map(|v| (v - v3[0]).abs()).fold(0.0, f64::max);
    check(b_ok && c_ok && spread <= 1e-12 * v3[0], format!("B_1={} C_1/eps={} v3={v3:?}", ch.first_at(1.0)[0], ch.second_over_eps_at(1.0)[0]))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let rows = pure_disc_bound_check(
        &default_martingale_jumps(),
        0.1,
        1.0,
        &DEFAULT_BOUND_A,
        &DEFAULT_BOUND_B,
        100_000,
        99,
        &single_worker(),
    )
    .map_err(|e| e.to_string())?;
    let worst = rows
        .iter()
        .map(|r| r.empirical - r.bound - 3.0 * r.sigma)
        .fold(f64::NEG_INFINITY, f64::max);
    let secs = start.elapsed().as_secs_f64();
    check(
        rows.iter().all(|r| r.pass) && secs < 60.0,
        format!("{} cells, max(empirical - bound - 3sigma)={worst:.4} time={secs:.1}s", rows.len()),
    )
}

/// Oscillation of a path with breakpoints on the grid over `[a, b)`:
/// right values at grid points in `[a, b)` and left limits in `(a, b]`.
// Grid times are formed as `k / steps` so they coincide bit-for-bit with the
// breakpoints of `random_grid_path`; `k * grid` can land just past a jump.
fn grid_oscillation(path: &CadlagPath, a: usize, b: usize, steps: usize) -> f64 {
    let at = |k: usize| path.horizon() * (k as f64 / steps as f64);
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for k in a..b {
        pts.push(path.eval(at(k)));
    }
    for k in a + 1..=b {
        pts.push(path.eval_left(at(k)));
    }
    let mut osc: f64 = 0.0;
    for p in &pts {
        for q in &pts {
            let d: f64 = p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            osc = osc.max(d);
        }
    }
    osc
}

/// Smallest `v` such that some grid partition with interior gaps `> rho`
/// has every oscillation `<= v`, by bisection over candidate values.
fn brute_force_modulus(path: &CadlagPath, rho: f64, steps: usize) -> f64 {
    let grid = path.horizon() / steps as f64;
    let min_gap = (0..=steps).find(|&g| g as f64 * grid > rho + 1e-9).unwrap_or(steps + 1);
    let mut osc = vec![vec![0.0; steps + 1]; steps + 1];
    for a in 0..steps {
        for b in a + 1..=steps {
            osc[a][b] = grid_oscillation(path, a, b, steps);
        }
    }
    let feasible = |v: f64| {
        // reach[i]: a partition of [0, t_i] ending with a cut at t_i exists.
        let mut reach = vec![false; steps + 1];
        reach[0] = true;
        for j in 1..=steps {
            for i in 0..j {
                let gap_ok = j == steps || j - i >= min_gap;
                if reach[i] && gap_ok && osc[i][j] <= v {
                    reach[j] = true;
                    break;
                }
            }
        }
        reach[steps]
    };
    let mut cands: Vec<f64> = osc.iter().flatten().copied().collect();
    cands.push(0.0);
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let (mut lo, mut hi) = (0, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo]
}

fn random_grid_path(rng: &mut ChaCha8Rng, steps: usize) -> CadlagPath {
    let dim = rng.random_range(1..=2);
    let breaks = rng.random_range(0..=6);
    let mut cuts: Vec<usize> = (0..breaks).map(|_| rng.random_range(1..steps)).collect();
    cuts.sort();
    cuts.dedup();
    cuts.push(steps);
    let start: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut b = PathBuilder::new(&start);
    for &c in &cuts {
        let t = c as f64 / steps as f64;
        if rng.random_bool(0.5) {
            let end: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            b.linear_to(t, &end);
        } else {
            b.hold_to(t);
        }
        if c < steps && rng.random_bool(0.6) {
            let jump: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            b.jump(&jump);
        }
    }
    b.build().unwrap()
}

fn criterion_7() -> Outcome {
    let steps = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f_6475);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let path = random_grid_path(&mut rng, steps);
        let rho = [0.05, 0.1, 0.137, 0.25, 0.5][rng.random_range(0..5)];
        let got = path
            .skorokhod_modulus(1.0, rho, ModulusOptions { grid_points: steps + 1 })
            .map_err(|e| e.to_string())?
            .value;
        let expected = brute_force_modulus(&path, rho, steps);
        worst = worst.max((got - expected).abs());
    }
    check(worst <= 1e-12, format!("200 paths, max |modulus - brute force|={worst:.2e}"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut notes = Vec::new();

    // Refinement never raises the optimized rate.
    let model = RateModel::brownian(&[1.0], 1, 1.0).unwrap();
    let f = VectorField::tanh_scaled(1, 0.8, 1.0).unwrap();
    let u = CadlagPath::constant(1.0, &[0.2]).unwrap();
    let event = PathEvent::terminal_ge(0, 0.9);
    let rates: Vec<f64> = [2, 4, 8]
        .iter()
        .map(|&m| {
            minimize_endpoint(&model, &f, &u, &event, &MinimizeOptions { m, starts: 4, ..Default::default() })
                .map(|r| r.rate)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let refine_ok = rates.windows(2).all(|w| w[1] <= w[0] + 1e-3);
    notes.push(format!("rates m=2,4,8: {rates:.5?}"));

    // Euler solutions form a Cauchy sequence under step halving.
    let noise = LevyTriplet::brownian(&[1.0], 1).unwrap().simulate(0.2, 1.0, 0.02, 5).unwrap();
    let solve = |h: f64| solve_sde(&SdeProblem::new(f.clone(), u.clone(), noise.clone(), h).unwrap()).unwrap();
    let sols: Vec<CadlagPath> = [0.01, 0.005, 0.0025, 0.00125].iter().map(|&h| solve(h)).collect();
    let diffs: Vec<f64> = sols
        .windows(2)
        .map(|w| {
            let (_, a) = w[0].uniform_samples(801);
            let (_, b) = w[1].uniform_samples(801);
            a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        })
        .collect();
    let cauchy_ok = diffs.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    notes.push(format!("euler diffs {diffs:.3?}"));

    // truncation_split reassembles the path; the remainder has small jumps.
    let mut split_ok = true;
    for _ in 0..200 {
        let p = random_grid_path(&mut rng, 100);
        let b = rng.random_range(0.1..1.0);
        let (large, rest) = p.truncation_split(b).map_err(|e| e.to_string())?;
        let sum = large.add(&rest).map_err(|e| e.to_string())?;
        let (_, x) = p.uniform_samples(257);
        let (_, y) = sum.uniform_samples(257);
        split_ok &= x.iter().zip(&y).all(|(a, c)| (a - c).abs() <= 1e-12);
        split_ok &= (1..rest.num_breakpoints()).all(|k| rest.jump_norm(k) <= b + 1e-12);
    }

    // Jump sizes of the solution obey |dY| <= |dU| + C |dX|.
    let jumpy = LevyTriplet::new(
        DriftRule::Constant(vec![0.0]),
        &[1.0],
        JumpMeasure::new(
            1,
            vec![
                ldp_core::Atom { size: vec![1.5], intensity: 1.0 },
                ldp_core::Atom { size: vec![-0.7], intensity: 2.0 },
            ],
        )
        .unwrap(),
        false,
    )
    .unwrap();
    let g = VectorField::clamp_linear(1, 1.3, 2.0).unwrap();
    let control = PathBuilder::new(&[0.5]).hold_to(0.4).jump(&[0.3]).hold_to(1.0).build().unwrap();
    let mut bound_ok = true;
    for seed in 0..100 {
        let x = jumpy.simulate(0.5, 1.0, 0.01, seed).unwrap();
        let y = solve_sde(&SdeProblem::new(g.clone(), control.clone(), x.clone(), 0.01).unwrap()).unwrap();
        for k in 1..y.num_breakpoints() {
            let t = y.breakpoints()[k];
            let du = (control.eval(t)[0] - control.eval_left(t)[0]).abs();
            let dx = (x.eval(t)[0] - x.eval_left(t)[0]).abs();
            bound_ok &= y.jump_norm(k) <= du + g.constant_c() * dx + 1e-12;
        }
    }

    // Fixed seeds reproduce bit for bit, for any worker count.
    let (trip, field, zero) = brownian_setup();
    let ev = EventSpec { event: PathEvent::terminal_ge(0, 0.5), target: Target::Y };
    let run = |workers: usize| {
        let o = McOptions { block_size: 1000, workers, ..McOptions::for_horizon(1.0) };
        rate_curve(&trip, &field, &zero, &ev, &[0.2, 0.1], 5000, 31, &o).unwrap()
    };
    let a = trip.simulate(0.1, 1.0, 0.01, 77).unwrap();
    let b = trip.simulate(0.1, 1.0, 0.01, 77).unwrap();
    let determinism_ok = a == b && run(1) == run(1) && run(1) == run(4);

    notes.push(format!(
        "refinement={refine_ok} cauchy={cauchy_ok} split={split_ok} jump_bound={bound_ok} determinism={determinism_ok}"
    ));
    check(refine_ok && cauchy_ok && split_ok && bound_ok && determinism_ok, notes.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Gaussian closed-form tail and optimized rate", criterion_1),
        ("Monte Carlo vs exact normal tail", criterion_2),
        ("Poisson conjugate, tail and Monte Carlo", criterion_3),
        ("skeleton solver oracles", criterion_4),
        ("characteristics closed forms", criterion_5),
        ("concentration bound dominance", criterion_6),
        ("partition modulus vs brute force", criterion_7),
        ("property suites", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} PASS: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL: {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

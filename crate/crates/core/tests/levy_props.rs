use ldp_core::{Atom, DriftRule, ExtReal, JumpMeasure, LevyTriplet};
use proptest::prelude::*;

fn atoms_1d() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((prop_oneof![-2.0f64..-0.05, 0.05f64..2.0], 0.1f64..3.0), 0..4)
}

fn triplet(drift: f64, sigma2: f64, atoms: &[(f64, f64)], compensated: bool) -> LevyTriplet {
    let jm = JumpMeasure::new(
        1,
        atoms.iter().map(|&(x, l)| Atom { size: vec![x], intensity: l }).collect(),
    )
    .unwrap();
    LevyTriplet::new(DriftRule::Constant(vec![drift]), &[sigma2], jm, compensated).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn legendre_is_a_supremum(
        drift in -1.0f64..1.0,
        sigma2 in 0.05f64..2.0,
        atoms in atoms_1d(),
        comp in any::<bool>(),
        z in -3.0f64..3.0,
        thetas in prop::collection::vec(-2.0f64..2.0, 8),
    ) {
        let tr = triplet(drift, sigma2, &atoms, comp);
        let v = tr.legendre(&[z]).unwrap().to_f64();
        prop_assert!(v >= 0.0);
        for th in thetas {
            prop_assert!(v >= th * z - tr.cumulant(&[th]) - 1e-9);
        }
        let mean = tr.mean_velocity();
        prop_assert!(tr.legendre(&mean).unwrap().to_f64() < 1e-12);
    }

    #[test]
    fn gaussian_conjugate(b in -2.0f64..2.0, s2 in 0.1f64..3.0, z in -4.0f64..4.0) {
        let tr = triplet(b, s2, &[], false);
        let v = tr.legendre(&[z]).unwrap().to_f64();
        prop_assert!((v - (z - b).powi(2) / (2.0 * s2)).abs() < 1e-10 * (1.0 + v));
    }

    #[test]
    fn poisson_conjugate(lambda in 0.1f64..5.0, z in 0.01f64..6.0) {
        let tr = LevyTriplet::compound_poisson(JumpMeasure::single(&[1.0], lambda).unwrap()).unwrap();
        let exact = z * (z / lambda).ln() - z + lambda;
        let v = tr.legendre(&[z]).unwrap().to_f64();
        prop_assert!((v - exact).abs() < 1e-9 * (1.0 + exact));
        prop_assert_eq!(tr.legendre(&[-z]).unwrap(), ExtReal::Infinite);
    }

    #[test]
    fn exp_jump_integral_is_eps_free(atoms in atoms_1d(), r in 0.2f64..2.0, t in 0.1f64..3.0) {
        let tr = triplet(0.0, 0.0, &atoms, false);
        let base = tr.three_families(1.0, t, 1.0, r).unwrap().exp_jump_integral;
        for eps in [0.5, 0.1, 0.02] {
            let v = tr.three_families(eps, t, 1.0, r).unwrap().exp_jump_integral;
            prop_assert!((v - base).abs() <= 1e-12 * base.max(1.0));
        }
    }

    #[test]
    fn characteristics_scale(
        drift in -1.0f64..1.0,
        sigma2 in 0.0f64..2.0,
        atoms in atoms_1d(),
        eps in 0.01f64..1.0,
        t in 0.0f64..3.0,
    ) {
        let tr = triplet(drift, sigma2, &atoms, false);
        let ch = tr.characteristics(eps, f64::INFINITY).unwrap();
        let canonical = drift + atoms.iter().map(|(x, l)| x * l).sum::<f64>();
        prop_assert!((ch.first_at(t)[0] - t * canonical).abs() < 1e-12 * (1.0 + t * canonical.abs()));
        prop_assert_eq!(ch.second_over_eps_at(t)[0], t * sigma2);
        let mass: f64 = atoms.iter().map(|(_, l)| l / eps).sum();
        prop_assert!((ch.jump_mass_at(t) - t * mass).abs() < 1e-9 * (1.0 + t * mass));
        let tiny = tr.characteristics(eps, 1e-9).unwrap();
        prop_assert!((tiny.drift_slope[0] - drift).abs() < 1e-15);
    }

    #[test]
    fn simulation_is_reproducible(
        drift in -1.0f64..1.0,
        sigma2 in 0.0f64..1.0,
        atoms in atoms_1d(),
        eps in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let tr = triplet(drift, sigma2, &atoms, false);
        let a = tr.simulate(eps, 1.0, 0.05, seed).unwrap();
        let b = tr.simulate(eps, 1.0, 0.05, seed).unwrap();
        prop_assert_eq!(a.values_flat(), b.values_flat());
        prop_assert_eq!(a.left_values_flat(), b.left_values_flat());
        prop_assert_eq!(a.breakpoints(), b.breakpoints());
        prop_assert_eq!(a.value(0), &[0.0][..]);
        for k in 1..a.num_breakpoints() {
            let j = a.jump(k)[0];
            prop_assert!(j == 0.0 || atoms.iter().any(|(x, _)| (eps * x - j).abs() < 1e-12));
        }
    }
}

#[test]
fn two_dimensional_gaussian_conjugate() {
    let s = [2.0, 0.5, 0.5, 1.0];
    let tr = LevyTriplet::new(DriftRule::Constant(vec![0.3, -0.2]), &s, JumpMeasure::empty(2), false).unwrap();
    let z = [1.0, 0.4];
    let w = [z[0] - 0.3, z[1] + 0.2];
    let det = s[0] * s[3] - s[1] * s[2];
    let inv = [s[3] / det, -s[1] / det, -s[2] / det, s[0] / det];
    let exact = 0.5 * (w[0] * (inv[0] * w[0] + inv[1] * w[1]) + w[1] * (inv[2] * w[0] + inv[3] * w[1]));
    assert!((tr.legendre(&z).unwrap().to_f64() - exact).abs() < 1e-12);
}

#[test]
fn brownian_increments_have_the_right_variance() {
    let tr = LevyTriplet::brownian(&[1.0], 1).unwrap();
    let eps = 0.25;
    let n = 4000;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for seed in 0..n {
        let x = tr.simulate(eps, 1.0, 0.1, seed).unwrap().terminal()[0];
        sum += x;
        sq += x * x;
    }
    let mean = sum / n as f64;
    let var = sq / n as f64 - mean * mean;
    // Var of the sample variance of N(0, 1/4) is 2 * (1/4)^2 / n.
    assert!(mean.abs() < 4.0 * (eps / n as f64).sqrt());
    assert!((var - eps).abs() < 4.0 * (2.0f64).sqrt() * eps / (n as f64).sqrt());
}

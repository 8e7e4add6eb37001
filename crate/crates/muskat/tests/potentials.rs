use std::f64::consts::PI;

use approx::assert_relative_eq;
use muskat::analysis::random_admissible;
use muskat::evolution::DimensionlessParams;
use muskat::geometry::{ale_matrices, StripField};
use muskat::potentials::{
    cosh_ratio, green_kernel, kernel, phi1_field, solve_phi2, solve_phi2_fd, solve_poisson_green, FixedPointOptions,
    KernelFamily, KernelTable,
};
use muskat::spectral::PeriodicSpectrum;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn max_profile_error(f: &StripField, n: usize, exact: impl Fn(f64) -> Complex64) -> f64 {
    f.grid().iter().zip(f.profile(n)).map(|(&x, v)| (v - exact(x)).norm()).fold(0.0, f64::max)
}

/// `φ̂(n, x) = cos(π(1+x)/2)` in a single mode; satisfies both boundary
/// conditions. Returns `(g1, g2)` realising it through either component.
fn manufactured(cutoff: usize, m: usize, n: usize, kappa: f64, through_g1: bool) -> (StripField, StripField) {
    let a = |x: f64| PI * (1.0 + x) / 2.0;
    let zero = Complex64::new(0.0, 0.0);
    let g1 = StripField::from_fn(cutoff, m, |k, x| {
        if k == n && through_g1 {
            Complex64::new(-(PI * PI / 4.0 + kappa * kappa) * a(x).cos(), 0.0) / (I * kappa)
        } else {
            zero
        }
    });
    let g2 = StripField::from_fn(cutoff, m, |k, x| {
        if k == n && !through_g1 {
            Complex64::new(-(PI / 2.0 + 2.0 * kappa * kappa / PI) * a(x).sin(), 0.0)
        } else {
            zero
        }
    });
    (g1, g2)
}

#[test]
fn kernel_solves_the_mode_equation() {
    for kappa in [0.3, 1.0, 7.0] {
        for (y, x) in [(-0.8, -0.3), (-0.2, -0.9), (-0.5, -0.5001)] {
            let k0 = green_kernel(kappa, y, x, 0, 0);
            let k2 = green_kernel(kappa, y, x, 2, 0);
            assert_relative_eq!(k2, kappa * kappa * k0, max_relative = 1e-12);
        }
        for y in [-0.9, -0.4, -0.1] {
            assert!(green_kernel(kappa, y, 0.0, 0, 0).abs() < 1e-15);
            assert!(green_kernel(kappa, y, -1.0, 1, 0).abs() < 1e-13);
            let lo = kernel(KernelFamily::Lower, kappa, y, y, 0, 0);
            let up = kernel(KernelFamily::Upper, kappa, y, y, 0, 0);
            assert_relative_eq!(lo, up, max_relative = 1e-13);
            let jump = kernel(KernelFamily::Lower, kappa, y, y, 1, 0) - kernel(KernelFamily::Upper, kappa, y, y, 1, 0);
            assert_relative_eq!(jump, kappa, max_relative = 1e-12);
        }
    }
}

#[test]
fn cosh_ratio_is_overflow_free() {
    assert_relative_eq!(cosh_ratio(2.0, -0.5), 1f64.cosh() / 2f64.cosh(), max_relative = 1e-14);
    assert_relative_eq!(cosh_ratio(800.0, 0.0), 1.0, max_relative = 1e-14);
    assert_eq!(cosh_ratio(800.0, -1.0), 0.0);
}

#[test]
fn manufactured_solution_through_both_components() {
    let (cutoff, n) = (4, 3);
    let delta: f64 = 0.25;
    let kappa = delta.sqrt() * n as f64;
    let exact = |x: f64| Complex64::new((PI * (1.0 + x) / 2.0).cos(), 0.0);
    let mut errors = Vec::new();
    for m in [32, 64, 128] {
        let table = KernelTable::new(delta, cutoff, m);
        let mut worst: f64 = 0.0;
        for through_g1 in [true, false] {
            let (g1, g2) = manufactured(cutoff, m, n, kappa, through_g1);
            let sol = solve_poisson_green(&g1, &g2, &table).unwrap();
            worst = worst.max(max_profile_error(&sol.phi, n, exact));
            let d1 = max_profile_error(&sol.d1, n, |x| exact(x) * I * kappa);
            let d2 = max_profile_error(&sol.d2, n, |x| Complex64::new(-PI / 2.0 * (PI * (1.0 + x) / 2.0).sin(), 0.0));
            worst = worst.max(d1).max(d2);
            assert!(sol.phi.profile(1).iter().all(|v| v.norm() == 0.0));
        }
        errors.push(worst);
    }
    assert!(errors[2] < 1e-6, "{errors:?}");
    assert!(errors[0] / errors[2] > 8.0, "{errors:?}");
}

#[test]
fn finite_difference_oracle_converges_at_second_order() {
    let p = DimensionlessParams::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = random_admissible(&mut rng, 8, 0.0, 5e-4).unwrap();
    let opts = FixedPointOptions { tol: 1e-13, ..Default::default() };
    let reference = {
        let m = 256;
        let table = KernelTable::new(p.delta, 8, m);
        let phi1 = phi1_field(&h, &p, m);
        let ale = ale_matrices(&h, p.eps, p.delta, m).unwrap();
        solve_phi2(&h, &phi1, &ale, &table, p.eps, None, opts).unwrap().solution.trace_d2
    };
    let err: Vec<f64> = [32, 64]
        .iter()
        .map(|&m| {
            let phi1 = phi1_field(&h, &p, m);
            let ale = ale_matrices(&h, p.eps, p.delta, m).unwrap();
            let fd = solve_phi2_fd(&h, &phi1, &ale, p.delta, p.eps, opts).unwrap();
            fd.solution.trace_d2.sub(&reference).sup_abs() / reference.sup_abs()
        })
        .collect();
    let order = (err[0] / err[1]).log2();
    assert!(order > 1.7, "errors {err:?}, order {order}");
}

#[test]
fn phi2_vanishes_for_flat_interface() {
    let p = DimensionlessParams::reference();
    let h = PeriodicSpectrum::zeros(8);
    let table = KernelTable::new(p.delta, 8, 16);
    let phi1 = phi1_field(&h, &p, 16);
    let ale = ale_matrices(&h, p.eps, p.delta, 16).unwrap();
    let sol = solve_phi2(&h, &phi1, &ale, &table, p.eps, None, FixedPointOptions::default()).unwrap();
    assert_eq!(sol.solution.phi.norm_sup(0.0, 0.0), 0.0);
}

#[test]
fn phi2_rejects_large_interfaces() {
    let p = DimensionlessParams::reference();
    let h = PeriodicSpectrum::cosine(8, 1, 0.05);
    let table = KernelTable::new(p.delta, 8, 16);
    let phi1 = phi1_field(&h, &p, 16);
    let ale = ale_matrices(&h, p.eps, p.delta, 16).unwrap();
    let r = solve_phi2(&h, &phi1, &ale, &table, p.eps, None, FixedPointOptions::default());
    assert!(matches!(r, Err(muskat::Error::Smallness { .. })));
}

fn strip_strategy(cutoff: usize, m: usize) -> impl Strategy<Value = StripField> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), cutoff + 1).prop_map(move |c| {
        StripField::from_fn(cutoff, m, |n, x| {
            let (a, b, s, t) = c[n];
            Complex64::new(a + b * x * x, s * (3.0 * x).sin() + t) / (1.0 + n as f64).powi(2)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn green_solver_is_linear(
        a in strip_strategy(6, 16),
        b in strip_strategy(6, 16),
        c in strip_strategy(6, 16),
        d in strip_strategy(6, 16),
        s in -3.0..3.0f64,
    ) {
        let table = KernelTable::new(0.3, 6, 16);
        let u = solve_poisson_green(&a, &b, &table).unwrap();
        let v = solve_poisson_green(&c, &d, &table).unwrap();
        let w = solve_poisson_green(&a.add(&c.scale(s)), &b.add(&d.scale(s)), &table).unwrap();
        let combo = u.phi.add(&v.phi.scale(s));
        let scale = 1.0 + combo.norm_sup(0.0, 0.0);
        prop_assert!(w.phi.sub(&combo).norm_sup(0.0, 0.0) <= 1e-12 * scale);
        prop_assert!(w.d2.sub(&u.d2.add(&v.d2.scale(s))).norm_sup(0.0, 0.0) <= 1e-12 * scale);
    }

    #[test]
    fn green_solution_meets_boundary_conditions(a in strip_strategy(6, 32), b in strip_strategy(6, 32)) {
        let table = KernelTable::new(0.5, 6, 32);
        let sol = solve_poisson_green(&a, &b, &table).unwrap();
        prop_assert!(sol.residual < 1e-12);
        prop_assert!(sol.phi.top().sup_abs() < 1e-12);
    }

    #[test]
    fn green_and_oracle_agree(seed in 0u64..1000) {
        let p = DimensionlessParams::reference();
        let m = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_admissible(&mut rng, 12, 0.0, 4e-4).unwrap();
        let table = KernelTable::new(p.delta, 12, m);
        let phi1 = phi1_field(&h, &p, m);
        let ale = ale_matrices(&h, p.eps, p.delta, m).unwrap();
        let opts = FixedPointOptions { tol: 1e-13, ..Default::default() };
        let g = solve_phi2(&h, &phi1, &ale, &table, p.eps, None, opts).unwrap();
        let f = solve_phi2_fd(&h, &phi1, &ale, p.delta, p.eps, opts).unwrap();
        let rel = g.solution.phi.sub(&f.solution.phi).norm_a1(0.0, 0.0).unwrap() / g.solution.phi.norm_a1(0.0, 0.0).unwrap();
        prop_assert!(rel < 1e-3, "relative difference {}", rel);
        prop_assert!(g.contraction < 0.01);
    }
}

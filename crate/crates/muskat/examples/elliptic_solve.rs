//! Solves the strip Poisson problem with the Green kernel for a
//! manufactured solution `φ̂(n, x) = cos(π(1+x)/2)` and reports the error as
//! the vertical grid refines.

use std::f64::consts::PI;

use muskat::geometry::StripField;
use muskat::potentials::{solve_poisson_green, KernelTable};
use num_complex::Complex64;

fn main() -> muskat::Result<()> {
    let delta: f64 = 0.25;
    let (cutoff, n) = (4, 3);
    let kappa = delta.sqrt() * n as f64;
    let a = |x: f64| PI * (1.0 + x) / 2.0;
    let zero = Complex64::new(0.0, 0.0);
    let mut last = f64::NAN;
    for m in [16, 32, 64, 128, 256] {
        let table = KernelTable::new(delta, cutoff, m);
        let g1 = StripField::zeros(cutoff, m);
        let g2 = StripField::from_fn(cutoff, m, |k, x| {
            if k == n {
                Complex64::new(-(PI / 2.0 + 2.0 * kappa * kappa / PI) * a(x).sin(), 0.0)
            } else {
                zero
            }
        });
        let sol = solve_poisson_green(&g1, &g2, &table)?;
        let err = sol
            .phi
            .grid()
            .iter()
            .zip(sol.phi.profile(n))
            .map(|(&x, v)| (v - Complex64::new(a(x).cos(), 0.0)).norm())
            .fold(0.0, f64::max);
        println!("m={m:>4} max error={err:.3e} refinement ratio={:.2}", last / err);
        last = err;
    }
    Ok(())
}

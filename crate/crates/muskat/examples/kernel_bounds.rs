//! Integrals of the strip Green kernel and its derivatives against the
//! κ-scaled bounds used by the elliptic estimates.

use muskat::potentials::{kernel, kernel_integral_bounds, KernelFamily};

fn main() {
    let pairs = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2)];
    println!("{:>8} {:>2} {:>2} {:>8} {:>12} {:>12} {:>7}", "kappa", "j", "l", "family", "measured", "bound", "ratio");
    let mut worst: f64 = 0.0;
    for kappa in [0.1, 1.0, 10.0] {
        for r in kernel_integral_bounds(kappa, &pairs, 64) {
            worst = worst.max(r.ratio);
            println!(
                "{:>8} {:>2} {:>2} {:>8} {:>12.5e} {:>12.5e} {:>7.4}",
                r.kappa, r.j, r.l, r.family, r.measured, r.bound, r.ratio
            );
        }
    }
    println!("worst ratio {worst:.4}");

    let (kappa, y) = (2.0, -0.4);
    let jump = kernel(KernelFamily::Lower, kappa, y, y, 1, 0) - kernel(KernelFamily::Upper, kappa, y, y, 1, 0);
    println!("derivative jump across the diagonal at kappa = {kappa}: {jump:.12}");
}

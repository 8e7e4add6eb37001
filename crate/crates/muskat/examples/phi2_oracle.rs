//! Cross-checks the Green-function fixed point for the second potential
//! against the finite-difference oracle on random admissible interfaces.
//!
//! cargo run --release --example phi2_oracle -- [trials] [m]

use std::time::Instant;

use muskat::analysis::random_admissible;
use muskat::evolution::DimensionlessParams;
use muskat::geometry::ale_matrices;
use muskat::potentials::{phi1_field, solve_phi2, solve_phi2_fd, FixedPointOptions, KernelTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> muskat::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let trials: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let m: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(128);
    let cutoff = 32;
    let p = DimensionlessParams::reference();
    let table = KernelTable::new(p.delta, cutoff, m);
    let opts = FixedPointOptions { tol: 1e-13, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let h = random_admissible(&mut rng, cutoff, 0.0, 5e-4)?;
        let phi1 = phi1_field(&h, &p, m);
        let ale = ale_matrices(&h, p.eps, p.delta, m)?;
        let green = solve_phi2(&h, &phi1, &ale, &table, p.eps, None, opts)?;
        let fd = solve_phi2_fd(&h, &phi1, &ale, p.delta, p.eps, opts)?;
        let diff = green.solution.phi.sub(&fd.solution.phi).norm_a1(0.0, 0.0)?;
        let rel = diff / green.solution.phi.norm_a1(0.0, 0.0)?;
        worst = worst.max(rel);
    }
    println!("trials={trials} m={m} max relative A^(0,1) difference = {worst:.3e} ({:.1?})", start.elapsed());
    Ok(())
}

//! Converts a physical configuration to (ε, δ, ν, α) and checks the
//! dimensional form of the global stability hypotheses.

use muskat::analysis::{theorem_threshold, THEOREM_C0};
use muskat::nondim::{chain_bound, check_dimensional_theorem, PhysicalParams};

fn main() -> muskat::Result<()> {
    let phys = PhysicalParams {
        depth: 0.5,
        length: 1.0,
        amplitude: 0.05,
        gamma: 10.0,
        rho: 1.0,
        gravity: 1.0,
        viscosity: 1.0,
        permeability: 1.0,
    };
    let c = phys.to_dimensionless()?;
    println!("eps={} delta={} nu={} alpha={}", c.eps, c.delta, c.nu, c.alpha);
    println!("time scale {:.4}, potential scale {:.4}", c.time_scale, c.potential_scale);

    let p = c.params();
    println!("stability margin nu sqrt(delta) - 1 = {}", p.stability_margin());
    println!("dimensionless threshold (C0 = {THEOREM_C0}) = {:.6e}", theorem_threshold(&p));

    for amp in [1e-5, 1e-4] {
        let r = check_dimensional_theorem(&phys, amp)?;
        println!("|h0| = {amp:.0e}: bound {:.6e}, failed {:?}", r.amplitude_bound, r.failed());
    }
    println!("bound through the dimensionless chain: {:.6e}", chain_bound(&c));
    Ok(())
}

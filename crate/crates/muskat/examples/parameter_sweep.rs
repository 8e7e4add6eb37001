//! Runs a small (ν, |h₀|₁) grid in parallel and prints the sweep table.
//! Points above the smallness threshold are reported, not run.

use muskat::cli::{sweep, RunConfig, SweepConfig};

fn main() -> muskat::Result<()> {
    let dir = std::env::temp_dir().join(format!("muskat_sweep_{}", std::process::id()));
    let base = RunConfig::from_json(&format!(
        r#"{{
            "model": {{ "dimensionless": {{ "eps": 0.1, "delta": 0.25, "nu": 4.0 }} }},
            "numerics": {{ "mu": 0.0, "cutoff": 16, "m": 32, "dt": 0.01, "t_final": 0.5 }},
            "initial": {{ "algebraic": {{ "power": 4.0, "norm1": 5e-4 }} }},
            "output_dir": {:?},
            "output_interval": 0.1
        }}"#,
        dir
    ))?;
    let cfg = SweepConfig { base, eps: vec![], delta: vec![], nu: vec![3.0, 4.0, 8.0], amplitudes: vec![1e-4, 1e-3] };
    println!("{:>3} {:>5} {:>9} {:>20} {:>10} {:>8}", "i", "nu", "|h0|_1", "verdict", "rate", "phi2 it");
    for r in sweep(&cfg)? {
        println!(
            "{:>3} {:>5} {:>9.1e} {:>20} {:>10.5} {:>8.2} {}",
            r.index, r.nu, r.amplitude, r.verdict, r.decay_rate, r.mean_phi2_iterations, r.error
        );
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

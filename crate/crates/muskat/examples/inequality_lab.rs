//! Randomised check of the functional inequalities with their stated
//! constants, printing each row and the worst counterexample id.
//!
//! cargo run --release --example inequality_lab -- [trials] [seed]

use muskat::analysis::{constants_lab, LabConfig};

fn main() -> muskat::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let trials: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let report = constants_lab(&LabConfig::new(seed, trials))?;
    report.write_csv(std::io::stdout().lock())?;
    let bad: Vec<&str> = report.violations().iter().map(|r| r.inequality_id.as_str()).collect();
    println!("# {} rows, {} violated: {:?}", report.rows.len(), bad.len(), bad);
    Ok(())
}

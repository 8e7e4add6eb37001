//! Below the capillary threshold `ν√δ < 1` the first mode grows at `|L(1)|`.

use muskat::analysis::fit_decay_rate;
use muskat::evolution::{linear_symbol, run, DimensionlessParams, RunOptions};
use muskat::spectral::PeriodicSpectrum;

fn main() -> muskat::Result<()> {
    for nu in [1.5, 1.9, 2.0, 2.5] {
        let mut p = DimensionlessParams::new(0.1, 0.25, nu);
        p.linear_only = true;
        p.t_final = 2.0;
        let h0 = PeriodicSpectrum::cosine(p.cutoff, 1, 1e-6);
        let out = run(&h0, &p, &RunOptions { output_interval: 0.1, checkpoint: None })?;
        println!(
            "nu={nu:<4} margin={:+.3} L(1)={:+.6} fitted rate={:+.6}",
            p.stability_margin(),
            linear_symbol(1, &p),
            fit_decay_rate(&out.ledger)
        );
    }
    Ok(())
}

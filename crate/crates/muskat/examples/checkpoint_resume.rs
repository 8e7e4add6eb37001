//! Stops a run halfway, restarts it from the binary checkpoint and compares
//! with an uninterrupted run.

use muskat::cli::{execute_run, InitialData};
use muskat::evolution::DimensionlessParams;
use muskat::io::read_checkpoint;

fn main() -> muskat::Result<()> {
    let dir = std::env::temp_dir().join(format!("muskat_resume_{}", std::process::id()));
    let init = InitialData::Modes(vec![(1, 2e-4, 0.0), (2, 0.0, 5e-5), (5, 1e-5, 1e-5)]);
    let mut p = DimensionlessParams::reference();
    p.cutoff = 32;
    p.m = 48;
    p.mu = 0.02;
    p.dt = 0.01;

    p.t_final = 1.0;
    let (full, _) = execute_run(&p, &init, &dir.join("full"), 0.25)?;

    p.t_final = 0.5;
    execute_run(&p, &init, &dir.join("first"), 0.25)?;
    let ckpt = dir.join("first").join("checkpoint.bin");
    println!("checkpoint at t = {}", read_checkpoint(&ckpt)?.state.t);
    p.t_final = 1.0;
    let (resumed, _) = execute_run(&p, &InitialData::Checkpoint(ckpt), &dir.join("second"), 0.25)?;

    let diff = full.state.h.sub(&resumed.state.h);
    let rel = muskat::spectral::norm_s(&diff, 1.0) / muskat::spectral::norm_s(&full.state.h, 1.0);
    println!("ledger rows: full {}, resumed {}", full.ledger.rows.len(), resumed.ledger.rows.len());
    println!("relative |h_full - h_resumed|_1 at t = 1: {rel:.3e}");
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

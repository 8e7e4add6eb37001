use std::path::Path;
use std::time::{Duration, Instant};

use muskat::analysis::{
    constants_lab, fit_decay_rate, smallness_check, theorem_threshold, verify_energy, LabConfig, RATIO_SLACK,
};
use muskat::cli::{initial_spectrum, main_with_args, InitialData};
use muskat::evolution::{linear_symbol, run, DimensionlessParams, RunOptions};
use muskat::geometry::ale_matrices;
use muskat::potentials::{
    kernel_integral_bounds, phi1_field, solve_phi2, solve_phi2_fd, FixedPointOptions, KernelTable,
};
use muskat::spectral::PeriodicSpectrum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LINEAR_RATE: f64 = 0.462117;
const LINEAR_RATE_TOL: f64 = 0.01;
const ELLIPTIC_CONSTANT: f64 = 13.0;
const ORACLE_TOL: f64 = 1e-4;
const DECAY_RATE: f64 = 0.03125;
const THRESHOLD: f64 = 8.0128e-4;
const MU: f64 = 0.01;
const ENERGY_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, limit: Duration, elapsed: Duration, result: muskat::Result<Outcome>) -> bool {
    let (pass, detail) = match result {
        Ok(o) => (o.pass && elapsed <= limit, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "criterion {id} {name:<24} {} {detail} [{:.1} s, limit {} s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn check(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> muskat::Result<Outcome>) -> bool {
    let start = Instant::now();
    let result = f();
    report(id, name, limit, start.elapsed(), result)
}

fn mode1_run(nu: f64) -> muskat::Result<f64> {
    let mut p = DimensionlessParams::new(0.1, 0.25, nu);
    p.linear_only = true;
    p.t_final = 2.0;
    let h0 = PeriodicSpectrum::cosine(64, 1, 1e-6);
    let out = run(&h0, &p, &RunOptions { output_interval: 0.1, checkpoint: None })?;
    if let Some(e) = out.error {
        return Err(e);
    }
    Ok(fit_decay_rate(&out.ledger))
}

fn linear_dispersion() -> muskat::Result<Outcome> {
    let rate = mode1_run(4.0)?;
    let rel = (rate - LINEAR_RATE).abs() / LINEAR_RATE;
    Ok(Outcome { pass: rel <= LINEAR_RATE_TOL, detail: format!("rate={rate:.6} rel_err={rel:.2e}") })
}

fn elliptic_constant() -> muskat::Result<Outcome> {
    let report = constants_lab(&LabConfig::new(2, 1000))?;
    let mut worst: f64 = 0.0;
    let mut trials = usize::MAX;
    for id in ["elliptic_13_s0", "elliptic_13_s1"] {
        let row = report.row(id).expect("elliptic rows are always produced");
        worst = worst.max(row.empirical_constant);
        trials = trials.min(row.trials);
    }
    Ok(Outcome {
        pass: trials >= 1000 && worst <= ELLIPTIC_CONSTANT,
        detail: format!("trials={trials} max_constant={worst:.4}"),
    })
}

fn kernel_bounds() -> muskat::Result<Outcome> {
    let pairs: Vec<(u32, u32)> =
        (0..=2).flat_map(|j| (0..=2).map(move |l| (j, l))).filter(|(j, l)| j + l <= 3).collect();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for kappa in [0.1, 1.0, 10.0, 100.0] {
        for r in kernel_integral_bounds(kappa, &pairs, 64) {
            worst = worst.max(r.ratio);
            count += 1;
        }
    }
    Ok(Outcome { pass: count == 64 && worst <= 1.0, detail: format!("rows={count} max_ratio={worst:.4}") })
}

fn oracle_equivalence() -> muskat::Result<Outcome> {
    let (cutoff, m) = (32, 128);
    let p = DimensionlessParams::reference();
    let table = KernelTable::new(p.delta, cutoff, m);
    let opts = FixedPointOptions { tol: 1e-13, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let h = muskat::analysis::random_admissible(&mut rng, cutoff, 0.0, 5e-4)?;
        let phi1 = phi1_field(&h, &p, m);
        let ale = ale_matrices(&h, p.eps, p.delta, m)?;
        let green = solve_phi2(&h, &phi1, &ale, &table, p.eps, None, opts)?.solution.phi;
        let fd = solve_phi2_fd(&h, &phi1, &ale, p.delta, p.eps, opts)?.solution.phi;
        worst = worst.max(green.sub(&fd).norm_a1(0.0, 0.0)? / green.norm_a1(0.0, 0.0)?);
    }
    Ok(Outcome { pass: worst <= ORACLE_TOL, detail: format!("interfaces=100 max_rel_err={worst:.3e}") })
}

struct DecayRun {
    outcome: Outcome,
    radius: Outcome,
}

fn decay_run() -> muskat::Result<DecayRun> {
    let mut p = DimensionlessParams::reference();
    p.mu = MU;
    p.dt = 0.01;
    p.t_final = 50.0;
    let h0 = initial_spectrum(&InitialData::Algebraic { power: 4.0, norm1: 5e-4 }, p.cutoff)?;
    let small = smallness_check(&h0, &p);
    let threshold_ok = (theorem_threshold(&p) - THRESHOLD).abs() < 1e-8 && small.theorem_pass;
    let out = run(&h0, &p, &RunOptions { output_interval: 0.5, checkpoint: None })?;
    let energy = verify_energy(&out.ledger, small.h1, &p, ENERGY_TOL);
    let reached = out.error.is_none() && (out.state.t - 50.0).abs() < 1e-6;
    let pass = threshold_ok && reached && energy.pass() && (p.decay_rate() - DECAY_RATE).abs() < 1e-15;
    let outcome = Outcome {
        pass,
        detail: format!(
            "t={:.2} envelope_excess={:.2e} energy_increase={:.2e} energy_excess={:.2e} no_pinch_off={}",
            out.state.t,
            energy.worst_envelope_excess,
            energy.worst_energy_increase,
            energy.worst_energy_excess,
            energy.no_pinch_off
        ),
    };
    let mut worst = f64::INFINITY;
    let mut rows = 0;
    for r in out.ledger.rows.iter().filter(|r| r.t >= 1.0 - 1e-9) {
        worst = worst.min(r.radius - MU * r.t);
        rows += 1;
    }
    let radius =
        Outcome { pass: rows > 0 && worst >= 0.0, detail: format!("rows={rows} min(radius - mu t)={worst:.4}") };
    Ok(DecayRun { outcome, radius })
}

fn inequality_battery(dir: &Path) -> muskat::Result<Outcome> {
    let out = dir.join("verify");
    let code =
        main_with_args(["muskat", "verify", "--trials", "1000", "--seed", "0", "--output-dir", out.to_str().unwrap()]);
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(out.join("constants.csv"))?;
    let mut violated = Vec::new();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec?;
        rows += 1;
        let ratio: f64 = rec[3].parse().unwrap_or(f64::INFINITY);
        if ratio > 1.0 + RATIO_SLACK {
            violated.push(format!("{}={ratio:.3}", &rec[0]));
        }
    }
    Ok(Outcome {
        pass: code == 0 && violated.is_empty(),
        detail: format!("exit={code} rows={rows} violations=[{}]", violated.join(", ")),
    })
}

fn instability() -> muskat::Result<Outcome> {
    let p = DimensionlessParams::new(0.1, 0.25, 1.5);
    let expected = -linear_symbol(1, &p);
    let growth = -mode1_run(1.5)?;
    let rel = (growth - expected).abs() / expected;
    Ok(Outcome {
        pass: expected > 0.0 && rel <= LINEAR_RATE_TOL,
        detail: format!("growth={growth:.6} |L(1)|={expected:.6} rel_err={rel:.2e}"),
    })
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let secs = Duration::from_secs;
    let mut results = vec![
        check(1, "linear_dispersion", secs(5), linear_dispersion),
        check(2, "elliptic_constant", secs(120), elliptic_constant),
        check(3, "kernel_integral_bounds", secs(10), kernel_bounds),
        check(4, "phi2_oracle", secs(300), oracle_equivalence),
    ];
    let start = Instant::now();
    let decay = decay_run();
    let elapsed = start.elapsed();
    let (c5, c6) = match decay {
        Ok(d) => (Ok(d.outcome), Ok(d.radius)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    results.push(report(5, "global_decay", secs(600), elapsed, c5));
    results.push(report(6, "analyticity_gain", secs(600), elapsed, c6));
    results.push(check(7, "inequality_battery", secs(600), || inequality_battery(dir.path())));
    results.push(check(8, "instability_sanity", secs(5), instability));
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed < results.len() && std::env::var_os("MUSKAT_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

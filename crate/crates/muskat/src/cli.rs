//! Command-line driver: `run`, `verify`, `sweep`, `convert`, `radius`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{analyticity_radius, constants_lab, smallness_check, verify_energy, LabConfig, SmallnessReport};
use crate::error::{Error, Result};
use crate::evolution::{linear_symbol, run_from, DimensionlessParams, RunOptions, RunOutcome, SimState};
use crate::io::read_checkpoint;
use crate::nondim::{check_dimensional_theorem, PhysicalParams};
use crate::spectral::{norm_s, PeriodicSpectrum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    Dimensionless { eps: f64, delta: f64, nu: f64 },
    Physical(PhysicalParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "d_cutoff")]
    pub cutoff: usize,
    #[serde(default = "d_m")]
    pub m: usize,
    #[serde(default = "d_dt")]
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub jn_cutoff: Option<usize>,
}

fn d_cutoff() -> usize {
    64
}
fn d_m() -> usize {
    64
}
fn d_dt() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default)]
    pub linear_only: bool,
    #[serde(default)]
    pub override_smallness: bool,
    #[serde(default)]
    pub wide_mu: bool,
    #[serde(default)]
    pub sqrt_delta_nh_prefactor: bool,
}

/// Initial interface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `[n, a, b]` entries for `a cos(n x) + b sin(n x)`.
    Modes(Vec<(usize, f64, f64)>),
    /// `ĥ(n) ∝ (1+n)^{-power}` for `1 ≤ n ≤ N`, scaled to `|h|₁ = norm1`.
    Algebraic {
        power: f64,
        norm1: f64,
    },
    Checkpoint(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub numerics: Numerics,
    #[serde(default)]
    pub flags: Flags,
    pub initial: InitialData,
    pub output_dir: PathBuf,
    pub output_interval: f64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if !(c.output_interval > 0.0) {
            return Err(Error::Config("output_interval must be positive".into()));
        }
        Ok(c)
    }

    pub fn params(&self) -> Result<DimensionlessParams> {
        let mut p = match &self.model {
            Model::Dimensionless { eps, delta, nu } => DimensionlessParams::new(*eps, *delta, *nu),
            Model::Physical(ph) => ph.to_dimensionless()?.params(),
        };
        let n = &self.numerics;
        p.mu = n.mu;
        p.cutoff = n.cutoff;
        p.m = n.m;
        p.dt = n.dt;
        p.t_final = n.t_final;
        p.jn_cutoff = n.jn_cutoff;
        p.linear_only = self.flags.linear_only;
        p.override_smallness = self.flags.override_smallness;
        p.wide_mu = self.flags.wide_mu;
        p.sqrt_delta_nh_prefactor = self.flags.sqrt_delta_nh_prefactor;
        p.validate()?;
        Ok(p)
    }
}

pub fn initial_spectrum(init: &InitialData, cutoff: usize) -> Result<PeriodicSpectrum> {
    match init {
        InitialData::Modes(list) => {
            let mut c = vec![Complex64::new(0.0, 0.0); cutoff + 1];
            for &(n, a, b) in list {
                if n == 0 || n > cutoff {
                    return Err(Error::Config(format!("mode {n} outside 1..={cutoff}")));
                }
                c[n] += Complex64::new(a, -b) * 0.5;
            }
            Ok(PeriodicSpectrum::from_half(c))
        }
        InitialData::Algebraic { power, norm1 } => {
            let c: Vec<Complex64> = (0..=cutoff)
                .map(|n| if n == 0 { 0.0 } else { (1.0 + n as f64).powf(-power) })
                .map(|x| Complex64::new(x, 0.0))
                .collect();
            let v = PeriodicSpectrum::from_half(c);
            let s = norm_s(&v, 1.0);
            Ok(if s > 0.0 { v.scale(norm1 / s) } else { v })
        }
        InitialData::Checkpoint(path) => Ok(read_checkpoint(path)?.state.h),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub t_final: f64,
    pub steps: usize,
    pub norm0: f64,
    pub norm1: f64,
    pub norm1_mu: f64,
    pub norm4: f64,
    pub radius: f64,
    pub decay_rate: f64,
    pub theorem_decay_rate: f64,
    pub energy_monotone: bool,
    pub envelope_ok: bool,
    pub smallness: SmallnessReport,
    pub verdict: String,
    pub linear_rate_mode1: f64,
    pub max_phi2_iterations: usize,
    pub mean_phi2_iterations: f64,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

fn verdict(p: &DimensionlessParams) -> &'static str {
    if p.stability_margin() > 0.0 {
        "stable"
    } else {
        "RT-unstable regime"
    }
}

pub fn summarize(outcome: &RunOutcome, h0: &PeriodicSpectrum, p: &DimensionlessParams) -> RunSummary {
    let h0n = norm_s(h0, 1.0);
    let energy = verify_energy(&outcome.ledger, h0n, p, 1e-6);
    let last = outcome.ledger.rows.last();
    let steps = outcome.steps.max(1);
    RunSummary {
        t_final: outcome.state.t,
        steps: outcome.steps,
        norm0: last.map_or(0.0, |r| r.norm0),
        norm1: last.map_or(0.0, |r| r.norm1),
        norm1_mu: last.map_or(0.0, |r| r.norm1_mu),
        norm4: last.map_or(0.0, |r| r.norm4),
        radius: last.map_or(0.0, |r| r.radius),
        decay_rate: energy.fitted_decay_rate,
        theorem_decay_rate: p.decay_rate(),
        energy_monotone: energy.energy_monotone,
        envelope_ok: energy.envelope_ok,
        smallness: smallness_check(h0, p),
        verdict: verdict(p).to_string(),
        linear_rate_mode1: linear_symbol(1, p),
        max_phi2_iterations: outcome.max_phi2_iterations,
        mean_phi2_iterations: outcome.total_phi2_iterations as f64 / steps as f64,
        warnings: outcome.warnings.clone(),
        error: outcome.error.as_ref().map(|e| e.to_string()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

/// Runs a configuration, writing `ledger.csv`, `checkpoint.bin` and
/// `summary.json` into `dir`.
pub fn execute_run(
    p: &DimensionlessParams,
    init: &InitialData,
    dir: &Path,
    output_interval: f64,
) -> Result<(RunOutcome, RunSummary)> {
    fs::create_dir_all(dir)?;
    let ckpt = dir.join("checkpoint.bin");
    let opts = RunOptions { output_interval, checkpoint: Some(ckpt) };
    let (start, integral, ledger) = match init {
        InitialData::Checkpoint(path) => {
            let c = read_checkpoint(path)?;
            (c.state, c.integral4_mu, c.ledger)
        }
        other => (SimState { t: 0.0, h: initial_spectrum(other, p.cutoff)? }, 0.0, Default::default()),
    };
    let h0 = start.h.clone();
    let outcome = run_from(start, integral, ledger, p, &opts)?;
    outcome.ledger.write_csv(BufWriter::new(File::create(dir.join("ledger.csv"))?))?;
    let summary = summarize(&outcome, &h0, p);
    write_json(&dir.join("summary.json"), &summary)?;
    Ok((outcome, summary))
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Smallness { .. } | Error::Shape { .. } | Error::OverflowRisk { .. } => EXIT_CONFIG,
        Error::InequalityViolation { .. } => EXIT_VIOLATION,
        _ => EXIT_RUNTIME,
    }
}

#[derive(Parser, Debug)]
#[command(name = "muskat", version, about = "One-phase Muskat simulator and inequality lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate one trajectory from a JSON run configuration.
    Run {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        linear_only: bool,
        #[arg(long)]
        override_smallness: bool,
        #[arg(long)]
        wide_mu: bool,
        /// Resume from a checkpoint instead of the configured initial data.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run the constants laboratory and the kernel integral bounds.
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "verify")]
        output_dir: PathBuf,
    },
    /// Run a grid of configurations in parallel.
    Sweep { config: PathBuf },
    /// Convert physical parameters to dimensionless groups.
    Convert {
        physical: PathBuf,
        /// Dimensional interface size for the theorem check.
        #[arg(long)]
        h0: Option<f64>,
    },
    /// Fit the analyticity radius of a checkpointed interface.
    Radius { checkpoint: PathBuf },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub nu: Vec<f64>,
    /// `|h₀|₁` values; the base initial data is rescaled to each.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub eps: f64,
    pub delta: f64,
    pub nu: f64,
    pub amplitude: f64,
    pub verdict: String,
    pub completed: bool,
    pub decay_rate: f64,
    pub max_phi2_iterations: usize,
    pub mean_phi2_iterations: f64,
    pub error: String,
}

pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let Model::Dimensionless { eps, delta, nu } = cfg.base.model else {
        return Err(Error::Config("sweeps need a dimensionless base model".into()));
    };
    let axis = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let h_base = initial_spectrum(&cfg.base.initial, cfg.base.numerics.cutoff)?;
    let base_amp = norm_s(&h_base, 1.0);
    let mut points = Vec::new();
    for &e in &axis(&cfg.eps, eps) {
        for &d in &axis(&cfg.delta, delta) {
            for &n in &axis(&cfg.nu, nu) {
                for &a in &axis(&cfg.amplitudes, base_amp) {
                    points.push((e, d, n, a));
                }
            }
        }
    }
    let rows = points
        .into_par_iter()
        .enumerate()
        .map(|(index, (e, d, n, a))| {
            let mut c = cfg.base.clone();
            c.model = Model::Dimensionless { eps: e, delta: d, nu: n };
            let dir = cfg.base.output_dir.join(format!("point_{index:04}"));
            let mut row = SweepRow {
                index,
                eps: e,
                delta: d,
                nu: n,
                amplitude: a,
                verdict: String::new(),
                completed: false,
                decay_rate: 0.0,
                max_phi2_iterations: 0,
                mean_phi2_iterations: 0.0,
                error: String::new(),
            };
            let result = c.params().and_then(|p| {
                row.verdict = verdict(&p).to_string();
                let h = if base_amp > 0.0 { h_base.scale(a / base_amp) } else { h_base.clone() };
                let modes = (1..=p.cutoff)
                    .map(|k| {
                        let z = h.half()[k];
                        (k, 2.0 * z.re, -2.0 * z.im)
                    })
                    .filter(|m| m.1 != 0.0 || m.2 != 0.0)
                    .collect();
                execute_run(&p, &InitialData::Modes(modes), &dir, c.output_interval)
            });
            match result {
                Ok((outcome, summary)) => {
                    row.completed = outcome.error.is_none();
                    row.decay_rate = summary.decay_rate;
                    row.max_phi2_iterations = summary.max_phi2_iterations;
                    row.mean_phi2_iterations = summary.mean_phi2_iterations;
                    if let Some(e) = outcome.error {
                        row.error = e.to_string();
                    }
                }
                Err(e) => row.error = e.to_string(),
            }
            row
        })
        .collect();
    Ok(rows)
}

fn cmd_run(config: &Path, overrides: impl FnOnce(&mut RunConfig)) -> Result<i32> {
    let text = fs::read_to_string(config)?;
    let mut cfg = RunConfig::from_json(&text)?;
    overrides(&mut cfg);
    let p = cfg.params()?;
    let (outcome, summary) = execute_run(&p, &cfg.initial, &cfg.output_dir, cfg.output_interval)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(match &outcome.error {
        None => EXIT_OK,
        Some(e) => {
            eprintln!("run aborted: {e}");
            EXIT_RUNTIME
        }
    })
}

fn cmd_verify(trials: usize, seed: u64, dir: &Path) -> Result<i32> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    fs::create_dir_all(dir)?;
    let report = constants_lab(&LabConfig::new(seed, trials))?;
    let csv = dir.join("constants.csv");
    report.write_csv(BufWriter::new(File::create(&csv)?))?;
    for r in &report.rows {
        println!(
            "{:<28} trials={:<5} max_ratio={:.6e} empirical_constant={:.6e}",
            r.inequality_id, r.trials, r.max_ratio, r.empirical_constant
        );
    }
    println!("report: {}", csv.display());
    if report.violations().is_empty() {
        Ok(EXIT_OK)
    } else {
        let bundle = dir.join("counterexamples.json");
        write_json(&bundle, &report.counterexamples())?;
        eprintln!("{} inequality violations; counterexamples: {}", report.violations().len(), bundle.display());
        Ok(EXIT_VIOLATION)
    }
}

fn cmd_sweep(config: &Path) -> Result<i32> {
    let cfg: SweepConfig = serde_json::from_str(&fs::read_to_string(config)?)?;
    fs::create_dir_all(&cfg.base.output_dir)?;
    let rows = sweep(&cfg)?;
    let path = cfg.base.output_dir.join("sweep.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    println!("{} points written to {}", rows.len(), path.display());
    Ok(if rows.iter().all(|r| r.completed) { EXIT_OK } else { EXIT_RUNTIME })
}

fn cmd_convert(physical: &Path, h0: Option<f64>) -> Result<i32> {
    let p: PhysicalParams = serde_json::from_str(&fs::read_to_string(physical)?)?;
    let c = p.to_dimensionless()?;
    let report = check_dimensional_theorem(&p, h0.unwrap_or(0.0))?;
    let out = json!({"dimensionless": c, "stable": c.nu * c.delta.sqrt() > 1.0, "theorem": report});
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(EXIT_OK)
}

fn cmd_radius(path: &Path) -> Result<i32> {
    let c = read_checkpoint(path)?;
    let fit = analyticity_radius(&c.state.h);
    println!("{}", serde_json::to_string_pretty(&json!({"t": c.state.t, "fit": fit}))?);
    Ok(EXIT_OK)
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { config, output_dir, t_final, dt, mu, linear_only, override_smallness, wide_mu, resume } => {
            cmd_run(&config, |c| {
                if let Some(d) = output_dir {
                    c.output_dir = d;
                }
                if let Some(t) = t_final {
                    c.numerics.t_final = t;
                }
                if let Some(v) = dt {
                    c.numerics.dt = v;
                }
                if let Some(v) = mu {
                    c.numerics.mu = v;
                }
                c.flags.linear_only |= linear_only;
                c.flags.override_smallness |= override_smallness;
                c.flags.wide_mu |= wide_mu;
                if let Some(r) = resume {
                    c.initial = InitialData::Checkpoint(r);
                }
            })
        }
        Command::Verify { trials, seed, output_dir } => cmd_verify(trials, seed, &output_dir),
        Command::Sweep { config } => cmd_sweep(&config),
        Command::Convert { physical, h0 } => cmd_convert(&physical, h0),
        Command::Radius { checkpoint } => cmd_radius(&checkpoint),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

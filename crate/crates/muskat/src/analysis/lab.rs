use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::evolution::{nh_bracket, nonlinear_terms, DimensionlessParams};
use crate::geometry::{ale_matrices, dn_trace, StripField};
use crate::potentials::{
    kernel_integral_bounds, phi1_field, solve_phi2, solve_poisson_green, FixedPointOptions, KernelTable,
};
use crate::spectral::{
    apply_multiplier, compose_f, compose_g, homogeneous_norm, k_s, ksn_constant, product, tanh_symbol, wiener_norm,
    PeriodicSpectrum, WienerIndex,
};

/// Relative slack on `max_ratio` before a row counts as violated.
pub const RATIO_SLACK: f64 = 1e-12;
const DELTAS: [f64; 4] = [0.1, 0.25, 0.5, 0.9];

#[derive(Clone, Debug)]
pub struct LabConfig {
    pub seed: u64,
    pub trials: usize,
    pub cutoff: usize,
    pub m: usize,
    pub lambda_max: f64,
    /// Every random input replaced by zero.
    pub zero_inputs: bool,
    pub kernel_samples: usize,
}

impl LabConfig {
    pub fn new(seed: u64, trials: usize) -> Self {
        Self { seed, trials, cutoff: 32, m: 64, lambda_max: 0.3, zero_inputs: false, kernel_samples: 64 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabRow {
    pub inequality_id: String,
    pub paper_ref: String,
    pub trials: usize,
    pub max_ratio: f64,
    pub empirical_constant: f64,
    #[serde(skip)]
    pub worst: Option<serde_json::Value>,
}

impl LabRow {
    pub fn violated(&self) -> bool {
        !(self.max_ratio <= 1.0 + RATIO_SLACK)
    }
}

#[derive(Clone, Debug)]
pub struct LabReport {
    pub seed: u64,
    pub trials: usize,
    pub rows: Vec<LabRow>,
}

impl LabReport {
    pub fn violations(&self) -> Vec<&LabRow> {
        self.rows.iter().filter(|r| r.violated()).collect()
    }

    pub fn row(&self, id: &str) -> Option<&LabRow> {
        self.rows.iter().find(|r| r.inequality_id == id)
    }

    pub fn check(&self) -> Result<()> {
        match self.violations().first() {
            None => Ok(()),
            Some(r) => Err(Error::InequalityViolation {
                id: r.inequality_id.clone(),
                ratio: r.max_ratio,
                counterexample: r.worst.as_ref().map(|v| v.to_string()).unwrap_or_default(),
            }),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# seed={} trials={}", self.seed, self.trials)?;
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Counterexample bundle for every violated row.
    pub fn counterexamples(&self) -> serde_json::Value {
        let items: Vec<_> = self
            .violations()
            .into_iter()
            .map(|r| json!({"inequality_id": r.inequality_id, "ratio": r.max_ratio, "inputs": r.worst}))
            .collect();
        json!({"seed": self.seed, "trials": self.trials, "violations": items})
    }
}

struct Sample {
    id: String,
    reference: &'static str,
    constant: f64,
    ratio: f64,
    inputs: Option<serde_json::Value>,
}

#[derive(Clone)]
struct Agg {
    reference: &'static str,
    constant: f64,
    trials: usize,
    ratio: f64,
    trial: usize,
    inputs: Option<serde_json::Value>,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// `Σ_{n≥1} |a_n| K_{s,n} x^{n-1}` for `s ≤ 1`, where `K_{s,n}` is the
/// iterated product-rule constant (`1` at `s = 0`, `n` on `(0, 1]`).
fn series_majorant(s: f64, x: f64, abs_coeff: impl Fn(usize) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = 1.0;
    for n in 1..100_000 {
        let k = if n == 1 || s == 0.0 { 1.0 } else { ksn_constant(s, n as u32) };
        sum += abs_coeff(n) * k * pow;
        if n > 4 && pow * (n as f64).powi(3) < 1e-17 * sum {
            break;
        }
        pow *= x;
    }
    sum
}

/// `|F^{(n)}(0)|/n!` for `F(x) = (1+x²)^{-3/2} - 1`.
fn f_taylor_abs(n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    (1..=n / 2).fold(1.0, |c, k| c * (k as f64 + 0.5) / k as f64)
}

fn wn(v: &PeriodicSpectrum, s: f64, lambda: f64) -> Result<f64> {
    wiener_norm(v, WienerIndex::new(s, lambda))
}

/// `ĥ(n) = r_n e^{iθ_n} e^{-ρ|n|}/(1+|n|)⁴` with `ρ ∈ [0, 1]`; a random real
/// mean is added unless `zero_mean`.
pub fn random_spectrum<R: Rng>(rng: &mut R, cutoff: usize, zero_mean: bool) -> PeriodicSpectrum {
    let rho: f64 = rng.gen_range(0.0..1.0);
    let mut c = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    if !zero_mean {
        c[0] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
    }
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        let r: f64 = rng.gen_range(0.0..1.0);
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        *ck = Complex64::from_polar(r * (-rho * k as f64).exp() / (1.0 + k as f64).powi(4), th);
    }
    PeriodicSpectrum::from_half(c)
}

/// One to three of the modes `1..=4` sharing a common phase, the extremal
/// configuration for products and compositions; a random real mean is added
/// unless `zero_mean`.
pub fn aligned_spectrum<R: Rng>(rng: &mut R, cutoff: usize, zero_mean: bool) -> PeriodicSpectrum {
    let mut c = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    if !zero_mean {
        c[0] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
    }
    let phase = Complex64::from_polar(1.0, rng.gen_range(0..4) as f64 * std::f64::consts::FRAC_PI_2);
    let top = cutoff.min(4);
    for _ in 0..rng.gen_range(1..=3) {
        let k = rng.gen_range(1..=top);
        c[k] += phase * rng.gen_range(0.1..1.0);
    }
    PeriodicSpectrum::from_half(c)
}

/// A random zero-mean interface with `|h|_{1,λ}` equal to `target`.
pub fn random_admissible<R: Rng>(rng: &mut R, cutoff: usize, lambda: f64, target: f64) -> Result<PeriodicSpectrum> {
    rescale(random_spectrum(rng, cutoff, true), 1.0, lambda, target)
}

fn rescale(v: PeriodicSpectrum, s: f64, lambda: f64, target: f64) -> Result<PeriodicSpectrum> {
    let n = wn(&v, s, lambda)?;
    Ok(if n > 0.0 { v.scale(target / n) } else { v })
}

/// A strip field vanishing at `x₂ = -1` together with its exact `∂₂`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RandomStrip {
    pub value: StripField,
    pub dx2: StripField,
}

/// Profiles `ĉ_n (a₁(1+x) + a₂ sin(ω(1+x)) + a₃(1+x)²)` with `ĉ` from
/// [`random_spectrum`] and random complex `a_j`, `ω ∈ [0, 10]`.
pub fn random_strip<R: Rng>(rng: &mut R, cutoff: usize, m: usize) -> RandomStrip {
    let c = random_spectrum(rng, cutoff, false);
    let mut value = Vec::with_capacity(cutoff + 1);
    let mut dx2 = Vec::with_capacity(cutoff + 1);
    let grid = crate::geometry::uniform_grid(m);
    for n in 0..=cutoff {
        let mut a = [Complex64::new(0.0, 0.0); 3];
        for aj in a.iter_mut() {
            let im = if n == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) };
            *aj = Complex64::new(rng.gen_range(-1.0..1.0), im);
        }
        let w: f64 = rng.gen_range(0.0..10.0);
        let cn = c.half()[n];
        value.push(
            grid.iter()
                .map(|&x| {
                    let y = 1.0 + x;
                    cn * (a[0] * y + a[1] * (w * y).sin() + a[2] * y * y)
                })
                .collect(),
        );
        dx2.push(
            grid.iter()
                .map(|&x| {
                    let y = 1.0 + x;
                    cn * (a[0] + a[1] * w * (w * y).cos() + a[2] * 2.0 * y)
                })
                .collect(),
        );
    }
    RandomStrip { value: StripField::from_profiles(m, value), dx2: StripField::from_profiles(m, dx2) }
}

fn strip_product(f: &StripField, g: &StripField) -> Result<StripField> {
    let m = f.m();
    let nodes = (0..=m).map(|i| product(&f.node(i), &g.node(i))).collect::<Result<Vec<_>>>()?;
    let profiles = (0..=f.cutoff()).map(|n| nodes.iter().map(|s| s.half()[n]).collect()).collect();
    Ok(StripField::from_profiles(m, profiles))
}

fn spec_json(v: &PeriodicSpectrum) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

struct Ctx<'a> {
    cfg: &'a LabConfig,
    tables: &'a [KernelTable],
}

struct Trial<'a> {
    ctx: &'a Ctx<'a>,
    record: bool,
    rng: ChaCha8Rng,
    out: Vec<Sample>,
}

impl<'a> Trial<'a> {
    fn push(
        &mut self,
        id: impl Into<String>,
        reference: &'static str,
        constant: f64,
        r: f64,
        inputs: impl FnOnce() -> serde_json::Value,
    ) {
        let inputs = if self.record { Some(inputs()) } else { None };
        self.out.push(Sample { id: id.into(), reference, constant, ratio: r, inputs });
    }

    fn zero(&self) -> bool {
        self.ctx.cfg.zero_inputs
    }

    fn spectrum(&mut self, zero_mean: bool) -> PeriodicSpectrum {
        let n = self.ctx.cfg.cutoff;
        let v = if self.rng.gen_bool(0.25) {
            aligned_spectrum(&mut self.rng, n, zero_mean)
        } else {
            random_spectrum(&mut self.rng, n, zero_mean)
        };
        if self.zero() {
            PeriodicSpectrum::zeros(n)
        } else {
            v
        }
    }

    fn strip(&mut self) -> RandomStrip {
        let (n, m) = (self.ctx.cfg.cutoff, self.ctx.cfg.m);
        let s = random_strip(&mut self.rng, n, m);
        if self.zero() {
            RandomStrip { value: StripField::zeros(n, m), dx2: StripField::zeros(n, m) }
        } else {
            s
        }
    }

    fn lambda(&mut self) -> f64 {
        self.rng.gen_range(0.0..=self.ctx.cfg.lambda_max)
    }

    fn fraction(&mut self) -> f64 {
        self.rng.gen_range(0.01..0.99)
    }

    fn params(&mut self) -> (DimensionlessParams, usize) {
        let di = self.rng.gen_range(0..DELTAS.len());
        let delta = DELTAS[di];
        let eps = self.rng.gen_range(0.02..0.5);
        let nu = (1.0 + self.rng.gen_range(0.05..4.0)) / delta.sqrt();
        let mut p = DimensionlessParams::new(eps, delta, nu);
        p.cutoff = self.ctx.cfg.cutoff;
        p.m = self.ctx.cfg.m;
        (p, di)
    }

    fn wiener(&mut self) -> Result<()> {
        let lam = self.lambda();
        let f = self.spectrum(false);
        let g = self.spectrum(false);
        let fg = product(&f, &g)?;
        let inputs = || json!({"lambda": lam, "f": spec_json(&f), "g": spec_json(&g)});
        for s in [0.0, 1.0, 2.0] {
            let ks = k_s(s);
            let (f0, fs, g0, gs) = (wn(&f, 0.0, lam)?, wn(&f, s, lam)?, wn(&g, 0.0, lam)?, wn(&g, s, lam)?);
            let lhs = wn(&fg, s, lam)?;
            self.push(
                format!("product_rule_s{s}"),
                "Wiener product rule",
                ks,
                ratio(lhs, ks * (f0 * gs + fs * g0)),
                inputs,
            );
            let c = 2f64.powf(s + 1.0);
            self.push(
                format!("product_rule_crude_s{s}"),
                "Wiener product rule, crude form",
                c,
                ratio(lhs, c * fs * gs),
                inputs,
            );
        }
        for n in 2u32..=4 {
            let mut p = f.clone();
            for _ in 1..n {
                p = product(&p, &f)?;
            }
            let mut worst: f64 = 0.0;
            let mut kmax: f64 = 1.0;
            for s in [0.0, 1.0, 2.0] {
                let k = ksn_constant(s, n);
                let r = ratio(wn(&p, s, lam)?, k * wn(&f, 0.0, lam)?.powi(n as i32 - 1) * wn(&f, s, lam)?);
                if r > worst {
                    worst = r;
                    kmax = k;
                }
            }
            self.push(format!("power_rule_n{n}"), "iterated product rule K_{s,n}", kmax, worst, inputs);
        }
        for theta in [0.25, 0.5, 0.75] {
            let s1 = self.rng.gen_range(0.0..4.0);
            let s2 = self.rng.gen_range(0.0..4.0);
            let st = theta * s1 + (1.0 - theta) * s2;
            let rhs = wn(&f, s1, lam)?.powf(theta) * wn(&f, s2, lam)?.powf(1.0 - theta);
            let r = ratio(wn(&f, st, lam)?, rhs);
            self.push(
                format!("interpolation_theta{theta}"),
                "interpolation inequality",
                1.0,
                r,
                || json!({"s1": s1, "s2": s2, "inputs": inputs()}),
            );
        }
        let v = self.spectrum(true);
        let s = self.rng.gen_range(0.0..4.0);
        let idx = WienerIndex::new(s, lam);
        let (hom, full) = (homogeneous_norm(&v, idx)?, wiener_norm(&v, idx)?);
        let vin = || json!({"lambda": lam, "s": s, "v": spec_json(&v)});
        self.push("homogeneous_upper", "homogeneous vs inhomogeneous norm", 1.0, ratio(hom, full), vin);
        self.push("homogeneous_lower", "homogeneous vs inhomogeneous norm", 2.0, ratio(full / 2.0, hom), vin);
        let c = 2f64.powf(s.max(1.0));
        self.push(
            "homogeneous_lower_2s",
            "homogeneous vs inhomogeneous norm, factor 2^max(s,1)",
            c,
            ratio(full / c, hom),
            vin,
        );
        let delta = self.rng.gen_range(0.01..=1.0);
        let tv = wiener_norm(&apply_multiplier(&tanh_symbol(delta), &v), idx)?;
        self.push(
            "tanh_lower_bound",
            "lower bound of tanh(sqrt(delta) Lambda)",
            1.0,
            ratio(delta.sqrt() / 2.0 * full, tv),
            vin,
        );
        Ok(())
    }

    fn compositions(&mut self) -> Result<()> {
        for s in [0.0, 1.0] {
            let lam = self.lambda();
            let u = self.fraction();
            let ks = k_s(s);
            let v = rescale(self.spectrum(false), 0.0, lam, u * 1f64.min(1.0 / ks))?;
            let v0 = wn(&v, 0.0, lam)?;
            let vs = wn(&v, s, lam)?;
            let inputs = || json!({"lambda": lam, "v": spec_json(&v)});
            let fs = wn(&compose_f(&v, 1.0), s, lam)?;
            self.push(format!("compose_F_s{s}"), "composition with F", 1.0, ratio(fs, vs), inputs);
            let f_series = vs * series_majorant(s, v0, f_taylor_abs);
            self.push(
                format!("compose_F_series_s{s}"),
                "composition with F, series majorant",
                1.0,
                ratio(fs, f_series),
                inputs,
            );
            let gs = wn(&compose_g(&v)?, s, lam)?;
            self.push(format!("compose_G_s{s}"), "composition with G", 1.0, ratio(gs, vs / (1.0 - ks * v0)), inputs);
            let g_series = vs * series_majorant(s, v0, |_| 1.0);
            self.push(
                format!("compose_G_series_s{s}"),
                "composition with G, series majorant",
                1.0,
                ratio(gs, g_series),
                inputs,
            );
        }
        Ok(())
    }

    fn strips(&mut self) -> Result<()> {
        let lam = self.lambda();
        let f = self.strip();
        let g = self.strip();
        let inputs = || json!({"lambda": lam, "f": f, "g": g});
        for s in [0.0, 1.0] {
            let fs = f.dx2.norm_l1(s, lam)?;
            let trace = wn(&f.value.top(), s, lam)?;
            self.push(format!("trace_s{s}"), "trace estimate", 1.0, ratio(trace, fs), inputs);
            let sup = f.value.norm_sup(s, lam);
            self.push(format!("embedding_s{s}"), "sup-in-depth embedding", 1.0, ratio(sup, fs), inputs);
        }
        let d = strip_product(&f.dx2, &g.value)?.add(&strip_product(&f.value, &g.dx2)?);
        for s in [0.0, 1.0] {
            let lhs = d.norm_l1(s, lam)?;
            let (f0, g0) = (f.dx2.norm_l1(0.0, lam)?, g.dx2.norm_l1(0.0, lam)?);
            let rhs = if s == 0.0 {
                2.0 * f0 * g0
            } else {
                let (f1, g1) = (f.dx2.norm_l1(s, lam)?, g.dx2.norm_l1(s, lam)?);
                2.0 * k_s(s) * (f1 * g0 + f0 * g1)
            };
            self.push(format!("strip_product_s{s}"), "strip product rule", 2.0 * k_s(s), ratio(lhs, rhs), inputs);
        }
        Ok(())
    }

    fn elliptic(&mut self) -> Result<()> {
        let di = self.rng.gen_range(0..DELTAS.len());
        let ctx = self.ctx;
        let table = &ctx.tables[di];
        let lam = self.lambda();
        let g1 = self.strip();
        let g2 = self.strip();
        let sol = solve_poisson_green(&g1.value, &g2.value, table)?;
        let z = StripField::zeros(g1.value.cutoff(), g1.value.m());
        let only1 = solve_poisson_green(&g1.value, &z, table)?;
        let only2 = solve_poisson_green(&z, &g2.value, table)?;
        let inputs = || json!({"delta": table.delta, "lambda": lam, "g1": g1, "g2": g2});
        let (d1d2, d22) = exact_second_derivatives(&sol, &g1.value, &g2.dx2, table);
        for s in [0.0, 1.0] {
            let lhs = d1d2.norm_l1(s, lam)? + d22.norm_l1(s, lam)?;
            let rhs = g1.dx2.norm_l1(s, lam)? + g2.dx2.norm_l1(s, lam)?;
            self.push(
                format!("elliptic_13_s{s}"),
                "elliptic estimate of the Poisson problem",
                13.0,
                ratio(lhs, 13.0 * rhs),
                inputs,
            );
        }
        let (a1, b1) = exact_second_derivatives(&only1, &g1.value, &z, table);
        let (a2, b2) = exact_second_derivatives(&only2, &z, &g2.dx2, table);
        let mut w = [0.0f64; 4];
        let grid_h = 1.0 / table.m() as f64;
        let l1 = |p: &[Complex64]| crate::quad::integrate(&p.iter().map(|c| c.norm()).collect::<Vec<_>>(), grid_h);
        for n in 1..=g1.value.cutoff() {
            let dg1 = l1(g1.dx2.profile(n));
            let dg2 = l1(g2.dx2.profile(n));
            w[0] = w[0].max(ratio(l1(b1.profile(n)), 5.5 * dg1));
            w[1] = w[1].max(ratio(l1(b2.profile(n)), 5.5 * dg2));
            w[2] = w[2].max(ratio(l1(a1.profile(n)), 7.5 * dg1));
            w[3] = w[3].max(ratio(l1(a2.profile(n)), 4.5 * dg2));
        }
        let names = [
            ("elliptic_d22_from_g1", 5.5),
            ("elliptic_d22_from_g2", 5.5),
            ("elliptic_d12_from_g1", 7.5),
            ("elliptic_d12_from_g2", 4.5),
        ];
        for ((id, c), r) in names.into_iter().zip(w) {
            self.push(id, "per-mode intermediate elliptic constants", c, r, inputs);
        }
        Ok(())
    }

    fn interface(&mut self) -> Result<()> {
        let (p, di) = self.params();
        let ctx = self.ctx;
        let table = &ctx.tables[di];
        let lam = self.lambda();
        let n = self.ctx.cfg.cutoff;
        let (eps, delta, nu, alpha) = (p.eps, p.delta, p.nu, p.alpha);
        let rd = delta.sqrt();
        let u = self.fraction();
        let h = if self.zero() {
            PeriodicSpectrum::zeros(n)
        } else {
            random_admissible(&mut self.rng, n, lam, u / (520.0 * eps))?
        };
        let hn = |s: f64| wn(&h, s, lam);
        let h1 = hn(1.0)?;
        let inputs = || json!({"eps": eps, "delta": delta, "nu": nu, "lambda": lam, "h": spec_json(&h)});
        let bracket =
            |s: f64| -> Result<f64> { Ok(nu * alpha * (1.0 + 2.0 * alpha * h1) * hn(s + 2.0)? + eps * hn(s)?) };

        let phi1 = phi1_field(&h, &p, table.m());
        for s0 in [0.0, 1.0] {
            for (j, field) in [(1, &phi1.d2), (2, &phi1.d22)] {
                let jf = j as f64;
                let rhs = 2.0 * delta.powf((jf - 1.0) / 2.0) * k_s(s0 + jf - 1.0) * bracket(s0 + jf - 1.0)?;
                let r = ratio(field.norm_l1(s0, lam)?, rhs);
                self.push(format!("phi1_strip_s{s0}_j{j}"), "strip estimate of phi1", 2.0, r, inputs);
            }
            let rhs = 2.0 * k_s(s0 + 1.0) * bracket(s0 + 1.0)?;
            self.push(
                format!("phi1_d1_trace_s{s0}"),
                "trace estimates of phi1",
                2.0,
                ratio(wn(&phi1.psi.deriv(), s0, lam)?, rhs),
                inputs,
            );
            self.push(
                format!("phi1_d2_trace_s{s0}"),
                "trace estimates of phi1",
                2.0,
                ratio(wn(&phi1.d2.top(), s0, lam)?, rd * rhs),
                inputs,
            );
        }

        let ale = ale_matrices(&h, eps, delta, table.m())?;
        for s in [0.0, 1.0] {
            let qn = ale.q11.norm_a1(s, lam)? + 2.0 * ale.q12.norm_a1(s, lam)? + ale.q22.norm_a1(s, lam)?;
            self.push(format!("q_bound_s{s}"), "bound on Q", 10.0, ratio(qn, 10.0 * hn(s + 1.0)?), inputs);
        }

        let phi2 = solve_phi2(&h, &phi1, &ale, table, eps, None, FixedPointOptions::default())?;
        let c0 = 260.0 * eps * h1 / rd;
        for s in [0.0, 1.0] {
            let rhs = 8.0 * c0 * delta * (k_s(s + 1.0) + 2.0) * bracket(s + 1.0)?;
            let lhs = phi2.solution.grad_norm_a1(s, lam)?;
            self.push(format!("phi2_strip_s{s}"), "strip estimate of phi2", 8.0, ratio(lhs, rhs), inputs);
            let tr = wn(&phi2.solution.trace_d2, s, lam)?;
            self.push(format!("phi2_d2_trace_s{s}"), "trace estimate of phi2", 8.0, ratio(tr, rhs), inputs);
        }
        let contraction = if phi2.iterations > 2 { phi2.contraction } else { 0.0 };
        self.push("phi2_contraction", "contraction of the phi2 iteration", 1.0, contraction, inputs);

        let (terms, _) = nonlinear_terms(&h, &p, table, Some(&phi2.solution), FixedPointOptions::default())?;
        let q = 2.0 * eps * h1 / (1.0 - eps * h1);
        let b4 = nu * alpha * hn(4.0)? * (1.0 + 2.0 * alpha * h1) + eps * hn(2.0)?;
        let rhs1 = 2.0 * rd * (2.0 + rd * (5.0 + 7.0 * eps * (1.0 + q) * h1)) * h1 * b4;
        self.push("n_phi1_bound", "bound on N_phi1", 1.0, ratio(wn(&terms.n_phi1, 1.0, lam)?, rhs1), inputs);
        let rhs2 = 48.0 * c0 * rd * ((1.0 + q) / eps + 2.0 * delta * h1 * (1.0 + 2.0 * eps * h1 * (1.0 + q))) * b4;
        self.push("n_phi2_bound", "bound on N_phi2", 48.0, ratio(wn(&terms.n_phi2, 1.0, lam)?, rhs2), inputs);
        let nh = nh_bracket(&h, &p)?.scale(rd);
        let rhs3 = 2.0 * rd * nu * alpha * h1 * ((1.0 + alpha) * eps / (1.0 - eps * h1) + alpha) * hn(4.0)?;
        self.push("n_h_bound", "bound on N_h", 2.0, ratio(wn(&nh, 1.0, lam)?, rhs3), inputs);
        Ok(())
    }

    fn pullback(&mut self) -> Result<()> {
        let n = self.ctx.cfg.cutoff;
        for s in [0.0, 1.0] {
            let lam = self.lambda();
            let eps = self.rng.gen_range(0.02..1.0);
            let ks = k_s(s);
            let u = self.fraction();
            let h = if self.zero() {
                PeriodicSpectrum::zeros(n)
            } else {
                random_admissible(&mut self.rng, n, lam, u / (ks * eps))?
            };
            let a = self.spectrum(false);
            let b = self.spectrum(false);
            let h1 = wn(&h, 1.0, lam)?;
            let hs1 = wn(&h, s + 1.0, lam)?;
            let g = compose_g(&dn_trace(&h).scale(eps))?;
            let a12 = product(&h.deriv().scale(eps), &g.add_constant(-1.0))?;
            let a22 = g.scale(-1.0).add_constant(1.0);
            let (as_, bs, b0) = (wn(&a, s, lam)?, wn(&b, s, lam)?, wn(&b, 0.0, lam)?);
            let inputs =
                || json!({"eps": eps, "lambda": lam, "h": spec_json(&h), "d1w": spec_json(&a), "d2w": spec_json(&b)});
            let lhs1 = wn(&a.add(&product(&a12, &b)?), s, lam)?;
            let e = eps * h1;
            let rhs1 = as_
                + (1.0 + eps * (1.0 + 2.0 * e / (1.0 - e)) * h1) * bs
                + ks * eps * (1.0 + e * (1.0 / (1.0 - e) + 1.0 / (1.0 - ks * e))) * hs1 * b0;
            self.push(
                format!("pullback_a1_s{s}"),
                "pullback transport estimate, first row",
                1.0,
                ratio(lhs1, rhs1),
                inputs,
            );
            let lhs2 = wn(&product(&a22, &b)?, s, lam)?;
            let rhs2 = (1.0 + e / (1.0 - e)) * bs + eps / (1.0 - ks * e) * hs1 * b0;
            self.push(
                format!("pullback_a2_s{s}"),
                "pullback transport estimate, second row",
                1.0,
                ratio(lhs2, rhs2),
                inputs,
            );
        }
        Ok(())
    }
}

/// `(√δ∂₂∂₁φ, ∂₂²φ)` from the PDE: `∂₂²φ̂ = κ²φ̂ + iκĝ₁ + ∂₂ĝ₂`.
fn exact_second_derivatives(
    sol: &crate::potentials::PoissonSolution,
    g1: &StripField,
    dg2: &StripField,
    table: &KernelTable,
) -> (StripField, StripField) {
    let cutoff = g1.cutoff();
    let m = g1.m();
    let rd = table.delta.sqrt();
    let i = Complex64::new(0.0, 1.0);
    let mut a = Vec::with_capacity(cutoff + 1);
    let mut b = Vec::with_capacity(cutoff + 1);
    for n in 0..=cutoff {
        let k = rd * n as f64;
        a.push(sol.d2.profile(n).iter().map(|c| c * i * k).collect());
        b.push((0..=m).map(|t| sol.phi.profile(n)[t] * k * k + g1.profile(n)[t] * i * k + dg2.profile(n)[t]).collect());
    }
    (StripField::from_profiles(m, a), StripField::from_profiles(m, b))
}

fn kernel_rows(samples: usize) -> Vec<Sample> {
    let pairs: Vec<(u32, u32)> =
        (0..=2).flat_map(|j| (0..=2).map(move |l| (j, l))).filter(|(j, l)| j + l <= 3).collect();
    let mut out = Vec::new();
    for kappa in [0.1, 1.0, 10.0, 100.0] {
        for r in kernel_integral_bounds(kappa, &pairs, samples) {
            let c = if r.family == "Pi1" { 2.0 } else { 2.5 };
            out.push(Sample {
                id: format!("kernel_{}_j{}_l{}", r.family, r.j, r.l),
                reference: "kernel integral bounds",
                constant: c,
                ratio: r.ratio,
                inputs: Some(json!({"kappa": kappa, "measured": r.measured, "bound": r.bound})),
            });
        }
    }
    out
}

fn merge(into: &mut HashMap<String, Agg>, order: &mut Vec<String>, trial: usize, samples: Vec<Sample>) {
    for s in samples {
        let e = into.entry(s.id.clone()).or_insert_with(|| {
            order.push(s.id.clone());
            Agg {
                reference: s.reference,
                constant: s.constant,
                trials: 0,
                ratio: f64::NEG_INFINITY,
                trial,
                inputs: None,
            }
        });
        e.trials += 1;
        let better = s.ratio > e.ratio || (s.ratio == e.ratio && trial < e.trial) || s.ratio.is_nan();
        if better && !e.ratio.is_nan() {
            e.ratio = s.ratio;
            e.trial = trial;
            e.constant = s.constant;
            e.inputs = s.inputs;
        }
    }
}

fn run_trial(ctx: &Ctx, trial: usize, record: bool) -> Result<Vec<Sample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    rng.set_stream(trial as u64);
    let mut t = Trial { ctx, record, rng, out: Vec::new() };
    t.wiener()?;
    t.compositions()?;
    t.strips()?;
    t.pullback()?;
    t.elliptic()?;
    t.interface()?;
    Ok(t.out)
}

/// Runs every inequality on `trials` seeded random draws and reports the
/// largest observed ratio of left- to right-hand side per inequality.
pub fn constants_lab(cfg: &LabConfig) -> Result<LabReport> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let tables: Vec<KernelTable> = DELTAS.iter().map(|&d| KernelTable::new(d, cfg.cutoff, cfg.m)).collect();
    let ctx = Ctx { cfg, tables: &tables };
    let results: Vec<Vec<Sample>> =
        (0..cfg.trials).into_par_iter().map(|t| run_trial(&ctx, t, false)).collect::<Result<_>>()?;
    let mut map = HashMap::new();
    let mut order = Vec::new();
    for (t, samples) in results.into_iter().enumerate() {
        merge(&mut map, &mut order, t, samples);
    }
    merge(&mut map, &mut order, 0, kernel_rows(cfg.kernel_samples));
    for a in map.values_mut().filter(|a| a.inputs.is_none() && !(a.ratio <= 1.0 + RATIO_SLACK)) {
        a.inputs = Some(json!({"seed": cfg.seed, "trial": a.trial}));
    }
    let replay: Vec<usize> = {
        let mut v: Vec<usize> = map.values().filter(|a| !(a.ratio <= 1.0 + RATIO_SLACK)).map(|a| a.trial).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for t in replay {
        for s in run_trial(&ctx, t, true)? {
            if let Some(a) = map.get_mut(&s.id) {
                if a.trial == t && a.ratio == s.ratio {
                    a.inputs = s.inputs.map(|v| json!({"seed": cfg.seed, "trial": t, "inputs": v}));
                }
            }
        }
    }
    let rows = order
        .into_iter()
        .map(|id| {
            let a = map.remove(&id).expect("aggregated id");
            LabRow {
                inequality_id: id,
                paper_ref: a.reference.to_string(),
                trials: a.trials,
                max_ratio: a.ratio,
                empirical_constant: a.ratio * a.constant,
                worst: a.inputs,
            }
        })
        .collect();
    Ok(LabReport { seed: cfg.seed, trials: cfg.trials, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn series_majorants_in_closed_form() {
        let x: f64 = 0.6;
        assert_relative_eq!(series_majorant(0.0, x, |_| 1.0), 1.0 / (1.0 - x), max_relative = 1e-14);
        assert_relative_eq!(series_majorant(1.0, x, |_| 1.0), 1.0 / ((1.0 - x) * (1.0 - x)), max_relative = 1e-14);
        let f_tilde = (1.0 - x * x).powf(-1.5) - 1.0;
        assert_relative_eq!(series_majorant(0.0, x, f_taylor_abs), f_tilde / x, max_relative = 1e-14);
        assert_relative_eq!(
            series_majorant(1.0, x, f_taylor_abs),
            3.0 * x * (1.0 - x * x).powf(-2.5),
            max_relative = 1e-14
        );
        assert_eq!(f_taylor_abs(2), 1.5);
        assert_eq!(f_taylor_abs(4), 1.875);
    }

    #[test]
    fn zero_inputs_give_zero_ratios() {
        let mut cfg = LabConfig::new(7, 1);
        cfg.cutoff = 8;
        cfg.m = 16;
        cfg.zero_inputs = true;
        cfg.kernel_samples = 4;
        let rep = constants_lab(&cfg).unwrap();
        for r in rep.rows.iter().filter(|r| !r.inequality_id.starts_with("kernel_")) {
            assert_eq!(r.max_ratio, 0.0, "{}", r.inequality_id);
        }
    }

    #[test]
    fn random_strip_vanishes_at_bottom() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_strip(&mut rng, 6, 16);
        assert!(s.value.bottom().is_zero());
        let numeric = s.value.d_x2();
        let err = numeric.sub(&s.dx2).norm_l1(0.0, 0.0).unwrap() / s.dx2.norm_l1(0.0, 0.0).unwrap();
        assert!(err < 1e-2, "{err}");
    }

    #[test]
    fn admissible_draws_hit_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_admissible(&mut rng, 16, 0.2, 1e-3).unwrap();
        assert_eq!(h.mean(), 0.0);
        approx::assert_relative_eq!(wn(&h, 1.0, 0.2).unwrap(), 1e-3, epsilon = 1e-15);
    }
}

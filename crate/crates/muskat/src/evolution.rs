//! Interface evolution: the dispersion symbol, the nonlinear terms, and an
//! exponential Runge-Kutta integrator for the Galerkin-truncated system.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::{analyticity_radius, smallness_check, EnergyLedger, LedgerRow};
use crate::error::{Error, Result};
use crate::geometry::{ale_matrices, diffeo_check, dn_trace};
use crate::potentials::{phi1_field, solve_phi2, FixedPointOptions, KernelTable, PoissonSolution};
use crate::spectral::{
    apply_multiplier, compose_f, compose_g, lambda_symbol, norm_s, product, project_jn, tanh_symbol, wiener_norm,
    PeriodicSpectrum, WienerIndex,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionlessParams {
    pub eps: f64,
    pub delta: f64,
    pub nu: f64,
    pub alpha: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub t_final: f64,
    /// Galerkin cutoff of the right-hand side; defaults to `cutoff`.
    #[serde(default)]
    pub jn_cutoff: Option<usize>,
    #[serde(default)]
    pub linear_only: bool,
    #[serde(default)]
    pub override_smallness: bool,
    /// Accept `μ < (√δ/4)(ν√δ - 1)` instead of the `/16` range.
    #[serde(default)]
    pub wide_mu: bool,
    /// Use `√δ` instead of `1/ε` in front of the explicit nonlinearity.
    #[serde(default)]
    pub sqrt_delta_nh_prefactor: bool,
}

fn default_cutoff() -> usize {
    64
}
fn default_m() -> usize {
    64
}
fn default_dt() -> f64 {
    1e-3
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamsCheck {
    pub stable: bool,
    pub mu_bound: f64,
}

impl DimensionlessParams {
    /// `α = ε√δ` and defaults elsewhere.
    pub fn new(eps: f64, delta: f64, nu: f64) -> Self {
        Self {
            eps,
            delta,
            nu,
            alpha: eps * delta.sqrt(),
            mu: 0.0,
            cutoff: default_cutoff(),
            m: default_m(),
            dt: default_dt(),
            t_final: 0.0,
            jn_cutoff: None,
            linear_only: false,
            override_smallness: false,
            wide_mu: false,
            sqrt_delta_nh_prefactor: false,
        }
    }

    /// ε = 0.1, δ = 0.25, ν = 4, α = 0.05, N = 64, M = 64, dt = 1e-3.
    pub fn reference() -> Self {
        Self::new(0.1, 0.25, 4.0)
    }

    pub fn stability_margin(&self) -> f64 {
        self.nu * self.delta.sqrt() - 1.0
    }

    /// `(√δ/16)(ν√δ - 1)`
    pub fn decay_rate(&self) -> f64 {
        self.delta.sqrt() / 16.0 * self.stability_margin()
    }

    pub fn mu_bound(&self) -> f64 {
        let d = if self.wide_mu { 4.0 } else { 16.0 };
        self.delta.sqrt() / d * self.stability_margin()
    }

    pub fn jn(&self) -> usize {
        self.jn_cutoff.unwrap_or(self.cutoff)
    }

    pub fn validate(&self) -> Result<ParamsCheck> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad(format!("eps = {} must lie in (0, 1]", self.eps));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta = {} must lie in (0, 1]", self.delta));
        }
        if !(self.nu > 1.0) {
            return bad(format!("nu = {} must exceed 1", self.nu));
        }
        let expected = self.eps * self.delta.sqrt();
        if (self.alpha - expected).abs() > 1e-12 * expected.max(1.0) {
            return bad(format!("alpha = {} must equal eps*sqrt(delta) = {}", self.alpha, expected));
        }
        if self.alpha > self.eps || self.alpha > self.delta.sqrt() {
            return bad("alpha must not exceed eps or sqrt(delta)".into());
        }
        if self.cutoff < 1 || self.m < 4 {
            return bad("cutoff must be >= 1 and m >= 4".into());
        }
        if self.jn() > self.cutoff {
            return bad("jn_cutoff must not exceed cutoff".into());
        }
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return bad("dt must be positive and t_final nonnegative".into());
        }
        if !(self.mu >= 0.0) {
            return bad("mu must be nonnegative".into());
        }
        let stable = self.stability_margin() > 0.0 && self.delta < 1.0;
        let mu_bound = self.mu_bound();
        if stable && self.mu >= mu_bound {
            return bad(format!("mu = {} must be below {}", self.mu, mu_bound));
        }
        if self.mu * self.t_final * self.cutoff as f64 > crate::spectral::OVERFLOW_GUARD {
            return bad("mu * t_final * cutoff exceeds the overflow guard".into());
        }
        Ok(ParamsCheck { stable, mu_bound })
    }
}

/// `L(k) = (1/ε) tanh(√δ|k|) (να|k|³ - ε|k|)`.
pub fn linear_symbol(k: i64, p: &DimensionlessParams) -> f64 {
    let k = k.unsigned_abs() as f64;
    (p.delta.sqrt() * k).tanh() * (p.nu * p.alpha * k.powi(3) - p.eps * k) / p.eps
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub h: PeriodicSpectrum,
}

#[derive(Clone, Debug)]
pub struct NonlinearTerms {
    pub n_phi1: PeriodicSpectrum,
    pub n_phi2: PeriodicSpectrum,
    pub n_h: PeriodicSpectrum,
    pub phi2_iterations: usize,
    pub phi2_contraction: f64,
}

/// The bracket of the explicit nonlinearity:
/// `G(εΛ/tanhΛ h) T(ναΛ³h - εΛh) - να(1 - G(εΛ/tanhΛ h)) TΛ(F(αh')Λ²h)`.
pub fn nh_bracket(h: &PeriodicSpectrum, p: &DimensionlessParams) -> Result<PeriodicSpectrum> {
    let g = compose_g(&dn_trace(h).scale(p.eps))?;
    let t = tanh_symbol(p.delta);
    let lam = lambda_symbol();
    let lh = apply_multiplier(&lam, h);
    let l3h = apply_multiplier(&lam, &apply_multiplier(&lam, &lh));
    let lin = apply_multiplier(&t, &l3h.scale(p.nu * p.alpha).sub(&lh.scale(p.eps)));
    let first = product(&g, &lin)?;
    let l2h = apply_multiplier(&lam, &lh);
    let fl2h = product(&compose_f(&h.deriv(), p.alpha), &l2h)?;
    let tl = apply_multiplier(&t, &apply_multiplier(&lam, &fl2h));
    let second = tl.sub(&product(&g, &tl)?).scale(p.nu * p.alpha);
    Ok(first.sub(&second))
}

/// `N_h` with the prefactor selected by the parameters.
pub fn nh_term(h: &PeriodicSpectrum, p: &DimensionlessParams) -> Result<PeriodicSpectrum> {
    let c = if p.sqrt_delta_nh_prefactor { p.delta.sqrt() } else { 1.0 / p.eps };
    Ok(nh_bracket(h, p)?.scale(c))
}

/// `N_φ₁`, `N_φ₂` and `N_h` at `h`, together with the converged φ₂.
pub fn nonlinear_terms(
    h: &PeriodicSpectrum,
    p: &DimensionlessParams,
    table: &KernelTable,
    warm: Option<&PoissonSolution>,
    opts: FixedPointOptions,
) -> Result<(NonlinearTerms, PoissonSolution)> {
    let rd = p.delta.sqrt();
    let dh = h.deriv();
    let ale = ale_matrices(h, p.eps, p.delta, table.m())?;
    let phi1 = phi1_field(h, p, table.m());
    let a1k_phi1 = phi1.psi.deriv().add(&product(&ale.trace_a12, &phi1.d2.top())?);
    let n_phi1 = product(&a1k_phi1, &dh)?.scale(-rd);

    let phi2 = solve_phi2(h, &phi1, &ale, table, p.eps, warm, opts)?;
    let tr = &phi2.solution.trace_d2;
    let n_phi2 =
        product(&product(&ale.trace_a12, tr)?, &dh)?.scale(-rd).add(&product(&ale.trace_a22, tr)?.scale(1.0 / p.alpha));

    let n_h = nh_term(h, p)?;
    let terms =
        NonlinearTerms { n_phi1, n_phi2, n_h, phi2_iterations: phi2.iterations, phi2_contraction: phi2.contraction };
    Ok((terms, phi2.solution))
}

pub struct Simulator {
    pub params: DimensionlessParams,
    table: Option<KernelTable>,
    warm: Option<PoissonSolution>,
    pub fixed_point: FixedPointOptions,
}

impl Simulator {
    pub fn new(params: DimensionlessParams) -> Result<Self> {
        params.validate()?;
        let table =
            if params.linear_only { None } else { Some(KernelTable::new(params.delta, params.cutoff, params.m)) };
        let fixed_point = FixedPointOptions { override_smallness: params.override_smallness, ..Default::default() };
        Ok(Self { params, table, warm: None, fixed_point })
    }

    pub fn table(&mut self) -> &KernelTable {
        let p = &self.params;
        self.table.get_or_insert_with(|| KernelTable::new(p.delta, p.cutoff, p.m))
    }

    pub fn nonlinear_terms(&mut self, h: &PeriodicSpectrum) -> Result<NonlinearTerms> {
        let warm = self.warm.take();
        let opts = self.fixed_point;
        let p = self.params.clone();
        let table = self.table();
        let (terms, phi2) = nonlinear_terms(h, &p, table, warm.as_ref(), opts)?;
        self.warm = Some(phi2);
        Ok(terms)
    }

    /// Projected, mean-free nonlinear right-hand side; returns the removed mean.
    pub fn nonlinear_rhs(&mut self, h: &PeriodicSpectrum) -> Result<(PeriodicSpectrum, f64, usize)> {
        if self.params.linear_only || h.is_zero() {
            return Ok((PeriodicSpectrum::zeros(h.cutoff()), 0.0, 0));
        }
        let terms = self.nonlinear_terms(h)?;
        let mut rhs = project_jn(&terms.n_phi1.add(&terms.n_phi2).add(&terms.n_h), self.params.jn());
        let mean = rhs.remove_mean();
        Ok((rhs, mean, terms.phi2_iterations))
    }

    /// One ETD-RK2 step.
    #[allow(clippy::needless_range_loop)]
    pub fn step(&mut self, state: &SimState) -> Result<(SimState, StepInfo)> {
        let p = self.params.clone();
        let p = &p;
        let dt = p.dt;
        let n = state.h.cutoff();
        let mut e = Vec::with_capacity(n + 1);
        let mut w1 = Vec::with_capacity(n + 1);
        let mut w2 = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let z = -linear_symbol(k as i64, p) * dt;
            let (a, b) = etd_weights(z);
            e.push(z.exp());
            w1.push(dt * a);
            w2.push(dt * b);
        }
        let (n0, m0, it0) = self.nonlinear_rhs(&state.h)?;
        let mut a = state.h.clone();
        for k in 0..=n {
            let v = a.half()[k] * e[k] + n0.half()[k] * w1[k];
            a.half_mut()[k] = v;
        }
        let (n1, m1, it1) = self.nonlinear_rhs(&a)?;
        let mut next = a;
        for k in 0..=n {
            let v = next.half()[k] + (n1.half()[k] - n0.half()[k]) * w2[k];
            next.half_mut()[k] = v;
        }
        let drift = next.remove_mean();
        let t = state.t + dt;
        if !next.is_finite() {
            return Err(Error::Blowup { t });
        }
        let check = diffeo_check(&next, p.eps);
        if !check.valid {
            return Err(Error::PinchOff { t, margin: check.margin });
        }
        let info = StepInfo { rhs_mean: m0.abs().max(m1.abs()).max(drift.abs()), phi2_iterations: it0.max(it1) };
        Ok((SimState { t, h: next }, info))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StepInfo {
    pub rhs_mean: f64,
    pub phi2_iterations: usize,
}

/// `((e^z - 1)/z, (e^z - 1 - z)/z²)`.
pub fn etd_weights(z: f64) -> (f64, f64) {
    if z.abs() < 1e-3 {
        let a = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
        let b = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
        (a, b)
    } else {
        let em = z.exp_m1();
        (em / z, (em - z) / (z * z))
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Ledger cadence in time units; every step when zero.
    pub output_interval: f64,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub ledger: EnergyLedger,
    pub state: SimState,
    pub error: Option<Error>,
    pub warnings: Vec<String>,
    pub max_phi2_iterations: usize,
    pub total_phi2_iterations: usize,
    pub steps: usize,
}

fn ledger_row(
    h: &PeriodicSpectrum,
    t: f64,
    p: &DimensionlessParams,
    integral: f64,
    info: StepInfo,
) -> Result<LedgerRow> {
    let lam = p.mu * t;
    let n1mu = wiener_norm(h, WienerIndex::new(1.0, lam))?;
    let n4mu = wiener_norm(h, WienerIndex::new(4.0, lam))?;
    let radius = analyticity_radius(h);
    Ok(LedgerRow {
        t,
        norm0: norm_s(h, 0.0),
        norm1: norm_s(h, 1.0),
        norm1_mu: n1mu,
        norm4: norm_s(h, 4.0),
        norm4_mu: n4mu,
        integral4_mu: integral,
        energy: n1mu + p.decay_rate() * integral,
        radius: radius.radius,
        eps_sup: p.eps * h.sup_abs(),
        phi2_iterations: info.phi2_iterations,
        rhs_mean: info.rhs_mean,
        band_limited: radius.band_limited,
        diffeo_ok: diffeo_check(h, p.eps).valid,
    })
}

/// Integrates from `h0` to `t_final`, recording the energy ledger.
pub fn run(h0: &PeriodicSpectrum, params: &DimensionlessParams, opts: &RunOptions) -> Result<RunOutcome> {
    run_from(SimState { t: 0.0, h: h0.clone() }, 0.0, EnergyLedger::default(), params, opts)
}

/// Continues a trajectory from a given state and accumulated integral.
pub fn run_from(
    start: SimState,
    integral0: f64,
    mut ledger: EnergyLedger,
    params: &DimensionlessParams,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    let check = params.validate()?;
    let mut warnings = Vec::new();
    if !check.stable {
        warnings.push("nu*sqrt(delta) <= 1: outside the stable regime".to_string());
    }
    if start.h.cutoff() != params.cutoff {
        return Err(Error::Shape { left: start.h.cutoff(), right: params.cutoff });
    }
    let mut h = start.h.clone();
    if h.remove_mean() != 0.0 {
        warnings.push("initial mean removed".to_string());
    }
    if start.t == 0.0 && !params.linear_only {
        let report = smallness_check(&h, params);
        if !report.theorem_pass {
            if params.override_smallness {
                warnings.push(format!(
                    "|h0|_1 = {:.4e} exceeds the theorem threshold {:.4e}",
                    report.h1, report.theorem_threshold
                ));
            } else {
                return Err(Error::Smallness { value: report.h1, threshold: report.theorem_threshold });
            }
        }
    }
    let mut sim = Simulator::new(params.clone())?;
    let mut state = SimState { t: start.t, h };
    let total_steps = ((params.t_final - start.t) / params.dt).round().max(0.0) as usize;
    let every =
        if opts.output_interval > 0.0 { ((opts.output_interval / params.dt).round() as usize).max(1) } else { 1 };
    let mut integral = integral0;
    let mut info = StepInfo::default();
    let mut prev4 = wiener_norm(&state.h, WienerIndex::new(4.0, params.mu * state.t))?;
    if ledger.rows.is_empty() {
        ledger.push(ledger_row(&state.h, state.t, params, integral, info)?);
    }
    let mut error = None;
    let mut max_it = 0;
    let mut total_it = 0;
    let mut steps = 0;
    for s in 1..=total_steps {
        match sim.step(&state) {
            Ok((next, step_info)) => {
                let cur4 = wiener_norm(&next.h, WienerIndex::new(4.0, params.mu * next.t))?;
                integral += 0.5 * params.dt * (prev4 + cur4);
                prev4 = cur4;
                state = next;
                info.rhs_mean = info.rhs_mean.max(step_info.rhs_mean);
                info.phi2_iterations = info.phi2_iterations.max(step_info.phi2_iterations);
                max_it = max_it.max(step_info.phi2_iterations);
                total_it += step_info.phi2_iterations;
                steps += 1;
                if s % every == 0 || s == total_steps {
                    ledger.push(ledger_row(&state.h, state.t, params, integral, info)?);
                    info = StepInfo::default();
                    if let Some(path) = &opts.checkpoint {
                        crate::io::write_checkpoint(path, params, &state, integral, &ledger)?;
                    }
                }
            }
            Err(e) => {
                if let Some(path) = &opts.checkpoint {
                    crate::io::write_checkpoint(path, params, &state, integral, &ledger)?;
                }
                error = Some(e);
                break;
            }
        }
    }
    Ok(RunOutcome {
        ledger,
        state,
        error,
        warnings,
        max_phi2_iterations: max_it,
        total_phi2_iterations: total_it,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symbol_values() {
        let p = DimensionlessParams::reference();
        assert_eq!(linear_symbol(0, &p), 0.0);
        assert_relative_eq!(linear_symbol(1, &p), 0.462117157260010, epsilon = 1e-12);
        assert_relative_eq!(linear_symbol(2, &p), 10.662318, epsilon = 1e-6);
        assert_eq!(linear_symbol(-2, &p), linear_symbol(2, &p));
    }

    #[test]
    fn symbol_sign_follows_bond_condition() {
        let mut p = DimensionlessParams::reference();
        assert!((1..100).all(|k| linear_symbol(k, &p) > 0.0));
        p.nu = 1.5;
        assert!(linear_symbol(1, &p) < 0.0);
    }

    #[test]
    fn reference_params_validate() {
        let p = DimensionlessParams::reference();
        let c = p.validate().unwrap();
        assert!(c.stable);
        assert_relative_eq!(p.decay_rate(), 0.03125, epsilon = 1e-15);
        let mut q = p.clone();
        q.alpha = 0.06;
        assert!(q.validate().is_err());
        let mut r = p.clone();
        r.mu = 0.04;
        assert!(r.validate().is_err());
        r.wide_mu = true;
        assert!(r.validate().is_ok());
    }

    #[test]
    fn etd_weights_are_continuous() {
        for z in [-1e-3, -1.0000001e-3, -0.5, -30.0] {
            let (a, b) = etd_weights(z);
            let (a2, b2) = etd_weights(z * (1.0 + 1e-9));
            assert!((a - a2).abs() < 1e-8 && (b - b2).abs() < 1e-8);
        }
        let (a, b) = etd_weights(0.0);
        assert_eq!((a, b), (1.0, 0.5));
    }

    #[test]
    fn flat_interface_is_equilibrium() {
        let mut p = DimensionlessParams::reference();
        p.cutoff = 8;
        p.m = 16;
        let mut sim = Simulator::new(p).unwrap();
        let s = SimState { t: 0.0, h: PeriodicSpectrum::zeros(8) };
        let (next, _) = sim.step(&s).unwrap();
        assert!(next.h.is_zero());
    }
}

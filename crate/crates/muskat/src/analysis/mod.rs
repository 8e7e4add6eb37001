//! Energy ledger, smallness thresholds, decay and analyticity-radius fits,
//! and the constants laboratory.

mod lab;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evolution::DimensionlessParams;
use crate::geometry::diffeo_check;
use crate::potentials::phi2_smallness_threshold;
use crate::spectral::{norm_s, PeriodicSpectrum};

pub use lab::{
    aligned_spectrum, constants_lab, random_admissible, random_spectrum, random_strip, LabConfig, LabReport, LabRow,
    RandomStrip, RATIO_SLACK,
};

/// `C₀` of the global theorem.
pub const THEOREM_C0: f64 = 3120.0;

/// Amplitude floor below which Fourier coefficients are ignored by the radius fit.
pub const RADIUS_FLOOR: f64 = 1e-30;

/// Coefficients below this fraction of the largest one are roundoff.
pub const RADIUS_RELATIVE_FLOOR: f64 = 1e-14;

/// Number of coefficients above the floor needed for a tail-band fit; with
/// fewer, the slope is fitted over every resolved mode.
pub const RADIUS_MIN_MODES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub norm0: f64,
    pub norm1: f64,
    pub norm1_mu: f64,
    pub norm4: f64,
    pub norm4_mu: f64,
    pub integral4_mu: f64,
    pub energy: f64,
    pub radius: f64,
    pub eps_sup: f64,
    pub phi2_iterations: usize,
    pub rhs_mean: f64,
    pub band_limited: bool,
    pub diffeo_ok: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn push(&mut self, row: LedgerRow) {
        if let Some(last) = self.rows.last() {
            debug_assert!(row.t > last.t && row.integral4_mu >= last.integral4_mu);
        }
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let rows = rd.deserialize().collect::<std::result::Result<Vec<LedgerRow>, _>>()?;
        Ok(Self { rows })
    }

    /// Relative gap between the stored trapezoid integral and a composite
    /// Simpson recomputation from the stored `|h|_{4,μt}` samples, at the
    /// last row reachable by an even number of intervals.
    pub fn integral_consistency(&self) -> f64 {
        let n = self.rows.len();
        if n < 3 {
            return 0.0;
        }
        let last = if (n - 1).is_multiple_of(2) { n - 1 } else { n - 2 };
        let mut simpson = 0.0;
        for k in (0..last).step_by(2) {
            let (a, b, c) = (&self.rows[k], &self.rows[k + 1], &self.rows[k + 2]);
            let h0 = b.t - a.t;
            let h1 = c.t - b.t;
            // Simpson on possibly uneven pairs.
            let s = (h0 + h1) / 6.0
                * ((2.0 - h1 / h0) * a.norm4_mu
                    + (h0 + h1) * (h0 + h1) / (h0 * h1) * b.norm4_mu
                    + (2.0 - h0 / h1) * c.norm4_mu);
            simpson += s;
        }
        let stored = self.rows[last].integral4_mu - self.rows[0].integral4_mu;
        if stored == 0.0 && simpson == 0.0 {
            0.0
        } else {
            (stored - simpson).abs() / stored.abs().max(simpson.abs())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    pub h1: f64,
    pub theorem_threshold: f64,
    pub theorem_pass: bool,
    /// `|h|₁ ≤ c₀√δ/(260ε)` at the largest admissible `c₀`.
    pub elliptic_threshold: f64,
    pub elliptic_pass: bool,
    pub diffeo_margin: f64,
    pub diffeo_pass: bool,
    pub stable_regime: bool,
}

impl SmallnessReport {
    pub fn all_pass(&self) -> bool {
        self.theorem_pass && self.elliptic_pass && self.diffeo_pass
    }
}

/// `min{(C₀ε)⁻¹, 1}·(ν√δ - 1)/ν`
pub fn theorem_threshold(p: &DimensionlessParams) -> f64 {
    (1.0 / (THEOREM_C0 * p.eps)).min(1.0) * p.stability_margin() / p.nu
}

pub fn smallness_check(h0: &PeriodicSpectrum, p: &DimensionlessParams) -> SmallnessReport {
    let h1 = norm_s(h0, 1.0);
    let theorem = theorem_threshold(p);
    let elliptic = phi2_smallness_threshold(p.eps);
    let d = diffeo_check(h0, p.eps);
    let pass = |v: f64, t: f64| v < t || v == 0.0;
    SmallnessReport {
        h1,
        theorem_threshold: theorem,
        theorem_pass: pass(h1, theorem),
        elliptic_threshold: elliptic,
        elliptic_pass: pass(h1, elliptic),
        diffeo_margin: d.margin,
        diffeo_pass: d.valid,
        stable_regime: p.stability_margin() > 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub h0_norm: f64,
    pub decay_rate: f64,
    /// `max_t (E(t) - |h₀|₁)`
    pub worst_energy_excess: f64,
    /// `max_t (|h(t)|_{1,μt} - |h₀|₁ e^{-rate·t}) / |h₀|₁`
    pub worst_envelope_excess: f64,
    /// Largest increase of `E` between consecutive rows, relative to `|h₀|₁`.
    pub worst_energy_increase: f64,
    pub energy_bounded: bool,
    pub envelope_ok: bool,
    pub energy_monotone: bool,
    pub no_pinch_off: bool,
    pub fitted_decay_rate: f64,
}

impl EnergyReport {
    pub fn pass(&self) -> bool {
        self.energy_bounded && self.envelope_ok && self.energy_monotone && self.no_pinch_off
    }
}

/// Checks `E(t) ≤ |h₀|₁`, the decay envelope, and monotonicity of `E` within
/// `tol` relative to `|h₀|₁`.
pub fn verify_energy(ledger: &EnergyLedger, h0_norm: f64, p: &DimensionlessParams, tol: f64) -> EnergyReport {
    let rate = p.decay_rate();
    let scale = if h0_norm > 0.0 { h0_norm } else { 1.0 };
    let mut excess = f64::NEG_INFINITY;
    let mut env = f64::NEG_INFINITY;
    let mut inc = f64::NEG_INFINITY;
    let mut pinch = true;
    for (k, r) in ledger.rows.iter().enumerate() {
        excess = excess.max(r.energy - h0_norm);
        env = env.max((r.norm1_mu - h0_norm * (-rate * r.t).exp()) / scale);
        if k > 0 {
            inc = inc.max((r.energy - ledger.rows[k - 1].energy) / scale);
        }
        pinch &= r.diffeo_ok && r.eps_sup < 1.0;
    }
    if ledger.rows.is_empty() {
        excess = 0.0;
        env = 0.0;
    }
    if inc == f64::NEG_INFINITY {
        inc = 0.0;
    }
    EnergyReport {
        h0_norm,
        decay_rate: rate,
        worst_energy_excess: excess,
        worst_envelope_excess: env,
        worst_energy_increase: inc,
        energy_bounded: excess <= tol * scale,
        envelope_ok: env <= tol,
        energy_monotone: inc <= tol,
        no_pinch_off: pinch,
        fitted_decay_rate: fit_decay_rate(ledger),
    }
}

/// Least-squares slope of `-log|h|_{1,μt}` against `t`.
pub fn fit_decay_rate(ledger: &EnergyLedger) -> f64 {
    let pts: Vec<(f64, f64)> =
        ledger.rows.iter().filter(|r| r.norm1_mu > 0.0).map(|r| (r.t, -r.norm1_mu.ln())).collect();
    least_squares_slope(&pts).unwrap_or(0.0)
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusFit {
    pub radius: f64,
    pub band_limited: bool,
    pub active_modes: usize,
    pub band: (usize, usize),
}

/// Slope of `-log|ĥ(n)|` over the tail band `[N_a/2, N_a]`, where `N_a` is the
/// highest resolved mode. Spectra with fewer than [`RADIUS_MIN_MODES`]
/// resolved modes are fitted over all of them together with the point
/// `(N_a + 1, floor)`, which bounds the first unresolved coefficient.
pub fn analyticity_radius(h: &PeriodicSpectrum) -> RadiusFit {
    let n = h.cutoff();
    let amps: Vec<f64> = h.half().iter().map(|c| c.norm()).collect();
    let peak = amps.iter().skip(1).fold(0.0_f64, |m, &a| m.max(a));
    let floor = RADIUS_FLOOR.max(RADIUS_RELATIVE_FLOOR * peak);
    let active: Vec<usize> = (1..=n).filter(|&k| amps[k] > floor).collect();
    let top = active.last().copied().unwrap_or(0);
    let band_limited = top < n;
    let lo = if active.len() < RADIUS_MIN_MODES { 1 } else { top.div_ceil(2).max(1) };
    let mut pts: Vec<(f64, f64)> = active.iter().filter(|&&k| k >= lo).map(|&k| (k as f64, -amps[k].ln())).collect();
    if !active.is_empty() && active.len() < RADIUS_MIN_MODES && band_limited {
        pts.push(((top + 1) as f64, -floor.ln()));
    }
    let radius = least_squares_slope(&pts).unwrap_or(0.0).max(0.0);
    RadiusFit { radius, band_limited, active_modes: active.len(), band: (lo, top) }
}

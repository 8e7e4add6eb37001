//! Fields on the strip `T x (-1, 0)`, the harmonic extension σ, the ALE
//! matrices `A` and `Q`, and the modified curvature.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::spectral::{
    apply_multiplier, compose_f, compose_g, compose_grid, dn_symbol, norm_s, product, PeriodicSpectrum, OVERFLOW_GUARD,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Per-mode vertical profiles on a uniform grid of `M + 1` nodes spanning
/// `[-1, 0]`; `profiles[n][i]` for `n = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct StripField {
    grid: Vec<f64>,
    profiles: Vec<Vec<Complex64>>,
}

pub fn uniform_grid(m: usize) -> Vec<f64> {
    assert!(m >= 4, "vertical grid needs at least four intervals");
    (0..=m).map(|i| -1.0 + i as f64 / m as f64).collect()
}

impl StripField {
    pub fn zeros(cutoff: usize, m: usize) -> Self {
        Self { grid: uniform_grid(m), profiles: vec![vec![Complex64::new(0.0, 0.0); m + 1]; cutoff + 1] }
    }

    pub fn from_fn(cutoff: usize, m: usize, f: impl Fn(usize, f64) -> Complex64 + Sync) -> Self {
        let grid = uniform_grid(m);
        let profiles = (0..=cutoff).into_par_iter().map(|n| grid.iter().map(|&x| f(n, x)).collect()).collect();
        Self { grid, profiles }
    }

    pub fn from_profiles(m: usize, profiles: Vec<Vec<Complex64>>) -> Self {
        assert!(profiles.iter().all(|p| p.len() == m + 1));
        let mut out = Self { grid: uniform_grid(m), profiles };
        for c in out.profiles[0].iter_mut() {
            c.im = 0.0;
        }
        out
    }

    pub fn cutoff(&self) -> usize {
        self.profiles.len() - 1
    }

    pub fn m(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m() as f64
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn profile(&self, n: usize) -> &[Complex64] {
        &self.profiles[n]
    }

    pub fn profile_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.profiles[n]
    }

    pub fn profiles(&self) -> &[Vec<Complex64>] {
        &self.profiles
    }

    pub fn node(&self, i: usize) -> PeriodicSpectrum {
        PeriodicSpectrum::from_half(self.profiles.iter().map(|p| p[i]).collect())
    }

    pub fn top(&self) -> PeriodicSpectrum {
        self.node(self.m())
    }

    pub fn bottom(&self) -> PeriodicSpectrum {
        self.node(0)
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.cutoff(), other.cutoff());
        assert_eq!(self.m(), other.m());
        let profiles = self
            .profiles
            .iter()
            .zip(&other.profiles)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        Self { grid: self.grid.clone(), profiles }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        let profiles = self.profiles.iter().map(|p| p.iter().map(|c| c * s).collect()).collect();
        Self { grid: self.grid.clone(), profiles }
    }

    /// Horizontal derivative `∂₁`.
    pub fn d_x1(&self) -> Self {
        let profiles =
            self.profiles.iter().enumerate().map(|(n, p)| p.iter().map(|c| c * I * n as f64).collect()).collect();
        Self { grid: self.grid.clone(), profiles }
    }

    /// Vertical derivative from nodal values (fourth order).
    pub fn d_x2(&self) -> Self {
        let h = self.spacing();
        let profiles = self.profiles.par_iter().map(|p| quad::derivative(p, h)).collect();
        Self { grid: self.grid.clone(), profiles }
    }

    /// Physical samples at every node: `out[i][j]` at `(2πj/p, x_i)`.
    pub fn to_physical(&self, p: usize) -> Vec<Vec<f64>> {
        (0..=self.m()).into_par_iter().map(|i| self.node(i).to_grid(p)).collect()
    }

    pub fn from_physical(values: &[Vec<f64>], cutoff: usize) -> Self {
        let m = values.len() - 1;
        let nodes: Vec<PeriodicSpectrum> = values.par_iter().map(|v| PeriodicSpectrum::from_grid(v, cutoff)).collect();
        let profiles = (0..=cutoff).map(|n| nodes.iter().map(|s| s.half()[n]).collect()).collect();
        Self { grid: uniform_grid(m), profiles }
    }

    fn mode_weight(n: usize, s: f64, lambda: f64) -> f64 {
        if n == 0 {
            1.0
        } else {
            2.0 * (1.0 + n as f64).powf(s) * (lambda * n as f64).exp()
        }
    }

    /// `Σ_n (1+|n|)^s e^{λ|n|} ∫ |v̂(n, x₂)| dx₂`.
    pub fn norm_l1(&self, s: f64, lambda: f64) -> Result<f64> {
        if lambda * self.cutoff() as f64 > OVERFLOW_GUARD {
            return Err(Error::OverflowRisk { lambda, cutoff: self.cutoff() });
        }
        let h = self.spacing();
        Ok(self
            .profiles
            .iter()
            .enumerate()
            .map(|(n, p)| {
                let abs: Vec<f64> = p.iter().map(|c| c.norm()).collect();
                Self::mode_weight(n, s, lambda) * quad::integrate(&abs, h)
            })
            .sum())
    }

    /// The Wiener-Sobolev norm with one vertical derivative.
    pub fn norm_a1(&self, s: f64, lambda: f64) -> Result<f64> {
        self.d_x2().norm_l1(s, lambda)
    }

    /// `sup_{x₂} |v(·, x₂)|_{s,λ}` over the nodes.
    pub fn norm_sup(&self, s: f64, lambda: f64) -> f64 {
        (0..=self.m())
            .map(|i| {
                self.profiles
                    .iter()
                    .enumerate()
                    .map(|(n, p)| Self::mode_weight(n, s, lambda) * p[i].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.profiles.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

#[derive(Serialize, Deserialize)]
struct StripJson {
    grid: Vec<f64>,
    profiles: Vec<Vec<(f64, f64)>>,
}

impl Serialize for StripField {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StripJson {
            grid: self.grid.clone(),
            profiles: self.profiles.iter().map(|p| p.iter().map(|c| (c.re, c.im)).collect()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StripField {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = StripJson::deserialize(deserializer)?;
        let m = raw.grid.len().saturating_sub(1);
        if m < 4 || raw.profiles.iter().any(|p| p.len() != m + 1) {
            return Err(serde::de::Error::custom("profile length does not match grid"));
        }
        let profiles =
            raw.profiles.into_iter().map(|p| p.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).collect();
        Ok(StripField::from_profiles(m, profiles))
    }
}

/// `sinh((1+x)n) / sinh(n)` without overflow.
pub fn sinh_ratio(n: f64, x: f64) -> f64 {
    if n == 0.0 {
        return 1.0 + x;
    }
    (n * x).exp() * (-(-2.0 * n * (1.0 + x)).exp_m1()) / (-(-2.0 * n).exp_m1())
}

/// `cosh((1+x)n) / sinh(n)` for `n > 0`.
pub fn cosh_sinh_ratio(n: f64, x: f64) -> f64 {
    (n * x).exp() * (1.0 + (-2.0 * n * (1.0 + x)).exp()) / (-(-2.0 * n).exp_m1())
}

pub fn sigma_field(h: &PeriodicSpectrum, m: usize) -> StripField {
    let hh = h.half();
    StripField::from_fn(h.cutoff(), m, |n, x| hh[n] * sinh_ratio(n as f64, x))
}

/// `(∂₁σ, ∂₂σ)`.
pub fn grad_sigma(h: &PeriodicSpectrum, m: usize) -> (StripField, StripField) {
    let d1 = sigma_field(h, m).d_x1();
    let hh = h.half();
    let d2 = StripField::from_fn(h.cutoff(), m, |n, x| {
        if n == 0 {
            hh[0]
        } else {
            hh[n] * (n as f64 * cosh_sinh_ratio(n as f64, x))
        }
    });
    (d1, d2)
}

/// `Λ / tanh(Λ) h`, the trace of `∂₂σ` on the top boundary.
pub fn dn_trace(h: &PeriodicSpectrum) -> PeriodicSpectrum {
    apply_multiplier(&dn_symbol(), h)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffeoCheck {
    pub valid: bool,
    pub margin: f64,
}

pub fn diffeo_check(h: &PeriodicSpectrum, eps: f64) -> DiffeoCheck {
    let margin = 0.5 - eps * norm_s(h, 1.0);
    DiffeoCheck { valid: margin > 0.0, margin }
}

/// `𝒦_α = h''(1 + F(α h'))`.
pub fn curvature(h: &PeriodicSpectrum, alpha: f64) -> PeriodicSpectrum {
    let d1 = h.deriv();
    let d2 = d1.deriv();
    let f = compose_f(&d1, alpha);
    d2.add(&product(&d2, &f).expect("same cutoff"))
}

/// The matrices `A = (∇Σ)^{-1}` and `Q` of the pulled-back operator
/// `∇_δ·((I + εQ)∇_δ φ)`. `A₁¹ = 1` and `A₂¹ = 0` are implicit.
#[derive(Clone, Debug)]
pub struct AleMatrices {
    pub a12: StripField,
    pub a22: StripField,
    pub q11: StripField,
    pub q12: StripField,
    pub q22: StripField,
    pub trace_a12: PeriodicSpectrum,
    pub trace_a22: PeriodicSpectrum,
    pub min_jacobian: f64,
    /// Physical samples `[q11, q12, q22]` per node on `grid_points` points.
    pub q_physical: Vec<[Vec<f64>; 3]>,
    pub grid_points: usize,
}

impl AleMatrices {
    pub fn a11(&self) -> f64 {
        1.0
    }

    pub fn a21(&self) -> f64 {
        0.0
    }

    /// `Q v` for a pair of strip fields, evaluated pointwise and projected.
    pub fn apply_q(&self, v1: &StripField, v2: &StripField) -> (StripField, StripField) {
        let cutoff = v1.cutoff();
        let p = self.grid_points;
        let (g1, g2): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (0..=v1.m())
            .into_par_iter()
            .map(|i| {
                let a = v1.node(i).to_grid(p);
                let b = v2.node(i).to_grid(p);
                let [q11, q12, q22] = &self.q_physical[i];
                let r1 = (0..p).map(|j| q11[j] * a[j] + q12[j] * b[j]).collect();
                let r2 = (0..p).map(|j| q12[j] * a[j] + q22[j] * b[j]).collect();
                (r1, r2)
            })
            .unzip();
        (StripField::from_physical(&g1, cutoff), StripField::from_physical(&g2, cutoff))
    }
}

pub fn ale_matrices(h: &PeriodicSpectrum, eps: f64, delta: f64, m: usize) -> Result<AleMatrices> {
    let cutoff = h.cutoff();
    let p = compose_grid(cutoff);
    let (d1, d2) = grad_sigma(h, m);
    let g1 = d1.to_physical(p);
    let g2 = d2.to_physical(p);
    let sup = g2.iter().flatten().fold(0.0_f64, |s, v| s.max((eps * v).abs()));
    if sup >= 1.0 || !sup.is_finite() {
        return Err(Error::Domain { sup });
    }
    let rd = delta.sqrt();
    let mut min_j = f64::INFINITY;
    let mut a12 = Vec::with_capacity(m + 1);
    let mut a22 = Vec::with_capacity(m + 1);
    let mut q_physical = Vec::with_capacity(m + 1);
    for (s1, s2) in g1.iter().zip(&g2) {
        let mut r12 = vec![0.0; p];
        let mut r22 = vec![0.0; p];
        let mut q11 = vec![0.0; p];
        let mut q12 = vec![0.0; p];
        let mut q22 = vec![0.0; p];
        for j in 0..p {
            let jac = 1.0 + eps * s2[j];
            min_j = min_j.min(jac);
            r12[j] = -eps * s1[j] / jac;
            r22[j] = 1.0 / jac;
            q11[j] = s2[j];
            q12[j] = -rd * s1[j];
            q22[j] = (-s2[j] + eps * delta * s1[j] * s1[j]) / jac;
        }
        a12.push(r12);
        a22.push(r22);
        q_physical.push([q11, q12, q22]);
    }
    let split = |k: usize| -> Vec<Vec<f64>> { q_physical.iter().map(|q: &[Vec<f64>; 3]| q[k].clone()).collect() };
    let q11 = StripField::from_physical(&split(0), cutoff);
    let q12 = StripField::from_physical(&split(1), cutoff);
    let q22 = StripField::from_physical(&split(2), cutoff);

    let dh = h.deriv();
    let gd = compose_g(&dn_trace(h).scale(eps))?;
    let trace_a12 = product(&dh, &gd)?.sub(&dh).scale(eps);
    let trace_a22 = gd.scale(-1.0).add_constant(1.0);

    Ok(AleMatrices {
        a12: StripField::from_physical(&a12, cutoff),
        a22: StripField::from_physical(&a22, cutoff),
        q11,
        q12,
        q22,
        trace_a12,
        trace_a22,
        min_jacobian: min_j,
        q_physical,
        grid_points: p,
    })
}

//! Truncated Fourier series on the torus, Wiener norms, multipliers,
//! dealiased products and pointwise compositions.

use std::cell::RefCell;
use std::io::{Read, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const OVERFLOW_GUARD: f64 = 700.0;

/// Coefficients of a real function, stored for `n = 0..=N`; negative modes
/// are the complex conjugates.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicSpectrum {
    coeffs: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WienerIndex {
    pub s: f64,
    pub lambda: f64,
}

impl WienerIndex {
    pub fn new(s: f64, lambda: f64) -> Self {
        assert!(s >= 0.0 && lambda >= 0.0, "Wiener index must be nonnegative");
        Self { s, lambda }
    }
}

pub struct Multiplier<F: Fn(f64) -> f64> {
    pub at_zero: f64,
    pub symbol: F,
}

impl<F: Fn(f64) -> f64> Multiplier<F> {
    pub fn new(at_zero: f64, symbol: F) -> Self {
        Self { at_zero, symbol }
    }

    pub fn eval(&self, n: usize) -> f64 {
        if n == 0 {
            self.at_zero
        } else {
            (self.symbol)(n as f64)
        }
    }
}

/// `Λ`, the Fourier multiplier `|n|`.
pub fn lambda_symbol() -> Multiplier<impl Fn(f64) -> f64> {
    Multiplier::new(0.0, |k| k)
}

/// `Λ / tanh Λ`, the Dirichlet-Neumann symbol of the unit strip.
pub fn dn_symbol() -> Multiplier<impl Fn(f64) -> f64> {
    Multiplier::new(1.0, |k| k / k.tanh())
}

/// `tanh(√δ Λ)`.
pub fn tanh_symbol(delta: f64) -> Multiplier<impl Fn(f64) -> f64> {
    let r = delta.sqrt();
    Multiplier::new(0.0, move |k| (r * k).tanh())
}

impl PeriodicSpectrum {
    pub fn zeros(cutoff: usize) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); cutoff + 1] }
    }

    /// Builds from the nonnegative half; `coeffs[0]` must be real.
    pub fn from_half(mut coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty());
        coeffs[0].im = 0.0;
        Self { coeffs }
    }

    /// `amp * cos(n x)`.
    pub fn cosine(cutoff: usize, n: usize, amp: f64) -> Self {
        let mut v = Self::zeros(cutoff);
        if n == 0 {
            v.coeffs[0] = Complex64::new(amp, 0.0);
        } else {
            v.coeffs[n] = Complex64::new(amp / 2.0, 0.0);
        }
        v
    }

    pub fn constant(cutoff: usize, c: f64) -> Self {
        Self::cosine(cutoff, 0, c)
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn half(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn half_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        let k = n.unsigned_abs() as usize;
        if k > self.cutoff() {
            return Complex64::new(0.0, 0.0);
        }
        if n >= 0 {
            self.coeffs[k]
        } else {
            self.coeffs[k].conj()
        }
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut out = Self::zeros(cutoff);
        for (n, c) in self.coeffs.iter().enumerate().take(cutoff + 1) {
            out.coeffs[n] = *c;
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.cutoff(), other.cutoff());
        Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0].re += c;
        out
    }

    pub fn deriv(&self) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(n, c)| c * Complex64::new(0.0, n as f64)).collect();
        Self { coeffs }
    }

    pub fn deriv_n(&self, order: usize) -> Self {
        (0..order).fold(self.clone(), |v, _| v.deriv())
    }

    pub fn remove_mean(&mut self) -> f64 {
        let m = self.coeffs[0].re;
        self.coeffs[0] = Complex64::new(0.0, 0.0);
        m
    }

    /// Values on the uniform grid `x_j = 2πj/p`.
    pub fn to_grid(&self, p: usize) -> Vec<f64> {
        let n = self.cutoff();
        assert!(p > 2 * n, "grid of {p} points cannot resolve cutoff {n}");
        let mut buf = vec![Complex64::new(0.0, 0.0); p];
        buf[0] = self.coeffs[0];
        for k in 1..=n {
            buf[k] = self.coeffs[k];
            buf[p - k] = self.coeffs[k].conj();
        }
        inverse_fft(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Projects grid samples onto modes `|n| <= cutoff`.
    pub fn from_grid(values: &[f64], cutoff: usize) -> Self {
        let p = values.len();
        assert!(p > 2 * cutoff);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        forward_fft(&mut buf);
        let inv = 1.0 / p as f64;
        let coeffs = (0..=cutoff).map(|k| buf[k] * inv).collect();
        Self::from_half(coeffs)
    }

    pub fn sup_abs(&self) -> f64 {
        self.to_grid(compose_grid(self.cutoff())).into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn inverse_fft(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
}

pub(crate) fn forward_fft(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// Grid size for quadratic products: twice the number of retained modes.
pub fn product_grid(cutoff: usize) -> usize {
    2 * (2 * cutoff + 1)
}

/// Grid size for the non-polynomial compositions.
pub fn compose_grid(cutoff: usize) -> usize {
    4 * (2 * cutoff + 1)
}

pub fn wiener_norm(v: &PeriodicSpectrum, idx: WienerIndex) -> Result<f64> {
    let n = v.cutoff();
    if idx.lambda * n as f64 > OVERFLOW_GUARD {
        return Err(Error::OverflowRisk { lambda: idx.lambda, cutoff: n });
    }
    let mut sum = v.coeffs[0].norm();
    for (k, c) in v.coeffs.iter().enumerate().skip(1) {
        let kf = k as f64;
        sum += 2.0 * (1.0 + kf).powf(idx.s) * (idx.lambda * kf).exp() * c.norm();
    }
    Ok(sum)
}

/// `|v|_{s,0}`; never overflows.
pub fn norm_s(v: &PeriodicSpectrum, s: f64) -> f64 {
    wiener_norm(v, WienerIndex::new(s, 0.0)).expect("lambda = 0 cannot overflow")
}

/// The homogeneous sum `Σ |n|^s e^{λ|n|} |v̂(n)|`.
pub fn homogeneous_norm(v: &PeriodicSpectrum, idx: WienerIndex) -> Result<f64> {
    let n = v.cutoff();
    if idx.lambda * n as f64 > OVERFLOW_GUARD {
        return Err(Error::OverflowRisk { lambda: idx.lambda, cutoff: n });
    }
    let mut sum = if idx.s == 0.0 { v.coeffs[0].norm() } else { 0.0 };
    for (k, c) in v.coeffs.iter().enumerate().skip(1) {
        let kf = k as f64;
        sum += 2.0 * kf.powf(idx.s) * (idx.lambda * kf).exp() * c.norm();
    }
    Ok(sum)
}

pub fn apply_multiplier<F: Fn(f64) -> f64>(m: &Multiplier<F>, v: &PeriodicSpectrum) -> PeriodicSpectrum {
    let coeffs = v.coeffs.iter().enumerate().map(|(k, c)| c * m.eval(k)).collect();
    PeriodicSpectrum::from_half(coeffs)
}

pub fn product(f: &PeriodicSpectrum, g: &PeriodicSpectrum) -> Result<PeriodicSpectrum> {
    if f.cutoff() != g.cutoff() {
        return Err(Error::Shape { left: f.cutoff(), right: g.cutoff() });
    }
    let n = f.cutoff();
    let p = product_grid(n);
    let a = f.to_grid(p);
    let b = g.to_grid(p);
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(PeriodicSpectrum::from_grid(&prod, n))
}

pub fn map_pointwise(v: &PeriodicSpectrum, f: impl Fn(f64) -> f64) -> PeriodicSpectrum {
    let n = v.cutoff();
    let vals: Vec<f64> = v.to_grid(compose_grid(n)).into_iter().map(f).collect();
    PeriodicSpectrum::from_grid(&vals, n)
}

pub fn f_fn(x: f64) -> f64 {
    (1.0 + x * x).powf(-1.5) - 1.0
}

pub fn g_fn(x: f64) -> f64 {
    x / (1.0 + x)
}

/// Spectrum of `F(α v)`.
pub fn compose_f(v: &PeriodicSpectrum, alpha: f64) -> PeriodicSpectrum {
    map_pointwise(v, |x| f_fn(alpha * x))
}

/// Spectrum of `G(v)`, refusing inputs that reach the pole at `-1`.
pub fn compose_g(v: &PeriodicSpectrum) -> Result<PeriodicSpectrum> {
    let n = v.cutoff();
    let vals = v.to_grid(compose_grid(n));
    let sup = vals.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if sup >= 1.0 || !sup.is_finite() {
        return Err(Error::Domain { sup });
    }
    let mapped: Vec<f64> = vals.into_iter().map(g_fn).collect();
    Ok(PeriodicSpectrum::from_grid(&mapped, n))
}

/// The Galerkin cutoff `J_M`.
pub fn project_jn(v: &PeriodicSpectrum, m: usize) -> PeriodicSpectrum {
    assert!(m <= v.cutoff());
    let mut out = v.clone();
    for c in out.coeffs.iter_mut().skip(m + 1) {
        *c = Complex64::new(0.0, 0.0);
    }
    out
}

/// The product-rule constant of the Wiener algebra.
pub fn k_s(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else {
        2f64.powf(s)
    }
}

pub fn ksn_constant(s: f64, n: u32) -> f64 {
    assert!(s >= 0.0 && n >= 2);
    if s <= 1.0 {
        n as f64
    } else {
        let k = k_s(s);
        k * (k.powi(n as i32 - 1) - 1.0) / (k - 1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    cutoff: usize,
    modes: Vec<(i64, f64, f64)>,
}

impl Serialize for PeriodicSpectrum {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let modes = self.coeffs.iter().enumerate().skip(1).map(|(n, c)| (n as i64, c.re, c.im)).collect();
        SpectrumJson { cutoff: self.cutoff(), modes }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PeriodicSpectrum {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = SpectrumJson::deserialize(deserializer)?;
        let mut v = PeriodicSpectrum::zeros(raw.cutoff);
        for (n, re, im) in raw.modes {
            if n < 1 || n as usize > raw.cutoff {
                return Err(serde::de::Error::custom(format!("mode {n} outside 1..={}", raw.cutoff)));
            }
            v.coeffs[n as usize] = Complex64::new(re, im);
        }
        Ok(v)
    }
}

impl PeriodicSpectrum {
    /// Little-endian `(re, im)` pairs for `n = 0..=N`.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&(self.cutoff() as u64).to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> std::io::Result<Self> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let cutoff = u64::from_le_bytes(b8) as usize;
        let mut coeffs = Vec::with_capacity(cutoff + 1);
        for _ in 0..=cutoff {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            coeffs.push(Complex64::new(re, im));
        }
        Ok(Self::from_half(coeffs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cos1(n: usize) -> PeriodicSpectrum {
        PeriodicSpectrum::cosine(n, 1, 1.0)
    }

    #[test]
    fn wiener_norm_of_cosine() {
        let v = cos1(8);
        assert_eq!(wiener_norm(&PeriodicSpectrum::zeros(8), WienerIndex::new(2.0, 1.0)).unwrap(), 0.0);
        assert_relative_eq!(wiener_norm(&v, WienerIndex::new(1.0, 0.0)).unwrap(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(wiener_norm(&v, WienerIndex::new(0.0, 1.0)).unwrap(), std::f64::consts::E, epsilon = 1e-14);
    }

    #[test]
    fn overflow_guard_trips() {
        let v = cos1(100);
        let err = wiener_norm(&v, WienerIndex::new(0.0, 7.5)).unwrap_err();
        assert_eq!(err, Error::OverflowRisk { lambda: 7.5, cutoff: 100 });
        assert!(wiener_norm(&v, WienerIndex::new(0.0, 7.0)).is_ok());
    }

    #[test]
    fn multipliers_on_first_mode() {
        let v = cos1(4);
        let lam = apply_multiplier(&lambda_symbol(), &v);
        assert_relative_eq!(lam.coeff(1).re, 0.5, epsilon = 1e-15);
        let t = apply_multiplier(&tanh_symbol(0.25), &v);
        assert_relative_eq!(2.0 * t.coeff(1).re, 0.462117157260010, epsilon = 1e-12);
        let d = apply_multiplier(&dn_symbol(), &v);
        assert_relative_eq!(2.0 * d.coeff(1).re, 1.313035285499331, epsilon = 1e-12);
        assert_eq!(dn_symbol().eval(0), 1.0);
    }

    #[test]
    fn product_double_angle() {
        let v = cos1(6);
        let sq = product(&v, &v).unwrap();
        assert_relative_eq!(sq.coeff(0).re, 0.5, epsilon = 1e-14);
        assert_relative_eq!(sq.coeff(2).re, 0.25, epsilon = 1e-14);
        assert_relative_eq!(sq.coeff(1).norm(), 0.0, epsilon = 1e-14);
        assert!(product(&PeriodicSpectrum::zeros(6), &v).unwrap().coeff(2).norm() < 1e-16);
        assert!(matches!(product(&v, &cos1(5)), Err(Error::Shape { .. })));
    }

    #[test]
    fn product_is_exact_truncated_convolution() {
        let n = 5;
        let mut f = PeriodicSpectrum::zeros(n);
        let mut g = PeriodicSpectrum::zeros(n);
        for k in 1..=n {
            f.half_mut()[k] = Complex64::new(1.0 / k as f64, 0.3 * k as f64);
            g.half_mut()[k] = Complex64::new(-0.2 * k as f64, 1.0 / (k * k) as f64);
        }
        let fg = product(&f, &g).unwrap();
        for m in 0..=n as i64 {
            let mut c = Complex64::new(0.0, 0.0);
            for j in -(n as i64)..=n as i64 {
                c += f.coeff(j) * g.coeff(m - j);
            }
            assert_relative_eq!((fg.coeff(m) - c).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn compositions_at_zero_and_constant() {
        let z = PeriodicSpectrum::zeros(8);
        assert!(compose_f(&z, 0.3).is_zero());
        assert!(compose_g(&z).unwrap().is_zero());
        let half = PeriodicSpectrum::constant(8, 0.5);
        let g = compose_g(&half).unwrap();
        assert_relative_eq!(g.mean(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(compose_g(&PeriodicSpectrum::cosine(8, 1, 2.0)), Err(Error::Domain { .. })));
    }

    #[test]
    fn projection_cuts_modes() {
        let v = cos1(6).add(&PeriodicSpectrum::cosine(6, 3, 1.0));
        assert_eq!(project_jn(&v, 6), v);
        assert_eq!(project_jn(&v, 2), cos1(6));
    }

    #[test]
    fn ksn_values() {
        assert_eq!(ksn_constant(0.5, 7), 7.0);
        assert_relative_eq!(ksn_constant(2.0, 3), 20.0, epsilon = 1e-12);
        assert_eq!(k_s(1.0), 1.0);
        assert_eq!(k_s(3.0), 8.0);
    }

    #[test]
    fn grid_round_trip() {
        let mut v = PeriodicSpectrum::zeros(10);
        for k in 1..=10 {
            v.half_mut()[k] = Complex64::new((k as f64).sin(), (k as f64).cos() * 0.5);
        }
        let back = PeriodicSpectrum::from_grid(&v.to_grid(product_grid(10)), 10);
        for k in 0..=10 {
            assert!((back.half()[k] - v.half()[k]).norm() <= 1e-12 * v.half()[k].norm().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn json_and_binary_round_trip() {
        let mut v = PeriodicSpectrum::zeros(4);
        v.half_mut()[2] = Complex64::new(0.25, -1.5);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"cutoff":4,"modes":[[1,0.0,0.0],[2,0.25,-1.5],[3,0.0,0.0],[4,0.0,0.0]]}"#);
        let w: PeriodicSpectrum = serde_json::from_str(&s).unwrap();
        assert_eq!(v, w);
        let mut buf = Vec::new();
        v.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 * 5);
        assert_eq!(PeriodicSpectrum::read_binary(&mut buf.as_slice()).unwrap(), v);
    }
}

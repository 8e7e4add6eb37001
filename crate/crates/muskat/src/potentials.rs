//! The explicit potential φ₁, the Green-kernel solver for the anisotropic
//! Poisson problem `Δ_δ φ = ∇_δ·g`, the fixed point for φ₂, and a
//! finite-difference oracle for φ₂.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::DimensionlessParams;
use crate::geometry::{curvature, AleMatrices, StripField};
use crate::quad::{self, SINGLE_INTERVAL};
use crate::spectral::{norm_s, PeriodicSpectrum};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `cosh(κ(1+x)) / cosh κ` in overflow-free form.
pub fn cosh_ratio(kappa: f64, x: f64) -> f64 {
    (kappa * x).exp() * (1.0 + (-2.0 * kappa * (1.0 + x)).exp()) / (1.0 + (-2.0 * kappa).exp())
}

/// `sinh(κ(1+x)) / cosh κ` in overflow-free form.
pub fn sinh_cosh_ratio(kappa: f64, x: f64) -> f64 {
    (kappa * x).exp() * (-(-2.0 * kappa * (1.0 + x)).exp_m1()) / (1.0 + (-2.0 * kappa).exp())
}

#[derive(Clone, Debug)]
pub struct Phi1 {
    pub psi: PeriodicSpectrum,
    pub phi: StripField,
    /// `√δ ∂₁ φ₁`
    pub d1: StripField,
    pub d2: StripField,
    pub d22: StripField,
}

pub fn phi1_field(h: &PeriodicSpectrum, params: &DimensionlessParams, m: usize) -> Phi1 {
    let psi = curvature(h, params.alpha).scale(params.nu * params.alpha).add(&h.scale(params.eps));
    let rd = params.delta.sqrt();
    let p = psi.half().to_vec();
    let cutoff = h.cutoff();
    let phi = StripField::from_fn(cutoff, m, |n, x| if n == 0 { p[0] } else { p[n] * cosh_ratio(rd * n as f64, x) });
    let d1 = StripField::from_fn(cutoff, m, |n, x| {
        let k = rd * n as f64;
        if n == 0 {
            ZERO
        } else {
            p[n] * I * k * cosh_ratio(k, x)
        }
    });
    let d2 = StripField::from_fn(cutoff, m, |n, x| {
        let k = rd * n as f64;
        if n == 0 {
            ZERO
        } else {
            p[n] * k * sinh_cosh_ratio(k, x)
        }
    });
    let d22 = StripField::from_fn(cutoff, m, |n, x| {
        let k = rd * n as f64;
        if n == 0 {
            ZERO
        } else {
            p[n] * k * k * cosh_ratio(k, x)
        }
    });
    Phi1 { psi, phi, d1, d2, d22 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFamily {
    /// Source below the target, `y₂ <= x₂`.
    Lower,
    /// Source above the target, `y₂ >= x₂`.
    Upper,
}

/// `f(κ(1+lo)) g(κ hi) / cosh κ` with `f, g ∈ {cosh, sinh}`.
fn kernel_product(kappa: f64, lo: f64, f_cosh: bool, hi: f64, g_cosh: bool) -> f64 {
    let a = (-2.0 * kappa * (1.0 + lo)).exp();
    let b = (2.0 * kappa * hi).exp();
    let fa = if f_cosh { 1.0 + a } else { 1.0 - a };
    let gb = if g_cosh { 1.0 + b } else { -(1.0 - b) };
    0.5 * (kappa * (lo - hi)).exp() * fa * gb / (1.0 + (-2.0 * kappa).exp())
}

/// `∂_{x₂}^j ∂_{y₂}^l Π(κ, y₂, x₂)` for the given family, evaluated by its
/// closed form even slightly outside the family's region.
pub fn kernel(family: KernelFamily, kappa: f64, y: f64, x: f64, j: u32, l: u32) -> f64 {
    let scale = kappa.powi((j + l) as i32);
    match family {
        KernelFamily::Lower => scale * kernel_product(kappa, y, l.is_multiple_of(2), x, j % 2 == 1),
        KernelFamily::Upper => scale * kernel_product(kappa, x, j.is_multiple_of(2), y, l % 2 == 1),
    }
}

/// Green kernel with the family chosen by position.
pub fn green_kernel(kappa: f64, y: f64, x: f64, j: u32, l: u32) -> f64 {
    let fam = if y <= x { KernelFamily::Lower } else { KernelFamily::Upper };
    kernel(fam, kappa, y, x, j, l)
}

/// Row-major `(M+1)²` quadrature matrix for `x_i ↦ ∫ K(y, x_i) f(y) dy`,
/// split at the diagonal.
fn split_weights(grid: &[f64], k: impl Fn(KernelFamily, f64, f64) -> f64) -> Vec<f64> {
    let m = grid.len() - 1;
    let h = 1.0 / m as f64;
    let mut w = vec![0.0; (m + 1) * (m + 1)];
    for i in 0..=m {
        let x = grid[i];
        let row = &mut w[i * (m + 1)..(i + 1) * (m + 1)];
        let lower = KernelFamily::Lower;
        match i {
            0 => {}
            1 => {
                for (t, c) in SINGLE_INTERVAL.iter().enumerate() {
                    row[t] += h * c * k(lower, grid[t], x);
                }
            }
            _ => {
                for (t, c) in quad::composite_weights(i, h).iter().enumerate() {
                    row[t] += c * k(lower, grid[t], x);
                }
            }
        }
        let upper = KernelFamily::Upper;
        match m - i {
            0 => {}
            1 => {
                for (t, c) in SINGLE_INTERVAL.iter().enumerate() {
                    row[m - t] += h * c * k(upper, grid[m - t], x);
                }
            }
            n => {
                for (t, c) in quad::composite_weights(n, h).iter().enumerate() {
                    row[i + t] += c * k(upper, grid[i + t], x);
                }
            }
        }
    }
    w
}

#[derive(Clone, Debug)]
struct ModeKernels {
    kappa: f64,
    g: Vec<f64>,
    gy: Vec<f64>,
    gx: Vec<f64>,
    gxy: Vec<f64>,
    sinh_top: Vec<f64>,
    cosh_top: Vec<f64>,
}

/// Precomputed quadrature operators for every mode `1..=N` on an `M`-interval grid.
#[derive(Clone, Debug)]
pub struct KernelTable {
    pub delta: f64,
    cutoff: usize,
    grid: Vec<f64>,
    modes: Vec<ModeKernels>,
    upper_ones: Vec<f64>,
}

impl KernelTable {
    pub fn new(delta: f64, cutoff: usize, m: usize) -> Self {
        let grid = crate::geometry::uniform_grid(m);
        let rd = delta.sqrt();
        let modes = (1..=cutoff)
            .into_par_iter()
            .map(|n| {
                let kappa = rd * n as f64;
                let make = |j, l| split_weights(&grid, |fam, y, x| kernel(fam, kappa, y, x, j, l));
                ModeKernels {
                    kappa,
                    g: make(0, 0),
                    gy: make(0, 1),
                    gx: make(1, 0),
                    gxy: make(1, 1),
                    sinh_top: grid.iter().map(|&x| kernel(KernelFamily::Lower, kappa, -1.0, x, 0, 0)).collect(),
                    cosh_top: grid
                        .iter()
                        .map(|&x| {
                            ((kappa * (x - 1.0)).exp() + (-kappa * (x + 1.0)).exp()) / (1.0 + (-2.0 * kappa).exp())
                        })
                        .collect(),
                }
            })
            .collect();
        let upper_ones = split_weights(&grid, |fam, _, _| if fam == KernelFamily::Upper { 1.0 } else { 0.0 });
        Self { delta, cutoff, grid, modes, upper_ones }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn m(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn kappa(&self, n: usize) -> f64 {
        self.modes[n - 1].kappa
    }
}

fn matvec(w: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    w.chunks_exact(n).map(|row| row.iter().zip(v).map(|(a, b)| b * a).sum()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoissonSolution {
    pub phi: StripField,
    /// `√δ ∂₁ φ`
    pub d1: StripField,
    pub d2: StripField,
    pub trace_d2: PeriodicSpectrum,
    pub residual: f64,
}

impl PoissonSolution {
    pub fn zeros(cutoff: usize, m: usize) -> Self {
        let z = StripField::zeros(cutoff, m);
        Self { phi: z.clone(), d1: z.clone(), d2: z, trace_d2: PeriodicSpectrum::zeros(cutoff), residual: 0.0 }
    }

    /// `‖∇_δ φ‖` in `𝒜^{s,1}_λ`, summing both components, with numerical
    /// vertical derivatives.
    pub fn grad_norm_a1(&self, s: f64, lambda: f64) -> Result<f64> {
        Ok(self.d1.norm_a1(s, lambda)? + self.d2.norm_a1(s, lambda)?)
    }
}

/// Solves `Δ_δ φ = ∇_δ·g`, `φ = 0` on top, `∂₂φ = 0` on the bottom, mode by
/// mode from the kernel representation.
pub fn solve_poisson_green(g1: &StripField, g2: &StripField, table: &KernelTable) -> Result<PoissonSolution> {
    let cutoff = g1.cutoff();
    let m = g1.m();
    if cutoff > table.cutoff() || m != table.m() || g2.cutoff() != cutoff || g2.m() != m {
        return Err(Error::Shape { left: cutoff, right: table.cutoff() });
    }
    let per_mode: Vec<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> = (0..=cutoff)
        .into_par_iter()
        .map(|n| {
            let a = g1.profile(n);
            let b = g2.profile(n);
            if n == 0 {
                let d2: Vec<Complex64> = b.iter().map(|v| v - b[0]).collect();
                let phi = matvec(&table.upper_ones, &d2).into_iter().map(|v| -v).collect();
                return (phi, vec![ZERO; m + 1], d2);
            }
            let mk = &table.modes[n - 1];
            let k = mk.kappa;
            let ga = matvec(&mk.g, a);
            let gyb = matvec(&mk.gy, b);
            let gxa = matvec(&mk.gx, a);
            let gxyb = matvec(&mk.gxy, b);
            let bottom = b[0];
            let phi: Vec<Complex64> = (0..=m).map(|i| I * ga[i] - bottom * (mk.sinh_top[i] / k) - gyb[i] / k).collect();
            let d2 = (0..=m).map(|i| I * gxa[i] - bottom * mk.cosh_top[i] + b[i] - gxyb[i] / k).collect();
            let d1 = phi.iter().map(|v| v * I * k).collect();
            (phi, d1, d2)
        })
        .collect();
    let mut phi = Vec::with_capacity(cutoff + 1);
    let mut d1 = Vec::with_capacity(cutoff + 1);
    let mut d2 = Vec::with_capacity(cutoff + 1);
    for (a, b, c) in per_mode {
        phi.push(a);
        d1.push(b);
        d2.push(c);
    }
    let phi = StripField::from_profiles(m, phi);
    let d2 = StripField::from_profiles(m, d2);
    let residual = phi.profiles().iter().zip(d2.profiles()).map(|(p, d)| p[m].norm() + d[0].norm()).fold(0.0, f64::max);
    Ok(PoissonSolution { trace_d2: d2.top(), d1: StripField::from_profiles(m, d1), phi, d2, residual })
}

/// One row of the kernel-integral report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelBoundRow {
    pub kappa: f64,
    pub j: u32,
    pub l: u32,
    pub family: String,
    pub bound: f64,
    pub measured: f64,
    pub ratio: f64,
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `sup_{y₂} ∫ |∂_{x₂}^j ∂_{y₂}^l Π| dx₂` for both families over their regions,
/// against `2 κ^{j+l-1}` and `(5/2) κ^{j+l-1}`.
pub fn kernel_integral_bounds(kappa: f64, pairs: &[(u32, u32)], y_samples: usize) -> Vec<KernelBoundRow> {
    assert!(kappa > 0.0);
    let mut rows = Vec::new();
    for &(j, l) in pairs {
        for (family, c) in [(KernelFamily::Lower, 2.0), (KernelFamily::Upper, 2.5)] {
            let bound = c * kappa.powi(j as i32 + l as i32 - 1);
            let measured = (0..=y_samples)
                .into_par_iter()
                .map(|t| {
                    let y = -1.0 + t as f64 / y_samples as f64;
                    let f = move |x: f64| kernel(family, kappa, y, x, j, l).abs();
                    let scale = kappa.powi((j + l) as i32).max(1.0);
                    let (a, b) = match family {
                        KernelFamily::Lower => (y, 0.0),
                        KernelFamily::Upper => (-1.0, y),
                    };
                    let tol = 1e-12 * scale;
                    adaptive_simpson(&f, a, b, tol)
                })
                .reduce(|| 0.0, f64::max);
            rows.push(KernelBoundRow {
                kappa,
                j,
                l,
                family: match family {
                    KernelFamily::Lower => "Pi1".into(),
                    KernelFamily::Upper => "Pi2".into(),
                },
                bound,
                measured,
                ratio: measured / bound,
            });
        }
    }
    rows
}

#[derive(Clone, Copy, Debug)]
pub struct FixedPointOptions {
    /// Stop once the update is below `tol` relative to the iterate.
    pub tol: f64,
    pub max_iter: usize,
    pub override_smallness: bool,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200, override_smallness: false }
    }
}

#[derive(Clone, Debug)]
pub struct Phi2Solution {
    pub solution: PoissonSolution,
    pub iterations: usize,
    pub contraction: f64,
}

/// The elliptic smallness threshold `c₀√δ/(260ε)` at the largest admissible
/// `c₀ = 1/(2√δ)`.
pub fn phi2_smallness_threshold(eps: f64) -> f64 {
    1.0 / (520.0 * eps)
}

fn forcing(ale: &AleMatrices, eps: f64, v1: &StripField, v2: &StripField) -> (StripField, StripField) {
    let (q1, q2) = ale.apply_q(v1, v2);
    (q1.scale(-eps), q2.scale(-eps))
}

/// Fixed point `φ₂ ↦ G(-εQ∇_δ(φ₁ + φ₂))` with optional warm start.
pub fn solve_phi2(
    h: &PeriodicSpectrum,
    phi1: &Phi1,
    ale: &AleMatrices,
    table: &KernelTable,
    eps: f64,
    warm: Option<&PoissonSolution>,
    opts: FixedPointOptions,
) -> Result<Phi2Solution> {
    let threshold = phi2_smallness_threshold(eps);
    let h1 = norm_s(h, 1.0);
    if h1 > threshold && !opts.override_smallness {
        return Err(Error::Smallness { value: h1, threshold });
    }
    let cutoff = h.cutoff();
    let m = phi1.phi.m();
    if h.is_zero() {
        return Ok(Phi2Solution { solution: PoissonSolution::zeros(cutoff, m), iterations: 1, contraction: 0.0 });
    }
    let mut current = warm.cloned().unwrap_or_else(|| PoissonSolution::zeros(cutoff, m));
    let mut prev_dist = f64::INFINITY;
    let mut growth = 0;
    let mut factor = 0.0;
    for it in 1..=opts.max_iter {
        let (g1, g2) = forcing(ale, eps, &phi1.d1.add(&current.d1), &phi1.d2.add(&current.d2));
        let next = solve_poisson_green(&g1, &g2, table)?;
        let dist = next.d1.sub(&current.d1).norm_a1(0.0, 0.0)? + next.d2.sub(&current.d2).norm_a1(0.0, 0.0)?;
        let size = next.grad_norm_a1(0.0, 0.0)?;
        if prev_dist.is_finite() && prev_dist > 0.0 {
            factor = dist / prev_dist;
        }
        current = next;
        if dist <= opts.tol * size || dist == 0.0 {
            return Ok(Phi2Solution { solution: current, iterations: it, contraction: factor });
        }
        if dist > prev_dist {
            growth += 1;
            if growth >= 3 {
                return Err(Error::Solver { message: "phi2 iteration is not contracting".into(), factor });
            }
        } else {
            growth = 0;
        }
        prev_dist = dist;
    }
    Err(Error::Solver { message: format!("phi2 iteration did not reach {:e}", opts.tol), factor })
}

fn fd_d2(u: &[Complex64], h: f64) -> Vec<Complex64> {
    let m = u.len() - 1;
    let mut d = vec![ZERO; m + 1];
    d[0] = (u[1] * 4.0 - u[0] * 3.0 - u[2]) / (2.0 * h);
    for i in 1..m {
        d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    d[m] = (u[m] * 3.0 - u[m - 1] * 4.0 + u[m - 2]) / (2.0 * h);
    d
}

/// Tridiagonal solve of the second-order discretisation of
/// `u'' - κ²u = r` with the one-sided Neumann row at the bottom and `u = 0`
/// at the top.
fn fd_mode_solve(kappa: f64, rhs: &[Complex64], h: f64) -> Result<Vec<Complex64>> {
    let m = rhs.len() - 1;
    let kh = kappa * kappa * h * h;
    let n = m;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut r = vec![ZERO; n];
    diag[0] = -2.0;
    upper[0] = 2.0 - kh;
    r[0] = rhs[1] * h * h;
    for i in 1..n {
        lower[i] = 1.0;
        diag[i] = -(2.0 + kh);
        if i + 1 < n {
            upper[i] = 1.0;
        }
        r[i] = rhs[i] * h * h;
    }
    let mut c = vec![0.0; n];
    let mut d = vec![ZERO; n];
    c[0] = upper[0] / diag[0];
    d[0] = r[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - lower[i] * c[i - 1];
        if den.abs() < 1e-300 {
            return Err(Error::Solver { message: "singular finite-difference system".into(), factor: 0.0 });
        }
        c[i] = upper[i] / den;
        d[i] = (r[i] - d[i - 1] * lower[i]) / den;
    }
    let mut u = vec![ZERO; m + 1];
    u[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = d[i] - u[i + 1] * c[i];
    }
    Ok(u)
}

/// Finite differences in `x₂` (spectral in `x₁`) for the full
/// variable-coefficient problem `∇_δ·((I+εQ)∇_δ(φ₁+φ₂)) = 0`, solved by a
/// fixed point preconditioned with the constant-coefficient operator.
pub fn solve_phi2_fd(
    h: &PeriodicSpectrum,
    phi1: &Phi1,
    ale: &AleMatrices,
    delta: f64,
    eps: f64,
    opts: FixedPointOptions,
) -> Result<Phi2Solution> {
    let threshold = phi2_smallness_threshold(eps);
    let h1 = norm_s(h, 1.0);
    if h1 > threshold && !opts.override_smallness {
        return Err(Error::Smallness { value: h1, threshold });
    }
    let cutoff = h.cutoff();
    let m = phi1.phi.m();
    let dx = 1.0 / m as f64;
    let rd = delta.sqrt();
    let mut u = StripField::zeros(cutoff, m);
    let mut prev = f64::INFINITY;
    let mut growth = 0;
    let mut factor = 0.0;
    for it in 1..=opts.max_iter {
        let d1 = u.d_x1().scale(rd);
        let d2 = StripField::from_profiles(m, u.profiles().iter().map(|p| fd_d2(p, dx)).collect());
        let (f1, f2) = ale.apply_q(&phi1.d1.add(&d1), &phi1.d2.add(&d2));
        let profiles: Vec<Vec<Complex64>> = (0..=cutoff)
            .into_par_iter()
            .map(|n| {
                let kappa = rd * n as f64;
                let a = f1.profile(n);
                let b = f2.profile(n);
                let mut rhs = vec![ZERO; m + 1];
                for i in 1..m {
                    let div = a[i] * I * kappa + (b[i + 1] - b[i - 1]) / (2.0 * dx);
                    rhs[i] = -div * eps;
                }
                fd_mode_solve(kappa, &rhs, dx)
            })
            .collect::<Result<_>>()?;
        let next = StripField::from_profiles(m, profiles);
        let scale = next.profiles().iter().flatten().fold(0.0_f64, |s, c| s.max(c.norm()));
        let dist = next.sub(&u).profiles().iter().flatten().fold(0.0_f64, |s, c| s.max(c.norm()));
        if prev.is_finite() && prev > 0.0 {
            factor = dist / prev;
        }
        u = next;
        if dist <= opts.tol * scale.max(f64::MIN_POSITIVE) || dist == 0.0 {
            let d1 = u.d_x1().scale(rd);
            let d2 = StripField::from_profiles(m, u.profiles().iter().map(|p| fd_d2(p, dx)).collect());
            let residual = d2.bottom().half().iter().fold(0.0_f64, |s, c| s.max(c.norm()));
            return Ok(Phi2Solution {
                solution: PoissonSolution { trace_d2: d2.top(), phi: u, d1, d2, residual },
                iterations: it,
                contraction: factor,
            });
        }
        if dist > prev {
            growth += 1;
            if growth >= 3 {
                return Err(Error::Solver { message: "finite-difference iteration is not contracting".into(), factor });
            }
        } else {
            growth = 0;
        }
        prev = dist;
    }
    Err(Error::Solver { message: "finite-difference iteration did not converge".into(), factor })
}

//! Physical parameters, the dimensionless groups, and the dimensional form of
//! the global theorem's hypotheses.
//!
//! Units are not enforced; any consistent system works. For a Hele-Shaw cell
//! of gap `d`, use `12μ/d²` in place of `μ/κ`.

use serde::{Deserialize, Serialize};

use crate::analysis::THEOREM_C0;
use crate::error::{Error, Result};
use crate::evolution::DimensionlessParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Fluid depth `H`.
    pub depth: f64,
    /// Horizontal length scale `L`.
    pub length: f64,
    /// Interface amplitude `a`.
    pub amplitude: f64,
    /// Surface tension `γ`.
    pub gamma: f64,
    /// Density `ρ`.
    pub rho: f64,
    /// Gravity `G`.
    pub gravity: f64,
    /// Dynamic viscosity `μ`.
    #[serde(default = "one")]
    pub viscosity: f64,
    /// Permeability `κ`.
    #[serde(default = "one")]
    pub permeability: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    pub eps: f64,
    pub delta: f64,
    pub nu: f64,
    pub alpha: f64,
    /// `μL/(ρκG)`
    pub time_scale: f64,
    /// `HκρG/μ`
    pub potential_scale: f64,
}

impl Conversion {
    /// Dimensionless parameters with default numerics.
    pub fn params(&self) -> DimensionlessParams {
        let mut p = DimensionlessParams::new(self.eps, self.delta, self.nu);
        p.alpha = self.alpha;
        p
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("depth", self.depth),
            ("length", self.length),
            ("amplitude", self.amplitude),
            ("gamma", self.gamma),
            ("rho", self.rho),
            ("gravity", self.gravity),
            ("viscosity", self.viscosity),
            ("permeability", self.permeability),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be positive")));
            }
        }
        if self.amplitude > self.depth {
            return Err(Error::Config("amplitude must not exceed depth".into()));
        }
        if self.depth > self.length {
            return Err(Error::Config("depth must not exceed length".into()));
        }
        Ok(())
    }

    /// `ε = a/H`, `δ = H²/L²`, `ν = γ/(HLρG)`, `α = a/L`.
    pub fn to_dimensionless(&self) -> Result<Conversion> {
        self.validate()?;
        let (h, l) = (self.depth, self.length);
        Ok(Conversion {
            eps: self.amplitude / h,
            delta: (h / l) * (h / l),
            nu: self.gamma / (h * l * self.rho * self.gravity),
            alpha: self.amplitude / l,
            time_scale: self.viscosity * l / (self.rho * self.permeability * self.gravity),
            potential_scale: h * self.permeability * self.rho * self.gravity / self.viscosity,
        })
    }

    /// Physical parameters with the given depth, density and gravity
    /// realising `(ε, δ, ν)`.
    pub fn from_dimensionless(eps: f64, delta: f64, nu: f64, depth: f64, rho: f64, gravity: f64) -> Result<Self> {
        let length = depth / delta.sqrt();
        let p = Self {
            depth,
            length,
            amplitude: eps * depth,
            gamma: nu * depth * length * rho * gravity,
            rho,
            gravity,
            viscosity: 1.0,
            permeability: 1.0,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Condition {
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value < threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionalReport {
    pub conditions: Vec<Condition>,
    pub amplitude_bound: f64,
}

impl DimensionalReport {
    pub fn pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.conditions.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

/// `min{(H²/L²)(γ - L²ρG)/(C₀γ), H}`
pub fn dimensional_amplitude_bound(p: &PhysicalParams) -> f64 {
    let r = (p.depth / p.length).powi(2);
    (r * (p.gamma - p.length * p.length * p.rho * p.gravity) / (THEOREM_C0 * p.gamma)).min(p.depth)
}

/// `L² < γ/(ρG)`, `H < L`, and `|h₀| < min{(H²/L²)(γ - L²ρG)/(C₀γ), H}`.
pub fn check_dimensional_theorem(p: &PhysicalParams, h0_norm: f64) -> Result<DimensionalReport> {
    let positive = PhysicalParams { depth: p.depth.min(p.length), ..p.clone() };
    positive.validate()?;
    let bound = dimensional_amplitude_bound(p);
    Ok(DimensionalReport {
        conditions: vec![
            Condition::below("capillary_length", p.length * p.length, p.gamma / (p.rho * p.gravity)),
            Condition::below("shallowness", p.depth, p.length),
            Condition::below("amplitude", h0_norm, bound),
        ],
        amplitude_bound: bound,
    })
}

/// The dimensionless threshold `(ν√δ - 1)/(C₀νε)` rescaled by `a/L`.
pub fn chain_bound(c: &Conversion) -> f64 {
    c.alpha * (c.nu * c.delta.sqrt() - 1.0) / (THEOREM_C0 * c.nu * c.eps)
}

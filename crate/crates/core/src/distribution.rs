//! Passage-time distributions: closed-form CDFs, support bounds and
//! inverse-CDF sampling.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::UniformStream;

/// Tolerance on the total mass of a mixture.
const MASS_TOLERANCE: f64 = 1e-12;

/// Parametric description of the common law `F` of the passage times.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DistributionSpec {
    /// Density `rate * exp(-rate x)` on `[0, inf)`.
    Exponential { rate: f64 },
    /// Uniform on `[a, b]`, `0 <= a < b`.
    Uniform { a: f64, b: f64 },
    /// `P(X > x) = (scale / x)^shape` for `x >= scale`.
    Pareto { shape: f64, scale: f64 },
    /// `offset + X` with `X ~ inner`.
    Shifted {
        offset: f64,
        inner: Box<DistributionSpec>,
    },
    /// Point masses `(value, probability)` plus an optional continuous part
    /// carrying the remaining `weight`.
    AtomMixture {
        atoms: Vec<(f64, f64)>,
        continuous: Option<(f64, Box<DistributionSpec>)>,
    },
}

impl DistributionSpec {
    pub fn exponential(rate: f64) -> Self {
        DistributionSpec::Exponential { rate }
    }

    pub fn uniform(a: f64, b: f64) -> Self {
        DistributionSpec::Uniform { a, b }
    }

    pub fn pareto(shape: f64, scale: f64) -> Self {
        DistributionSpec::Pareto { shape, scale }
    }

    pub fn shifted(offset: f64, inner: DistributionSpec) -> Self {
        DistributionSpec::Shifted {
            offset,
            inner: Box::new(inner),
        }
    }

    pub fn point_mass(value: f64) -> Self {
        DistributionSpec::AtomMixture {
            atoms: alloc::vec![(value, 1.0)],
            continuous: None,
        }
    }

    pub fn atoms(atoms: Vec<(f64, f64)>) -> Self {
        DistributionSpec::AtomMixture {
            atoms,
            continuous: None,
        }
    }

    pub fn mixture(atoms: Vec<(f64, f64)>, weight: f64, inner: DistributionSpec) -> Self {
        DistributionSpec::AtomMixture {
            atoms,
            continuous: Some((weight, Box::new(inner))),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            DistributionSpec::Exponential { .. } => "exponential",
            DistributionSpec::Uniform { .. } => "uniform",
            DistributionSpec::Pareto { .. } => "pareto",
            DistributionSpec::Shifted { .. } => "shifted",
            DistributionSpec::AtomMixture { .. } => "mixture",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidSpec(msg));
        match self {
            DistributionSpec::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential rate {rate} must be finite and positive"));
                }
            }
            DistributionSpec::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && a < b) {
                    return bad(format!("uniform bounds need 0 <= a < b < inf, got [{a}, {b}]"));
                }
            }
            DistributionSpec::Pareto { shape, scale } => {
                if !(shape.is_finite() && *shape > 0.0 && scale.is_finite() && *scale > 0.0) {
                    return bad(format!("pareto shape {shape} and scale {scale} must be positive"));
                }
            }
            DistributionSpec::Shifted { offset, inner } => {
                if !(offset.is_finite() && *offset >= 0.0) {
                    return bad(format!("shift {offset} must be finite and non-negative"));
                }
                inner.validate()?;
            }
            DistributionSpec::AtomMixture { atoms, continuous } => {
                let mut mass = 0.0;
                for &(value, p) in atoms {
                    if !(value.is_finite() && value >= 0.0) {
                        return bad(format!("atom location {value} must be finite and non-negative"));
                    }
                    if !(p.is_finite() && p >= 0.0) {
                        return bad(format!("atom probability {p} must be in [0, 1]"));
                    }
                    mass += p;
                }
                if let Some((w, inner)) = continuous {
                    if !(w.is_finite() && *w >= 0.0) {
                        return bad(format!("continuous weight {w} must be in [0, 1]"));
                    }
                    inner.validate()?;
                    mass += w;
                }
                if libm::fabs(mass - 1.0) > MASS_TOLERANCE {
                    return bad(format!("mixture mass {mass} does not sum to 1"));
                }
            }
        }
        Ok(())
    }

    /// `F(x) = P(tau <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            DistributionSpec::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    -libm::expm1(-rate * x)
                }
            }
            DistributionSpec::Uniform { a, b } => {
                if x < *a {
                    0.0
                } else if x >= *b {
                    1.0
                } else {
                    (x - a) / (b - a)
                }
            }
            DistributionSpec::Pareto { shape, scale } => {
                if x < *scale {
                    0.0
                } else {
                    1.0 - libm::pow(scale / x, *shape)
                }
            }
            DistributionSpec::Shifted { offset, inner } => inner.cdf(x - offset),
            DistributionSpec::AtomMixture { atoms, continuous } => {
                let atom_mass: f64 = atoms.iter().filter(|(v, _)| *v <= x).map(|(_, p)| p).sum();
                let cont = continuous.as_ref().map_or(0.0, |(w, inner)| w * inner.cdf(x));
                (atom_mass + cont).min(1.0)
            }
        }
    }

    /// `r = inf { x : F(x) > 0 }`.
    pub fn support_min(&self) -> f64 {
        match self {
            DistributionSpec::Exponential { .. } => 0.0,
            DistributionSpec::Uniform { a, .. } => *a,
            DistributionSpec::Pareto { scale, .. } => *scale,
            DistributionSpec::Shifted { offset, inner } => offset + inner.support_min(),
            DistributionSpec::AtomMixture { atoms, continuous } => {
                let atoms_min = atoms
                    .iter()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(v, _)| *v)
                    .fold(f64::INFINITY, f64::min);
                match continuous {
                    Some((w, inner)) if *w > 0.0 => atoms_min.min(inner.support_min()),
                    _ => atoms_min,
                }
            }
        }
    }

    /// Supremum of the support, `None` when unbounded.
    pub fn support_max(&self) -> Option<f64> {
        match self {
            DistributionSpec::Exponential { .. } | DistributionSpec::Pareto { .. } => None,
            DistributionSpec::Uniform { b, .. } => Some(*b),
            DistributionSpec::Shifted { offset, inner } => inner.support_max().map(|m| m + offset),
            DistributionSpec::AtomMixture { atoms, continuous } => {
                let atoms_max = atoms
                    .iter()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(v, _)| *v)
                    .fold(f64::NEG_INFINITY, f64::max);
                match continuous {
                    Some((w, inner)) if *w > 0.0 => inner.support_max().map(|m| m.max(atoms_max)),
                    _ => Some(atoms_max),
                }
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.support_max().is_some()
    }

    /// Whether `F` has an atom, i.e. ties between path times have positive
    /// probability.
    pub fn has_atoms(&self) -> bool {
        match self {
            DistributionSpec::Shifted { inner, .. } => inner.has_atoms(),
            DistributionSpec::AtomMixture { atoms, continuous } => {
                atoms.iter().any(|(_, p)| *p > 0.0)
                    || continuous.as_ref().is_some_and(|(w, inner)| *w > 0.0 && inner.has_atoms())
            }
            _ => false,
        }
    }

    /// Inverse-CDF draw consuming uniforms from `stream`.
    pub fn sample(&self, stream: &mut UniformStream) -> f64 {
        match self {
            DistributionSpec::Exponential { rate } => {
                let u = stream.next_open01();
                -libm::log1p(-u) / rate
            }
            DistributionSpec::Uniform { a, b } => {
                let u = stream.next_open01();
                a + (b - a) * u
            }
            DistributionSpec::Pareto { shape, scale } => {
                let u = stream.next_open01();
                scale * libm::pow(1.0 - u, -1.0 / shape)
            }
            DistributionSpec::Shifted { offset, inner } => offset + inner.sample(stream),
            DistributionSpec::AtomMixture { atoms, continuous } => {
                let u = stream.next_open01();
                let mut acc = 0.0;
                for &(value, p) in atoms {
                    acc += p;
                    if u < acc {
                        return value;
                    }
                }
                match continuous {
                    Some((w, inner)) if *w > 0.0 => inner.sample(stream),
                    // Rounding slack in the atom masses: fall back to the last atom.
                    _ => atoms
                        .iter()
                        .rev()
                        .find(|(_, p)| *p > 0.0)
                        .map_or(0.0, |(v, _)| *v),
                }
            }
        }
    }
}

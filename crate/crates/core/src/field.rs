//! Edge passage-time fields over a lattice box.

use alloc::vec::Vec;

use crate::distribution::DistributionSpec;
use crate::error::{Error, Result};
use crate::lattice::{EdgeId, LatticeBox};
use crate::rng::{edge_key, UniformStream};

/// Seed and law a field was sampled from.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub spec: DistributionSpec,
}

/// Total map from the edges of a box to non-negative passage times.
#[derive(Clone, Debug)]
pub struct EdgeField {
    bx: LatticeBox,
    // Indexed by edge slot; unused slots hold NaN and are never read.
    weights: Vec<f64>,
    provenance: Option<Provenance>,
}

/// Passage time of edge `e` under `(seed, spec)`.
///
/// Depends only on the seed, the law and the edge itself, never on the
/// enclosing box or on evaluation order.
pub fn sample_weight(spec: &DistributionSpec, seed: u64, e: &EdgeId) -> f64 {
    let mut stream = UniformStream::new(edge_key(seed, e));
    spec.sample(&mut stream)
}

/// Samples i.i.d. passage times for every edge of `bx`.
pub fn sample_edge_field(bx: &LatticeBox, spec: &DistributionSpec, seed: u64) -> Result<EdgeField> {
    spec.validate()?;
    let weights = (0..bx.edge_slot_count())
        .map(|slot| match bx.edge_at_slot(slot) {
            Some(e) => sample_weight(spec, seed, &e),
            None => f64::NAN,
        })
        .collect();
    Ok(EdgeField {
        bx: bx.clone(),
        weights,
        provenance: Some(Provenance {
            seed,
            spec: spec.clone(),
        }),
    })
}

impl EdgeField {
    /// Assembles a field from per-slot weights, e.g. produced in parallel
    /// with [`sample_weight`].
    pub fn from_slot_weights(
        bx: LatticeBox,
        mut weights: Vec<f64>,
        provenance: Option<Provenance>,
    ) -> Result<Self> {
        if weights.len() != bx.edge_slot_count() {
            return Err(Error::InvalidParameter(alloc::format!(
                "expected {} edge slots, got {}",
                bx.edge_slot_count(),
                weights.len()
            )));
        }
        for (slot, w) in weights.iter_mut().enumerate() {
            if bx.edge_at_slot(slot).is_some() {
                if !(w.is_finite() && *w >= 0.0) {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "passage time {w} must be finite and non-negative"
                    )));
                }
            } else {
                *w = f64::NAN;
            }
        }
        Ok(EdgeField {
            bx,
            weights,
            provenance,
        })
    }

    pub fn from_fn(bx: &LatticeBox, mut f: impl FnMut(&EdgeId) -> f64) -> Result<Self> {
        let weights = (0..bx.edge_slot_count())
            .map(|slot| bx.edge_at_slot(slot).map_or(f64::NAN, |e| f(&e)))
            .collect();
        Self::from_slot_weights(bx.clone(), weights, None)
    }

    pub fn constant(bx: &LatticeBox, value: f64) -> Result<Self> {
        Self::from_fn(bx, |_| value)
    }

    /// Copy with selected edges overwritten.
    pub fn with_weights(&self, overrides: &[(EdgeId, f64)]) -> Result<Self> {
        let mut weights = self.weights.clone();
        for (e, w) in overrides {
            let slot = self.bx.edge_slot(e).ok_or(Error::EdgeOutOfBox)?;
            weights[slot] = *w;
        }
        Self::from_slot_weights(self.bx.clone(), weights, None)
    }

    /// Copy of the field restricted to the closed sub-box `[lo, hi]`.
    pub fn sub_field(&self, lo: &crate::lattice::Vertex, hi: &crate::lattice::Vertex) -> Result<Self> {
        if !self.bx.contains_region(lo, hi) {
            return Err(Error::RegionOutOfBox);
        }
        let sub = LatticeBox::from_corners(*lo, *hi)?;
        let weights = (0..sub.edge_slot_count())
            .map(|slot| match sub.edge_at_slot(slot) {
                Some(e) => self.weights[self.bx.edge_slot(&e).expect("sub-box edge")],
                None => f64::NAN,
            })
            .collect();
        Ok(EdgeField {
            bx: sub,
            weights,
            provenance: None,
        })
    }

    pub fn lattice_box(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn weight(&self, e: &EdgeId) -> Option<f64> {
        self.bx.edge_slot(e).map(|s| self.weights[s])
    }

    #[inline]
    pub fn slot_weight(&self, slot: usize) -> f64 {
        self.weights[slot]
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, f64)> + '_ {
        self.bx.edges().map(move |e| {
            let w = self.weights[self.bx.edge_slot(&e).expect("edge in box")];
            (e, w)
        })
    }

    pub fn max_weight(&self) -> f64 {
        self.weights
            .iter()
            .filter(|w| !w.is_nan())
            .fold(0.0, |a, &b| a.max(b))
    }

    /// Number of edges with weight at most `m`.
    pub fn count_at_most(&self, m: f64) -> usize {
        self.weights.iter().filter(|w| **w <= m).count()
    }
}

// Bitwise comparison of weights, so that unused NaN slots compare equal.
impl PartialEq for EdgeField {
    fn eq(&self, other: &Self) -> bool {
        self.bx == other.bx
            && self.provenance == other.provenance
            && self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// All weights in edge order.
pub fn weight_values(field: &EdgeField) -> Vec<f64> {
    field.iter().map(|(_, w)| w).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Vertex;

    #[test]
    fn point_mass_gives_constant_field() {
        let bx = LatticeBox::with_side(2, 2).unwrap();
        let f = sample_edge_field(&bx, &DistributionSpec::point_mass(1.0), 123).unwrap();
        assert_eq!(f.iter().count(), 4);
        assert!(f.iter().all(|(_, w)| w == 1.0));
    }

    #[test]
    fn sampling_is_deterministic_and_box_independent() {
        let spec = DistributionSpec::exponential(1.0);
        let small = LatticeBox::new(&[0, 0], &[5, 5]).unwrap();
        let big = LatticeBox::new(&[-3, -3], &[9, 9]).unwrap();
        let a = sample_edge_field(&small, &spec, 77).unwrap();
        let b = sample_edge_field(&small, &spec, 77).unwrap();
        let c = sample_edge_field(&big, &spec, 77).unwrap();
        for (e, w) in a.iter() {
            assert_eq!(w.to_bits(), b.weight(&e).unwrap().to_bits());
            assert_eq!(w.to_bits(), c.weight(&e).unwrap().to_bits());
        }
        let other = sample_edge_field(&small, &spec, 78).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn uniform_mean_is_within_three_standard_errors() {
        let bx = LatticeBox::with_side(2, 50).unwrap();
        let f = sample_edge_field(&bx, &DistributionSpec::uniform(0.0, 1.0), 2024).unwrap();
        let w = weight_values(&f);
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        // Var(U(0,1)) = 1/12.
        let se = libm::sqrt(1.0 / 12.0 / n);
        assert!(libm::fabs(mean - 0.5) < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn overrides_replace_single_edges() {
        let bx = LatticeBox::with_side(2, 3).unwrap();
        let f = EdgeField::constant(&bx, 1.0).unwrap();
        let e = EdgeId::between(&Vertex::new(&[0, 0]), &Vertex::new(&[0, 1])).unwrap();
        let g = f.with_weights(&[(e, 4.0)]).unwrap();
        assert_eq!(g.weight(&e), Some(4.0));
        assert_eq!(g.max_weight(), 4.0);
        assert!(f.with_weights(&[(e, -1.0)]).is_err());
    }
}

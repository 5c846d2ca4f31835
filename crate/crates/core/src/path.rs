//! Self-avoiding lattice paths, their passage times and edge statistics.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::EdgeField;
use crate::lattice::{EdgeId, Vertex};

/// A self-avoiding nearest-neighbour path with its passage time under the
/// field it was built against.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathRecord {
    vertices: Vec<Vertex>,
    pub total_time: f64,
}

impl PathRecord {
    /// Validates adjacency and self-avoidance and sums the weights.
    pub fn new(vertices: Vec<Vertex>, field: &EdgeField) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidParameter("a path needs at least one vertex".into()));
        }
        check_self_avoiding(&vertices)?;
        let total_time = walk_time(field, &vertices)?;
        Ok(PathRecord {
            vertices,
            total_time,
        })
    }

    pub fn single(v: Vertex) -> Self {
        PathRecord {
            vertices: alloc::vec![v],
            total_time: 0.0,
        }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Vertex> {
        self.vertices
    }

    pub fn first(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn last(&self) -> Vertex {
        *self.vertices.last().expect("non-empty path")
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.vertices
            .windows(2)
            .map(|w| EdgeId::between(&w[0], &w[1]).expect("validated path"))
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        PathRecord {
            vertices,
            total_time: self.total_time,
        }
    }

    /// Sub-path between vertex positions `from..=to`, re-timed on `field`.
    pub fn segment(&self, from: usize, to: usize, field: &EdgeField) -> Result<Self> {
        PathRecord::new(self.vertices[from..=to].to_vec(), field)
    }

    pub fn position(&self, v: &Vertex) -> Option<usize> {
        self.vertices.iter().position(|x| x == v)
    }
}

pub(crate) fn check_self_avoiding(vertices: &[Vertex]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for v in vertices {
        if !seen.insert(*v) {
            return Err(Error::NotSelfAvoiding);
        }
    }
    Ok(())
}

/// Sum of edge weights along a walk; every step must be an in-box edge.
pub fn walk_time(field: &EdgeField, vertices: &[Vertex]) -> Result<f64> {
    let mut t = 0.0;
    for w in vertices.windows(2) {
        let e = EdgeId::between(&w[0], &w[1])?;
        t += field.weight(&e).ok_or(Error::EdgeOutOfBox)?;
    }
    Ok(t)
}

/// Passage time of `path` under `field` (which need not be the field the
/// path was built against).
pub fn path_time(field: &EdgeField, path: &PathRecord) -> Result<f64> {
    walk_time(field, path.vertices())
}

/// One interval of a finite union; bounds may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

/// Which edges count as "heavy".
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EdgePredicate {
    /// `tau(e) > M`.
    Above(f64),
    /// `tau(e)` in a finite union of intervals.
    InSet(Vec<Interval>),
}

impl EdgePredicate {
    pub fn matches(&self, w: f64) -> bool {
        match self {
            EdgePredicate::Above(m) => w > *m,
            EdgePredicate::InSet(set) => set.iter().any(|i| i.contains(w)),
        }
    }
}

/// Number of path edges whose weight satisfies `predicate`.
pub fn heavy_edge_count(field: &EdgeField, path: &PathRecord, predicate: &EdgePredicate) -> Result<usize> {
    let mut count = 0;
    for e in path.edges() {
        let w = field.weight(&e).ok_or(Error::EdgeOutOfBox)?;
        if predicate.matches(w) {
            count += 1;
        }
    }
    Ok(count)
}

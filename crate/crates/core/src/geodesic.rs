//! Passage times, geodesics and restricted passage times.
//!
//! All searches stay inside the field's box, so times can exceed their
//! infinite-lattice counterparts near the boundary.
//!
//! Ties between optimal paths are broken by always stepping back to the
//! lexicographically smallest tight predecessor; among predecessors with
//! equal distance only those settled earlier are eligible, which keeps the
//! predecessor graph acyclic in the presence of zero-weight edges.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::EdgeField;
use crate::lattice::Vertex;
use crate::path::PathRecord;
use crate::search::{Control, Restriction, Search};
use crate::time::PassageTime;

/// An optimal path together with its time and whether a tie was broken.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeodesicResult {
    pub path: PathRecord,
    pub time: f64,
    pub unique: bool,
}

fn index(field: &EdgeField, v: &Vertex) -> Result<usize> {
    field.lattice_box().index_of(v).ok_or(Error::OutOfBox)
}

fn check_cap(m: f64) -> Result<()> {
    if m.is_nan() || m < 0.0 {
        return Err(Error::InvalidParameter(alloc::format!("M = {m} must be non-negative")));
    }
    Ok(())
}

fn materialize(field: &EdgeField, indices: &[usize], time: f64, tie: bool) -> GeodesicResult {
    let bx = field.lattice_box();
    let vertices: Vec<Vertex> = indices.iter().map(|&i| bx.vertex(i)).collect();
    GeodesicResult {
        path: PathRecord::new(vertices, field).expect("search paths are valid"),
        time,
        unique: !tie,
    }
}

/// `t(u, v)`.
pub fn shortest_time(field: &EdgeField, u: &Vertex, v: &Vertex) -> Result<f64> {
    let (s, t) = (index(field, u)?, index(field, v)?);
    let search = Search::until(field, s, t, &Restriction::none());
    Ok(search.dist(t))
}

/// A geodesic from `u` to `v` with the deterministic tie-break.
pub fn extract_geodesic(field: &EdgeField, u: &Vertex, v: &Vertex) -> Result<GeodesicResult> {
    let (s, t) = (index(field, u)?, index(field, v)?);
    let restriction = Restriction::none();
    let search = Search::until(field, s, t, &restriction);
    let (indices, tie) = search
        .path_to(field, &restriction, t)
        .expect("the box graph is connected");
    Ok(materialize(field, &indices, search.dist(t), tie))
}

/// `t̄_M(u, v)`: passage time using only edges with weight at most `m`.
pub fn restricted_time(field: &EdgeField, m: f64, u: &Vertex, v: &Vertex) -> Result<PassageTime> {
    check_cap(m)?;
    let (s, t) = (index(field, u)?, index(field, v)?);
    let search = Search::until(field, s, t, &Restriction::capped(m));
    Ok(PassageTime::from_distance(search.dist(t)))
}

/// Optimal path for the restricted time, `None` when `t̄_M(u, v) = inf`.
pub fn restricted_geodesic(field: &EdgeField, m: f64, u: &Vertex, v: &Vertex) -> Result<Option<GeodesicResult>> {
    check_cap(m)?;
    let (s, t) = (index(field, u)?, index(field, v)?);
    let restriction = Restriction::capped(m);
    let search = Search::until(field, s, t, &restriction);
    Ok(search
        .path_to(field, &restriction, t)
        .map(|(indices, tie)| materialize(field, &indices, search.dist(t), tie)))
}

/// One-to-all shortest passage times with the predecessor structure.
#[derive(Clone, Debug)]
pub struct ShortestPathTree<'a> {
    field: &'a EdgeField,
    source: Vertex,
    restriction: Restriction,
    search: Search,
}

impl<'a> ShortestPathTree<'a> {
    pub fn new(field: &'a EdgeField, source: &Vertex) -> Result<Self> {
        Self::build(field, source, Restriction::none())
    }

    /// Tree over the subgraph of edges with weight at most `m`.
    pub fn restricted(field: &'a EdgeField, source: &Vertex, m: f64) -> Result<Self> {
        check_cap(m)?;
        Self::build(field, source, Restriction::capped(m))
    }

    fn build(field: &'a EdgeField, source: &Vertex, restriction: Restriction) -> Result<Self> {
        let s = index(field, source)?;
        let search = Search::full(field, s, &restriction);
        Ok(ShortestPathTree {
            field,
            source: *source,
            restriction,
            search,
        })
    }

    pub fn source(&self) -> Vertex {
        self.source
    }

    pub fn time_to(&self, v: &Vertex) -> Result<PassageTime> {
        Ok(PassageTime::from_distance(self.search.dist(index(self.field, v)?)))
    }

    /// Finite time to `v` or `INFINITY`; for tight loops.
    pub fn time_to_index(&self, v: usize) -> f64 {
        self.search.dist(v)
    }

    /// Tree predecessor of `v`, i.e. the next vertex from `v` towards the source.
    pub fn predecessor(&self, v: &Vertex) -> Result<Option<Vertex>> {
        let i = index(self.field, v)?;
        Ok(self
            .search
            .predecessor(self.field, &self.restriction, i)
            .0
            .map(|p| self.field.lattice_box().vertex(p)))
    }

    pub fn geodesic_to(&self, v: &Vertex) -> Result<Option<GeodesicResult>> {
        let t = index(self.field, v)?;
        Ok(self
            .search
            .path_to(self.field, &self.restriction, t)
            .map(|(indices, tie)| materialize(self.field, &indices, self.search.dist(t), tie)))
    }
}

/// A signed coordinate direction `±e_axis` (1-based axis).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Direction {
    pub axis: usize,
    pub positive: bool,
}

impl Direction {
    pub const PLUS_E1: Direction = Direction { axis: 1, positive: true };

    pub fn step(&self, v: &Vertex, n: i64) -> Vertex {
        v.offset(self.axis - 1, if self.positive { n } else { -n })
    }
}

/// Finite-horizon stand-in for a semi-infinite geodesic from `origin`: the
/// geodesic to `origin + length * direction`. Every prefix is itself the
/// deterministic geodesic to its endpoint.
pub fn finite_horizon_ray(field: &EdgeField, origin: &Vertex, direction: Direction, length: u64) -> Result<PathRecord> {
    if direction.axis == 0 || direction.axis > origin.dim() {
        return Err(Error::InvalidParameter(alloc::format!("axis {} out of range", direction.axis)));
    }
    let target = direction.step(origin, length as i64);
    Ok(extract_geodesic(field, origin, &target)?.path)
}

/// Default node budget of [`brute_force_time`].
pub const DEFAULT_BRUTE_FORCE_BUDGET: u64 = 50_000_000;

/// Exhaustive minimum over self-avoiding paths with at most `max_len`
/// edges. Test oracle for small boxes.
pub fn brute_force_time(field: &EdgeField, u: &Vertex, v: &Vertex, max_len: usize, budget: u64) -> Result<PassageTime> {
    let (s, t) = (index(field, u)?, index(field, v)?);
    let bx = field.lattice_box();
    let mut on_path = alloc::vec![false; bx.vertex_count()];
    let mut best = f64::INFINITY;
    let mut nodes = 0u64;

    struct Dfs<'a> {
        field: &'a EdgeField,
        target: usize,
        max_len: usize,
        budget: u64,
    }

    fn go(
        ctx: &Dfs<'_>,
        at: usize,
        depth: usize,
        time: f64,
        on_path: &mut [bool],
        best: &mut f64,
        nodes: &mut u64,
    ) -> Result<()> {
        *nodes += 1;
        if *nodes > ctx.budget {
            return Err(Error::BudgetExceeded(ctx.budget));
        }
        if at == ctx.target {
            if time < *best {
                *best = time;
            }
            return Ok(());
        }
        if depth == ctx.max_len {
            return Ok(());
        }
        on_path[at] = true;
        for (nb, slot) in ctx.field.lattice_box().neighbors(at) {
            if !on_path[nb] {
                go(ctx, nb, depth + 1, time + ctx.field.slot_weight(slot), on_path, best, nodes)?;
            }
        }
        on_path[at] = false;
        Ok(())
    }

    let ctx = Dfs {
        field,
        target: t,
        max_len,
        budget,
    };
    go(&ctx, s, 0, 0.0, &mut on_path, &mut best, &mut nodes)?;
    Ok(PassageTime::from_distance(best))
}

/// Times from `source` to every vertex of the box, indexed like the box.
pub fn all_times_from(field: &EdgeField, source: &Vertex, m: Option<f64>) -> Result<Vec<f64>> {
    let s = index(field, source)?;
    let restriction = match m {
        Some(m) => {
            check_cap(m)?;
            Restriction::capped(m)
        }
        None => Restriction::none(),
    };
    let search = Search::run(field, &[(s, 0.0)], &restriction, |_, _| Control::Continue);
    Ok((0..field.lattice_box().vertex_count()).map(|i| search.dist(i)).collect())
}

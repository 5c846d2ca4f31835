//! Block renormalization at scale `N`.
//!
//! The lattice is partitioned into `N`-cubes
//! `S_l = { x : N l^i <= x^i < N l^i + N }`. Each cube has an enlarged box
//! `T_l = { x : N l^i - N <= x^i <= N l^i + 2N }` and `2d` crossing boxes
//! `B^{±j}_l = T_l ∩ T_{l ± 2 e_j}`, which are `N` wide along axis `j` and
//! `3N` wide along every other axis.
//!
//! A cube is *black* (for parameters `M`, `r`, `delta`) when every path in
//! `T_l` that only uses edges of weight `<= M` and joins two vertices at ℓ1
//! distance `>= N/4` needs time at least `(r + delta)` per unit of distance.
//! The quantifier over paths reduces to restricted shortest times, which is
//! how [`is_black`] decides it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::EdgeField;
use crate::lattice::{LatticeBox, Vertex};
use crate::path::PathRecord;
use crate::search::{Control, Restriction, Search};

/// Cube label `l` at scale `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CubeIndex {
    pub l: Vertex,
    pub n: u64,
}

/// The cube `S_l(N)` containing `x`: `l^i = floor(x^i / N)`.
pub fn cube_of(x: &Vertex, n: u64) -> CubeIndex {
    assert!(n >= 1, "cube scale must be positive");
    let coords: Vec<i64> = x.coords().iter().map(|c| c.div_euclid(n as i64)).collect();
    CubeIndex {
        l: Vertex::new(&coords),
        n,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RegionKind {
    S,
    T,
    /// `B^{+j}` with 1-based axis `j`.
    BPlus(usize),
    /// `B^{-j}` with 1-based axis `j`.
    BMinus(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxRegion {
    pub kind: RegionKind,
    pub cube: CubeIndex,
}

impl BoxRegion {
    pub fn new(kind: RegionKind, cube: CubeIndex) -> Self {
        BoxRegion { kind, cube }
    }

    /// Closed vertex bounds `(lo, hi)`.
    pub fn bounds(&self) -> (Vertex, Vertex) {
        let n = self.cube.n as i64;
        let l = &self.cube.l;
        let d = l.dim();
        let mut lo = *l;
        let mut hi = *l;
        for i in 0..d {
            let base = n * l[i];
            let (a, b) = match self.kind {
                RegionKind::S => (base, base + n - 1),
                _ => (base - n, base + 2 * n),
            };
            lo = lo.with_coord(i, a);
            hi = hi.with_coord(i, b);
        }
        match self.kind {
            RegionKind::BPlus(j) => {
                let base = n * l[j - 1];
                lo = lo.with_coord(j - 1, base + n);
                hi = hi.with_coord(j - 1, base + 2 * n);
            }
            RegionKind::BMinus(j) => {
                let base = n * l[j - 1];
                lo = lo.with_coord(j - 1, base - n);
                hi = hi.with_coord(j - 1, base);
            }
            _ => {}
        }
        (lo, hi)
    }

    /// 0-based short axis of a crossing box.
    pub fn short_axis(&self) -> Option<usize> {
        match self.kind {
            RegionKind::BPlus(j) | RegionKind::BMinus(j) => Some(j - 1),
            _ => None,
        }
    }

    pub fn contains(&self, x: &Vertex) -> bool {
        let (lo, hi) = self.bounds();
        (0..x.dim()).all(|i| lo[i] <= x[i] && x[i] <= hi[i])
    }

    /// Strictly inside on every axis.
    pub fn interior_contains(&self, x: &Vertex) -> bool {
        let (lo, hi) = self.bounds();
        (0..x.dim()).all(|i| lo[i] < x[i] && x[i] < hi[i])
    }
}

/// Closed bounds of a region (see [`BoxRegion::bounds`]).
pub fn region_vertices(region: &BoxRegion) -> (Vertex, Vertex) {
    region.bounds()
}

/// `T_l ∩ T_l' = ∅`, i.e. some label coordinate differs by at least 4.
pub fn are_separated(l: &Vertex, other: &Vertex) -> bool {
    (0..l.dim()).any(|i| l[i].abs_diff(other[i]) >= 4)
}

/// Black-cube parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CubeParams {
    /// Scale `N`.
    pub n: u64,
    /// Light-edge bound `M`.
    pub m: f64,
    /// Minimum of the support of the passage-time law.
    pub r: f64,
    pub delta: f64,
}

impl CubeParams {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidDelta);
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("cube scale N must be positive".into()));
        }
        if self.m.is_nan() || self.m < 0.0 || self.r.is_nan() || self.r < 0.0 {
            return Err(Error::InvalidParameter("M and r must be non-negative".into()));
        }
        Ok(())
    }
}

/// Whether `S_l(N)` is black.
pub fn is_black(field: &EdgeField, cube: &CubeIndex, m: f64, r: f64, delta: f64) -> Result<bool> {
    let params = CubeParams { n: cube.n, m, r, delta };
    params.validate()?;
    let (lo, hi) = BoxRegion::new(RegionKind::T, *cube).bounds();
    let local = field.sub_field(&lo, &hi)?;
    Ok(is_black_local(&local, &params))
}

fn is_black_local(local: &EdgeField, params: &CubeParams) -> bool {
    let bx = local.lattice_box();
    let speed = params.r + params.delta;
    let n = params.n;

    // Every light path has at least ‖u-v‖ edges, so if no light edge is
    // faster than `speed` the cube is black outright.
    let min_light = local
        .iter()
        .map(|(_, w)| w)
        .filter(|w| *w <= params.m)
        .fold(f64::INFINITY, f64::min);
    if min_light >= speed {
        return true;
    }

    let restriction = Restriction::capped(params.m);
    for u in 0..bx.vertex_count() {
        let has_light = bx.neighbors(u).any(|(_, slot)| local.slot_weight(slot) <= params.m);
        if !has_light {
            continue;
        }
        let uv = bx.vertex(u);
        let farthest: u64 = (0..bx.dim())
            .map(|i| (uv[i] - bx.lo()[i]).max(bx.hi()[i] - uv[i]) as u64)
            .sum();
        let horizon = speed * farthest as f64;
        let mut violated = false;
        Search::run(local, &[(u, 0.0)], &restriction, |v, t| {
            if t >= horizon {
                return Control::Stop;
            }
            let dist = uv.l1(&bx.vertex(v));
            if 4 * dist >= n && t < speed * dist as f64 {
                violated = true;
                return Control::Stop;
            }
            Control::Continue
        });
        if violated {
            return false;
        }
    }
    true
}

/// A stretch `π[start..=end]` of a path crossing a `B` box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StretchRecord {
    /// Position of `u` in the parent path.
    pub start: usize,
    /// Position of `v` in the parent path.
    pub end: usize,
    pub u: Vertex,
    pub v: Vertex,
    pub region: BoxRegion,
    pub host: CubeIndex,
}

impl StretchRecord {
    pub fn vertices<'a>(&self, path: &'a PathRecord) -> &'a [Vertex] {
        &path.vertices()[self.start..=self.end]
    }
}

/// Which short face of `region` the vertex lies on (`-1` low, `+1` high),
/// requiring the other coordinates to be strictly inside.
fn short_face(region: &BoxRegion, x: &Vertex) -> Option<i8> {
    let j = region.short_axis()?;
    let (lo, hi) = region.bounds();
    let lateral_inside = (0..x.dim()).filter(|&i| i != j).all(|i| lo[i] < x[i] && x[i] < hi[i]);
    if !lateral_inside {
        return None;
    }
    if x[j] == lo[j] {
        Some(-1)
    } else if x[j] == hi[j] {
        Some(1)
    } else {
        None
    }
}

/// Crossings of the `B` box `region` by `path`: stretches whose endpoints
/// lie on opposite short faces and whose other vertices are strictly inside.
/// `u` is the last face vertex before the interior run and `v` the first
/// vertex reaching the opposite face.
pub fn find_crossings(path: &PathRecord, region: &BoxRegion) -> Vec<StretchRecord> {
    let mut out = Vec::new();
    if region.short_axis().is_none() {
        return out;
    }
    let vs = path.vertices();
    let mut i = 0;
    while i < vs.len() {
        let Some(side) = short_face(region, &vs[i]) else {
            i += 1;
            continue;
        };
        let mut k = i + 1;
        while k < vs.len() && region.interior_contains(&vs[k]) {
            k += 1;
        }
        if k == vs.len() {
            break;
        }
        if short_face(region, &vs[k]) == Some(-side) {
            out.push(StretchRecord {
                start: i,
                end: k,
                u: vs[i],
                v: vs[k],
                region: *region,
                host: region.cube,
            });
        }
        i = k;
    }
    out
}

/// What to do with cubes whose `T` box leaves the field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutOfBox {
    Error,
    /// Treat such cubes as not black.
    Skip,
}

/// Black-cube decisions for one field and parameter set, memoized per cube.
#[derive(Debug)]
pub struct BlackCubeOracle<'a> {
    field: &'a EdgeField,
    params: CubeParams,
    policy: OutOfBox,
    memo: BTreeMap<Vertex, Option<bool>>,
}

impl<'a> BlackCubeOracle<'a> {
    pub fn new(field: &'a EdgeField, params: CubeParams, policy: OutOfBox) -> Result<Self> {
        params.validate()?;
        Ok(BlackCubeOracle {
            field,
            params,
            policy,
            memo: BTreeMap::new(),
        })
    }

    pub fn params(&self) -> &CubeParams {
        &self.params
    }

    /// `None` when the `T` box leaves the field under [`OutOfBox::Skip`].
    fn status(&mut self, l: &Vertex) -> Result<Option<bool>> {
        if let Some(s) = self.memo.get(l) {
            return Ok(*s);
        }
        let cube = CubeIndex { l: *l, n: self.params.n };
        let (lo, hi) = BoxRegion::new(RegionKind::T, cube).bounds();
        let status = match self.field.sub_field(&lo, &hi) {
            Ok(local) => Some(is_black_local(&local, &self.params)),
            Err(Error::RegionOutOfBox) if self.policy == OutOfBox::Skip => None,
            Err(e) => return Err(e),
        };
        self.memo.insert(*l, status);
        Ok(status)
    }

    pub fn is_black(&mut self, l: &Vertex) -> Result<bool> {
        Ok(self.status(l)?.unwrap_or(false))
    }

    /// Crossings of `B` boxes whose host cube is black, in path order.
    ///
    /// `B^{+j}_l` and `B^{-j}_{l+2e_j}` are the same box; a crossing is
    /// reported once, attributed to the smallest black host.
    pub fn shortcutable_stretches(&mut self, path: &PathRecord) -> Result<Vec<StretchRecord>> {
        let n = self.params.n as i64;
        let d = path.first().dim();
        let mut candidates = BTreeSet::new();
        for x in path.vertices() {
            // Labels l with x in T_l, per axis: N l - N <= x <= N l + 2N.
            let ranges: Vec<(i64, i64)> = (0..d)
                .map(|i| (-((2 * n - x[i]).div_euclid(n)), (x[i] + n).div_euclid(n)))
                .collect();
            for_each_label(&ranges, |l| {
                candidates.insert(l);
            });
        }
        let mut found: BTreeMap<(usize, usize, Vertex, Vertex), StretchRecord> = BTreeMap::new();
        for l in candidates {
            let cube = CubeIndex { l, n: self.params.n };
            for j in 1..=d {
                for kind in [RegionKind::BPlus(j), RegionKind::BMinus(j)] {
                    let region = BoxRegion::new(kind, cube);
                    let crossings = find_crossings(path, &region);
                    if crossings.is_empty() || !self.is_black(&l)? {
                        continue;
                    }
                    let (lo, hi) = region.bounds();
                    for c in crossings {
                        found.entry((c.start, c.end, lo, hi)).or_insert(c);
                    }
                }
            }
        }
        let mut out: Vec<_> = found.into_values().collect();
        out.sort_by_key(|s| (s.start, s.end, s.region));
        Ok(out)
    }

    /// Greedy count of pairwise separated black cubes met by `path`, taken
    /// in order of first visit.
    pub fn count_black_cubes_visited(&mut self, path: &PathRecord) -> Result<usize> {
        let mut visited = Vec::new();
        let mut seen = BTreeSet::new();
        for x in path.vertices() {
            let l = cube_of(x, self.params.n).l;
            if seen.insert(l) {
                visited.push(l);
            }
        }
        let mut kept: Vec<Vertex> = Vec::new();
        for l in visited {
            if kept.iter().all(|k| are_separated(k, &l)) && self.is_black(&l)? {
                kept.push(l);
            }
        }
        Ok(kept.len())
    }
}

fn for_each_label(ranges: &[(i64, i64)], mut f: impl FnMut(Vertex)) {
    let d = ranges.len();
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return;
    }
    loop {
        f(Vertex::new(&cur));
        let mut i = d;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if cur[i] < ranges[i].1 {
                cur[i] += 1;
                for (k, c) in cur.iter_mut().enumerate().skip(i + 1) {
                    *c = ranges[k].0;
                }
                break;
            }
        }
    }
}

/// All crossings of black-cube `B` boxes by `path`. Errors with
/// [`Error::RegionOutOfBox`] if a relevant `T` box leaves the field.
pub fn shortcutable_stretches(field: &EdgeField, path: &PathRecord, params: CubeParams) -> Result<Vec<StretchRecord>> {
    BlackCubeOracle::new(field, params, OutOfBox::Error)?.shortcutable_stretches(path)
}

/// Separated black cubes visited by `path`, see
/// [`BlackCubeOracle::count_black_cubes_visited`].
pub fn count_black_cubes_visited(field: &EdgeField, path: &PathRecord, params: CubeParams) -> Result<usize> {
    BlackCubeOracle::new(field, params, OutOfBox::Error)?.count_black_cubes_visited(path)
}

/// ℓ1 distance between the vertex sets of two stretches.
fn stretch_distance(path: &PathRecord, a: &StretchRecord, b: &StretchRecord) -> u64 {
    let (va, vb) = (a.vertices(path), b.vertices(path));
    va.iter()
        .flat_map(|x| vb.iter().map(move |y| x.l1(y)))
        .min()
        .unwrap_or(u64::MAX)
}

/// Greedy selection in path order: keep a stretch when it starts at or
/// after the end of the last kept one and its distance to every kept
/// stretch is at least `spacing`.
pub fn select_disjoint_stretches(path: &PathRecord, stretches: &[StretchRecord], spacing: u64) -> Vec<StretchRecord> {
    let mut kept: Vec<StretchRecord> = Vec::new();
    for s in stretches {
        let after = kept.last().is_none_or(|k| s.start >= k.end);
        if after && kept.iter().all(|k| stretch_distance(path, k, s) >= spacing) {
            kept.push(*s);
        }
    }
    kept
}

/// Spacing used when selecting stretches one after another (`7N`).
pub fn selection_spacing(n: u64) -> u64 {
    7 * n
}

/// Spacing between counted stretches in the path property (`14N`).
pub fn property_spacing(n: u64) -> u64 {
    14 * n
}

/// Cubes at scale `n` whose `T` box fits inside `bx`, in label order.
pub fn cubes_with_enlarged_box_inside(bx: &LatticeBox, n: u64) -> Vec<CubeIndex> {
    let ni = n as i64;
    let ranges: Vec<(i64, i64)> = (0..bx.dim())
        .map(|i| {
            // Need N l - N >= lo and N l + 2N <= hi.
            let lo = -(-(bx.lo()[i] + ni)).div_euclid(ni);
            let hi = (bx.hi()[i] - 2 * ni).div_euclid(ni);
            (lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    for_each_label(&ranges, |l| out.push(CubeIndex { l, n }));
    out.retain(|c| {
        let (lo, hi) = BoxRegion::new(RegionKind::T, *c).bounds();
        bx.contains_region(&lo, &hi)
    });
    out
}

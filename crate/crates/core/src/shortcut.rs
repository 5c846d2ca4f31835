//! Local detours that replace part of a light path by a short path using
//! exactly one heavy edge.
//!
//! The construction works in the plane spanned by the crossing axis
//! ("along", horizontal in the pictures) and the lowest-index other axis
//! ("lateral", vertical). With `a` the low face of the crossed box and
//! `N = 4K`:
//!
//! 1. `z` is the stretch vertex with the lowest lateral coordinate among
//!    those whose along coordinate lies in `[a + K, a + 3K]` (smallest along
//!    coordinate on ties);
//! 2. step once downwards to `z' = z - e_lat`;
//! 3. move along the crossing axis for at most `K` steps, towards the far
//!    half (positive if `z` is in the low half, negative otherwise), stopping
//!    at the first vertex of the path;
//! 4. if no path vertex was met, move upwards until one is.
//!
//! The vertex where the detour stops is `w`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exact::{exact_sum, Dyadic};
use crate::field::EdgeField;
use crate::lattice::{EdgeId, Vertex};
use crate::path::{path_time, PathRecord};
use crate::renorm::StretchRecord;

/// Where `w` sits on the parent path relative to the stretch `[u, v]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ShortcutCase {
    /// Inside the stretch.
    A,
    /// Before `u`.
    B,
    /// After `v`.
    C,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShortcutProposal {
    pub stretch: StretchRecord,
    pub k: u64,
    pub z: Vertex,
    pub z_prime: Vertex,
    pub w: Vertex,
    /// The detour from `z` to `w`.
    pub detour: PathRecord,
    /// The part of the parent path between `z` and `w`, in path order.
    pub substituted: PathRecord,
    /// Path positions of `z` and `w`.
    pub z_index: usize,
    pub w_index: usize,
    pub case: ShortcutCase,
    /// Detour edges in order from `z`; the first one is `{z, z'}`.
    pub detour_edges: Vec<EdgeId>,
    /// Edges with exactly one endpoint in the detour minus `{z, w}` and the
    /// other endpoint off the detour.
    pub perimeter_edges: Vec<EdgeId>,
    /// 0-based along and lateral axes.
    pub along: usize,
    pub lateral: usize,
}

/// Left side of the success inequality scaled by `48d`, and the right side
/// likewise: `48d(2M + 1 + r) + 2 delta` versus `24 d K delta`.
fn success_sides(m: f64, r: f64, delta: f64, d: usize, k: u64) -> (Dyadic, Dyadic) {
    let d = d as i64;
    let two_m = Dyadic::from_f64(m).mul_int(2);
    let lhs = two_m
        .add(&Dyadic::from_int(1))
        .add(&Dyadic::from_f64(r))
        .mul_int(48 * d)
        .add(&Dyadic::from_f64(delta).mul_int(2));
    let rhs = Dyadic::from_f64(delta).mul_int(24 * d).mul(&Dyadic::from_int(k as i64));
    (lhs, rhs)
}

/// Whether `2M + 1 + r + delta/(24d) + K delta/2 < K delta`, decided exactly.
pub fn success_condition_holds(m: f64, r: f64, delta: f64, d: usize, k: u64) -> bool {
    let (lhs, rhs) = success_sides(m, r, delta, d, k);
    lhs < rhs
}

/// Smallest `K` for which [`success_condition_holds`].
pub fn min_k(m: f64, r: f64, delta: f64, d: usize) -> Result<u64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta);
    }
    if !(m > 0.0 && m.is_finite()) || !(r >= 0.0 && r.is_finite()) || d == 0 {
        return Err(Error::InvalidParameter(format!("need M > 0, r >= 0, d >= 1; got M={m}, r={r}, d={d}")));
    }
    let need = 2.0 * (2.0 * m + 1.0 + r + delta / (24.0 * d as f64)) / delta;
    if !(need < 1e15) {
        return Err(Error::InvalidParameter(format!("K would exceed 1e15 (threshold {need})")));
    }
    let mut k = (libm::floor(need) as u64 + 1).max(1);
    while !success_condition_holds(m, r, delta, d, k) {
        k += 1;
    }
    while k > 1 && success_condition_holds(m, r, delta, d, k - 1) {
        k -= 1;
    }
    Ok(k)
}

fn blocked(what: &str) -> Error {
    Error::ConstructionBlocked(what.into())
}

/// Builds the detour for `stretch` of `path` at scale `K = N/4`.
pub fn build_shortcut(field: &EdgeField, path: &PathRecord, stretch: &StretchRecord, k: u64) -> Result<ShortcutProposal> {
    let d = path.first().dim();
    if d < 2 {
        return Err(Error::InvalidParameter("detours need dimension at least 2".into()));
    }
    let along = stretch
        .region
        .short_axis()
        .ok_or_else(|| Error::InvalidParameter("stretch is not a crossing of a B box".into()))?;
    if stretch.region.cube.n != 4 * k {
        return Err(Error::InvalidParameter(format!(
            "K = {k} does not match the box scale N = {}",
            stretch.region.cube.n
        )));
    }
    let lateral = if along == 0 { 1 } else { 0 };
    let vs = path.vertices();
    if stretch.end >= vs.len() || vs[stretch.start] != stretch.u || vs[stretch.end] != stretch.v {
        return Err(Error::InvalidParameter("stretch does not belong to this path".into()));
    }
    let (lo, hi) = stretch.region.bounds();
    let a = lo[along];
    let ki = k as i64;

    let z_index = (stretch.start..=stretch.end)
        .filter(|&i| (a + ki..=a + 3 * ki).contains(&vs[i][along]))
        .min_by_key(|&i| (vs[i][lateral], vs[i][along]))
        .ok_or_else(|| blocked("stretch never enters the middle columns"))?;
    let z = vs[z_index];

    let on_path: BTreeSet<Vertex> = vs.iter().copied().collect();
    let in_b = |x: &Vertex| (0..d).all(|i| lo[i] <= x[i] && x[i] <= hi[i]);
    let step = if z[along] <= a + 2 * ki { 1 } else { -1 };

    let mut detour = Vec::new();
    detour.push(z);
    let z_prime = z.offset(lateral, -1);
    let mut cur = z_prime;
    let mut steps = 0;
    loop {
        if !in_b(&cur) || !field.lattice_box().contains(&cur) {
            return Err(blocked("detour leaves the crossing box"));
        }
        detour.push(cur);
        if on_path.contains(&cur) {
            break;
        }
        if steps < k {
            cur = cur.offset(along, step);
            steps += 1;
        } else {
            cur = cur.offset(lateral, 1);
        }
    }
    let w = cur;
    let w_index = path.position(&w).expect("w lies on the path");
    let case = if w_index < stretch.start {
        ShortcutCase::B
    } else if w_index > stretch.end {
        ShortcutCase::C
    } else {
        ShortcutCase::A
    };

    let detour_edges: Vec<EdgeId> = detour
        .windows(2)
        .map(|p| EdgeId::between(&p[0], &p[1]).expect("unit steps"))
        .collect();
    let detour_set: BTreeSet<Vertex> = detour.iter().copied().collect();
    let mut perimeter = BTreeSet::new();
    for x in &detour[1..detour.len() - 1] {
        for axis in 0..d {
            for s in [-1, 1] {
                let y = x.offset(axis, s);
                if detour_set.contains(&y) {
                    continue;
                }
                if !field.lattice_box().contains(&y) {
                    return Err(blocked("perimeter of the detour leaves the field"));
                }
                perimeter.insert(EdgeId::between(x, &y).expect("unit step"));
            }
        }
    }

    let (from, to) = (z_index.min(w_index), z_index.max(w_index));
    let substituted = path.segment(from, to, field)?;
    let detour = PathRecord::new(detour, field)?;
    Ok(ShortcutProposal {
        stretch: *stretch,
        k,
        z,
        z_prime,
        w,
        detour,
        substituted,
        z_index,
        w_index,
        case,
        detour_edges,
        perimeter_edges: perimeter.into_iter().collect(),
        along,
        lateral,
    })
}

/// Checks the structural guarantees of a proposal against its parent path.
pub fn check_invariants(path: &PathRecord, p: &ShortcutProposal) -> Result<()> {
    let fail = |what: &str| Err(Error::InvariantViolated(what.into()));
    let d = path.first().dim() as u64;
    let path_edges: BTreeSet<EdgeId> = path.edges().collect();
    if p.detour.edges().any(|e| path_edges.contains(&e)) {
        return fail("detour shares an edge with the path");
    }
    if p.detour.first() != p.z || p.detour.last() != p.w {
        return fail("detour does not run from z to w");
    }
    let vs = path.vertices();
    if vs.get(p.z_index) != Some(&p.z) || vs.get(p.w_index) != Some(&p.w) {
        return fail("detour endpoints are not on the path");
    }
    let zw = p.z.l1(&p.w);
    if p.detour.len() as u64 > zw + 2 {
        return fail("detour longer than |z - w| + 2");
    }
    if zw > 12 * p.k * d {
        return fail("|z - w| exceeds 12 K d");
    }
    if !p.detour.vertices().iter().all(|x| p.stretch.region.contains(x)) {
        return fail("detour leaves the crossing box");
    }
    if p.case == ShortcutCase::A && zw < p.k {
        return fail("case a with |z - w| < K");
    }
    let detour_set: BTreeSet<Vertex> = p.detour.vertices().iter().copied().collect();
    let interior = &p.detour.vertices()[1..p.detour.vertices().len() - 1];
    for e in &p.perimeter_edges {
        let (x, y) = e.endpoints();
        let inner = interior.contains(&x) as u8 + interior.contains(&y) as u8;
        let outside = !detour_set.contains(&x) as u8 + !detour_set.contains(&y) as u8;
        if inner != 1 || outside != 1 {
            return fail("perimeter edge without exactly one interior endpoint");
        }
    }
    Ok(())
}

/// `M + t(detour) < t(substituted)`, with both sums evaluated exactly.
pub fn shortcut_is_successful(field: &EdgeField, p: &ShortcutProposal, m: f64) -> Result<bool> {
    let weights = |path: &PathRecord| -> Result<Vec<f64>> {
        path.edges()
            .map(|e| field.weight(&e).ok_or(Error::EdgeOutOfBox))
            .collect()
    };
    let lhs = Dyadic::from_f64(m).add(&exact_sum(weights(&p.detour)?));
    let rhs = exact_sum(weights(&p.substituted)?);
    Ok(lhs < rhs)
}

/// The first detour edge has weight in `(M, M+1]`, the others are below
/// `r + delta/(24d)`, and every perimeter edge is heavier than `M`.
pub fn event_f_holds(field: &EdgeField, p: &ShortcutProposal, m: f64, r: f64, delta: f64, d: usize) -> Result<bool> {
    let w = |e: &EdgeId| field.weight(e).ok_or(Error::EdgeOutOfBox);
    let Some((first, rest)) = p.detour_edges.split_first() else {
        return Ok(false);
    };
    let t1 = w(first)?;
    if !(t1 > m && t1 <= m + 1.0) {
        return Ok(false);
    }
    let cap = r + delta / (24.0 * d as f64);
    for e in rest {
        if !(w(e)? < cap) {
            return Ok(false);
        }
    }
    for e in &p.perimeter_edges {
        if !(w(e)? > m) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The parent path with the substituted part replaced by the detour.
pub fn apply_shortcut(field: &EdgeField, path: &PathRecord, p: &ShortcutProposal) -> Result<PathRecord> {
    let vs = path.vertices();
    let (from, to) = (p.z_index.min(p.w_index), p.z_index.max(p.w_index));
    let mut detour: Vec<Vertex> = p.detour.vertices().to_vec();
    if p.z_index > p.w_index {
        detour.reverse();
    }
    let mut out = Vec::with_capacity(vs.len());
    out.extend_from_slice(&vs[..from]);
    out.extend(detour);
    out.extend_from_slice(&vs[to + 1..]);
    let new_path = PathRecord::new(out, field)?;

    // The replaced section still crosses a distance of at least K inside
    // the stretch.
    let lo = from.max(p.stretch.start);
    let hi = to.min(p.stretch.end);
    if lo > hi || vs[lo].l1(&vs[hi]) < p.k {
        return Err(Error::InvariantViolated(
            "substituted part does not span distance K inside the stretch".into(),
        ));
    }
    Ok(new_path)
}

/// `t(new) = t(old) - t(substituted) + t(detour)`, up to rounding.
pub fn spliced_time(field: &EdgeField, path: &PathRecord, p: &ShortcutProposal) -> Result<f64> {
    Ok(path_time(field, path)? - path_time(field, &p.substituted)? + path_time(field, &p.detour)?)
}

//! Dijkstra over an edge field with optional weight cap and region
//! restriction, plus the deterministic predecessor rule.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::field::EdgeField;
use crate::lattice::Vertex;

/// Which edges a search may use.
#[derive(Clone, Debug)]
pub(crate) struct Restriction {
    /// Edges with weight above this are excluded.
    pub max_weight: f64,
    /// Closed vertex bounds both endpoints must lie in.
    pub region: Option<(Vertex, Vertex)>,
}

impl Restriction {
    pub fn none() -> Self {
        Restriction {
            max_weight: f64::INFINITY,
            region: None,
        }
    }

    pub fn capped(m: f64) -> Self {
        Restriction {
            max_weight: m,
            region: None,
        }
    }

    fn in_region(&self, field: &EdgeField, index: usize) -> bool {
        match &self.region {
            None => true,
            Some((lo, hi)) => {
                let bx = field.lattice_box();
                (0..bx.dim()).all(|i| {
                    let c = bx.coord(index, i);
                    lo[i] <= c && c <= hi[i]
                })
            }
        }
    }

    #[inline]
    fn admits(&self, field: &EdgeField, slot: usize, to: usize) -> Option<f64> {
        let w = field.slot_weight(slot);
        if w <= self.max_weight && self.in_region(field, to) {
            Some(w)
        } else {
            None
        }
    }
}

pub(crate) enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, u32);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const UNSETTLED: u32 = u32::MAX;

/// Result of a (possibly truncated) Dijkstra run.
///
/// Vertices are settled in `(distance, index)` order, which makes the run
/// and everything derived from it deterministic.
#[derive(Clone, Debug)]
pub(crate) struct Search {
    dist: Vec<f64>,
    rank: Vec<u32>,
}

impl Search {
    /// Runs Dijkstra from `sources` (vertex index, initial offset). `visit`
    /// sees each vertex as it is settled and may stop the search.
    pub fn run(
        field: &EdgeField,
        sources: &[(usize, f64)],
        restriction: &Restriction,
        mut visit: impl FnMut(usize, f64) -> Control,
    ) -> Search {
        let bx = field.lattice_box();
        let n = bx.vertex_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut rank = vec![UNSETTLED; n];
        let mut heap = BinaryHeap::new();
        for &(s, offset) in sources {
            if restriction.in_region(field, s) && offset < dist[s] {
                dist[s] = offset;
                heap.push(Reverse(Key(offset, s as u32)));
            }
        }
        let mut next_rank = 0u32;
        while let Some(Reverse(Key(d, v))) = heap.pop() {
            let v = v as usize;
            if rank[v] != UNSETTLED || d > dist[v] {
                continue;
            }
            rank[v] = next_rank;
            next_rank += 1;
            if let Control::Stop = visit(v, d) {
                break;
            }
            for (u, slot) in bx.neighbors(v) {
                if rank[u] != UNSETTLED {
                    continue;
                }
                if let Some(w) = restriction.admits(field, slot, u) {
                    let nd = d + w;
                    if nd < dist[u] {
                        dist[u] = nd;
                        heap.push(Reverse(Key(nd, u as u32)));
                    }
                }
            }
        }
        Search { dist, rank }
    }

    pub fn full(field: &EdgeField, source: usize, restriction: &Restriction) -> Search {
        Self::run(field, &[(source, 0.0)], restriction, |_, _| Control::Continue)
    }

    pub fn until(field: &EdgeField, source: usize, target: usize, restriction: &Restriction) -> Search {
        Self::run(field, &[(source, 0.0)], restriction, |v, _| {
            if v == target {
                Control::Stop
            } else {
                Control::Continue
            }
        })
    }

    pub fn settled(&self, v: usize) -> bool {
        self.rank[v] != UNSETTLED
    }

    /// Final distance of a settled vertex, `INFINITY` otherwise.
    pub fn dist(&self, v: usize) -> f64 {
        if self.settled(v) {
            self.dist[v]
        } else {
            f64::INFINITY
        }
    }

    /// Lexicographically smallest tight neighbour settled before `v`,
    /// together with the number of such neighbours.
    pub fn predecessor(&self, field: &EdgeField, restriction: &Restriction, v: usize) -> (Option<usize>, usize) {
        if !self.settled(v) {
            return (None, 0);
        }
        let mut best = None;
        let mut count = 0;
        for (u, slot) in field.lattice_box().neighbors(v) {
            if !self.settled(u) || self.rank[u] >= self.rank[v] {
                continue;
            }
            if let Some(w) = restriction.admits(field, slot, v) {
                if self.dist[u] + w == self.dist[v] {
                    count += 1;
                    if best.is_none_or(|b| u < b) {
                        best = Some(u);
                    }
                }
            }
        }
        (best, count)
    }

    /// Vertex indices from the source to `target`, and whether any tie was
    /// broken along the way. `None` if `target` was not reached.
    pub fn path_to(&self, field: &EdgeField, restriction: &Restriction, target: usize) -> Option<(Vec<usize>, bool)> {
        if !self.settled(target) {
            return None;
        }
        let mut out = vec![target];
        let mut tie = false;
        let mut v = target;
        loop {
            let (p, count) = self.predecessor(field, restriction, v);
            tie |= count > 1;
            match p {
                Some(u) => {
                    out.push(u);
                    v = u;
                }
                None => break,
            }
        }
        out.reverse();
        Some((out, tie))
    }
}

//! Finite boxes of `Z^d` and canonical nearest-neighbour edge identities.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Index;

use crate::error::{Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 4;

/// A point of `Z^d`, `1 <= d <= MAX_DIM`.
///
/// Ordering is lexicographic in the coordinates, which is the order used
/// for every deterministic tie-break in the crate.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    coords: [i64; MAX_DIM],
    dim: u8,
}

impl Vertex {
    /// Panics if `coords` is empty or longer than [`MAX_DIM`].
    pub fn new(coords: &[i64]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "vertex dimension must be in 1..={MAX_DIM}"
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Vertex {
            coords: c,
            dim: coords.len() as u8,
        }
    }

    pub fn origin(dim: usize) -> Self {
        Vertex::new(&[0; MAX_DIM][..dim])
    }

    /// `n * e_axis` with a 1-based axis.
    pub fn on_axis(dim: usize, axis: usize, n: i64) -> Self {
        let mut v = Vertex::origin(dim);
        v.coords[axis - 1] = n;
        v
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim()]
    }

    /// Copy with coordinate `axis0` (0-based) moved by `delta`.
    pub fn offset(&self, axis0: usize, delta: i64) -> Self {
        let mut v = *self;
        v.coords[axis0] += delta;
        v
    }

    pub fn with_coord(&self, axis0: usize, value: i64) -> Self {
        let mut v = *self;
        v.coords[axis0] = value;
        v
    }

    pub fn add(&self, other: &Vertex) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut v = *self;
        for i in 0..self.dim() {
            v.coords[i] += other.coords[i];
        }
        v
    }

    /// ℓ1 distance.
    pub fn l1(&self, other: &Vertex) -> u64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| a.abs_diff(*b))
            .sum()
    }

    pub fn norm(&self) -> u64 {
        self.coords().iter().map(|a| a.unsigned_abs()).sum()
    }
}

impl Index<usize> for Vertex {
    type Output = i64;

    /// 0-based coordinate access.
    fn index(&self, axis0: usize) -> &i64 {
        &self.coords()[axis0]
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

// Serialized as a plain coordinate list.
#[cfg(feature = "serde")]
impl serde::Serialize for Vertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.coords())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Vertex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let coords = Vec::<i64>::deserialize(d)?;
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(serde::de::Error::custom("vertex dimension out of range"));
        }
        Ok(Vertex::new(&coords))
    }
}

/// Edge `<base, base + e_axis>`; `base` is the lexicographically smaller
/// endpoint and `axis` is 1-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeId {
    pub base: Vertex,
    pub axis: usize,
}

impl EdgeId {
    /// Canonical identity of the edge between two nearest neighbours,
    /// without reference to any box.
    pub fn between(u: &Vertex, v: &Vertex) -> Result<Self> {
        if u.dim() != v.dim() || u.l1(v) != 1 {
            return Err(Error::NotAdjacent);
        }
        let base = if u < v { *u } else { *v };
        let other = if u < v { v } else { u };
        let axis0 = (0..u.dim())
            .find(|&i| base[i] != other[i])
            .expect("adjacent vertices differ in one coordinate");
        Ok(EdgeId {
            base,
            axis: axis0 + 1,
        })
    }

    pub fn head(&self) -> Vertex {
        self.base.offset(self.axis - 1, 1)
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.base, self.head())
    }
}

/// Canonical edge identity for two adjacent vertices of `bx`.
pub fn edge_id(bx: &LatticeBox, u: &Vertex, v: &Vertex) -> Result<EdgeId> {
    if !bx.contains(u) || !bx.contains(v) {
        return Err(Error::OutOfBox);
    }
    EdgeId::between(u, v)
}

/// All integer points `x` with `lo^i <= x^i <= hi^i`.
///
/// Vertices are numbered row-major with axis 1 most significant, so
/// numeric index order coincides with lexicographic vertex order. Edge
/// slots are `index * d + axis0`; slots whose head leaves the box are
/// unused.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LatticeBox {
    lo: Vertex,
    hi: Vertex,
    strides: [usize; MAX_DIM],
    count: usize,
}

impl LatticeBox {
    pub fn new(lo: &[i64], hi: &[i64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::InvalidBox(format!(
                "corner dimensions {} and {} must agree and lie in 1..={MAX_DIM}",
                lo.len(),
                hi.len()
            )));
        }
        if let Some(i) = (0..lo.len()).find(|&i| hi[i] < lo[i]) {
            return Err(Error::InvalidBox(format!(
                "hi < lo on axis {}",
                i + 1
            )));
        }
        Self::from_corners(Vertex::new(lo), Vertex::new(hi))
    }

    pub fn from_corners(lo: Vertex, hi: Vertex) -> Result<Self> {
        if lo.dim() != hi.dim() || (0..lo.dim()).any(|i| hi[i] < lo[i]) {
            return Err(Error::InvalidBox(format!("corners {lo} and {hi}")));
        }
        let d = lo.dim();
        let mut strides = [0usize; MAX_DIM];
        let mut count = 1usize;
        for i in (0..d).rev() {
            strides[i] = count;
            let extent = usize::try_from(hi[i] - lo[i] + 1)
                .map_err(|_| Error::InvalidBox(format!("axis {} too large", i + 1)))?;
            count = count
                .checked_mul(extent)
                .ok_or_else(|| Error::InvalidBox(format!("{lo}..{hi} has too many vertices")))?;
        }
        Ok(LatticeBox {
            lo,
            hi,
            strides,
            count,
        })
    }

    /// `[-half, half]^d`.
    pub fn centered(dim: usize, half: i64) -> Result<Self> {
        let lo = [-half; MAX_DIM];
        let hi = [half; MAX_DIM];
        Self::new(&lo[..dim.min(MAX_DIM)], &hi[..dim.min(MAX_DIM)])
    }

    /// `[0, side - 1]^d`, i.e. `side` vertices per axis.
    pub fn with_side(dim: usize, side: i64) -> Result<Self> {
        let lo = [0; MAX_DIM];
        let hi = [side - 1; MAX_DIM];
        Self::new(&lo[..dim.min(MAX_DIM)], &hi[..dim.min(MAX_DIM)])
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &Vertex {
        &self.lo
    }

    pub fn hi(&self) -> &Vertex {
        &self.hi
    }

    pub fn extent(&self, axis0: usize) -> usize {
        (self.hi[axis0] - self.lo[axis0] + 1) as usize
    }

    pub fn vertex_count(&self) -> usize {
        self.count
    }

    pub fn edge_slot_count(&self) -> usize {
        self.count * self.dim()
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.dim() == self.dim() && (0..self.dim()).all(|i| self.lo[i] <= v[i] && v[i] <= self.hi[i])
    }

    /// Whether the closed box `[lo, hi]` lies inside this box.
    pub fn contains_region(&self, lo: &Vertex, hi: &Vertex) -> bool {
        self.contains(lo) && self.contains(hi)
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        if !self.contains(v) {
            return None;
        }
        Some(
            (0..self.dim())
                .map(|i| (v[i] - self.lo[i]) as usize * self.strides[i])
                .sum(),
        )
    }

    pub fn vertex(&self, index: usize) -> Vertex {
        debug_assert!(index < self.count);
        let mut v = self.lo;
        for i in 0..self.dim() {
            v.coords[i] += ((index / self.strides[i]) % self.extent(i)) as i64;
        }
        v
    }

    pub fn coord(&self, index: usize, axis0: usize) -> i64 {
        self.lo[axis0] + ((index / self.strides[axis0]) % self.extent(axis0)) as i64
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.count).map(move |i| self.vertex(i))
    }

    pub fn edge_slot(&self, e: &EdgeId) -> Option<usize> {
        if e.axis == 0 || e.axis > self.dim() {
            return None;
        }
        let base = self.index_of(&e.base)?;
        if e.base[e.axis - 1] >= self.hi[e.axis - 1] {
            return None;
        }
        Some(base * self.dim() + e.axis - 1)
    }

    pub fn edge_at_slot(&self, slot: usize) -> Option<EdgeId> {
        let index = slot / self.dim();
        let axis0 = slot % self.dim();
        if index >= self.count || self.coord(index, axis0) >= self.hi[axis0] {
            return None;
        }
        Some(EdgeId {
            base: self.vertex(index),
            axis: axis0 + 1,
        })
    }

    pub fn edge_count(&self) -> usize {
        (0..self.dim())
            .map(|a| {
                (0..self.dim())
                    .map(|i| if i == a { self.extent(i) - 1 } else { self.extent(i) })
                    .product::<usize>()
            })
            .sum()
    }

    /// All edges with both endpoints in the box, in slot order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edge_slot_count()).filter_map(move |s| self.edge_at_slot(s))
    }

    /// Neighbours of vertex `index` inside the box as `(neighbour, edge slot)`.
    pub fn neighbors(&self, index: usize) -> Neighbors<'_> {
        Neighbors {
            bx: self,
            index,
            dir: 0,
        }
    }

    /// Number of in-box edges incident to `v`.
    pub fn degree(&self, v: &Vertex) -> usize {
        self.index_of(v).map_or(0, |i| self.neighbors(i).count())
    }

    pub fn edges_of(&self, v: &Vertex) -> Vec<EdgeId> {
        let Some(i) = self.index_of(v) else {
            return Vec::new();
        };
        self.neighbors(i)
            .filter_map(|(_, slot)| self.edge_at_slot(slot))
            .collect()
    }
}

/// Iterator over in-box neighbours, see [`LatticeBox::neighbors`].
#[derive(Debug)]
pub struct Neighbors<'a> {
    bx: &'a LatticeBox,
    index: usize,
    dir: usize,
}

impl Iterator for Neighbors<'_> {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        let d = self.bx.dim();
        while self.dir < 2 * d {
            let axis0 = self.dir / 2;
            let up = self.dir % 2 == 1;
            self.dir += 1;
            let c = self.bx.coord(self.index, axis0);
            let stride = self.bx.strides[axis0];
            if up {
                if c < self.bx.hi[axis0] {
                    return Some((self.index + stride, self.index * d + axis0));
                }
            } else if c > self.bx.lo[axis0] {
                let nb = self.index - stride;
                return Some((nb, nb * d + axis0));
            }
        }
        None
    }
}

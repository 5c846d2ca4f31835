//! First passage percolation on finite boxes of `Z^d`.
//!
//! Edge passage times are i.i.d. draws from a [`DistributionSpec`], sampled
//! reproducibly per edge from a master seed. On top of the sampled
//! [`EdgeField`] the crate provides:
//!
//! * exact passage times and geodesics with deterministic tie-breaking
//!   ([`geodesic`]), including times restricted to edges of weight at most `M`;
//! * the `N`-cube renormalization geometry, the black-cube predicate and
//!   crossing/shortcutable stretch detection ([`renorm`]);
//! * the explicit detour construction that improves a light path by using
//!   one heavy edge ([`shortcut`]);
//! * the pursuit-evasion game with escape plans, a per-vertex escape
//!   certificate and an event-driven pursuit simulator ([`game`]);
//! * seeded Monte Carlo kernels and aggregation for the associated
//!   probability estimates ([`experiment`]).
//!
//! The crate is `no_std` and only needs `alloc`. Parallel execution, file
//! formats and the command-line interface live in the `fpp-lab` crate.

#![no_std]
#![deny(rust_2018_idioms, unused_must_use)]
#![warn(missing_debug_implementations)]
// NaN-aware comparisons are written as negations on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod distribution;
pub mod error;
pub mod experiment;
pub mod field;
pub mod game;
pub mod geodesic;
pub mod lattice;
pub mod path;
pub mod renorm;
pub mod rng;
pub mod shortcut;
pub mod time;
pub mod useful;

mod exact;
mod search;

pub use distribution::DistributionSpec;
pub use error::{Error, Result};
pub use field::{sample_edge_field, EdgeField};
pub use lattice::{edge_id, EdgeId, LatticeBox, Vertex, MAX_DIM};
pub use path::PathRecord;
pub use time::PassageTime;
pub use useful::{check_useful, PcTable, UsefulnessReport};

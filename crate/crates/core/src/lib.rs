//! Planning core for chains of SQL window functions.
//!
//! A window function `(WPK, WOK)` partitions rows by a set of attributes and
//! orders each partition by a sequence of attributes. Evaluating several of
//! them over one table means threading the table through a chain of tuple
//! reordering operations. This crate holds everything about that chain that
//! does not touch data:
//!
//! * [`attr`]: attribute identifiers, sets and sequences with the prefix
//!   algebra the rest of the crate is written in.
//! * [`order`]: segmented-relation properties ([`SegProp`]), matching and
//!   the reorderability predicates of the three reordering operators.
//! * [`cover`]: cover sets, prefixable groups and key derivation.
//! * [`cost`]: block-I/O cost estimates for full sort, hashed sort and
//!   segmented sort.
//! * [`optimizer`]: the cover-set based planner plus the brute-force, ordering
//!   group and declaration-order baselines.
//! * [`window`]: the per-row state machine that computes rank-style and
//!   aggregate window values over a matching stream.
//!
//! The crate is `no_std` and only needs `alloc`; the operators that move rows
//! and spill to disk live in the `winchain` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod attr;
pub mod cost;
pub mod cover;
mod error;
pub mod optimizer;
pub mod order;
pub mod plan;
pub mod value;
pub mod window;

pub use attr::{AttrId, AttrSeq, AttrSet, PERMUTATION_BOUND};
pub use cost::{CostEstimate, RelStats};
pub use error::{Error, Result};
pub use order::{FuncKind, SegProp, SsTarget, WindowFunc, Workload};
pub use plan::{Plan, PlanStep, ReorderStep};
pub use value::{Row, Value};

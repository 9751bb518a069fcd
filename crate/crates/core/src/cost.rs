//! Block-I/O cost estimates for the three reordering operators.
//!
//! The estimates count block transfers only and are meant for comparing
//! alternatives, not for predicting absolute I/O. A bucket or unit that fits
//! in memory is sorted in place and costs nothing; a larger one is charged
//! as an external sort of its own.

use alloc::collections::BTreeMap;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::attr::{AttrId, AttrSeq, AttrSet};

/// Statistics of the relation being reordered and of the memory granted to
/// one operator.
#[derive(Clone, Debug, PartialEq)]
pub struct RelStats {
    /// `B(R)`, table size in blocks.
    pub blocks: f64,
    /// `T(R)`, number of rows.
    pub rows: f64,
    /// `M`, memory in blocks.
    pub mem_blocks: f64,
    /// `F`, merge fan-in.
    pub merge_order: f64,
    /// Distinct-value counts. Single attributes are looked up directly;
    /// compound sets fall back to the capped product of their members.
    pub distinct: BTreeMap<AttrSet, f64>,
}

impl RelStats {
    /// Stats with merge order `M - 1` and no distinct counts.
    pub fn new(blocks: f64, rows: f64, mem_blocks: f64) -> Self {
        RelStats {
            blocks: blocks.max(1.0),
            rows: rows.max(1.0),
            mem_blocks,
            merge_order: (mem_blocks - 1.0).max(2.0),
            distinct: BTreeMap::new(),
        }
    }

    pub fn with_distinct(mut self, attr: &str, count: f64) -> Self {
        self.set_distinct(core::iter::once(AttrId::new(attr)).collect(), count);
        self
    }

    pub fn set_distinct(&mut self, attrs: AttrSet, count: f64) {
        self.distinct.insert(attrs, count.max(1.0));
    }

    /// The same relation under a different memory grant.
    pub fn with_mem(&self, mem_blocks: f64) -> Self {
        RelStats {
            mem_blocks,
            merge_order: (mem_blocks - 1.0).max(2.0),
            ..self.clone()
        }
    }

    /// `D(attrs)`: number of distinct value combinations. Unknown single
    /// attributes count as all-distinct.
    pub fn distinct_of(&self, attrs: &AttrSet) -> f64 {
        if attrs.is_empty() {
            return 1.0;
        }
        if let Some(&d) = self.distinct.get(attrs) {
            return d.min(self.rows);
        }
        let mut product = 1.0;
        for a in attrs {
            let single: AttrSet = core::iter::once(plain(a)).collect();
            product *= self.distinct.get(&single).copied().unwrap_or(self.rows);
            if product >= self.rows {
                return self.rows;
            }
        }
        product
    }

    pub fn distinct_of_seq(&self, attrs: &AttrSeq) -> f64 {
        self.distinct_of(&attrs.iter().map(plain).collect())
    }

    /// Number of segments of a stream segmented on `x`.
    pub fn segments(&self, x: &AttrSet, hint: Option<u64>) -> f64 {
        match hint {
            Some(k) => (k as f64).max(1.0),
            None => self.distinct_of(&x.iter().map(plain).collect()),
        }
    }
}

/// Statistics are keyed on the ascending form of each attribute.
fn plain(a: &AttrId) -> AttrId {
    if a.is_descending() {
        AttrId::new(a.name())
    } else {
        a.clone()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CostEstimate {
    pub io_blocks: f64,
}

impl CostEstimate {
    pub const ZERO: CostEstimate = CostEstimate { io_blocks: 0.0 };

    pub fn new(io_blocks: f64) -> Self {
        CostEstimate { io_blocks }
    }
}

impl core::ops::Add for CostEstimate {
    type Output = CostEstimate;

    fn add(self, rhs: Self) -> Self {
        CostEstimate::new(self.io_blocks + rhs.io_blocks)
    }
}

/// Smallest `p >= 0` with `base^p >= x`.
fn ceil_log(base: f64, x: f64) -> u32 {
    let mut p = 0;
    let mut reach = 1.0;
    while reach < x {
        reach *= base;
        p += 1;
    }
    p
}

fn floor(x: f64) -> f64 {
    let t = x as i64 as f64;
    if t > x {
        t - 1.0
    } else {
        t
    }
}

/// External merge sort of `blocks` blocks: runs of `2M`, then `F`-way merge
/// passes, every pass reading and writing the whole input.
pub fn sort_cost(blocks: f64, mem_blocks: f64, merge_order: f64) -> f64 {
    let passes = if blocks <= 2.0 * mem_blocks {
        0
    } else {
        ceil_log(merge_order, blocks / (2.0 * mem_blocks))
    };
    2.0 * blocks * (passes as f64 + 1.0)
}

/// Full sort of the whole relation.
pub fn cost_fs(stats: &RelStats) -> CostEstimate {
    CostEstimate::new(sort_cost(stats.blocks, stats.mem_blocks, stats.merge_order))
}

/// Cost of a piece of `blocks` blocks sorted on its own.
fn piece_cost(blocks: f64, stats: &RelStats) -> f64 {
    if blocks <= stats.mem_blocks {
        0.0
    } else {
        sort_cost(blocks, stats.mem_blocks, stats.merge_order)
    }
}

/// Hashed sort on `whk`: spill the buckets that do not fit, then sort each
/// bucket.
pub fn cost_hs(stats: &RelStats, whk: &AttrSet) -> CostEstimate {
    let n = stats.distinct_of(whk).max(1.0);
    let resident = floor(stats.mem_blocks * n / stats.blocks).min(n);
    let partition = 2.0 * stats.blocks * (1.0 - resident / n);
    let buckets = n * piece_cost(stats.blocks / n, stats);
    CostEstimate::new(partition + buckets)
}

/// Number of units per segment for a segmented sort with prefix `alpha` over
/// `k` segments on `x`.
pub fn units_per_segment(stats: &RelStats, alpha: &AttrSeq, x: &AttrSet, k: f64) -> f64 {
    if alpha.is_empty() {
        return 1.0;
    }
    let d = stats.distinct_of_seq(alpha);
    let alpha_attrs: AttrSet = alpha.iter().map(plain).collect();
    let x_attrs: AttrSet = x.iter().map(plain).collect();
    let u = if alpha_attrs.is_disjoint(&x_attrs) {
        (stats.rows / k).min(d)
    } else {
        (stats.rows / k).min(d / k)
    };
    u.max(1.0)
}

/// Segmented sort over `k` segments on `x`, reusing prefix `alpha`.
pub fn cost_ss(stats: &RelStats, alpha: &AttrSeq, x: &AttrSet, k: f64) -> CostEstimate {
    let k = k.max(1.0);
    let units = k * units_per_segment(stats, alpha, x, k);
    CostEstimate::new(units * piece_cost(stats.blocks / units, stats))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    Full,
    Hashed,
    Segmented,
}

impl OpKind {
    /// Preference among equal-cost choices: segmented, then hashed, then full.
    fn preference(self) -> u8 {
        match self {
            OpKind::Segmented => 0,
            OpKind::Hashed => 1,
            OpKind::Full => 2,
        }
    }
}

/// Index of the cheapest `(kind, cost)` option; ties go to segmented, then
/// hashed, then full sort, then to the earliest option.
pub fn compare_ops(options: &[(OpKind, CostEstimate)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (kind, cost)) in options.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let (bk, bc) = options[b];
                match cost.io_blocks.partial_cmp(&bc.io_blocks) {
                    Some(Ordering::Less) => true,
                    Some(Ordering::Equal) => kind.preference() < bk.preference(),
                    _ => false,
                }
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

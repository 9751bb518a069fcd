//! Physical-order properties of row streams and how window functions relate
//! to them.
//!
//! A stream described by `SegProp { x, y, .. }` is a sequence of segments
//! whose `x`-values are pairwise disjoint, each segment sorted on `y`. With
//! `x = ∅` there is a single segment and the stream is totally ordered on `y`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::attr::{AttrId, AttrSeq, AttrSet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegProp {
    pub x: AttrSet,
    pub y: AttrSeq,
    /// Every segment holds exactly one `x`-value.
    #[serde(default)]
    pub grouped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_segments_hint: Option<u64>,
}

impl SegProp {
    /// No known order.
    pub fn unordered() -> Self {
        SegProp::default()
    }

    pub fn sorted(y: AttrSeq) -> Self {
        SegProp {
            y,
            ..SegProp::default()
        }
    }

    pub fn segmented(x: AttrSet, y: AttrSeq) -> Self {
        SegProp {
            x,
            y,
            ..SegProp::default()
        }
    }

    pub fn grouped(x: AttrSet, y: AttrSeq) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument(
                "a grouped order needs a non-empty segment key".into(),
            ));
        }
        Ok(SegProp {
            x,
            y,
            grouped: true,
            num_segments_hint: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.grouped && self.x.is_empty() {
            return Err(Error::InvalidArgument(
                "a grouped order needs a non-empty segment key".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for SegProp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = if self.grouped { "^g" } else { "" };
        write!(f, "R{g}[{}, {}]", self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuncKind {
    Rank,
    DenseRank,
    RowNumber,
    /// Total of the attribute over the whole partition.
    Sum(AttrId),
}

impl fmt::Display for FuncKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuncKind::Rank => f.write_str("rank"),
            FuncKind::DenseRank => f.write_str("dense_rank"),
            FuncKind::RowNumber => f.write_str("row_number"),
            FuncKind::Sum(a) => write!(f, "sum({})", a.name()),
        }
    }
}

impl FuncKind {
    /// Parses `rank`, `dense_rank`, `row_number` or `sum(attr)`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        match t.to_ascii_lowercase().as_str() {
            "rank" => Ok(FuncKind::Rank),
            "dense_rank" => Ok(FuncKind::DenseRank),
            "row_number" => Ok(FuncKind::RowNumber),
            lower if lower.starts_with("sum(") && lower.ends_with(')') => {
                let inner = t[4..t.len() - 1].trim();
                if inner.is_empty() {
                    return Err(Error::InvalidArgument("sum() needs an attribute".into()));
                }
                Ok(FuncKind::Sum(AttrId::new(inner)))
            }
            _ => Err(Error::InvalidArgument(alloc::format!(
                "unknown window function `{t}`"
            ))),
        }
    }
}

/// One window function: `kind() OVER (PARTITION BY wpk ORDER BY wok)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WindowFunc {
    name: String,
    partition_by: AttrSeq,
    wpk: AttrSet,
    wok: AttrSeq,
    kind: FuncKind,
}

impl WindowFunc {
    /// `partition_by` keeps its declared order, which only the
    /// declaration-order baseline looks at.
    pub fn new(name: &str, partition_by: AttrSeq, wok: AttrSeq, kind: FuncKind) -> Result<Self> {
        if name.is_empty() {
            return Err(Error::InvalidArgument("window output name is empty".into()));
        }
        if let Some(a) = partition_by.iter().find(|a| a.is_descending()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "partition attribute `{a}` cannot carry a direction"
            )));
        }
        let wpk = partition_by.attrs();
        if let Some(a) = wok.iter().find(|a| wpk.contains(&AttrId::new(a.name()))) {
            return Err(Error::InvalidArgument(alloc::format!(
                "`{}` is in both the partition and order keys of `{name}`",
                a.name()
            )));
        }
        Ok(WindowFunc {
            name: name.into(),
            partition_by,
            wpk,
            wok,
            kind,
        })
    }

    /// Shorthand used heavily in tests: names of partition attributes and of
    /// (ascending) order attributes.
    pub fn of(name: &str, wpk: &[&str], wok: &[&str]) -> Result<Self> {
        WindowFunc::new(
            name,
            AttrSeq::new(wpk.iter().copied())?,
            AttrSeq::new(wok.iter().copied())?,
            FuncKind::Rank,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn wpk(&self) -> &AttrSet {
        &self.wpk
    }

    pub fn partition_by(&self) -> &AttrSeq {
        &self.partition_by
    }

    pub fn wok(&self) -> &AttrSeq {
        &self.wok
    }

    pub fn kind(&self) -> &FuncKind {
        &self.kind
    }

    /// `|WPK| + |WOK|`, the length of every `P ∘ WOK`.
    pub fn key_len(&self) -> usize {
        self.wpk.len() + self.wok.len()
    }

    /// Whether `key` equals `P ∘ wok` for some permutation `P` of the
    /// partition key.
    pub fn is_key(&self, key: &AttrSeq) -> bool {
        key.len() == self.key_len() && self.is_key_prefix_of(key)
    }

    /// Whether some `P ∘ wok` is a prefix of `seq`.
    pub fn is_key_prefix_of(&self, seq: &AttrSeq) -> bool {
        let n = self.wpk.len();
        if seq.len() < self.key_len() {
            return false;
        }
        let head: AttrSet = seq[..n].iter().cloned().collect();
        head.len() == n && head == self.wpk && seq[n..self.key_len()] == self.wok[..]
    }
}

impl fmt::Display for WindowFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}=({}, {})", self.name, self.wpk, self.wok)
    }
}

/// An ordered list of window functions over one table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Workload {
    funcs: Vec<WindowFunc>,
}

impl Workload {
    pub fn new(funcs: Vec<WindowFunc>) -> Result<Self> {
        for (i, f) in funcs.iter().enumerate() {
            if funcs[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "duplicate window output `{}`",
                    f.name
                )));
            }
            if f.key_len() == 0 {
                return Err(Error::InvalidArgument(alloc::format!(
                    "`{}` has neither a partition nor an order key",
                    f.name
                )));
            }
        }
        Ok(Workload { funcs })
    }

    pub fn funcs(&self) -> &[WindowFunc] {
        &self.funcs
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    pub fn get(&self, i: usize) -> &WindowFunc {
        &self.funcs[i]
    }

    /// Every attribute referenced by a partition, order or sum key.
    pub fn attributes(&self) -> AttrSet {
        let mut out = AttrSet::empty();
        for f in &self.funcs {
            for a in f.wpk.iter().chain(f.wok.iter()) {
                out.insert(a.clone());
            }
            if let FuncKind::Sum(a) = &f.kind {
                out.insert(a.clone());
            }
        }
        out
    }
}

/// `r` matches `wf` when a sequential scan of `r` sees every WPK-group as one
/// contiguous run ordered on WOK.
pub fn matches(r: &SegProp, wf: &WindowFunc) -> bool {
    r.x.is_subset(wf.wpk()) && wf.is_key_prefix_of(&r.y)
}

/// Hashed sort applies to any window function with a partition key.
pub fn hs_reorderable(wf: &WindowFunc) -> bool {
    !wf.wpk().is_empty()
}

/// How a segmented sort turns `(x, y)` into `(x, key)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SsTarget {
    /// Permutation of the partition key placed in front of the order key.
    pub perm: AttrSeq,
    /// `perm ∘ wok`.
    pub key: AttrSeq,
    /// Shared prefix of `key` and the input order; rows with equal `alpha`
    /// form the units sorted independently.
    pub alpha: AttrSeq,
    /// Remainder of `key` after `alpha`.
    pub beta: AttrSeq,
    pub output: SegProp,
}

/// The segmented-sort target for `wf` maximizing the reused prefix, or
/// `None` when segmented sort does not apply.
///
/// Remaining partition attributes are placed in name order, which makes the
/// result the lexicographically smallest among those with the longest
/// prefix.
pub fn ss_reorderable(r: &SegProp, wf: &WindowFunc) -> Option<SsTarget> {
    let n = wf.wpk().len();
    let mut used = AttrSet::empty();
    let mut matched = 0;
    for a in r.y.iter() {
        if matched < n {
            if wf.wpk().contains(a) && !used.contains(a) {
                used.insert(a.clone());
                matched += 1;
                continue;
            }
            break;
        }
        if matched - n < wf.wok().len() && wf.wok()[matched - n] == *a {
            matched += 1;
            continue;
        }
        break;
    }
    let mut perm: Vec<AttrId> = r.y[..matched.min(n)].to_vec();
    perm.extend(wf.wpk().difference(&used).iter().cloned());
    let perm = AttrSeq::from_vec_unchecked(perm);
    let key = perm.concat(wf.wok()).expect("partition and order keys are disjoint");
    ss_target_with_key(r, wf, key)
}

/// The segmented-sort target reaching `key`, which must be `P ∘ wok` for some
/// permutation `P` of the partition key of `wf`.
pub fn ss_target_with_key(r: &SegProp, wf: &WindowFunc, key: AttrSeq) -> Option<SsTarget> {
    if !wf.is_key(&key) {
        return None;
    }
    let alpha = key.longest_common_prefix(&r.y);
    let applicable = if r.x.is_empty() {
        !alpha.is_empty()
    } else {
        r.x.is_subset(wf.wpk())
    };
    if !applicable {
        return None;
    }
    Some(ss_target_unchecked(r, wf, key, alpha))
}

fn ss_target_unchecked(r: &SegProp, wf: &WindowFunc, key: AttrSeq, alpha: AttrSeq) -> SsTarget {
    let perm = key.prefix(wf.wpk().len());
    let beta = key.suffix_after(alpha.len());
    let output = SegProp {
        x: r.x.clone(),
        y: key.clone(),
        grouped: r.grouped,
        num_segments_hint: r.num_segments_hint,
    };
    SsTarget {
        perm,
        key,
        alpha,
        beta,
        output,
    }
}

//! Attribute identifiers and the sequence/set algebra used by every other
//! module.
//!
//! Sequences ([`AttrSeq`]) carry sort keys and window ordering keys; sets
//! ([`AttrSet`]) carry partitioning keys, hash keys and segment attributes.
//! Both are ordered by attribute name so that every choice made on top of
//! them can be resolved lexicographically.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest set accepted by [`permutations`] unless a caller passes its own bound.
pub const PERMUTATION_BOUND: usize = 8;

/// A column reference, optionally ordered descending.
///
/// Two ids are the same attribute only when both the name and the direction
/// agree, so the planner treats `salary` and `salary desc` as unrelated keys.
/// NULLs sort last in either direction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrId {
    name: Arc<str>,
    descending: bool,
}

impl AttrId {
    pub fn new(name: &str) -> Self {
        Self::with_direction(name, false)
    }

    pub fn desc(name: &str) -> Self {
        Self::with_direction(name, true)
    }

    pub fn with_direction(name: &str, descending: bool) -> Self {
        assert!(!name.is_empty(), "attribute names must be non-empty");
        AttrId {
            name: Arc::from(name),
            descending,
        }
    }

    /// Parses `name`, `name asc` or `name desc`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut words = text.split_whitespace();
        let name = words
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty attribute".to_string()))?;
        let descending = match words.next().map(str::to_ascii_lowercase).as_deref() {
            None | Some("asc") => false,
            Some("desc") => true,
            Some(other) => {
                return Err(Error::InvalidArgument(alloc::format!(
                    "unknown direction `{other}` for `{name}`"
                )))
            }
        };
        if words.next().is_some() {
            return Err(Error::InvalidArgument(alloc::format!(
                "unexpected trailing text in `{text}`"
            )));
        }
        Ok(Self::with_direction(name, descending))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_descending(&self) -> bool {
        self.descending
    }
}

impl fmt::Display for AttrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.descending {
            write!(f, "{} desc", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

impl fmt::Debug for AttrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<&str> for AttrId {
    fn from(name: &str) -> Self {
        AttrId::new(name)
    }
}

impl Serialize for AttrId {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttrId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        AttrId::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// An ordered list of distinct attributes.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct AttrSeq(Vec<AttrId>);

impl AttrSeq {
    pub fn empty() -> Self {
        AttrSeq(Vec::new())
    }

    pub fn new<I, A>(attrs: I) -> Result<Self>
    where
        I: IntoIterator<Item = A>,
        A: Into<AttrId>,
    {
        let mut out = Vec::new();
        for a in attrs {
            let a = a.into();
            if out.contains(&a) {
                return Err(Error::DuplicateAttribute(a));
            }
            out.push(a);
        }
        Ok(AttrSeq(out))
    }

    pub fn as_slice(&self) -> &[AttrId] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<AttrId> {
        self.0
    }

    pub fn attrs(&self) -> AttrSet {
        self.0.iter().cloned().collect()
    }

    /// `self ∘ other`; fails if the two share an attribute.
    pub fn concat(&self, other: &AttrSeq) -> Result<AttrSeq> {
        if let Some(dup) = other.0.iter().find(|a| self.0.contains(a)) {
            return Err(Error::DuplicateAttribute(dup.clone()));
        }
        let mut out = self.0.clone();
        out.extend(other.0.iter().cloned());
        Ok(AttrSeq(out))
    }

    pub fn longest_common_prefix(&self, other: &AttrSeq) -> AttrSeq {
        let n = self
            .0
            .iter()
            .zip(&other.0)
            .take_while(|(a, b)| a == b)
            .count();
        AttrSeq(self.0[..n].to_vec())
    }

    pub fn is_prefix_of(&self, other: &AttrSeq) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn is_proper_prefix_of(&self, other: &AttrSeq) -> bool {
        self.len() < other.len() && self.is_prefix_of(other)
    }

    pub fn prefix(&self, len: usize) -> AttrSeq {
        AttrSeq(self.0[..len.min(self.0.len())].to_vec())
    }

    /// Everything after the first `len` attributes.
    pub fn suffix_after(&self, len: usize) -> AttrSeq {
        AttrSeq(self.0[len.min(self.0.len())..].to_vec())
    }

    pub(crate) fn from_vec_unchecked(attrs: Vec<AttrId>) -> Self {
        debug_assert!(AttrSeq::new(attrs.iter().cloned()).is_ok());
        AttrSeq(attrs)
    }
}

impl Deref for AttrSeq {
    type Target = [AttrId];

    fn deref(&self) -> &[AttrId] {
        &self.0
    }
}

impl PartialOrd for AttrSeq {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AttrSeq {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Display for AttrSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for AttrSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'de> Deserialize<'de> for AttrSeq {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let attrs = Vec::<AttrId>::deserialize(deserializer)?;
        AttrSeq::new(attrs).map_err(serde::de::Error::custom)
    }
}

/// `x ∘ y`.
pub fn concat(x: &AttrSeq, y: &AttrSeq) -> Result<AttrSeq> {
    x.concat(y)
}

/// `x ∧ y`.
pub fn longest_common_prefix(x: &AttrSeq, y: &AttrSeq) -> AttrSeq {
    x.longest_common_prefix(y)
}

/// `x ≤ y`.
pub fn is_prefix(x: &AttrSeq, y: &AttrSeq) -> bool {
    x.is_prefix_of(y)
}

/// An unordered collection of distinct attributes, kept sorted.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct AttrSet(Vec<AttrId>);

impl AttrSet {
    pub fn empty() -> Self {
        AttrSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, AttrId> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[AttrId] {
        &self.0
    }

    pub fn contains(&self, a: &AttrId) -> bool {
        self.0.binary_search(a).is_ok()
    }

    pub fn is_subset(&self, other: &AttrSet) -> bool {
        self.0.iter().all(|a| other.contains(a))
    }

    pub fn is_disjoint(&self, other: &AttrSet) -> bool {
        !self.0.iter().any(|a| other.contains(a))
    }

    pub fn intersection(&self, other: &AttrSet) -> AttrSet {
        AttrSet(self.0.iter().filter(|a| other.contains(a)).cloned().collect())
    }

    pub fn union(&self, other: &AttrSet) -> AttrSet {
        self.0.iter().chain(other.0.iter()).cloned().collect()
    }

    pub fn difference(&self, other: &AttrSet) -> AttrSet {
        AttrSet(self.0.iter().filter(|a| !other.contains(a)).cloned().collect())
    }

    pub fn insert(&mut self, a: AttrId) -> bool {
        match self.0.binary_search(&a) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, a);
                true
            }
        }
    }

    /// The members in lexicographic order, as a sequence.
    pub fn to_seq(&self) -> AttrSeq {
        AttrSeq(self.0.clone())
    }
}

impl FromIterator<AttrId> for AttrSet {
    fn from_iter<I: IntoIterator<Item = AttrId>>(iter: I) -> Self {
        let mut v: Vec<AttrId> = iter.into_iter().collect();
        v.sort();
        v.dedup();
        AttrSet(v)
    }
}

impl<'a> FromIterator<&'a str> for AttrSet {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        iter.into_iter().map(AttrId::new).collect()
    }
}

impl<'a> IntoIterator for &'a AttrSet {
    type Item = &'a AttrId;
    type IntoIter = core::slice::Iter<'a, AttrId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl IntoIterator for AttrSet {
    type Item = AttrId;
    type IntoIter = alloc::vec::IntoIter<AttrId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl fmt::Display for AttrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        f.write_str("{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for AttrSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'de> Deserialize<'de> for AttrSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        Ok(Vec::<AttrId>::deserialize(deserializer)?.into_iter().collect())
    }
}

/// Every ordering of `set`, in lexicographic order.
///
/// Fails with a capacity error when `set` has more than `bound` members;
/// callers facing larger sets must search constructively instead.
pub fn permutations(set: &AttrSet, bound: usize) -> Result<Permutations> {
    if set.len() > bound {
        return Err(Error::Capacity {
            what: "permutation enumeration",
            limit: bound,
            requested: set.len(),
        });
    }
    Ok(Permutations {
        items: set.0.clone(),
        order: (0..set.len()).collect(),
        done: false,
    })
}

pub struct Permutations {
    items: Vec<AttrId>,
    order: Vec<usize>,
    done: bool,
}

impl Iterator for Permutations {
    type Item = AttrSeq;

    fn next(&mut self) -> Option<AttrSeq> {
        if self.done {
            return None;
        }
        let current = AttrSeq(self.order.iter().map(|&i| self.items[i].clone()).collect());
        self.done = !next_permutation(&mut self.order);
        Some(current)
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

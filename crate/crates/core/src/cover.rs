//! Cover sets, prefixable groups and the keys derived from them.
//!
//! Every search here is a left-to-right placement. At position `p` each
//! window function still "active" (its key is longer than `p`) restricts the
//! attribute placed there: while inside its partition key any unused member
//! of that key is allowed, afterwards only the next order attribute is. The
//! candidate set is the intersection of these restrictions.
//!
//! If two attributes `a` and `b` are both admissible at `p`, every active
//! function is still inside its partition key and that key holds both. So
//! whichever of the two is placed first, the other remains admissible
//! wherever the original placement put it, and choosing greedily never costs
//! feasibility or length. The searches therefore never backtrack.

use alloc::vec::Vec;

use crate::attr::{AttrId, AttrSeq, AttrSet};
use crate::error::{Error, Result};
use crate::order::WindowFunc;

/// A group of window functions whose keys are all prefixes of `gamma`, the
/// key of its `covering` member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverSet {
    /// Indices into the slice the set was computed from, covering member first.
    pub members: Vec<usize>,
    pub covering: usize,
    pub gamma: AttrSeq,
}

/// Attributes allowed at position `p` by `wf`, or `None` if `wf` no longer
/// constrains `p`.
fn admissible_at<'a>(wf: &'a WindowFunc, p: usize, placed: &[AttrId]) -> Option<Admissible<'a>> {
    let n = wf.wpk().len();
    if p < n {
        Some(Admissible::AnyOf(wf.wpk()))
    } else if p < wf.key_len() {
        let a = &wf.wok()[p - n];
        // A placement that already used this attribute has failed; the
        // caller sees an empty intersection.
        if placed.contains(a) {
            Some(Admissible::Nothing)
        } else {
            Some(Admissible::Exactly(a))
        }
    } else {
        None
    }
}

enum Admissible<'a> {
    AnyOf(&'a AttrSet),
    Exactly(&'a AttrId),
    Nothing,
}

/// Greedy placement of `len` attributes satisfying every function in
/// `funcs` that is active at each position.
///
/// `required` is forced as a prefix. `prefer` is followed while possible;
/// otherwise the smallest admissible attribute is taken. Fails when some
/// position has no admissible attribute or is constrained by no function.
fn place(funcs: &[&WindowFunc], len: usize, required: &[AttrId], prefer: &[AttrId]) -> Option<AttrSeq> {
    let mut placed: Vec<AttrId> = Vec::with_capacity(len);
    let mut following = true;
    for p in 0..len {
        let mut candidates: Option<Vec<AttrId>> = None;
        for wf in funcs {
            let restrict: Vec<AttrId> = match admissible_at(wf, p, &placed) {
                None => continue,
                Some(Admissible::Nothing) => return None,
                Some(Admissible::Exactly(a)) => alloc::vec![a.clone()],
                Some(Admissible::AnyOf(s)) => s.iter().filter(|a| !placed.contains(a)).cloned().collect(),
            };
            candidates = Some(match candidates {
                None => restrict,
                Some(c) => c.into_iter().filter(|a| restrict.contains(a)).collect(),
            });
        }
        let candidates = candidates?;
        let pick = if let Some(r) = required.get(p) {
            candidates.iter().find(|a| *a == r)?.clone()
        } else if let Some(pref) = prefer.get(p).filter(|_| following).and_then(|a| candidates.iter().find(|c| *c == a)) {
            pref.clone()
        } else {
            following = false;
            // Candidates come from sorted sets or a single attribute.
            candidates.into_iter().min()?
        };
        if prefer.get(p) != Some(&pick) {
            following = false;
        }
        placed.push(pick);
    }
    Some(AttrSeq::from_vec_unchecked(placed))
}

/// The lexicographically smallest covering key of `funcs` together with the
/// index of its covering member, or `None` if `funcs` is not a cover set.
pub fn is_cover_set(funcs: &[&WindowFunc]) -> Option<(usize, AttrSeq)> {
    is_cover_set_preferring(funcs, &AttrSeq::empty())
}

/// Like [`is_cover_set`] but picks, among valid covering keys, one sharing
/// the longest prefix with `prefer` (ties by smallest key).
pub fn is_cover_set_preferring(funcs: &[&WindowFunc], prefer: &AttrSeq) -> Option<(usize, AttrSeq)> {
    let max_len = funcs.iter().map(|f| f.key_len()).max()?;
    // All members constrain the placement, so any maximal-length member whose
    // key it yields covers the rest; report the first.
    let gamma = place(funcs, max_len, &[], prefer)?;
    let c = funcs.iter().position(|f| f.key_len() == max_len)?;
    debug_assert!(funcs[c].is_key(&gamma));
    Some((c, gamma))
}

/// A witness attribute `a` such that every function either partitions on
/// `a` or has an empty partition key and orders on `a` first.
pub fn is_prefixable(funcs: &[&WindowFunc]) -> Option<AttrId> {
    candidate_heads(funcs)
        .into_iter()
        .find(|a| funcs.iter().all(|f| can_start_with(f, a)))
}

/// Whether some `P ∘ wok` of `wf` starts with `a`.
pub fn can_start_with(wf: &WindowFunc, a: &AttrId) -> bool {
    if wf.wpk().is_empty() {
        wf.wok().first() == Some(a)
    } else {
        wf.wpk().contains(a)
    }
}

/// Every attribute that can start some key of some function in `funcs`.
pub fn candidate_heads(funcs: &[&WindowFunc]) -> AttrSet {
    let mut out = AttrSet::empty();
    for f in funcs {
        if f.wpk().is_empty() {
            if let Some(a) = f.wok().first() {
                out.insert(a.clone());
            }
        } else {
            for a in f.wpk() {
                out.insert(a.clone());
            }
        }
    }
    out
}

/// The longest sequence that is a prefix of some key of every function in
/// `funcs`, lexicographically smallest among the longest.
pub fn theta(funcs: &[&WindowFunc]) -> Result<AttrSeq> {
    if is_prefixable(funcs).is_none() {
        return Err(Error::InvalidArgument(
            "theta is only defined for prefixable groups".into(),
        ));
    }
    let limit = funcs.iter().map(|f| f.key_len()).min().unwrap_or(0);
    // Greedy choices at a position do not depend on the total length, so
    // the feasible placements of growing length extend one another.
    let mut best = AttrSeq::empty();
    for len in 1..=limit {
        match place(funcs, len, &[], &[]) {
            Some(t) => best = t,
            None => break,
        }
    }
    Ok(best)
}

/// A key `P ∘ wok` of `wf` that starts with `prefix`, remaining partition
/// attributes in name order.
pub fn covering_permutation_with_prefix(wf: &WindowFunc, prefix: &AttrSeq) -> Option<AttrSeq> {
    if prefix.len() > wf.key_len() {
        return None;
    }
    place(&[wf], wf.key_len(), prefix, &[])
}

/// A covering key of `funcs` that starts with `prefix`, sharing as much as
/// possible with `prefer` after that. Returns the covering member's index.
pub fn cover_key_with_prefix(funcs: &[&WindowFunc], prefix: &AttrSeq, prefer: &AttrSeq) -> Option<(usize, AttrSeq)> {
    let max_len = funcs.iter().map(|f| f.key_len()).max()?;
    let c = funcs.iter().position(|f| f.key_len() == max_len)?;
    place(funcs, max_len, prefix, prefer).map(|g| (c, g))
}

//! Greedy partitioning into prefixable groups.

use alloc::vec::Vec;

use crate::attr::AttrId;
use crate::cover::{can_start_with, candidate_heads};
use crate::order::WindowFunc;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixGroup {
    /// Attribute every member's key can start with.
    pub witness: AttrId,
    /// Indices into the slice the groups were computed from, ascending.
    pub members: Vec<usize>,
}

/// Repeatedly takes the attribute that the most remaining functions can
/// start their keys with (smallest name on ties) and groups those functions.
/// Groups come out in the order they were formed, so sizes never increase.
pub fn partition_prefixable(funcs: &[&WindowFunc]) -> Vec<PrefixGroup> {
    let mut remaining: Vec<usize> = (0..funcs.len()).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let refs: Vec<&WindowFunc> = remaining.iter().map(|&i| funcs[i]).collect();
        let mut best: Option<(AttrId, usize)> = None;
        for a in candidate_heads(&refs) {
            let n = refs.iter().filter(|f| can_start_with(f, &a)).count();
            if best.as_ref().map_or(true, |(_, m)| n > *m) {
                best = Some((a, n));
            }
        }
        let (witness, _) = best.expect("every function can start its key with some attribute");
        let (members, rest): (Vec<usize>, Vec<usize>) = remaining
            .iter()
            .partition(|&&i| can_start_with(funcs[i], &witness));
        out.push(PrefixGroup { witness, members });
        remaining = rest;
    }
    out
}

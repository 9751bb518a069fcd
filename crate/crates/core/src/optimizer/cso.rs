//! The cover-set based planner.
//!
//! Functions already matched by the input run first without reordering.
//! Those a segmented sort can reach are grouped into cover sets, one
//! segmented sort per set. The rest are split into prefixable groups; each
//! group pays one full or hashed sort, chosen by cost, toward a key that
//! starts with the group's common prefix, after which its remaining cover
//! sets only need segmented sorts.

use alloc::vec::Vec;

use crate::attr::{AttrSeq, AttrSet};
use crate::cost::{compare_ops, CostEstimate, OpKind, RelStats};
use crate::cover::{cover_key_with_prefix, is_cover_set_preferring, theta, CoverSet};
use crate::error::Result;
use crate::order::{matches, ss_reorderable, ss_target_with_key, SegProp, WindowFunc, Workload};
use crate::plan::{Plan, ReorderStep};

use super::coloring::partition_cover_sets;
use super::prefixable::partition_prefixable;

/// Functions matched by the input, reachable by a segmented sort from it,
/// and the rest. Indices into the workload, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub c0: Vec<usize>,
    pub c1: Vec<usize>,
    pub c2: Vec<usize>,
}

pub fn decompose(input: &SegProp, workload: &Workload) -> Decomposition {
    let mut d = Decomposition {
        c0: Vec::new(),
        c1: Vec::new(),
        c2: Vec::new(),
    };
    for (i, wf) in workload.funcs().iter().enumerate() {
        if matches(input, wf) {
            d.c0.push(i);
        } else if ss_reorderable(input, wf).is_some() {
            d.c1.push(i);
        } else {
            d.c2.push(i);
        }
    }
    d
}

struct Builder<'a> {
    workload: &'a Workload,
    stats: &'a RelStats,
    current: SegProp,
    plan: Plan,
}

impl Builder<'_> {
    fn wf(&self, i: usize) -> &WindowFunc {
        self.workload.get(i)
    }

    fn push(&mut self, step: ReorderStep, func: usize) {
        let cost = step.cost(&self.current, self.stats);
        self.current = step.output(&self.current, Some(self.stats));
        self.plan.push(step, func, cost);
    }

    /// Evaluates the rest of a cover set whose covering member just ran.
    /// Members left unmatched (only possible if a fallback changed the key)
    /// get a full sort of their own.
    fn finish_set(&mut self, members: &[usize]) {
        for &m in members {
            if matches(&self.current, self.wf(m)) {
                self.push(ReorderStep::None, m);
            } else {
                let key = own_key(self.wf(m));
                self.push(ReorderStep::Full { key }, m);
            }
        }
    }

    /// One segmented sort toward a covering key of `set`, preferring the
    /// key that reuses the longest prefix of the current order.
    fn segmented_set(&mut self, set: &[usize]) {
        let refs: Vec<&WindowFunc> = set.iter().map(|&i| self.wf(i)).collect();
        let Some((c, gamma)) = is_cover_set_preferring(&refs, &self.current.y) else {
            // Not reachable for sets built by the partitioner; keep the plan
            // valid regardless.
            return self.finish_set(set);
        };
        let covering = set[c];
        let rest: Vec<usize> = set.iter().copied().filter(|&i| i != covering).collect();
        if matches(&self.current, self.wf(covering)) {
            self.push(ReorderStep::None, covering);
        } else {
            let step = match ss_target_with_key(&self.current, self.wf(covering), gamma.clone()) {
                Some(t) if set_matches_after(&t.output, &refs) => ReorderStep::Segmented {
                    key: t.key,
                    alpha: t.alpha,
                },
                _ => ReorderStep::Full { key: gamma },
            };
            self.push(step, covering);
        }
        self.finish_set(&rest);
    }

    /// The leading sort of a prefixable group: full or hashed, toward a key
    /// of `set` that starts with as much of `theta` as possible.
    fn leading_set(&mut self, set: &[usize], group: &[usize], theta: &AttrSeq) {
        let refs: Vec<&WindowFunc> = set.iter().map(|&i| self.wf(i)).collect();
        let mut prefix = theta.clone();
        let (c, gamma) = loop {
            if let Some(found) = cover_key_with_prefix(&refs, &prefix, &AttrSeq::empty()) {
                break found;
            }
            if prefix.is_empty() {
                return self.finish_set(set);
            }
            prefix = prefix.prefix(prefix.len() - 1);
        };
        let covering = set[c];
        let rest: Vec<usize> = set.iter().copied().filter(|&i| i != covering).collect();
        if matches(&self.current, self.wf(covering)) {
            self.push(ReorderStep::None, covering);
            return self.finish_set(&rest);
        }
        // Hash on the longest prefix of theta contained in every partition
        // key of the group, so that every later segmented sort of the group
        // stays applicable.
        let hash_len = prefix
            .iter()
            .take_while(|a| group.iter().all(|&g| self.wf(g).wpk().contains(a)))
            .count();
        let mut options = alloc::vec![(ReorderStep::Full { key: gamma.clone() }, OpKind::Full)];
        if hash_len > 0 {
            let hash: AttrSet = prefix[..hash_len].iter().cloned().collect();
            options.push((ReorderStep::Hashed { hash, key: gamma }, OpKind::Hashed));
        }
        let costs: Vec<(OpKind, CostEstimate)> = options
            .iter()
            .map(|(s, k)| (*k, s.cost(&self.current, self.stats)))
            .collect();
        let pick = compare_ops(&costs).unwrap_or(0);
        let step = options.swap_remove(pick).0;
        self.push(step, covering);
        self.finish_set(&rest);
    }
}

fn set_matches_after(out: &SegProp, refs: &[&WindowFunc]) -> bool {
    refs.iter().all(|f| matches(out, f))
}

/// `partition_by ∘ wok` with the partition key in name order.
fn own_key(wf: &WindowFunc) -> AttrSeq {
    wf.wpk().to_seq().concat(wf.wok()).expect("partition and order keys are disjoint")
}

fn map_sets(sets: Vec<CoverSet>, ids: &[usize]) -> Vec<Vec<usize>> {
    sets.into_iter()
        .map(|s| s.members.into_iter().map(|m| ids[m]).collect())
        .collect()
}

pub fn cso_plan(input: &SegProp, workload: &Workload, stats: &RelStats) -> Result<Plan> {
    let d = decompose(input, workload);
    let mut b = Builder {
        workload,
        stats,
        current: input.clone(),
        plan: Plan::new(),
    };
    for &i in &d.c0 {
        b.push(ReorderStep::None, i);
    }

    let c1_refs: Vec<&WindowFunc> = d.c1.iter().map(|&i| workload.get(i)).collect();
    for set in map_sets(partition_cover_sets(&c1_refs), &d.c1) {
        b.segmented_set(&set);
    }

    let c2_refs: Vec<&WindowFunc> = d.c2.iter().map(|&i| workload.get(i)).collect();
    for group in partition_prefixable(&c2_refs) {
        let ids: Vec<usize> = group.members.iter().map(|&m| d.c2[m]).collect();
        let refs: Vec<&WindowFunc> = ids.iter().map(|&i| workload.get(i)).collect();
        let th = theta(&refs)?;
        let sets = map_sets(partition_cover_sets(&refs), &ids);
        let mut sets = sets.into_iter();
        if let Some(first) = sets.next() {
            b.leading_set(&first, &ids, &th);
        }
        for set in sets {
            b.segmented_set(&set);
        }
    }

    debug_assert!(b.plan.validate(input, workload).is_ok());
    Ok(b.plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::PlanShape;

    fn seq(names: &[&str]) -> AttrSeq {
        AttrSeq::new(names.iter().copied()).unwrap()
    }

    #[test]
    fn example6_needs_one_sort() {
        let w = Workload::new(alloc::vec![
            WindowFunc::of("wf1", &["a"], &["b"]).unwrap(),
            WindowFunc::of("wf2", &["a"], &[]).unwrap(),
        ])
        .unwrap();
        let stats = RelStats::new(1000.0, 100_000.0, 10.0);
        let p = cso_plan(&SegProp::unordered(), &w, &stats).unwrap();
        assert_eq!(p.shape(), PlanShape { fs_hs: 1, ss: 0, matched: 1 });
        match &p.steps[0].reorder {
            ReorderStep::Full { key } | ReorderStep::Hashed { key, .. } => assert_eq!(*key, seq(&["a", "b"])),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p.steps[0].func, 0);
    }

    #[test]
    fn matched_functions_come_first() {
        let w = Workload::new(alloc::vec![
            WindowFunc::of("wf1", &["b"], &[]).unwrap(),
            WindowFunc::of("wf2", &["a"], &[]).unwrap(),
        ])
        .unwrap();
        let stats = RelStats::new(1000.0, 100_000.0, 10.0);
        let p = cso_plan(&SegProp::sorted(seq(&["a"])), &w, &stats).unwrap();
        assert_eq!(p.steps[0].func, 1);
        assert!(p.steps[0].reorder.is_none());
    }
}

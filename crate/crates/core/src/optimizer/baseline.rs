//! Baseline planners that never use hashed or segmented sorts.

use alloc::vec::Vec;

use crate::cost::{cost_fs, CostEstimate, RelStats};
use crate::error::Result;
use crate::order::{matches, SegProp, WindowFunc, Workload};
use crate::plan::{Plan, ReorderStep};

use super::coloring::partition_cover_sets;

/// Ordering groups: the functions not matched by the input are split into
/// cover sets, each led by a full sort to its covering key. Sets run in the
/// same order the cover-set planner uses.
pub fn orcl_plan(input: &SegProp, workload: &Workload, stats: &RelStats) -> Result<Plan> {
    let mut plan = Plan::new();
    let mut current = input.clone();
    let mut rest = Vec::new();
    for (i, wf) in workload.funcs().iter().enumerate() {
        if matches(input, wf) {
            plan.push(ReorderStep::None, i, CostEstimate::ZERO);
        } else {
            rest.push(i);
        }
    }
    let refs: Vec<&WindowFunc> = rest.iter().map(|&i| workload.get(i)).collect();
    for set in partition_cover_sets(&refs) {
        for (pos, &m) in set.members.iter().enumerate() {
            let id = rest[m];
            let wf = workload.get(id);
            if matches(&current, wf) {
                plan.push(ReorderStep::None, id, CostEstimate::ZERO);
            } else {
                let key = if pos == 0 {
                    set.gamma.clone()
                } else {
                    wf.wpk().to_seq().concat(wf.wok()).expect("disjoint keys")
                };
                current = SegProp::sorted(key.clone());
                plan.push(ReorderStep::Full { key }, id, cost_fs(stats));
            }
        }
    }
    Ok(plan)
}

/// Declaration order; every function is full-sorted on its partition
/// attributes as written, then its order key, unless the stream is already
/// totally ordered with that exact key as a prefix. Permuted partition keys
/// are not recognized.
pub fn psql_plan(input: &SegProp, workload: &Workload, stats: &RelStats) -> Result<Plan> {
    let mut plan = Plan::new();
    let mut current = input.clone();
    for (i, wf) in workload.funcs().iter().enumerate() {
        let key = wf.partition_by().concat(wf.wok()).expect("disjoint keys");
        if current.x.is_empty() && key.is_prefix_of(&current.y) {
            plan.push(ReorderStep::None, i, CostEstimate::ZERO);
        } else {
            current = SegProp::sorted(key.clone());
            plan.push(ReorderStep::Full { key }, i, cost_fs(stats));
        }
    }
    Ok(plan)
}

//! Exhaustive plan search, the reference the heuristics are measured against.

use alloc::vec::Vec;

use crate::attr::{permutations, AttrSet, PERMUTATION_BOUND};
use crate::cost::RelStats;
use crate::error::{Error, Result};
use crate::order::{matches, ss_target_with_key, SegProp, Workload};
use crate::plan::{Plan, PlanStep, ReorderStep};

use super::cso::cso_plan;

/// Largest workload the exhaustive search accepts.
pub const BFO_BOUND: usize = 8;

/// Searches every evaluation order and, for each function not matched by
/// the order it meets, every key `P ∘ wok` reached by a segmented sort (when
/// applicable), a hashed sort on each non-empty prefix of `P`, or a full
/// sort. Matched functions are evaluated without reordering.
///
/// The cover-set plan lies inside this space, so its cost seeds the bound;
/// among plans of equal cost the first one enumerated wins.
pub fn bfo_plan(input: &SegProp, workload: &Workload, stats: &RelStats) -> Result<Plan> {
    if workload.len() > BFO_BOUND {
        return Err(Error::Capacity {
            what: "exhaustive planning",
            limit: BFO_BOUND,
            requested: workload.len(),
        });
    }
    let mut keys = Vec::with_capacity(workload.len());
    for wf in workload.funcs() {
        let perms: Vec<_> = permutations(wf.wpk(), PERMUTATION_BOUND)?.collect();
        let options: Vec<_> = perms
            .into_iter()
            .map(|p| {
                let key = p.concat(wf.wok()).expect("partition and order keys are disjoint");
                (p, key)
            })
            .collect();
        keys.push(options);
    }
    let seed = cso_plan(input, workload, stats)?;
    let mut search = Search {
        workload,
        stats,
        keys,
        bound: seed.est_cost(),
        best: None,
        steps: Vec::with_capacity(workload.len()),
        used: alloc::vec![false; workload.len()],
    };
    search.dfs(input, 0.0);
    Ok(search.best.unwrap_or(seed))
}

struct Search<'a> {
    workload: &'a Workload,
    stats: &'a RelStats,
    keys: Vec<Vec<(crate::attr::AttrSeq, crate::attr::AttrSeq)>>,
    bound: f64,
    best: Option<Plan>,
    steps: Vec<PlanStep>,
    used: Vec<bool>,
}

impl Search<'_> {
    fn over_bound(&self, cost: f64) -> bool {
        if self.best.is_some() {
            cost >= self.bound
        } else {
            cost > self.bound
        }
    }

    fn dfs(&mut self, current: &SegProp, cost: f64) {
        if self.steps.len() == self.workload.len() {
            if !self.over_bound(cost) {
                self.bound = cost;
                self.best = Some(Plan {
                    steps: self.steps.clone(),
                });
            }
            return;
        }
        for i in 0..self.workload.len() {
            if self.used[i] {
                continue;
            }
            self.used[i] = true;
            let wf = self.workload.get(i);
            if matches(current, wf) {
                self.try_step(current, cost, ReorderStep::None, i);
            } else {
                for k in 0..self.keys[i].len() {
                    let (perm, key) = self.keys[i][k].clone();
                    if let Some(t) = ss_target_with_key(current, wf, key.clone()) {
                        let step = ReorderStep::Segmented {
                            key: t.key,
                            alpha: t.alpha,
                        };
                        self.try_step(current, cost, step, i);
                    }
                    for j in 1..=perm.len() {
                        let hash: AttrSet = perm[..j].iter().cloned().collect();
                        let step = ReorderStep::Hashed {
                            hash,
                            key: key.clone(),
                        };
                        self.try_step(current, cost, step, i);
                    }
                    self.try_step(current, cost, ReorderStep::Full { key }, i);
                }
            }
            self.used[i] = false;
        }
    }

    fn try_step(&mut self, current: &SegProp, cost: f64, step: ReorderStep, func: usize) {
        let c = step.cost(current, self.stats).io_blocks;
        if self.over_bound(cost + c) {
            return;
        }
        let next = step.output(current, Some(self.stats));
        self.steps.push(PlanStep {
            reorder: step,
            func,
            est_cost: c,
        });
        self.dfs(&next, cost + c);
        self.steps.pop();
    }
}

//! Evaluation chains: one reorder step before each window function.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::attr::{AttrSeq, AttrSet};
use crate::cost::{cost_fs, cost_hs, cost_ss, CostEstimate, RelStats};
use crate::error::{Error, Result};
use crate::order::{matches, ss_target_with_key, SegProp, Workload};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReorderStep {
    /// The incoming order already matches.
    None,
    Full { key: AttrSeq },
    Hashed { hash: AttrSet, key: AttrSeq },
    Segmented { key: AttrSeq, alpha: AttrSeq },
}

impl ReorderStep {
    pub fn label(&self) -> &'static str {
        match self {
            ReorderStep::None => "",
            ReorderStep::Full { .. } => "FS",
            ReorderStep::Hashed { .. } => "HS",
            ReorderStep::Segmented { .. } => "SS",
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, ReorderStep::None)
    }

    /// The order of the stream after this step.
    pub fn output(&self, input: &SegProp, stats: Option<&RelStats>) -> SegProp {
        match self {
            ReorderStep::None => input.clone(),
            ReorderStep::Full { key } => SegProp::sorted(key.clone()),
            ReorderStep::Hashed { hash, key } => SegProp {
                x: hash.clone(),
                y: key.clone(),
                grouped: false,
                num_segments_hint: stats.map(|s| s.distinct_of(hash) as u64),
            },
            ReorderStep::Segmented { key, .. } => SegProp {
                x: input.x.clone(),
                y: key.clone(),
                grouped: input.grouped,
                num_segments_hint: input.num_segments_hint,
            },
        }
    }

    /// Estimated cost of applying this step to a stream ordered as `input`.
    pub fn cost(&self, input: &SegProp, stats: &RelStats) -> CostEstimate {
        match self {
            ReorderStep::None => CostEstimate::ZERO,
            ReorderStep::Full { .. } => cost_fs(stats),
            ReorderStep::Hashed { hash, .. } => cost_hs(stats, hash),
            ReorderStep::Segmented { alpha, .. } => {
                let k = if input.x.is_empty() {
                    1.0
                } else {
                    stats.segments(&input.x, input.num_segments_hint)
                };
                cost_ss(stats, alpha, &input.x, k)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub reorder: ReorderStep,
    /// Index of the window function evaluated after the reorder.
    pub func: usize,
    pub est_cost: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

/// Counts of full/hashed sorts, segmented sorts and unreordered steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlanShape {
    pub fs_hs: usize,
    pub ss: usize,
    pub matched: usize,
}

impl Plan {
    pub fn new() -> Self {
        Plan::default()
    }

    pub fn push(&mut self, reorder: ReorderStep, func: usize, est_cost: CostEstimate) {
        self.steps.push(PlanStep {
            reorder,
            func,
            est_cost: est_cost.io_blocks,
        });
    }

    pub fn est_cost(&self) -> f64 {
        self.steps.iter().map(|s| s.est_cost).sum()
    }

    pub fn shape(&self) -> PlanShape {
        let mut shape = PlanShape {
            fs_hs: 0,
            ss: 0,
            matched: 0,
        };
        for s in &self.steps {
            match s.reorder {
                ReorderStep::None => shape.matched += 1,
                ReorderStep::Segmented { .. } => shape.ss += 1,
                _ => shape.fs_hs += 1,
            }
        }
        shape
    }

    pub fn count(&self, label: &str) -> usize {
        self.steps.iter().filter(|s| s.reorder.label() == label).count()
    }

    /// Chain notation, e.g. `ws -HS-> wf1 -SS-> wf2 -> wf3`.
    pub fn to_chain(&self, table: &str, workload: &Workload) -> String {
        let mut out = String::from(table);
        for s in &self.steps {
            let label = s.reorder.label();
            if label.is_empty() {
                out.push_str(" -> ");
            } else {
                let _ = write!(out, " -{label}-> ");
            }
            out.push_str(workload.get(s.func).name());
        }
        out
    }

    /// Checks that the plan evaluates every function exactly once, that each
    /// segmented sort is applicable where it runs, and that every function
    /// sees a matching order. Returns the final order.
    pub fn validate(&self, input: &SegProp, workload: &Workload) -> Result<SegProp> {
        let mut seen = alloc::vec![false; workload.len()];
        let mut current = input.clone();
        for (i, s) in self.steps.iter().enumerate() {
            let Some(flag) = seen.get_mut(s.func) else {
                return Err(Error::InvalidArgument(alloc::format!(
                    "step {i} refers to window function {} of {}",
                    s.func,
                    workload.len()
                )));
            };
            if core::mem::replace(flag, true) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "step {i} evaluates `{}` a second time",
                    workload.get(s.func).name()
                )));
            }
            let wf = workload.get(s.func);
            match &s.reorder {
                ReorderStep::Segmented { key, alpha } => {
                    let target = ss_target_with_key(&current, wf, key.clone()).ok_or_else(|| {
                        Error::ContractViolation(alloc::format!(
                            "step {i}: segmented sort to {key} is not applicable to {current}"
                        ))
                    })?;
                    if &target.alpha != alpha {
                        return Err(Error::ContractViolation(alloc::format!(
                            "step {i}: segmented sort reuses {} of {current}, not {alpha}",
                            target.alpha
                        )));
                    }
                }
                ReorderStep::Hashed { hash, key } => {
                    let head: AttrSet = key.iter().take(hash.len()).cloned().collect();
                    if hash.is_empty() || head != *hash {
                        return Err(Error::InvalidArgument(alloc::format!(
                            "step {i}: hash key {hash} is not the head of sort key {key}"
                        )));
                    }
                }
                ReorderStep::Full { key } if key.is_empty() => {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "step {i}: empty sort key"
                    )));
                }
                _ => {}
            }
            current = s.reorder.output(&current, None);
            if !matches(&current, wf) {
                return Err(Error::ContractViolation(alloc::format!(
                    "step {i}: {current} does not match {wf}"
                )));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(alloc::format!(
                "`{}` is never evaluated",
                workload.get(missing).name()
            )));
        }
        Ok(current)
    }
}

impl fmt::Display for PlanShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.fs_hs, self.ss, self.matched)
    }
}

//! Plan and run one workload against a table file.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use winchain_core::optimizer::{self, Scheme};
use winchain_core::{Plan, RelStats, Row, SegProp, Workload};

use crate::error::Result;
use crate::exec::{execute_plan, ExecOptions, StepReport};
use crate::mem::Budget;
use crate::table::{TableReader, TableStats};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub mem_blocks: usize,
    /// Spill block size; the table's own block size if unset.
    pub block_bytes: Option<usize>,
    pub tmp_dir: Option<PathBuf>,
    pub validate: bool,
    /// Declared input order; the sidecar's if unset.
    pub input: Option<SegProp>,
}

impl RunConfig {
    pub fn new(scheme: Scheme, mem_blocks: usize) -> Self {
        RunConfig {
            scheme,
            mem_blocks,
            block_bytes: None,
            tmp_dir: None,
            validate: false,
            input: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scheme: String,
    pub mem_blocks: usize,
    pub plan: String,
    pub plan_json: Plan,
    pub est_cost: f64,
    /// Spill blocks written and read by all reorder steps.
    pub actual_io_blocks: u64,
    pub spill_bytes: u64,
    pub wall_ms: f64,
    pub planning_ms: f64,
    pub rows: u64,
    /// Order-independent hash of the output rows.
    pub content_hash: u64,
    pub steps: Vec<StepReport>,
}

/// Multiset hash of rows: equal for equal row multisets in any order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContentHash {
    sum: u64,
    count: u64,
}

impl ContentHash {
    pub fn add(&mut self, row: &Row) {
        let mut h = DefaultHasher::new();
        row.hash(&mut h);
        self.sum = self.sum.wrapping_add(h.finish());
        self.count += 1;
    }

    pub fn value(&self) -> u64 {
        self.sum ^ self.count.rotate_left(32)
    }
}

pub struct Prepared {
    pub stats: TableStats,
    pub rel: RelStats,
    pub input: SegProp,
}

pub fn prepare(table: &Path, cfg: &RunConfig) -> Result<Prepared> {
    let stats = TableStats::load(table)?;
    let rel = stats.rel_stats(cfg.mem_blocks);
    let input = cfg.input.clone().unwrap_or_else(|| stats.order.clone());
    Ok(Prepared { stats, rel, input })
}

/// Plans and runs `workload`; each output row is passed to `sink`.
pub fn run_query(
    table: &Path,
    table_name: &str,
    workload: &Workload,
    cfg: &RunConfig,
    mut sink: impl FnMut(&Row) -> Result<()>,
) -> Result<RunReport> {
    let start = Instant::now();
    let prep = prepare(table, cfg)?;
    let plan = optimizer::plan(cfg.scheme, &prep.input, workload, &prep.rel)?;
    let planning_ms = start.elapsed().as_secs_f64() * 1e3;
    run_plan(table, table_name, workload, &plan, &prep, cfg, planning_ms, start, &mut sink)
}

#[allow(clippy::too_many_arguments)]
pub fn run_plan(
    table: &Path,
    table_name: &str,
    workload: &Workload,
    plan: &Plan,
    prep: &Prepared,
    cfg: &RunConfig,
    planning_ms: f64,
    start: Instant,
    sink: &mut dyn FnMut(&Row) -> Result<()>,
) -> Result<RunReport> {
    let reader = TableReader::open(table, None)?;
    let schema = reader.schema().clone();
    let block_bytes = cfg.block_bytes.unwrap_or(reader.info.block_bytes);
    let budget = Budget::new(cfg.mem_blocks, block_bytes)?.with_tmp_dir(cfg.tmp_dir.clone());
    let opts = ExecOptions {
        budget,
        validate: cfg.validate,
    };
    let mut exec = execute_plan(Box::new(reader), &schema, &prep.input, workload, plan, Some(&prep.rel), &opts)?;
    let mut hash = ContentHash::default();
    let mut rows = 0;
    for r in exec.by_ref() {
        let r = r?;
        hash.add(&r);
        sink(&r)?;
        rows += 1;
    }
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let io = exec.total_io();
    Ok(RunReport {
        scheme: cfg.scheme.name().to_owned(),
        mem_blocks: cfg.mem_blocks,
        plan: plan.to_chain(table_name, workload),
        plan_json: plan.clone(),
        est_cost: plan.est_cost(),
        actual_io_blocks: io.total_blocks(),
        spill_bytes: io.bytes_written,
        wall_ms,
        planning_ms,
        rows,
        content_hash: hash.value(),
        steps: exec.reports(),
    })
}

//! Benchmark suites; each emits one report row per configuration.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use winchain_core::optimizer::{self, Scheme};
use winchain_core::order::ss_target_with_key;
use winchain_core::{AttrSeq, AttrSet, Plan, PlanStep, ReorderStep, Workload};

use crate::error::{EngineError, Result};
use crate::gen::{generate, GenSpec, OrderDirective};
use crate::queries::{query, random_workload};
use crate::runner::{prepare, run_plan, RunConfig, RunReport};
use crate::table::TableStats;

/// Largest workload the overhead suite hands to the exhaustive planner; at
/// eight functions a single plan can take minutes.
pub const OVERHEAD_BFO_MAX: usize = 7;

pub const SUITES: [&str; 7] = ["micro-fs-hs", "micro-ss", "q6", "q7", "q8", "q9", "overhead"];

pub const CSV_HEADER: [&str; 7] = ["query", "scheme", "mem_blocks", "est_cost", "actual_io_blocks", "wall_ms", "plan"];

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub query: String,
    pub scheme: String,
    pub mem_blocks: usize,
    pub est_cost: f64,
    pub actual_io_blocks: u64,
    pub wall_ms: f64,
    pub plan: String,
    #[serde(skip)]
    pub content_hash: u64,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// Where the datasets live; missing ones are generated.
    pub data_dir: PathBuf,
    pub rows: u64,
    pub seed: u64,
    pub block_bytes: usize,
    pub tmp_dir: Option<PathBuf>,
    /// Memory grants as fractions of the table size; suite defaults if unset.
    pub mem_fractions: Option<Vec<f64>>,
    /// Runs per configuration; the fastest is reported.
    pub repeats: usize,
    /// Distinct items; defaults to one per five rows.
    pub items: Option<u64>,
}

impl BenchConfig {
    pub fn new(data_dir: impl Into<PathBuf>, rows: u64) -> Self {
        BenchConfig {
            data_dir: data_dir.into(),
            rows,
            seed: 1,
            block_bytes: crate::mem::DEFAULT_BLOCK_BYTES,
            tmp_dir: None,
            mem_fractions: None,
            repeats: 1,
            items: None,
        }
    }

    fn spec(&self, order: OrderDirective) -> GenSpec {
        let mut g = GenSpec::web_sales(self.rows, self.seed).with_order(order);
        if let Some(items) = self.items {
            for c in &mut g.columns {
                if c.name == "item" {
                    c.distinct = items.max(1);
                }
            }
        }
        g
    }

    /// Path of a dataset, generating it (and its statistics) when absent or
    /// generated with other parameters.
    pub fn dataset(&self, order: OrderDirective) -> Result<PathBuf> {
        let suffix = match &order {
            OrderDirective::None => String::new(),
            OrderDirective::Sorted(a) => format!("_s_{a}"),
            OrderDirective::Grouped(a) => format!("_g_{a}"),
        };
        let spec = self.spec(order);
        let tag = format!("ws{suffix}_{}_{}_{}", self.rows, self.seed, self.block_bytes);
        std::fs::create_dir_all(&self.data_dir)?;
        let path = self.data_dir.join(format!("{tag}.wct"));
        let spec_path = self.data_dir.join(format!("{tag}.gen.json"));
        let spec_json = serde_json::to_string(&spec).expect("spec serializes");
        let current = std::fs::read_to_string(&spec_path).ok();
        if current.as_deref() != Some(spec_json.as_str()) || !path.exists() || TableStats::load(&path).is_err() {
            generate(&spec, &path, self.block_bytes)?;
            std::fs::write(&spec_path, spec_json)?;
        }
        Ok(path)
    }

    fn grid(&self, blocks: u64, default: &[f64]) -> Vec<usize> {
        let fractions = self.mem_fractions.as_deref().unwrap_or(default);
        let mut out: Vec<usize> = fractions.iter().map(|f| ((blocks as f64 * f).round() as usize).max(3)).collect();
        out.dedup();
        out
    }
}

/// Grid from 0.1% to 10% of the table.
pub const MICRO_GRID: [f64; 7] = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1];
/// Three grants around half a percent of the table.
pub const QUERY_GRID: [f64; 3] = [0.0035, 0.005, 0.01];

fn single(step: ReorderStep) -> Plan {
    Plan {
        steps: vec![PlanStep { reorder: step, func: 0, est_cost: 0.0 }],
    }
}

fn seq(names: &[&str]) -> AttrSeq {
    AttrSeq::new(names.iter().copied()).expect("distinct")
}

fn set(names: &[&str]) -> AttrSet {
    names.iter().copied().collect()
}

struct Job<'a> {
    query: &'a str,
    label: String,
    table: &'a Path,
    workload: &'a Workload,
    plan: Plan,
    mem_blocks: usize,
}

fn execute(cfg: &BenchConfig, job: Job) -> Result<BenchRow> {
    let mut run_cfg = RunConfig::new(Scheme::Cso, job.mem_blocks);
    run_cfg.block_bytes = Some(cfg.block_bytes);
    run_cfg.tmp_dir = cfg.tmp_dir.clone();
    let prep = prepare(job.table, &run_cfg)?;
    let mut plan = job.plan;
    // Estimated costs, step by step along the plan.
    let mut current = prep.input.clone();
    for s in &mut plan.steps {
        s.est_cost = s.reorder.cost(&current, &prep.rel).io_blocks;
        current = s.reorder.output(&current, Some(&prep.rel));
    }
    let mut best: Option<RunReport> = None;
    for _ in 0..cfg.repeats.max(1) {
        let r = run_plan(job.table, "ws", job.workload, &plan, &prep, &run_cfg, 0.0, Instant::now(), &mut |_| Ok(()))?;
        if best.as_ref().map_or(true, |b| r.wall_ms < b.wall_ms) {
            best = Some(r);
        }
    }
    let r = best.expect("at least one run");
    Ok(BenchRow {
        query: job.query.to_owned(),
        scheme: job.label,
        mem_blocks: job.mem_blocks,
        est_cost: r.est_cost,
        actual_io_blocks: r.actual_io_blocks,
        wall_ms: r.wall_ms,
        plan: r.plan,
        content_hash: r.content_hash,
    })
}

/// Runs a suite; `progress` sees each row as it completes.
pub fn run_suite(name: &str, cfg: &BenchConfig, mut progress: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    let mut push = |r: BenchRow, rows: &mut Vec<BenchRow>| {
        progress(&r);
        rows.push(r);
    };
    match name {
        "micro-fs-hs" => {
            let table = cfg.dataset(OrderDirective::None)?;
            let w = query("q1")?;
            let blocks = TableStats::load(&table)?.blocks;
            let key = seq(&["item", "time"]);
            for m in cfg.grid(blocks, &MICRO_GRID) {
                for (label, step) in [
                    ("fs", ReorderStep::Full { key: key.clone() }),
                    ("hs", ReorderStep::Hashed { hash: set(&["item"]), key: key.clone() }),
                ] {
                    let job = Job { query: "q1", label: label.into(), table: &table, workload: &w, plan: single(step), mem_blocks: m };
                    push(execute(cfg, job)?, &mut rows);
                }
            }
        }
        "micro-ss" => {
            let w = query("q4")?;
            let key = seq(&["quantity", "item"]);
            for (q, order) in [
                ("q4", OrderDirective::Sorted("quantity".into())),
                ("q5", OrderDirective::Grouped("quantity".into())),
            ] {
                let table = cfg.dataset(order)?;
                let stats = TableStats::load(&table)?;
                let target = ss_target_with_key(&stats.order, w.get(0), key.clone())
                    .ok_or_else(|| EngineError::format("segmented sort does not apply to the dataset"))?;
                for m in cfg.grid(stats.blocks, &MICRO_GRID) {
                    for (label, step) in [
                        ("fs", ReorderStep::Full { key: key.clone() }),
                        ("hs", ReorderStep::Hashed { hash: set(&["quantity"]), key: key.clone() }),
                        ("ss", ReorderStep::Segmented { key: key.clone(), alpha: target.alpha.clone() }),
                    ] {
                        let job = Job { query: q, label: label.into(), table: &table, workload: &w, plan: single(step), mem_blocks: m };
                        push(execute(cfg, job)?, &mut rows);
                    }
                }
            }
        }
        "q6" | "q7" | "q8" | "q9" => {
            let table = cfg.dataset(OrderDirective::None)?;
            let w = query(name)?;
            let blocks = TableStats::load(&table)?.blocks;
            for m in cfg.grid(blocks, &QUERY_GRID) {
                for scheme in Scheme::ALL {
                    let mut run_cfg = RunConfig::new(scheme, m);
                    run_cfg.block_bytes = Some(cfg.block_bytes);
                    let prep = prepare(&table, &run_cfg)?;
                    let plan = optimizer::plan(scheme, &prep.input, &w, &prep.rel)?;
                    let job = Job { query: name, label: scheme.name().into(), table: &table, workload: &w, plan, mem_blocks: m };
                    push(execute(cfg, job)?, &mut rows);
                }
            }
        }
        "overhead" => {
            let stats = crate::table::TableStats {
                rows: cfg.rows,
                blocks: (cfg.rows / 60).max(1),
                block_bytes: cfg.block_bytes,
                distinct: crate::queries::WS_ATTRS.iter().map(|a| ((*a).to_owned(), 100)).collect(),
                order: Default::default(),
            };
            let m = 64;
            let rel = stats.rel_stats(m);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for n in 6..=10 {
                let w = random_workload(&mut rng, n);
                for scheme in [Scheme::Cso, Scheme::Bfo] {
                    if scheme == Scheme::Bfo && n > OVERHEAD_BFO_MAX {
                        continue;
                    }
                    let start = Instant::now();
                    let plan = optimizer::plan(scheme, &Default::default(), &w, &rel)?;
                    let ms = start.elapsed().as_secs_f64() * 1e3;
                    push(
                        BenchRow {
                            query: format!("random-{n}"),
                            scheme: scheme.name().into(),
                            mem_blocks: m,
                            est_cost: plan.est_cost(),
                            actual_io_blocks: 0,
                            wall_ms: ms,
                            plan: plan.to_chain("ws", &w),
                            content_hash: 0,
                        },
                        &mut rows,
                    );
                }
            }
        }
        other => {
            return Err(EngineError::format(format!(
                "unknown suite `{other}`; expected one of {}",
                SUITES.join(", ")
            )))
        }
    }
    Ok(rows)
}

/// Groups of rows that must agree: same query and memory grant.
pub fn mismatches(rows: &[BenchRow]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        if a.content_hash == 0 {
            continue;
        }
        if let Some(b) = rows[..i].iter().find(|b| b.query == a.query && b.content_hash != 0) {
            if b.content_hash != a.content_hash {
                out.push(format!("{} {} (M={}) differs from {} (M={})", a.query, a.scheme, a.mem_blocks, b.scheme, b.mem_blocks));
            }
        }
    }
    out
}

pub fn write_report<W: Write>(out: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(|e| EngineError::format(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.query.clone(),
            r.scheme.clone(),
            r.mem_blocks.to_string(),
            format!("{:.0}", r.est_cost),
            r.actual_io_blocks.to_string(),
            format!("{:.3}", r.wall_ms),
            r.plan.clone(),
        ])
        .map_err(|e| EngineError::format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

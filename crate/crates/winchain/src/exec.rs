//! Runs a plan as a pipeline of reorder operators and window evaluators.
//!
//! Output rows are the input columns followed by one column per window
//! function, in declaration order. Every reorder step gets its own memory
//! budget and I/O counters.

use std::collections::VecDeque;

use winchain_core::value::{Column, KeyColumn, Row, Schema, ValueKind};
use winchain_core::window::WindowEval;
use winchain_core::{Plan, RelStats, ReorderStep, SegProp, Value, Workload};

use crate::error::{EngineError, Result};
use crate::hash::{bucket_count, hashed_sort};
use crate::mem::{Budget, IoSnapshot, IoStats, MemTracker, OpContext};
use crate::segment::{segmented_sort, UnitSpec};
use crate::sort::sort_all;
use crate::validate::SegPropValidator;

pub type RowStream = Box<dyn Iterator<Item = Result<Row>>>;

#[derive(Clone, Debug)]
pub struct ExecOptions {
    pub budget: Budget,
    /// Check the order every function sees (and the declared input order).
    pub validate: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct StepReport {
    pub index: usize,
    pub op: &'static str,
    pub func: String,
    pub peak_blocks: usize,
    pub io: IoSnapshot,
}

struct StepProbe {
    op: &'static str,
    func: String,
    mem: MemTracker,
    io: IoStats,
}

pub struct Execution {
    schema: Schema,
    stream: RowStream,
    probes: Vec<StepProbe>,
    output_order: SegProp,
}

impl Execution {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Order of the output, as the plan derives it.
    pub fn output_order(&self) -> &SegProp {
        &self.output_order
    }

    /// Per-step figures; complete once the stream is drained.
    pub fn reports(&self) -> Vec<StepReport> {
        self.probes
            .iter()
            .enumerate()
            .map(|(index, p)| StepReport {
                index,
                op: p.op,
                func: p.func.clone(),
                peak_blocks: p.mem.peak_blocks(),
                io: p.io.snapshot(),
            })
            .collect()
    }

    pub fn total_io(&self) -> IoSnapshot {
        self.probes.iter().fold(IoSnapshot::default(), |acc, p| {
            let s = p.io.snapshot();
            IoSnapshot {
                blocks_written: acc.blocks_written + s.blocks_written,
                blocks_read: acc.blocks_read + s.blocks_read,
                bytes_written: acc.bytes_written + s.bytes_written,
                files_created: acc.files_created + s.files_created,
                merge_passes: acc.merge_passes + s.merge_passes,
            }
        })
    }

    /// Drains the stream.
    pub fn collect_rows(&mut self) -> Result<Vec<Row>> {
        self.stream.by_ref().collect()
    }

    /// Drains the stream, keeping only the row count.
    pub fn drain(&mut self) -> Result<u64> {
        let mut n = 0;
        for r in self.stream.by_ref() {
            r?;
            n += 1;
        }
        Ok(n)
    }
}

impl Iterator for Execution {
    type Item = Result<Row>;

    fn next(&mut self) -> Option<Result<Row>> {
        self.stream.next()
    }
}

/// Schema of the rows an execution produces.
pub fn output_schema(table: &Schema, workload: &Workload) -> Result<Schema> {
    let mut cols = table.columns().to_vec();
    cols.extend(workload.funcs().iter().map(|wf| Column {
        name: wf.name().to_owned(),
        kind: ValueKind::NullableInt,
    }));
    Ok(Schema::new(cols)?)
}

/// Builds the pipeline. Full and hashed sorts consume their input while the
/// pipeline is built; everything else runs as the result is pulled.
pub fn execute_plan(
    input: RowStream,
    table: &Schema,
    input_order: &SegProp,
    workload: &Workload,
    plan: &Plan,
    stats: Option<&RelStats>,
    opts: &ExecOptions,
) -> Result<Execution> {
    plan.validate(input_order, workload)?;
    let schema = output_schema(table, workload)?;
    let width = table.len();
    let extra = workload.len();
    let mut stream: RowStream = Box::new(input.map(move |r| {
        r.map(|mut row| {
            row.resize(width + extra, Value::Null);
            row
        })
    }));
    if opts.validate {
        stream = validated(stream, SegPropValidator::new(input_order, &schema)?, usize::MAX);
    }
    let mut current = input_order.clone();
    let mut probes = Vec::with_capacity(plan.steps.len());
    for (i, step) in plan.steps.iter().enumerate() {
        let wf = workload.get(step.func);
        let io = IoStats::new();
        let ctx = OpContext::new(opts.budget.clone(), io.clone());
        probes.push(StepProbe {
            op: match step.reorder.label() {
                "" => "none",
                l => l,
            },
            func: wf.name().to_owned(),
            mem: ctx.mem.clone(),
            io,
        });
        stream = reorder(stream, &step.reorder, &current, &schema, stats, ctx).map_err(|e| e.at_step(i))?;
        current = step.reorder.output(&current, stats);
        if opts.validate {
            stream = validated(stream, SegPropValidator::new(&current, &schema)?, i);
        }
        let eval = WindowEval::new(wf, &schema, width + step.func)?;
        stream = Box::new(WindowStage {
            input: stream,
            eval,
            out: Vec::new(),
            ready: VecDeque::new(),
            index: i,
            done: false,
        });
    }
    Ok(Execution {
        schema,
        stream,
        probes,
        output_order: current,
    })
}

fn reorder(
    input: RowStream,
    step: &ReorderStep,
    current: &SegProp,
    schema: &Schema,
    stats: Option<&RelStats>,
    ctx: OpContext,
) -> Result<RowStream> {
    Ok(match step {
        ReorderStep::None => input,
        ReorderStep::Full { key } => Box::new(sort_all(input, schema.key_columns(key)?, ctx)?),
        ReorderStep::Hashed { hash, key } => {
            let cols = hash
                .iter()
                .map(|a| schema.require(a))
                .collect::<winchain_core::Result<Vec<_>>>()?;
            let distinct = match stats {
                Some(s) => s.distinct_of(hash) as u64,
                None => u64::MAX,
            };
            let n = bucket_count(distinct, ctx.budget.mem_blocks);
            Box::new(hashed_sort(input, cols, schema.key_columns(key)?, n, ctx)?)
        }
        ReorderStep::Segmented { key, alpha } => {
            let full = schema.key_columns(key)?;
            let alpha_cols: Vec<usize> = full[..alpha.len()].iter().map(|k| k.index).collect();
            let beta: Vec<KeyColumn> = full[alpha.len()..].to_vec();
            let grouped_x = if current.grouped {
                current
                    .x
                    .iter()
                    .map(|a| schema.require(a))
                    .collect::<winchain_core::Result<Vec<_>>>()?
            } else {
                Vec::new()
            };
            let spec = UnitSpec {
                alpha: alpha_cols,
                y: schema.key_columns(&current.y)?,
                grouped_x,
            };
            Box::new(segmented_sort(input, spec, beta, ctx))
        }
    })
}

fn validated(input: RowStream, mut v: SegPropValidator, step: usize) -> RowStream {
    Box::new(input.map(move |r| {
        let row = r?;
        v.check(&row).map_err(|e| if step == usize::MAX { e } else { e.at_step(step) })?;
        Ok(row)
    }))
}

struct WindowStage {
    input: RowStream,
    eval: WindowEval,
    out: Vec<Row>,
    ready: VecDeque<Row>,
    index: usize,
    done: bool,
}

impl Iterator for WindowStage {
    type Item = Result<Row>;

    fn next(&mut self) -> Option<Result<Row>> {
        loop {
            if let Some(r) = self.ready.pop_front() {
                return Some(Ok(r));
            }
            if self.done {
                return None;
            }
            match self.input.next() {
                Some(Ok(row)) => {
                    if let Err(e) = self.eval.push(row, &mut self.out) {
                        self.done = true;
                        return Some(Err(EngineError::from(e).at_step(self.index)));
                    }
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e.at_step(self.index)));
                }
                None => {
                    self.eval.finish(&mut self.out);
                    self.done = true;
                }
            }
            self.ready.extend(self.out.drain(..));
        }
    }
}

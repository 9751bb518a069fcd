//! External merge sort.
//!
//! Rows are buffered until the workspace is full. If the input ends first
//! it is sorted in memory; otherwise replacement selection turns the input
//! into runs of about twice the workspace, and runs are merged `M - 1` at a
//! time until one final streaming merge remains. Ties keep input order:
//! every row carries its arrival number, which is spilled with it.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use winchain_core::value::{KeyColumn, Row, Value};

use crate::block::{RunFile, SpillReader, SpillWriter};
use crate::codec::{encoded_len, key_bytes};
use crate::error::{EngineError, Result};
use crate::mem::{MemTracker, OpContext};

/// Bytes a buffered row is charged: its record in a block.
pub fn charged_bytes(row: &[Value]) -> usize {
    4 + encoded_len(row)
}

#[derive(Debug)]
pub struct Entry {
    pub key: Vec<u8>,
    pub seq: u64,
    pub row: Row,
    pub bytes: usize,
}

impl Entry {
    pub fn new(row: Row, key: &[KeyColumn], seq: u64) -> Self {
        Entry {
            key: key_bytes(&row, key),
            seq,
            bytes: charged_bytes(&row),
            row,
        }
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.seq == other.seq
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key).then(self.seq.cmp(&other.seq))
    }
}

struct Tagged {
    run: u64,
    entry: Entry,
}

impl PartialEq for Tagged {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Tagged {}

impl PartialOrd for Tagged {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Tagged {
    fn cmp(&self, other: &Self) -> Ordering {
        self.run.cmp(&other.run).then_with(|| self.entry.cmp(&other.entry))
    }
}

struct Selection {
    heap: BinaryHeap<Reverse<Tagged>>,
    heap_bytes: usize,
    run: u64,
    writer: Option<SpillWriter>,
    last: Option<(Vec<u8>, u64)>,
}

/// Push-based sorter; [`Sorter::finish`] yields the sorted stream.
pub struct Sorter {
    ctx: OpContext,
    key: Vec<KeyColumn>,
    cap: usize,
    buf: Vec<Entry>,
    buf_bytes: usize,
    seq: u64,
    selection: Option<Selection>,
    runs: Vec<RunFile>,
}

impl Sorter {
    /// The workspace leaves one block for input and one for output.
    pub fn new(key: Vec<KeyColumn>, ctx: OpContext) -> Self {
        let cap = ctx.workspace_bytes(2);
        Sorter::with_workspace(key, ctx, cap)
    }

    pub fn with_workspace(key: Vec<KeyColumn>, ctx: OpContext, cap: usize) -> Self {
        Sorter {
            ctx,
            key,
            cap,
            buf: Vec::new(),
            buf_bytes: 0,
            seq: 0,
            selection: None,
            runs: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) -> Result<()> {
        let e = Entry::new(row, &self.key, self.seq);
        self.seq += 1;
        self.push_entry(e)
    }

    /// Adds an entry whose `seq` the caller assigned.
    pub fn push_entry(&mut self, e: Entry) -> Result<()> {
        if self.selection.is_none() {
            if self.buf_bytes + e.bytes <= self.cap || self.buf.is_empty() {
                self.ctx.mem.charge(e.bytes);
                self.buf_bytes += e.bytes;
                self.buf.push(e);
                return Ok(());
            }
            self.start_selection()?;
        }
        self.select(e)
    }

    fn start_selection(&mut self) -> Result<()> {
        let heap = self
            .buf
            .drain(..)
            .map(|entry| Reverse(Tagged { run: 0, entry }))
            .collect();
        self.selection = Some(Selection {
            heap,
            heap_bytes: self.buf_bytes,
            run: 0,
            writer: Some(SpillWriter::create(&self.ctx)?),
            last: None,
        });
        self.buf_bytes = 0;
        Ok(())
    }

    fn select(&mut self, e: Entry) -> Result<()> {
        loop {
            let sel = self.selection.as_ref().expect("selection started");
            if sel.heap.is_empty() || sel.heap_bytes + e.bytes <= self.cap {
                break;
            }
            self.emit_min()?;
        }
        let sel = self.selection.as_mut().expect("selection started");
        let run = match &sel.last {
            Some((k, s)) if (&e.key, e.seq) < (k, *s) => sel.run + 1,
            _ => sel.run,
        };
        self.ctx.mem.charge(e.bytes);
        sel.heap_bytes += e.bytes;
        sel.heap.push(Reverse(Tagged { run, entry: e }));
        Ok(())
    }

    fn emit_min(&mut self) -> Result<()> {
        let sel = self.selection.as_mut().expect("selection started");
        let Some(Reverse(Tagged { run, entry })) = sel.heap.pop() else {
            return Ok(());
        };
        if run != sel.run {
            if let Some(w) = sel.writer.take() {
                self.runs.push(w.finish()?);
            }
            sel.writer = Some(SpillWriter::create(&self.ctx)?);
            sel.run = run;
        }
        let mut row = entry.row;
        row.push(Value::Int(entry.seq as i64));
        sel.writer.as_mut().expect("writer open").write_row(&row)?;
        sel.heap_bytes -= entry.bytes;
        self.ctx.mem.release(entry.bytes);
        sel.last = Some((entry.key, entry.seq));
        Ok(())
    }

    /// Number of rows pushed so far.
    pub fn len(&self) -> u64 {
        self.seq
    }

    pub fn is_empty(&self) -> bool {
        self.seq == 0
    }

    pub fn finish(mut self) -> Result<SortedStream> {
        if self.selection.is_none() {
            let mut buf = std::mem::take(&mut self.buf);
            buf.sort_unstable();
            return Ok(SortedStream::Memory {
                rows: buf.into_iter(),
                mem: self.ctx.mem.clone(),
            });
        }
        while !self.selection.as_ref().expect("selection started").heap.is_empty() {
            self.emit_min()?;
        }
        let mut sel = self.selection.take().expect("selection started");
        if let Some(w) = sel.writer.take() {
            self.runs.push(w.finish()?);
        }
        merge_runs(std::mem::take(&mut self.runs), &self.key, &self.ctx)
    }
}

/// Merges `runs` down to at most `M - 1` and streams the final merge.
pub fn merge_runs(mut runs: Vec<RunFile>, key: &[KeyColumn], ctx: &OpContext) -> Result<SortedStream> {
    let fan_in = ctx.budget.merge_order().max(2);
    while runs.len() > fan_in {
        let mut next = Vec::with_capacity(runs.len().div_ceil(fan_in));
        let mut rest = runs.into_iter();
        loop {
            let group: Vec<RunFile> = rest.by_ref().take(fan_in).collect();
            if group.is_empty() {
                break;
            }
            if group.len() == 1 {
                next.extend(group);
                continue;
            }
            let mut merger = Merger::new(group, key, ctx)?;
            let mut w = SpillWriter::create(ctx)?;
            while let Some((row, seq)) = merger.next_with_seq()? {
                let mut row = row;
                row.push(Value::Int(seq as i64));
                w.write_row(&row)?;
            }
            drop(merger);
            next.push(w.finish()?);
        }
        ctx.io.merge_pass();
        runs = next;
    }
    match runs.len() {
        0 => Ok(SortedStream::Memory {
            rows: Vec::new().into_iter(),
            mem: ctx.mem.clone(),
        }),
        1 => {
            let run = runs.pop().expect("one run");
            Ok(SortedStream::Run(SpillReader::open(run, ctx)))
        }
        _ => {
            ctx.io.merge_pass();
            Ok(SortedStream::Merge(Merger::new(runs, key, ctx)?))
        }
    }
}

fn split_seq(mut row: Row) -> Result<(Row, u64)> {
    match row.pop() {
        Some(Value::Int(s)) => Ok((row, s as u64)),
        _ => Err(EngineError::format("spilled row lacks its sequence number")),
    }
}

pub struct Merger {
    sources: Vec<SpillReader>,
    heap: BinaryHeap<Reverse<(Entry, usize)>>,
    key: Vec<KeyColumn>,
}

impl Merger {
    fn new(runs: Vec<RunFile>, key: &[KeyColumn], ctx: &OpContext) -> Result<Self> {
        let mut m = Merger {
            sources: runs.into_iter().map(|r| SpillReader::open(r, ctx)).collect(),
            heap: BinaryHeap::new(),
            key: key.to_vec(),
        };
        for i in 0..m.sources.len() {
            m.refill(i)?;
        }
        Ok(m)
    }

    fn refill(&mut self, i: usize) -> Result<()> {
        if let Some(row) = self.sources[i].next_row()? {
            let (row, seq) = split_seq(row)?;
            let e = Entry::new(row, &self.key, seq);
            self.heap.push(Reverse((e, i)));
        }
        Ok(())
    }

    fn next_with_seq(&mut self) -> Result<Option<(Row, u64)>> {
        let Some(Reverse((e, i))) = self.heap.pop() else {
            return Ok(None);
        };
        self.refill(i)?;
        Ok(Some((e.row, e.seq)))
    }
}

pub enum SortedStream {
    Memory {
        rows: std::vec::IntoIter<Entry>,
        mem: MemTracker,
    },
    Run(SpillReader),
    Merge(Merger),
}

impl Iterator for SortedStream {
    type Item = Result<Row>;

    fn next(&mut self) -> Option<Result<Row>> {
        match self {
            SortedStream::Memory { rows, mem } => rows.next().map(|e| {
                mem.release(e.bytes);
                Ok(e.row)
            }),
            SortedStream::Run(r) => r.next_row().and_then(|o| o.map(split_seq).transpose()).map(|o| o.map(|(row, _)| row)).transpose(),
            SortedStream::Merge(m) => m.next_with_seq().map(|o| o.map(|(row, _)| row)).transpose(),
        }
    }
}

impl Drop for SortedStream {
    fn drop(&mut self) {
        if let SortedStream::Memory { rows, mem } = self {
            for e in rows {
                mem.release(e.bytes);
            }
        }
    }
}

/// Sorts `rows` with one budget and returns the sorted rows.
pub fn sort_all<I>(rows: I, key: Vec<KeyColumn>, ctx: OpContext) -> Result<SortedStream>
where
    I: IntoIterator<Item = Result<Row>>,
{
    let mut s = Sorter::new(key, ctx);
    for r in rows {
        s.push(r?)?;
    }
    s.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mem::{Budget, IoStats};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use winchain_core::value::cmp_rows;

    fn rows(n: usize, distinct: i64, seed: u64) -> Vec<Row> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| vec![Value::Int(rng.gen_range(0..distinct)), Value::Int(i as i64)])
            .collect()
    }

    fn check(input: Vec<Row>, m: usize, bb: usize, desc: bool) -> (IoStats, usize) {
        let key = vec![KeyColumn { index: 0, descending: desc }];
        let io = IoStats::new();
        let ctx = OpContext::new(Budget::new(m, bb).unwrap(), io.clone());
        let mem = ctx.mem.clone();
        let out: Vec<Row> = sort_all(input.iter().cloned().map(Ok), key.clone(), ctx)
            .unwrap()
            .map(|r| r.unwrap())
            .collect();
        let mut expected = input;
        expected.sort_by(|a, b| cmp_rows(a, b, &key));
        assert_eq!(out, expected);
        assert_eq!(mem.blocks_in_use(), 0);
        (io, mem.peak_blocks())
    }

    #[test]
    fn in_memory_sort_is_stable() {
        let (io, _) = check(rows(500, 7, 1), 64, 8192, false);
        assert_eq!(io.snapshot().total_blocks(), 0);
    }

    #[test]
    fn external_sort_is_stable_and_bounded() {
        for (m, desc) in [(3, false), (4, true), (8, false)] {
            let (io, peak) = check(rows(5000, 50, m as u64), m, 128, desc);
            assert!(io.snapshot().blocks_written > 0);
            assert!(peak <= m, "peak {peak} > {m}");
        }
    }

    #[test]
    fn pass_count_follows_the_merge_order() {
        // 4096 input blocks, 32 memory blocks: runs of about 60 blocks need
        // one intermediate pass and the final streaming pass.
        let bb = 256;
        let per_block = bb / (4 + encoded_len(&[Value::Int(0), Value::Int(0)]));
        let n = 4096 * per_block;
        let (io, peak) = check(rows(n, 1 << 40, 9), 32, bb, false);
        assert_eq!(io.snapshot().merge_passes, 2);
        assert!(peak <= 32);
    }
}

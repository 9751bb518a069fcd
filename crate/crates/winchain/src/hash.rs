//! Hashed sort: partition rows into buckets on the hash key, then sort each
//! bucket on the full key.
//!
//! Buckets live in memory until the workspace is full; then the largest
//! resident bucket is written out and keeps its writer open for later rows.
//! Resident buckets are emitted first, then spilled ones in index order. A
//! spilled bucket that fits the workspace is sorted in memory, a larger one
//! externally.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use winchain_core::value::{KeyColumn, Row, Value};

use crate::block::{RunFile, SpillReader, SpillWriter};
use crate::codec::key_bytes;
use crate::error::{EngineError, Result};
use crate::mem::OpContext;
use crate::sort::{Entry, SortedStream, Sorter};

/// Number of buckets for `distinct` hash-key values under `mem_blocks`.
pub fn bucket_count(distinct: u64, mem_blocks: usize) -> usize {
    (distinct.max(1) as usize).min(mem_blocks.saturating_sub(2)).max(1)
}

#[derive(Default)]
struct Bucket {
    entries: Vec<Entry>,
    bytes: usize,
    writer: Option<SpillWriter>,
    run: Option<RunFile>,
    /// Row bytes written to the spill, seq excluded.
    spilled_bytes: usize,
}

/// Partitions `input` and returns the bucket-by-bucket sorted stream.
pub fn hashed_sort<I>(
    input: I,
    hash: Vec<usize>,
    key: Vec<KeyColumn>,
    buckets: usize,
    ctx: OpContext,
) -> Result<HashedStream>
where
    I: IntoIterator<Item = Result<Row>>,
{
    let hash_key: Vec<KeyColumn> = hash
        .iter()
        .map(|&index| KeyColumn { index, descending: false })
        .collect();
    let n = buckets.max(1);
    let mut parts: Vec<Bucket> = (0..n).map(|_| Bucket::default()).collect();
    // Resident rows and open writers stay within M - 1 blocks; opening one
    // more writer to spill a bucket may touch M.
    let limit = ctx.budget.mem_blocks - 1;
    for (seq, row) in input.into_iter().enumerate() {
        let row = row?;
        let mut h = DefaultHasher::new();
        h.write(&key_bytes(&row, &hash_key));
        let b = (h.finish() % n as u64) as usize;
        let e = Entry::new(row, &key, seq as u64);
        if parts[b].writer.is_some() {
            spill_entry(&mut parts[b], e)?;
            continue;
        }
        while ctx.mem.blocks_if_charged(e.bytes) > limit {
            let Some(victim) = largest_resident(&parts) else {
                break;
            };
            spill_bucket(&mut parts[victim], &ctx)?;
        }
        if parts[b].writer.is_some() {
            spill_entry(&mut parts[b], e)?;
        } else {
            ctx.mem.charge(e.bytes);
            parts[b].bytes += e.bytes;
            parts[b].entries.push(e);
        }
    }
    for p in &mut parts {
        if let Some(w) = p.writer.take() {
            p.run = Some(w.finish()?);
        }
    }
    let mut resident = Vec::new();
    let mut spilled = Vec::new();
    for p in parts {
        match p.run {
            Some(run) => spilled.push((run, p.spilled_bytes)),
            None => {
                if !p.entries.is_empty() {
                    resident.push(p.entries);
                }
            }
        }
    }
    resident.reverse();
    spilled.reverse();
    Ok(HashedStream {
        ctx,
        key,
        resident,
        spilled,
        current: None,
    })
}

fn largest_resident(parts: &[Bucket]) -> Option<usize> {
    parts
        .iter()
        .enumerate()
        .filter(|(_, p)| p.writer.is_none() && p.bytes > 0)
        .max_by_key(|(i, p)| (p.bytes, std::cmp::Reverse(*i)))
        .map(|(i, _)| i)
}

fn spill_bucket(p: &mut Bucket, ctx: &OpContext) -> Result<()> {
    p.writer = Some(SpillWriter::create(ctx)?);
    for e in std::mem::take(&mut p.entries) {
        ctx.mem.release(e.bytes);
        spill_entry(p, e)?;
    }
    p.bytes = 0;
    Ok(())
}

fn spill_entry(p: &mut Bucket, e: Entry) -> Result<()> {
    p.spilled_bytes += e.bytes;
    let mut row = e.row;
    row.push(Value::Int(e.seq as i64));
    p.writer.as_mut().expect("bucket is spilling").write_row(&row)
}

pub struct HashedStream {
    ctx: OpContext,
    key: Vec<KeyColumn>,
    /// Pending buckets, last to emit first.
    resident: Vec<Vec<Entry>>,
    spilled: Vec<(RunFile, usize)>,
    current: Option<SortedStream>,
}

impl HashedStream {
    fn next_bucket(&mut self) -> Result<Option<SortedStream>> {
        if let Some(mut entries) = self.resident.pop() {
            entries.sort_unstable();
            return Ok(Some(SortedStream::Memory {
                rows: entries.into_iter(),
                mem: self.ctx.mem.clone(),
            }));
        }
        let Some((run, bytes)) = self.spilled.pop() else {
            return Ok(None);
        };
        let mut reader = SpillReader::open(run, &self.ctx);
        let fits = bytes <= self.ctx.workspace_bytes(2);
        let mut sorter = Sorter::new(self.key.clone(), self.ctx.clone());
        let mut entries = Vec::new();
        while let Some(mut row) = reader.next_row()? {
            let seq = match row.pop() {
                Some(Value::Int(s)) => s as u64,
                _ => return Err(EngineError::format("spilled row lacks its sequence number")),
            };
            let e = Entry::new(row, &self.key, seq);
            if fits {
                self.ctx.mem.charge(e.bytes);
                entries.push(e);
            } else {
                sorter.push_entry(e)?;
            }
        }
        if fits {
            entries.sort_unstable();
            Ok(Some(SortedStream::Memory {
                rows: entries.into_iter(),
                mem: self.ctx.mem.clone(),
            }))
        } else {
            sorter.finish().map(Some)
        }
    }
}

impl Iterator for HashedStream {
    type Item = Result<Row>;

    fn next(&mut self) -> Option<Result<Row>> {
        loop {
            if let Some(cur) = &mut self.current {
                match cur.next() {
                    Some(r) => return Some(r),
                    None => self.current = None,
                }
            }
            match self.next_bucket() {
                Ok(Some(s)) => self.current = Some(s),
                Ok(None) => return None,
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

impl Drop for HashedStream {
    fn drop(&mut self) {
        for bucket in self.resident.drain(..) {
            for e in bucket {
                self.ctx.mem.release(e.bytes);
            }
        }
    }
}

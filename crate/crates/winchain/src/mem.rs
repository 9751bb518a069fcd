//! Memory budgets and I/O counters shared by the operators.
//!
//! Memory is counted in blocks: buffered rows by their encoded size, and
//! every open spill reader or writer as one whole block for its buffer.
//! Each operator instance gets its own tracker, so the peak it records is
//! the operator's own footprint.

use std::cell::Cell;
use std::path::PathBuf;
use std::rc::Rc;

use crate::error::{EngineError, Result};

pub const DEFAULT_BLOCK_BYTES: usize = 8192;

/// Memory granted to one reordering operator.
#[derive(Clone, Debug)]
pub struct Budget {
    pub mem_blocks: usize,
    pub block_bytes: usize,
    /// Where spill runs go; the system temp dir if unset.
    pub tmp_dir: Option<PathBuf>,
}

impl Budget {
    pub fn new(mem_blocks: usize, block_bytes: usize) -> Result<Self> {
        if mem_blocks < 3 {
            return Err(EngineError::Core(winchain_core::Error::InvalidArgument(format!(
                "memory budget of {mem_blocks} blocks is below the minimum of 3"
            ))));
        }
        if block_bytes < 64 {
            return Err(EngineError::Core(winchain_core::Error::InvalidArgument(format!(
                "block size of {block_bytes} bytes is below the minimum of 64"
            ))));
        }
        Ok(Budget {
            mem_blocks,
            block_bytes,
            tmp_dir: None,
        })
    }

    pub fn with_tmp_dir(mut self, dir: Option<PathBuf>) -> Self {
        self.tmp_dir = dir;
        self
    }

    /// Merge fan-in: every block but the output buffer.
    pub fn merge_order(&self) -> usize {
        self.mem_blocks - 1
    }
}

#[derive(Debug, Default)]
struct TrackerState {
    bytes: Cell<usize>,
    io_buffers: Cell<usize>,
    peak_blocks: Cell<usize>,
}

#[derive(Clone, Debug)]
pub struct MemTracker {
    block_bytes: usize,
    state: Rc<TrackerState>,
}

impl MemTracker {
    pub fn new(block_bytes: usize) -> Self {
        MemTracker {
            block_bytes,
            state: Rc::default(),
        }
    }

    pub fn block_bytes(&self) -> usize {
        self.block_bytes
    }

    pub fn blocks_in_use(&self) -> usize {
        self.state.bytes.get().div_ceil(self.block_bytes) + self.state.io_buffers.get()
    }

    pub fn bytes(&self) -> usize {
        self.state.bytes.get()
    }

    /// Blocks in use if `bytes` more were charged.
    pub fn blocks_if_charged(&self, bytes: usize) -> usize {
        (self.state.bytes.get() + bytes).div_ceil(self.block_bytes) + self.state.io_buffers.get()
    }

    pub fn peak_blocks(&self) -> usize {
        self.state.peak_blocks.get()
    }

    fn note(&self) {
        let now = self.blocks_in_use();
        if now > self.state.peak_blocks.get() {
            self.state.peak_blocks.set(now);
        }
    }

    pub fn charge(&self, bytes: usize) {
        self.state.bytes.set(self.state.bytes.get() + bytes);
        self.note();
    }

    pub fn release(&self, bytes: usize) {
        let now = self.state.bytes.get();
        debug_assert!(bytes <= now, "releasing more than was charged");
        self.state.bytes.set(now.saturating_sub(bytes));
    }

    pub fn open_buffer(&self) {
        self.state.io_buffers.set(self.state.io_buffers.get() + 1);
        self.note();
    }

    pub fn close_buffer(&self) {
        let now = self.state.io_buffers.get();
        debug_assert!(now > 0, "closing a buffer that was never opened");
        self.state.io_buffers.set(now.saturating_sub(1));
    }
}

#[derive(Debug, Default)]
struct IoState {
    blocks_written: Cell<u64>,
    blocks_read: Cell<u64>,
    bytes_written: Cell<u64>,
    files_created: Cell<u64>,
    merge_passes: Cell<u64>,
}

/// Spill I/O counters. Clones share the same counters.
#[derive(Clone, Debug, Default)]
pub struct IoStats {
    state: Rc<IoState>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct IoSnapshot {
    pub blocks_written: u64,
    pub blocks_read: u64,
    pub bytes_written: u64,
    pub files_created: u64,
    pub merge_passes: u64,
}

impl IoSnapshot {
    pub fn total_blocks(&self) -> u64 {
        self.blocks_written + self.blocks_read
    }
}

impl std::ops::Sub for IoSnapshot {
    type Output = IoSnapshot;

    fn sub(self, rhs: Self) -> Self {
        IoSnapshot {
            blocks_written: self.blocks_written - rhs.blocks_written,
            blocks_read: self.blocks_read - rhs.blocks_read,
            bytes_written: self.bytes_written - rhs.bytes_written,
            files_created: self.files_created - rhs.files_created,
            merge_passes: self.merge_passes - rhs.merge_passes,
        }
    }
}

impl IoStats {
    pub fn new() -> Self {
        IoStats::default()
    }

    fn bump(c: &Cell<u64>, by: u64) {
        c.set(c.get() + by);
    }

    pub fn wrote_block(&self, bytes: usize) {
        Self::bump(&self.state.blocks_written, 1);
        Self::bump(&self.state.bytes_written, bytes as u64);
    }

    pub fn read_block(&self) {
        Self::bump(&self.state.blocks_read, 1);
    }

    pub fn created_file(&self) {
        Self::bump(&self.state.files_created, 1);
    }

    pub fn merge_pass(&self) {
        Self::bump(&self.state.merge_passes, 1);
    }

    pub fn snapshot(&self) -> IoSnapshot {
        IoSnapshot {
            blocks_written: self.state.blocks_written.get(),
            blocks_read: self.state.blocks_read.get(),
            bytes_written: self.state.bytes_written.get(),
            files_created: self.state.files_created.get(),
            merge_passes: self.state.merge_passes.get(),
        }
    }
}

/// Everything an operator instance needs besides its input.
#[derive(Clone, Debug)]
pub struct OpContext {
    pub budget: Budget,
    pub mem: MemTracker,
    pub io: IoStats,
}

impl OpContext {
    /// A fresh tracker for `budget`, sharing `io`.
    pub fn new(budget: Budget, io: IoStats) -> Self {
        let mem = MemTracker::new(budget.block_bytes);
        OpContext { budget, mem, io }
    }

    /// Bytes of rows the operator may hold while `io_buffers` buffers are
    /// open.
    pub fn workspace_bytes(&self, io_buffers: usize) -> usize {
        self.budget.mem_blocks.saturating_sub(io_buffers) * self.budget.block_bytes
    }
}

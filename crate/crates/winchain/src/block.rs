//! Block-aligned row files and the spill runs built on them.
//!
//! A block holds whole records, each a little-endian `u32` length followed
//! by an encoded row. A zero length (or fewer than four bytes left) ends
//! the block; the rest is padding. Rows never straddle blocks, so a row
//! larger than a block cannot be stored.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};

use winchain_core::value::{Row, Value};

use crate::codec::{decode_row, encode_row, encoded_len};
use crate::error::{EngineError, Result};
use crate::mem::{IoStats, MemTracker, OpContext};

pub struct BlockWriter<W: Write> {
    inner: W,
    block: Vec<u8>,
    block_bytes: usize,
    blocks: u64,
    rows: u64,
    io: Option<IoStats>,
}

impl<W: Write> BlockWriter<W> {
    pub fn new(inner: W, block_bytes: usize, io: Option<IoStats>) -> Self {
        BlockWriter {
            inner,
            block: Vec::with_capacity(block_bytes),
            block_bytes,
            blocks: 0,
            rows: 0,
            io,
        }
    }

    pub fn write_row(&mut self, row: &[Value]) -> Result<()> {
        let len = encoded_len(row);
        if 4 + len > self.block_bytes {
            return Err(EngineError::format(format!(
                "a row of {len} bytes does not fit a {}-byte block",
                self.block_bytes
            )));
        }
        if self.block.len() + 4 + len > self.block_bytes {
            self.flush_block()?;
        }
        self.block.extend_from_slice(&(len as u32).to_le_bytes());
        encode_row(row, &mut self.block);
        self.rows += 1;
        Ok(())
    }

    fn flush_block(&mut self) -> Result<()> {
        if self.block.is_empty() {
            return Ok(());
        }
        let used = self.block.len();
        self.block.resize(self.block_bytes, 0);
        self.inner.write_all(&self.block)?;
        self.block.clear();
        self.blocks += 1;
        if let Some(io) = &self.io {
            io.wrote_block(used);
        }
        Ok(())
    }

    /// Flushes the last partial block; returns the writer, blocks and rows.
    pub fn finish(mut self) -> Result<(W, u64, u64)> {
        self.flush_block()?;
        self.inner.flush()?;
        Ok((self.inner, self.blocks, self.rows))
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }
}

pub struct BlockReader<R: Read> {
    inner: R,
    block: Vec<u8>,
    pos: usize,
    remaining_blocks: u64,
    io: Option<IoStats>,
}

impl<R: Read> BlockReader<R> {
    pub fn new(inner: R, block_bytes: usize, blocks: u64, io: Option<IoStats>) -> Self {
        BlockReader {
            inner,
            block: vec![0; block_bytes],
            pos: block_bytes,
            remaining_blocks: blocks,
            io,
        }
    }

    pub fn next_row(&mut self) -> Result<Option<Row>> {
        loop {
            if self.pos + 4 <= self.block.len() {
                let len = u32::from_le_bytes(self.block[self.pos..self.pos + 4].try_into().expect("4 bytes")) as usize;
                if len > 0 {
                    let start = self.pos + 4;
                    let end = start + len;
                    if end > self.block.len() {
                        return Err(EngineError::format("record crosses a block boundary"));
                    }
                    self.pos = end;
                    return decode_row(&self.block[start..end]).map(Some);
                }
            }
            if self.remaining_blocks == 0 {
                return Ok(None);
            }
            self.inner.read_exact(&mut self.block)?;
            self.remaining_blocks -= 1;
            self.pos = 0;
            if let Some(io) = &self.io {
                io.read_block();
            }
        }
    }
}

/// A finished spill run.
pub struct RunFile {
    file: File,
    pub blocks: u64,
    pub rows: u64,
}

/// Writes a spill run into an anonymous temporary file, holding one block
/// of the operator's memory while open.
pub struct SpillWriter {
    writer: BlockWriter<BufWriter<File>>,
    mem: MemTracker,
}

impl SpillWriter {
    pub fn create(ctx: &OpContext) -> Result<Self> {
        let file = match &ctx.budget.tmp_dir {
            Some(dir) => tempfile::tempfile_in(dir)?,
            None => tempfile::tempfile()?,
        };
        ctx.io.created_file();
        ctx.mem.open_buffer();
        let bb = ctx.budget.block_bytes;
        Ok(SpillWriter {
            writer: BlockWriter::new(BufWriter::with_capacity(bb, file), bb, Some(ctx.io.clone())),
            mem: ctx.mem.clone(),
        })
    }

    pub fn write_row(&mut self, row: &[Value]) -> Result<()> {
        self.writer.write_row(row)
    }

    pub fn rows(&self) -> u64 {
        self.writer.rows()
    }

    pub fn finish(self) -> Result<RunFile> {
        let SpillWriter { writer, mem } = self;
        let result = writer.finish();
        mem.close_buffer();
        let (buf, blocks, rows) = result?;
        let mut file = buf.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(0))?;
        Ok(RunFile { file, blocks, rows })
    }
}

/// Streams a spill run back, holding one block of memory until dropped or
/// exhausted.
pub struct SpillReader {
    reader: BlockReader<BufReader<File>>,
    mem: Option<MemTracker>,
}

impl SpillReader {
    pub fn open(run: RunFile, ctx: &OpContext) -> Self {
        ctx.mem.open_buffer();
        let bb = ctx.budget.block_bytes;
        SpillReader {
            reader: BlockReader::new(
                BufReader::with_capacity(bb, run.file),
                bb,
                run.blocks,
                Some(ctx.io.clone()),
            ),
            mem: Some(ctx.mem.clone()),
        }
    }

    pub fn next_row(&mut self) -> Result<Option<Row>> {
        let row = self.reader.next_row()?;
        if row.is_none() {
            self.close();
        }
        Ok(row)
    }

    fn close(&mut self) {
        if let Some(m) = self.mem.take() {
            m.close_buffer();
        }
    }
}

impl Drop for SpillReader {
    fn drop(&mut self) {
        self.close();
    }
}

impl Iterator for SpillReader {
    type Item = Result<Row>;

    fn next(&mut self) -> Option<Result<Row>> {
        self.next_row().transpose()
    }
}

/// Writes rows as a plain block file (no header), for tests and tools.
pub fn write_blocks<W: Write>(out: W, rows: &[Row], block_bytes: usize) -> Result<(W, u64)> {
    let mut w = BlockWriter::new(out, block_bytes, None);
    for r in rows {
        w.write_row(r)?;
    }
    let (inner, blocks, _) = w.finish()?;
    Ok((inner, blocks))
}

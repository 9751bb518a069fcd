//! Table files: a header with the schema, then block-formatted rows.
//!
//! Header layout (little-endian): magic `WCHT`, `u32` format version, `u32`
//! block size, `u32` header blocks, `u64` rows, `u64` data blocks, `u32`
//! schema JSON length, the JSON, zero padding to whole blocks. Statistics go
//! to a JSON sidecar next to the data file.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use winchain_core::value::{Row, Schema};
use winchain_core::{AttrId, RelStats, SegProp, Value};

use crate::block::{BlockReader, BlockWriter};
use crate::error::{EngineError, Result};
use crate::mem::IoStats;

const MAGIC: &[u8; 4] = b"WCHT";
const VERSION: u32 = 1;
const FIXED: usize = 4 + 4 + 4 + 4 + 8 + 8 + 4;

fn header_blocks(json_len: usize, block_bytes: usize) -> usize {
    (FIXED + json_len).div_ceil(block_bytes)
}

/// Summary of a table file, stored beside it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TableStats {
    pub rows: u64,
    pub blocks: u64,
    pub block_bytes: usize,
    /// Distinct values per column.
    pub distinct: BTreeMap<String, u64>,
    /// Physical order of the rows, as far as it is known.
    #[serde(default)]
    pub order: SegProp,
}

impl TableStats {
    /// Cost-model statistics for an operator granted `mem_blocks`.
    pub fn rel_stats(&self, mem_blocks: usize) -> RelStats {
        let mut s = RelStats::new(self.blocks as f64, self.rows as f64, mem_blocks as f64);
        for (name, &d) in &self.distinct {
            s.set_distinct(std::iter::once(AttrId::new(name)).collect(), d as f64);
        }
        s
    }

    pub fn sidecar_path(data: &Path) -> PathBuf {
        let mut p = data.as_os_str().to_owned();
        p.push(".stats.json");
        PathBuf::from(p)
    }

    pub fn save(&self, data: &Path) -> Result<()> {
        let f = BufWriter::new(File::create(Self::sidecar_path(data))?);
        serde_json::to_writer_pretty(f, self).map_err(|e| EngineError::format(e.to_string()))
    }

    pub fn load(data: &Path) -> Result<Self> {
        let path = Self::sidecar_path(data);
        let f = File::open(&path)
            .map_err(|e| EngineError::format(format!("cannot open statistics {}: {e}", path.display())))?;
        serde_json::from_reader(BufReader::new(f)).map_err(|e| EngineError::format(format!("{}: {e}", path.display())))
    }
}

pub struct TableWriter {
    schema: Schema,
    block_bytes: usize,
    header_blocks: usize,
    writer: BlockWriter<BufWriter<File>>,
    distinct: Vec<HashSet<Value>>,
    path: PathBuf,
}

impl TableWriter {
    pub fn create(path: &Path, schema: Schema, block_bytes: usize) -> Result<Self> {
        let json = serde_json::to_vec(&schema).map_err(|e| EngineError::format(e.to_string()))?;
        let header_blocks = header_blocks(json.len(), block_bytes);
        let mut file = BufWriter::new(File::create(path)?);
        // Placeholder header, rewritten by `finish`.
        file.write_all(&vec![0; header_blocks * block_bytes])?;
        Ok(TableWriter {
            distinct: vec![HashSet::new(); schema.len()],
            schema,
            block_bytes,
            header_blocks,
            writer: BlockWriter::new(file, block_bytes, None),
            path: path.to_owned(),
        })
    }

    pub fn write_row(&mut self, row: &[Value]) -> Result<()> {
        self.schema.check_row(row)?;
        for (set, v) in self.distinct.iter_mut().zip(row) {
            if !set.contains(v) {
                set.insert(v.clone());
            }
        }
        self.writer.write_row(row)
    }

    /// Completes the file and its statistics sidecar.
    pub fn finish(self) -> Result<TableStats> {
        let (buf, blocks, rows) = self.writer.finish()?;
        let mut file = buf.into_inner().map_err(|e| e.into_error())?;
        let json = serde_json::to_vec(&self.schema).map_err(|e| EngineError::format(e.to_string()))?;
        let mut header = Vec::with_capacity(self.header_blocks * self.block_bytes);
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        header.extend_from_slice(&(self.block_bytes as u32).to_le_bytes());
        header.extend_from_slice(&(self.header_blocks as u32).to_le_bytes());
        header.extend_from_slice(&rows.to_le_bytes());
        header.extend_from_slice(&blocks.to_le_bytes());
        header.extend_from_slice(&(json.len() as u32).to_le_bytes());
        header.extend_from_slice(&json);
        header.resize(self.header_blocks * self.block_bytes, 0);
        file.seek(SeekFrom::Start(0))?;
        file.write_all(&header)?;
        file.sync_all()?;
        let stats = TableStats {
            rows,
            blocks,
            block_bytes: self.block_bytes,
            distinct: self
                .schema
                .columns()
                .iter()
                .zip(&self.distinct)
                .map(|(c, s)| (c.name.clone(), s.len() as u64))
                .collect(),
            order: SegProp::unordered(),
        };
        stats.save(&self.path)?;
        Ok(stats)
    }
}

/// Writes `rows` to a new table file.
pub fn write_table(path: &Path, schema: Schema, block_bytes: usize, rows: impl IntoIterator<Item = Row>) -> Result<TableStats> {
    let mut w = TableWriter::create(path, schema, block_bytes)?;
    for r in rows {
        w.write_row(&r)?;
    }
    w.finish()
}

#[derive(Clone, Debug)]
pub struct TableInfo {
    pub schema: Schema,
    pub block_bytes: usize,
    pub rows: u64,
    pub blocks: u64,
    header_blocks: usize,
}

pub struct TableReader {
    pub info: TableInfo,
    reader: BlockReader<BufReader<File>>,
}

impl TableReader {
    /// Opens a table file; scan reads are counted in `io` when given.
    pub fn open(path: &Path, io: Option<IoStats>) -> Result<Self> {
        let mut file = File::open(path)
            .map_err(|e| EngineError::format(format!("cannot open table {}: {e}", path.display())))?;
        let mut fixed = [0u8; FIXED];
        file.read_exact(&mut fixed)
            .map_err(|_| EngineError::format(format!("{} is too short for a table file", path.display())))?;
        if &fixed[0..4] != MAGIC {
            return Err(EngineError::format(format!("{} is not a table file", path.display())));
        }
        let u32_at = |i: usize| u32::from_le_bytes(fixed[i..i + 4].try_into().expect("4 bytes"));
        let u64_at = |i: usize| u64::from_le_bytes(fixed[i..i + 8].try_into().expect("8 bytes"));
        let version = u32_at(4);
        if version != VERSION {
            return Err(EngineError::format(format!("unsupported table format version {version}")));
        }
        let block_bytes = u32_at(8) as usize;
        let header_blocks = u32_at(12) as usize;
        let rows = u64_at(16);
        let blocks = u64_at(24);
        let json_len = u32_at(32) as usize;
        if header_blocks != header_blocks_for(json_len, block_bytes) {
            return Err(EngineError::format("corrupt table header"));
        }
        let mut json = vec![0; json_len];
        file.read_exact(&mut json)?;
        let schema: Schema = serde_json::from_slice(&json).map_err(|e| EngineError::format(format!("table schema: {e}")))?;
        let schema = Schema::new(schema.columns().to_vec())?;
        file.seek(SeekFrom::Start((header_blocks * block_bytes) as u64))?;
        Ok(TableReader {
            info: TableInfo {
                schema,
                block_bytes,
                rows,
                blocks,
                header_blocks,
            },
            reader: BlockReader::new(BufReader::with_capacity(block_bytes.max(64 * 1024), file), block_bytes, blocks, io),
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.info.schema
    }

    /// Data size, header excluded.
    pub fn data_bytes(&self) -> u64 {
        self.info.blocks * self.info.block_bytes as u64
    }

    pub fn header_blocks(&self) -> usize {
        self.info.header_blocks
    }
}

fn header_blocks_for(json_len: usize, block_bytes: usize) -> usize {
    if block_bytes == 0 {
        return usize::MAX;
    }
    header_blocks(json_len, block_bytes)
}

impl Iterator for TableReader {
    type Item = Result<Row>;

    fn next(&mut self) -> Option<Result<Row>> {
        self.reader.next_row().transpose()
    }
}

/// Reads a whole table into memory.
pub fn read_table(path: &Path) -> Result<(Schema, Vec<Row>)> {
    let r = TableReader::open(path, None)?;
    let schema = r.schema().clone();
    let rows = r.collect::<Result<Vec<_>>>()?;
    Ok((schema, rows))
}

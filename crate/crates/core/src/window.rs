//! Sequential evaluation of one window function over a matching stream.
//!
//! Rows arrive partition after partition, each partition ordered on the
//! function's order key. Rank-style values are known as soon as a row is
//! seen; a partition total is known only once the partition ends, so `sum`
//! holds back the rows of the current partition.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::order::{FuncKind, WindowFunc};
use crate::value::{cmp_rows, KeyColumn, Row, Schema, Value};

pub struct WindowEval {
    part: Vec<usize>,
    order: Vec<KeyColumn>,
    kind: Kind,
    slot: usize,
    prev: Option<Row>,
    rows_in_partition: i64,
    rank: i64,
    dense: i64,
    sum: Option<i64>,
    pending: Vec<Row>,
}

enum Kind {
    Rank,
    DenseRank,
    RowNumber,
    Sum(usize),
}

impl WindowEval {
    /// Evaluator writing into column `slot` of each row; `schema` resolves
    /// the key columns.
    pub fn new(wf: &WindowFunc, schema: &Schema, slot: usize) -> Result<Self> {
        let part = wf
            .wpk()
            .iter()
            .map(|a| schema.require(a))
            .collect::<Result<Vec<_>>>()?;
        let order = schema.key_columns(wf.wok())?;
        let kind = match wf.kind() {
            FuncKind::Rank => Kind::Rank,
            FuncKind::DenseRank => Kind::DenseRank,
            FuncKind::RowNumber => Kind::RowNumber,
            FuncKind::Sum(a) => Kind::Sum(schema.require(a)?),
        };
        Ok(WindowEval {
            part,
            order,
            kind,
            slot,
            prev: None,
            rows_in_partition: 0,
            rank: 0,
            dense: 0,
            sum: None,
            pending: Vec::new(),
        })
    }

    /// Feeds one row; finished rows are appended to `out`.
    pub fn push(&mut self, mut row: Row, out: &mut Vec<Row>) -> Result<()> {
        if self.slot >= row.len() {
            return Err(Error::InvalidArgument("row has no slot for the window value".into()));
        }
        let (new_partition, new_peer) = match &self.prev {
            None => (true, true),
            Some(prev) => {
                if self.part.iter().any(|&i| prev[i] != row[i]) {
                    (true, true)
                } else {
                    match cmp_rows(prev, &row, &self.order) {
                        Ordering::Less => (false, true),
                        Ordering::Equal => (false, false),
                        Ordering::Greater => {
                            return Err(Error::ContractViolation(
                                "rows within a partition are not ordered on the window order key"
                                    .into(),
                            ))
                        }
                    }
                }
            }
        };
        if new_partition {
            self.flush(out);
            self.rows_in_partition = 0;
            self.dense = 0;
            self.sum = None;
        }
        self.rows_in_partition += 1;
        if new_peer {
            self.rank = self.rows_in_partition;
            self.dense += 1;
        }
        self.prev = Some(self.key_of(&row));
        match self.kind {
            Kind::Rank => row[self.slot] = Value::Int(self.rank),
            Kind::DenseRank => row[self.slot] = Value::Int(self.dense),
            Kind::RowNumber => row[self.slot] = Value::Int(self.rows_in_partition),
            Kind::Sum(col) => {
                if let Value::Int(v) = row[col] {
                    let s = self.sum.unwrap_or(0).checked_add(v).ok_or_else(|| {
                        Error::InvalidArgument("sum overflows a 64-bit integer".into())
                    })?;
                    self.sum = Some(s);
                }
                self.pending.push(row);
                return Ok(());
            }
        }
        out.push(row);
        Ok(())
    }

    /// Releases rows held for the last partition.
    pub fn finish(&mut self, out: &mut Vec<Row>) {
        self.flush(out);
        self.prev = None;
    }

    fn flush(&mut self, out: &mut Vec<Row>) {
        if self.pending.is_empty() {
            return;
        }
        let total = self.sum.map_or(Value::Null, Value::Int);
        for mut row in self.pending.drain(..) {
            row[self.slot] = total.clone();
            out.push(row);
        }
    }

    /// Only the key columns of the previous row are compared, so keep a row
    /// with the rest nulled out.
    fn key_of(&self, row: &Row) -> Row {
        let mut key = alloc::vec![Value::Null; row.len()];
        for &i in &self.part {
            key[i] = row[i].clone();
        }
        for k in &self.order {
            key[k.index] = row[k.index].clone();
        }
        key
    }
}

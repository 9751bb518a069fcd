//! Streaming check that rows form a segmented relation.
//!
//! Segments are cut at every descent of the Y order (and at every X change
//! when the input is grouped). Cutting only where forced is enough: any
//! valid segmentation cuts at least there, and merging adjacent segments of
//! a valid segmentation keeps it valid. X values of finished segments must
//! not come back.

use std::cmp::Ordering;
use std::collections::HashSet;

use winchain_core::value::{cmp_rows, same_on, KeyColumn, Row, Schema, Value};
use winchain_core::SegProp;

use crate::error::{EngineError, Result};

pub struct SegPropValidator {
    x: Vec<usize>,
    y: Vec<KeyColumn>,
    grouped: bool,
    prev: Option<Row>,
    closed: HashSet<Vec<Value>>,
    open: HashSet<Vec<Value>>,
    rows: u64,
    segments: u64,
}

impl SegPropValidator {
    pub fn new(prop: &SegProp, schema: &Schema) -> Result<Self> {
        let x = prop
            .x
            .iter()
            .map(|a| schema.require(a))
            .collect::<winchain_core::Result<Vec<_>>>()?;
        Ok(SegPropValidator {
            x,
            y: schema.key_columns(&prop.y)?,
            grouped: prop.grouped,
            prev: None,
            closed: HashSet::new(),
            open: HashSet::new(),
            rows: 0,
            segments: 0,
        })
    }

    fn x_of(&self, row: &[Value]) -> Vec<Value> {
        self.x.iter().map(|&i| row[i].clone()).collect()
    }

    pub fn check(&mut self, row: &[Value]) -> Result<()> {
        self.rows += 1;
        let cut = match &self.prev {
            None => true,
            Some(prev) => {
                let descent = cmp_rows(prev, row, &self.y) == Ordering::Greater;
                if descent && self.x.is_empty() {
                    return Err(EngineError::contract(format!(
                        "row {} breaks the order on the sort key",
                        self.rows
                    )));
                }
                descent || (self.grouped && !same_on(prev, row, &self.x))
            }
        };
        if cut {
            self.segments += 1;
            let open = std::mem::take(&mut self.open);
            self.closed.extend(open);
        }
        if !self.x.is_empty() {
            let x = self.x_of(row);
            if self.closed.contains(&x) {
                return Err(EngineError::contract(format!(
                    "row {}: segment value {:?} appears in an earlier segment",
                    self.rows, x
                )));
            }
            if !self.open.contains(&x) {
                self.open.insert(x);
            }
        }
        match &mut self.prev {
            Some(p) => p.clone_from_slice(row),
            None => self.prev = Some(row.to_vec()),
        }
        Ok(())
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    /// Segments found (the coarsest valid segmentation).
    pub fn segments(&self) -> u64 {
        self.segments
    }
}

/// Checks a whole row set.
pub fn validate_rows<'a>(rows: impl IntoIterator<Item = &'a Row>, prop: &SegProp, schema: &Schema) -> Result<u64> {
    let mut v = SegPropValidator::new(prop, schema)?;
    for r in rows {
        v.check(r)?;
    }
    Ok(v.segments())
}

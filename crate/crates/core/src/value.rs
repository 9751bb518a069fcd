//! Cell values, rows and schemas.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::attr::{AttrId, AttrSeq};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Int(i64),
    Str(String),
}

pub type Row = Vec<Value>;

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Ascending comparison with NULLs last. Integers sort before strings.
    pub fn cmp_asc(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Null, _) => Ordering::Greater,
            (_, Value::Null) => Ordering::Less,
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::Int(_), Value::Str(_)) => Ordering::Less,
            (Value::Str(_), Value::Int(_)) => Ordering::Greater,
        }
    }

    /// Comparison under one key direction. NULLs stay last when descending.
    pub fn cmp_dir(&self, other: &Value, descending: bool) -> Ordering {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => self.cmp_asc(other),
            _ if descending => other.cmp_asc(self),
            _ => self.cmp_asc(other),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Int,
    NullableInt,
    Str,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ValueKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if c.name.is_empty() {
                return Err(Error::InvalidArgument("empty column name".into()));
            }
            if columns[..i].iter().any(|d| d.name == c.name) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "duplicate column `{}`",
                    c.name
                )));
            }
        }
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn require(&self, attr: &AttrId) -> Result<usize> {
        self.index_of(attr.name()).ok_or_else(|| {
            Error::InvalidArgument(alloc::format!("unknown column `{}`", attr.name()))
        })
    }

    /// Column index and direction for each attribute of `key`.
    pub fn key_columns(&self, key: &AttrSeq) -> Result<Vec<KeyColumn>> {
        key.iter()
            .map(|a| {
                Ok(KeyColumn {
                    index: self.require(a)?,
                    descending: a.is_descending(),
                })
            })
            .collect()
    }

    /// Checks that `row` fits this schema.
    pub fn check_row(&self, row: &[Value]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "row has {} values, schema has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (v, c) in row.iter().zip(&self.columns) {
            let ok = matches!(
                (c.kind, v),
                (ValueKind::Int, Value::Int(_))
                    | (ValueKind::NullableInt, Value::Int(_) | Value::Null)
                    | (ValueKind::Str, Value::Str(_))
            );
            if !ok {
                return Err(Error::InvalidArgument(alloc::format!(
                    "value `{v}` does not fit column `{}` of kind {:?}",
                    c.name,
                    c.kind
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyColumn {
    pub index: usize,
    pub descending: bool,
}

/// Lexicographic comparison of two rows on `key`.
pub fn cmp_rows(a: &[Value], b: &[Value], key: &[KeyColumn]) -> Ordering {
    for k in key {
        let o = a[k.index].cmp_dir(&b[k.index], k.descending);
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Whether two rows agree on every column in `cols`.
pub fn same_on(a: &[Value], b: &[Value], cols: &[usize]) -> bool {
    cols.iter().all(|&i| a[i] == b[i])
}

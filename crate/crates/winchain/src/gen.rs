//! Deterministic synthetic tables with uniform, independent integer columns.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use winchain_core::value::{Column, Schema, ValueKind};
use winchain_core::{AttrSeq, AttrSet, SegProp, Value};

use crate::error::{EngineError, Result};
use crate::table::{TableStats, TableWriter};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenColumn {
    pub name: String,
    /// Values are drawn uniformly from `1..=distinct`.
    pub distinct: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "attr", rename_all = "snake_case")]
pub enum OrderDirective {
    None,
    Sorted(String),
    Grouped(String),
}

impl OrderDirective {
    /// `none`, `sorted:<attr>` or `grouped:<attr>`.
    pub fn parse(text: &str) -> Result<Self> {
        match text.split_once(':') {
            None if text == "none" => Ok(OrderDirective::None),
            Some(("sorted", a)) if !a.is_empty() => Ok(OrderDirective::Sorted(a.to_owned())),
            Some(("grouped", a)) if !a.is_empty() => Ok(OrderDirective::Grouped(a.to_owned())),
            _ => Err(EngineError::format(format!(
                "order `{text}` is not none, sorted:<attr> or grouped:<attr>"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub rows: u64,
    pub seed: u64,
    pub columns: Vec<GenColumn>,
    /// Width of a constant string column `pad` appended to every row; 0 for
    /// none.
    #[serde(default)]
    pub pad_bytes: usize,
    pub order: OrderDirective,
}

impl GenSpec {
    /// A table shaped like the web sales fact table: sale date and time,
    /// ship date, item, billed customer and quantity.
    pub fn web_sales(rows: u64, seed: u64) -> Self {
        let col = |name: &str, distinct: u64| GenColumn {
            name: name.into(),
            distinct: distinct.max(1),
        };
        GenSpec {
            rows,
            seed,
            columns: vec![
                col("date", 1823),
                col("time", 86_400),
                col("ship", 1823),
                col("item", (rows / 5).max(1)),
                col("bill", (rows / 2).max(1)),
                col("quantity", 100),
            ],
            pad_bytes: 64,
            order: OrderDirective::None,
        }
    }

    pub fn with_order(mut self, order: OrderDirective) -> Self {
        self.order = order;
        self
    }

    pub fn schema(&self) -> Result<Schema> {
        let mut cols: Vec<Column> = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                kind: ValueKind::Int,
            })
            .collect();
        if self.pad_bytes > 0 {
            cols.push(Column {
                name: "pad".into(),
                kind: ValueKind::Str,
            });
        }
        Ok(Schema::new(cols)?)
    }

    fn order_column(&self) -> Result<Option<(usize, bool)>> {
        let (name, grouped) = match &self.order {
            OrderDirective::None => return Ok(None),
            OrderDirective::Sorted(a) => (a, false),
            OrderDirective::Grouped(a) => (a, true),
        };
        let i = self
            .columns
            .iter()
            .position(|c| &c.name == name)
            .ok_or_else(|| EngineError::format(format!("order attribute `{name}` is not a generated column")))?;
        Ok(Some((i, grouped)))
    }

    fn segprop(&self) -> Result<SegProp> {
        Ok(match &self.order {
            OrderDirective::None => SegProp::unordered(),
            OrderDirective::Sorted(a) => SegProp::sorted(AttrSeq::new([a.as_str()])?),
            OrderDirective::Grouped(a) => {
                SegProp::grouped(std::iter::once(a.as_str()).collect::<AttrSet>(), AttrSeq::empty())?
            }
        })
    }
}

/// Writes the table and its statistics sidecar.
pub fn generate(spec: &GenSpec, path: &Path, block_bytes: usize) -> Result<TableStats> {
    if let Some(c) = spec.columns.iter().find(|c| c.distinct == 0) {
        return Err(EngineError::format(format!("column `{}` needs at least one distinct value", c.name)));
    }
    let order = spec.segprop()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // The ordering column is drawn up front and arranged; the others are
    // drawn row by row in output order, which keeps them independent.
    let arranged: Option<(usize, Vec<i64>)> = match spec.order_column()? {
        None => None,
        Some((i, grouped)) => {
            let d = spec.columns[i].distinct;
            let mut counts = vec![0u64; d as usize];
            for _ in 0..spec.rows {
                counts[rng.gen_range(0..d) as usize] += 1;
            }
            let mut values: Vec<i64> = (1..=d as i64).collect();
            if grouped {
                values.shuffle(&mut rng);
            }
            let mut col = Vec::with_capacity(spec.rows as usize);
            for v in values {
                col.extend(std::iter::repeat(v).take(counts[v as usize - 1] as usize));
            }
            Some((i, col))
        }
    };
    let pad = Value::Str("x".repeat(spec.pad_bytes));
    let mut w = TableWriter::create(path, spec.schema()?, block_bytes)?;
    let mut row = Vec::with_capacity(spec.columns.len() + 1);
    for r in 0..spec.rows as usize {
        row.clear();
        for (i, c) in spec.columns.iter().enumerate() {
            let v = match &arranged {
                Some((j, col)) if *j == i => col[r],
                _ => rng.gen_range(1..=c.distinct as i64),
            };
            row.push(Value::Int(v));
        }
        if spec.pad_bytes > 0 {
            row.push(pad.clone());
        }
        w.write_row(&row)?;
    }
    let mut stats = w.finish()?;
    stats.order = order;
    stats.save(path)?;
    Ok(stats)
}

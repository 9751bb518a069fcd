//! CSV import and export. An empty cell is NULL.

use std::path::Path;

use winchain_core::value::{Column, Row, Schema, ValueKind};
use winchain_core::Value;

use crate::error::{EngineError, Result};
use crate::table::{TableStats, TableWriter};

fn csv_err(e: csv::Error) -> EngineError {
    EngineError::format(format!("csv: {e}"))
}

/// Column kinds inferred from the cells: integers where every non-empty
/// cell parses as one (nullable if any cell is empty), strings otherwise.
pub fn infer_schema(header: &[String], records: &[csv::StringRecord]) -> Result<Schema> {
    let mut cols = Vec::with_capacity(header.len());
    for (i, name) in header.iter().enumerate() {
        let mut any_empty = false;
        let mut all_int = true;
        for r in records {
            let cell = r.get(i).unwrap_or("");
            if cell.is_empty() {
                any_empty = true;
            } else if cell.parse::<i64>().is_err() {
                all_int = false;
            }
        }
        let kind = match (all_int, any_empty) {
            (true, false) => ValueKind::Int,
            (true, true) => ValueKind::NullableInt,
            (false, _) => ValueKind::Str,
        };
        if kind == ValueKind::Str && any_empty {
            return Err(EngineError::format(format!(
                "column `{name}` holds strings and empty cells; only integer columns may be NULL"
            )));
        }
        cols.push(Column {
            name: name.trim().to_owned(),
            kind,
        });
    }
    Ok(Schema::new(cols)?)
}

fn parse_cell(cell: &str, kind: ValueKind) -> Result<Value> {
    Ok(match kind {
        ValueKind::Str => Value::Str(cell.to_owned()),
        _ if cell.is_empty() => Value::Null,
        _ => Value::Int(
            cell.parse()
                .map_err(|_| EngineError::format(format!("`{cell}` is not an integer")))?,
        ),
    })
}

/// Reads a CSV file with a header line into memory.
pub fn read_csv(path: &Path) -> Result<(Schema, Vec<Row>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let records = rdr.records().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err)?;
    let schema = infer_schema(&header, &records)?;
    let rows = records
        .iter()
        .map(|r| {
            schema
                .columns()
                .iter()
                .enumerate()
                .map(|(i, c)| parse_cell(r.get(i).unwrap_or(""), c.kind))
                .collect::<Result<Row>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((schema, rows))
}

/// Converts a CSV file into a table file with statistics.
pub fn import_csv(csv_path: &Path, table: &Path, block_bytes: usize) -> Result<TableStats> {
    let (schema, rows) = read_csv(csv_path)?;
    let mut w = TableWriter::create(table, schema, block_bytes)?;
    for r in &rows {
        w.write_row(r)?;
    }
    w.finish()
}

pub fn write_csv<W: std::io::Write>(out: W, schema: &Schema, rows: impl IntoIterator<Item = Result<Row>>) -> Result<u64> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(schema.columns().iter().map(|c| c.name.as_str())).map_err(csv_err)?;
    let mut n = 0;
    for r in rows {
        let r = r?;
        w.write_record(r.iter().map(|v| match v {
            Value::Null => String::new(),
            v => v.to_string(),
        }))
        .map_err(csv_err)?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

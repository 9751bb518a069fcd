//! Binary row encoding and order-preserving key encoding.

use winchain_core::value::{KeyColumn, Row, Value};

use crate::error::{EngineError, Result};

const TAG_NULL: u8 = 0;
const TAG_INT: u8 = 1;
const TAG_STR: u8 = 2;

/// Bytes taken by `row` in a block, excluding the record length prefix.
pub fn encoded_len(row: &[Value]) -> usize {
    2 + row
        .iter()
        .map(|v| match v {
            Value::Null => 1,
            Value::Int(_) => 9,
            Value::Str(s) => 5 + s.len(),
        })
        .sum::<usize>()
}

pub fn encode_row(row: &[Value], out: &mut Vec<u8>) {
    out.extend_from_slice(&(row.len() as u16).to_le_bytes());
    for v in row {
        match v {
            Value::Null => out.push(TAG_NULL),
            Value::Int(i) => {
                out.push(TAG_INT);
                out.extend_from_slice(&i.to_le_bytes());
            }
            Value::Str(s) => {
                out.push(TAG_STR);
                out.extend_from_slice(&(s.len() as u32).to_le_bytes());
                out.extend_from_slice(s.as_bytes());
            }
        }
    }
}

pub fn decode_row(mut buf: &[u8]) -> Result<Row> {
    let n = u16::from_le_bytes(take::<2>(&mut buf)?) as usize;
    let mut row = Vec::with_capacity(n);
    for _ in 0..n {
        let [tag] = take::<1>(&mut buf)?;
        row.push(match tag {
            TAG_NULL => Value::Null,
            TAG_INT => Value::Int(i64::from_le_bytes(take::<8>(&mut buf)?)),
            TAG_STR => {
                let len = u32::from_le_bytes(take::<4>(&mut buf)?) as usize;
                if buf.len() < len {
                    return Err(EngineError::format("truncated string value"));
                }
                let (s, rest) = buf.split_at(len);
                buf = rest;
                Value::Str(
                    std::str::from_utf8(s)
                        .map_err(|_| EngineError::format("string value is not UTF-8"))?
                        .to_owned(),
                )
            }
            t => return Err(EngineError::format(format!("unknown value tag {t}"))),
        });
    }
    if !buf.is_empty() {
        return Err(EngineError::format("trailing bytes after row"));
    }
    Ok(row)
}

fn take<const N: usize>(buf: &mut &[u8]) -> Result<[u8; N]> {
    if buf.len() < N {
        return Err(EngineError::format("truncated row"));
    }
    let (head, rest) = buf.split_at(N);
    *buf = rest;
    Ok(head.try_into().expect("length checked"))
}

/// Appends a byte string whose unsigned lexicographic order equals the
/// order of `row` on `key` (NULLs last in either direction).
pub fn encode_key(row: &[Value], key: &[KeyColumn], out: &mut Vec<u8>) {
    for k in key {
        let v = &row[k.index];
        let start = out.len();
        match v {
            Value::Null => {
                out.push(3);
                continue;
            }
            Value::Int(i) => {
                out.push(if k.descending { 2 } else { 1 });
                out.extend_from_slice(&((*i as u64) ^ (1 << 63)).to_be_bytes());
            }
            Value::Str(s) => {
                out.push(if k.descending { 1 } else { 2 });
                for &b in s.as_bytes() {
                    out.push(b);
                    if b == 0 {
                        out.push(0xff);
                    }
                }
                out.extend_from_slice(&[0, 0]);
            }
        }
        if k.descending {
            for b in &mut out[start + 1..] {
                *b = !*b;
            }
        }
    }
}

pub fn key_bytes(row: &[Value], key: &[KeyColumn]) -> Vec<u8> {
    let mut out = Vec::with_capacity(key.len() * 9);
    encode_key(row, key, &mut out);
    out
}

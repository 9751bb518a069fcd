//! Segmented sort: sort each unit of a segmented input independently.
//!
//! A unit ends where the reused prefix `alpha` changes value, where the
//! input order descends (always a segment boundary), and, for inputs
//! grouped on X, where the X value changes. Adjacent segments that end up in
//! one unit still form a valid segment of the output. A unit larger than the
//! workspace is sorted externally.

use std::cmp::Ordering;

use winchain_core::value::{cmp_rows, same_on, KeyColumn, Row};

use crate::error::Result;
use crate::mem::OpContext;
use crate::sort::{Entry, SortedStream, Sorter};

/// Column positions that drive unit detection.
#[derive(Clone, Debug, Default)]
pub struct UnitSpec {
    pub alpha: Vec<usize>,
    /// Input order, used to detect descents.
    pub y: Vec<KeyColumn>,
    /// X columns when the input is grouped on them, else empty.
    pub grouped_x: Vec<usize>,
}

impl UnitSpec {
    pub fn is_boundary(&self, prev: &[winchain_core::Value], row: &[winchain_core::Value]) -> bool {
        !same_on(prev, row, &self.alpha)
            || !same_on(prev, row, &self.grouped_x)
            || cmp_rows(prev, row, &self.y) == Ordering::Greater
    }
}

pub struct SegmentedStream<I> {
    input: I,
    spec: UnitSpec,
    /// Sort key inside a unit: the part of the target key after `alpha`.
    beta: Vec<KeyColumn>,
    ctx: OpContext,
    lookahead: Option<Row>,
    current: Option<SortedStream>,
    seq: u64,
    units: u64,
    done: bool,
}

pub fn segmented_sort<I>(input: I, spec: UnitSpec, beta: Vec<KeyColumn>, ctx: OpContext) -> SegmentedStream<I::IntoIter>
where
    I: IntoIterator<Item = Result<Row>>,
{
    SegmentedStream {
        input: input.into_iter(),
        spec,
        beta,
        ctx,
        lookahead: None,
        current: None,
        seq: 0,
        units: 0,
        done: false,
    }
}

impl<I: Iterator<Item = Result<Row>>> SegmentedStream<I> {
    /// Units sorted so far.
    pub fn units(&self) -> u64 {
        self.units
    }

    fn next_unit(&mut self) -> Result<Option<SortedStream>> {
        let first = match self.lookahead.take() {
            Some(r) => r,
            None => match self.input.next().transpose()? {
                Some(r) => r,
                None => return Ok(None),
            },
        };
        let cap = self.ctx.workspace_bytes(2);
        let mut entries: Vec<Entry> = Vec::new();
        let mut bytes = 0;
        let mut sorter: Option<Sorter> = None;
        let mut prev_key = first.clone();
        self.push(Entry::new(first, &self.beta, self.seq), &mut entries, &mut bytes, &mut sorter, cap)?;
        loop {
            let Some(row) = self.input.next().transpose()? else {
                break;
            };
            if self.spec.is_boundary(&prev_key, &row) {
                self.lookahead = Some(row);
                break;
            }
            prev_key.clone_from(&row);
            self.push(Entry::new(row, &self.beta, self.seq), &mut entries, &mut bytes, &mut sorter, cap)?;
        }
        self.units += 1;
        match sorter {
            Some(s) => s.finish().map(Some),
            None => {
                entries.sort_unstable();
                Ok(Some(SortedStream::Memory {
                    rows: entries.into_iter(),
                    mem: self.ctx.mem.clone(),
                }))
            }
        }
    }

    fn push(
        &mut self,
        e: Entry,
        entries: &mut Vec<Entry>,
        bytes: &mut usize,
        sorter: &mut Option<Sorter>,
        cap: usize,
    ) -> Result<()> {
        self.seq += 1;
        if let Some(s) = sorter {
            return s.push_entry(e);
        }
        if *bytes + e.bytes > cap && !entries.is_empty() {
            let mut s = Sorter::new(self.beta.clone(), self.ctx.clone());
            for old in entries.drain(..) {
                self.ctx.mem.release(old.bytes);
                s.push_entry(old)?;
            }
            s.push_entry(e)?;
            *sorter = Some(s);
            return Ok(());
        }
        self.ctx.mem.charge(e.bytes);
        *bytes += e.bytes;
        entries.push(e);
        Ok(())
    }
}

impl<I: Iterator<Item = Result<Row>>> Iterator for SegmentedStream<I> {
    type Item = Result<Row>;

    fn next(&mut self) -> Option<Result<Row>> {
        if self.done {
            return None;
        }
        loop {
            if let Some(cur) = &mut self.current {
                match cur.next() {
                    Some(r) => return Some(r),
                    None => self.current = None,
                }
            }
            match self.next_unit() {
                Ok(Some(s)) => self.current = Some(s),
                Ok(None) => {
                    self.done = true;
                    return None;
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mem::{Budget, IoStats};
    use winchain_core::Value;

    fn int_rows(data: &[[i64; 3]]) -> Vec<Row> {
        data.iter().map(|r| r.iter().map(|&v| Value::Int(v)).collect()).collect()
    }

    fn kc(index: usize) -> KeyColumn {
        KeyColumn { index, descending: false }
    }

    fn sort(input: Vec<Row>, spec: UnitSpec, beta: Vec<KeyColumn>, m: usize) -> (Vec<Row>, u64) {
        let ctx = OpContext::new(Budget::new(m, 128).unwrap(), IoStats::new());
        let mem = ctx.mem.clone();
        let mut s = segmented_sort(input.into_iter().map(Ok), spec, beta, ctx);
        let out: Vec<Row> = s.by_ref().map(|r| r.unwrap()).collect();
        assert_eq!(mem.blocks_in_use(), 0);
        (out, s.units())
    }

    #[test]
    fn alpha_groups_are_sorted_on_beta() {
        // Sorted on (a); target (a, b).
        let input = int_rows(&[[1, 3, 0], [1, 1, 1], [1, 2, 2], [2, 9, 3], [2, 0, 4]]);
        let spec = UnitSpec { alpha: vec![0], y: vec![kc(0)], grouped_x: vec![] };
        let (out, units) = sort(input, spec, vec![kc(1)], 16);
        assert_eq!(units, 2);
        assert_eq!(out, int_rows(&[[1, 1, 1], [1, 2, 2], [1, 3, 0], [2, 0, 4], [2, 9, 3]]));
    }

    #[test]
    fn grouped_segments_without_alpha() {
        // Grouped on {a} and sorted on (c) within groups; target (a, b).
        let input = int_rows(&[[5, 2, 0], [5, 1, 1], [3, 7, 2], [3, 4, 3]]);
        let spec = UnitSpec { alpha: vec![], y: vec![kc(2)], grouped_x: vec![0] };
        let (out, units) = sort(input, spec, vec![kc(0), kc(1)], 16);
        assert_eq!(units, 2);
        assert_eq!(out, int_rows(&[[5, 1, 1], [5, 2, 0], [3, 4, 3], [3, 7, 2]]));
    }

    #[test]
    fn descents_end_units() {
        let input = int_rows(&[[1, 2, 0], [2, 1, 1], [0, 3, 2], [1, 0, 3]]);
        let spec = UnitSpec { alpha: vec![], y: vec![kc(0)], grouped_x: vec![] };
        let (out, units) = sort(input, spec, vec![kc(1)], 16);
        assert_eq!(units, 2);
        assert_eq!(out, int_rows(&[[2, 1, 1], [1, 2, 0], [1, 0, 3], [0, 3, 2]]));
    }

    #[test]
    fn oversized_unit_is_sorted_externally() {
        let input: Vec<Row> = (0..3000).map(|i| vec![Value::Int(0), Value::Int((i * 7919) % 3001), Value::Int(i)]).collect();
        let spec = UnitSpec { alpha: vec![0], y: vec![kc(0)], grouped_x: vec![] };
        let mut expected = input.clone();
        expected.sort_by(|a, b| a[1].cmp_asc(&b[1]));
        let (out, units) = sort(input, spec, vec![kc(1)], 4);
        assert_eq!(units, 1);
        assert_eq!(out, expected);
    }
}

//! Helpers shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use winchain::exec::{execute_plan, ExecOptions, StepReport};
use winchain::mem::Budget;
use winchain_core::value::{cmp_rows, Column, KeyColumn, Row, Schema, ValueKind};
use winchain_core::{AttrId, AttrSeq, AttrSet, FuncKind, Plan, RelStats, SegProp, Value, WindowFunc, Workload};

/// Window values computed straight from the definition: for every row, look
/// at all rows of its partition.
pub fn naive_oracle(schema: &Schema, rows: &[Row], wf: &WindowFunc) -> Vec<Option<Value>> {
    let part: Vec<usize> = wf.wpk().iter().map(|a| schema.index_of(a.name()).unwrap()).collect();
    let order: Vec<KeyColumn> = wf
        .wok()
        .iter()
        .map(|a| KeyColumn { index: schema.index_of(a.name()).unwrap(), descending: a.is_descending() })
        .collect();
    let mut groups: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
    for (i, r) in rows.iter().enumerate() {
        groups.entry(part.iter().map(|&c| r[c].clone()).collect()).or_default().push(i);
    }
    let mut out = vec![None; rows.len()];
    for peers in groups.values() {
        match wf.kind() {
            FuncKind::Rank => {
                for &t in peers {
                    let before = peers.iter().filter(|&&r| cmp_rows(&rows[r], &rows[t], &order) == Ordering::Less).count();
                    out[t] = Some(Value::Int(before as i64 + 1));
                }
            }
            FuncKind::DenseRank => {
                let mut distinct: Vec<usize> = Vec::new();
                for &r in peers {
                    if !distinct.iter().any(|&d| cmp_rows(&rows[d], &rows[r], &order) == Ordering::Equal) {
                        distinct.push(r);
                    }
                }
                for &t in peers {
                    let before = distinct.iter().filter(|&&d| cmp_rows(&rows[d], &rows[t], &order) == Ordering::Less).count();
                    out[t] = Some(Value::Int(before as i64 + 1));
                }
            }
            FuncKind::Sum(a) => {
                let i = schema.index_of(a.name()).unwrap();
                let vals: Vec<i64> = peers.iter().filter_map(|&r| rows[r][i].as_int()).collect();
                let total = if vals.is_empty() { Value::Null } else { Value::Int(vals.iter().sum()) };
                for &t in peers {
                    out[t] = Some(total.clone());
                }
            }
            // Depends on the order of ties; checked separately.
            FuncKind::RowNumber => {}
        }
    }
    out
}

pub struct Instance {
    pub schema: Schema,
    /// Column 0 is a unique row id.
    pub rows: Vec<Row>,
    pub input: SegProp,
    pub workload: Workload,
    pub stats_rows: f64,
}

fn attr_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

/// A random table (≤ `max_rows` rows, 2..=`max_attrs` attributes with small
/// domains and some NULLs), physically arranged to satisfy a random order
/// property, and a random workload of ≤ `max_wfs` functions.
pub fn random_instance(rng: &mut impl Rng, max_rows: usize, max_attrs: usize, max_wfs: usize) -> Instance {
    let n_attrs = rng.gen_range(2..=max_attrs);
    let names = attr_names(n_attrs);
    let mut cols = vec![Column { name: "id".into(), kind: ValueKind::Int }];
    cols.extend(names.iter().map(|n| Column { name: n.clone(), kind: ValueKind::NullableInt }));
    let schema = Schema::new(cols).unwrap();
    let n_rows = rng.gen_range(1..=max_rows);
    let domains: Vec<i64> = (0..n_attrs).map(|_| rng.gen_range(1..=12)).collect();
    let mut rows: Vec<Row> = (0..n_rows)
        .map(|i| {
            let mut r = vec![Value::Int(i as i64)];
            for d in &domains {
                r.push(if rng.gen_bool(0.05) { Value::Null } else { Value::Int(rng.gen_range(0..*d)) });
            }
            r
        })
        .collect();

    let random_seq = |rng: &mut dyn rand::RngCore, pool: &[String], max: usize| -> Vec<AttrId> {
        let mut pool = pool.to_vec();
        pool.shuffle(rng);
        let len = rng.gen_range(0..=max.min(pool.len()));
        pool[..len]
            .iter()
            .map(|n| AttrId::with_direction(n, rng.gen_bool(0.25)))
            .collect()
    };

    let input = match rng.gen_range(0..3) {
        0 => SegProp::unordered(),
        1 => {
            let mut y = random_seq(rng, &names, 3);
            if y.is_empty() {
                y.push(AttrId::new(&names[0]));
            }
            let y = AttrSeq::new(y).unwrap();
            let key = schema.key_columns(&y).unwrap();
            rows.sort_by(|a, b| cmp_rows(a, b, &key));
            SegProp::sorted(y)
        }
        _ => {
            let mut pool = names.clone();
            pool.shuffle(rng);
            let nx = rng.gen_range(1..=2.min(pool.len()));
            let x: AttrSet = pool[..nx].iter().map(|n| AttrId::new(n)).collect();
            let rest: Vec<String> = pool[nx..].to_vec();
            let y = AttrSeq::new(random_seq(rng, &rest, 2)).unwrap();
            let xi: Vec<usize> = x.iter().map(|a| schema.index_of(a.name()).unwrap()).collect();
            // Random group order, groups sorted on y.
            let mut group_rank: HashMap<Vec<Value>, u64> = HashMap::new();
            for r in &rows {
                let g: Vec<Value> = xi.iter().map(|&i| r[i].clone()).collect();
                let next: u64 = rng.gen();
                group_rank.entry(g).or_insert(next);
            }
            let key = schema.key_columns(&y).unwrap();
            rows.sort_by(|a, b| {
                let ga: Vec<Value> = xi.iter().map(|&i| a[i].clone()).collect();
                let gb: Vec<Value> = xi.iter().map(|&i| b[i].clone()).collect();
                group_rank[&ga].cmp(&group_rank[&gb]).then_with(|| cmp_rows(a, b, &key))
            });
            SegProp::grouped(x, y).unwrap()
        }
    };

    let n_wfs = rng.gen_range(1..=max_wfs);
    let mut funcs = Vec::new();
    for i in 0..n_wfs {
        let mut pool = names.clone();
        pool.shuffle(rng);
        let np = rng.gen_range(0..=2.min(pool.len()));
        let part: Vec<AttrId> = pool[..np].iter().map(|n| AttrId::new(n)).collect();
        let mut order = random_seq(rng, &pool[np..], 2);
        if part.is_empty() && order.is_empty() {
            order.push(AttrId::new(&pool[0]));
        }
        let kind = match rng.gen_range(0..4) {
            0 => FuncKind::DenseRank,
            1 => FuncKind::Sum(AttrId::new(&names[rng.gen_range(0..names.len())])),
            2 => FuncKind::RowNumber,
            _ => FuncKind::Rank,
        };
        funcs.push(WindowFunc::new(&format!("w{i}"), AttrSeq::new(part).unwrap(), AttrSeq::new(order).unwrap(), kind).unwrap());
    }
    Instance { schema, stats_rows: rows.len() as f64, rows, input, workload: Workload::new(funcs).unwrap() }
}

/// Exact statistics of `rows` for a table of `blocks` blocks.
pub fn stats_of(schema: &Schema, rows: &[Row], blocks: f64, mem_blocks: usize) -> RelStats {
    let mut s = RelStats::new(blocks, rows.len() as f64, mem_blocks as f64);
    for (i, c) in schema.columns().iter().enumerate() {
        let d: BTreeSet<String> = rows.iter().map(|r| format!("{:?}", r[i])).collect();
        s = s.with_distinct(&c.name, d.len() as f64);
    }
    s
}

pub struct Executed {
    pub rows: Vec<Row>,
    pub reports: Vec<StepReport>,
}

pub fn run(inst: &Instance, plan: &Plan, stats: &RelStats, mem_blocks: usize, block_bytes: usize) -> Result<Executed, winchain::EngineError> {
    let opts = ExecOptions { budget: Budget::new(mem_blocks, block_bytes)?, validate: true };
    let input = inst.rows.clone().into_iter().map(Ok);
    let mut exec = execute_plan(Box::new(input), &inst.schema, &inst.input, &inst.workload, plan, Some(stats), &opts)?;
    let rows = exec.collect_rows()?;
    Ok(Executed { rows, reports: exec.reports() })
}

/// Oracle values of every function, by input row.
pub fn oracle_values(inst: &Instance) -> Vec<Vec<Option<Value>>> {
    inst.workload.funcs().iter().map(|wf| naive_oracle(&inst.schema, &inst.rows, wf)).collect()
}

/// Compares engine output with the oracle, tuple by tuple (matched on the id
/// column). Returns a description of the first difference.
pub fn check_against_oracle(inst: &Instance, out: &[Row]) -> Result<(), String> {
    check_output(inst, out, &oracle_values(inst))
}

/// As [`check_against_oracle`], with the oracle values computed beforehand.
pub fn check_output(inst: &Instance, out: &[Row], oracle: &[Vec<Option<Value>>]) -> Result<(), String> {
    if out.len() != inst.rows.len() {
        return Err(format!("{} rows out, {} in", out.len(), inst.rows.len()));
    }
    let width = inst.schema.len();
    let mut by_id: Vec<Option<&Row>> = vec![None; inst.rows.len()];
    for r in out {
        let id = r[0].as_int().ok_or("row without id")? as usize;
        if by_id.get(id).copied().flatten().is_some() {
            return Err(format!("row {id} emitted twice"));
        }
        *by_id.get_mut(id).ok_or("unknown id")? = Some(r);
    }
    for r in &inst.rows {
        let id = r[0].as_int().unwrap() as usize;
        let o = by_id[id].ok_or(format!("row {id} missing"))?;
        if o[..width] != r[..] {
            return Err(format!("row {id} changed its input columns"));
        }
    }
    for (f, wf) in inst.workload.funcs().iter().enumerate() {
        for (r, e) in inst.rows.iter().zip(&oracle[f]) {
            let id = r[0].as_int().unwrap() as usize;
            let got = &by_id[id].unwrap()[width + f];
            if let Some(e) = e {
                if got != e {
                    return Err(format!("{} on row {id}: got {got:?}, expected {e:?}", wf.name()));
                }
            }
        }
        if *wf.kind() == FuncKind::RowNumber {
            check_row_numbers(inst, out, f, wf)?;
        }
    }
    Ok(())
}

/// Within every partition, row numbers are a permutation of 1..=size.
fn check_row_numbers(inst: &Instance, out: &[Row], f: usize, wf: &WindowFunc) -> Result<(), String> {
    let part: Vec<usize> = wf.wpk().iter().map(|a| inst.schema.index_of(a.name()).unwrap()).collect();
    let mut groups: HashMap<Vec<Value>, Vec<i64>> = HashMap::new();
    for r in out {
        let k: Vec<Value> = part.iter().map(|&i| r[i].clone()).collect();
        groups.entry(k).or_default().push(r[inst.schema.len() + f].as_int().ok_or("null row number")?);
    }
    for (_, mut v) in groups {
        v.sort_unstable();
        if v.iter().enumerate().any(|(i, &n)| n != i as i64 + 1) {
            return Err(format!("{}: row numbers are not 1..n", wf.name()));
        }
    }
    Ok(())
}

/// The employee table of the running example, with expected ranks.
pub fn emptab() -> (Schema, Vec<Row>, Vec<[i64; 2]>) {
    let schema = Schema::new(vec![
        Column { name: "empnum".into(), kind: ValueKind::Int },
        Column { name: "dept".into(), kind: ValueKind::NullableInt },
        Column { name: "salary".into(), kind: ValueKind::NullableInt },
    ])
    .unwrap();
    let data: [(i64, Option<i64>, Option<i64>, i64, i64); 10] = [
        (1, None, None, 2, 9),
        (2, None, Some(84000), 1, 1),
        (3, Some(2), None, 2, 9),
        (4, Some(1), Some(78000), 1, 3),
        (5, Some(1), Some(75000), 2, 4),
        (6, Some(3), Some(79000), 1, 2),
        (7, Some(2), Some(51000), 1, 8),
        (8, Some(3), Some(55000), 3, 6),
        (9, Some(1), Some(53000), 3, 7),
        (10, Some(3), Some(75000), 2, 4),
    ];
    let v = |x: Option<i64>| x.map_or(Value::Null, Value::Int);
    let rows = data.iter().map(|&(e, d, s, _, _)| vec![Value::Int(e), v(d), v(s)]).collect();
    let expected = data.iter().map(|&(_, _, _, r, g)| [r, g]).collect();
    (schema, rows, expected)
}

pub fn emptab_workload() -> Workload {
    let f = |name: &str, part: &[&str]| {
        WindowFunc::new(name, AttrSeq::new(part.iter().copied()).unwrap(), AttrSeq::new([AttrId::desc("salary")]).unwrap(), FuncKind::Rank).unwrap()
    };
    Workload::new(vec![f("rank_in_dept", &["dept"]), f("globalrank", &[])]).unwrap()
}

/// A table physically ordered as a random `(x, y)` with `x` inside a prefix
/// of `y`, and a workload of functions that order matches.
pub fn matched_instance(rng: &mut impl Rng, max_rows: usize, max_wfs: usize) -> Instance {
    let names = attr_names(4);
    let mut cols = vec![Column { name: "id".into(), kind: ValueKind::Int }];
    cols.extend(names.iter().map(|n| Column { name: n.clone(), kind: ValueKind::NullableInt }));
    let schema = Schema::new(cols).unwrap();
    let n_rows = rng.gen_range(1..=max_rows);
    let mut rows: Vec<Row> = (0..n_rows)
        .map(|i| {
            let mut r = vec![Value::Int(i as i64)];
            for _ in 0..4 {
                r.push(if rng.gen_bool(0.05) { Value::Null } else { Value::Int(rng.gen_range(0..5)) });
            }
            r
        })
        .collect();
    let mut y: Vec<String> = names.clone();
    y.shuffle(rng);
    y.truncate(rng.gen_range(1..=4));
    let x_end = rng.gen_range(0..=y.len());
    // Partition attributes are ascending, so descending ones sit past every
    // partition key.
    let desc_from = rng.gen_range(x_end..=y.len());
    let y_ids: Vec<AttrId> =
        y.iter().enumerate().map(|(i, n)| AttrId::with_direction(n, i >= desc_from && rng.gen_bool(0.25))).collect();
    let x: AttrSet = y_ids[..x_end].iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
    let yseq = AttrSeq::new(y_ids.clone()).unwrap();
    let key = schema.key_columns(&yseq).unwrap();
    let xi: Vec<usize> = x.iter().map(|a| schema.index_of(a.name()).unwrap()).collect();
    let mut group_rank: HashMap<Vec<Value>, u64> = HashMap::new();
    for r in &rows {
        let next: u64 = rng.gen();
        group_rank.entry(xi.iter().map(|&i| r[i].clone()).collect()).or_insert(next);
    }
    rows.sort_by(|a, b| {
        let ga: Vec<Value> = xi.iter().map(|&i| a[i].clone()).collect();
        let gb: Vec<Value> = xi.iter().map(|&i| b[i].clone()).collect();
        group_rank[&ga].cmp(&group_rank[&gb]).then_with(|| cmp_rows(a, b, &key))
    });
    let input = if x.is_empty() { SegProp::sorted(yseq) } else { SegProp::grouped(x, yseq).unwrap() };
    let n_wfs = rng.gen_range(1..=max_wfs);
    let mut funcs = Vec::new();
    for i in 0..n_wfs {
        let j = rng.gen_range(x_end..=desc_from);
        let l = rng.gen_range(j.max(1)..=y.len());
        let mut part: Vec<AttrId> = y_ids[..j].to_vec();
        part.shuffle(rng);
        let order = y_ids[j..l].to_vec();
        let kind = match rng.gen_range(0..4) {
            0 => FuncKind::DenseRank,
            1 => FuncKind::Sum(AttrId::new(&names[rng.gen_range(0..4)])),
            2 => FuncKind::RowNumber,
            _ => FuncKind::Rank,
        };
        funcs.push(WindowFunc::new(&format!("w{i}"), AttrSeq::new(part).unwrap(), AttrSeq::new(order).unwrap(), kind).unwrap());
    }
    Instance { schema, stats_rows: rows.len() as f64, rows, input, workload: Workload::new(funcs).unwrap() }
}

/// Evaluates a matched workload in a random order with no reordering and
/// compares with the oracle. Also checks that the planner adds no reorder
/// step and that the rows come out in input order.
pub fn check_matched_chain(rng: &mut impl Rng) -> Result<(), String> {
    let inst = matched_instance(rng, 120, 4);
    for wf in inst.workload.funcs() {
        if !winchain_core::order::matches(&inst.input, wf) {
            return Err(format!("generator bug: {} does not match {wf}", inst.input));
        }
    }
    let stats = stats_of(&inst.schema, &inst.rows, 4.0, 3);
    let cso = winchain_core::optimizer::plan(winchain_core::optimizer::Scheme::Cso, &inst.input, &inst.workload, &stats)
        .map_err(|e| e.to_string())?;
    if cso.steps.iter().any(|s| !s.reorder.is_none()) {
        return Err(format!("CSO reorders a matched workload from {}", inst.input));
    }
    let mut order: Vec<usize> = (0..inst.workload.len()).collect();
    order.shuffle(rng);
    let mut plan = Plan::new();
    for f in order {
        plan.push(winchain_core::ReorderStep::None, f, winchain_core::CostEstimate::ZERO);
    }
    let out = run(&inst, &plan, &stats, 3, 256).map_err(|e| format!("{e}"))?;
    let width = inst.schema.len();
    if out.rows.iter().map(|r| &r[..width]).ne(inst.rows.iter().map(|r| &r[..])) {
        return Err("evaluation reordered rows".into());
    }
    check_against_oracle(&inst, &out.rows)
}

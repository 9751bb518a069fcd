//! The benchmark workloads over the web sales table, all `rank()`.

use rand::seq::SliceRandom;
use rand::Rng;
use winchain_core::{AttrSeq, FuncKind, WindowFunc, Workload};

use crate::error::{EngineError, Result};

pub const WS_ATTRS: [&str; 6] = ["date", "time", "ship", "item", "bill", "quantity"];

type Def<'a> = (&'a str, &'a [&'a str], &'a [&'a str]);

fn workload(funcs: &[Def]) -> Workload {
    Workload::new(funcs.iter().map(|(n, p, o)| WindowFunc::of(n, p, o).expect("valid function")).collect())
        .expect("valid workload")
}

/// Workload of a named query, `q1` to `q9`.
pub fn query(name: &str) -> Result<Workload> {
    Ok(match name {
        "q1" => workload(&[("wf1", &["item"], &["time"])]),
        "q2" => workload(&[("wf1", &["item", "bill"], &["time"])]),
        "q3" => workload(&[("wf1", &["quantity"], &["time"])]),
        "q4" | "q5" => workload(&[("wf1", &["quantity"], &["item"])]),
        "q6" => workload(&[("wf1", &["item"], &["date"]), ("wf2", &["item"], &["bill"])]),
        "q7" => workload(&[
            ("wf1", &["date", "time", "ship"], &[]),
            ("wf2", &["time", "date"], &[]),
            ("wf3", &["item"], &[]),
            ("wf4", &[], &["item", "bill"]),
            ("wf5", &["date", "time", "item", "bill"], &["ship"]),
        ]),
        "q8" => workload(&[
            ("wf1", &["date", "time", "ship"], &[]),
            ("wf2", &["time", "date"], &[]),
            ("wf3", &["item"], &[]),
            ("wf4", &["item"], &["bill"]),
            ("wf5", &["date", "time", "item"], &["bill", "ship"]),
        ]),
        "q9" => workload(&[
            ("wf1", &["item"], &["bill", "date"]),
            ("wf2", &["item", "time"], &["date"]),
            ("wf3", &["item"], &["time"]),
            ("wf4", &[], &["item", "date"]),
            ("wf5", &["bill", "date"], &["time"]),
            ("wf6", &["bill"], &["time"]),
            ("wf7", &["date", "time"], &[]),
            ("wf8", &[], &["time"]),
        ]),
        other => return Err(EngineError::format(format!("unknown query `{other}`"))),
    })
}

/// `n` rank functions with a random number of random attributes in each key.
pub fn random_workload(rng: &mut impl Rng, n: usize) -> Workload {
    let funcs = (0..n)
        .map(|i| {
            let mut attrs = WS_ATTRS.to_vec();
            attrs.shuffle(rng);
            let np = rng.gen_range(0..=3);
            let no = rng.gen_range(usize::from(np == 0)..=2);
            let part = AttrSeq::new(attrs[..np].iter().copied()).expect("distinct");
            let order = AttrSeq::new(attrs[np..np + no].iter().copied()).expect("distinct");
            WindowFunc::new(&format!("wf{}", i + 1), part, order, FuncKind::Rank).expect("valid function")
        })
        .collect();
    Workload::new(funcs).expect("distinct names")
}

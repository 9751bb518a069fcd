//! Random workload generators, brute-force oracles and the property checks
//! built on them. Each `check_*` draws one random case from `rng` and returns
//! a description of the first violation.
//!
//! Shared with the acceptance run, which includes this file by path.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use winchain_core::attr::permutations;
use winchain_core::cost::{cost_fs, cost_hs, cost_ss};
use winchain_core::cover::{is_cover_set, is_cover_set_preferring, is_prefixable, theta};
use winchain_core::optimizer::{partition_cover_sets, partition_prefixable, plan, Scheme};
use winchain_core::order::{matches, ss_reorderable, ss_target_with_key};
use winchain_core::{AttrId, AttrSeq, AttrSet, RelStats, ReorderStep, SegProp, WindowFunc, Workload};

pub const ATTRS: [&str; 5] = ["a", "b", "c", "d", "e"];

pub fn names(seq: &AttrSeq) -> Vec<String> {
    seq.iter().map(|a| a.name().to_string()).collect()
}

fn seq_of(attrs: &[&str]) -> AttrSeq {
    AttrSeq::new(attrs.iter().copied()).unwrap()
}

fn pick(rng: &mut impl Rng, pool: usize, max: usize) -> Vec<&'static str> {
    let mut p = ATTRS[..pool].to_vec();
    p.shuffle(rng);
    let n = rng.gen_range(0..=max.min(pool));
    p.truncate(n);
    p
}

/// A window function over the first `pool` attributes with at most
/// `max_wpk` partition and `max_wok` order attributes and a non-empty key.
pub fn random_wf(rng: &mut impl Rng, name: &str, pool: usize, max_wpk: usize, max_wok: usize) -> WindowFunc {
    loop {
        let mut p = ATTRS[..pool].to_vec();
        p.shuffle(rng);
        let np = rng.gen_range(0..=max_wpk.min(pool));
        let no = rng.gen_range(0..=max_wok.min(pool - np));
        if np + no == 0 {
            continue;
        }
        return WindowFunc::of(name, &p[..np], &p[np..np + no]).unwrap();
    }
}

pub fn random_workload(rng: &mut impl Rng, n: usize, pool: usize, max_wpk: usize, max_wok: usize) -> Vec<WindowFunc> {
    (0..n).map(|i| random_wf(rng, &format!("w{i}"), pool, max_wpk, max_wok)).collect()
}

pub fn random_segprop(rng: &mut impl Rng, pool: usize) -> SegProp {
    match rng.gen_range(0..4) {
        0 => SegProp::unordered(),
        1 => {
            let mut y = pick(rng, pool, 3);
            if y.is_empty() {
                y.push(ATTRS[0]);
            }
            SegProp::sorted(seq_of(&y))
        }
        _ => {
            let x: AttrSet = pick(rng, pool, 2).into_iter().map(AttrId::new).collect();
            let y = seq_of(&pick(rng, pool, 3));
            if x.is_empty() {
                SegProp::sorted(y)
            } else if rng.gen_bool(0.5) {
                SegProp::grouped(x, y).unwrap()
            } else {
                SegProp::segmented(x, y)
            }
        }
    }
}

/// Every `P ∘ wok` of `wf`, by enumeration.
pub fn all_keys(wf: &WindowFunc) -> Vec<AttrSeq> {
    permutations(wf.wpk(), 8)
        .unwrap()
        .map(|p| p.concat(wf.wok()).unwrap())
        .collect()
}

fn prefix_len(a: &AttrSeq, b: &AttrSeq) -> usize {
    a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count()
}

pub fn bf_matches(r: &SegProp, wf: &WindowFunc) -> bool {
    r.x.is_subset(wf.wpk()) && all_keys(wf).iter().any(|k| k.len() <= r.y.len() && prefix_len(k, &r.y) == k.len())
}

/// Longest reusable prefix over all applicable keys, if any key applies.
pub fn bf_ss_alpha(r: &SegProp, wf: &WindowFunc) -> Option<usize> {
    all_keys(wf)
        .iter()
        .filter_map(|k| {
            let a = prefix_len(k, &r.y);
            let ok = if r.x.is_empty() { a > 0 } else { r.x.is_subset(wf.wpk()) };
            ok.then_some(a)
        })
        .max()
}

fn is_key_prefix(wf: &WindowFunc, gamma: &AttrSeq) -> bool {
    all_keys(wf).iter().any(|k| k.len() <= gamma.len() && prefix_len(k, gamma) == k.len())
}

pub fn bf_cover_set(ws: &[&WindowFunc]) -> bool {
    ws.iter().any(|c| all_keys(c).iter().any(|g| ws.iter().all(|w| is_key_prefix(w, g))))
}

/// Longest common prefix over every combination of keys, smallest by name
/// among the longest; `None` when no combination shares a first attribute.
pub fn bf_theta(ws: &[&WindowFunc]) -> Option<Vec<String>> {
    let keys: Vec<Vec<AttrSeq>> = ws.iter().map(|w| all_keys(w)).collect();
    let mut best: Option<Vec<String>> = None;
    let mut idx = vec![0usize; ws.len()];
    loop {
        let first = &keys[0][idx[0]];
        let len = (1..ws.len()).map(|i| prefix_len(first, &keys[i][idx[i]])).min().unwrap_or(first.len());
        if len > 0 {
            let cand = names(&first.prefix(len));
            let better = match &best {
                None => true,
                Some(b) => cand.len() > b.len() || (cand.len() == b.len() && cand < *b),
            };
            if better {
                best = Some(cand);
            }
        }
        let mut i = 0;
        loop {
            if i == ws.len() {
                return best;
            }
            idx[i] += 1;
            if idx[i] < keys[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Every partition of `0..n` into blocks.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![vec![]];
    for i in 0..n {
        let mut next = Vec::new();
        for p in out {
            for b in 0..p.len() {
                let mut q: Vec<Vec<usize>> = p.clone();
                q[b].push(i);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![i]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// Fewest blocks in a partition of `ws` whose every block satisfies `ok`.
pub fn exhaustive_min(ws: &[&WindowFunc], ok: impl Fn(&[&WindowFunc]) -> bool) -> usize {
    set_partitions(ws.len())
        .into_iter()
        .filter(|p| p.iter().all(|b| ok(&b.iter().map(|&i| ws[i]).collect::<Vec<_>>())))
        .map(|p| p.len())
        .min()
        .unwrap()
}

pub fn bf_prefixable(ws: &[&WindowFunc]) -> bool {
    bf_theta(ws).is_some()
}

type Check = Result<(), String>;

fn fail(msg: String) -> Check {
    Err(msg)
}

/// Matching agrees with enumeration of partition-key permutations.
pub fn check_matches(rng: &mut impl Rng) -> Check {
    let r = random_segprop(rng, 5);
    let wf = random_wf(rng, "w", 5, 4, 2);
    if matches(&r, &wf) != bf_matches(&r, &wf) {
        return fail(format!("matches({r}, {wf}) disagrees with enumeration"));
    }
    Ok(())
}

/// Segmented-sort applicability and the reused prefix agree with
/// enumeration, and the target is a key of the function.
pub fn check_ss_reorderable(rng: &mut impl Rng) -> Check {
    let r = random_segprop(rng, 5);
    let wf = random_wf(rng, "w", 5, 4, 2);
    let got = ss_reorderable(&r, &wf);
    let want = bf_ss_alpha(&r, &wf);
    match (&got, want) {
        (None, None) => Ok(()),
        (Some(t), Some(a)) => {
            if t.alpha.len() != a {
                return fail(format!("{r}, {wf}: alpha {} but {a} attributes are reusable", t.alpha));
            }
            if !all_keys(&wf).contains(&t.key) || t.output.y != t.key || t.output.x != r.x {
                return fail(format!("{r}, {wf}: bad target {:?}", t));
            }
            Ok(())
        }
        _ => fail(format!("ss_reorderable({r}, {wf}) = {got:?}, enumeration says {want:?}")),
    }
}

/// Segmented sorting for one function keeps another function's
/// reorderability, and evaluating a function keeps the order.
pub fn check_theorem2(rng: &mut impl Rng) -> Check {
    let r = random_segprop(rng, 5);
    let wf1 = random_wf(rng, "w1", 5, 3, 2);
    let wf2 = random_wf(rng, "w2", 5, 3, 2);
    if ReorderStep::None.output(&r, None) != r {
        return fail(format!("evaluation changed {r}"));
    }
    let Some(t) = ss_reorderable(&r, &wf1) else { return Ok(()) };
    let before = ss_reorderable(&r, &wf2).is_some();
    let after = ss_reorderable(&t.output, &wf2).is_some();
    if before != after {
        return fail(format!("{wf2} reorderable from {r}: {before}, from {}: {after}", t.output));
    }
    Ok(())
}

/// A workload all of whose members some order matches is a cover set.
pub fn check_theorem5(rng: &mut impl Rng) -> Check {
    let mut y = ATTRS.to_vec();
    y.shuffle(rng);
    y.truncate(rng.gen_range(1..=5));
    let nx = rng.gen_range(0..=y.len().min(2));
    let x_end = if nx == 0 { 0 } else { rng.gen_range(nx..=y.len()) };
    let mut x_pool = y[..x_end].to_vec();
    x_pool.shuffle(rng);
    let x: AttrSet = x_pool[..nx].iter().map(|n| AttrId::new(n)).collect();
    let r = SegProp::segmented(x, seq_of(&y));
    let n = rng.gen_range(1..=5);
    let mut ws = Vec::new();
    for i in 0..n {
        let j = rng.gen_range(x_end..=y.len());
        let l = rng.gen_range(j.max(1)..=y.len());
        let mut part = y[..j].to_vec();
        part.shuffle(rng);
        ws.push(WindowFunc::of(&format!("w{i}"), &part, &y[j..l]).unwrap());
    }
    let refs: Vec<&WindowFunc> = ws.iter().collect();
    if let Some(w) = ws.iter().find(|w| !matches(&r, w)) {
        return fail(format!("generator bug: {r} does not match {w}"));
    }
    if is_cover_set(&refs).is_none() || !bf_cover_set(&refs) {
        return fail(format!("{r} matches all of {ws:?} but no cover set was found"));
    }
    Ok(())
}

/// Segmented sorting to the covering key of a cover set makes the stream
/// match every member.
pub fn check_theorem7(rng: &mut impl Rng) -> Check {
    let r = random_segprop(rng, 5);
    let mut gamma = ATTRS.to_vec();
    gamma.shuffle(rng);
    gamma.truncate(rng.gen_range(1..=5));
    let n = rng.gen_range(1..=4);
    let mut ws = Vec::new();
    for i in 0..n {
        let l = rng.gen_range(1..=gamma.len());
        let j = rng.gen_range(0..=l);
        let mut part = gamma[..j].to_vec();
        part.shuffle(rng);
        ws.push(WindowFunc::of(&format!("w{i}"), &part, &gamma[j..l]).unwrap());
    }
    let refs: Vec<&WindowFunc> = ws.iter().collect();
    if is_cover_set(&refs).is_none() {
        return fail(format!("{ws:?} built from one sequence is not a cover set"));
    }
    if refs.iter().any(|w| ss_reorderable(&r, w).is_none()) {
        return Ok(());
    }
    // The covering key closest to the input order; when even that one is
    // out of reach of a segmented sort, enumeration must agree.
    let (c, g) = is_cover_set_preferring(&refs, &r.y).unwrap();
    let Some(t) = ss_target_with_key(&r, refs[c], g.clone()) else {
        let reachable = refs.iter().enumerate().any(|(i, w)| {
            all_keys(w).into_iter().any(|k| {
                refs.iter().all(|v| is_key_prefix(v, &k)) && ss_target_with_key(&r, refs[i], k).is_some()
            })
        });
        if reachable {
            return fail(format!("segmented sort of {r} to {g} not applicable, but another covering key is"));
        }
        return Ok(());
    };
    if let Some(w) = refs.iter().find(|w| !matches(&t.output, w)) {
        return fail(format!("{} does not match {w} of cover set keyed {g}", t.output));
    }
    Ok(())
}

/// The cover-set decision and its covering key agree with enumeration.
pub fn check_cover_set(rng: &mut impl Rng) -> Check {
    let n = rng.gen_range(1..=4);
    let ws = random_workload(rng, n, 4, 3, 2);
    let refs: Vec<&WindowFunc> = ws.iter().collect();
    let got = is_cover_set(&refs);
    if got.is_some() != bf_cover_set(&refs) {
        return fail(format!("is_cover_set({ws:?}) = {got:?} disagrees with enumeration"));
    }
    if let Some((c, g)) = got {
        if !all_keys(refs[c]).contains(&g) || refs.iter().any(|w| !is_key_prefix(w, &g)) {
            return fail(format!("{g} is not a covering key of {ws:?}"));
        }
    }
    Ok(())
}

/// The single-attribute prefixability test and theta agree with
/// enumeration over all key combinations.
pub fn check_prefixable(rng: &mut impl Rng) -> Check {
    let n = rng.gen_range(1..=4);
    let ws = random_workload(rng, n, 4, 3, 2);
    let refs: Vec<&WindowFunc> = ws.iter().collect();
    let want = bf_theta(&refs);
    let got = is_prefixable(&refs);
    if got.is_some() != want.is_some() {
        return fail(format!("is_prefixable({ws:?}) = {got:?}, enumeration {want:?}"));
    }
    if let Some(want) = want {
        let t = theta(&refs).map_err(|e| e.to_string())?;
        if names(&t) != want {
            return fail(format!("theta({ws:?}) = {t}, enumeration {want:?}"));
        }
        if let Some(a) = got {
            let heads: Vec<String> = refs.iter().map(|w| all_keys(w)).fold(None::<Vec<String>>, |acc, ks| {
                let h: Vec<String> = ks.iter().map(|k| k[0].name().to_string()).collect();
                Some(match acc {
                    None => h,
                    Some(a) => a.into_iter().filter(|x| h.contains(x)).collect(),
                })
            }).unwrap();
            if heads.iter().min().map(String::as_str) != Some(a.name()) {
                return fail(format!("witness {a} of {ws:?} is not the smallest of {heads:?}"));
            }
        }
    }
    Ok(())
}

/// Random statistics where the segmented sort's units are at least as fine
/// as the hashed sort's buckets: segments on the hash key, or a reused
/// prefix that contains it.
pub fn check_ss_not_above_hs(rng: &mut impl Rng) -> Check {
    let blocks = rng.gen_range(1.0..1e6f64).floor();
    let rows = blocks * rng.gen_range(1.0..200.0f64).floor();
    let m = rng.gen_range(3.0..(blocks + 10.0).min(1e5)).floor();
    let da = rng.gen_range(1.0..rows.min(1e7) + 1.0).floor();
    let db = rng.gen_range(1.0..1e4f64).floor();
    let stats = RelStats::new(blocks, rows, m).with_distinct("a", da).with_distinct("b", db);
    let whk: AttrSet = [AttrId::new("a")].into_iter().collect();
    let hs = cost_hs(&stats, &whk).io_blocks;
    let (alpha, x, k) = match rng.gen_range(0..3) {
        0 => (AttrSeq::empty(), whk.clone(), stats.distinct_of(&whk)),
        1 => (seq_of(&["a"]), AttrSet::empty(), 1.0),
        _ => (seq_of(&["a", "b"]), AttrSet::empty(), 1.0),
    };
    let ss = cost_ss(&stats, &alpha, &x, k).io_blocks;
    if ss > hs {
        return fail(format!("B={blocks} T={rows} M={m} D(a)={da} D(b)={db} alpha={alpha} x={x}: ss {ss} > hs {hs}"));
    }
    Ok(())
}

/// Full sort cost does not grow with memory and does not shrink with size;
/// hashed sort stops partitioning once every bucket stays resident.
pub fn check_cost_monotone(rng: &mut impl Rng) -> Check {
    let blocks = rng.gen_range(1.0..1e6f64).floor();
    let m = rng.gen_range(3.0..1e4f64).floor();
    let s = RelStats::new(blocks, blocks * 10.0, m);
    let more_mem = s.with_mem(m + rng.gen_range(1.0..1e4f64).floor());
    let bigger = RelStats::new(blocks + rng.gen_range(1.0..1e6f64).floor(), blocks * 10.0, m);
    if cost_fs(&more_mem).io_blocks > cost_fs(&s).io_blocks || cost_fs(&bigger).io_blocks < cost_fs(&s).io_blocks {
        return fail(format!("cost_fs not monotone at B={blocks} M={m}"));
    }
    let n = rng.gen_range(1.0..1e3f64).floor();
    let fits = RelStats::new(blocks, blocks * 10.0, blocks.max(3.0)).with_distinct("a", n);
    let whk: AttrSet = [AttrId::new("a")].into_iter().collect();
    if cost_hs(&fits, &whk).io_blocks != 0.0 {
        return fail(format!("hashed sort of {blocks} blocks with M={} still costs I/O", fits.mem_blocks));
    }
    Ok(())
}

/// Stats for a random planning case.
pub fn random_stats(rng: &mut impl Rng) -> RelStats {
    let blocks = rng.gen_range(10.0..1e5f64).floor();
    let rows = blocks * 50.0;
    let mut s = RelStats::new(blocks, rows, rng.gen_range(3.0..blocks).floor());
    for a in ATTRS {
        s = s.with_distinct(a, rng.gen_range(1.0..rows).floor());
    }
    s
}

fn random_planning_case(rng: &mut impl Rng, max_wfs: usize) -> (Workload, SegProp, RelStats) {
    let n = rng.gen_range(1..=max_wfs);
    let w = Workload::new(random_workload(rng, n, 5, 3, 2)).unwrap();
    (w, random_segprop(rng, 5), random_stats(rng))
}

fn all_plans(w: &Workload, r: &SegProp, stats: &RelStats, schemes: &[Scheme]) -> Result<Vec<winchain_core::Plan>, String> {
    schemes
        .iter()
        .copied()
        .map(|s| {
            let p = plan(s, r, w, stats).map_err(|e| format!("{s}: {e}"))?;
            p.validate(r, w).map_err(|e| format!("{s} plan invalid: {e}"))?;
            Ok(p)
        })
        .collect()
}

/// Plans of all schemes are valid; BFO is never costlier than CSO; step
/// estimates do not depend on how many functions ran before.
pub fn check_planners(rng: &mut impl Rng) -> Check {
    // Exhaustive search at six functions takes a few hundred milliseconds.
    let (w, r, stats) = random_planning_case(rng, 5);
    let plans = all_plans(&w, &r, &stats, &Scheme::ALL)?;
    let (cso, bfo) = (&plans[0], &plans[1]);
    if bfo.est_cost() > cso.est_cost() + 1e-6 {
        return fail(format!("{w:?} from {r}: BFO {} above CSO {}", bfo.est_cost(), cso.est_cost()));
    }
    // Replaying the steps from the input reproduces every step estimate.
    let mut cur = r.clone();
    for (i, st) in cso.steps.iter().enumerate() {
        let c = st.reorder.cost(&cur, &stats).io_blocks;
        if (c - st.est_cost).abs() > 1e-9 * c.max(1.0) {
            return fail(format!("step {i} estimate {} but replay gives {c}", st.est_cost));
        }
        cur = st.reorder.output(&cur, Some(&stats));
    }
    Ok(())
}

#[derive(Debug, Default)]
pub struct BaselineCounts {
    pub cases: usize,
    pub more_fs_hs_than_orcl: usize,
    pub more_reorders_than_psql: usize,
    pub fs_hs_example: Option<String>,
    pub reorder_example: Option<String>,
}

/// Tallies random cases where CSO uses more full/hashed sorts than ORCL or
/// more reorders than PSQL.
pub fn compare_baselines(rng: &mut impl Rng, c: &mut BaselineCounts) -> Check {
    let (w, r, stats) = random_planning_case(rng, 6);
    let plans = all_plans(&w, &r, &stats, &[Scheme::Cso, Scheme::Orcl, Scheme::Psql])?;
    let reorders = |p: &winchain_core::Plan| p.steps.iter().filter(|s| !s.reorder.is_none()).count();
    c.cases += 1;
    if plans[0].shape().fs_hs > plans[1].shape().fs_hs {
        c.more_fs_hs_than_orcl += 1;
        c.fs_hs_example.get_or_insert_with(|| format!("{w:?} from {r}"));
    }
    if reorders(&plans[0]) > reorders(&plans[2]) {
        c.more_reorders_than_psql += 1;
        c.reorder_example.get_or_insert_with(|| format!("{w:?} from {r}"));
    }
    Ok(())
}

/// Heuristic group counts against the exhaustive minimum.
pub struct Quality {
    pub prefixable_exact: bool,
    pub prefixable_within_one: bool,
    pub cover_within_one: bool,
    pub cover_exact: bool,
}

pub fn heuristic_quality(rng: &mut impl Rng) -> Result<Quality, String> {
    let n = rng.gen_range(1..=6);
    let ws = random_workload(rng, n, 5, 3, 2);
    let refs: Vec<&WindowFunc> = ws.iter().collect();
    let groups = partition_prefixable(&refs);
    for g in &groups {
        let members: Vec<&WindowFunc> = g.members.iter().map(|&i| refs[i]).collect();
        if !bf_prefixable(&members) {
            return Err(format!("group {:?} of {ws:?} is not prefixable", g.members));
        }
    }
    let sets = partition_cover_sets(&refs);
    for s in &sets {
        let members: Vec<&WindowFunc> = s.members.iter().map(|&i| refs[i]).collect();
        if !bf_cover_set(&members) {
            return Err(format!("class {:?} of {ws:?} is not a cover set", s.members));
        }
    }
    let mut all: Vec<usize> = groups.iter().flat_map(|g| g.members.clone()).chain(sets.iter().flat_map(|s| s.members.clone())).collect();
    all.sort_unstable();
    if all != (0..n).flat_map(|i| [i, i]).collect::<Vec<_>>() {
        return Err(format!("groups or classes of {ws:?} do not partition it"));
    }
    let min_p = exhaustive_min(&refs, bf_prefixable);
    let min_c = exhaustive_min(&refs, bf_cover_set);
    Ok(Quality {
        prefixable_exact: groups.len() == min_p,
        prefixable_within_one: groups.len() <= min_p + 1,
        cover_within_one: sets.len() <= min_c + 1,
        cover_exact: sets.len() == min_c,
    })
}

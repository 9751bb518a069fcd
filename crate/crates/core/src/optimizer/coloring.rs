//! Cover-set partitioning by coloring the graph of pairwise conflicts.

use alloc::vec::Vec;

use crate::cover::{is_cover_set, CoverSet};
use crate::order::WindowFunc;

/// Undirected graph with an edge between two functions that cannot share a
/// cover set.
pub struct ConflictGraph {
    adj: Vec<Vec<bool>>,
}

impl ConflictGraph {
    pub fn new(funcs: &[&WindowFunc]) -> Self {
        let n = funcs.len();
        let mut adj = alloc::vec![alloc::vec![false; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let conflict = is_cover_set(&[funcs[i], funcs[j]]).is_none();
                adj[i][j] = conflict;
                adj[j][i] = conflict;
            }
        }
        ConflictGraph { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn conflicts(&self, i: usize, j: usize) -> bool {
        self.adj[i][j]
    }

    fn degree(&self, i: usize) -> usize {
        self.adj[i].iter().filter(|&&e| e).count()
    }

    /// Brélaz's DSATUR: repeatedly color the uncolored vertex with the most
    /// distinctly colored neighbours (then highest degree, then lowest
    /// index) with the smallest color its neighbours do not use.
    pub fn dsatur(&self) -> Vec<usize> {
        let n = self.len();
        let mut color: Vec<Option<usize>> = alloc::vec![None; n];
        let degree: Vec<usize> = (0..n).map(|i| self.degree(i)).collect();
        for _ in 0..n {
            let mut pick: Option<(usize, usize, usize)> = None;
            for v in (0..n).filter(|&v| color[v].is_none()) {
                let mut seen: Vec<usize> = (0..n)
                    .filter(|&u| self.adj[v][u])
                    .filter_map(|u| color[u])
                    .collect();
                seen.sort_unstable();
                seen.dedup();
                let key = (seen.len(), degree[v]);
                if pick.map_or(true, |(_, s, d)| key > (s, d)) {
                    pick = Some((v, key.0, key.1));
                }
            }
            let (v, _, _) = pick.expect("an uncolored vertex remains");
            let used: Vec<usize> = (0..n)
                .filter(|&u| self.adj[v][u])
                .filter_map(|u| color[u])
                .collect();
            color[v] = (0..).find(|c| !used.contains(c));
        }
        color.into_iter().map(|c| c.unwrap_or(0)).collect()
    }
}

/// Partitions `funcs` into cover sets.
///
/// Colour classes of the conflict graph are only pairwise compatible, so
/// each class is checked as a whole; a failing class keeps the members that
/// still form a cover set (in index order) and the rest are partitioned
/// again. Classes come out by descending size, ties by smallest member
/// index; indices refer to `funcs` and each class lists its covering member
/// first.
pub fn partition_cover_sets(funcs: &[&WindowFunc]) -> Vec<CoverSet> {
    let mut out = Vec::new();
    let graph = ConflictGraph::new(funcs);
    let colors = graph.dsatur();
    let classes = colors.iter().copied().max().map_or(0, |m| m + 1);
    for c in 0..classes {
        let members: Vec<usize> = (0..funcs.len()).filter(|&i| colors[i] == c).collect();
        split_into_cover_sets(funcs, members, &mut out);
    }
    out.sort_by(|a, b| {
        b.members
            .len()
            .cmp(&a.members.len())
            .then_with(|| min_member(a).cmp(&min_member(b)))
    });
    out
}

fn min_member(c: &CoverSet) -> usize {
    c.members.iter().copied().min().unwrap_or(usize::MAX)
}

fn split_into_cover_sets(funcs: &[&WindowFunc], mut members: Vec<usize>, out: &mut Vec<CoverSet>) {
    while !members.is_empty() {
        let mut kept: Vec<usize> = Vec::new();
        let mut rest: Vec<usize> = Vec::new();
        for &m in &members {
            kept.push(m);
            let refs: Vec<&WindowFunc> = kept.iter().map(|&i| funcs[i]).collect();
            if is_cover_set(&refs).is_none() {
                kept.pop();
                rest.push(m);
            }
        }
        let refs: Vec<&WindowFunc> = kept.iter().map(|&i| funcs[i]).collect();
        let (c, gamma) = is_cover_set(&refs).expect("kept members form a cover set");
        let covering = kept[c];
        let mut ordered = alloc::vec![covering];
        ordered.extend(kept.iter().copied().filter(|&i| i != covering));
        out.push(CoverSet {
            members: ordered,
            covering,
            gamma,
        });
        members = rest;
    }
}

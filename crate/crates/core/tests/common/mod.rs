//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use entigraph::{Corpus, EntitySet, Thread};

type Key = (usize, String, String);

fn set_of<'a>(sets: &'a BTreeMap<String, EntitySet>, id: &str) -> Option<&'a EntitySet> {
    sets.get(id).filter(|s| !s.is_empty())
}

/// Root-to-leaf entity-set sequences of one thread, recomputed straight from
/// the reply structure.
pub fn brute_paths(thread: &Thread, sets: &BTreeMap<String, EntitySet>) -> Vec<Vec<EntitySet>> {
    fn rec(
        thread: &Thread,
        sets: &BTreeMap<String, EntitySet>,
        id: &str,
        prefix: &mut Vec<EntitySet>,
        out: &mut Vec<Vec<EntitySet>>,
    ) {
        let Some(set) = set_of(sets, id) else { return };
        prefix.push(set.clone());
        let live: Vec<&String> = thread.children_of(id).iter().filter(|k| set_of(sets, k).is_some()).collect();
        if live.is_empty() {
            out.push(prefix.clone());
        }
        for k in live {
            rec(thread, sets, k, prefix, out);
        }
        prefix.pop();
    }
    let mut out = Vec::new();
    rec(thread, sets, &thread.root().id, &mut Vec::new(), &mut out);
    out
}

/// Distinct-(thread, transition) recount of every transition weight.
pub fn brute_transitions(corpus: &Corpus, sets: &BTreeMap<String, EntitySet>, min_len: usize) -> BTreeMap<Key, u64> {
    let mut seen: BTreeSet<(String, Key)> = BTreeSet::new();
    for thread in corpus.threads() {
        for path in brute_paths(thread, sets) {
            if path.len() < min_len {
                continue;
            }
            for d in 0..path.len() - 1 {
                seen.insert((thread.id().to_string(), (d, path[d].key(), path[d + 1].key())));
            }
        }
    }
    let mut counts = BTreeMap::new();
    for (_, key) in seen {
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

/// Distinct-(thread, set, depth) recount of set occurrences.
pub fn brute_occurrences(corpus: &Corpus, sets: &BTreeMap<String, EntitySet>, min_len: usize) -> BTreeMap<(usize, String), u64> {
    let mut seen: BTreeSet<(String, usize, String)> = BTreeSet::new();
    for thread in corpus.threads() {
        for path in brute_paths(thread, sets) {
            if path.len() < min_len {
                continue;
            }
            for (d, s) in path.iter().enumerate() {
                seen.insert((thread.id().to_string(), d, s.key()));
            }
        }
    }
    let mut counts = BTreeMap::new();
    for (_, d, s) in seen {
        *counts.entry((d, s)).or_insert(0) += 1;
    }
    counts
}

/// Exhaustive optimal transport between uniform distributions: enumerate
/// every basic feasible solution of the transportation polytope (spanning
/// trees of the bipartite cell graph) and keep the cheapest.
pub fn brute_transport(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let m = cost[0].len();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let k = n + m - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k);
    combinations(&cells, k, 0, &mut chosen, &mut |basis| {
        if let Some(flow) = tree_flow(n, m, basis) {
            let c: f64 = basis.iter().zip(&flow).map(|(&(i, j), &f)| f as f64 * cost[i][j]).sum();
            best = best.min(c / (n * m) as f64);
        }
    });
    best
}

fn combinations<F: FnMut(&[(usize, usize)])>(
    cells: &[(usize, usize)],
    k: usize,
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut F,
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for idx in start..cells.len() {
        if cells.len() - idx < k - chosen.len() {
            break;
        }
        chosen.push(cells[idx]);
        combinations(cells, k, idx + 1, chosen, visit);
        chosen.pop();
    }
}

/// Flow on a basis of `n + m - 1` cells with row sums `m` and column sums
/// `n`, or `None` if the cells do not form a tree or the flow is negative.
fn tree_flow(n: usize, m: usize, basis: &[(usize, usize)]) -> Option<Vec<i64>> {
    let mut row_left = vec![m as i64; n];
    let mut col_left = vec![n as i64; m];
    let mut flow = vec![None::<i64>; basis.len()];
    let mut solved = 0;
    while solved < basis.len() {
        let mut progress = false;
        for line in 0..n + m {
            let open: Vec<usize> = (0..basis.len())
                .filter(|&c| flow[c].is_none() && if line < n { basis[c].0 == line } else { basis[c].1 == line - n })
                .collect();
            if open.len() != 1 {
                continue;
            }
            let c = open[0];
            let (i, j) = basis[c];
            let f = if line < n { row_left[i] } else { col_left[j] };
            flow[c] = Some(f);
            row_left[i] -= f;
            col_left[j] -= f;
            solved += 1;
            progress = true;
        }
        if !progress {
            return None;
        }
    }
    if row_left.iter().chain(&col_left).any(|&r| r != 0) {
        return None;
    }
    let flow: Vec<i64> = flow.into_iter().map(Option::unwrap).collect();
    if flow.iter().any(|&f| f < 0) {
        return None;
    }
    Some(flow)
}

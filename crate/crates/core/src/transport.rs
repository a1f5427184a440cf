//! Word Mover's Distance between entity sets.
//!
//! Both sets carry uniform mass over their embedded members. The transport
//! problem is solved exactly as an integer min-cost flow: with `n` sources and
//! `m` sinks, each source supplies `m` units and each sink absorbs `n`, and the
//! resulting cost is divided by `n * m`.

use crate::embedding::EmbeddingTable;
use crate::entity::EntitySet;

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// WMD between `a` and `b`, ignoring members without a vector. `None` when
/// either side has no embedded member.
pub fn wmd(a: &EntitySet, b: &EntitySet, emb: &EmbeddingTable) -> Option<f64> {
    // Solve in canonical argument order so the result is bitwise symmetric.
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let pa: Vec<&[f64]> = a.iter().filter_map(|e| emb.get(e.as_str())).collect();
    let pb: Vec<&[f64]> = b.iter().filter_map(|e| emb.get(e.as_str())).collect();
    if pa.is_empty() || pb.is_empty() {
        return None;
    }
    if a == b {
        return Some(0.0);
    }
    Some(uniform_transport_cost(&pa, &pb))
}

/// Optimal cost of moving a uniform distribution over `a` onto a uniform
/// distribution over `b` with Euclidean ground distance.
pub fn uniform_transport_cost(a: &[&[f64]], b: &[&[f64]]) -> f64 {
    let (n, m) = (a.len(), b.len());
    assert!(n > 0 && m > 0, "transport between empty point sets");
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| euclidean(x, y)).collect()).collect();
    let flow = min_cost_transport(&vec![m as u64; n], &vec![n as u64; m], &cost);
    let mut total = 0.0;
    for (i, row) in flow.iter().enumerate() {
        for (j, &f) in row.iter().enumerate() {
            total += f as f64 * cost[i][j];
        }
    }
    total / (n * m) as f64
}

struct Arc {
    to: usize,
    cap: u64,
    cost: f64,
}

/// Balanced transportation problem solved by successive shortest paths with
/// Bellman-Ford on the residual network. Returns the flow matrix.
pub fn min_cost_transport(supply: &[u64], demand: &[u64], cost: &[Vec<f64>]) -> Vec<Vec<u64>> {
    let (n, m) = (supply.len(), demand.len());
    debug_assert_eq!(supply.iter().sum::<u64>(), demand.iter().sum::<u64>());
    let source = n + m;
    let sink = n + m + 1;
    let nodes = n + m + 2;
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let add = |arcs: &mut Vec<Arc>, adj: &mut Vec<Vec<usize>>, u: usize, v: usize, cap: u64, c: f64| {
        adj[u].push(arcs.len());
        arcs.push(Arc { to: v, cap, cost: c });
        adj[v].push(arcs.len());
        arcs.push(Arc { to: u, cap: 0, cost: -c });
    };
    for (i, &s) in supply.iter().enumerate() {
        add(&mut arcs, &mut adj, source, i, s, 0.0);
    }
    let mut cell = vec![vec![0usize; m]; n];
    for i in 0..n {
        for j in 0..m {
            cell[i][j] = arcs.len();
            add(&mut arcs, &mut adj, i, n + j, u64::MAX, cost[i][j]);
        }
    }
    for (j, &d) in demand.iter().enumerate() {
        add(&mut arcs, &mut adj, n + j, sink, d, 0.0);
    }

    let mut remaining: u64 = supply.iter().sum();
    while remaining > 0 {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via: Vec<Option<usize>> = vec![None; nodes];
        dist[source] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u].is_infinite() {
                    continue;
                }
                for &a in &adj[u] {
                    let arc = &arcs[a];
                    if arc.cap > 0 && dist[u] + arc.cost < dist[arc.to] - 1e-12 {
                        dist[arc.to] = dist[u] + arc.cost;
                        via[arc.to] = Some(a);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut push = remaining;
        let mut v = sink;
        while v != source {
            let a = via[v].expect("balanced problem always has an augmenting path");
            push = push.min(arcs[a].cap);
            v = arcs[a ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let a = via[v].expect("path exists");
            arcs[a].cap -= push;
            arcs[a ^ 1].cap += push;
            v = arcs[a ^ 1].to;
        }
        remaining -= push;
    }

    cell.iter().map(|row| row.iter().map(|&a| arcs[a ^ 1].cap).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::EntityId;
    use crate::entity_set;

    fn table(rows: &[(&str, &[f64])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(rows[0].1.len()).unwrap();
        for (id, v) in rows {
            t.insert(EntityId::new(*id).unwrap(), v.to_vec()).unwrap();
        }
        t
    }

    #[test]
    fn identical_sets_are_zero() {
        let t = table(&[("A", &[1.0, 2.0]), ("B", &[3.0, -1.0])]);
        assert_eq!(wmd(&entity_set!["A", "B"], &entity_set!["A", "B"], &t), Some(0.0));
    }

    #[test]
    fn singletons_are_euclidean() {
        let t = table(&[("A", &[0.0, 0.0, 0.0]), ("B", &[1.0, 2.0, 2.0])]);
        assert_eq!(wmd(&entity_set!["A"], &entity_set!["B"], &t), Some(3.0));
    }

    #[test]
    fn one_to_many_is_the_mean_distance() {
        // All mass of {C} must reach both A and B: cost = (|A-C| + |B-C|) / 2.
        let t = table(&[("A", &[1.0, 0.0, 0.0]), ("B", &[0.0, 2.0, 0.0]), ("C", &[0.0, 0.0, 0.0])]);
        let d = wmd(&entity_set!["A", "B"], &entity_set!["C"], &t).unwrap();
        assert!((d - 1.5).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_picks_the_cheaper_matching() {
        let t = table(&[("A", &[0.0]), ("B", &[10.0]), ("C", &[1.0]), ("D", &[11.0])]);
        let d = wmd(&entity_set!["A", "B"], &entity_set!["C", "D"], &t).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unembedded_members_are_ignored() {
        let t = table(&[("A", &[0.0]), ("B", &[4.0])]);
        assert_eq!(wmd(&entity_set!["A", "Zzz"], &entity_set!["B"], &t), Some(4.0));
        assert_eq!(wmd(&entity_set!["Zzz"], &entity_set!["B"], &t), None);
    }

    #[test]
    fn flow_satisfies_marginals() {
        let cost = vec![vec![1.0, 2.0, 3.0], vec![2.0, 0.5, 1.0]];
        let flow = min_cost_transport(&[3, 3], &[2, 2, 2], &cost);
        for row in &flow {
            assert_eq!(row.iter().sum::<u64>(), 3);
        }
        for j in 0..3 {
            assert_eq!(flow.iter().map(|r| r[j]).sum::<u64>(), 2);
        }
    }
}

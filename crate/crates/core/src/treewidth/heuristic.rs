use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::multigraph::{SimpleGraph, VertexId};

use super::elimination::EliminationOrdering;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeuristicStrategy {
    MinFill,
    MinDegree,
}

/// Greedy elimination. MinFill ranks by (fill, degree, tie), MinDegree by
/// (degree, fill, tie). The tie is the vertex id for seed 0 and a seeded
/// random rank otherwise.
pub fn heuristic_order(
    g: &SimpleGraph,
    strategy: HeuristicStrategy,
    seed: u64,
) -> EliminationOrdering {
    let ids: Vec<VertexId> = g.vertices().collect();
    let n = ids.len();
    let index = |v: VertexId| ids.binary_search(&v).unwrap();
    let mut adj: Vec<BTreeSet<usize>> = ids
        .iter()
        .map(|&v| g.neighbors(v).map(index).collect())
        .collect();
    let mut tie: Vec<usize> = (0..n).collect();
    if seed != 0 {
        tie.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }

    let fill_of = |adj: &[BTreeSet<usize>], v: usize| -> usize {
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in nb.iter().enumerate() {
            missing += nb[i + 1..].iter().filter(|b| !adj[a].contains(b)).count();
        }
        missing
    };

    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !alive.is_empty() {
        let v = *alive
            .iter()
            .min_by_key(|&&v| {
                let (fill, deg) = (fill_of(&adj, v), adj[v].len());
                match strategy {
                    HeuristicStrategy::MinFill => (fill, deg, tie[v]),
                    HeuristicStrategy::MinDegree => (deg, fill, tie[v]),
                }
            })
            .unwrap();
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        for &a in &nb {
            adj[a].remove(&v);
            for &b in &nb {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        adj[v].clear();
        alive.remove(&v);
        order.push(ids[v]);
    }
    EliminationOrdering(order)
}

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::multigraph::{SimpleGraph, VertexId};

use super::elimination::{elimination_width, EliminationOrdering};
use super::heuristic::{heuristic_order, HeuristicStrategy};

/// Default vertex limit for exact solving.
pub const DEFAULT_EXACT_BUDGET: usize = 14;

/// Hard limit imposed by the 64-bit vertex sets.
pub const MAX_EXACT_VERTICES: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactTreewidth {
    pub width: usize,
    pub ordering: EliminationOrdering,
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            i
        })
    })
}

fn bit(i: usize) -> u64 {
    1u64 << i
}

/// Minor-min-width: contract a min-degree vertex into its min-degree
/// neighbour, tracking the largest min degree seen.
fn minor_min_width(adj: &[u64], alive: u64) -> usize {
    let mut adj: Vec<u64> = adj.iter().map(|&a| a & alive).collect();
    let mut alive = alive;
    let mut best = 0;
    while alive.count_ones() > 1 {
        let v = bits(alive)
            .min_by_key(|&v| adj[v].count_ones())
            .unwrap();
        let d = adj[v].count_ones() as usize;
        best = best.max(d);
        if d == 0 {
            alive &= !bit(v);
            continue;
        }
        let u = bits(adj[v]).min_by_key(|&u| adj[u].count_ones()).unwrap();
        let merged = (adj[u] | adj[v]) & !bit(u) & !bit(v);
        for w in bits(adj[v]) {
            adj[w] &= !bit(v);
        }
        for w in bits(merged) {
            adj[w] |= bit(u);
        }
        adj[u] = merged;
        adj[v] = 0;
        alive &= !bit(v);
    }
    best
}

struct Search {
    n: usize,
    adj: Vec<u64>,
    all: u64,
    k: usize,
    failed: HashSet<u64>,
    order: Vec<usize>,
}

impl Search {
    /// Q(S, v) for every v outside S: vertices reachable from v through S.
    fn neighbourhoods(&self, s: u64) -> Vec<u64> {
        let mut q = vec![0u64; self.n];
        for v in bits(self.all & !s) {
            q[v] = self.adj[v] & !s;
        }
        let mut unseen = s;
        while unseen != 0 {
            let start = unseen.trailing_zeros() as usize;
            let mut comp = bit(start);
            let mut frontier = comp;
            while frontier != 0 {
                let mut next = 0;
                for x in bits(frontier) {
                    next |= self.adj[x] & s;
                }
                frontier = next & !comp;
                comp |= frontier;
            }
            unseen &= !comp;
            let mut boundary = 0;
            for x in bits(comp) {
                boundary |= self.adj[x];
            }
            boundary &= !s;
            for v in bits(boundary) {
                q[v] |= boundary & !bit(v);
            }
        }
        q
    }

    fn is_clique(q: &[u64], set: u64) -> bool {
        bits(set).all(|u| set & !bit(u) & !q[u] == 0)
    }

    fn feasible(&mut self, s: u64) -> bool {
        let rest = self.all & !s;
        if rest.count_ones() as usize <= self.k + 1 {
            self.order.extend(bits(rest));
            return true;
        }
        if self.failed.contains(&s) {
            return false;
        }
        let q = self.neighbourhoods(s);

        // Simplicial and almost-simplicial vertices of low enough degree can
        // be eliminated without branching.
        let mut forced = None;
        for v in bits(rest) {
            let deg = q[v].count_ones() as usize;
            if Self::is_clique(&q, q[v]) {
                if deg > self.k {
                    self.failed.insert(s);
                    return false;
                }
                forced = Some(v);
                break;
            }
            if deg <= self.k
                && forced.is_none()
                && bits(q[v]).any(|u| Self::is_clique(&q, q[v] & !bit(u)))
            {
                forced = Some(v);
            }
        }
        if let Some(v) = forced {
            self.order.push(v);
            if self.feasible(s | bit(v)) {
                return true;
            }
            self.order.pop();
            self.failed.insert(s);
            return false;
        }

        if minor_min_width(&q, rest) > self.k {
            self.failed.insert(s);
            return false;
        }
        let mut candidates: Vec<usize> = bits(rest)
            .filter(|&v| q[v].count_ones() as usize <= self.k)
            .collect();
        candidates.sort_by_key(|&v| (q[v].count_ones(), v));
        for v in candidates {
            self.order.push(v);
            if self.feasible(s | bit(v)) {
                return true;
            }
            self.order.pop();
        }
        self.failed.insert(s);
        false
    }
}

/// Treewidth by iterative deepening over the width bound, between a
/// minor-min-width lower bound and the best heuristic ordering.
pub fn exact_treewidth(g: &SimpleGraph, budget: usize) -> Result<ExactTreewidth> {
    let n = g.num_vertices();
    let limit = budget.min(MAX_EXACT_VERTICES);
    if n > limit {
        return Err(Error::GraphTooLarge { size: n, budget: limit });
    }
    let ids: Vec<VertexId> = g.vertices().collect();
    let index = |v: VertexId| ids.binary_search(&v).unwrap();
    let adj: Vec<u64> = ids
        .iter()
        .map(|&v| g.neighbors(v).fold(0, |m, u| m | bit(index(u))))
        .collect();
    let all = if n == 64 { u64::MAX } else { bit(n) - 1 };

    let (mut ub, mut ub_order) = (usize::MAX, EliminationOrdering(ids.clone()));
    for s in [HeuristicStrategy::MinFill, HeuristicStrategy::MinDegree] {
        let pi = heuristic_order(g, s, 0);
        let w = elimination_width(g, &pi)?.width;
        if w < ub {
            (ub, ub_order) = (w, pi);
        }
    }
    let lb = minor_min_width(&adj, all);
    let mut search = Search {
        n,
        adj,
        all,
        k: 0,
        failed: HashSet::new(),
        order: Vec::new(),
    };
    for k in lb..ub {
        search.k = k;
        search.failed.clear();
        search.order.clear();
        if search.feasible(0) {
            let ordering = EliminationOrdering(search.order.iter().map(|&i| ids[i]).collect());
            debug_assert_eq!(elimination_width(g, &ordering).unwrap().width, k);
            return Ok(ExactTreewidth { width: k, ordering });
        }
    }
    Ok(ExactTreewidth {
        width: ub,
        ordering: ub_order,
    })
}

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::multigraph::{SimpleGraph, VertexId};

use super::decomposition::TreeDecomposition;

/// A permutation of V(G); position 0 is eliminated first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EliminationOrdering(pub Vec<VertexId>);

impl EliminationOrdering {
    pub fn as_slice(&self) -> &[VertexId] {
        &self.0
    }
}

/// Outcome of eliminating a graph along an ordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elimination {
    pub width: usize,
    /// Edges added while eliminating, in the order they were created.
    pub fill: Vec<(VertexId, VertexId)>,
    /// Neighbours of each vertex at its removal, aligned with the ordering.
    pub higher: Vec<BTreeSet<VertexId>>,
}

fn check_permutation(g: &SimpleGraph, pi: &EliminationOrdering) -> Result<()> {
    let seen: BTreeSet<VertexId> = pi.0.iter().copied().collect();
    if seen.len() != pi.0.len() {
        return Err(Error::InvalidOrdering("repeated vertex".into()));
    }
    if let Some(v) = pi.0.iter().find(|v| !g.contains_vertex(**v)) {
        return Err(Error::InvalidOrdering(format!("vertex {v} not in graph")));
    }
    if seen.len() != g.num_vertices() {
        return Err(Error::InvalidOrdering(format!(
            "{} of {} vertices listed",
            seen.len(),
            g.num_vertices()
        )));
    }
    Ok(())
}

/// Eliminates along `pi`, making each removed vertex's neighbourhood a clique.
pub fn elimination_width(g: &SimpleGraph, pi: &EliminationOrdering) -> Result<Elimination> {
    check_permutation(g, pi)?;
    let mut adj: BTreeMap<VertexId, BTreeSet<VertexId>> =
        g.vertices().map(|v| (v, g.neighbors(v).collect())).collect();
    let mut width = 0;
    let mut fill = Vec::new();
    let mut higher = Vec::with_capacity(pi.0.len());
    for &v in &pi.0 {
        let nbrs = adj.remove(&v).unwrap();
        width = width.max(nbrs.len());
        let list: Vec<VertexId> = nbrs.iter().copied().collect();
        for &u in &list {
            adj.get_mut(&u).unwrap().remove(&v);
        }
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                if adj.get_mut(&a).unwrap().insert(b) {
                    adj.get_mut(&b).unwrap().insert(a);
                    fill.push((a, b));
                }
            }
        }
        higher.push(nbrs);
    }
    Ok(Elimination {
        width,
        fill,
        higher,
    })
}

/// Bag of v = v plus its neighbours at removal; parent = the earliest of those
/// neighbours to be eliminated. Roots of separate components are chained.
pub fn ordering_to_decomposition(
    g: &SimpleGraph,
    pi: &EliminationOrdering,
) -> Result<TreeDecomposition> {
    let elim = elimination_width(g, pi)?;
    let position: BTreeMap<VertexId, usize> =
        pi.0.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut td = TreeDecomposition::default();
    let mut roots = Vec::new();
    for (i, &v) in pi.0.iter().enumerate() {
        let mut bag = elim.higher[i].clone();
        bag.insert(v);
        td.bags.push(bag);
        match elim.higher[i].iter().map(|u| position[u]).min() {
            Some(parent) => td.edges.push((i, parent)),
            None => roots.push(i),
        }
    }
    for w in roots.windows(2) {
        td.edges.push((w[0], w[1]));
    }
    Ok(td)
}

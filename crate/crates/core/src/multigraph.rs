//! Undirected graphs with parallel edges and loops, plus the simple graphs the
//! treewidth machinery runs on.
//!
//! Degrees follow one convention throughout the crate: every incident edge
//! counts once, and a loop also counts once.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Read-only access shared by both graph flavours.
pub trait GraphView {
    fn vertex_ids(&self) -> Vec<VertexId>;
    /// Endpoint pairs, one per edge (parallel edges repeat, loops have equal ends).
    fn edge_pairs(&self) -> Vec<(VertexId, VertexId)>;
}

/// Undirected multigraph. Edge ids are stable across edits.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MultiGraph {
    incidence: BTreeMap<VertexId, BTreeSet<EdgeId>>,
    edges: BTreeMap<EdgeId, (VertexId, VertexId)>,
    next_edge: EdgeId,
}

/// Result of contracting one edge.
#[derive(Clone, Debug)]
pub struct Contraction {
    pub graph: MultiGraph,
    pub merged: VertexId,
    pub degree: usize,
}

impl MultiGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph on vertices `0..n` without edges.
    pub fn with_vertices(n: usize) -> Self {
        let mut g = Self::new();
        for v in 0..n {
            g.add_vertex(v);
        }
        g
    }

    pub fn add_vertex(&mut self, v: VertexId) {
        self.incidence.entry(v).or_default();
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.incidence.contains_key(&v)
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<EdgeId> {
        let id = self.next_edge;
        self.insert_edge(id, u, v)?;
        Ok(id)
    }

    /// Inserts an edge under a caller-chosen id.
    pub fn insert_edge(&mut self, id: EdgeId, u: VertexId, v: VertexId) -> Result<()> {
        for x in [u, v] {
            if !self.contains_vertex(x) {
                return Err(Error::UnknownVertex(x));
            }
        }
        if self.edges.contains_key(&id) {
            return Err(Error::InvalidOrdering(format!("duplicate edge id {id}")));
        }
        let pair = (u.min(v), u.max(v));
        self.edges.insert(id, pair);
        self.incidence.get_mut(&u).unwrap().insert(id);
        self.incidence.get_mut(&v).unwrap().insert(id);
        self.next_edge = self.next_edge.max(id + 1);
        Ok(())
    }

    pub fn remove_edge(&mut self, e: EdgeId) -> Result<(VertexId, VertexId)> {
        let (u, v) = self.edges.remove(&e).ok_or(Error::UnknownEdge(e))?;
        self.incidence.get_mut(&u).unwrap().remove(&e);
        self.incidence.get_mut(&v).unwrap().remove(&e);
        Ok((u, v))
    }

    /// Removes a vertex and every edge touching it.
    pub fn remove_vertex(&mut self, v: VertexId) -> Result<()> {
        let incident = self.incidence.get(&v).ok_or(Error::UnknownVertex(v))?.clone();
        for e in incident {
            self.remove_edge(e)?;
        }
        self.incidence.remove(&v);
        Ok(())
    }

    pub fn endpoints(&self, e: EdgeId) -> Option<(VertexId, VertexId)> {
        self.edges.get(&e).copied()
    }

    pub fn is_loop(&self, e: EdgeId) -> bool {
        matches!(self.edges.get(&e), Some((u, v)) if u == v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.incidence.keys().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, VertexId, VertexId)> + '_ {
        self.edges.iter().map(|(&e, &(u, v))| (e, u, v))
    }

    pub fn edge_ids(&self) -> Vec<EdgeId> {
        self.edges.keys().copied().collect()
    }

    pub fn num_vertices(&self) -> usize {
        self.incidence.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn incident_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.incidence.get(&v).into_iter().flatten().copied()
    }

    /// d(v); a loop contributes 1.
    pub fn degree(&self, v: VertexId) -> usize {
        self.incidence.get(&v).map_or(0, BTreeSet::len)
    }

    /// Δ(G), zero for the empty graph.
    pub fn max_degree(&self) -> usize {
        self.incidence.values().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn loop_count(&self) -> usize {
        self.edges.values().filter(|(u, v)| u == v).count()
    }

    pub fn other_endpoint(&self, e: EdgeId, v: VertexId) -> Option<VertexId> {
        let (a, b) = self.endpoints(e)?;
        if a == v {
            Some(b)
        } else if b == v {
            Some(a)
        } else {
            None
        }
    }

    /// Contracts `e`: the edge disappears and its end vertices merge into the
    /// smaller id. Other edges between the two ends become loops.
    pub fn contract_edge(&self, e: EdgeId) -> Result<Contraction> {
        let (u, v) = self.endpoints(e).ok_or(Error::UnknownEdge(e))?;
        let mut graph = self.clone();
        graph.remove_edge(e)?;
        let merged = u.min(v);
        if u != v {
            let gone = u.max(v);
            let moved: Vec<EdgeId> = graph.incidence[&gone].iter().copied().collect();
            for f in moved {
                let (a, b) = graph.edges[&f];
                let a = if a == gone { merged } else { a };
                let b = if b == gone { merged } else { b };
                graph.edges.insert(f, (a.min(b), a.max(b)));
                graph.incidence.get_mut(&merged).unwrap().insert(f);
            }
            graph.incidence.remove(&gone);
        }
        let degree = graph.degree(merged);
        Ok(Contraction {
            graph,
            merged,
            degree,
        })
    }

    /// Underlying simple graph: loops dropped, parallel edges merged.
    pub fn to_simple(&self) -> SimpleGraph {
        let mut g = SimpleGraph::new();
        for v in self.vertices() {
            g.add_vertex(v);
        }
        for (_, u, v) in self.edges() {
            if u != v {
                g.add_edge(u, v).expect("endpoints exist");
            }
        }
        g
    }
}

impl GraphView for MultiGraph {
    fn vertex_ids(&self) -> Vec<VertexId> {
        self.vertices().collect()
    }

    fn edge_pairs(&self) -> Vec<(VertexId, VertexId)> {
        self.edges.values().copied().collect()
    }
}

/// Graph without loops or parallel edges.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimpleGraph {
    adj: BTreeMap<VertexId, BTreeSet<VertexId>>,
}

impl SimpleGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vertices(n: usize) -> Self {
        let mut g = Self::new();
        for v in 0..n {
            g.add_vertex(v);
        }
        g
    }

    /// Vertices `0..n` and the listed edges.
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let mut g = Self::with_vertices(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self, v: VertexId) {
        self.adj.entry(v).or_default();
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.adj.contains_key(&v)
    }

    /// Adds `{u, v}`; returns false if it was already present.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<bool> {
        if u == v {
            return Err(Error::LoopInSimpleGraph(u));
        }
        for x in [u, v] {
            if !self.contains_vertex(x) {
                return Err(Error::UnknownVertex(x));
            }
        }
        let fresh = self.adj.get_mut(&u).unwrap().insert(v);
        self.adj.get_mut(&v).unwrap().insert(u);
        Ok(fresh)
    }

    pub fn remove_edge(&mut self, u: VertexId, v: VertexId) -> bool {
        let had = self.adj.get_mut(&u).is_some_and(|s| s.remove(&v));
        if had {
            self.adj.get_mut(&v).unwrap().remove(&u);
        }
        had
    }

    pub fn remove_vertex(&mut self, v: VertexId) {
        if let Some(nbrs) = self.adj.remove(&v) {
            for u in nbrs {
                self.adj.get_mut(&u).unwrap().remove(&v);
            }
        }
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj.get(&u).is_some_and(|s| s.contains(&v))
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.get(&v).into_iter().flatten().copied()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj.get(&v).map_or(0, BTreeSet::len)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.values().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.keys().copied()
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        self.adj
            .iter()
            .flat_map(|(&u, nbrs)| nbrs.range(u + 1..).map(move |&v| (u, v)))
            .collect()
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Same vertices and edges, edge ids assigned in sorted order.
    pub fn to_multigraph(&self) -> MultiGraph {
        let mut g = MultiGraph::new();
        for v in self.vertices() {
            g.add_vertex(v);
        }
        for (u, v) in self.edges() {
            g.add_edge(u, v).expect("endpoints exist");
        }
        g
    }

    pub fn is_connected(&self) -> bool {
        let Some(start) = self.vertices().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for u in self.neighbors(v) {
                if seen.insert(u) {
                    stack.push(u);
                }
            }
        }
        seen.len() == self.num_vertices()
    }
}

impl GraphView for SimpleGraph {
    fn vertex_ids(&self) -> Vec<VertexId> {
        self.vertices().collect()
    }

    fn edge_pairs(&self) -> Vec<(VertexId, VertexId)> {
        self.edges()
    }
}

/// G*: one vertex per edge id of `g`, adjacent when the edges share an end.
pub fn line_graph(g: &MultiGraph) -> SimpleGraph {
    let mut lg = SimpleGraph::new();
    for e in g.edge_ids() {
        lg.add_vertex(e);
    }
    for v in g.vertices() {
        let inc: Vec<EdgeId> = g.incident_edges(v).collect();
        for (i, &a) in inc.iter().enumerate() {
            for &b in &inc[i + 1..] {
                lg.add_edge(a, b).expect("distinct edge ids");
            }
        }
    }
    lg
}

/// Whether degree-2 smoothing may introduce parallel edges and loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplifyMode {
    /// Only smooth when the two neighbours are distinct and non-adjacent.
    Simple,
    /// Smooth every degree-2 vertex without a loop.
    Multi,
}

/// One reduction step, recorded so a decomposition can be lifted back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Removal {
    Leaf {
        vertex: VertexId,
        neighbor: VertexId,
        edge: EdgeId,
    },
    Smooth {
        vertex: VertexId,
        left: VertexId,
        right: VertexId,
        removed: (EdgeId, EdgeId),
        added: EdgeId,
    },
}

/// Deletes degree-1 vertices and smooths degree-2 vertices until neither
/// applies. A last remaining edge is never deleted.
pub fn simplify(g: &MultiGraph, mode: SimplifyMode) -> (MultiGraph, Vec<Removal>) {
    reduce(g, Some(mode))
}

/// Only the degree-1 deletions of [`simplify`].
pub fn prune_leaves(g: &MultiGraph) -> (MultiGraph, Vec<Removal>) {
    reduce(g, None)
}

fn reduce(g: &MultiGraph, smoothing: Option<SimplifyMode>) -> (MultiGraph, Vec<Removal>) {
    let mut graph = g.clone();
    let mut log = Vec::new();
    let mut queue: BTreeSet<VertexId> = graph.vertices().collect();
    while let Some(w) = queue.pop_first() {
        if !graph.contains_vertex(w) {
            continue;
        }
        let inc: Vec<EdgeId> = graph.incident_edges(w).collect();
        if inc.iter().any(|&e| graph.is_loop(e)) {
            continue;
        }
        match inc[..] {
            [edge] if graph.num_edges() > 1 => {
                let neighbor = graph.other_endpoint(edge, w).unwrap();
                graph.remove_vertex(w).unwrap();
                log.push(Removal::Leaf {
                    vertex: w,
                    neighbor,
                    edge,
                });
                queue.insert(neighbor);
            }
            [e1, e2] if smoothing.is_some() => {
                let left = graph.other_endpoint(e1, w).unwrap();
                let right = graph.other_endpoint(e2, w).unwrap();
                if smoothing == Some(SimplifyMode::Simple) {
                    let adjacent = left == right
                        || graph
                            .incident_edges(left)
                            .any(|f| graph.other_endpoint(f, left) == Some(right));
                    if adjacent {
                        continue;
                    }
                }
                graph.remove_vertex(w).unwrap();
                let added = graph.add_edge(left, right).unwrap();
                log.push(Removal::Smooth {
                    vertex: w,
                    left,
                    right,
                    removed: (e1, e2),
                    added,
                });
                queue.insert(left);
                queue.insert(right);
            }
            _ => {}
        }
    }
    (graph, log)
}

/// The 3-regular graph on Z_p ∪ {∞} where x is joined to x+1, x−1 and x⁻¹.
#[derive(Clone, Debug)]
pub struct LpsExpander {
    pub p: u64,
    pub graph: MultiGraph,
    /// Vertex id standing for ∞ (equal to `p`).
    pub infinity: VertexId,
    /// `graph` without ∞ and without the edge {0, p−1}.
    pub reduced: MultiGraph,
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn mod_inverse(x: u64, p: u64) -> u64 {
    // Fermat: x^(p-2) mod p
    let (mut base, mut exp, mut acc) = (x % p, p - 2, 1u64);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

/// Builds G_p; 0 and ∞ are each other's inverse, ∞±1 = ∞ gives ∞ two loops.
pub fn lps_expander(p: u64) -> Result<LpsExpander> {
    if p <= 2 || !is_prime(p) || p > 1 << 20 {
        return Err(Error::NotOddPrime(p));
    }
    let n = p as usize;
    let infinity = n;
    let mut graph = MultiGraph::with_vertices(n + 1);
    let mut wrap_edge = None;
    for x in 0..n {
        let e = graph.add_edge(x, (x + 1) % n)?;
        if x == n - 1 {
            wrap_edge = Some(e);
        }
    }
    for x in 1..n {
        let y = mod_inverse(x as u64, p) as usize;
        if x <= y {
            graph.add_edge(x, y)?;
        }
    }
    graph.add_edge(0, infinity)?;
    graph.add_edge(infinity, infinity)?;
    graph.add_edge(infinity, infinity)?;

    let mut reduced = graph.clone();
    reduced.remove_vertex(infinity)?;
    reduced.remove_edge(wrap_edge.expect("p > 2"))?;
    Ok(LpsExpander {
        p,
        graph,
        infinity,
        reduced,
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Edge-list text: `p tw <n> <m>`, then `e <u> <v>` (or bare `<u> <v>`)
/// lines with 1-indexed vertices; `c` lines are comments. Edge i is the
/// i-th edge line and vertex ids become 0-indexed.
pub fn parse_graph(text: &str) -> Result<MultiGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut g = MultiGraph::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let words: Vec<&str> = raw.split_whitespace().collect();
        match words.as_slice() {
            [] | ["c", ..] => continue,
            ["p", _, n, m] => {
                if header.is_some() {
                    return Err(parse_err(line, "second header line"));
                }
                let n: usize = n.parse().map_err(|_| parse_err(line, format!("bad vertex count {n:?}")))?;
                let m: usize = m.parse().map_err(|_| parse_err(line, format!("bad edge count {m:?}")))?;
                g = MultiGraph::with_vertices(n);
                header = Some((n, m));
            }
            ["e", u, v] | [u, v] => {
                let Some((n, _)) = header else {
                    return Err(parse_err(line, "edge before the 'p tw <n> <m>' header"));
                };
                let end = |s: &str| -> Result<VertexId> {
                    match s.parse::<usize>() {
                        Ok(x) if (1..=n).contains(&x) => Ok(x - 1),
                        _ => Err(parse_err(line, format!("vertex {s:?} is not in 1..={n}"))),
                    }
                };
                g.add_edge(end(u)?, end(v)?)?;
            }
            _ => return Err(parse_err(line, format!("unrecognised line {:?}", raw.trim()))),
        }
    }
    let Some((_, m)) = header else {
        return Err(parse_err(1, "missing 'p tw <n> <m>' header"));
    };
    if g.num_edges() != m {
        return Err(parse_err(
            text.lines().count().max(1),
            format!("header promises {m} edges, found {}", g.num_edges()),
        ));
    }
    Ok(g)
}

/// The same file read as a simple graph; loops and repeated edges are
/// rejected.
pub fn parse_simple_graph(text: &str) -> Result<SimpleGraph> {
    let m = parse_graph(text)?;
    let s = m.to_simple();
    if let Some((_, u, _)) = m.edges().find(|&(_, u, v)| u == v) {
        return Err(Error::LoopInSimpleGraph(u));
    }
    if s.num_edges() != m.num_edges() {
        return Err(Error::Parse {
            line: 1,
            message: "repeated edge in a simple graph".into(),
        });
    }
    Ok(s)
}

/// Inverse of [`parse_graph`]; vertices are renumbered `1..=n` in id order.
pub fn write_graph<G: GraphView>(g: &G) -> String {
    let ids = g.vertex_ids();
    let pos: BTreeMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i + 1)).collect();
    let edges = g.edge_pairs();
    let mut out = format!("p tw {} {}\n", ids.len(), edges.len());
    for (u, v) in edges {
        out.push_str(&format!("e {} {}\n", pos[&u], pos[&v]));
    }
    out
}

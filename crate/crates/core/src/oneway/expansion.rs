//! Degree-3 expansions of a graph and the one-way prefix that turns |G₁⟩
//! back into |G⟩.
//!
//! The expansion follows a tree decomposition of G of width k. After
//! subset bags are merged, every edge {u, v} gets its own leaf bag and the
//! tree is made subcubic. Each (bag, vertex) pair becomes a copy of the
//! vertex. Copies of v in adjacent bags are joined, and each edge of G joins
//! the two copies in its leaf bag. Replacing one vertex at a time across
//! each tree edge gives a decomposition of the copy graph of width ≤ k + 1.
//! Copies are then merged greedily while the merged degree stays ≤ 3, and
//! every surviving copy-to-copy edge is subdivided.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;

use crate::circuit::{NamedGate, Qubit};
use crate::error::{Error, Result};
use crate::multigraph::{SimpleGraph, VertexId};
use crate::tensor::C64;
use crate::treewidth::{
    elimination_width, exact_treewidth, heuristic_order, ordering_to_decomposition,
    validate_decomposition, HeuristicStrategy, TreeDecomposition, DEFAULT_EXACT_BUDGET,
};

use super::check_vertex_ids;
use super::program::{Measurement, OneWayProgram};

/// Measure σ_x on w, then on v′; afterwards v carries the neighbours of both.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gadget {
    pub v: VertexId,
    pub w: VertexId,
    pub v_prime: VertexId,
}

#[derive(Clone, Debug)]
pub struct Expansion {
    /// G₁. Vertex v < n is the copy of v that survives the prefix.
    pub graph: SimpleGraph,
    pub original: usize,
    /// Contracting these edges of G₁ gives G.
    pub forest: Vec<(VertexId, VertexId)>,
    /// In prefix order.
    pub gadgets: Vec<Gadget>,
    /// The vertex of G each vertex of G₁ contracts into.
    pub owner: Vec<VertexId>,
    /// Decomposition of G₁ of width ≤ source_width + 1.
    pub certificate: TreeDecomposition,
    /// Width of the decomposition of G the construction started from.
    pub source_width: usize,
    /// Whether source_width is the exact treewidth of G.
    pub exact: bool,
}

struct Tree {
    bags: Vec<BTreeSet<VertexId>>,
    adj: Vec<BTreeSet<usize>>,
    alive: Vec<bool>,
    host: Vec<Option<(VertexId, VertexId)>>,
}

impl Tree {
    fn from_decomposition(td: &TreeDecomposition) -> Self {
        let mut adj = vec![BTreeSet::new(); td.bags.len()];
        for &(a, b) in &td.edges {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        Self {
            bags: td.bags.clone(),
            alive: vec![true; td.bags.len()],
            host: vec![None; td.bags.len()],
            adj,
        }
    }

    fn add(&mut self, bag: BTreeSet<VertexId>, host: Option<(VertexId, VertexId)>) -> usize {
        self.bags.push(bag);
        self.adj.push(BTreeSet::new());
        self.alive.push(true);
        self.host.push(host);
        self.bags.len() - 1
    }

    fn link(&mut self, a: usize, b: usize) {
        self.adj[a].insert(b);
        self.adj[b].insert(a);
    }

    fn unlink(&mut self, a: usize, b: usize) {
        self.adj[a].remove(&b);
        self.adj[b].remove(&a);
    }

    /// Folds every bag into a neighbour that contains it.
    fn merge_subsets(&mut self) {
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..self.bags.len() {
                if !self.alive[s] {
                    continue;
                }
                let Some(&t) = self.adj[s].iter().find(|&&t| self.bags[s].is_subset(&self.bags[t])) else {
                    continue;
                };
                for x in std::mem::take(&mut self.adj[s]) {
                    self.adj[x].remove(&s);
                    if x != t {
                        self.link(x, t);
                    }
                }
                self.alive[s] = false;
                changed = true;
            }
        }
    }

    fn binarise(&mut self) {
        let mut work: Vec<usize> = (0..self.bags.len()).filter(|&t| self.alive[t]).collect();
        while let Some(t) = work.pop() {
            if self.adj[t].len() <= 3 {
                continue;
            }
            let moved: Vec<usize> = self.adj[t].iter().copied().skip(2).collect();
            let twin = self.add(self.bags[t].clone(), None);
            for x in moved {
                self.unlink(t, x);
                self.link(twin, x);
            }
            self.link(t, twin);
            work.push(twin);
        }
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.adj.len())
            .filter(|&a| self.alive[a])
            .flat_map(|a| self.adj[a].range(a + 1..).map(move |&b| (a, b)))
            .collect()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn source_decomposition(g: &SimpleGraph) -> Result<(TreeDecomposition, bool)> {
    if g.num_vertices() <= DEFAULT_EXACT_BUDGET {
        let r = exact_treewidth(g, DEFAULT_EXACT_BUDGET)?;
        return Ok((ordering_to_decomposition(g, &r.ordering)?, true));
    }
    let mut best = None;
    for s in [HeuristicStrategy::MinFill, HeuristicStrategy::MinDegree] {
        let pi = heuristic_order(g, s, 0);
        let w = elimination_width(g, &pi)?.width;
        if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
            best = Some((w, pi));
        }
    }
    let (_, pi) = best.unwrap();
    Ok((ordering_to_decomposition(g, &pi)?, false))
}

/// G₁ with Δ ≤ 3 that contracts to G along a forest, each forest path
/// v − w − v′ subdivided for the two-measurement gadget. The width bound
/// tw(G₁) ≤ k + 1 is checked on the certificate decomposition and, when G₁
/// is small enough, with the exact solver.
pub fn expand_to_degree3(g: &SimpleGraph) -> Result<Expansion> {
    let n = check_vertex_ids(g)?;
    if n == 0 || g.max_degree() <= 3 {
        let (td, exact) = if n == 0 {
            (TreeDecomposition::default(), true)
        } else {
            source_decomposition(g)?
        };
        return Ok(Expansion {
            graph: g.clone(),
            original: n,
            forest: Vec::new(),
            gadgets: Vec::new(),
            owner: (0..n).collect(),
            source_width: td.width(),
            certificate: td,
            exact,
        });
    }
    let (td, exact) = source_decomposition(g)?;
    let k = td.width();

    let mut tree = Tree::from_decomposition(&td);
    tree.merge_subsets();
    for (u, v) in g.edges() {
        let at = (0..tree.bags.len())
            .find(|&t| tree.alive[t] && tree.bags[t].contains(&u) && tree.bags[t].contains(&v))
            .expect("a valid decomposition covers every edge");
        let leaf = tree.add([u, v].into(), Some((u, v)));
        tree.link(at, leaf);
    }
    tree.binarise();

    // Copies, their graph, and the certificate over copy ids.
    let mut copy = BTreeMap::new();
    let mut owner_of = Vec::new();
    for t in (0..tree.bags.len()).filter(|&t| tree.alive[t]) {
        for &v in &tree.bags[t] {
            copy.insert((t, v), owner_of.len());
            owner_of.push(v);
        }
    }
    let c = owner_of.len();
    let mut adj = vec![BTreeSet::new(); c];
    let mut forest = Vec::new();
    let mut cert = TreeDecomposition::default();
    let mut node_bag = BTreeMap::new();
    for t in (0..tree.bags.len()).filter(|&t| tree.alive[t]) {
        let bag = tree.bags[t].iter().map(|&v| copy[&(t, v)]).collect();
        node_bag.insert(t, cert.add_bag(bag));
        if let Some((u, v)) = tree.host[t] {
            let (a, b) = (copy[&(t, u)], copy[&(t, v)]);
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    for (s, t) in tree.edges() {
        let mut cur: BTreeSet<usize> = cert.bags[node_bag[&s]].clone();
        let mut prev = node_bag[&s];
        for &v in tree.bags[s].intersection(&tree.bags[t]) {
            let (a, b) = (copy[&(s, v)], copy[&(t, v)]);
            adj[a].insert(b);
            adj[b].insert(a);
            forest.push((a, b));
            cur.insert(b);
            let id = cert.add_bag(cur.clone());
            cert.edges.push((prev, id));
            prev = id;
            cur.remove(&a);
        }
        cert.edges.push((prev, node_bag[&t]));
    }
    debug_assert!(cert.width() <= k + 1);

    // Greedy merges along the forest while the merged degree stays ≤ 3.
    let mut parent: Vec<usize> = (0..c).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for &(a, b) in &forest {
            let (a, b) = (find(&mut parent, a), find(&mut parent, b));
            if a == b || adj[a].len() + adj[b].len() - 2 > 3 {
                continue;
            }
            let (keep, gone) = (a.min(b), a.max(b));
            for x in std::mem::take(&mut adj[gone]) {
                adj[x].remove(&gone);
                if x != keep {
                    adj[x].insert(keep);
                    adj[keep].insert(x);
                }
            }
            parent[gone] = keep;
            changed = true;
        }
    }

    // Survivors take the ids of G; other classes follow in order of
    // their representative.
    let root: Vec<usize> = (0..c).map(|x| find(&mut parent, x)).collect();
    let mut label = BTreeMap::new();
    let mut placed = BTreeSet::new();
    let mut extra = Vec::new();
    for x in 0..c {
        if root[x] == x {
            if placed.insert(owner_of[x]) {
                label.insert(x, owner_of[x]);
            } else {
                extra.push(x);
            }
        }
    }
    let mut owner: Vec<VertexId> = (0..n).collect();
    for (i, &x) in extra.iter().enumerate() {
        label.insert(x, n + i);
        owner.push(owner_of[x]);
    }
    let relabel = |x: usize| label[&root[x]];

    let mut g1 = SimpleGraph::with_vertices(owner.len());
    let mut class_forest = BTreeSet::new();
    for x in 0..c {
        for &y in &adj[x] {
            if x < y && root[x] == x && root[y] == y {
                let (a, b) = (relabel(x), relabel(y));
                if owner[a] == owner[b] {
                    class_forest.insert((a.min(b), a.max(b)));
                } else {
                    g1.add_edge(a, b)?;
                }
            }
        }
    }
    cert.bags = cert.bags.iter().map(|b| b.iter().map(|&x| relabel(x)).collect()).collect();

    let mut out_forest = Vec::new();
    let mut tree_adj: BTreeMap<VertexId, Vec<(VertexId, VertexId)>> = BTreeMap::new();
    for &(a, b) in &class_forest {
        let w = owner.len();
        owner.push(owner[a]);
        g1.add_vertex(w);
        g1.add_edge(a, w)?;
        g1.add_edge(w, b)?;
        out_forest.extend([(a, w), (w, b)]);
        let host = cert.find_bag(&[a, b]).expect("copy edges are covered");
        let id = cert.add_bag([a, w, b].into());
        cert.edges.push((host, id));
        tree_adj.entry(a).or_default().push((w, b));
        tree_adj.entry(b).or_default().push((w, a));
    }

    let mut gadgets = Vec::new();
    for v in 0..n {
        let mut seen = BTreeSet::from([v]);
        let mut queue = VecDeque::from([v]);
        while let Some(x) = queue.pop_front() {
            for &(w, y) in tree_adj.get(&x).map_or(&[][..], Vec::as_slice) {
                if seen.insert(y) {
                    gadgets.push(Gadget { v, w, v_prime: y });
                    queue.push_back(y);
                }
            }
        }
    }

    let e = Expansion {
        graph: g1,
        original: n,
        forest: out_forest,
        gadgets,
        owner,
        certificate: cert,
        source_width: k,
        exact,
    };
    e.verify()?;
    Ok(e)
}

impl Expansion {
    fn verify(&self) -> Result<()> {
        let fail = |m: String| Err(Error::ExpansionBound(m));
        if self.graph.max_degree() > 3 {
            return fail(format!("maximum degree {} exceeds 3", self.graph.max_degree()));
        }
        let violations = validate_decomposition(&self.certificate, &self.graph);
        if let Some(v) = violations.first() {
            return fail(format!("certificate decomposition is invalid: {v}"));
        }
        let bound = self.source_width + 1;
        if self.certificate.width() > bound {
            return fail(format!("certificate width {} exceeds {bound}", self.certificate.width()));
        }
        if self.exact && self.graph.num_vertices() <= DEFAULT_EXACT_BUDGET {
            let tw = exact_treewidth(&self.graph, DEFAULT_EXACT_BUDGET)?.width;
            if tw > bound {
                return fail(format!("tw(G1) = {tw} exceeds tw(G) + 1 = {bound}"));
            }
        }
        Ok(())
    }
}

/// Pauli corrections owed to each qubit, as (σ_x, σ_z) exponents.
type Frame = BTreeMap<Qubit, (bool, bool)>;

fn correction(frame: &Frame, q: Qubit) -> DMatrix<C64> {
    let (x, z) = frame.get(&q).copied().unwrap_or_default();
    let mut u = DMatrix::identity(2, 2);
    if x {
        u = NamedGate::X.matrix() * u;
    }
    if z {
        u = NamedGate::Z.matrix() * u;
    }
    u
}

fn frame_measure(m: Measurement, frame: &Frame) -> Measurement {
    let u = correction(frame, m.qubit);
    m.conjugated(&u)
}

/// The gadget prefix followed by `inner`. Corrections are never applied to
/// the state: they are kept in a Pauli frame and every later measurement
/// is conjugated by the correction owed to its qubit.
pub struct PrefixedProgram<'a, P: ?Sized> {
    graph: &'a SimpleGraph,
    original: usize,
    gadgets: &'a [Gadget],
    inner: &'a P,
}

impl<'a, P: OneWayProgram + ?Sized> PrefixedProgram<'a, P> {
    pub fn new(expansion: &'a Expansion, inner: &'a P) -> Self {
        Self {
            graph: &expansion.graph,
            original: expansion.original,
            gadgets: &expansion.gadgets,
            inner,
        }
    }

    pub fn prefix_len(&self) -> usize {
        2 * self.gadgets.len()
    }
}

fn flip(frame: &mut Frame, q: Qubit, x: bool, z: bool) {
    let e = frame.entry(q).or_default();
    e.0 ^= x;
    e.1 ^= z;
}

impl<P: OneWayProgram + ?Sized> OneWayProgram for PrefixedProgram<'_, P> {
    fn next(&self, history: &[(Qubit, u8)]) -> Result<Option<Measurement>> {
        let mut g = self.graph.clone();
        let mut frame = Frame::new();
        for (i, gd) in self.gadgets.iter().enumerate() {
            if history.len() == 2 * i {
                return Ok(Some(frame_measure(Measurement::x(gd.w), &frame)));
            }
            if history[2 * i].1 == 1 {
                flip(&mut frame, gd.v, true, false);
                for a in g.neighbors(gd.v).filter(|&a| a != gd.w).collect::<Vec<_>>() {
                    flip(&mut frame, a, false, true);
                }
            }
            if history.len() == 2 * i + 1 {
                return Ok(Some(frame_measure(Measurement::x(gd.v_prime), &frame)));
            }
            if history[2 * i + 1].1 == 1 {
                flip(&mut frame, gd.v, false, true);
            }
            let moved: Vec<VertexId> = g.neighbors(gd.v_prime).filter(|&a| a != gd.w).collect();
            g.remove_vertex(gd.w);
            g.remove_vertex(gd.v_prime);
            for a in moved {
                g.add_edge(gd.v, a)?;
            }
            frame.remove(&gd.w);
            frame.remove(&gd.v_prime);
        }
        let Some(m) = self.inner.next(&history[self.prefix_len()..])? else {
            return Ok(None);
        };
        if m.qubit >= self.original {
            return Err(Error::Measurement(format!(
                "qubit {} is not a vertex of the original graph",
                m.qubit
            )));
        }
        Ok(Some(frame_measure(m, &frame)))
    }
}

//! Contraction orderings, their cost, and the path from a tree decomposition
//! of the line graph to an ordering.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::multigraph::{line_graph, EdgeId, MultiGraph, VertexId};
use crate::treewidth::{
    exact_treewidth, heuristic_order, ordering_to_decomposition, validate_decomposition,
    HeuristicStrategy, TreeDecomposition, DEFAULT_EXACT_BUDGET,
};

/// A permutation of E(G).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContractionOrdering(pub Vec<EdgeId>);

impl ContractionOrdering {
    pub fn as_slice(&self) -> &[EdgeId] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    MinFill,
    MinDegree,
    /// Exact treewidth of the line graph; min-fill beyond `budget` edges.
    Exact { budget: usize },
}

impl Strategy {
    pub fn exact() -> Self {
        Strategy::Exact {
            budget: DEFAULT_EXACT_BUDGET,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::MinFill => f.write_str("minfill"),
            Strategy::MinDegree => f.write_str("mindeg"),
            Strategy::Exact { .. } => f.write_str("exact"),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "minfill" => Ok(Strategy::MinFill),
            "mindeg" => Ok(Strategy::MinDegree),
            "exact" => Ok(Strategy::exact()),
            other => Err(format!("unknown strategy {other:?} (minfill, mindeg, exact)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanSource {
    /// Strategy name, or "decomposition" for plans from a given decomposition.
    pub method: String,
    pub seed: u64,
    /// Set when `Exact` was requested but the line graph exceeded its budget.
    pub fell_back: bool,
}

impl fmt::Display for PlanSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} seed={}", self.method, self.seed)?;
        if self.fell_back {
            f.write_str(" fallback=minfill")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractionPlan {
    pub ordering: ContractionOrdering,
    pub predicted_cc: usize,
    /// Largest tensor rank the contraction engine will build with this
    /// ordering, since it sums all wires shared by a pair at once.
    pub predicted_rank: usize,
    pub source: PlanSource,
}

/// Cost of one ordering under both contraction semantics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderingCost {
    /// Max merged-vertex degree, one edge at a time, loops kept.
    pub cc: usize,
    /// Max number of distinct external edges of a merged vertex.
    pub rank: usize,
}

/// Union-find over vertices with edge multiplicities between current roots.
struct Contractor {
    parent: HashMap<VertexId, VertexId>,
    /// Multiplicity by neighbouring root; the own root key counts loops.
    nbrs: HashMap<VertexId, BTreeMap<VertexId, usize>>,
    degree: HashMap<VertexId, usize>,
}

impl Contractor {
    fn new(g: &MultiGraph) -> Self {
        let mut nbrs: HashMap<VertexId, BTreeMap<VertexId, usize>> =
            g.vertices().map(|v| (v, BTreeMap::new())).collect();
        for (_, u, v) in g.edges() {
            *nbrs.get_mut(&u).unwrap().entry(v).or_default() += 1;
            if u != v {
                *nbrs.get_mut(&v).unwrap().entry(u).or_default() += 1;
            }
        }
        Self {
            parent: g.vertices().map(|v| (v, v)).collect(),
            degree: g.vertices().map(|v| (v, g.degree(v))).collect(),
            nbrs,
        }
    }

    fn find(&mut self, v: VertexId) -> VertexId {
        let p = self.parent[&v];
        if p == v {
            return v;
        }
        let r = self.find(p);
        self.parent.insert(v, r);
        r
    }

    fn loops(&self, a: VertexId) -> usize {
        self.nbrs[&a].get(&a).copied().unwrap_or(0)
    }

    /// Non-loop degree of the vertex `a` and `b` would merge into.
    fn merged_rank(&self, a: VertexId, b: VertexId) -> usize {
        if a == b {
            return self.degree[&a] - self.loops(a);
        }
        let m = self.nbrs[&a].get(&b).copied().unwrap_or(0);
        self.degree[&a] - self.loops(a) + self.degree[&b] - self.loops(b) - 2 * m
    }

    /// Contracts one edge between roots `a` and `b`; returns (degree, rank).
    fn contract(&mut self, a: VertexId, b: VertexId) -> (usize, usize) {
        if a == b {
            *self.nbrs.get_mut(&a).unwrap().get_mut(&a).unwrap() -= 1;
            *self.degree.get_mut(&a).unwrap() -= 1;
            let d = self.degree[&a];
            return (d, d - self.loops(a));
        }
        let (keep, gone) = (a.min(b), a.max(b));
        let parallel = self.nbrs[&keep][&gone] - 1;
        let degree = self.degree[&keep] + self.degree[&gone] - 2 - parallel;
        let moved = self.nbrs.remove(&gone).unwrap();
        let mut loops = self.loops(keep) + parallel;
        {
            let kn = self.nbrs.get_mut(&keep).unwrap();
            kn.remove(&gone);
            for (&c, &m) in &moved {
                if c == gone {
                    loops += m;
                } else if c != keep {
                    *kn.entry(c).or_default() += m;
                }
            }
            if loops > 0 {
                kn.insert(keep, loops);
            }
        }
        for &c in moved.keys() {
            if c != gone && c != keep {
                let cn = self.nbrs.get_mut(&c).unwrap();
                let m = cn.remove(&gone).unwrap();
                *cn.entry(keep).or_default() += m;
            }
        }
        self.parent.insert(gone, keep);
        self.degree.remove(&gone);
        self.degree.insert(keep, degree);
        (degree, degree - loops)
    }
}

fn check_ordering(g: &MultiGraph, pi: &ContractionOrdering) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &e in &pi.0 {
        if g.endpoints(e).is_none() {
            return Err(Error::UnknownEdge(e));
        }
        if !seen.insert(e) {
            return Err(Error::InvalidOrdering(format!("edge {e} listed twice")));
        }
    }
    if seen.len() != g.num_edges() {
        return Err(Error::InvalidOrdering(format!(
            "{} of {} edges listed",
            seen.len(),
            g.num_edges()
        )));
    }
    Ok(())
}

/// Simulates `pi` and reports cc(π) together with the coalesced rank.
pub fn ordering_cost(g: &MultiGraph, pi: &ContractionOrdering) -> Result<OrderingCost> {
    check_ordering(g, pi)?;
    let mut c = Contractor::new(g);
    let (mut cc, mut rank) = (0, 0);
    for &e in &pi.0 {
        let (u, v) = g.endpoints(e).unwrap();
        let (a, b) = (c.find(u), c.find(v));
        let (d, r) = c.contract(a, b);
        cc = cc.max(d);
        // A loop here is a wire the engine already summed with its pair.
        if a != b {
            rank = rank.max(r);
        }
    }
    Ok(OrderingCost { cc, rank })
}

/// cc(π): the largest merged-vertex degree during one-edge-at-a-time
/// contraction, loops counted once.
pub fn cc_of_ordering(g: &MultiGraph, pi: &ContractionOrdering) -> Result<usize> {
    Ok(ordering_cost(g, pi)?.cc)
}

/// Peels leaves of a decomposition of G* into an ordering of E(G) whose cc
/// does not exceed the decomposition width. The tree is rooted at bag 0.
pub fn decomposition_to_contraction_ordering(
    td: &TreeDecomposition,
    g: &MultiGraph,
) -> Result<ContractionOrdering> {
    let lg = line_graph(g);
    let violations = validate_decomposition(td, &lg);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidDecomposition(v.to_string()));
    }
    if td.is_empty() {
        return Ok(ContractionOrdering(Vec::new()));
    }
    let adj = td.adjacency();
    let n = td.len();
    let mut parent = vec![usize::MAX; n];
    let mut children = vec![0usize; n];
    let mut stack = vec![0];
    let mut seen = vec![false; n];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                children[x] += 1;
                stack.push(y);
            }
        }
    }

    let mut bags = td.bags.clone();
    let mut leaves: BTreeSet<usize> = (1..n).filter(|&i| children[i] == 0).collect();
    let mut out = Vec::with_capacity(g.num_edges());
    while let Some(leaf) = leaves.pop_first() {
        let up = parent[leaf];
        // Everything in the leaf but not its parent lives only in the leaf.
        let private: Vec<EdgeId> = bags[leaf].difference(&bags[up]).copied().collect();
        out.extend(private);
        bags[leaf].clear();
        children[up] -= 1;
        if up != 0 && children[up] == 0 {
            leaves.insert(up);
        }
    }
    out.extend(bags[0].iter().copied());
    Ok(ContractionOrdering(out))
}

/// Line graph, elimination ordering, decomposition, then leaf peeling.
pub fn plan_contraction(g: &MultiGraph, strategy: Strategy, seed: u64) -> Result<ContractionPlan> {
    let lg = line_graph(g);
    let mut fell_back = false;
    let elim = match strategy {
        Strategy::MinFill => heuristic_order(&lg, HeuristicStrategy::MinFill, seed),
        Strategy::MinDegree => heuristic_order(&lg, HeuristicStrategy::MinDegree, seed),
        Strategy::Exact { budget } => match exact_treewidth(&lg, budget) {
            Ok(r) => r.ordering,
            Err(Error::GraphTooLarge { size, budget }) => {
                log::info!("line graph has {size} vertices > exact budget {budget}; using min-fill");
                fell_back = true;
                heuristic_order(&lg, HeuristicStrategy::MinFill, seed)
            }
            Err(e) => return Err(e),
        },
    };
    let td = ordering_to_decomposition(&lg, &elim)?;
    let ordering = decomposition_to_contraction_ordering(&td, g)?;
    let cost = ordering_cost(g, &ordering)?;
    debug_assert!(cost.cc <= td.width());
    Ok(ContractionPlan {
        ordering,
        predicted_cc: cost.cc,
        predicted_rank: cost.rank,
        source: PlanSource {
            method: strategy.to_string(),
            seed,
            fell_back,
        },
    })
}

/// Decomposition of G* from one of G: each vertex is replaced by its incident
/// edges. Width grows to at most Δ(G)·(width + 1) − 1.
pub fn line_graph_decomposition(td: &TreeDecomposition, g: &MultiGraph) -> TreeDecomposition {
    TreeDecomposition {
        bags: td
            .bags
            .iter()
            .map(|b| b.iter().flat_map(|&v| g.incident_edges(v)).collect())
            .collect(),
        edges: td.edges.clone(),
    }
}

/// Plan from a tree decomposition of G itself, through the line graph.
pub fn plan_from_decomposition(g: &MultiGraph, td: &TreeDecomposition) -> Result<ContractionPlan> {
    let star = line_graph_decomposition(td, g);
    let ordering = decomposition_to_contraction_ordering(&star, g)?;
    let cost = ordering_cost(g, &ordering)?;
    Ok(ContractionPlan {
        ordering,
        predicted_cc: cost.cc,
        predicted_rank: cost.rank,
        source: PlanSource {
            method: "decomposition".into(),
            seed: 0,
            fell_back: false,
        },
    })
}

/// Plans every (strategy, seed) candidate in parallel and keeps the one with
/// the smallest (predicted_cc, predicted_rank), earliest candidate on ties.
pub fn plan_best(g: &MultiGraph, candidates: &[(Strategy, u64)]) -> Result<ContractionPlan> {
    let plans: Vec<Result<ContractionPlan>> = candidates
        .par_iter()
        .map(|&(s, seed)| plan_contraction(g, s, seed))
        .collect();
    let mut best: Option<ContractionPlan> = None;
    for plan in plans {
        let plan = plan?;
        let better = best.as_ref().is_none_or(|b| {
            (plan.predicted_cc, plan.predicted_rank) < (b.predicted_cc, b.predicted_rank)
        });
        if better {
            best = Some(plan);
        }
    }
    best.ok_or_else(|| Error::InvalidOrdering("no planning candidates".into()))
}

/// cc(G) = tw(G*), solved exactly.
pub fn exact_cc(g: &MultiGraph, budget: usize) -> Result<usize> {
    Ok(exact_treewidth(&line_graph(g), budget)?.width)
}

/// A uniformly random edge among those whose contraction keeps the engine's
/// rank within `max_rank`, repeated until every edge is placed. `None` when
/// the walk gets stuck.
pub fn random_ordering<R: Rng>(
    g: &MultiGraph,
    rng: &mut R,
    max_rank: usize,
) -> Option<ContractionOrdering> {
    let mut c = Contractor::new(g);
    let mut remaining = g.edge_ids();
    remaining.shuffle(rng);
    let mut out = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let ok: Vec<usize> = (0..remaining.len())
            .filter(|&i| {
                let (u, v) = g.endpoints(remaining[i]).unwrap();
                let (a, b) = (c.find(u), c.find(v));
                c.merged_rank(a, b) <= max_rank
            })
            .collect();
        let &pick = ok.choose(rng)?;
        let e = remaining.swap_remove(pick);
        let (u, v) = g.endpoints(e).unwrap();
        let (a, b) = (c.find(u), c.find(v));
        c.contract(a, b);
        out.push(e);
    }
    Some(ContractionOrdering(out))
}

/// `plan cc=<cc> rank=<rank> edges=<len>` then one edge id per line.
pub fn write_plan(plan: &ContractionPlan) -> String {
    let mut out = format!(
        "plan cc={} rank={} edges={}\n",
        plan.predicted_cc,
        plan.predicted_rank,
        plan.ordering.0.len()
    );
    for e in &plan.ordering.0 {
        out.push_str(&format!("{e}\n"));
    }
    out
}

/// Reads a plan file back into an ordering and its declared cc.
pub fn parse_plan(text: &str) -> Result<(ContractionOrdering, usize)> {
    let err = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| err(1, "empty plan file".into()))?;
    let fields: BTreeMap<&str, &str> = head
        .split_whitespace()
        .skip(1)
        .filter_map(|w| w.split_once('='))
        .collect();
    let field = |k: &str| -> Result<usize> {
        fields
            .get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(1, format!("header lacks {k}=<number>")))
    };
    if !head.starts_with("plan") {
        return Err(err(1, "expected a 'plan cc=..' header".into()));
    }
    let (cc, len) = (field("cc")?, field("edges")?);
    let mut ordering = Vec::with_capacity(len);
    for (idx, l) in lines {
        let e = l
            .trim()
            .parse()
            .map_err(|_| err(idx + 1, format!("bad edge id {:?}", l.trim())))?;
        ordering.push(e);
    }
    if ordering.len() != len {
        return Err(err(1, format!("header promises {len} edges, found {}", ordering.len())));
    }
    Ok((ContractionOrdering(ordering), cc))
}

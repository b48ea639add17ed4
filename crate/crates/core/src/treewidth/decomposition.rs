use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::multigraph::{GraphView, VertexId};

/// Tree decomposition in unrooted form: bags indexed `0..len`, tree edges
/// between bag indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<BTreeSet<VertexId>>,
    pub edges: Vec<(usize, usize)>,
}

/// A failed decomposition condition together with the offending item.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// The bag graph is not a tree.
    NotATree(String),
    /// A bag names a vertex outside the graph.
    UnknownVertex(VertexId),
    /// (T1) vertex in no bag.
    VertexNotCovered(VertexId),
    /// (T2) edge whose ends share no bag.
    EdgeNotCovered(VertexId, VertexId),
    /// (T3) bags holding the vertex are not connected.
    Disconnected(VertexId),
}

impl Violation {
    pub fn condition(&self) -> &'static str {
        match self {
            Violation::NotATree(_) => "tree",
            Violation::UnknownVertex(_) => "domain",
            Violation::VertexNotCovered(_) => "T1",
            Violation::EdgeNotCovered(..) => "T2",
            Violation::Disconnected(_) => "T3",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotATree(why) => write!(f, "bags do not form a tree: {why}"),
            Violation::UnknownVertex(v) => write!(f, "bag contains unknown vertex {v}"),
            Violation::VertexNotCovered(v) => write!(f, "(T1) vertex {v} is in no bag"),
            Violation::EdgeNotCovered(u, v) => write!(f, "(T2) edge {{{u},{v}}} is in no bag"),
            Violation::Disconnected(v) => write!(f, "(T3) bags containing {v} are disconnected"),
        }
    }
}

impl TreeDecomposition {
    /// Single bag holding all of `vertices`.
    pub fn single(vertices: impl IntoIterator<Item = VertexId>) -> Self {
        Self {
            bags: vec![vertices.into_iter().collect()],
            edges: Vec::new(),
        }
    }

    /// max |B| − 1, with 0 for decompositions whose bags are all empty.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(BTreeSet::len)
            .max()
            .unwrap_or(0)
            .saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn add_bag(&mut self, bag: BTreeSet<VertexId>) -> usize {
        self.bags.push(bag);
        self.bags.len() - 1
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.bags.len()];
        for &(a, b) in &self.edges {
            if a < adj.len() && b < adj.len() {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        adj
    }

    /// Whether the tree is a path (no node with three or more neighbours).
    pub fn is_path(&self) -> bool {
        self.adjacency().iter().all(|n| n.len() <= 2)
    }

    /// First bag containing every vertex of `needle`.
    pub fn find_bag(&self, needle: &[VertexId]) -> Option<usize> {
        self.bags
            .iter()
            .position(|b| needle.iter().all(|v| b.contains(v)))
    }

    fn tree_problem(&self) -> Option<String> {
        let n = self.bags.len();
        if let Some(&(a, b)) = self.edges.iter().find(|&&(a, b)| a >= n || b >= n || a == b) {
            return Some(format!("bad tree edge ({a}, {b})"));
        }
        if n == 0 {
            return (!self.edges.is_empty()).then(|| "edges without bags".into());
        }
        if self.edges.len() != n - 1 {
            return Some(format!("{} bags but {} tree edges", n, self.edges.len()));
        }
        let adj = self.adjacency();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        (!seen.iter().all(|&s| s)).then(|| "tree is disconnected".into())
    }
}

/// Checks the tree shape and (T1)–(T3) against `g`. Empty means valid.
pub fn validate_decomposition<G: GraphView>(td: &TreeDecomposition, g: &G) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Some(why) = td.tree_problem() {
        out.push(Violation::NotATree(why));
    }
    let vertices: BTreeSet<VertexId> = g.vertex_ids().into_iter().collect();
    let mut holders: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
    for (i, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            holders.entry(v).or_default().push(i);
        }
    }
    for &v in holders.keys() {
        if !vertices.contains(&v) {
            out.push(Violation::UnknownVertex(v));
        }
    }
    for &v in &vertices {
        if !holders.contains_key(&v) {
            out.push(Violation::VertexNotCovered(v));
        }
    }
    let mut seen_edges = BTreeSet::new();
    for (u, v) in g.edge_pairs() {
        if !seen_edges.insert((u, v)) {
            continue;
        }
        if !td.bags.iter().any(|b| b.contains(&u) && b.contains(&v)) {
            out.push(Violation::EdgeNotCovered(u, v));
        }
    }
    let adj = td.adjacency();
    for (&v, bags) in &holders {
        if !vertices.contains(&v) || bags.len() < 2 {
            continue;
        }
        let mut seen = BTreeSet::from([bags[0]]);
        let mut stack = vec![bags[0]];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if td.bags[y].contains(&v) && seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        if seen.len() != bags.len() {
            out.push(Violation::Disconnected(v));
        }
    }
    out
}

/// `s td <bags> <width+1> <n>`, one `b <id> <v...>` line per bag, then tree
/// edges as `<a> <b>`; bag ids and vertices are 1-indexed.
pub fn write_decomposition(td: &TreeDecomposition, n: usize) -> String {
    let mut out = format!("s td {} {} {}\n", td.len(), td.bags.iter().map(BTreeSet::len).max().unwrap_or(0), n);
    for (i, bag) in td.bags.iter().enumerate() {
        out.push_str(&format!("b {}", i + 1));
        for v in bag {
            out.push_str(&format!(" {}", v + 1));
        }
        out.push('\n');
    }
    for &(a, b) in &td.edges {
        out.push_str(&format!("{} {}\n", a + 1, b + 1));
    }
    out
}

pub fn parse_decomposition(text: &str) -> crate::Result<TreeDecomposition> {
    let err = |line: usize, message: String| crate::Error::Parse { line, message };
    let num = |line: usize, s: &str| -> crate::Result<usize> {
        match s.parse::<usize>() {
            Ok(x) if x >= 1 => Ok(x - 1),
            _ => Err(err(line, format!("expected a positive integer, got {s:?}"))),
        }
    };
    let mut count = None;
    let mut td = TreeDecomposition::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let words: Vec<&str> = raw.split_whitespace().collect();
        match words.as_slice() {
            [] | ["c", ..] => {}
            ["s", "td", b, _, _] => {
                let b: usize = b.parse().map_err(|_| err(line, format!("bad bag count {b:?}")))?;
                td.bags = vec![BTreeSet::new(); b];
                count = Some(b);
            }
            ["b", id, vs @ ..] => {
                let id = num(line, id)?;
                let bag = td
                    .bags
                    .get_mut(id)
                    .ok_or_else(|| err(line, format!("bag {} outside the header's range", id + 1)))?;
                for v in vs {
                    bag.insert(num(line, v)?);
                }
            }
            [a, b] => {
                let (a, b) = (num(line, a)?, num(line, b)?);
                if a >= td.bags.len() || b >= td.bags.len() {
                    return Err(err(line, "tree edge names an unknown bag".into()));
                }
                td.edges.push((a, b));
            }
            _ => return Err(err(line, format!("unrecognised line {:?}", raw.trim()))),
        }
    }
    if count.is_none() {
        return Err(err(1, "missing 's td' header".into()));
    }
    Ok(td)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multigraph::SimpleGraph;

    fn bags(list: &[&[VertexId]]) -> Vec<BTreeSet<VertexId>> {
        list.iter().map(|b| b.iter().copied().collect()).collect()
    }

    #[test]
    fn single_edge_one_bag() {
        let g = SimpleGraph::from_edges(2, &[(0, 1)]).unwrap();
        let td = TreeDecomposition::single([0, 1]);
        assert!(validate_decomposition(&td, &g).is_empty());
        assert_eq!(td.width(), 1);
    }

    #[test]
    fn split_edge_violates_t2() {
        let g = SimpleGraph::from_edges(2, &[(0, 1)]).unwrap();
        let td = TreeDecomposition {
            bags: bags(&[&[0], &[1]]),
            edges: vec![(0, 1)],
        };
        let v = validate_decomposition(&td, &g);
        assert_eq!(v, vec![Violation::EdgeNotCovered(0, 1)]);
        assert_eq!(v[0].condition(), "T2");
    }

    #[test]
    fn triangle_path_of_pairs_violates_t3() {
        let g = SimpleGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let td = TreeDecomposition {
            bags: bags(&[&[0, 1], &[1, 2], &[0, 2]]),
            edges: vec![(0, 1), (1, 2)],
        };
        let v = validate_decomposition(&td, &g);
        assert_eq!(v, vec![Violation::Disconnected(0)]);
    }

    #[test]
    fn detects_missing_vertex_and_bad_tree() {
        let g = SimpleGraph::with_vertices(3);
        let td = TreeDecomposition {
            bags: bags(&[&[0], &[1], &[7]]),
            edges: vec![(0, 1)],
        };
        let v = validate_decomposition(&td, &g);
        assert!(matches!(v[0], Violation::NotATree(_)));
        assert!(v.contains(&Violation::UnknownVertex(7)));
        assert!(v.contains(&Violation::VertexNotCovered(2)));
    }

    #[test]
    fn empty_graph_empty_decomposition() {
        let td = TreeDecomposition::default();
        assert!(validate_decomposition(&td, &SimpleGraph::new()).is_empty());
        assert_eq!(td.width(), 0);
    }

    #[test]
    fn td_text_round_trip() {
        let td = TreeDecomposition {
            bags: vec![[0, 1].into(), [1, 2].into(), [1, 3].into()],
            edges: vec![(0, 1), (1, 2)],
        };
        let text = write_decomposition(&td, 4);
        assert!(text.starts_with("s td 3 2 4\n"));
        assert_eq!(parse_decomposition(&text).unwrap(), td);
        assert!(parse_decomposition("b 1 1\n").is_err());
    }
}

//! Path decompositions for circuits whose gates act on nearby qubit lines,
//! and moving decompositions across degree-1/degree-2 reductions.

use std::collections::BTreeSet;

use crate::circuit::{Circuit, GateKind};
use crate::error::{Error, Result};
use crate::multigraph::{simplify, MultiGraph, Removal, SimplifyMode, VertexId};

use super::decomposition::TreeDecomposition;

/// Carries a decomposition of G forward through `log` to the reduced graph:
/// leaves are dropped and a smoothed vertex is renamed to its right
/// neighbour (the same as contracting that edge).
pub fn push_decomposition(td: &TreeDecomposition, log: &[Removal]) -> TreeDecomposition {
    let mut out = td.clone();
    for step in log {
        match *step {
            Removal::Leaf { vertex, .. } => {
                for bag in &mut out.bags {
                    bag.remove(&vertex);
                }
            }
            Removal::Smooth { vertex, right, .. } => {
                for bag in &mut out.bags {
                    if bag.remove(&vertex) {
                        bag.insert(right);
                    }
                }
            }
        }
    }
    out
}

/// Undoes `log` on a decomposition of the reduced graph, giving one of the
/// original graph with width at most max(width, 2).
pub fn lift_decomposition(td: &TreeDecomposition, log: &[Removal]) -> TreeDecomposition {
    let mut out = td.clone();
    for step in log.iter().rev() {
        let (bag, anchor): (BTreeSet<VertexId>, Vec<VertexId>) = match *step {
            Removal::Leaf {
                vertex, neighbor, ..
            } => ([vertex, neighbor].into(), vec![neighbor]),
            Removal::Smooth {
                vertex,
                left,
                right,
                ..
            } => ([left, vertex, right].into(), vec![left, right]),
        };
        let host = out.find_bag(&anchor);
        let id = out.add_bag(bag);
        match host {
            Some(h) => out.edges.push((h, id)),
            None if id > 0 => out.edges.push((0, id)),
            None => {}
        }
    }
    out
}

/// Bags along the qubit lines for a circuit whose gates keep their arity.
#[derive(Clone, Debug)]
pub struct LocalPathDecomposition {
    /// G_C after degree-1 removal and degree-2 smoothing (multigraph mode).
    pub graph: MultiGraph,
    pub removals: Vec<Removal>,
    /// Path over lines 0..n: bag i holds every surviving vertex whose line
    /// span covers i. Valid for `graph`.
    pub decomposition: TreeDecomposition,
    /// Bag i lists the multi-qubit gates acting on lines j ≤ i < j'
    /// (cuts 0..n−1).
    pub cut_bags: Vec<BTreeSet<VertexId>>,
    /// Largest cut bag.
    pub r: usize,
}

impl LocalPathDecomposition {
    /// max |cut bag| − 1, floored at 0.
    pub fn cut_width(&self) -> usize {
        self.r.saturating_sub(1)
    }
}

pub fn local_interaction_path_decomposition(c: &Circuit) -> Result<LocalPathDecomposition> {
    if let Some(g) = c.gates().iter().find(|g| g.inputs() != g.outputs()) {
        return Err(Error::Arity(format!(
            "{} gate on {:?} has {} inputs and {} outputs",
            g.kind_name(),
            g.qubits,
            g.inputs(),
            g.outputs()
        )));
    }
    let n = c.n();
    let wiring = c.wiring();
    let span: Vec<(usize, usize)> = wiring
        .lines
        .iter()
        .map(|l| (*l.iter().min().unwrap(), *l.iter().max().unwrap()))
        .collect();
    let full = TreeDecomposition {
        bags: (0..n)
            .map(|i| {
                (0..span.len())
                    .filter(|&v| span[v].0 <= i && i <= span[v].1)
                    .collect()
            })
            .collect(),
        edges: (1..n).map(|i| (i - 1, i)).collect(),
    };
    let (graph, removals) = simplify(&wiring.graph, SimplifyMode::Multi);
    let decomposition = push_decomposition(&full, &removals);

    let gates: Vec<VertexId> = c
        .gates()
        .iter()
        .enumerate()
        .filter(|(_, g)| g.qubits.len() > 1 && !matches!(g.kind, GateKind::TraceOut))
        .map(|(i, _)| n + i)
        .collect();
    let cut_bags: Vec<BTreeSet<VertexId>> = (0..n.saturating_sub(1))
        .map(|i| {
            gates
                .iter()
                .copied()
                .filter(|&v| span[v].0 <= i && i < span[v].1)
                .collect()
        })
        .collect();
    let r = cut_bags.iter().map(BTreeSet::len).max().unwrap_or(0);
    Ok(LocalPathDecomposition {
        graph,
        removals,
        decomposition,
        cut_bags,
        r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::treewidth::validate_decomposition;

    #[test]
    fn single_qubit_gates_only() {
        let c = parse_circuit("qubits 3\nh 0\nx 1\nz 2\nh 2\n").unwrap();
        let l = local_interaction_path_decomposition(&c).unwrap();
        assert!(l.cut_bags.iter().all(BTreeSet::is_empty));
        assert_eq!(l.cut_width(), 0);
        assert!(l.decomposition.width() <= 1);
        assert!(validate_decomposition(&l.decomposition, &l.graph).is_empty());
        assert!(l.decomposition.is_path());
    }

    #[test]
    fn one_gate_of_three_qubits() {
        let c = parse_circuit("qubits 3\ncz 0 1\n").unwrap();
        let l = local_interaction_path_decomposition(&c).unwrap();
        assert_eq!(l.cut_bags, vec![BTreeSet::from([3]), BTreeSet::new()]);
        assert_eq!(l.cut_width(), 0);
        assert!(validate_decomposition(&l.decomposition, &l.graph).is_empty());
    }

    #[test]
    fn ladder_is_valid_path() {
        let mut text = String::from("qubits 5\n");
        for layer in 0..3 {
            for q in (layer % 2..4).step_by(2) {
                text += &format!("cnot {q} {}\n", q + 1);
            }
        }
        let c = parse_circuit(&text).unwrap();
        let l = local_interaction_path_decomposition(&c).unwrap();
        assert!(validate_decomposition(&l.decomposition, &l.graph).is_empty());
        assert!(l.decomposition.is_path());
        assert!(l.r <= 2 * 3);
        assert!(l.decomposition.width() < 2 * l.r);
    }

    #[test]
    fn rejects_unequal_arity() {
        let c = parse_circuit("qubits 2\ntraceout 0\n").unwrap();
        assert!(matches!(local_interaction_path_decomposition(&c), Err(Error::Arity(_))));
    }

    #[test]
    fn lift_round_trip() {
        let c = parse_circuit("qubits 3\nh 0\ncnot 0 1\nx 1\ncz 1 2\nh 2\ncnot 0 2\n").unwrap();
        let l = local_interaction_path_decomposition(&c).unwrap();
        let lifted = lift_decomposition(&l.decomposition, &l.removals);
        assert!(validate_decomposition(&lifted, &c.graph()).is_empty());
    }
}

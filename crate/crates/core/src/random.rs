//! Seeded random instances: circuits, scenarios and graphs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::{projector, Circuit, Gate, MeasurementScenario, NamedGate};
use crate::multigraph::SimpleGraph;

const ONE_QUBIT: [NamedGate; 6] = [
    NamedGate::H,
    NamedGate::X,
    NamedGate::Y,
    NamedGate::Z,
    NamedGate::S,
    NamedGate::T,
];
const TWO_QUBIT: [NamedGate; 3] = [NamedGate::Cnot, NamedGate::Cz, NamedGate::Swap];

fn one_qubit<R: Rng>(rng: &mut R) -> NamedGate {
    *ONE_QUBIT.choose(rng).unwrap()
}

fn two_qubit<R: Rng>(rng: &mut R) -> NamedGate {
    *TWO_QUBIT.choose(rng).unwrap()
}

/// `gates` named gates on random qubits; two-qubit gates with probability ½
/// when n ≥ 2.
pub fn random_circuit<R: Rng>(rng: &mut R, n: usize, gates: usize) -> Circuit {
    let mut c = Circuit::new(n);
    let qubits: Vec<usize> = (0..n).collect();
    for _ in 0..gates {
        let gate = if n >= 2 && rng.gen_bool(0.5) {
            let pair: Vec<usize> = qubits.choose_multiple(rng, 2).copied().collect();
            Gate::named(two_qubit(rng), &pair)
        } else {
            Gate::named(one_qubit(rng), &[rng.gen_range(0..n)])
        };
        c.push(gate).expect("generated gates are well-formed");
    }
    c
}

/// Two layers; each pairs up a random subset of qubits with two-qubit gates
/// and gives some of the rest a one-qubit gate.
pub fn random_depth2_circuit<R: Rng>(rng: &mut R, n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..2 {
        let mut qs: Vec<usize> = (0..n).collect();
        qs.shuffle(rng);
        let mut rest = qs.as_slice();
        while !rest.is_empty() {
            let gate = if rest.len() >= 2 && rng.gen_bool(0.6) {
                let g = Gate::named(two_qubit(rng), &rest[..2]);
                rest = &rest[2..];
                Some(g)
            } else {
                let g = rng.gen_bool(0.5).then(|| Gate::named(one_qubit(rng), &rest[..1]));
                rest = &rest[1..];
                g
            };
            if let Some(g) = gate {
                c.push(g).expect("generated gates are well-formed");
            }
        }
    }
    c
}

/// `depth` layers of nearest-neighbour gates: each layer puts a two-qubit
/// gate on some of the pairs (i, i + 1) with i of the layer's parity, and
/// one-qubit gates elsewhere at random.
pub fn random_nearest_neighbor_circuit<R: Rng>(rng: &mut R, n: usize, depth: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for layer in 0..depth {
        let mut busy = vec![false; n];
        let mut i = layer % 2;
        while i + 1 < n {
            if rng.gen_bool(0.7) {
                let mut pair = [i, i + 1];
                if rng.gen_bool(0.5) {
                    pair.reverse();
                }
                c.push(Gate::named(two_qubit(rng), &pair)).unwrap();
                busy[i] = true;
                busy[i + 1] = true;
            }
            i += 2;
        }
        for q in 0..n {
            if !busy[q] && rng.gen_bool(0.5) {
                c.push(Gate::named(one_qubit(rng), &[q])).unwrap();
            }
        }
    }
    c
}

pub fn random_input<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2)).collect()
}

/// Each listed qubit gets |0⟩⟨0| or |1⟩⟨1|, or stays unmeasured with
/// probability `skip`.
pub fn random_basis_scenario<R: Rng>(rng: &mut R, qubits: &[usize], skip: f64) -> MeasurementScenario {
    let mut s = MeasurementScenario::new();
    for &q in qubits {
        if !rng.gen_bool(skip) {
            s.set(q, projector(rng.gen_range(0..2))).unwrap();
        }
    }
    s
}

/// G(n, p).
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> SimpleGraph {
    let mut g = SimpleGraph::with_vertices(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

/// G(n, p) plus a random spanning tree, so the result is connected.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> SimpleGraph {
    let mut g = random_graph(rng, n, p);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for i in 1..n {
        let j = rng.gen_range(0..i);
        g.add_edge(order[i], order[j]).unwrap();
    }
    g
}

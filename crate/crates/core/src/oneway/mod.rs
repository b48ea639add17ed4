//! Graph states and one-way (measurement-based) computation.
//!
//! Qubit v of a graph state is vertex v; graphs must use vertex ids `0..n`.

mod expansion;
mod program;
mod simulate;

use nalgebra::DMatrix;

use crate::circuit::{finish, Circuit, Gate, MeasurementScenario, NamedGate, SimOptions, Simulation};
use crate::error::{Error, Result};
use crate::multigraph::{MultiGraph, SimpleGraph, VertexId};
use crate::planner::{ordering_cost, plan_contraction, ContractionOrdering, ContractionPlan, PlanSource};
use crate::tensor::{
    contract_network, cz_matrix, density_tensor, povm_tensor, unitary_tensor, Tensor, TensorNetwork,
    WireId, C64,
};

pub use expansion::{expand_to_degree3, Expansion, Gadget, PrefixedProgram};
pub use program::{parse_program, Measurement, OneWayProgram, ProgramFile, ProgramStep};
pub use simulate::{
    branch_distribution, dense_branch_distribution, full_branch_distribution, simulate_oneway_full,
    simulate_oneway_oblivious, simulate_oneway_randomized, BranchTree, Distribution, FullRun,
    ObliviousRun, OneWayRun, Transcript, TranscriptEntry, DEGENERATE_PROBABILITY,
};

pub(crate) fn check_vertex_ids(g: &SimpleGraph) -> Result<usize> {
    let n = g.num_vertices();
    if g.vertices().enumerate().any(|(i, v)| i != v) {
        return Err(Error::Circuit(format!("graph-state vertices must be 0..{n}")));
    }
    Ok(n)
}

/// n Hadamards, then Λ(σ_z) on every edge in sorted order.
pub fn graph_state_circuit(g: &SimpleGraph) -> Result<Circuit> {
    let n = check_vertex_ids(g)?;
    let mut c = Circuit::new(n);
    for v in 0..n {
        c.push(Gate::named(NamedGate::H, &[v]))?;
    }
    for (u, v) in g.edges() {
        c.push(Gate::named(NamedGate::Cz, &[u, v]))?;
    }
    Ok(c)
}

/// g^u: the identity from (u⁺, t⁻) to (t⁺, u⁻), so qubit u enters g^v on
/// t⁺ and comes back on t⁻.
pub fn split_tensor_u(u_in: WireId, t_minus: WireId, t_plus: WireId, u_out: WireId) -> Result<Tensor> {
    unitary_tensor(&DMatrix::identity(4, 4), &[u_in, t_minus], &[t_plus, u_out])
}

/// g^v: Λ(σ_z) from (t⁺, v⁺) to (t⁻, v⁻).
pub fn split_tensor_v(t_plus: WireId, v_in: WireId, t_minus: WireId, v_out: WireId) -> Result<Tensor> {
    unitary_tensor(&cz_matrix(), &[t_plus, v_in], &[t_minus, v_out])
}

/// Wire layout of N′(C_G; τ). Tensor order: n inputs, n Hadamards, a
/// (g^u, g^v) pair per sorted edge, then n POVMs.
#[derive(Clone, Debug)]
pub struct SplitLayout {
    pub n: usize,
    pub edges: Vec<(VertexId, VertexId)>,
    /// Wire segments of each qubit, input first.
    pub chains: Vec<Vec<WireId>>,
    /// (t⁺, t⁻) of each edge.
    pub transitions: Vec<(WireId, WireId)>,
}

impl SplitLayout {
    pub fn new(g: &SimpleGraph) -> Result<Self> {
        let n = check_vertex_ids(g)?;
        let edges = g.edges();
        let mut next = 0;
        let mut fresh = || {
            next += 1;
            next - 1
        };
        let mut chains: Vec<Vec<WireId>> = (0..n).map(|_| vec![fresh(), fresh()]).collect();
        let mut transitions = Vec::with_capacity(edges.len());
        for &(u, v) in &edges {
            let t = (fresh(), fresh());
            transitions.push(t);
            chains[u].push(fresh());
            chains[v].push(fresh());
        }
        Ok(Self {
            n,
            edges,
            chains,
            transitions,
        })
    }

    pub fn network(&self, tau: &MeasurementScenario) -> Result<TensorNetwork> {
        if let Some(q) = tau.elements().keys().find(|&&q| q >= self.n) {
            return Err(Error::Measurement(format!("qubit {q} is not a vertex")));
        }
        let h = NamedGate::H.matrix();
        let mut tensors = Vec::with_capacity(3 * self.n + 2 * self.edges.len());
        for chain in &self.chains {
            tensors.push(density_tensor(&crate::circuit::projector(0), vec![chain[0]])?);
        }
        for chain in &self.chains {
            tensors.push(unitary_tensor(&h, &[chain[0]], &[chain[1]])?);
        }
        let mut pos = vec![1; self.n];
        for (&(u, v), &(tp, tm)) in self.edges.iter().zip(&self.transitions) {
            let (ui, uo) = (self.chains[u][pos[u]], self.chains[u][pos[u] + 1]);
            let (vi, vo) = (self.chains[v][pos[v]], self.chains[v][pos[v] + 1]);
            pos[u] += 1;
            pos[v] += 1;
            tensors.push(split_tensor_u(ui, tm, tp, uo)?);
            tensors.push(split_tensor_v(tp, vi, tm, vo)?);
        }
        for (q, chain) in self.chains.iter().enumerate() {
            tensors.push(povm_tensor(&tau.get(q), *chain.last().unwrap())?);
        }
        TensorNetwork::new(tensors)
    }

    /// The ordering from the bound on cc(G′): every qubit's own segments
    /// first (its POVM end, then from the input), then both transition
    /// wires of each edge in the order `pi` gives to the edges of G (as
    /// numbered by [`SplitLayout::multigraph`]).
    pub fn lifted_ordering(&self, pi: &ContractionOrdering) -> ContractionOrdering {
        let mut out = Vec::new();
        for chain in &self.chains {
            let (last, rest) = chain.split_last().unwrap();
            out.push(*last);
            out.extend_from_slice(rest);
        }
        for &e in pi.as_slice() {
            let (tp, tm) = self.transitions[e];
            out.extend([tp, tm]);
        }
        ContractionOrdering(out)
    }

    /// G with edge i = the i-th sorted edge.
    pub fn multigraph(&self) -> MultiGraph {
        let mut m = MultiGraph::with_vertices(self.n);
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            m.insert_edge(i, u, v).unwrap();
        }
        m
    }
}

/// Contracts N′(C_G; τ) for any number of scenarios along one plan.
#[derive(Clone, Debug)]
pub struct GraphStateSimulator {
    layout: SplitLayout,
    plan: ContractionPlan,
    budget_rank: usize,
}

impl GraphStateSimulator {
    /// Plans the split network directly and through the per-qubit
    /// ordering lifted from a plan for G; keeps the cheaper.
    pub fn new(g: &SimpleGraph, opts: SimOptions) -> Result<Self> {
        let layout = SplitLayout::new(g)?;
        let graph = layout.network(&MeasurementScenario::new())?.graph()?;
        let direct = plan_contraction(&graph, opts.strategy, opts.seed)?;
        let base = plan_contraction(&layout.multigraph(), opts.strategy, opts.seed)?;
        let lifted = layout.lifted_ordering(&base.ordering);
        let cost = ordering_cost(&graph, &lifted)?;
        let plan = if (cost.cc, cost.rank) < (direct.predicted_cc, direct.predicted_rank) {
            ContractionPlan {
                ordering: lifted,
                predicted_cc: cost.cc,
                predicted_rank: cost.rank,
                source: PlanSource {
                    method: format!("lifted-{}", opts.strategy),
                    ..base.source
                },
            }
        } else {
            direct
        };
        Ok(Self {
            layout,
            plan,
            budget_rank: opts.budget_rank,
        })
    }

    pub fn layout(&self) -> &SplitLayout {
        &self.layout
    }

    pub fn plan(&self) -> &ContractionPlan {
        &self.plan
    }

    pub fn simulate(&self, tau: &MeasurementScenario) -> Result<Simulation> {
        let net = self.layout.network(tau)?;
        let r = contract_network(&net, &self.plan.ordering, self.budget_rank)?;
        let raw: C64 = r.tensor.value().unwrap();
        Ok(finish(raw, r.max_rank, Some(self.plan.clone())))
    }

    pub fn probability(&self, tau: &MeasurementScenario) -> Result<f64> {
        Ok(self.simulate(tau)?.probability)
    }
}

/// Probability that τ is realized on |G⟩, via the split-tensor network.
pub fn graphstate_probability(
    g: &SimpleGraph,
    tau: &MeasurementScenario,
    opts: SimOptions,
) -> Result<Simulation> {
    GraphStateSimulator::new(g, opts)?.simulate(tau)
}

//! Circuits, their graphs and tensor networks, and probability simulation.

pub(crate) mod parse;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::multigraph::{EdgeId, MultiGraph, VertexId};
use crate::planner::{plan_contraction, ContractionOrdering, ContractionPlan, Strategy};
use crate::tensor::{
    contract_network, density_tensor, povm_tensor, superop_tensor, trace_out_tensor,
    unitary_tensor, TensorNetwork, C64, DEFAULT_BUDGET_RANK,
};

pub use parse::{
    named_element, parse_circuit, parse_complex, parse_scenario, serialize_circuit,
    serialize_scenario,
};

/// Qubit line index, 0-based.
pub type Qubit = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NamedGate {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Cnot,
    Cz,
    Swap,
}

impl NamedGate {
    pub const ALL: [NamedGate; 9] = [
        NamedGate::H,
        NamedGate::X,
        NamedGate::Y,
        NamedGate::Z,
        NamedGate::S,
        NamedGate::T,
        NamedGate::Cnot,
        NamedGate::Cz,
        NamedGate::Swap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NamedGate::H => "h",
            NamedGate::X => "x",
            NamedGate::Y => "y",
            NamedGate::Z => "z",
            NamedGate::S => "s",
            NamedGate::T => "t",
            NamedGate::Cnot => "cnot",
            NamedGate::Cz => "cz",
            NamedGate::Swap => "swap",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "cx" => Some(NamedGate::Cnot),
            _ => Self::ALL.into_iter().find(|g| g.name() == name),
        }
    }

    pub fn arity(self) -> usize {
        match self {
            NamedGate::Cnot | NamedGate::Cz | NamedGate::Swap => 2,
            _ => 1,
        }
    }

    /// Matrix over the listed qubits, first qubit most significant.
    pub fn matrix(self) -> DMatrix<C64> {
        let r = |x: f64| C64::new(x, 0.0);
        let i = C64::new(0.0, 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m2 = |v: [C64; 4]| DMatrix::from_row_slice(2, 2, &v);
        let perm = |p: [usize; 4], signs: [f64; 4]| {
            let mut m = DMatrix::zeros(4, 4);
            for (col, &row) in p.iter().enumerate() {
                m[(row, col)] = r(signs[col]);
            }
            m
        };
        match self {
            NamedGate::H => m2([r(s), r(s), r(s), r(-s)]),
            NamedGate::X => m2([r(0.), r(1.), r(1.), r(0.)]),
            NamedGate::Y => m2([r(0.), -i, i, r(0.)]),
            NamedGate::Z => m2([r(1.), r(0.), r(0.), r(-1.)]),
            NamedGate::S => m2([r(1.), r(0.), r(0.), i]),
            NamedGate::T => m2([r(1.), r(0.), r(0.), C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]),
            NamedGate::Cnot => perm([0, 1, 3, 2], [1.; 4]),
            NamedGate::Cz => perm([0, 1, 2, 3], [1., 1., 1., -1.]),
            NamedGate::Swap => perm([0, 2, 1, 3], [1.; 4]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    Named(NamedGate),
    Unitary(DMatrix<C64>),
    /// Tensor entries over Π for `inputs` input and `outputs` output wires;
    /// outputs continue on the first `outputs` qubits, the rest end here.
    Superop {
        inputs: usize,
        outputs: usize,
        entries: Vec<C64>,
    },
    TraceOut,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<Qubit>,
}

impl Gate {
    pub fn named(g: NamedGate, qubits: &[Qubit]) -> Self {
        Self {
            kind: GateKind::Named(g),
            qubits: qubits.to_vec(),
        }
    }

    pub fn inputs(&self) -> usize {
        self.qubits.len()
    }

    pub fn outputs(&self) -> usize {
        match &self.kind {
            GateKind::Named(_) | GateKind::Unitary(_) => self.qubits.len(),
            GateKind::Superop { outputs, .. } => *outputs,
            GateKind::TraceOut => 0,
        }
    }

    fn check(&self) -> Result<()> {
        let k = self.qubits.len();
        let ok = match &self.kind {
            GateKind::Named(g) => g.arity() == k,
            GateKind::Unitary(u) => k > 0 && u.nrows() == 1 << k && u.ncols() == 1 << k,
            GateKind::Superop {
                inputs,
                outputs,
                entries,
            } => *inputs == k && outputs <= inputs && entries.len() == 1 << (2 * (inputs + outputs)),
            GateKind::TraceOut => k == 1,
        };
        if !ok {
            return Err(Error::Arity(format!("gate {:?} on qubits {:?}", self.kind_name(), self.qubits)));
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            GateKind::Named(g) => g.name(),
            GateKind::Unitary(_) => "u",
            GateKind::Superop { .. } => "superop",
            GateKind::TraceOut => "traceout",
        }
    }
}

/// A sequence of gates on qubit lines `0..n`. A line ends at a trace-out or
/// a superoperator dropping it; lines alive at the end are the outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(n);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    /// Appends a gate after checking arity and that its qubits are alive.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check()?;
        let alive = self.alive();
        for (i, &q) in gate.qubits.iter().enumerate() {
            if q >= self.n {
                return Err(Error::Circuit(format!("qubit {q} out of range for {} qubits", self.n)));
            }
            if gate.qubits[..i].contains(&q) {
                return Err(Error::Circuit(format!("qubit {q} repeated in one gate")));
            }
            if !alive[q] {
                return Err(Error::Circuit(format!("qubit {q} was already consumed")));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    fn alive(&self) -> Vec<bool> {
        let mut alive = vec![true; self.n];
        for g in &self.gates {
            for &q in &g.qubits[g.outputs()..] {
                alive[q] = false;
            }
        }
        alive
    }

    /// Lines that reach the end of the circuit, ascending.
    pub fn output_qubits(&self) -> Vec<Qubit> {
        self.alive()
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn m(&self) -> usize {
        self.output_qubits().len()
    }

    pub fn wiring(&self) -> Wiring {
        Wiring::build(self)
    }

    /// G_C: input terminals, gates, output terminals, one edge per wire segment.
    pub fn graph(&self) -> MultiGraph {
        self.wiring().graph
    }
}

/// Vertex and edge bookkeeping for G_C. Vertices: inputs `0..n`, gate i at
/// `n + i`, the j-th output line at `n + T + j`. Edge ids are also the wire
/// ids of the tensor network.
#[derive(Clone, Debug)]
pub struct Wiring {
    pub graph: MultiGraph,
    pub input_edges: Vec<EdgeId>,
    pub gate_inputs: Vec<Vec<EdgeId>>,
    pub gate_outputs: Vec<Vec<EdgeId>>,
    /// (line, terminal vertex, edge) per output line.
    pub outputs: Vec<(Qubit, VertexId, EdgeId)>,
    /// Qubit lines each vertex sits on.
    pub lines: Vec<Vec<Qubit>>,
}

impl Wiring {
    fn build(c: &Circuit) -> Self {
        #[derive(Clone, Copy)]
        enum Producer {
            Input(Qubit),
            Gate(usize, usize),
        }
        let (n, t) = (c.n, c.gates.len());
        let outs = c.output_qubits();
        let mut graph = MultiGraph::with_vertices(n + t + outs.len());
        let mut w = Wiring {
            graph: MultiGraph::new(),
            input_edges: vec![0; n],
            gate_inputs: Vec::with_capacity(t),
            gate_outputs: c.gates.iter().map(|g| vec![0; g.outputs()]).collect(),
            outputs: Vec::new(),
            lines: (0..n).map(|q| vec![q]).collect(),
        };
        let mut current: Vec<Producer> = (0..n).map(Producer::Input).collect();
        let link = |graph: &mut MultiGraph, w: &mut Wiring, p: Producer, consumer: VertexId| {
            let (from, slot) = match p {
                Producer::Input(q) => (q, None),
                Producer::Gate(g, s) => (n + g, Some((g, s))),
            };
            let e = graph.add_edge(from, consumer).unwrap();
            match (p, slot) {
                (Producer::Input(q), _) => w.input_edges[q] = e,
                (_, Some((g, s))) => w.gate_outputs[g][s] = e,
                _ => unreachable!(),
            }
            e
        };
        for (gi, g) in c.gates.iter().enumerate() {
            let v = n + gi;
            let ins: Vec<EdgeId> = g
                .qubits
                .iter()
                .map(|&q| link(&mut graph, &mut w, current[q], v))
                .collect();
            w.gate_inputs.push(ins);
            for (s, &q) in g.qubits[..g.outputs()].iter().enumerate() {
                current[q] = Producer::Gate(gi, s);
            }
            w.lines.push(g.qubits.clone());
        }
        for (j, &q) in outs.iter().enumerate() {
            let v = n + t + j;
            let e = link(&mut graph, &mut w, current[q], v);
            w.outputs.push((q, v, e));
            w.lines.push(vec![q]);
        }
        w.graph = graph;
        w
    }
}

/// τ: one single-qubit PSD element per output line, identity when absent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeasurementScenario {
    elements: BTreeMap<Qubit, DMatrix<C64>>,
}

/// Hermitian and positive semidefinite within 1e-9.
pub fn check_psd(m: &DMatrix<C64>) -> Result<()> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(Error::Measurement("element must be 2x2".into()));
    }
    if (m - m.adjoint()).iter().any(|x| x.norm() > 1e-9) {
        return Err(Error::Measurement("element is not Hermitian".into()));
    }
    let (a, d, b) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
    let low = (a + d) / 2.0 - (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
    if low < -1e-9 {
        return Err(Error::Measurement(format!("element has eigenvalue {low:e}")));
    }
    Ok(())
}

impl MeasurementScenario {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, qubit: Qubit, m: DMatrix<C64>) -> Result<()> {
        check_psd(&m)?;
        self.elements.insert(qubit, m);
        Ok(())
    }

    pub fn with(mut self, qubit: Qubit, m: DMatrix<C64>) -> Result<Self> {
        self.set(qubit, m)?;
        Ok(self)
    }

    /// Computational-basis projectors, one per listed qubit.
    pub fn basis(outcomes: &[(Qubit, u8)]) -> Self {
        let mut s = Self::new();
        for &(q, b) in outcomes {
            s.elements.insert(q, projector(b));
        }
        s
    }

    pub fn get(&self, qubit: Qubit) -> DMatrix<C64> {
        self.elements
            .get(&qubit)
            .cloned()
            .unwrap_or_else(|| DMatrix::identity(2, 2))
    }

    pub fn elements(&self) -> &BTreeMap<Qubit, DMatrix<C64>> {
        &self.elements
    }

    fn check_against(&self, c: &Circuit) -> Result<()> {
        let outs = c.output_qubits();
        match self.elements.keys().find(|q| !outs.contains(q)) {
            Some(q) => Err(Error::Measurement(format!("qubit {q} is not an output of the circuit"))),
            None => Ok(()),
        }
    }
}

/// |b⟩⟨b|.
pub fn projector(b: u8) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(2, 2);
    m[(b as usize, b as usize)] = C64::new(1.0, 0.0);
    m
}

fn check_input(c: &Circuit, x: &[u8]) -> Result<()> {
    if x.len() != c.n || x.iter().any(|&b| b > 1) {
        return Err(Error::Circuit(format!(
            "input must be {} bits, got {:?}",
            c.n, x
        )));
    }
    Ok(())
}

/// N(C; x, τ): closed network with tensor i at vertex i of G_C.
pub fn build_network(c: &Circuit, x: &[u8], tau: &MeasurementScenario) -> Result<TensorNetwork> {
    check_input(c, x)?;
    tau.check_against(c)?;
    let w = c.wiring();
    let mut tensors = Vec::with_capacity(w.graph.num_vertices());
    for q in 0..c.n {
        tensors.push(density_tensor(&projector(x[q]), vec![w.input_edges[q]])?);
    }
    for (i, g) in c.gates.iter().enumerate() {
        let (ins, outs) = (&w.gate_inputs[i], &w.gate_outputs[i]);
        tensors.push(match &g.kind {
            GateKind::Named(ng) => unitary_tensor(&ng.matrix(), ins, outs)?,
            GateKind::Unitary(u) => unitary_tensor(u, ins, outs)?,
            GateKind::Superop { entries, .. } => superop_tensor(entries.clone(), ins, outs)?,
            GateKind::TraceOut => trace_out_tensor(ins[0]),
        });
    }
    for &(q, _, e) in &w.outputs {
        tensors.push(povm_tensor(&tau.get(q), e)?);
    }
    TensorNetwork::new(tensors)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimOptions {
    pub strategy: Strategy,
    pub seed: u64,
    pub budget_rank: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::MinFill,
            seed: 0,
            budget_rank: DEFAULT_BUDGET_RANK,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    /// Real part clamped to [0, 1].
    pub probability: f64,
    /// The unclamped rank-0 result.
    pub raw: C64,
    pub max_rank: usize,
    pub plan: Option<ContractionPlan>,
}

pub(crate) fn finish(raw: C64, max_rank: usize, plan: Option<ContractionPlan>) -> Simulation {
    if !(-1e-9..=1.0 + 1e-9).contains(&raw.re) || raw.im.abs() > 1e-9 {
        log::warn!("raw probability {raw} outside numerical slack");
    } else {
        log::debug!("raw probability {raw}");
    }
    Simulation {
        probability: raw.re.clamp(0.0, 1.0),
        raw,
        max_rank,
        plan,
    }
}

/// Plans G_C and contracts N(C; x, τ).
pub fn simulate_probability(
    c: &Circuit,
    x: &[u8],
    tau: &MeasurementScenario,
    opts: SimOptions,
) -> Result<Simulation> {
    let net = build_network(c, x, tau)?;
    let plan = plan_contraction(&c.graph(), opts.strategy, opts.seed)?;
    let r = contract_network(&net, &plan.ordering, opts.budget_rank)?;
    Ok(finish(r.tensor.value().unwrap(), r.max_rank, Some(plan)))
}

/// Contracts N(C; x, τ) along a caller-supplied ordering of E(G_C).
pub fn simulate_with_ordering(
    c: &Circuit,
    x: &[u8],
    tau: &MeasurementScenario,
    ordering: &ContractionOrdering,
    budget_rank: usize,
) -> Result<Simulation> {
    let net = build_network(c, x, tau)?;
    let r = contract_network(&net, ordering, budget_rank)?;
    Ok(finish(r.tensor.value().unwrap(), r.max_rank, None))
}

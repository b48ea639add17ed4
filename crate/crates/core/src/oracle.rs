//! Dense reference simulators. They never touch the tensor code: circuits are
//! evolved as full density matrices and graph states as amplitude vectors.

use nalgebra::{DMatrix, DVector};

use crate::circuit::{projector, Circuit, GateKind, MeasurementScenario, Qubit};
use crate::error::{Error, Result};
use crate::multigraph::{SimpleGraph, VertexId};
use crate::tensor::C64;

pub const ORACLE_QUBIT_LIMIT: usize = 10;
pub const GRAPH_STATE_LIMIT: usize = 20;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Bit of `qubit_pos` in a big-endian index over `n` qubits.
fn shift(n: usize, pos: usize) -> usize {
    n - 1 - pos
}

/// Applies `op` (over `positions`, first most significant) to every column.
fn apply_left(m: &DMatrix<C64>, op: &DMatrix<C64>, positions: &[usize], n: usize) -> DMatrix<C64> {
    let k = positions.len();
    let masks: Vec<usize> = positions.iter().map(|&p| 1 << shift(n, p)).collect();
    let scatter = |base: usize, t: usize| {
        (0..k).fold(base, |acc, i| {
            if (t >> (k - 1 - i)) & 1 == 1 {
                acc | masks[i]
            } else {
                acc
            }
        })
    };
    let all: usize = masks.iter().sum();
    let mut out = m.clone();
    let mut gathered = vec![ZERO; 1 << k];
    for col in 0..m.ncols() {
        for base in (0..m.nrows()).filter(|r| r & all == 0) {
            for (t, slot) in gathered.iter_mut().enumerate() {
                *slot = m[(scatter(base, t), col)];
            }
            for t in 0..1 << k {
                let mut s = ZERO;
                for (u, &g) in gathered.iter().enumerate() {
                    s += op[(t, u)] * g;
                }
                out[(scatter(base, t), col)] = s;
            }
        }
    }
    out
}

/// Density matrix over an ordered list of live qubit lines.
#[derive(Clone, Debug)]
pub struct DenseState {
    pub rho: DMatrix<C64>,
    pub qubits: Vec<Qubit>,
}

impl DenseState {
    pub fn basis(x: &[u8]) -> Result<Self> {
        let n = x.len();
        if n > ORACLE_QUBIT_LIMIT {
            return Err(Error::OracleTooLarge {
                qubits: n,
                limit: ORACLE_QUBIT_LIMIT,
            });
        }
        let idx = x.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let mut rho = DMatrix::zeros(1 << n, 1 << n);
        rho[(idx, idx)] = C64::new(1.0, 0.0);
        Ok(Self {
            rho,
            qubits: (0..n).collect(),
        })
    }

    fn positions(&self, qs: &[Qubit]) -> Vec<usize> {
        qs.iter()
            .map(|q| self.qubits.iter().position(|x| x == q).expect("live qubit"))
            .collect()
    }

    /// ρ ↦ UρU†.
    pub fn apply_unitary(&mut self, u: &DMatrix<C64>, qs: &[Qubit]) {
        let pos = self.positions(qs);
        let n = self.qubits.len();
        let left = apply_left(&self.rho, u, &pos, n);
        self.rho = apply_left(&left.adjoint(), u, &pos, n).adjoint();
    }

    /// Partial trace over one qubit.
    pub fn trace_out(&mut self, q: Qubit) {
        let p = self.positions(&[q])[0];
        let n = self.qubits.len();
        let s = shift(n, p);
        let insert = |i: usize, b: usize| ((i >> s) << (s + 1)) | (b << s) | (i & ((1 << s) - 1));
        let dim = 1 << (n - 1);
        self.rho = DMatrix::from_fn(dim, dim, |i, j| {
            self.rho[(insert(i, 0), insert(j, 0))] + self.rho[(insert(i, 1), insert(j, 1))]
        });
        self.qubits.remove(p);
    }

    /// Reorders the qubit list.
    fn reorder(&mut self, order: &[Qubit]) {
        let n = self.qubits.len();
        let pos = self.positions(order);
        let map = |i: usize| {
            (0..n).fold(0, |acc, k| (acc << 1) | ((i >> shift(n, pos[k])) & 1))
        };
        let dim = 1 << n;
        let mut out = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                out[(map(i), map(j))] = self.rho[(i, j)];
            }
        }
        self.rho = out;
        self.qubits = order.to_vec();
    }

    /// Applies a map given by its coefficients over Π: Q(σ) = Σ_τ Q[σ,τ] τ.
    /// Outputs stay on the first `outputs` qubits of `qs`.
    pub fn apply_superop(&mut self, entries: &[C64], qs: &[Qubit], outputs: usize) {
        let a = qs.len();
        let rest: Vec<Qubit> = self.qubits.iter().copied().filter(|q| !qs.contains(q)).collect();
        self.reorder(&[qs, rest.as_slice()].concat());
        let r = rest.len();
        let rdim = 1 << r;
        let odim = 1 << outputs;
        let mut out = DMatrix::zeros(odim * rdim, odim * rdim);
        for s in 0..1usize << (2 * a) {
            let (mut b, mut bp) = (0, 0);
            for i in 0..a {
                let k = (s >> (2 * (a - 1 - i))) & 3;
                b = (b << 1) | (k >> 1);
                bp = (bp << 1) | (k & 1);
            }
            for t in 0..1usize << (2 * outputs) {
                let coef = entries[(s << (2 * outputs)) | t];
                if coef == ZERO {
                    continue;
                }
                let (mut c, mut cp) = (0, 0);
                for i in 0..outputs {
                    let k = (t >> (2 * (outputs - 1 - i))) & 3;
                    c = (c << 1) | (k >> 1);
                    cp = (cp << 1) | (k & 1);
                }
                for x in 0..rdim {
                    for y in 0..rdim {
                        out[(c * rdim + x, cp * rdim + y)] += coef * self.rho[(b * rdim + x, bp * rdim + y)];
                    }
                }
            }
        }
        self.rho = out;
        self.qubits = [&qs[..outputs], rest.as_slice()].concat();
    }

    /// tr((⊗τ)ρ) over the live qubits.
    pub fn expectation(&self, tau: &MeasurementScenario) -> C64 {
        let n = self.qubits.len();
        let mut m = self.rho.clone();
        for (i, &q) in self.qubits.iter().enumerate() {
            m = apply_left(&m, &tau.get(q), &[i], n);
        }
        m.trace()
    }
}

/// Probability that τ is realized on C(|x⟩⟨x|), by dense evolution.
pub fn oracle_probability(c: &Circuit, x: &[u8], tau: &MeasurementScenario) -> Result<f64> {
    Ok(oracle_value(c, x, tau)?.re)
}

/// Unrounded complex value of [`oracle_probability`].
pub fn oracle_value(c: &Circuit, x: &[u8], tau: &MeasurementScenario) -> Result<C64> {
    if x.len() != c.n() {
        return Err(Error::Circuit(format!("input must be {} bits", c.n())));
    }
    let mut st = DenseState::basis(x)?;
    for g in c.gates() {
        match &g.kind {
            GateKind::Named(ng) => st.apply_unitary(&ng.matrix(), &g.qubits),
            GateKind::Unitary(u) => st.apply_unitary(u, &g.qubits),
            GateKind::Superop { outputs, entries, .. } => st.apply_superop(entries, &g.qubits, *outputs),
            GateKind::TraceOut => st.trace_out(g.qubits[0]),
        }
    }
    Ok(st.expectation(tau))
}

/// (1/√2^n) Σ_{V'⊆V} (−1)^{e(V')} |V'⟩; the smallest vertex id is the most
/// significant bit.
pub fn oracle_graph_state(g: &SimpleGraph) -> Result<DVector<C64>> {
    let ids: Vec<VertexId> = g.vertices().collect();
    let n = ids.len();
    if n > GRAPH_STATE_LIMIT {
        return Err(Error::OracleTooLarge {
            qubits: n,
            limit: GRAPH_STATE_LIMIT,
        });
    }
    let bitmask: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .map(|(u, v)| {
            let b = |x| 1usize << (n - 1 - ids.binary_search(&x).unwrap());
            (b(u), b(v))
        })
        .collect();
    let norm = (0.5f64).powf(n as f64 / 2.0);
    Ok(DVector::from_fn(1 << n, |s, _| {
        let e = bitmask.iter().filter(|(a, b)| s & a != 0 && s & b != 0).count();
        C64::new(if e % 2 == 0 { norm } else { -norm }, 0.0)
    }))
}

/// √M for a 2×2 positive semidefinite M.
pub fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re.max(0.0);
    let s = det.sqrt();
    let t = (m.trace().re + 2.0 * s).max(0.0).sqrt();
    if t == 0.0 {
        return DMatrix::zeros(2, 2);
    }
    (m + DMatrix::identity(2, 2) * C64::new(s, 0.0)) / C64::new(t, 0.0)
}

/// Pure state over qubits `0..n`, qubit 0 most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    pub amps: DVector<C64>,
    pub n: usize,
}

impl PureState {
    pub fn graph_state(g: &SimpleGraph) -> Result<Self> {
        Ok(Self {
            amps: oracle_graph_state(g)?,
            n: g.num_vertices(),
        })
    }

    pub fn apply(&mut self, op: &DMatrix<C64>, positions: &[usize]) {
        let col = DMatrix::from_column_slice(self.amps.len(), 1, self.amps.as_slice());
        let out = apply_left(&col, op, positions, self.n);
        self.amps = DVector::from_column_slice(out.as_slice());
    }

    /// ⟨ψ|P|ψ⟩ on one qubit.
    pub fn probability(&self, element: &DMatrix<C64>, pos: usize) -> f64 {
        let mut t = self.clone();
        t.apply(element, &[pos]);
        self.amps.dotc(&t.amps).re
    }

    /// Applies the Kraus operator √P and renormalizes; returns the outcome
    /// probability.
    pub fn measure(&mut self, element: &DMatrix<C64>, pos: usize) -> f64 {
        let p = self.probability(element, pos);
        self.apply(&psd_sqrt(element), &[pos]);
        if p > 0.0 {
            self.amps /= C64::new(p.sqrt(), 0.0);
        }
        p
    }

    /// |⟨a|b⟩|, which is 1 exactly when the states agree up to phase.
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.amps.dotc(&other.amps).norm()
    }
}

/// Basis projector pair {|0⟩⟨0|, |1⟩⟨1|}.
pub fn z_pair() -> [DMatrix<C64>; 2] {
    [projector(0), projector(1)]
}

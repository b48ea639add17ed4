//! Dimension-4 tensors over the operator basis Π and the contraction engine.
//!
//! Every index ranges over Π = {|0⟩⟨0|, |0⟩⟨1|, |1⟩⟨0|, |1⟩⟨1|}, encoded as
//! k = 2·b1 + b2 for |b1⟩⟨b2|. Entries are row-major with the first wire most
//! significant. Multi-qubit matrices are big-endian: the first wire is the
//! most significant bit of the row index.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::multigraph::MultiGraph;
use crate::planner::ContractionOrdering;

pub type WireId = usize;
pub type C64 = Complex64;

/// Largest tensor the engine builds by default: 4^14 entries.
pub const DEFAULT_BUDGET_RANK: usize = 14;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    wires: Vec<WireId>,
    data: Vec<C64>,
}

fn entries(rank: usize) -> usize {
    1usize << (2 * rank)
}

/// (b1, b2) of the basis element |b1⟩⟨b2| with code k.
fn pi_bits(k: usize) -> (usize, usize) {
    (k >> 1, k & 1)
}

/// Splits a multi-index over Π into the row and column bitstrings of the
/// corresponding ⊗σ_i.
fn split_index(index: usize, rank: usize) -> (usize, usize) {
    let (mut row, mut col) = (0, 0);
    for i in 0..rank {
        let k = (index >> (2 * (rank - 1 - i))) & 3;
        let (b1, b2) = pi_bits(k);
        row = (row << 1) | b1;
        col = (col << 1) | b2;
    }
    (row, col)
}

impl Tensor {
    pub fn new(wires: Vec<WireId>, data: Vec<C64>) -> Result<Self> {
        let distinct: BTreeSet<_> = wires.iter().collect();
        if distinct.len() != wires.len() {
            return Err(Error::Arity(format!("repeated wire in {wires:?}")));
        }
        if wires.len() > 30 || data.len() != entries(wires.len()) {
            return Err(Error::Arity(format!(
                "rank {} needs 4^{} entries, got {}",
                wires.len(),
                wires.len(),
                data.len()
            )));
        }
        Ok(Self { wires, data })
    }

    pub fn scalar(value: C64) -> Self {
        Self {
            wires: Vec::new(),
            data: vec![value],
        }
    }

    pub fn rank(&self) -> usize {
        self.wires.len()
    }

    pub fn wires(&self) -> &[WireId] {
        &self.wires
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Value of a rank-0 tensor.
    pub fn value(&self) -> Option<C64> {
        (self.rank() == 0).then(|| self.data[0])
    }

    /// Entry at one Π code per wire.
    pub fn get(&self, index: &[usize]) -> C64 {
        assert_eq!(index.len(), self.rank());
        self.data[index.iter().fold(0, |acc, &k| (acc << 2) | k)]
    }

    /// Same tensor with wires renamed position by position.
    pub fn relabeled(&self, wires: Vec<WireId>) -> Result<Self> {
        if wires.len() != self.rank() {
            return Err(Error::Arity("relabel changes the rank".into()));
        }
        Self::new(wires, self.data.clone())
    }

    /// Reorders indices so that the wires appear as in `order`.
    pub fn permuted(&self, order: &[WireId]) -> Result<Self> {
        let rank = self.rank();
        if order.len() != rank {
            return Err(Error::Arity(format!("permutation of {order:?}")));
        }
        let pos: Vec<usize> = order
            .iter()
            .map(|w| {
                self.wires
                    .iter()
                    .position(|x| x == w)
                    .ok_or(Error::UnknownWire(*w))
            })
            .collect::<Result<_>>()?;
        if pos.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        // stride in the source of each destination axis
        let strides: Vec<usize> = pos.iter().map(|&p| 1 << (2 * (rank - 1 - p))).collect();
        let mut data = vec![ZERO; self.data.len()];
        let mut counter = vec![0usize; rank];
        let mut src = 0usize;
        for slot in data.iter_mut() {
            *slot = self.data[src];
            for axis in (0..rank).rev() {
                counter[axis] += 1;
                src += strides[axis];
                if counter[axis] < 4 {
                    break;
                }
                counter[axis] = 0;
                src -= 4 * strides[axis];
            }
        }
        Ok(Self {
            wires: order.to_vec(),
            data,
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            wires: self.wires.clone(),
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Option<f64> {
        let other = other.permuted(&self.wires).ok()?;
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        )
    }
}

/// C = A·B for row-major A (m×k) and B (k×n), skipping zero entries of A.
fn matmul(a: &[C64], b: &[C64], m: usize, k: usize, n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; m * n];
    let row = |(i, out_row): (usize, &mut [C64])| {
        for (p, &x) in a[i * k..(i + 1) * k].iter().enumerate() {
            if x == ZERO {
                continue;
            }
            for (o, &y) in out_row.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += x * y;
            }
        }
    };
    if m * k * n >= 1 << 16 && m > 1 {
        out.par_chunks_mut(n.max(1)).enumerate().for_each(row);
    } else {
        out.chunks_mut(n.max(1)).enumerate().for_each(row);
    }
    out
}

/// Sums over every wire the two tensors share. Result wires: the free wires
/// of `g` in order, then those of `h`.
pub fn contract_pair(g: &Tensor, h: &Tensor) -> Result<Tensor> {
    let shared: Vec<WireId> = g.wires.iter().copied().filter(|w| h.wires.contains(w)).collect();
    if shared.is_empty() {
        return Err(Error::NoSharedWire);
    }
    contract_over(g, h, &shared)
}

/// Tensor product; the two tensors must share no wire.
pub fn outer(g: &Tensor, h: &Tensor) -> Result<Tensor> {
    if g.wires.iter().any(|w| h.wires.contains(w)) {
        return Err(Error::Arity("outer product of tensors sharing a wire".into()));
    }
    contract_over(g, h, &[])
}

fn contract_over(g: &Tensor, h: &Tensor, shared: &[WireId]) -> Result<Tensor> {
    let g_free: Vec<WireId> = g.wires.iter().copied().filter(|w| !shared.contains(w)).collect();
    let h_free: Vec<WireId> = h.wires.iter().copied().filter(|w| !shared.contains(w)).collect();
    let gp = g.permuted(&[g_free.as_slice(), shared].concat())?;
    let hp = h.permuted(&[shared, h_free.as_slice()].concat())?;
    let data = matmul(
        &gp.data,
        &hp.data,
        entries(g_free.len()),
        entries(shared.len()),
        entries(h_free.len()),
    );
    Tensor::new([g_free, h_free].concat(), data)
}

fn check_square(m: &DMatrix<C64>, qubits: usize, what: &str) -> Result<()> {
    let dim = 1 << qubits;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::Arity(format!(
            "{what} is {}x{}, expected {dim}x{dim} for {qubits} wires",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Entries tr(ρ·(⊗σ_i)†) = ρ[row(σ)][col(σ)].
pub fn density_tensor(rho: &DMatrix<C64>, wires: Vec<WireId>) -> Result<Tensor> {
    let a = wires.len();
    check_square(rho, a, "density matrix")?;
    let data = (0..entries(a))
        .map(|i| {
            let (r, c) = split_index(i, a);
            rho[(r, c)]
        })
        .collect();
    Tensor::new(wires, data)
}

/// Inverse of [`density_tensor`]: ρ = Σ_σ ρ_σ σ.
pub fn tensor_to_matrix(t: &Tensor) -> DMatrix<C64> {
    let a = t.rank();
    let mut m = DMatrix::zeros(1 << a, 1 << a);
    for (i, &x) in t.data.iter().enumerate() {
        let (r, c) = split_index(i, a);
        m[(r, c)] = x;
    }
    m
}

/// Superoperator ρ ↦ UρU†. Inputs first, then outputs; entry for σ = |b⟩⟨b'|
/// and τ = |c⟩⟨c'| is U[c][b]·conj(U[c'][b']).
pub fn unitary_tensor(u: &DMatrix<C64>, inputs: &[WireId], outputs: &[WireId]) -> Result<Tensor> {
    let k = inputs.len();
    if outputs.len() != k {
        return Err(Error::Arity("unitary needs as many outputs as inputs".into()));
    }
    check_square(u, k, "unitary")?;
    let data = (0..entries(2 * k))
        .map(|i| {
            let (b, bp) = split_index(i >> (2 * k), k);
            let (c, cp) = split_index(i & (entries(k) - 1), k);
            u[(c, b)] * u[(cp, bp)].conj()
        })
        .collect();
    Tensor::new([inputs, outputs].concat(), data)
}

/// Arbitrary superoperator given directly by its tensor entries over Π
/// (a inputs then b outputs). Realizability is not checked.
pub fn superop_tensor(entries_pi: Vec<C64>, inputs: &[WireId], outputs: &[WireId]) -> Result<Tensor> {
    Tensor::new([inputs, outputs].concat(), entries_pi)
}

/// Q(|x⟩⟨y|) = ⟨x|y⟩ on one wire: (1, 0, 0, 1).
pub fn trace_out_tensor(wire: WireId) -> Tensor {
    Tensor {
        wires: vec![wire],
        data: vec![ONE, ZERO, ZERO, ONE],
    }
}

/// Single-qubit POVM element M: entries tr(Mσ) = M[b'][b] for σ = |b⟩⟨b'|.
pub fn povm_tensor(m: &DMatrix<C64>, wire: WireId) -> Result<Tensor> {
    check_square(m, 1, "POVM element")?;
    let data = (0..4)
        .map(|k| {
            let (b, bp) = pi_bits(k);
            m[(bp, b)]
        })
        .collect();
    Tensor::new(vec![wire], data)
}

/// diag(1, 1, 1, −1).
pub fn cz_matrix() -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE]))
}

/// Tensors joined by shared wire ids; a wire may appear in one or two tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorNetwork {
    pub tensors: Vec<Tensor>,
}

impl TensorNetwork {
    pub fn new(tensors: Vec<Tensor>) -> Result<Self> {
        let net = Self { tensors };
        net.wire_ends()?;
        Ok(net)
    }

    /// For every wire, the tensors using it.
    pub fn wire_ends(&self) -> Result<BTreeMap<WireId, Vec<usize>>> {
        let mut ends: BTreeMap<WireId, Vec<usize>> = BTreeMap::new();
        for (i, t) in self.tensors.iter().enumerate() {
            for &w in &t.wires {
                let list = ends.entry(w).or_default();
                list.push(i);
                if list.len() > 2 {
                    return Err(Error::WireOverused(w));
                }
            }
        }
        Ok(ends)
    }

    pub fn open_wires(&self) -> Vec<WireId> {
        self.wire_ends()
            .unwrap_or_default()
            .into_iter()
            .filter(|(_, t)| t.len() == 1)
            .map(|(w, _)| w)
            .collect()
    }

    /// One vertex per tensor (its index), one edge per joining wire (its id).
    pub fn graph(&self) -> Result<MultiGraph> {
        let mut g = MultiGraph::with_vertices(self.tensors.len());
        for (w, t) in self.wire_ends()? {
            if let [a, b] = t[..] {
                g.insert_edge(w, a, b)?;
            }
        }
        Ok(g)
    }
}

#[derive(Clone, Debug)]
pub struct Contracted {
    pub tensor: Tensor,
    /// Largest rank among the tensors built by pair contractions.
    pub max_rank: usize,
    pub steps: usize,
}

/// Contracts joining wires in the order given. Reaching a wire whose two
/// tensors are still separate contracts all wires those tensors share;
/// wires already summed this way are skipped. Leftover components are
/// combined by tensor product, keeping their open wires.
pub fn contract_network(
    net: &TensorNetwork,
    pi: &ContractionOrdering,
    budget_rank: usize,
) -> Result<Contracted> {
    let ends = net.wire_ends()?;
    let internal: BTreeSet<WireId> = ends
        .iter()
        .filter(|(_, t)| t.len() == 2)
        .map(|(&w, _)| w)
        .collect();
    let listed: BTreeSet<WireId> = pi.0.iter().copied().collect();
    if let Some(&w) = pi.0.iter().find(|w| !internal.contains(w)) {
        return Err(Error::UnknownWire(w));
    }
    if let Some(&w) = internal.iter().find(|w| !listed.contains(w)) {
        return Err(Error::IncompleteOrdering(w));
    }

    let mut owner: Vec<usize> = (0..net.tensors.len()).collect();
    fn find(owner: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while owner[r] != r {
            r = owner[r];
        }
        owner[x] = r;
        r
    }
    let mut slots: Vec<Option<Tensor>> = net.tensors.iter().cloned().map(Some).collect();
    let (mut max_rank, mut steps) = (0, 0);
    for &w in &pi.0 {
        let (a, b) = (find(&mut owner, ends[&w][0]), find(&mut owner, ends[&w][1]));
        if a == b {
            continue;
        }
        let (ta, tb) = (slots[a].take().unwrap(), slots[b].take().unwrap());
        let shared = ta.wires.iter().filter(|x| tb.wires.contains(x)).count();
        let rank = ta.rank() + tb.rank() - 2 * shared;
        if rank > budget_rank {
            return Err(Error::MemoryBudget {
                step: steps + 1,
                rank,
                budget_rank,
            });
        }
        let t = contract_pair(&ta, &tb)?;
        steps += 1;
        max_rank = max_rank.max(t.rank());
        let (keep, gone) = (a.min(b), a.max(b));
        owner[gone] = keep;
        slots[keep] = Some(t);
    }
    let mut rest = slots.into_iter().flatten();
    let mut tensor = rest.next().unwrap_or_else(|| Tensor::scalar(ONE));
    for t in rest {
        let rank = tensor.rank() + t.rank();
        if rank > budget_rank {
            return Err(Error::MemoryBudget {
                step: steps + 1,
                rank,
                budget_rank,
            });
        }
        tensor = outer(&tensor, &t)?;
        steps += 1;
    }
    Ok(Contracted {
        tensor,
        max_rank,
        steps,
    })
}

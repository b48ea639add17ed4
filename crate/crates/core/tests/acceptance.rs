//! One pass/fail line per acceptance criterion.
//!
//! Criteria listed in `EXPECTED_FAIL` are known to be unattainable as stated
//! (see README). They still run in full and print their real verdict; the
//! process only exits non-zero when a verdict differs from that list.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twqsim::circuit::{
    projector, simulate_probability, simulate_with_ordering, Circuit, MeasurementScenario, SimOptions,
};
use twqsim::multigraph::{line_graph, lps_expander, simplify, EdgeId, MultiGraph, SimpleGraph, SimplifyMode};
use twqsim::oneway::{
    branch_distribution, dense_branch_distribution, expand_to_degree3, full_branch_distribution,
    simulate_oneway_full, simulate_oneway_randomized, split_tensor_u, split_tensor_v, Distribution,
    GraphStateSimulator, Measurement, ProgramFile, ProgramStep,
};
use twqsim::oracle::{oracle_probability, PureState};
use twqsim::planner::{
    cc_of_ordering, decomposition_to_contraction_ordering, exact_cc, plan_contraction,
    plan_from_decomposition, random_ordering, Strategy,
};
use twqsim::random::{
    random_basis_scenario, random_circuit, random_connected_graph, random_depth2_circuit, random_graph,
    random_input, random_nearest_neighbor_circuit,
};
use twqsim::tensor::{contract_pair, cz_matrix, unitary_tensor, C64, DEFAULT_BUDGET_RANK};
use twqsim::treewidth::{
    exact_treewidth, heuristic_order, lift_decomposition, local_interaction_path_decomposition,
    ordering_to_decomposition, validate_decomposition, HeuristicStrategy, TreeDecomposition,
    MAX_EXACT_VERTICES,
};

const EXPECTED_FAIL: [usize; 2] = [6, 10];

type Criterion<'a> = (usize, &'static str, Box<dyn FnOnce(&mut ChaCha8Rng) -> Verdict + 'a>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn max_gap(a: &Distribution, b: &Distribution) -> f64 {
    let keys: BTreeSet<_> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .fold(0.0, f64::max)
}

/// Contracts `order` one edge at a time on a plain edge list and reports the
/// largest number of edges touching a merged vertex, loops counted once.
fn cc_by_hand(g: &MultiGraph, order: &[EdgeId]) -> Option<usize> {
    let mut ends: BTreeMap<EdgeId, (usize, usize)> = g.edges().map(|(e, u, v)| (e, (u, v))).collect();
    if order.len() != ends.len() || order.iter().collect::<BTreeSet<_>>().len() != order.len() {
        return None;
    }
    let mut class: BTreeMap<usize, usize> = g.vertices().map(|v| (v, v)).collect();
    let mut worst = 0;
    for e in order {
        let (u, v) = ends.remove(e)?;
        let (a, b) = (class[&u], class[&v]);
        for x in class.values_mut() {
            if *x == b {
                *x = a;
            }
        }
        let deg = ends.values().filter(|(x, y)| class[x] == a || class[y] == a).count();
        worst = worst.max(deg);
    }
    Some(worst)
}

// ---- 1, 2 ----

fn circuit_cases(rng: &mut ChaCha8Rng, count: usize) -> Vec<(Circuit, Vec<u8>, MeasurementScenario)> {
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=6);
            let t = rng.gen_range(0..=15);
            let c = random_circuit(rng, n, t);
            let x = random_input(rng, n);
            let tau = random_basis_scenario(rng, &c.output_qubits(), 0.3);
            (c, x, tau)
        })
        .collect()
}

fn criterion_1(cases: &[(Circuit, Vec<u8>, MeasurementScenario)]) -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut errors = 0;
    for (c, x, tau) in cases {
        match (simulate_probability(c, x, tau, SimOptions::default()), oracle_probability(c, x, tau)) {
            (Ok(s), Ok(o)) => worst = worst.max((s.probability - o).abs()),
            _ => errors += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        errors == 0 && worst <= 1e-9 && secs <= 60.0,
        format!("{} circuits, max |Δp| = {worst:.2e}, errors {errors}, {secs:.2} s", cases.len()),
    )
}

fn criterion_2(cases: &[(Circuit, Vec<u8>, MeasurementScenario)], rng: &mut ChaCha8Rng) -> Verdict {
    let mut worst = 0.0f64;
    let mut orderings = 0;
    let mut failures = 0;
    for (c, x, tau) in cases.iter().filter(|(c, _, _)| !c.gates().is_empty()).take(20) {
        let g = c.graph();
        let mut values = Vec::new();
        let mut tries = 0;
        while values.len() < 10 && tries < 100 {
            tries += 1;
            let Some(pi) = random_ordering(&g, rng, DEFAULT_BUDGET_RANK) else {
                continue;
            };
            match simulate_with_ordering(c, x, tau, &pi, DEFAULT_BUDGET_RANK) {
                Ok(s) => values.push(s.raw.re),
                Err(_) => failures += 1,
            }
        }
        if values.len() < 10 {
            failures += 1;
        }
        orderings += values.len();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(hi - lo);
    }
    verdict(
        failures == 0 && worst <= 1e-12,
        format!("{orderings} orderings over 20 circuits, max spread {worst:.2e}, failures {failures}"),
    )
}

// ---- 3 ----

/// Minimum induced width over every elimination order, prefixes shared.
fn min_induced_width(adj: &[u16], alive: u16, so_far: usize, best: &mut usize) {
    if alive == 0 {
        *best = (*best).min(so_far);
        return;
    }
    for v in 0..adj.len() {
        if alive & (1 << v) == 0 {
            continue;
        }
        let nb = adj[v] & alive & !(1 << v);
        let width = so_far.max(nb.count_ones() as usize);
        if width >= *best {
            continue;
        }
        let mut next = adj.to_vec();
        for u in 0..adj.len() {
            if nb & (1 << u) != 0 {
                next[u] |= nb & !(1 << u);
            }
        }
        min_induced_width(&next, alive & !(1 << v), width, best);
    }
}

fn brute_treewidth(g: &SimpleGraph) -> usize {
    let n = g.num_vertices();
    let mut adj = vec![0u16; n];
    for (u, v) in g.edges() {
        adj[u] |= 1 << v;
        adj[v] |= 1 << u;
    }
    let mut best = n;
    min_induced_width(&adj, ((1u32 << n) - 1) as u16, 0, &mut best);
    best
}

/// cc by dynamic programming over the set of already-contracted edges.
fn brute_cc(g: &SimpleGraph) -> usize {
    let edges = g.edges();
    let m = edges.len();
    let n = g.num_vertices();
    let mut inc = vec![0u32; n];
    for (i, &(u, v)) in edges.iter().enumerate() {
        inc[u] |= 1 << i;
        inc[v] |= 1 << i;
    }
    let cost = |done: u32, e: usize| -> usize {
        let with = done | (1 << e);
        let mut comp = (1u32 << edges[e].0) | (1 << edges[e].1);
        loop {
            let mut grown = comp;
            for v in 0..n {
                if comp & (1 << v) != 0 {
                    let mut es = inc[v] & with;
                    while es != 0 {
                        let i = es.trailing_zeros() as usize;
                        es &= es - 1;
                        grown |= (1 << edges[i].0) | (1 << edges[i].1);
                    }
                }
            }
            if grown == comp {
                break;
            }
            comp = grown;
        }
        let touching = (0..n)
            .filter(|&v| comp & (1 << v) != 0)
            .fold(0u32, |acc, v| acc | inc[v]);
        (touching & !with).count_ones() as usize
    };
    let mut best = vec![usize::MAX; 1 << m];
    best[0] = 0;
    for set in 1u32..(1 << m) {
        let mut rest = set;
        while rest != 0 {
            let e = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = set & !(1 << e);
            let v = best[prev as usize].max(cost(prev, e));
            if v < best[set as usize] {
                best[set as usize] = v;
            }
        }
    }
    best[(1 << m) - 1]
}

fn criterion_3(rng: &mut ChaCha8Rng) -> Verdict {
    const DP_EDGE_CAP: usize = 16;
    let mut bad = Vec::new();
    let (mut dp_checked, mut smoothings) = (0, 0);
    for i in 0..500 {
        let p = rng.gen_range(0.05..0.6);
        let g = random_connected_graph(rng, 8, p);
        let tw = exact_treewidth(&g, MAX_EXACT_VERTICES).unwrap().width;
        if tw != brute_treewidth(&g) {
            bad.push(format!("graph {i}: exact tw {tw} vs enumeration {}", brute_treewidth(&g)));
        }
        let mg = g.to_multigraph();
        let cc = exact_cc(&mg, MAX_EXACT_VERTICES).unwrap();
        if g.num_edges() <= DP_EDGE_CAP {
            dp_checked += 1;
            let dp = brute_cc(&g);
            if cc != dp {
                bad.push(format!("graph {i}: exact_cc {cc} vs edge-subset DP {dp}"));
            }
        }
        let delta = g.max_degree();
        if 2 * cc + 1 < tw || cc + 1 > delta * (tw + 1) {
            bad.push(format!("graph {i}: cc {cc}, tw {tw}, Δ {delta} break the bounds"));
        }
        for w in g.vertices().collect::<Vec<_>>() {
            let nb: Vec<_> = g.neighbors(w).collect();
            if nb.len() != 2 || g.has_edge(nb[0], nb[1]) {
                continue;
            }
            let mut h = g.clone();
            h.remove_vertex(w);
            h.add_edge(nb[0], nb[1]).unwrap();
            let relabel: BTreeMap<usize, usize> = h.vertices().enumerate().map(|(i, v)| (v, i)).collect();
            let h = SimpleGraph::from_edges(
                relabel.len(),
                &h.edges().iter().map(|(u, v)| (relabel[u], relabel[v])).collect::<Vec<_>>(),
            )
            .unwrap();
            smoothings += 1;
            if brute_treewidth(&h) != tw {
                bad.push(format!("graph {i}: smoothing vertex {w} changes tw"));
            }
        }
        let (s, _) = simplify(&mg, SimplifyMode::Simple);
        let ts = exact_treewidth(&s.to_simple(), MAX_EXACT_VERTICES).unwrap().width;
        if ts != tw {
            bad.push(format!("graph {i}: simplified tw {ts} vs {tw}"));
        }
    }
    verdict(
        bad.is_empty(),
        format!(
            "500 connected 8-vertex graphs, {dp_checked} with ≤ {DP_EDGE_CAP} edges against the cc DP, {smoothings} smoothings; {}",
            bad.first().map_or("no mismatches".to_string(), |b| format!("{} mismatches, first: {b}", bad.len()))
        ),
    )
}

// ---- 4, 5 ----

fn random_multigraph(rng: &mut ChaCha8Rng) -> MultiGraph {
    let n = rng.gen_range(1..=7);
    let m = rng.gen_range(1..=12);
    let mut g = MultiGraph::with_vertices(n);
    for _ in 0..m {
        g.add_edge(rng.gen_range(0..n), rng.gen_range(0..n)).unwrap();
    }
    g
}

fn criterion_4(rng: &mut ChaCha8Rng) -> Verdict {
    let mut bad = Vec::new();
    let (mut loops, mut parallel) = (0, 0);
    for i in 0..200 {
        let g = random_multigraph(rng);
        loops += g.loop_count();
        parallel += g.num_edges() - g.to_simple().num_edges() - g.loop_count();
        let lg = line_graph(&g);
        let strategy = if i % 2 == 0 { HeuristicStrategy::MinFill } else { HeuristicStrategy::MinDegree };
        let order = heuristic_order(&lg, strategy, rng.gen());
        let td = ordering_to_decomposition(&lg, &order).unwrap();
        let pi = match decomposition_to_contraction_ordering(&td, &g) {
            Ok(pi) => pi,
            Err(e) => {
                bad.push(format!("pair {i}: {e}"));
                continue;
            }
        };
        match cc_by_hand(&g, pi.as_slice()) {
            None => bad.push(format!("pair {i}: output is not an ordering of E")),
            Some(cc) if cc > td.width() => bad.push(format!("pair {i}: cc {cc} > width {}", td.width())),
            Some(cc) if cc != cc_of_ordering(&g, &pi).unwrap() => {
                bad.push(format!("pair {i}: library cc disagrees with {cc}"))
            }
            Some(_) => {}
        }
    }
    verdict(
        bad.is_empty(),
        format!(
            "200 multigraphs ({loops} loops, {parallel} parallel edges); {}",
            bad.first().cloned().unwrap_or_else(|| "cc ≤ width everywhere".into())
        ),
    )
}

fn criterion_5(rng: &mut ChaCha8Rng) -> Verdict {
    let (mut worst, mut unsimplified) = (0, 0);
    let mut bad = Vec::new();
    for i in 0..50 {
        let n = rng.gen_range(2..=10);
        let c = random_depth2_circuit(rng, n);
        let g = c.graph();
        unsimplified = unsimplified.max(plan_contraction(&g, Strategy::MinFill, 0).unwrap().predicted_cc);
        let (h, _) = simplify(&g, SimplifyMode::Multi);
        let plan = plan_contraction(&h, Strategy::MinFill, 0).unwrap();
        match cc_by_hand(&h, plan.ordering.as_slice()) {
            Some(cc) if cc == plan.predicted_cc => worst = worst.max(cc),
            other => bad.push(format!("circuit {i}: hand cc {other:?} vs predicted {}", plan.predicted_cc)),
        }
    }
    verdict(
        bad.is_empty() && worst <= 2,
        format!(
            "50 depth-2 circuits, max cc {worst} (before simplification {unsimplified}){}",
            bad.first().map_or(String::new(), |b| format!("; {b}"))
        ),
    )
}

// ---- 6 ----

fn criterion_6(rng: &mut ChaCha8Rng) -> Verdict {
    let mut valid = 0;
    let mut within = 0;
    let mut exact_within = 0;
    let mut cut_paths_valid = 0;
    let mut worst_sim = 0.0f64;
    let mut worst_excess = i64::MIN;
    let mut errors = Vec::new();
    for i in 0..20 {
        let n = rng.gen_range(3..=8);
        let depth = rng.gen_range(1..=4);
        let c = random_nearest_neighbor_circuit(rng, n, depth);
        let lp = local_interaction_path_decomposition(&c).unwrap();
        let td = &lp.decomposition;
        if td.is_path() && validate_decomposition(td, &lp.graph).is_empty() {
            valid += 1;
        }
        let bound = lp.r as i64 - 1;
        let excess = td.width() as i64 - bound;
        worst_excess = worst_excess.max(excess);
        if excess <= 0 {
            within += 1;
        }
        let simple = lp.graph.to_simple();
        if simple.num_vertices() <= MAX_EXACT_VERTICES
            && exact_treewidth(&simple, MAX_EXACT_VERTICES).unwrap().width as i64 <= bound
        {
            exact_within += 1;
        }
        let cut_path = TreeDecomposition {
            bags: lp.cut_bags.clone(),
            edges: (1..lp.cut_bags.len()).map(|j| (j - 1, j)).collect(),
        };
        if validate_decomposition(&cut_path, &lp.graph).is_empty() {
            cut_paths_valid += 1;
        }

        let g = c.graph();
        let lifted = lift_decomposition(td, &lp.removals);
        if !validate_decomposition(&lifted, &g).is_empty() {
            errors.push(format!("circuit {i}: lifted decomposition invalid for G_C"));
            continue;
        }
        let plan = plan_from_decomposition(&g, &lifted).unwrap();
        let x = random_input(rng, n);
        let tau = random_basis_scenario(rng, &c.output_qubits(), 0.3);
        let budget = DEFAULT_BUDGET_RANK.max(plan.predicted_rank);
        match simulate_with_ordering(&c, &x, &tau, &plan.ordering, budget) {
            Ok(s) => worst_sim = worst_sim.max((s.probability - oracle_probability(&c, &x, &tau).unwrap()).abs()),
            Err(e) => errors.push(format!("circuit {i}: {e}")),
        }
    }
    verdict(
        valid == 20 && within == 20 && errors.is_empty() && worst_sim <= 1e-9,
        format!(
            "valid paths {valid}/20, width ≤ r−1 {within}/20 (worst excess {worst_excess:+}), \
             exact tw ≤ r−1 {exact_within}/20, cut-bag paths valid {cut_paths_valid}/20, \
             max |Δp| {worst_sim:.2e}{}",
            errors.first().map_or(String::new(), |e| format!("; {e}"))
        ),
    )
}

// ---- 7 ----

/// Amplitudes (−1)^{e(S)} / √2ⁿ, qubit 0 most significant.
fn amplitudes(n: usize, edges: &[(usize, usize)]) -> DVector<C64> {
    let norm = 0.5f64.powf(n as f64 / 2.0);
    DVector::from_fn(1 << n, |s, _| {
        let bit = |v: usize| (s >> (n - 1 - v)) & 1 == 1;
        let e = edges.iter().filter(|&&(u, v)| bit(u) && bit(v)).count();
        c(if e % 2 == 0 { norm } else { -norm })
    })
}

/// ⟨ψ| ⊗_q M_q |ψ⟩.
fn expectation(psi: &DVector<C64>, n: usize, tau: &MeasurementScenario) -> f64 {
    let mut phi = psi.clone();
    for (&q, m) in tau.elements() {
        let shift = n - 1 - q;
        let mut out = DVector::zeros(phi.len());
        for s in 0..phi.len() {
            let b = (s >> shift) & 1;
            for b2 in 0..2 {
                let t = (s & !(1 << shift)) | (b2 << shift);
                out[s] += m[(b, b2)] * phi[t];
            }
        }
        phi = out;
    }
    psi.dotc(&phi).re
}

/// a|ψ⟩⟨ψ| + b|ψ⊥⟩⟨ψ⊥| with random ψ and a, b ∈ [0, 1].
fn random_element(rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let psi = DVector::from_vec(vec![c((theta / 2.0).cos()), C64::from_polar((theta / 2.0).sin(), phi)]);
    let perp = DVector::from_vec(vec![-psi[1].conj(), psi[0].conj()]);
    let (a, b): (f64, f64) = (rng.gen(), rng.gen());
    &psi * psi.adjoint() * c(a) + &perp * perp.adjoint() * c(b)
}

fn criterion_7(rng: &mut ChaCha8Rng) -> Verdict {
    let mut worst = 0.0f64;
    let mut graphs = 0;
    let mut errors = 0;
    for n in 1..=5usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<_> = (0..pairs.len()).filter(|i| mask & (1 << i) != 0).map(|i| pairs[i]).collect();
            let g = SimpleGraph::from_edges(n, &edges).unwrap();
            let psi = amplitudes(n, &edges);
            let Ok(sim) = GraphStateSimulator::new(&g, SimOptions::default()) else {
                errors += 1;
                continue;
            };
            graphs += 1;
            for _ in 0..5 {
                let mut tau = MeasurementScenario::new();
                for q in 0..n {
                    match rng.gen_range(0..4) {
                        0 => {}
                        1 => tau.set(q, projector(rng.gen_range(0..2))).unwrap(),
                        _ => tau.set(q, random_element(rng)).unwrap(),
                    }
                }
                match sim.probability(&tau) {
                    Ok(p) => worst = worst.max((p - expectation(&psi, n, &tau)).abs()),
                    Err(_) => errors += 1,
                }
            }
        }
    }
    let gu = split_tensor_u(0, 11, 10, 1).unwrap();
    let gv = split_tensor_v(10, 2, 11, 3).unwrap();
    let joined = contract_pair(&gu, &gv).unwrap().permuted(&[0, 2, 1, 3]).unwrap();
    let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(1.0), c(1.0), c(-1.0)]));
    let cz = unitary_tensor(&diag, &[0, 2], &[1, 3]).unwrap();
    let split_diff = joined.max_abs_diff(&cz);
    verdict(
        errors == 0 && worst <= 1e-9 && split_diff == Some(0.0) && cz_matrix() == diag,
        format!("{graphs} graphs × 5 scenarios, max |Δp| {worst:.2e}, split pair vs Λ(σ_z) diff {split_diff:?}"),
    )
}

// ---- 8, 9 ----

/// (I + cos θ σ_x + sin θ σ_y) / 2 and its complement.
fn equatorial(q: usize, theta: f64) -> Measurement {
    let half = c(0.5);
    let off = C64::from_polar(0.5, -theta);
    let p0 = DMatrix::from_row_slice(2, 2, &[half, off, off.conj(), half]);
    let p1 = DMatrix::identity(2, 2) - &p0;
    Measurement::new(q, p0, p1).unwrap()
}

fn random_basis(rng: &mut ChaCha8Rng, q: usize) -> Measurement {
    match rng.gen_range(0..3) {
        0 => Measurement::z(q),
        1 => Measurement::x(q),
        _ => equatorial(q, rng.gen_range(0.0..std::f64::consts::TAU)),
    }
}

/// `slots` measurements on distinct qubits. A slot is either one
/// unconditional line or a pair of lines guarded on complementary outcomes of
/// an earlier slot, so slot k is always the k-th measurement performed.
fn random_program(rng: &mut ChaCha8Rng, n: usize, slots: usize) -> ProgramFile {
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(rng);
    let mut steps = Vec::new();
    for (j, &q) in qubits.iter().take(slots).enumerate() {
        if j > 0 && rng.gen_bool(0.6) {
            let k = rng.gen_range(1..=j);
            for b in 0..2 {
                steps.push(ProgramStep {
                    measurement: random_basis(rng, q),
                    guards: vec![(k, b)],
                });
            }
        } else {
            steps.push(ProgramStep {
                measurement: random_basis(rng, q),
                guards: vec![],
            });
        }
    }
    ProgramFile::new(steps)
}

fn graph(n: usize, edges: &[(usize, usize)]) -> SimpleGraph {
    SimpleGraph::from_edges(n, edges).unwrap()
}

/// Dense check of the two-measurement gadget that merges v′ into v through
/// w, followed by the byproduct corrections.
fn gadget_check(rng: &mut ChaCha8Rng) -> Result<(usize, f64, f64), String> {
    let mut checked = 0;
    let (mut worst_p, mut worst_overlap) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let m = rng.gen_range(2..=4);
        let mut target = random_graph(rng, m, 0.5);
        if target.degree(0) == 0 {
            target.add_edge(0, 1).unwrap();
        }
        let (w, vp) = (m, m + 1);
        let mut stay = Vec::new();
        let mut edges: Vec<(usize, usize)> = target.edges().into_iter().filter(|&(a, _)| a != 0).collect();
        for a in target.neighbors(0) {
            if rng.gen_bool(0.5) {
                stay.push(a);
                edges.push((0, a));
            } else {
                edges.push((a, vp));
            }
        }
        edges.extend([(0, w), (w, vp)]);
        let g = graph(m + 2, &edges);

        let fixed = ProgramFile::fixed(vec![Measurement::x(w), Measurement::x(vp)]);
        let contracted = branch_distribution(&g, &fixed, SimOptions::default()).map_err(|e| e.to_string())?;
        let pair = Measurement::x(0).pair;
        let x = twqsim::circuit::NamedGate::X.matrix();
        let z = twqsim::circuit::NamedGate::Z.matrix();
        let plus_minus = |b: usize| DVector::from_vec(vec![c(0.5f64.sqrt()), c(if b == 0 { 1.0 } else { -1.0 } * 0.5f64.sqrt())]);
        for bw in 0..2 {
            for bv in 0..2 {
                let mut psi = PureState::graph_state(&g).map_err(|e| e.to_string())?;
                let p = psi.measure(&pair[bw], w) * psi.measure(&pair[bv], vp);
                worst_p = worst_p.max((p - 0.25).abs());
                let q = contracted.distribution.get(&vec![bw as u8, bv as u8]).copied().unwrap_or(0.0);
                worst_p = worst_p.max((q - 0.25).abs());
                if bw == 1 {
                    psi.apply(&x, &[0]);
                    for &a in &stay {
                        psi.apply(&z, &[a]);
                    }
                }
                if bv == 1 {
                    psi.apply(&z, &[0]);
                }
                let tail = plus_minus(bw).kronecker(&plus_minus(bv));
                let want = PureState {
                    amps: amplitudes(m, &target.edges()).kronecker(&tail),
                    n: m + 2,
                };
                worst_overlap = worst_overlap.max((psi.overlap(&want) - 1.0).abs());
            }
        }
        checked += 1;
    }
    Ok((checked, worst_p, worst_overlap))
}

fn criterion_8(rng: &mut ChaCha8Rng) -> Verdict {
    let path6 = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
    let grid = graph(6, &[(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)]);
    let grid4 = graph(4, &[(0, 1), (2, 3), (0, 2), (1, 3)]);
    let cycle = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
    let star = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
    let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    let tadpole = graph(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]);
    let path3 = graph(3, &[(0, 1), (1, 2)]);
    let mut graphs = vec![path6, grid, grid4, cycle, star, k4, tadpole, path3];
    graphs.push(random_connected_graph(rng, 6, 0.4));
    graphs.push(random_connected_graph(rng, 5, 0.5));

    let (mut worst, mut gap, mut sample_gap) = (0.0f64, 0.0f64, 0.0f64);
    let mut errors = Vec::new();
    let mut branches = 0;
    for (i, g) in graphs.iter().enumerate() {
        let n = g.num_vertices();
        let slots = rng.gen_range(2..=n);
        let prog = random_program(rng, n, slots);
        let (tree, dense) = match (branch_distribution(g, &prog, SimOptions::default()), dense_branch_distribution(g, &prog)) {
            (Ok(t), Ok(d)) => (t, d),
            (a, b) => {
                errors.push(format!("graph {i}: {:?} / {:?}", a.err(), b.err()));
                continue;
            }
        };
        branches += tree.distribution.len();
        worst = worst.max(max_gap(&tree.distribution, &dense));
        gap = gap.max(tree.max_conservation_gap);
        for seed in 0..5 {
            match simulate_oneway_randomized(g, &prog, seed, SimOptions::default()) {
                Ok(run) => {
                    let want = dense.get(&run.outcomes).copied().unwrap_or(0.0);
                    sample_gap = sample_gap.max((run.transcript.probability() - want).abs());
                }
                Err(e) => errors.push(format!("graph {i} seed {seed}: {e}")),
            }
        }
    }
    let gadget = gadget_check(rng);
    let (gadgets, gp, go) = gadget.clone().unwrap_or((0, f64::NAN, f64::NAN));
    verdict(
        errors.is_empty() && gadget.is_ok() && worst <= 1e-9 && gap <= 1e-9 && sample_gap <= 1e-9 && gp <= 1e-9 && go <= 1e-9,
        format!(
            "10 programs, {branches} branches, max |Δp| {worst:.2e}, conservation {gap:.2e}, sampled runs {sample_gap:.2e}; \
             {gadgets} gadgets: max |p − 1/4| {gp:.2e}, max |1 − overlap| {go:.2e}{}",
            errors.first().map_or(String::new(), |e| format!("; {e}"))
        ),
    )
}

fn criterion_9(rng: &mut ChaCha8Rng) -> Verdict {
    let start = Instant::now();
    let mut bad = Vec::new();
    let (mut worst, mut max_v1, mut max_degree) = (0.0f64, 0, 0);
    let mut tw_rise = i64::MIN;
    let mut by_certificate = 0;
    for i in 0..100 {
        let n = rng.gen_range(1..=10);
        let density = rng.gen_range(0.1..0.7);
        let g = random_graph(rng, n, density);
        let e = match expand_to_degree3(&g) {
            Ok(e) => e,
            Err(err) => {
                bad.push(format!("graph {i}: {err}"));
                continue;
            }
        };
        let g1 = &e.graph;
        max_v1 = max_v1.max(g1.num_vertices());
        max_degree = max_degree.max(g1.max_degree());
        if g1.max_degree() > 3 {
            bad.push(format!("graph {i}: Δ(G₁) = {}", g1.max_degree()));
        }

        // Contract the forest with a union-find of our own.
        let mut parent: Vec<usize> = (0..g1.num_vertices()).collect();
        fn root(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut acyclic = true;
        for &(a, b) in &e.forest {
            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
            acyclic &= ra != rb && g1.has_edge(a, b);
            parent[ra] = rb;
        }
        let forest: BTreeSet<(usize, usize)> = e.forest.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        let classes: BTreeSet<usize> = (0..g1.num_vertices()).map(|v| root(&mut parent, v)).collect();
        let class_owner: BTreeMap<usize, usize> = (0..n).map(|v| (root(&mut parent, v), v)).collect();
        let mut image: Vec<(usize, usize)> = g1
            .edges()
            .into_iter()
            .filter(|ed| !forest.contains(ed))
            .map(|(a, b)| {
                let (x, y) = (class_owner[&root(&mut parent, a)], class_owner[&root(&mut parent, b)]);
                (x.min(y), x.max(y))
            })
            .collect();
        image.sort();
        if !acyclic || classes.len() != n || class_owner.len() != n || image != g.edges() {
            bad.push(format!("graph {i}: contracting the forest does not give G"));
        }

        let tw = exact_treewidth(&g, MAX_EXACT_VERTICES).unwrap().width as i64;
        // Past the exact solver's reach, a valid decomposition bounds tw(G₁).
        let tw1 = match exact_treewidth(g1, MAX_EXACT_VERTICES) {
            Ok(r) => r.width as i64,
            Err(_) if validate_decomposition(&e.certificate, g1).is_empty() => {
                by_certificate += 1;
                e.certificate.width() as i64
            }
            Err(err) => {
                bad.push(format!("graph {i}: {err} and the certificate is invalid"));
                continue;
            }
        };
        tw_rise = tw_rise.max(tw1 - tw);
        if tw1 > tw + 1 {
            bad.push(format!("graph {i}: tw(G₁) {tw1} > tw(G) + 1 = {}", tw + 1));
        }

        let slots = rng.gen_range(1..=n.min(4));
        let prog = random_program(rng, n, slots);
        let direct = branch_distribution(&g, &prog, SimOptions::default()).unwrap();
        match full_branch_distribution(&g, &prog, i as u64, SimOptions::default()) {
            Ok((_, full)) => worst = worst.max(max_gap(&full.distribution, &direct.distribution)),
            Err(err) => bad.push(format!("graph {i}: {err}")),
        }
        match simulate_oneway_full(&g, &prog, i as u64, SimOptions::default()) {
            Ok(run) if direct.distribution.get(&run.outcomes).copied().unwrap_or(0.0) > 0.0 => {}
            Ok(run) => bad.push(format!("graph {i}: sampled outcome {:?} has probability 0", run.outcomes)),
            Err(err) => bad.push(format!("graph {i}: {err}")),
        }
    }
    verdict(
        bad.is_empty() && worst <= 1e-9,
        format!(
            "100 graphs, |V(G₁)| ≤ {max_v1}, Δ(G₁) ≤ {max_degree}, max tw(G₁) − tw(G) = {tw_rise} ({by_certificate} bounded by certificate), \
             max |Δp| {worst:.2e}, {:.2} s{}",
            start.elapsed().as_secs_f64(),
            bad.first().map_or(String::new(), |b| format!("; {b}"))
        ),
    )
}

// ---- 10 ----

fn criterion_10() -> Verdict {
    let mut rows = Vec::new();
    let mut exact = Vec::new();
    for p in [5u64, 7, 11, 13] {
        let lps = lps_expander(p).unwrap();
        let g = lps.reduced.to_simple();
        let tw = exact_treewidth(&g, MAX_EXACT_VERTICES).unwrap().width;
        let lg = SimpleGraph::from_edges(g.num_vertices(), &g.edges()).unwrap();
        let heuristic = [HeuristicStrategy::MinFill, HeuristicStrategy::MinDegree]
            .into_iter()
            .map(|s| ordering_to_decomposition(&lg, &heuristic_order(&lg, s, 0)).unwrap().width())
            .min()
            .unwrap();
        let (s, _) = simplify(&lps.reduced, SimplifyMode::Simple);
        let tws = exact_treewidth(&s.to_simple(), MAX_EXACT_VERTICES).unwrap().width;
        rows.push(format!("p={p}: exact {tw}, heuristic {heuristic}, simplified {tws}"));
        exact.push(tw);
    }
    let increasing = exact.windows(2).all(|w| w[0] < w[1]);
    verdict(increasing, rows.join("; "))
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let cases = circuit_cases(&mut rng, 200);
    let criteria: Vec<Criterion> = vec![
        (1, "oracle equivalence", Box::new(|_| criterion_1(&cases))),
        (2, "ordering invariance", Box::new(|r| criterion_2(&cases, r))),
        (3, "treewidth identities", Box::new(criterion_3)),
        (4, "leaf-peeling bound", Box::new(criterion_4)),
        (5, "depth-2 circuits", Box::new(criterion_5)),
        (6, "local-interaction path decomposition", Box::new(criterion_6)),
        (7, "graph states", Box::new(criterion_7)),
        (8, "one-way simulation", Box::new(criterion_8)),
        (9, "degree-3 expansion", Box::new(criterion_9)),
        (10, "expander treewidth trend", Box::new(|_| criterion_10())),
    ];
    let mut surprises = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let v = run(&mut rng);
        let expected_fail = EXPECTED_FAIL.contains(&id);
        println!(
            "[{}] {id:>2} {name}: {} ({:.2} s){}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64(),
            if expected_fail { " [known unattainable]" } else { "" }
        );
        if v.pass == expected_fail {
            surprises.push(id);
        }
    }
    if !surprises.is_empty() {
        eprintln!("verdicts differ from expectations for criteria {surprises:?}");
        std::process::exit(1);
    }
}

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{MeasurementScenario, Qubit, SimOptions};
use crate::error::{Error, Result};
use crate::multigraph::SimpleGraph;
use crate::oracle::{PureState, ORACLE_QUBIT_LIMIT};

use super::expansion::{expand_to_degree3, Expansion, PrefixedProgram};
use super::program::{Measurement, OneWayProgram};
use super::{check_vertex_ids, GraphStateSimulator};

/// A branch whose conditional probability p_t^b / p_{t−1} falls below this
/// is treated as impossible. The bound is relative because every gadget of
/// an expansion prefix quarters the running probability.
pub const DEGENERATE_PROBABILITY: f64 = 1e-12;

/// Outcome sequence → probability.
pub type Distribution = BTreeMap<Vec<u8>, f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptEntry {
    pub measurement: Measurement,
    pub outcome: u8,
    /// p_t^b / p_{t−1}.
    pub branch: f64,
    /// p_t.
    pub probability: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn outcomes(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.outcome).collect()
    }

    pub fn history(&self) -> Vec<(Qubit, u8)> {
        self.entries.iter().map(|e| (e.measurement.qubit, e.outcome)).collect()
    }

    /// p_T, or 1 before any measurement.
    pub fn probability(&self) -> f64 {
        self.entries.last().map_or(1.0, |e| e.probability)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneWayRun {
    pub outcomes: Vec<u8>,
    pub transcript: Transcript,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObliviousRun {
    /// p_T / p_{T−1}: the probability that the last measurement gives 0.
    pub probability: f64,
    pub p_prev: f64,
    pub p_final: f64,
    pub measurements: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BranchTree {
    pub distribution: Distribution,
    /// Largest |p⁰ + p¹ − p| over internal nodes, each term contracted
    /// separately.
    pub max_conservation_gap: f64,
}

/// τ plus the measured set, grown one measurement at a time.
#[derive(Clone, Debug, Default)]
struct State {
    tau: MeasurementScenario,
    measured: BTreeSet<Qubit>,
    history: Vec<(Qubit, u8)>,
    p: f64,
}

impl State {
    fn start() -> Self {
        Self {
            p: 1.0,
            ..Self::default()
        }
    }

    fn check(&self, m: &Measurement, n: usize) -> Result<()> {
        if m.qubit >= n {
            return Err(Error::Measurement(format!("qubit {} is not a vertex", m.qubit)));
        }
        if self.measured.contains(&m.qubit) {
            return Err(Error::QubitMeasuredTwice(m.qubit));
        }
        Ok(())
    }

    fn with(&self, m: &Measurement, b: u8) -> MeasurementScenario {
        let mut tau = self.tau.clone();
        tau.set(m.qubit, m.pair[b as usize].clone()).expect("pair elements were validated");
        tau
    }

    fn advance(&mut self, m: &Measurement, b: u8, p: f64) {
        self.tau = self.with(m, b);
        self.measured.insert(m.qubit);
        self.history.push((m.qubit, b));
        self.p = p;
    }
}

fn coin_run<P: OneWayProgram + ?Sized>(
    sim: &GraphStateSimulator,
    program: &P,
    rng: &mut ChaCha8Rng,
    state: &mut State,
    transcript: &mut Transcript,
    limit: Option<usize>,
) -> Result<()> {
    let n = sim.layout().n;
    while limit.is_none_or(|l| transcript.entries.len() < l) {
        let Some(m) = program.next(&state.history)? else {
            break;
        };
        state.check(&m, n)?;
        let p0 = sim.probability(&state.with(&m, 0))?;
        let ratio = (p0 / state.p).clamp(0.0, 1.0);
        let b = u8::from(rng.gen::<f64>() >= ratio);
        let branch = if b == 0 { ratio } else { 1.0 - ratio };
        if branch < DEGENERATE_PROBABILITY {
            return Err(Error::DegenerateTranscript(branch));
        }
        let p = if b == 0 { p0 } else { state.p - p0 };
        transcript.entries.push(TranscriptEntry {
            measurement: m.clone(),
            outcome: b,
            branch,
            probability: p,
        });
        state.advance(&m, b, p);
    }
    Ok(())
}

/// One sampled run: at each step the outcome is 0 with probability
/// p_t⁰ / p_{t−1}, where p_t⁰ is contracted exactly.
pub fn simulate_oneway_randomized<P: OneWayProgram + ?Sized>(
    g: &SimpleGraph,
    program: &P,
    seed: u64,
    opts: SimOptions,
) -> Result<OneWayRun> {
    let sim = GraphStateSimulator::new(g, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transcript = Transcript::default();
    coin_run(&sim, program, &mut rng, &mut State::start(), &mut transcript, None)?;
    Ok(OneWayRun {
        outcomes: transcript.outcomes(),
        transcript,
    })
}

fn enumerate<P: OneWayProgram + ?Sized>(
    sim: &GraphStateSimulator,
    program: &P,
    state: State,
    skip: usize,
) -> Result<BranchTree> {
    let Some(m) = program.next(&state.history)? else {
        let key = state.history[skip..].iter().map(|&(_, b)| b).collect();
        return Ok(BranchTree {
            distribution: BTreeMap::from([(key, state.p)]),
            max_conservation_gap: 0.0,
        });
    };
    state.check(&m, sim.layout().n)?;
    let (p0, p1) = rayon::join(
        || sim.probability(&state.with(&m, 0)),
        || sim.probability(&state.with(&m, 1)),
    );
    let (p0, p1) = (p0?, p1?);
    let gap = (p0 + p1 - state.p).abs();
    let branch = |b: u8, p: f64| -> Result<BranchTree> {
        if p < DEGENERATE_PROBABILITY * state.p {
            return Ok(BranchTree::default());
        }
        let mut next = state.clone();
        next.advance(&m, b, p);
        enumerate(sim, program, next, skip)
    };
    let (zero, one) = rayon::join(|| branch(0, p0), || branch(1, p1));
    let (mut zero, one) = (zero?, one?);
    for (k, v) in one.distribution {
        *zero.distribution.entry(k).or_insert(0.0) += v;
    }
    zero.max_conservation_gap = gap.max(zero.max_conservation_gap).max(one.max_conservation_gap);
    Ok(zero)
}

/// The exact outcome distribution, enumerating every branch with p ≥ 1e−12.
pub fn branch_distribution<P: OneWayProgram + ?Sized>(
    g: &SimpleGraph,
    program: &P,
    opts: SimOptions,
) -> Result<BranchTree> {
    let sim = GraphStateSimulator::new(g, opts)?;
    enumerate(&sim, program, State::start(), 0)
}

fn dense_walk<P: OneWayProgram + ?Sized>(
    program: &P,
    psi: &PureState,
    history: &mut Vec<(Qubit, u8)>,
    p: f64,
    out: &mut Distribution,
) -> Result<()> {
    let Some(m) = program.next(history)? else {
        let key = history.iter().map(|&(_, b)| b).collect();
        *out.entry(key).or_insert(0.0) += p;
        return Ok(());
    };
    if m.qubit >= psi.n {
        return Err(Error::Measurement(format!("qubit {} is not a vertex", m.qubit)));
    }
    if history.iter().any(|&(q, _)| q == m.qubit) {
        return Err(Error::QubitMeasuredTwice(m.qubit));
    }
    for b in 0..2u8 {
        let mut next = psi.clone();
        let conditional = next.measure(&m.pair[b as usize], m.qubit);
        if conditional < DEGENERATE_PROBABILITY {
            continue;
        }
        let pb = p * conditional;
        history.push((m.qubit, b));
        dense_walk(program, &next, history, pb, out)?;
        history.pop();
    }
    Ok(())
}

/// Reference distribution from a dense statevector with measurement
/// updates (Kraus operator √P); at most 10 qubits.
pub fn dense_branch_distribution<P: OneWayProgram + ?Sized>(
    g: &SimpleGraph,
    program: &P,
) -> Result<Distribution> {
    let n = check_vertex_ids(g)?;
    if n > ORACLE_QUBIT_LIMIT {
        return Err(Error::OracleTooLarge {
            qubits: n,
            limit: ORACLE_QUBIT_LIMIT,
        });
    }
    let psi = PureState::graph_state(g)?;
    let mut out = Distribution::new();
    dense_walk(program, &psi, &mut Vec::new(), 1.0, &mut out)?;
    Ok(out)
}

/// Scenario and measurements along the given outcomes, plus the next
/// measurement after them.
fn follow<P: OneWayProgram + ?Sized>(
    program: &P,
    outcomes: &[u8],
    n: usize,
) -> Result<(State, Option<Measurement>)> {
    let mut state = State::start();
    for &b in outcomes {
        let m = program
            .next(&state.history)?
            .ok_or_else(|| Error::NotOblivious("a branch halts before the others".into()))?;
        state.check(&m, n)?;
        state.advance(&m, b, f64::NAN);
    }
    let next = program.next(&state.history)?;
    if let Some(m) = &next {
        state.check(m, n)?;
    }
    Ok((state, next))
}

/// Deterministic simulation of an oblivious program: p_T / p_{T−1} along
/// the all-zero path. The first two levels of pre-final branches are
/// checked for equal probability.
pub fn simulate_oneway_oblivious<P: OneWayProgram + ?Sized>(
    g: &SimpleGraph,
    program: &P,
    opts: SimOptions,
) -> Result<ObliviousRun> {
    let sim = GraphStateSimulator::new(g, opts)?;
    let n = sim.layout().n;
    let mut zeros = Vec::new();
    while follow(program, &zeros, n)?.1.is_some() {
        zeros.push(0);
    }
    let t = zeros.len();
    if t == 0 {
        return Err(Error::Measurement("the program makes no measurement".into()));
    }
    for level in 1..=(t - 1).min(2) {
        let mut ps = Vec::new();
        for bits in 0..1usize << level {
            let outs: Vec<u8> = (0..level).map(|i| ((bits >> (level - 1 - i)) & 1) as u8).collect();
            let (state, next) = follow(program, &outs, n)?;
            if next.is_none() {
                return Err(Error::NotOblivious(format!("branch {outs:?} halts early")));
            }
            ps.push((outs, sim.probability(&state.tau)?));
        }
        let (lo, hi) = ps.iter().fold((f64::MAX, f64::MIN), |(a, b), (_, p)| (a.min(*p), b.max(*p)));
        if hi - lo > 1e-9 {
            return Err(Error::NotOblivious(format!(
                "level {level} branch probabilities differ: {ps:?}"
            )));
        }
    }
    let (prev, last) = follow(program, &zeros[..t - 1], n)?;
    let last = last.expect("the all-zero path has t measurements");
    let p_prev = sim.probability(&prev.tau)?;
    // An oblivious program reaches every pre-final branch with 2^−(t−1).
    if p_prev < DEGENERATE_PROBABILITY * 0.5f64.powi(t as i32 - 1) {
        return Err(Error::DegenerateTranscript(p_prev));
    }
    let p_final = sim.probability(&prev.with(&last, 0))?;
    Ok(ObliviousRun {
        probability: (p_final / p_prev).clamp(0.0, 1.0),
        p_prev,
        p_final,
        measurements: t,
    })
}

#[derive(Clone, Debug)]
pub struct FullRun {
    pub expansion: Expansion,
    /// Outcomes of the program's own measurements.
    pub outcomes: Vec<u8>,
    /// The whole run on G₁, prefix included.
    pub run: OneWayRun,
}

/// Expands G to maximum degree 3 and runs the gadget prefix followed by the
/// program on |G₁⟩.
pub fn simulate_oneway_full<P: OneWayProgram + ?Sized>(
    g: &SimpleGraph,
    program: &P,
    seed: u64,
    opts: SimOptions,
) -> Result<FullRun> {
    let expansion = expand_to_degree3(g)?;
    let composite = PrefixedProgram::new(&expansion, program);
    let run = simulate_oneway_randomized(&expansion.graph, &composite, seed, opts)?;
    Ok(FullRun {
        outcomes: run.outcomes[composite.prefix_len()..].to_vec(),
        run,
        expansion,
    })
}

/// Exact distribution of the program's own outcomes when run after the
/// prefix on |G₁⟩. The prefix is oblivious, so it is sampled once with
/// `seed` and the program's branches are enumerated from there.
pub fn full_branch_distribution<P: OneWayProgram + ?Sized>(
    g: &SimpleGraph,
    program: &P,
    seed: u64,
    opts: SimOptions,
) -> Result<(Expansion, BranchTree)> {
    let expansion = expand_to_degree3(g)?;
    let composite = PrefixedProgram::new(&expansion, program);
    let sim = GraphStateSimulator::new(&expansion.graph, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = State::start();
    let mut transcript = Transcript::default();
    let k = composite.prefix_len();
    coin_run(&sim, &composite, &mut rng, &mut state, &mut transcript, Some(k))?;
    let p_prefix = state.p;
    if p_prefix <= 0.0 {
        return Err(Error::DegenerateTranscript(p_prefix));
    }
    let mut tree = enumerate(&sim, &composite, state, k)?;
    for v in tree.distribution.values_mut() {
        *v /= p_prefix;
    }
    tree.max_conservation_gap /= p_prefix;
    Ok((expansion, tree))
}

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use twqsim::circuit::{
    parse_circuit, parse_scenario, simulate_probability, simulate_with_ordering, Circuit, MeasurementScenario,
    SimOptions, Simulation,
};
use twqsim::multigraph::{parse_graph, parse_simple_graph, MultiGraph, SimpleGraph};
use twqsim::oneway::{
    branch_distribution, dense_branch_distribution, graph_state_circuit, parse_program, simulate_oneway_full,
    simulate_oneway_oblivious, simulate_oneway_randomized, Distribution, GraphStateSimulator, ProgramFile,
};
use twqsim::oracle::oracle_probability;
use twqsim::planner::{exact_cc, parse_plan, plan_contraction, write_plan, ContractionPlan, Strategy};
use twqsim::tensor::DEFAULT_BUDGET_RANK;
use twqsim::treewidth::{
    exact_treewidth, heuristic_order, ordering_to_decomposition, write_decomposition, HeuristicStrategy,
    TreeDecomposition, DEFAULT_EXACT_BUDGET,
};
use twqsim::Error;

#[derive(Parser)]
#[command(name = "twqsim", version, about = "Tensor-network simulation of quantum circuits and one-way computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `kv` prints stable key=value lines; `human` aligns them for reading.
    #[arg(long, global = true, value_enum, default_value_t = Format::Kv)]
    format: Format,
    /// Worker threads for independent scenario evaluations or runs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Kv,
    Human,
}

#[derive(Args, Clone)]
struct Planning {
    #[arg(long, default_value = "minfill")]
    strategy: Strategy,
    /// Shorthand for `--strategy exact`.
    #[arg(long)]
    exact: bool,
    /// Tie-break seed for the heuristics; also seeds randomized runs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest graph the exact solver accepts, in vertices.
    #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
    budget: usize,
}

impl Planning {
    fn strategy(&self) -> Strategy {
        match self.strategy {
            _ if self.exact => Strategy::Exact { budget: self.budget },
            Strategy::Exact { .. } => Strategy::Exact { budget: self.budget },
            s => s,
        }
    }

    fn is_exact(&self) -> bool {
        matches!(self.strategy(), Strategy::Exact { .. })
    }
}

#[derive(Args, Clone)]
struct Simulating {
    #[command(flatten)]
    planning: Planning,
    /// Cross-check against the dense reference simulator.
    #[arg(long)]
    oracle: bool,
    /// Refuse to build tensors with more than 4^N entries.
    #[arg(long, default_value_t = DEFAULT_BUDGET_RANK)]
    budget_rank: usize,
}

impl Simulating {
    fn options(&self) -> SimOptions {
        SimOptions {
            strategy: self.planning.strategy(),
            seed: self.planning.seed,
            budget_rank: self.budget_rank,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Sampled runs, one coin per measurement.
    Random,
    /// Every outcome sequence with its exact probability.
    Branches,
    /// Probability that the last measurement of an oblivious program gives 0.
    Oblivious,
    /// Sampled run after expanding the graph to maximum degree 3.
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Probability of measurement scenarios on a circuit.
    Simulate {
        circuit: PathBuf,
        /// Input bitstring, one bit per qubit (default all zeros).
        #[arg(long)]
        input: Option<String>,
        /// Scenario file; repeat for several scenarios. None means no measurement.
        #[arg(long)]
        measure: Vec<PathBuf>,
        /// Contract along this plan file instead of planning.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        sim: Simulating,
    },
    /// Contraction ordering for a circuit's graph or a graph file.
    Plan {
        input: PathBuf,
        #[command(flatten)]
        planning: Planning,
        /// Also write the plan file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Treewidth and a tree decomposition of a graph.
    Treewidth {
        graph: PathBuf,
        #[command(flatten)]
        planning: Planning,
        /// Also write the decomposition in td format here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contraction complexity of a graph and an ordering achieving it.
    Cc {
        graph: PathBuf,
        #[command(flatten)]
        planning: Planning,
    },
    /// Scenario probabilities on the graph state of a graph.
    Graphstate {
        graph: PathBuf,
        #[arg(long)]
        measure: Vec<PathBuf>,
        #[command(flatten)]
        sim: Simulating,
    },
    /// Runs an adaptive measurement program on a graph state.
    Oneway {
        graph: PathBuf,
        #[arg(long)]
        program: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Random)]
        mode: Mode,
        /// Sampled runs, seeded seed, seed + 1, ...
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[command(flatten)]
        sim: Simulating,
    },
}

struct Failure {
    code: u8,
    message: String,
}

type Outcome<T> = Result<T, Failure>;

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

/// Budget overruns exit with 2, everything else with 1.
fn fail(context: &str, e: Error) -> Failure {
    let code = match e {
        Error::GraphTooLarge { .. } | Error::MemoryBudget { .. } | Error::OracleTooLarge { .. } => 2,
        _ => 1,
    };
    Failure {
        code,
        message: format!("{context}: {e}"),
    }
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load<T>(path: &Path, parse: impl FnOnce(&str) -> twqsim::Result<T>) -> Outcome<T> {
    parse(&read(path)?).map_err(|e| fail(&path.display().to_string(), e))
}

fn write(path: &Path, text: &str) -> Outcome<()> {
    fs::write(path, text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

#[derive(Default)]
struct Report(Vec<(String, String)>);

impl Report {
    fn put(&mut self, key: impl Into<String>, value: impl Display) {
        self.0.push((key.into(), value.to_string()));
    }

    fn render(&self, format: Format) -> String {
        let width = self.0.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        self.0
            .iter()
            .map(|(k, v)| match format {
                Format::Kv => format!("{k}={v}\n"),
                Format::Human => format!("{k:<width$}  {v}\n"),
            })
            .collect()
    }
}

fn bits(b: &[u8]) -> String {
    b.iter().map(|x| char::from(b'0' + x)).collect()
}

fn pool(jobs: usize) -> Outcome<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| input_error(format!("thread pool: {e}")))
}

/// Scenario files, or a single empty scenario when none are given.
fn scenarios(paths: &[PathBuf]) -> Outcome<Vec<(String, MeasurementScenario)>> {
    if paths.is_empty() {
        return Ok(vec![("none".into(), MeasurementScenario::new())]);
    }
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), load(p, parse_scenario)?)))
        .collect()
}

fn put_plan(r: &mut Report, plan: &ContractionPlan) {
    r.put("cc", plan.predicted_cc);
    r.put("rank", plan.predicted_rank);
    r.put("method", &plan.source.method);
    if plan.source.fell_back {
        r.put("fallback", "minfill");
    }
}

fn input_bits(text: Option<&str>, n: usize) -> Outcome<Vec<u8>> {
    let Some(text) = text else {
        return Ok(vec![0; n]);
    };
    if text.len() != n || !text.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(input_error(format!("--input {text:?} must be {n} bits")));
    }
    Ok(text.bytes().map(|b| b - b'0').collect())
}

fn simulate(
    path: &Path,
    input: Option<&str>,
    measure: &[PathBuf],
    plan_file: Option<&Path>,
    sim: &Simulating,
    jobs: usize,
) -> Outcome<Report> {
    let c: Circuit = load(path, parse_circuit)?;
    let x = input_bits(input, c.n())?;
    let taus = scenarios(measure)?;
    let ordering = plan_file.map(|p| load(p, parse_plan)).transpose()?;
    let name = path.display().to_string();
    let run = |tau: &MeasurementScenario| -> Outcome<(Simulation, Option<f64>)> {
        let s = match &ordering {
            Some((pi, _)) => simulate_with_ordering(&c, &x, tau, pi, sim.budget_rank),
            None => simulate_probability(&c, &x, tau, sim.options()),
        }
        .map_err(|e| fail(&name, e))?;
        let oracle = sim
            .oracle
            .then(|| oracle_probability(&c, &x, tau).map_err(|e| fail("oracle", e)))
            .transpose()?;
        Ok((s, oracle))
    };
    let results: Vec<_> = pool(jobs)?.install(|| taus.par_iter().map(|(_, t)| run(t)).collect());

    let mut r = Report::default();
    r.put("qubits", c.n());
    r.put("gates", c.gates().len());
    for ((label, _), res) in taus.iter().zip(results) {
        let (s, oracle) = res?;
        if taus.len() > 1 {
            r.put("scenario", label);
        }
        r.put("p", s.probability);
        r.put("width", s.max_rank);
        match (&s.plan, &ordering) {
            (Some(plan), _) => put_plan(&mut r, plan),
            (None, Some((_, cc))) => {
                r.put("cc", cc);
                r.put("method", "plan-file");
            }
            (None, None) => {}
        }
        if let Some(o) = oracle {
            r.put("p_oracle", o);
            r.put("oracle_diff", format!("{:e}", (s.probability - o).abs()));
        }
    }
    Ok(r)
}

fn is_circuit(text: &str) -> bool {
    text.lines()
        .map(|l| l.split('#').next().unwrap().trim())
        .find(|l| !l.is_empty())
        .is_some_and(|l| l.split_whitespace().next().unwrap().eq_ignore_ascii_case("qubits"))
}

fn plan(path: &Path, planning: &Planning, out: Option<&Path>) -> Outcome<Report> {
    let text = read(path)?;
    let name = path.display().to_string();
    let g: MultiGraph = if is_circuit(&text) {
        parse_circuit(&text).map_err(|e| fail(&name, e))?.graph()
    } else {
        parse_graph(&text).map_err(|e| fail(&name, e))?
    };
    let plan = plan_contraction(&g, planning.strategy(), planning.seed).map_err(|e| fail(&name, e))?;
    if let Some(out) = out {
        write(out, &write_plan(&plan))?;
    }
    let mut r = Report::default();
    r.put("vertices", g.num_vertices());
    r.put("edges", g.num_edges());
    put_plan(&mut r, &plan);
    let ids: Vec<String> = plan.ordering.as_slice().iter().map(ToString::to_string).collect();
    r.put("ordering", ids.join(","));
    Ok(r)
}

fn decompose(g: &SimpleGraph, planning: &Planning) -> twqsim::Result<(TreeDecomposition, &'static str)> {
    if planning.is_exact() {
        let e = exact_treewidth(g, planning.budget)?;
        return Ok((ordering_to_decomposition(g, &e.ordering)?, "exact"));
    }
    let (h, name) = match planning.strategy() {
        Strategy::MinDegree => (HeuristicStrategy::MinDegree, "mindeg"),
        _ => (HeuristicStrategy::MinFill, "minfill"),
    };
    Ok((ordering_to_decomposition(g, &heuristic_order(g, h, planning.seed))?, name))
}

fn treewidth(path: &Path, planning: &Planning, out: Option<&Path>) -> Outcome<Report> {
    let g = load(path, parse_graph)?.to_simple();
    let (td, method) = decompose(&g, planning).map_err(|e| fail(&path.display().to_string(), e))?;
    if let Some(out) = out {
        write(out, &write_decomposition(&td, g.num_vertices()))?;
    }
    let mut r = Report::default();
    r.put("tw", td.width());
    r.put("method", method);
    r.put("bags", td.len());
    for (i, bag) in td.bags.iter().enumerate() {
        let vs: Vec<String> = bag.iter().map(|v| (v + 1).to_string()).collect();
        r.put("bag", format!("{}:{}", i + 1, vs.join(" ")));
    }
    for &(a, b) in &td.edges {
        r.put("tree_edge", format!("{}-{}", a + 1, b + 1));
    }
    Ok(r)
}

fn cc(path: &Path, planning: &Planning) -> Outcome<Report> {
    let g = load(path, parse_graph)?;
    let name = path.display().to_string();
    let plan = plan_contraction(&g, planning.strategy(), planning.seed).map_err(|e| fail(&name, e))?;
    let mut r = Report::default();
    if planning.is_exact() {
        r.put("cc", exact_cc(&g, planning.budget).map_err(|e| fail(&name, e))?);
        r.put("method", "exact");
    } else {
        r.put("cc", plan.predicted_cc);
        r.put("method", &plan.source.method);
    }
    let ids: Vec<String> = plan.ordering.as_slice().iter().map(ToString::to_string).collect();
    r.put("ordering", ids.join(","));
    Ok(r)
}

fn graphstate(path: &Path, measure: &[PathBuf], sim: &Simulating, jobs: usize) -> Outcome<Report> {
    let g = load(path, parse_simple_graph)?;
    let name = path.display().to_string();
    let taus = scenarios(measure)?;
    let simulator = GraphStateSimulator::new(&g, sim.options()).map_err(|e| fail(&name, e))?;
    let prep = graph_state_circuit(&g).map_err(|e| fail(&name, e))?;
    let zeros = vec![0; g.num_vertices()];
    let run = |(label, tau): &(String, MeasurementScenario)| -> Outcome<(f64, Option<f64>)> {
        let p = simulator.probability(tau).map_err(|e| fail(label, e))?;
        let oracle = sim
            .oracle
            .then(|| oracle_probability(&prep, &zeros, tau).map_err(|e| fail("oracle", e)))
            .transpose()?;
        Ok((p, oracle))
    };
    let results: Vec<_> = pool(jobs)?.install(|| taus.par_iter().map(run).collect());
    let mut r = Report::default();
    r.put("vertices", g.num_vertices());
    r.put("edges", g.num_edges());
    put_plan(&mut r, simulator.plan());
    for ((label, _), res) in taus.iter().zip(results) {
        let (p, oracle) = res?;
        if taus.len() > 1 {
            r.put("scenario", label);
        }
        r.put("p", p);
        if let Some(o) = oracle {
            r.put("p_oracle", o);
            r.put("oracle_diff", format!("{:e}", (p - o).abs()));
        }
    }
    Ok(r)
}

fn oneway(path: &Path, program: &Path, mode: Mode, runs: u64, sim: &Simulating, jobs: usize) -> Outcome<Report> {
    let g = load(path, parse_simple_graph)?;
    let prog: ProgramFile = load(program, parse_program)?;
    let name = program.display().to_string();
    let opts = sim.options();
    let dense = || -> Outcome<Option<Distribution>> {
        sim.oracle
            .then(|| dense_branch_distribution(&g, &prog).map_err(|e| fail("oracle", e)))
            .transpose()
    };
    let mut r = Report::default();
    match mode {
        Mode::Random => {
            let seeds: Vec<u64> = (0..runs).map(|i| opts.seed.wrapping_add(i)).collect();
            let results: Vec<_> = pool(jobs)?.install(|| {
                seeds
                    .par_iter()
                    .map(|&s| simulate_oneway_randomized(&g, &prog, s, opts))
                    .collect()
            });
            let dense = dense()?;
            for (seed, res) in seeds.iter().zip(results) {
                let run = res.map_err(|e| fail(&name, e))?;
                let p = run.transcript.probability();
                r.put("seed", seed);
                r.put("outcomes", bits(&run.outcomes));
                r.put("p", p);
                if let Some(d) = &dense {
                    let o = d.get(&run.outcomes).copied().unwrap_or(0.0);
                    r.put("p_oracle", o);
                    r.put("oracle_diff", format!("{:e}", (p - o).abs()));
                }
            }
        }
        Mode::Branches => {
            let tree = branch_distribution(&g, &prog, opts).map_err(|e| fail(&name, e))?;
            r.put("branches", tree.distribution.len());
            r.put("conservation_gap", format!("{:e}", tree.max_conservation_gap));
            for (k, p) in &tree.distribution {
                r.put(format!("branch.{}", bits(k)), p);
            }
            if let Some(d) = dense()? {
                let diff = d
                    .keys()
                    .chain(tree.distribution.keys())
                    .map(|k| (d.get(k).unwrap_or(&0.0) - tree.distribution.get(k).unwrap_or(&0.0)).abs())
                    .fold(0.0, f64::max);
                r.put("oracle_diff", format!("{diff:e}"));
            }
        }
        Mode::Oblivious => {
            let o = simulate_oneway_oblivious(&g, &prog, opts).map_err(|e| fail(&name, e))?;
            r.put("measurements", o.measurements);
            r.put("p", o.probability);
            r.put("p_prev", o.p_prev);
            r.put("p_final", o.p_final);
        }
        Mode::Full => {
            let full = simulate_oneway_full(&g, &prog, opts.seed, opts).map_err(|e| fail(&name, e))?;
            let prefix = 2 * full.expansion.gadgets.len();
            let entries = &full.run.transcript.entries;
            let p_prefix = if prefix == 0 { 1.0 } else { entries[prefix - 1].probability };
            let p = full.run.transcript.probability() / p_prefix;
            r.put("expanded_vertices", full.expansion.graph.num_vertices());
            r.put("max_degree", full.expansion.graph.max_degree());
            r.put("gadgets", full.expansion.gadgets.len());
            r.put("outcomes", bits(&full.outcomes));
            r.put("p", p);
            if let Some(d) = dense()? {
                let o = d.get(&full.outcomes).copied().unwrap_or(0.0);
                r.put("p_oracle", o);
                r.put("oracle_diff", format!("{:e}", (p - o).abs()));
            }
        }
    }
    Ok(r)
}

fn run(cli: &Cli) -> Outcome<Report> {
    match &cli.command {
        Command::Simulate {
            circuit,
            input,
            measure,
            plan,
            sim,
        } => simulate(circuit, input.as_deref(), measure, plan.as_deref(), sim, cli.jobs),
        Command::Plan { input, planning, out } => plan(input, planning, out.as_deref()),
        Command::Treewidth { graph, planning, out } => treewidth(graph, planning, out.as_deref()),
        Command::Cc { graph, planning } => cc(graph, planning),
        Command::Graphstate { graph, measure, sim } => graphstate(graph, measure, sim, cli.jobs),
        Command::Oneway {
            graph,
            program,
            mode,
            runs,
            sim,
        } => oneway(graph, program, *mode, *runs, sim, cli.jobs),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.render(cli.format));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

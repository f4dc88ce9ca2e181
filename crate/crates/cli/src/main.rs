//! `opinion`: simulate, search and statistically check opinion-dynamics
//! models on a network document.
//!
//! Exit status: 0 success or witness found, 1 search exhausted without a
//! witness, 2 bounded exhaustion, non-convergence or deadlock, 3 input error.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use opinion_core::io::{
    load_network, write_estimate_csv, write_trace_csv, EstimateRecord, TraceWriter,
};
use opinion_core::metrics::consensus;
use opinion_core::models::{step, OpinionModel};
use opinion_core::relations::UpdateFn;
use opinion_core::search::{
    filter_ge, round_search, search_consensus, DedupKey, RoundOptions, SearchBounds, Termination,
    Trace, DEFAULT_EPSILON,
};
use opinion_core::stochastic::{
    estimate, sample_rng, AgentSelection, EstimationParams, PathSampler, Query, WeightScheme,
};
use opinion_core::SimState;

const EXIT_NO_WITNESS: u8 = 1;
const EXIT_INCOMPLETE: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "opinion",
    version,
    about = "Opinion dynamics as set relations over influence graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write a trace CSV.
    Simulate(SimulateArgs),
    /// Search for a reachable consensus state.
    Search(SearchArgs),
    /// Estimate the probability of consensus before a communication budget.
    Scheck(ScheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum UpdateName {
    Gossip,
    Weighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum Assign {
    Uniform,
    Variance,
    Distance,
}

#[derive(Clone, Copy, ValueEnum)]
enum Selection {
    Touched,
    Targets,
}

#[derive(Args)]
struct ModelArgs {
    /// Network document (JSON).
    network: PathBuf,
    /// gossip, degroot, hybrid or filtered-hybrid(n).
    #[arg(long, default_value = "degroot")]
    model: String,
    /// Replace the model's update function.
    #[arg(long, value_enum)]
    update: Option<UpdateName>,
    /// Consensus tolerance: all opinions strictly within epsilon.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

impl ModelArgs {
    fn load(&self) -> Result<(SimState, OpinionModel)> {
        let init = load_network(&self.network)
            .with_context(|| format!("loading {}", self.network.display()))?;
        let mut model = OpinionModel::from_name(&self.model)?;
        if let Some(u) = self.update {
            model = model.with_update(match u {
                UpdateName::Gossip => UpdateFn::Gossip,
                UpdateName::Weighted => UpdateFn::Weighted,
            });
        }
        Ok((init, model))
    }
}

#[derive(Args)]
struct SchemeArgs {
    /// Probability assignment over successors.
    #[arg(long, value_enum, default_value = "uniform")]
    assign: Assign,
    /// Agents an edge set chooses for variance and distance weighting.
    #[arg(long, value_enum, default_value = "touched")]
    selection: Selection,
    #[arg(long, env = "OPINION_SEED", default_value_t = 0)]
    seed: u64,
}

impl SchemeArgs {
    fn scheme(&self) -> WeightScheme {
        let sel = match self.selection {
            Selection::Touched => AgentSelection::Touched,
            Selection::Targets => AgentSelection::TargetsOnly,
        };
        match self.assign {
            Assign::Uniform => WeightScheme::Uniform,
            Assign::Variance => WeightScheme::Variance(sel),
            Assign::Distance => WeightScheme::Distance(sel),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Number of transitions to run.
    #[arg(long, default_value_t = 100)]
    max_steps: u64,
    /// Stop early once consensus holds.
    #[arg(long)]
    until_consensus: bool,
    /// Trace CSV path; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1_000_000)]
    max_states: usize,
    #[arg(long)]
    max_depth: Option<u64>,
    /// Number of witnesses to find.
    #[arg(long, default_value_t = 1)]
    solutions: usize,
    /// Treat states with equal opinions but different counters as distinct.
    #[arg(long)]
    dedup_counters: bool,
    /// Expand frontier states in parallel.
    #[arg(long)]
    parallel: bool,
    /// Depth-first search firing each edge set of the model at most once.
    #[arg(long)]
    round: bool,
    /// With --round, keep only edge sets with at least this many edges.
    #[arg(long, requires = "round")]
    min_card: Option<usize>,
    /// With --round, cap on transitions tried.
    #[arg(long, default_value_t = 10_000_000)]
    max_nodes: u64,
    /// Trace CSV of the first witness.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Communication budget N.
    #[arg(long)]
    comm_budget: u64,
    /// Confidence parameter; the interval has level 1 - alpha.
    #[arg(short, long, default_value_t = 0.05)]
    alpha: f64,
    /// Target half-width of the confidence interval.
    #[arg(short, long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 100_000)]
    max_samples: u64,
    /// Per-path cap on transitions.
    #[arg(long, default_value_t = 1_000_000)]
    step_budget: u64,
    /// Estimate CSV path, written in addition to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn simulate(args: SimulateArgs) -> Result<u8> {
    let (init, model) = args.model.load()?;
    let scheme = args.scheme.scheme();
    let query = Query::new(u64::MAX, args.model.epsilon)?;
    let sampler = PathSampler::new(&init, &model, &scheme, query, u64::MAX)?;
    let mut rng = sample_rng(args.scheme.seed, 0);
    let mut out = TraceWriter::new(output(&args.output)?, &init.network)?;
    let mut s = init.clone();
    out.row(&s)?;
    let mut status = 0;
    for _ in 0..args.max_steps {
        if args.until_consensus && consensus(&s, args.model.epsilon) {
            break;
        }
        let Some(edges) = sampler.choose(&s.network, &mut rng)? else {
            eprintln!(
                "deadlocked state at step {}: the strategy offers no interaction",
                s.step
            );
            status = EXIT_INCOMPLETE;
            break;
        };
        s = step(&s, &edges, &model.update)?;
        out.row(&s)?;
    }
    out.finish()?.flush()?;
    Ok(status)
}

fn describe(trace: &Trace, round: bool) -> String {
    let last = trace.final_state();
    let opinions: Vec<String> = last
        .network
        .agents()
        .iter()
        .zip(last.network.opinions())
        .map(|(a, o)| format!("{a}={o}"))
        .collect();
    let mut line = format!(
        "step {} comm {}: {}",
        last.step,
        last.comm,
        opinions.join(" ")
    );
    if round {
        let sets: Vec<String> = trace
            .steps
            .iter()
            .map(|s| s.edges.display(&last.network).to_string())
            .collect();
        line.push_str(&format!("\n  via {}", sets.join(" ; ")));
    }
    line
}

fn search(args: SearchArgs) -> Result<u8> {
    let (init, model) = args.model.load()?;
    let eps = args.model.epsilon;
    let (witnesses, termination, explored) = if args.round {
        let mut family = model.family(&init.network)?;
        if let Some(n) = args.min_card {
            family = filter_ge(n, family)?;
        }
        let opts = RoundOptions {
            solution_count: args.solutions,
            max_nodes: Some(args.max_nodes),
        };
        let out = round_search(&init, &family, &model.update, eps, &opts)?;
        (
            out.witnesses,
            out.termination,
            format!("{} transitions tried", out.nodes),
        )
    } else {
        let bounds = SearchBounds {
            max_depth: args.max_depth,
            max_states: Some(args.max_states),
            solution_count: args.solutions,
            dedup: if args.dedup_counters {
                DedupKey::OpinionsAndCounters
            } else {
                DedupKey::Opinions
            },
            parallel: args.parallel,
        };
        let out = search_consensus(&init, &model, eps, &bounds)?;
        (
            out.witnesses,
            out.termination,
            format!("{} states visited", out.states_visited),
        )
    };

    let mut stdout = io::stdout().lock();
    for (i, w) in witnesses.iter().enumerate() {
        writeln!(stdout, "solution {}: {}", i + 1, describe(w, args.round))?;
    }
    let (verdict, code) = match termination {
        Termination::SolutionsFound => ("witness found", 0),
        Termination::Exhausted if !witnesses.is_empty() => ("exhausted after finding witnesses", 0),
        Termination::Exhausted => ("no solution: state space exhausted", EXIT_NO_WITNESS),
        Termination::Bounded => ("bounded exhaustion: search limit reached", EXIT_INCOMPLETE),
    };
    writeln!(stdout, "{verdict} ({explored})")?;
    if let (Some(path), Some(w)) = (&args.output, witnesses.first()) {
        write_trace_csv(output(&Some(path.clone()))?, w)?.flush()?;
    }
    Ok(code)
}

fn scheck(args: ScheckArgs) -> Result<u8> {
    let (init, model) = args.model.load()?;
    let scheme = args.scheme.scheme();
    let query = Query::new(args.comm_budget, args.model.epsilon)?;
    let params = EstimationParams {
        alpha: args.alpha,
        delta: args.delta,
        max_samples: args.max_samples,
        seed: args.scheme.seed,
        step_budget: args.step_budget,
        ..EstimationParams::default()
    };
    let e = estimate(&init, &model, &scheme, query, &params)?;
    let record = EstimateRecord::new(
        &model.name,
        scheme.name(),
        args.comm_budget,
        args.model.epsilon,
        args.alpha,
        args.delta,
        args.scheme.seed,
        &e,
    );
    write_estimate_csv(io::stdout().lock(), std::slice::from_ref(&record))?.flush()?;
    if let Some(path) = &args.output {
        write_estimate_csv(output(&Some(path.clone()))?, &[record])?.flush()?;
    }
    if e.deadlocks > 0 {
        eprintln!("{} sampled paths deadlocked", e.deadlocks);
    }
    if e.step_budget_exhausted > 0 {
        eprintln!(
            "{} sampled paths hit the step budget",
            e.step_budget_exhausted
        );
    }
    Ok(if e.converged { 0 } else { EXIT_INCOMPLETE })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Search(a) => search(a),
        Command::Scheck(a) => scheck(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hybrid_qopt::anneal::{anneal, AnnealSchedule};
use hybrid_qopt::arith::Mode;
use hybrid_qopt::builder::{build_circuit, circuit_stats, BlockOrdering, LayerParams};
use hybrid_qopt::harness::{
    lagrange_sweep, ordering_study, run_family_sweep, state_visit_histogram, write_family_csv,
    write_lagrange_csv, SweepConfig,
};
use hybrid_qopt::optimizer::{optimize, OptimizerConfig, SearchMethod};
use hybrid_qopt::problem::{
    brute_force_solve, cargo_instance, default_lambda, ConstrainedBinaryProblem, Multipliers,
    Representation, RepresentationAssignment,
};
use hybrid_qopt::zeno::zeno_demo;
use hybrid_qopt::Error;

#[derive(Parser)]
#[command(name = "hqopt", version, about = "Hybrid QAOA / dephasing / Zeno circuits for constrained binary optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one assignment and write the iteration trace.
    Solve(SolveArgs),
    /// Optimize every QAOA/DEPHASE/ZENO assignment of the problem.
    SweepFamily(SweepArgs),
    /// Re-optimize one assignment for several Lagrange multipliers.
    SweepLagrange(LagrangeArgs),
    /// Compare block orderings on a mixed assignment.
    Ordering(RunArgs),
    /// Decision-state distribution of the circuit output.
    Histogram(HistogramArgs),
    /// Survival of a two-level system under repeated projection.
    ZenoDemo(ZenoArgs),
    /// Simulated-annealing baseline on the fully penalized QUBO.
    BaselineSa(SaArgs),
    /// Write the three-cargo, two-position loading instance as JSON.
    GenCargo(GenArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem JSON file; defaults to the built-in cargo instance.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Lagrange multiplier for every constraint [default: Σ|objective| + 1].
    #[arg(long = "lambda")]
    lambda: Option<f64>,
    /// Dephasing strength.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Per-constraint representation, e.g. QAOA,ZENO,DEPHASE,... [default: all QAOA].
    #[arg(long)]
    assign: Option<String>,
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Zeno measurements per layer.
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value = "natural")]
    ordering: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
    /// Use coordinate search instead of the simplex.
    #[arg(long)]
    coordinate: bool,
    /// Simulate arithmetic gate by gate instead of with functional oracles.
    #[arg(long)]
    gate_level: bool,
    /// Report shot-sampled metrics at the optimized angles.
    #[arg(long)]
    shots: Option<usize>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also dump the gate-level circuit at the initial angles as JSON.
    #[arg(long)]
    circuit_json: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 40)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, default_value = "natural")]
    ordering: String,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LagrangeArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Ascending, comma-separated multipliers.
    #[arg(long, value_delimiter = ',', default_value = "1,5,9,13")]
    lambdas: Vec<f64>,
}

#[derive(Args)]
struct HistogramArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Histogram of the Zeno-filtered entry state instead of the circuit output.
    #[arg(long)]
    entry: bool,
}

#[derive(Args)]
struct ZenoArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64,128,256")]
    n_list: Vec<usize>,
    /// Evolution time.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    t: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SaArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 5000)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10.0)]
    t_start: f64,
    #[arg(long, default_value_t = 0.05)]
    t_end: f64,
    #[arg(long, default_value_t = 1)]
    flips_per_step: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    weights: Vec<i64>,
    #[arg(long, default_value_t = 2)]
    positions: usize,
    #[arg(long, default_value_t = 3)]
    capacity: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

impl ProblemArgs {
    fn load(&self) -> Result<(ConstrainedBinaryProblem, Multipliers)> {
        let problem = match &self.problem {
            Some(path) => ConstrainedBinaryProblem::load(Path::new(path))?,
            None => cargo_instance(&[1, 2, 3], 2, 3)?,
        };
        let lambda = self.lambda.unwrap_or_else(|| default_lambda(&problem));
        let mult = Multipliers::uniform(problem.n_constraints(), lambda, self.alpha)?;
        Ok((problem, mult))
    }
}

impl RunArgs {
    fn assignment(&self, problem: &ConstrainedBinaryProblem) -> Result<RepresentationAssignment> {
        let a = match &self.assign {
            Some(s) => s.parse::<RepresentationAssignment>()?,
            None => RepresentationAssignment::uniform(problem.n_constraints(), Representation::Qaoa),
        };
        a.check_len(problem.n_constraints())?;
        Ok(a)
    }

    fn mode(&self) -> Mode {
        if self.gate_level {
            Mode::Gate
        } else {
            Mode::Oracle
        }
    }

    fn optimizer(&self) -> Result<OptimizerConfig> {
        Ok(OptimizerConfig {
            max_iters: self.max_iters,
            exit_threshold: self.threshold,
            search: if self.coordinate {
                SearchMethod::CoordinateGrid
            } else {
                SearchMethod::NelderMead
            },
            seed: self.seed,
            init_params: LayerParams::uniform(self.p, self.gamma, self.beta, self.q)?,
            ..Default::default()
        })
    }

    fn sweep_config(&self) -> Result<SweepConfig> {
        Ok(SweepConfig {
            optimizer: self.optimizer()?,
            base_seed: self.seed,
            mode: self.mode(),
            shots: self.shots,
        })
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let run = &args.run;
    let (problem, mult) = run.problem.load()?;
    let assignment = run.assignment(&problem)?;
    let ordering: BlockOrdering = run.ordering.parse()?;
    let config = run.optimizer()?;
    let circuit = build_circuit(&problem, &assignment, &mult, &config.init_params, ordering, Mode::Gate)?;
    if let Some(path) = &args.circuit_json {
        std::fs::write(path, circuit.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    let stats = circuit_stats(&circuit)?;
    eprintln!(
        "circuit: {} qubits, {} clbits, {} non-local gates, depth {}, size {}",
        stats.n_qubits, stats.n_clbits, stats.non_local_gates, stats.depth, stats.size
    );
    let trace = optimize(&problem, &assignment, &mult, &config, ordering, run.mode())?;
    trace.write_csv(output(&run.out)?)?;
    let b = &trace.best;
    eprintln!(
        "{assignment}: {} iterations, best cost {:.6}, p_feasible {:.4}, p_optimal {:.4}, survival {:.4}, γ {:?}, β {:?}, {:.2}s",
        trace.records.len(),
        b.expected_cost,
        b.p_feasible,
        b.p_optimal,
        b.survival_prob,
        trace.best_params.gamma,
        trace.best_params.beta,
        trace.wall_time
    );
    Ok(())
}

fn sweep_family(args: SweepArgs) -> Result<()> {
    let (problem, mult) = args.problem.load()?;
    let mut optimizer = OptimizerConfig {
        max_iters: args.max_iters,
        ..Default::default()
    };
    optimizer.init_params.q_measurements = args.q;
    let config = SweepConfig {
        optimizer,
        base_seed: args.seed,
        shots: args.shots,
        ..Default::default()
    };
    let rows = run_family_sweep(&problem, &mult, &config, args.ordering.parse()?)?;
    write_family_csv(&rows, output(&args.out)?)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let total: f64 = rows.iter().map(|r| r.wall_time).sum();
    eprintln!("{} rows ({failed} with errors), {total:.1}s of row time", rows.len());
    Ok(())
}

fn sweep_lagrange(args: LagrangeArgs) -> Result<()> {
    let run = &args.run;
    let (problem, _) = run.problem.load()?;
    let assignment = run.assignment(&problem)?;
    let rows = lagrange_sweep(
        &problem,
        &assignment,
        &args.lambdas,
        run.problem.alpha,
        &run.sweep_config()?,
        run.ordering.parse()?,
    )?;
    write_lagrange_csv(&rows, output(&run.out)?)?;
    Ok(())
}

fn ordering(args: RunArgs) -> Result<()> {
    let (problem, mult) = args.problem.load()?;
    let assignment = args.assignment(&problem)?;
    let study = ordering_study(&problem, &assignment, &mult, &BlockOrdering::ALL, &args.sweep_config()?)?;
    study.write_csv(output(&args.out)?)?;
    eprintln!(
        "p_feasible spread {:.4}, p_optimal spread {:.4}",
        study.p_feasible_spread, study.p_optimal_spread
    );
    Ok(())
}

fn histogram(args: HistogramArgs) -> Result<()> {
    let run = &args.run;
    let (problem, mult) = run.problem.load()?;
    let assignment = run.assignment(&problem)?;
    let ordering: BlockOrdering = run.ordering.parse()?;
    let hist = if args.entry {
        let ev = hybrid_qopt::optimizer::Evaluator::new(&problem, &assignment, &mult, ordering, run.mode())?;
        hybrid_qopt::harness::VisitHistogram::from_state(ev.initial_state(), problem.n_vars())
    } else {
        let params = LayerParams::uniform(run.p, run.gamma, run.beta, run.q)?;
        state_visit_histogram(&problem, &assignment, &mult, &params, ordering, run.mode())?
    };
    hist.write_csv(output(&run.out)?)?;
    eprintln!("support {} of {}", hist.support, hist.probabilities.len());
    Ok(())
}

fn zeno(args: ZenoArgs) -> Result<()> {
    let rows = zeno_demo(&args.n_list, args.t)?;
    let mut out = output(&args.out)?;
    writeln!(out, "n,survival_empirical,survival_closed_form,survival_analytic")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.n, r.survival_empirical, r.survival_closed_form, r.survival_analytic
        )?;
    }
    Ok(())
}

fn baseline_sa(args: SaArgs) -> Result<()> {
    let (problem, mult) = args.problem.load()?;
    let schedule = AnnealSchedule {
        t_start: args.t_start,
        t_end: args.t_end,
        steps: args.steps,
        seed: args.seed,
        flips_per_step: args.flips_per_step,
    };
    let result = anneal(&problem, &mult, &schedule)?;
    result.write_csv(output(&args.out)?)?;
    let truth = brute_force_solve(&problem)?;
    let x = result.best_decision();
    eprintln!(
        "best cost {} at {}; feasible {}, optimal {}",
        result.best_cost,
        hybrid_qopt::sim::basis_string(x, problem.n_vars()),
        truth.feasible.contains(&x),
        truth.optimal.contains(&x)
    );
    Ok(())
}

fn gen_cargo(args: GenArgs) -> Result<()> {
    let problem = cargo_instance(&args.weights, args.positions, args.capacity)?;
    writeln!(output(&args.out)?, "{}", problem.to_json())?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Input(_)) | Some(Error::Shape(_)) | Some(Error::Layout(_)) => 2,
        Some(Error::Capacity(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::SweepFamily(a) => sweep_family(a),
        Command::SweepLagrange(a) => sweep_lagrange(a),
        Command::Ordering(a) => ordering(a),
        Command::Histogram(a) => histogram(a),
        Command::ZenoDemo(a) => zeno(a),
        Command::BaselineSa(a) => baseline_sa(a),
        Command::GenCargo(a) => gen_cargo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

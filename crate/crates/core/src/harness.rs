//! Batch experiments: the 3^n representation family, Lagrange sensitivity,
//! block-ordering comparison and state-visit histograms.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::Mode;
use crate::builder::{build_circuit, circuit_stats, BlockOrdering, CircuitStats};
use crate::error::{Error, Result};
use crate::optimizer::{csv_err, optimize_with, Evaluation, Evaluator, OptimizerConfig};
use crate::problem::{
    brute_force_solve, BruteForce, ConstrainedBinaryProblem, Multipliers, Representation,
    RepresentationAssignment,
};
use crate::sim::{basis_string, Statevector};

/// Most constraints a family sweep enumerates (3^8 = 6561 rows).
pub const MAX_SWEEP_CONSTRAINTS: usize = 8;

/// All `3^n` assignments, lexicographic with `QAOA < DEPHASE < ZENO` and
/// constraint 0 most significant.
pub fn enumerate_assignments(n_constraints: usize) -> Result<Vec<RepresentationAssignment>> {
    if n_constraints > MAX_SWEEP_CONSTRAINTS {
        return Err(Error::Capacity(format!(
            "{n_constraints} constraints exceed the sweep cap of {MAX_SWEEP_CONSTRAINTS}"
        )));
    }
    let total = 3usize.pow(n_constraints as u32);
    Ok((0..total)
        .map(|mut idx| {
            let mut reps = vec![Representation::Qaoa; n_constraints];
            for slot in reps.iter_mut().rev() {
                *slot = Representation::ALL[idx % 3];
                idx /= 3;
            }
            RepresentationAssignment(reps)
        })
        .collect())
}

/// Shared settings for harness runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub optimizer: OptimizerConfig,
    /// Row `i` optimizes with seed `base_seed + i`.
    pub base_seed: u64,
    /// Simulation mode for the optimizer's evaluations. Stats always come
    /// from the gate-level build.
    pub mode: Mode,
    /// Report shot-sampled metrics at the optimized angles instead of exact ones.
    pub shots: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            optimizer: OptimizerConfig {
                max_iters: 40,
                ..Default::default()
            },
            base_seed: 0,
            mode: Mode::Oracle,
            shots: None,
        }
    }
}

/// One row of a family sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub index: usize,
    pub assignment: RepresentationAssignment,
    pub stats: Option<CircuitStats>,
    pub metrics: Option<Evaluation>,
    pub wall_time: f64,
    pub error: Option<String>,
}

impl SweepResult {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &SweepResult) -> bool {
        self.index == other.index
            && self.assignment == other.assignment
            && self.stats == other.stats
            && self.metrics == other.metrics
            && self.error == other.error
    }
}

fn final_metrics(evaluator: &Evaluator, config: &SweepConfig, seed: u64) -> Result<Evaluation> {
    let optimizer = OptimizerConfig {
        seed,
        ..config.optimizer.clone()
    };
    let trace = optimize_with(evaluator, &optimizer)?;
    match config.shots {
        None => Ok(trace.best),
        Some(shots) => evaluator.sampled_metrics(&trace.best_params, shots, seed),
    }
}

/// Optimizes and measures a single assignment; failures land in the row.
pub fn run_sweep_row(
    problem: &ConstrainedBinaryProblem,
    mult: &Multipliers,
    config: &SweepConfig,
    ordering: BlockOrdering,
    truth: &BruteForce,
    index: usize,
    assignment: &RepresentationAssignment,
) -> SweepResult {
    let start = Instant::now();
    let stats = build_circuit(
        problem,
        assignment,
        mult,
        &config.optimizer.init_params,
        ordering,
        Mode::Gate,
    )
    .and_then(|c| circuit_stats(&c));
    let metrics = Evaluator::with_truth(problem, assignment, mult, ordering, config.mode, truth)
        .and_then(|ev| final_metrics(&ev, config, config.base_seed + index as u64));
    let error = match (&stats, &metrics) {
        (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
        _ => None,
    };
    SweepResult {
        index,
        assignment: assignment.clone(),
        stats: stats.ok(),
        metrics: metrics.ok(),
        wall_time: start.elapsed().as_secs_f64(),
        error,
    }
}

/// Runs every representation assignment of `problem`; rows come back in
/// enumeration order.
pub fn run_family_sweep(
    problem: &ConstrainedBinaryProblem,
    mult: &Multipliers,
    config: &SweepConfig,
    ordering: BlockOrdering,
) -> Result<Vec<SweepResult>> {
    let assignments = enumerate_assignments(problem.n_constraints())?;
    run_rows(problem, mult, config, ordering, &assignments.iter().enumerate().collect::<Vec<_>>())
}

/// Runs selected `(index, assignment)` rows; same results as in a full sweep.
pub fn run_rows(
    problem: &ConstrainedBinaryProblem,
    mult: &Multipliers,
    config: &SweepConfig,
    ordering: BlockOrdering,
    rows: &[(usize, &RepresentationAssignment)],
) -> Result<Vec<SweepResult>> {
    mult.validate()?;
    let truth = brute_force_solve(problem)?;
    Ok(rows
        .par_iter()
        .map(|&(i, a)| run_sweep_row(problem, mult, config, ordering, &truth, i, a))
        .collect())
}

/// `family.csv` with the sweep's standard columns.
pub fn write_family_csv<W: Write>(rows: &[SweepResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "assignment",
        "non_local",
        "qubits",
        "clbits",
        "depth",
        "width",
        "size",
        "params",
        "factors",
        "expected_cost",
        "p_feasible",
        "p_optimal",
        "survival",
        "wall_time_s",
        "error",
    ])
    .map_err(csv_err)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        let s = r.stats.as_ref();
        let m = r.metrics.as_ref();
        w.write_record([
            r.assignment.to_string(),
            opt(s.map(|s| s.non_local_gates.to_string())),
            opt(s.map(|s| s.n_qubits.to_string())),
            opt(s.map(|s| s.n_clbits.to_string())),
            opt(s.map(|s| s.depth.to_string())),
            opt(s.map(|s| s.width.to_string())),
            opt(s.map(|s| s.size.to_string())),
            opt(s.map(|s| s.n_parameters.to_string())),
            opt(s.map(|s| s.n_unitary_factors.to_string())),
            opt(m.map(|m| m.expected_cost.to_string())),
            opt(m.map(|m| m.p_feasible.to_string())),
            opt(m.map(|m| m.p_optimal.to_string())),
            opt(m.map(|m| m.survival_prob.to_string())),
            format!("{:.6}", r.wall_time),
            opt(r.error.clone()),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))?;
    Ok(())
}

/// Optimized metrics at one multiplier value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangeRow {
    pub lambda: f64,
    pub initial: Evaluation,
    pub best: Evaluation,
    pub iterations: usize,
}

/// Re-optimizes `assignment` with every λ_j set to each value in turn.
pub fn lagrange_sweep(
    problem: &ConstrainedBinaryProblem,
    assignment: &RepresentationAssignment,
    lambdas: &[f64],
    alpha: f64,
    config: &SweepConfig,
    ordering: BlockOrdering,
) -> Result<Vec<LagrangeRow>> {
    if lambdas.is_empty() {
        return Err(Error::Input("no λ values given".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Input("λ values must be positive".into()));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("λ values must be strictly ascending".into()));
    }
    let truth = brute_force_solve(problem)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let mult = Multipliers::uniform(problem.n_constraints(), lambda, alpha)?;
            let ev = Evaluator::with_truth(problem, assignment, &mult, ordering, config.mode, &truth)?;
            let optimizer = OptimizerConfig {
                seed: config.base_seed,
                ..config.optimizer.clone()
            };
            let trace = optimize_with(&ev, &optimizer)?;
            let best = match config.shots {
                None => trace.best,
                Some(shots) => ev.sampled_metrics(&trace.best_params, shots, config.base_seed)?,
            };
            Ok(LagrangeRow {
                lambda,
                initial: trace.initial().evaluation,
                best,
                iterations: trace.records.len(),
            })
        })
        .collect()
}

pub fn write_lagrange_csv<W: Write>(rows: &[LagrangeRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "iterations", "expected_cost", "p_feasible", "p_optimal", "survival"])
        .map_err(csv_err)?;
    for r in rows {
        let b = &r.best;
        w.write_record([
            r.lambda.to_string(),
            r.iterations.to_string(),
            b.expected_cost.to_string(),
            b.p_feasible.to_string(),
            b.p_optimal.to_string(),
            b.survival_prob.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))?;
    Ok(())
}

/// Marginal distribution over decision states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitHistogram {
    /// Basis string (variable 0 rightmost) → probability.
    pub probabilities: BTreeMap<String, f64>,
    /// States with probability above 1e-12.
    pub support: usize,
}

impl VisitHistogram {
    pub fn from_state(state: &Statevector, n_vars: usize) -> Self {
        let probabilities: BTreeMap<String, f64> = state
            .marginal_low(n_vars)
            .into_iter()
            .enumerate()
            .map(|(x, p)| (basis_string(x, n_vars), p))
            .collect();
        let support = probabilities.values().filter(|&&p| p > 1e-12).count();
        VisitHistogram {
            probabilities,
            support,
        }
    }

    pub fn total(&self) -> f64 {
        self.probabilities.values().sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state", "probability"]).map_err(csv_err)?;
        for (s, p) in &self.probabilities {
            w.write_record([s.clone(), p.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Input(e.to_string()))?;
        Ok(())
    }
}

/// Decision-state histogram of the circuit output at `params`.
pub fn state_visit_histogram(
    problem: &ConstrainedBinaryProblem,
    assignment: &RepresentationAssignment,
    mult: &Multipliers,
    params: &crate::builder::LayerParams,
    ordering: BlockOrdering,
    mode: Mode,
) -> Result<VisitHistogram> {
    let ev = Evaluator::new(problem, assignment, mult, ordering, mode)?;
    Ok(VisitHistogram::from_state(&ev.final_state(params)?, problem.n_vars()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingRow {
    pub ordering: BlockOrdering,
    pub stats: CircuitStats,
    pub best: Evaluation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingStudy {
    pub rows: Vec<OrderingRow>,
    /// max − min of p_feasible across orderings.
    pub p_feasible_spread: f64,
    pub p_optimal_spread: f64,
}

/// Same assignment and optimizer settings under each block ordering.
pub fn ordering_study(
    problem: &ConstrainedBinaryProblem,
    assignment: &RepresentationAssignment,
    mult: &Multipliers,
    orderings: &[BlockOrdering],
    config: &SweepConfig,
) -> Result<OrderingStudy> {
    if assignment.count(Representation::Dephase) == 0 || assignment.count(Representation::Zeno) == 0 {
        return Err(Error::Input(
            "ordering study needs at least one DEPHASE and one ZENO constraint".into(),
        ));
    }
    if orderings.is_empty() {
        return Err(Error::Input("no orderings given".into()));
    }
    let truth = brute_force_solve(problem)?;
    let rows = orderings
        .iter()
        .map(|&ordering| {
            let stats = circuit_stats(&build_circuit(
                problem,
                assignment,
                mult,
                &config.optimizer.init_params,
                ordering,
                Mode::Gate,
            )?)?;
            let ev = Evaluator::with_truth(problem, assignment, mult, ordering, config.mode, &truth)?;
            Ok(OrderingRow {
                ordering,
                stats,
                best: final_metrics(&ev, config, config.base_seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spread = |f: fn(&Evaluation) -> f64| {
        let vals = rows.iter().map(|r| f(&r.best));
        vals.clone().fold(f64::MIN, f64::max) - vals.fold(f64::MAX, f64::min)
    };
    Ok(OrderingStudy {
        p_feasible_spread: spread(|e| e.p_feasible),
        p_optimal_spread: spread(|e| e.p_optimal),
        rows,
    })
}

impl OrderingStudy {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "ordering",
            "non_local",
            "depth",
            "size",
            "expected_cost",
            "p_feasible",
            "p_optimal",
            "survival",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.ordering.to_string(),
                r.stats.non_local_gates.to_string(),
                r.stats.depth.to_string(),
                r.stats.size.to_string(),
                r.best.expected_cost.to_string(),
                r.best.p_feasible.to_string(),
                r.best.p_optimal.to_string(),
                r.best.survival_prob.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Input(e.to_string()))?;
        Ok(())
    }
}

//! Classical outer loop: exact expectation of the compiled Lagrange cost over
//! the circuit output, and a derivative-free search over `(γ, β)`.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::Mode;
use crate::builder::{build_circuit, prepare_initial_state, BlockOrdering, LayerParams, QubitLayout};
use crate::error::{Error, Result};
use crate::problem::{
    brute_force_solve, compile_qubo, BruteForce, ConstrainedBinaryProblem, Multipliers,
    RepresentationAssignment,
};
use crate::sim::Statevector;

/// Metrics of one circuit evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Expectation of the compiled QUBO over the decision+slack marginal.
    pub expected_cost: f64,
    /// Probability mass on decision states feasible for the original problem.
    pub p_feasible: f64,
    /// Probability mass on optimal decision states.
    pub p_optimal: f64,
    /// Retained probability across the circuit's Zeno projections.
    pub survival_prob: f64,
}

/// Everything about one (problem, assignment, multipliers) triple that does
/// not depend on the angles, so repeated evaluations stay cheap.
pub struct Evaluator<'a> {
    problem: &'a ConstrainedBinaryProblem,
    assignment: &'a RepresentationAssignment,
    mult: &'a Multipliers,
    ordering: BlockOrdering,
    mode: Mode,
    layout: QubitLayout,
    cost_table: Vec<f64>,
    feasible: Vec<bool>,
    optimal: Vec<bool>,
    initial: Statevector,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        problem: &'a ConstrainedBinaryProblem,
        assignment: &'a RepresentationAssignment,
        mult: &'a Multipliers,
        ordering: BlockOrdering,
        mode: Mode,
    ) -> Result<Self> {
        let truth = brute_force_solve(problem)?;
        Self::with_truth(problem, assignment, mult, ordering, mode, &truth)
    }

    /// Like [`Evaluator::new`] with a precomputed brute-force solution.
    pub fn with_truth(
        problem: &'a ConstrainedBinaryProblem,
        assignment: &'a RepresentationAssignment,
        mult: &'a Multipliers,
        ordering: BlockOrdering,
        mode: Mode,
        truth: &BruteForce,
    ) -> Result<Self> {
        let qubo = compile_qubo(problem, assignment, mult)?;
        let layout = QubitLayout::new(problem, assignment, &qubo)?;
        let initial = prepare_initial_state(problem, assignment, &layout, mode)?;
        let (feasible, optimal) = truth.masks();
        Ok(Evaluator {
            problem,
            assignment,
            mult,
            ordering,
            mode,
            layout,
            cost_table: qubo.value_table(),
            feasible,
            optimal,
            initial,
        })
    }

    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    /// The Zeno-feasible starting state.
    pub fn initial_state(&self) -> &Statevector {
        &self.initial
    }

    /// Output state of the circuit at `params`.
    pub fn final_state(&self, params: &LayerParams) -> Result<Statevector> {
        let circuit = build_circuit(
            self.problem,
            self.assignment,
            self.mult,
            params,
            self.ordering,
            self.mode,
        )?;
        let mut state = self.initial.clone();
        circuit.run(&mut state)?;
        Ok(state)
    }

    pub fn evaluate(&self, params: &LayerParams) -> Result<Evaluation> {
        let state = self.final_state(params)?;
        Ok(self.metrics(&state))
    }

    /// Metrics of an output state of this evaluator's circuit.
    pub fn metrics(&self, state: &Statevector) -> Evaluation {
        let marginal = state.marginal_low(self.layout.n_bits());
        self.metrics_from_marginal(&marginal, state.survival_prob() / self.initial.survival_prob())
    }

    /// Metrics from a (possibly sampled) distribution over decision+slack bits.
    pub fn metrics_from_marginal(&self, marginal: &[f64], survival_prob: f64) -> Evaluation {
        let dmask = (1usize << self.layout.n_vars) - 1;
        let mut e = Evaluation {
            expected_cost: 0.0,
            p_feasible: 0.0,
            p_optimal: 0.0,
            survival_prob,
        };
        for (x, &p) in marginal.iter().enumerate() {
            e.expected_cost += p * self.cost_table[x];
            if self.feasible[x & dmask] {
                e.p_feasible += p;
            }
            if self.optimal[x & dmask] {
                e.p_optimal += p;
            }
        }
        e.p_feasible = e.p_feasible.clamp(0.0, 1.0);
        e.p_optimal = e.p_optimal.clamp(0.0, 1.0);
        e
    }

    /// Metrics estimated from `shots` samples of the output state.
    pub fn sampled_metrics(&self, params: &LayerParams, shots: usize, seed: u64) -> Result<Evaluation> {
        let state = self.final_state(params)?;
        let counts = state.sample(shots, seed)?;
        let n_bits = self.layout.n_bits();
        let mut marginal = vec![0.0; 1 << n_bits];
        for (bits, count) in counts {
            let idx = usize::from_str_radix(&bits, 2).expect("sampler emits binary strings");
            marginal[idx & ((1 << n_bits) - 1)] += count as f64 / shots as f64;
        }
        Ok(self.metrics_from_marginal(
            &marginal,
            state.survival_prob() / self.initial.survival_prob(),
        ))
    }
}

/// One-shot evaluation of a parameter point.
pub fn evaluate_params(
    problem: &ConstrainedBinaryProblem,
    assignment: &RepresentationAssignment,
    mult: &Multipliers,
    params: &LayerParams,
    ordering: BlockOrdering,
    mode: Mode,
) -> Result<Evaluation> {
    Evaluator::new(problem, assignment, mult, ordering, mode)?.evaluate(params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    #[default]
    NelderMead,
    CoordinateGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop once consecutive accepted iterates differ in cost by less than this.
    pub exit_threshold: f64,
    pub search: SearchMethod,
    pub seed: u64,
    pub init_params: LayerParams,
    /// Initial simplex edge / coordinate step.
    pub initial_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 60,
            exit_threshold: 1e-6,
            search: SearchMethod::NelderMead,
            seed: 0,
            init_params: LayerParams::default(),
            initial_step: 0.1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Input("max_iters must be at least 1".into()));
        }
        if !(self.exit_threshold > 0.0) {
            return Err(Error::Input("exit_threshold must be positive".into()));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::Input("initial_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub params: LayerParams,
    pub evaluation: Evaluation,
    /// Lowest expected cost seen up to and including this iterate.
    pub best_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
    pub best_params: LayerParams,
    pub best: Evaluation,
    pub evaluations: usize,
    pub wall_time: f64,
}

impl OptimizationTrace {
    pub fn initial(&self) -> &TraceRecord {
        &self.records[0]
    }

    /// CSV with columns `iter,gamma_1..,beta_1..,expected_cost,p_feasible,p_optimal,survival_prob`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let p = self.best_params.p_layers();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iter".to_string()];
        header.extend((1..=p).map(|i| format!("gamma_{i}")));
        header.extend((1..=p).map(|i| format!("beta_{i}")));
        header.extend(
            ["expected_cost", "p_feasible", "p_optimal", "survival_prob"]
                .iter()
                .map(|s| s.to_string()),
        );
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![r.iter.to_string()];
            row.extend(r.params.to_vector().iter().map(|v| v.to_string()));
            let e = &r.evaluation;
            row.extend(
                [e.expected_cost, e.p_feasible, e.p_optimal, e.survival_prob]
                    .iter()
                    .map(|v| v.to_string()),
            );
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Input(e.to_string()))?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

/// Runs the configured search and records one trace entry per accepted iterate.
pub fn optimize(
    problem: &ConstrainedBinaryProblem,
    assignment: &RepresentationAssignment,
    mult: &Multipliers,
    config: &OptimizerConfig,
    ordering: BlockOrdering,
    mode: Mode,
) -> Result<OptimizationTrace> {
    let evaluator = Evaluator::new(problem, assignment, mult, ordering, mode)?;
    optimize_with(&evaluator, config)
}

/// [`optimize`] over a prepared evaluator.
pub fn optimize_with(evaluator: &Evaluator, config: &OptimizerConfig) -> Result<OptimizationTrace> {
    config.validate()?;
    let start = Instant::now();
    let mut search = Search::new(evaluator, config);
    let x0 = config.init_params.to_vector();
    let e0 = search.eval(&x0)?;
    search.accept(x0.clone(), e0);

    match config.search {
        SearchMethod::NelderMead => search.nelder_mead(x0, e0)?,
        SearchMethod::CoordinateGrid => search.coordinate(x0, e0)?,
    }

    let (best_x, best) = search.best.clone().expect("initial point recorded");
    Ok(OptimizationTrace {
        best_params: config.init_params.with_vector(&best_x),
        best,
        records: search.records,
        evaluations: search.evaluations,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

struct Search<'e, 'a> {
    evaluator: &'e Evaluator<'a>,
    config: &'e OptimizerConfig,
    records: Vec<TraceRecord>,
    best: Option<(Vec<f64>, Evaluation)>,
    evaluations: usize,
}

impl<'e, 'a> Search<'e, 'a> {
    fn new(evaluator: &'e Evaluator<'a>, config: &'e OptimizerConfig) -> Self {
        Search {
            evaluator,
            config,
            records: Vec::new(),
            best: None,
            evaluations: 0,
        }
    }

    fn eval(&mut self, x: &[f64]) -> Result<Evaluation> {
        self.evaluations += 1;
        let e = self.evaluator.evaluate(&self.config.init_params.with_vector(x))?;
        let better = self
            .best
            .as_ref()
            .is_none_or(|(_, b)| e.expected_cost < b.expected_cost);
        if better {
            self.best = Some((x.to_vec(), e));
        }
        Ok(e)
    }

    /// Appends a record; returns true once the exit criterion is met.
    fn accept(&mut self, x: Vec<f64>, e: Evaluation) -> bool {
        let best_cost = self.best.as_ref().map_or(e.expected_cost, |(_, b)| b.expected_cost);
        let done = self
            .records
            .last()
            .is_some_and(|prev| (prev.evaluation.expected_cost - e.expected_cost).abs() < self.config.exit_threshold);
        self.records.push(TraceRecord {
            iter: self.records.len(),
            params: self.config.init_params.with_vector(&x),
            evaluation: e,
            best_cost,
        });
        done || self.records.len() >= self.config.max_iters
    }

    fn finished(&self) -> bool {
        self.records.len() >= self.config.max_iters
    }

    fn nelder_mead(&mut self, x0: Vec<f64>, e0: Evaluation) -> Result<()> {
        if self.finished() {
            return Ok(());
        }
        let dim = x0.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.clone(), e0.expected_cost)];
        for i in 0..dim {
            let mut v = x0.clone();
            let jitter = rng.gen_range(0.75..1.25);
            v[i] += self.config.initial_step * jitter;
            let e = self.eval(&v)?;
            simplex.push((v, e.expected_cost));
        }

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let worst = simplex[dim].clone();
            let centroid: Vec<f64> = (0..dim)
                .map(|k| simplex[..dim].iter().map(|(v, _)| v[k]).sum::<f64>() / dim as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };

            let xr = along(-1.0);
            let er = self.eval(&xr)?;
            let (x_new, e_new) = if er.expected_cost < simplex[0].1 {
                let xe = along(-2.0);
                let ee = self.eval(&xe)?;
                if ee.expected_cost < er.expected_cost {
                    (xe, ee)
                } else {
                    (xr, er)
                }
            } else if er.expected_cost < simplex[dim - 1].1 {
                (xr, er)
            } else {
                let xc = if er.expected_cost < worst.1 {
                    along(-0.5)
                } else {
                    along(0.5)
                };
                let ec = self.eval(&xc)?;
                if ec.expected_cost < worst.1.min(er.expected_cost) {
                    (xc, ec)
                } else {
                    // shrink toward the best vertex; the accepted iterate is
                    // the best of the freshly evaluated vertices
                    let best = simplex[0].0.clone();
                    let mut fresh: Option<(Vec<f64>, Evaluation)> = None;
                    for vertex in simplex.iter_mut().skip(1) {
                        let v: Vec<f64> = best
                            .iter()
                            .zip(&vertex.0)
                            .map(|(b, x)| b + 0.5 * (x - b))
                            .collect();
                        let e = self.eval(&v)?;
                        *vertex = (v.clone(), e.expected_cost);
                        if fresh.as_ref().is_none_or(|(_, f)| e.expected_cost < f.expected_cost) {
                            fresh = Some((v, e));
                        }
                    }
                    let (v, e) = fresh.expect("simplex has at least two vertices");
                    if self.accept(v, e) {
                        return Ok(());
                    }
                    continue;
                }
            };
            simplex[dim] = (x_new.clone(), e_new.expected_cost);
            if self.accept(x_new, e_new) {
                return Ok(());
            }
        }
    }

    fn coordinate(&mut self, x0: Vec<f64>, e0: Evaluation) -> Result<()> {
        let dim = x0.len();
        let mut x = x0;
        let mut cost = e0.expected_cost;
        let mut step = vec![self.config.initial_step; dim];
        let mut sweeps = 1;
        while !self.finished() && sweeps < self.config.max_iters * 4 {
            sweeps += 1;
            let mut moved: Option<Evaluation> = None;
            for k in 0..dim {
                for dir in [1.0, -1.0] {
                    let mut cand = x.clone();
                    cand[k] += dir * step[k];
                    let e = self.eval(&cand)?;
                    if e.expected_cost < cost {
                        x = cand;
                        cost = e.expected_cost;
                        moved = Some(e);
                        break;
                    }
                }
            }
            match moved {
                Some(e) => {
                    if self.accept(x.clone(), e) {
                        return Ok(());
                    }
                }
                None => {
                    step.iter_mut().for_each(|s| *s /= 2.0);
                    if step.iter().all(|&s| s < 1e-9) {
                        return Ok(());
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{cargo_instance, Representation};

    fn setup() -> (ConstrainedBinaryProblem, Multipliers) {
        let p = cargo_instance(&[1, 2, 3], 2, 3).unwrap();
        let m = Multipliers::uniform(6, 13.0, 1.0).unwrap();
        (p, m)
    }

    #[test]
    fn zero_angles_give_uniform_feasibility() {
        let (p, m) = setup();
        let a = RepresentationAssignment::uniform(6, Representation::Qaoa);
        let params = LayerParams::uniform(1, 0.0, 0.0, 1).unwrap();
        let e = evaluate_params(&p, &a, &m, &params, BlockOrdering::Natural, Mode::Gate).unwrap();
        assert!((e.p_feasible - 9.0 / 64.0).abs() < 1e-12);
        assert!((e.p_optimal - 4.0 / 64.0).abs() < 1e-12);
        assert_eq!(e.survival_prob, 1.0);
    }

    #[test]
    fn zeno_preselection_lifts_feasibility() {
        let (p, m) = setup();
        let a = RepresentationAssignment::uniform(6, Representation::Qaoa).with(0, Representation::Zeno);
        let params = LayerParams::uniform(1, 0.0, 0.0, 1).unwrap();
        let e = evaluate_params(&p, &a, &m, &params, BlockOrdering::Natural, Mode::Oracle).unwrap();
        // 9 of the 12 weight-feasible decision states are fully feasible
        assert!((e.p_feasible - 9.0 / 12.0).abs() < 1e-9);
        assert!(e.p_feasible > 9.0 / 64.0);
    }

    #[test]
    fn all_qaoa_never_loses_survival() {
        let (p, m) = setup();
        let a = RepresentationAssignment::uniform(6, Representation::Qaoa);
        for (g, b) in [(0.3, 0.7), (-1.2, 2.0)] {
            let params = LayerParams::uniform(1, g, b, 2).unwrap();
            let e = evaluate_params(&p, &a, &m, &params, BlockOrdering::Natural, Mode::Oracle).unwrap();
            assert_eq!(e.survival_prob, 1.0);
        }
    }

    #[test]
    fn single_iteration_is_initial_point() {
        let (p, m) = setup();
        let a = RepresentationAssignment::uniform(6, Representation::Qaoa);
        let config = OptimizerConfig {
            max_iters: 1,
            ..Default::default()
        };
        let t = optimize(&p, &a, &m, &config, BlockOrdering::Natural, Mode::Oracle).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].params, config.init_params);
        assert_eq!(t.best_params, config.init_params);
    }

    #[test]
    fn config_validation() {
        let bad = OptimizerConfig {
            exit_threshold: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn coordinate_search_improves() {
        let (p, m) = setup();
        let a = RepresentationAssignment::uniform(6, Representation::Qaoa);
        let config = OptimizerConfig {
            max_iters: 15,
            search: SearchMethod::CoordinateGrid,
            ..Default::default()
        };
        let t = optimize(&p, &a, &m, &config, BlockOrdering::Natural, Mode::Oracle).unwrap();
        assert!(t.best.expected_cost <= t.initial().evaluation.expected_cost);
        for w in t.records.windows(2) {
            assert!(w[1].best_cost <= w[0].best_cost);
        }
    }

    #[test]
    fn trace_csv_header() {
        let (p, m) = setup();
        let a = RepresentationAssignment::uniform(6, Representation::Qaoa);
        let config = OptimizerConfig {
            max_iters: 3,
            ..Default::default()
        };
        let t = optimize(&p, &a, &m, &config, BlockOrdering::Natural, Mode::Oracle).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,gamma_1,beta_1,expected_cost,p_feasible,p_optimal,survival_prob\n"));
        assert_eq!(text.lines().count(), t.records.len() + 1);
    }
}

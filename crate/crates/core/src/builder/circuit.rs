use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::layers::{
    build_dephasing_layer, build_phase_return, build_zeno_filter, build_zeno_layer,
    phase_return_oracle,
};
use crate::arith::{required_width, CostRegisterLayout, Mode};
use crate::error::{Error, Result};
use crate::problem::{
    compile_qubo, qubo_to_ising, ConstrainedBinaryProblem, Multipliers, Qubo, Representation,
    RepresentationAssignment,
};
use crate::sim::{dump_json, Gate, Instruction, Statevector, MAX_QUBITS};

/// Order in which dephasing and Zeno blocks follow the phase return.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockOrdering {
    /// Constraint index order regardless of representation.
    #[default]
    Natural,
    ZenoFirst,
    DephaseFirst,
}

impl BlockOrdering {
    pub const ALL: [BlockOrdering; 3] = [
        BlockOrdering::Natural,
        BlockOrdering::ZenoFirst,
        BlockOrdering::DephaseFirst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlockOrdering::Natural => "natural",
            BlockOrdering::ZenoFirst => "zeno_first",
            BlockOrdering::DephaseFirst => "dephase_first",
        }
    }

    /// Non-QAOA constraint indices in block order.
    pub fn arrange(self, assignment: &RepresentationAssignment) -> Vec<usize> {
        let zeno = assignment.indices_of(Representation::Zeno);
        let dephase = assignment.indices_of(Representation::Dephase);
        match self {
            BlockOrdering::Natural => (0..assignment.len())
                .filter(|&j| assignment.get(j) != Representation::Qaoa)
                .collect(),
            BlockOrdering::ZenoFirst => zeno.into_iter().chain(dephase).collect(),
            BlockOrdering::DephaseFirst => dephase.into_iter().chain(zeno).collect(),
        }
    }
}

impl fmt::Display for BlockOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlockOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "natural" => Ok(BlockOrdering::Natural),
            "zeno_first" => Ok(BlockOrdering::ZenoFirst),
            "dephase_first" | "dephasing_first" => Ok(BlockOrdering::DephaseFirst),
            other => Err(Error::Input(format!("unknown ordering '{other}'"))),
        }
    }
}

/// Variational angles: one `(γ, β)` pair per layer, plus the number of Zeno
/// measurements per layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub q_measurements: usize,
}

impl LayerParams {
    pub fn new(gamma: Vec<f64>, beta: Vec<f64>, q_measurements: usize) -> Result<Self> {
        if gamma.is_empty() || gamma.len() != beta.len() {
            return Err(Error::Input(format!(
                "need P ≥ 1 matching angles, got {} γ and {} β",
                gamma.len(),
                beta.len()
            )));
        }
        if q_measurements == 0 {
            return Err(Error::Input("Q must be at least 1".into()));
        }
        Ok(LayerParams {
            gamma,
            beta,
            q_measurements,
        })
    }

    /// `P` layers all starting at the same angles.
    pub fn uniform(p_layers: usize, gamma: f64, beta: f64, q_measurements: usize) -> Result<Self> {
        Self::new(vec![gamma; p_layers], vec![beta; p_layers], q_measurements)
    }

    pub fn p_layers(&self) -> usize {
        self.gamma.len()
    }

    /// `[γ_1..γ_P, β_1..β_P]`.
    pub fn to_vector(&self) -> Vec<f64> {
        self.gamma.iter().chain(&self.beta).copied().collect()
    }

    pub fn with_vector(&self, v: &[f64]) -> Self {
        let p = self.p_layers();
        LayerParams {
            gamma: v[..p].to_vec(),
            beta: v[p..2 * p].to_vec(),
            q_measurements: self.q_measurements,
        }
    }
}

impl Default for LayerParams {
    fn default() -> Self {
        LayerParams::uniform(1, 0.1, 0.1, 1).expect("valid defaults")
    }
}

/// Qubit roles: decision bits, QAOA slack bits, then one ancilla pool of
/// cost bits plus a flag shared by every dephased or Zeno constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitLayout {
    pub n_vars: usize,
    pub n_slack: usize,
    /// Shared cost register (least significant first); empty when no
    /// constraint needs arithmetic.
    pub cost_pool: Vec<usize>,
    pub flag: Option<usize>,
    /// Per-constraint register width (`None` for QAOA constraints).
    pub widths: Vec<Option<usize>>,
}

impl QubitLayout {
    pub fn new(
        problem: &ConstrainedBinaryProblem,
        assignment: &RepresentationAssignment,
        qubo: &Qubo,
    ) -> Result<Self> {
        assignment.check_len(problem.n_constraints())?;
        let n_bits = qubo.n_bits;
        let widths = problem
            .constraints
            .iter()
            .zip(&assignment.0)
            .map(|(c, r)| match r {
                Representation::Qaoa => Ok(None),
                _ => required_width(&c.coeffs, c.bound).map(Some),
            })
            .collect::<Result<Vec<_>>>()?;
        let pool = widths.iter().flatten().copied().max().unwrap_or(0);
        let (cost_pool, flag) = if pool > 0 {
            ((n_bits..n_bits + pool).collect(), Some(n_bits + pool))
        } else {
            (Vec::new(), None)
        };
        let layout = QubitLayout {
            n_vars: problem.n_vars(),
            n_slack: n_bits - problem.n_vars(),
            cost_pool,
            flag,
            widths,
        };
        if layout.n_qubits() > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "circuit needs {} qubits, limit is {MAX_QUBITS}",
                layout.n_qubits()
            )));
        }
        Ok(layout)
    }

    pub fn n_bits(&self) -> usize {
        self.n_vars + self.n_slack
    }

    pub fn n_qubits(&self) -> usize {
        self.n_bits() + self.cost_pool.len() + usize::from(self.flag.is_some())
    }

    pub fn decision(&self) -> Range<usize> {
        0..self.n_vars
    }

    pub fn slack(&self) -> Range<usize> {
        self.n_vars..self.n_bits()
    }

    pub fn ancillas(&self) -> Vec<usize> {
        self.cost_pool.iter().copied().chain(self.flag).collect()
    }

    /// Register for constraint `j`: the decision qubits it touches, the low
    /// `width_j` bits of the pool, and the shared flag.
    pub fn register(&self, problem: &ConstrainedBinaryProblem, j: usize) -> Result<CostRegisterLayout> {
        let width = self.widths[j].ok_or_else(|| {
            Error::Layout(format!("constraint {j} is QAOA-assigned and has no register"))
        })?;
        let decision = problem.constraints[j]
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(i, _)| i)
            .collect();
        CostRegisterLayout::new(
            decision,
            self.cost_pool[..width].to_vec(),
            self.flag.expect("pool exists whenever a width does"),
        )
    }
}

/// A labelled contiguous stretch of a circuit's instruction list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub label: String,
    pub range: Range<usize>,
}

/// Full hybrid circuit (without initial-state preparation).
#[derive(Clone, Debug)]
pub struct HybridCircuit {
    pub layout: QubitLayout,
    pub ops: Vec<Instruction>,
    pub blocks: Vec<Block>,
    pub ordering: BlockOrdering,
    pub mode: Mode,
    pub n_parameters: usize,
    pub qubo: Qubo,
}

impl HybridCircuit {
    pub fn n_qubits(&self) -> usize {
        self.layout.n_qubits()
    }

    /// Positions and qubits of the Zeno projections.
    pub fn projections(&self) -> Vec<(usize, usize)> {
        self.ops
            .iter()
            .enumerate()
            .filter_map(|(i, op)| match op {
                Instruction::Project { qubit, .. } => Some((i, *qubit)),
                _ => None,
            })
            .collect()
    }

    pub fn run(&self, state: &mut Statevector) -> Result<()> {
        if state.n_qubits() != self.n_qubits() {
            return Err(Error::Shape(format!(
                "circuit has {} qubits, state has {}",
                self.n_qubits(),
                state.n_qubits()
            )));
        }
        state.run(&self.ops)
    }

    pub fn to_json(&self) -> String {
        dump_json(&self.ops)
    }
}

/// Assembles the layered circuit.
///
/// Per layer: phase return of the compiled QUBO at `γ_p`; dephasing and Zeno
/// blocks in `ordering`; then the transverse mixer `RX(β_p)` on slack qubits,
/// and on decision qubits too unless Zeno layers own the decision mixing.
/// With `k` Zeno constraints each Zeno layer mixes decision qubits by `β_p/k`
/// in total, split over its `Q` sub-blocks.
pub fn build_circuit(
    problem: &ConstrainedBinaryProblem,
    assignment: &RepresentationAssignment,
    mult: &Multipliers,
    params: &LayerParams,
    ordering: BlockOrdering,
    mode: Mode,
) -> Result<HybridCircuit> {
    let qubo = compile_qubo(problem, assignment, mult)?;
    let ising = qubo_to_ising(&qubo)?;
    let layout = QubitLayout::new(problem, assignment, &qubo)?;
    let order = ordering.arrange(assignment);
    let registers = order
        .iter()
        .map(|&j| layout.register(problem, j).map(|r| (j, r)))
        .collect::<Result<Vec<_>>>()?;
    let n_zeno = assignment.count(Representation::Zeno);
    let decision: Vec<usize> = layout.decision().collect();

    let mut ops = Vec::new();
    let mut blocks = Vec::new();
    let mut push_block = |label: String, body: Vec<Instruction>, ops: &mut Vec<Instruction>| {
        let start = ops.len();
        ops.extend(body);
        blocks.push(Block {
            label,
            range: start..ops.len(),
        });
    };

    for p in 0..params.p_layers() {
        let (gamma, beta) = (params.gamma[p], params.beta[p]);
        let phase = match mode {
            Mode::Gate => build_phase_return(&ising, gamma),
            Mode::Oracle => phase_return_oracle(&ising, gamma),
        };
        push_block("phase_return".into(), phase, &mut ops);

        for (j, reg) in &registers {
            let con = &problem.constraints[*j];
            let name = problem.constraint_label(*j);
            match assignment.get(*j) {
                Representation::Dephase => push_block(
                    format!("dephase:{name}"),
                    build_dephasing_layer(con, reg, mult.alpha, gamma, mode)?,
                    &mut ops,
                ),
                Representation::Zeno => {
                    let (body, _) = build_zeno_layer(
                        con,
                        reg,
                        beta / n_zeno as f64,
                        params.q_measurements,
                        &decision,
                        mode,
                    )?;
                    push_block(format!("zeno:{name}"), body, &mut ops)
                }
                Representation::Qaoa => unreachable!("arrange skips QAOA constraints"),
            }
        }

        let mixed = layout
            .slack()
            .chain(if n_zeno == 0 { layout.decision() } else { 0..0 });
        let mixer = mixed.map(|q| Gate::Rx(q, beta).into()).collect();
        push_block("mixer".into(), mixer, &mut ops);
    }

    Ok(HybridCircuit {
        layout,
        ops,
        blocks,
        ordering,
        mode,
        n_parameters: 2 * params.p_layers(),
        qubo,
    })
}

/// Uniform superposition over decision and slack qubits, post-selected onto
/// the subspace satisfying every Zeno-assigned constraint. Ancillas end in `|0⟩`.
///
/// The returned state's survival probability is the retained fraction.
pub fn prepare_initial_state(
    problem: &ConstrainedBinaryProblem,
    assignment: &RepresentationAssignment,
    layout: &QubitLayout,
    mode: Mode,
) -> Result<Statevector> {
    assignment.check_len(problem.n_constraints())?;
    let mut state = Statevector::new(layout.n_qubits())?;
    for q in 0..layout.n_bits() {
        state.apply(&Gate::H(q))?;
    }
    for j in assignment.indices_of(Representation::Zeno) {
        let reg = layout.register(problem, j)?;
        state.run(&build_zeno_filter(&problem.constraints[j], &reg, mode)?)?;
    }
    Ok(state)
}

use std::sync::Arc;

use crate::arith::{build_comparator, build_cost_adder, build_uncompute, CostRegisterLayout, Mode};
use crate::error::Result;
use crate::problem::{Constraint, IsingCoeffs};
use crate::sim::{read_register, Gate, Instruction, Oracle};

/// `exp(−iγ(H − identity))` for the Ising Hamiltonian `H`.
///
/// One `RZ(−2γ·h_i)` per linear term (the minus sign because `s_i = −Z_i`)
/// and one `RZZ(2γ·J_ij)` per coupling. The identity term is a global phase
/// and is dropped.
pub fn build_phase_return(ising: &IsingCoeffs, gamma: f64) -> Vec<Instruction> {
    let mut out: Vec<Instruction> = ising
        .z
        .iter()
        .map(|(&i, &h)| Gate::Rz(i, -2.0 * gamma * h).into())
        .collect();
    out.extend(
        ising
            .zz
            .iter()
            .map(|(&(i, j), &k)| Gate::Rzz(i, j, 2.0 * gamma * k).into()),
    );
    out
}

/// Oracle twin of [`build_phase_return`]: one diagonal pass over the
/// first `ising.n` qubits.
pub fn phase_return_oracle(ising: &IsingCoeffs, gamma: f64) -> Vec<Instruction> {
    if ising.is_zero() {
        return Vec::new();
    }
    let n = ising.n;
    let table: Arc<Vec<f64>> = Arc::new(
        (0..1usize << n)
            .map(|x| ising.evaluate(x) - ising.identity)
            .collect(),
    );
    let mask = (1usize << n) - 1;
    vec![Gate::Oracle(Oracle::Diagonal {
        label: "phase_return".into(),
        qubits: (0..n).collect(),
        phase: Arc::new(move |x| table[x & mask]),
        sign: -gamma,
    })
    .into()]
}

/// Weights of `constraint` on the register's decision qubits.
fn register_weights(constraint: &Constraint, reg: &CostRegisterLayout) -> Vec<i64> {
    reg.decision_qubits.iter().map(|&q| constraint.coeffs[q]).collect()
}

/// Adder followed by comparator; the flag ends up marking `cost > bound`.
pub(crate) fn compute_flag(
    constraint: &Constraint,
    reg: &CostRegisterLayout,
    mode: Mode,
) -> Result<Vec<Instruction>> {
    let mut ops = vec![Instruction::RequireClean {
        qubits: reg.ancillas(),
        label: "cost register".into(),
    }];
    ops.extend(build_cost_adder(&register_weights(constraint, reg), reg, mode)?);
    ops.extend(build_comparator(reg, constraint.bound, mode)?);
    Ok(ops)
}

/// Penalty dephasing for one constraint.
///
/// Adder, comparator, then `exp(−iθα(cost − c))` on flagged branches, then
/// the inverse comparator and adder. Net effect on decision state `z`:
/// `exp(−iθα·max(0, cost(z) − c))`, ancillas restored.
pub fn build_dephasing_layer(
    constraint: &Constraint,
    reg: &CostRegisterLayout,
    alpha: f64,
    theta: f64,
    mode: Mode,
) -> Result<Vec<Instruction>> {
    let forward = compute_flag(constraint, reg, mode)?;
    let strength = theta * alpha;
    let c = constraint.bound;
    let mut ops = forward.clone();
    match mode {
        Mode::Gate => {
            for (k, &q) in reg.cost_qubits.iter().enumerate() {
                ops.push(Gate::CPhase(reg.flag_qubit, q, -strength * (1u64 << k) as f64).into());
            }
            ops.push(Gate::Phase(reg.flag_qubit, strength * c as f64).into());
        }
        Mode::Oracle => {
            let cost = reg.cost_qubits.clone();
            let flag = reg.flag_qubit;
            ops.push(
                Gate::Oracle(Oracle::Diagonal {
                    label: "dephase".into(),
                    qubits: reg.ancillas(),
                    phase: Arc::new(move |x| {
                        if x >> flag & 1 == 1 {
                            read_register(x, &cost) as f64 - c as f64
                        } else {
                            0.0
                        }
                    }),
                    sign: -strength,
                })
                .into(),
            );
        }
    }
    ops.extend(build_uncompute(&forward)?);
    Ok(ops)
}

/// Zeno layer for one constraint: `q_measurements` repetitions of
/// `[RX(β/Q) on mixer qubits; adder; comparator; project flag → 0; uncompute]`.
///
/// Returns the instructions and the positions of the projections within them.
pub fn build_zeno_layer(
    constraint: &Constraint,
    reg: &CostRegisterLayout,
    beta: f64,
    q_measurements: usize,
    mixer_qubits: &[usize],
    mode: Mode,
) -> Result<(Vec<Instruction>, Vec<usize>)> {
    let q_measurements = q_measurements.max(1);
    let forward = compute_flag(constraint, reg, mode)?;
    let backward = build_uncompute(&forward)?;
    let angle = beta / q_measurements as f64;
    let mut ops = Vec::new();
    let mut projections = Vec::with_capacity(q_measurements);
    for _ in 0..q_measurements {
        ops.extend(mixer_qubits.iter().map(|&q| Instruction::Gate(Gate::Rx(q, angle))));
        ops.extend(forward.iter().cloned());
        projections.push(ops.len());
        ops.push(Instruction::Project {
            qubit: reg.flag_qubit,
            outcome: false,
        });
        ops.extend(backward.iter().cloned());
    }
    Ok((ops, projections))
}

/// Adder, comparator, projection onto the feasible flag, uncompute.
pub fn build_zeno_filter(
    constraint: &Constraint,
    reg: &CostRegisterLayout,
    mode: Mode,
) -> Result<Vec<Instruction>> {
    let forward = compute_flag(constraint, reg, mode)?;
    let mut ops = forward.clone();
    ops.push(Instruction::Project {
        qubit: reg.flag_qubit,
        outcome: false,
    });
    ops.extend(build_uncompute(&forward)?);
    Ok(ops)
}

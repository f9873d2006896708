use serde::{Deserialize, Serialize};

use super::circuit::HybridCircuit;
use super::layers::build_phase_return;
use crate::arith::Mode;
use crate::error::{Error, Result};
use crate::problem::qubo_to_ising;
use crate::sim::Instruction;

/// Complexity measures of a gate-level circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    /// Gates acting on two or more qubits.
    pub non_local_gates: usize,
    pub n_qubits: usize,
    /// One classical bit per projection site.
    pub n_clbits: usize,
    /// Longest chain of operations sharing qubits.
    pub depth: usize,
    pub width: usize,
    /// Gates plus projections.
    pub size: usize,
    pub n_parameters: usize,
    /// Connected components of the qubit interaction graph, idle qubits included.
    pub n_unitary_factors: usize,
}

/// Statistics of a GATE-mode hybrid circuit.
pub fn circuit_stats(circuit: &HybridCircuit) -> Result<CircuitStats> {
    let mut stats = ops_stats(&circuit.ops, circuit.n_qubits())?;
    stats.n_parameters = circuit.n_parameters;
    Ok(stats)
}

/// Statistics at the granularity of an undecomposed circuit listing: each
/// adder, comparator and penalty-phase subroutine counts as one composite
/// instruction, while the phase return and mixer stay gate-level.
///
/// Takes an ORACLE-mode circuit. Supplementary to [`circuit_stats`], which
/// is the honest gate count.
pub fn composite_stats(circuit: &HybridCircuit) -> Result<CircuitStats> {
    if circuit.mode != Mode::Oracle {
        return Err(Error::Input("composite stats need an ORACLE-mode circuit".into()));
    }
    let ising = qubo_to_ising(&circuit.qubo)?;
    let mut ops = Vec::with_capacity(circuit.ops.len());
    for block in &circuit.blocks {
        if block.label == "phase_return" {
            ops.extend(build_phase_return(&ising, 1.0));
        } else {
            ops.extend_from_slice(&circuit.ops[block.range.clone()]);
        }
    }
    let mut stats = count(&ops, circuit.n_qubits(), true)?;
    stats.n_parameters = circuit.n_parameters;
    Ok(stats)
}

/// Statistics of a bare instruction list over `n_qubits` qubits.
///
/// Fails if the list contains oracle gates.
pub fn ops_stats(ops: &[Instruction], n_qubits: usize) -> Result<CircuitStats> {
    count(ops, n_qubits, false)
}

fn count(ops: &[Instruction], n_qubits: usize, composites: bool) -> Result<CircuitStats> {
    let mut level = vec![0usize; n_qubits];
    let mut factors = UnionFind::new(n_qubits);
    let (mut size, mut non_local, mut clbits) = (0, 0, 0);
    for op in ops {
        match op {
            Instruction::RequireClean { .. } => continue,
            Instruction::Gate(g) if g.is_oracle() && !composites => {
                return Err(Error::StatsUnavailable(
                    "oracle gates have no gate-level count".into(),
                ))
            }
            Instruction::Project { .. } => clbits += 1,
            Instruction::Gate(_) => {}
        }
        let qubits = op.qubits();
        if let Some(&q) = qubits.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::Shape(format!("qubit {q} outside {n_qubits}-qubit circuit")));
        }
        size += 1;
        if qubits.len() >= 2 {
            non_local += 1;
            for w in qubits.windows(2) {
                factors.union(w[0], w[1]);
            }
        }
        let d = qubits.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
        for &q in &qubits {
            level[q] = d;
        }
    }
    Ok(CircuitStats {
        non_local_gates: non_local,
        n_qubits,
        n_clbits: clbits,
        depth: level.iter().copied().max().unwrap_or(0),
        width: n_qubits + clbits,
        size,
        n_parameters: 0,
        n_unitary_factors: factors.components(),
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }

    fn components(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Gate;

    #[test]
    fn empty_circuit() {
        let s = ops_stats(&[], 3).unwrap();
        assert_eq!((s.size, s.depth, s.width, s.n_unitary_factors), (0, 0, 3, 3));
    }

    #[test]
    fn single_cnot() {
        let s = ops_stats(
            &[Gate::Cnot {
                control: 0,
                target: 1,
            }
            .into()],
            2,
        )
        .unwrap();
        assert_eq!(
            (s.non_local_gates, s.depth, s.size, s.n_unitary_factors),
            (1, 1, 1, 1)
        );
    }

    #[test]
    fn depth_follows_qubit_overlap() {
        let ops: Vec<Instruction> = vec![
            Gate::H(0).into(),
            Gate::H(1).into(),
            Gate::Cnot {
                control: 0,
                target: 1,
            }
            .into(),
            Gate::H(2).into(),
            Instruction::Project {
                qubit: 1,
                outcome: false,
            },
        ];
        let s = ops_stats(&ops, 3).unwrap();
        assert_eq!(s.depth, 3);
        assert_eq!(s.size, 5);
        assert_eq!(s.n_clbits, 1);
        assert_eq!(s.width, 4);
        assert_eq!(s.n_unitary_factors, 2);
        assert!(s.size >= s.depth);
    }
}

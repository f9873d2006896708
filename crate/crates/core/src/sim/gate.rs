use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phase function over basis indices used by [`Oracle::Diagonal`].
pub type PhaseFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// Classical reversible functions applied directly to basis states.
///
/// These are the functional twins of the gate-level arithmetic blocks. They
/// have no honest gate count, so circuit statistics refuse them.
#[derive(Clone)]
pub enum Oracle {
    /// `register += Σ weights[i]·x[controls[i]]` modulo `2^register.len()`
    /// (or `-=` when `subtract` is set).
    WeightedAdd {
        controls: Vec<usize>,
        weights: Vec<u64>,
        register: Vec<usize>,
        subtract: bool,
    },
    /// `flag ^= [value(register) > threshold]`.
    Compare {
        register: Vec<usize>,
        flag: usize,
        threshold: i64,
    },
    /// Multiplies amplitude `z` by `exp(i·sign·phase(z))`.
    Diagonal {
        label: String,
        qubits: Vec<usize>,
        phase: PhaseFn,
        sign: f64,
    },
}

impl Oracle {
    pub fn label(&self) -> &str {
        match self {
            Oracle::WeightedAdd { subtract: false, .. } => "adder",
            Oracle::WeightedAdd { subtract: true, .. } => "adder_inverse",
            Oracle::Compare { .. } => "comparator",
            Oracle::Diagonal { label, .. } => label,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Oracle::WeightedAdd {
                controls, register, ..
            } => controls.iter().chain(register).copied().collect(),
            Oracle::Compare { register, flag, .. } => {
                register.iter().copied().chain(std::iter::once(*flag)).collect()
            }
            Oracle::Diagonal { qubits, .. } => qubits.clone(),
        }
    }

    pub fn inverse(&self) -> Oracle {
        match self {
            Oracle::WeightedAdd {
                controls,
                weights,
                register,
                subtract,
            } => Oracle::WeightedAdd {
                controls: controls.clone(),
                weights: weights.clone(),
                register: register.clone(),
                subtract: !subtract,
            },
            Oracle::Compare { .. } => self.clone(),
            Oracle::Diagonal {
                label,
                qubits,
                phase,
                sign,
            } => Oracle::Diagonal {
                label: label.clone(),
                qubits: qubits.clone(),
                phase: Arc::clone(phase),
                sign: -sign,
            },
        }
    }

    /// Image of a basis index under a permutation oracle (identity for diagonal ones).
    pub(crate) fn permute(&self, index: usize) -> usize {
        match self {
            Oracle::WeightedAdd {
                controls,
                weights,
                register,
                subtract,
            } => {
                let width = register.len();
                let modulus = 1u64 << width;
                let mut sum = 0u64;
                for (&c, &w) in controls.iter().zip(weights) {
                    if index >> c & 1 == 1 {
                        sum = (sum + w % modulus) % modulus;
                    }
                }
                let value = read_register(index, register);
                let next = if *subtract {
                    (value + modulus - sum) % modulus
                } else {
                    (value + sum) % modulus
                };
                write_register(index, register, next)
            }
            Oracle::Compare {
                register,
                flag,
                threshold,
            } => {
                if read_register(index, register) as i64 > *threshold {
                    index ^ (1 << flag)
                } else {
                    index
                }
            }
            Oracle::Diagonal { .. } => index,
        }
    }
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Oracle::WeightedAdd {
                controls,
                weights,
                register,
                subtract,
            } => f
                .debug_struct("WeightedAdd")
                .field("controls", controls)
                .field("weights", weights)
                .field("register", register)
                .field("subtract", subtract)
                .finish(),
            Oracle::Compare {
                register,
                flag,
                threshold,
            } => f
                .debug_struct("Compare")
                .field("register", register)
                .field("flag", flag)
                .field("threshold", threshold)
                .finish(),
            Oracle::Diagonal {
                label, qubits, sign, ..
            } => f
                .debug_struct("Diagonal")
                .field("label", label)
                .field("qubits", qubits)
                .field("sign", sign)
                .finish_non_exhaustive(),
        }
    }
}

/// Integer value held by `register` (register[0] is the least significant bit).
pub fn read_register(index: usize, register: &[usize]) -> u64 {
    register
        .iter()
        .enumerate()
        .fold(0u64, |acc, (k, &q)| acc | (((index >> q) & 1) as u64) << k)
}

pub(crate) fn write_register(index: usize, register: &[usize], value: u64) -> usize {
    register.iter().enumerate().fold(index, |acc, (k, &q)| {
        let bit = ((value >> k) & 1) as usize;
        (acc & !(1 << q)) | (bit << q)
    })
}

/// Gate set. Angles in radians.
///
/// Conventions: `Rz(θ) = diag(e^{-iθ/2}, e^{iθ/2})`, `Rx(θ) = e^{-iθX/2}`,
/// `Rzz(θ) = e^{-iθ/2·Z⊗Z}`, `Phase(θ) = diag(1, e^{iθ})`, and `CPhase(θ)`
/// multiplies the `|11⟩` component by `e^{iθ}`.
#[derive(Clone, Debug)]
pub enum Gate {
    H(usize),
    X(usize),
    Rx(usize, f64),
    Rz(usize, f64),
    Phase(usize, f64),
    Rzz(usize, usize, f64),
    Cnot { control: usize, target: usize },
    CPhase(usize, usize, f64),
    Mcx { controls: Vec<usize>, target: usize },
    Oracle(Oracle),
}

/// Discriminant of [`Gate`], used for dumps and statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateKind {
    H,
    X,
    Rx,
    Rz,
    Phase,
    Rzz,
    Cnot,
    Cphase,
    Mcx,
    DiagonalOracle,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Rx => "RX",
            GateKind::Rz => "RZ",
            GateKind::Phase => "PHASE",
            GateKind::Rzz => "RZZ",
            GateKind::Cnot => "CNOT",
            GateKind::Cphase => "CPHASE",
            GateKind::Mcx => "MCX",
            GateKind::DiagonalOracle => "DIAGONAL_ORACLE",
        }
    }
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::H(_) => GateKind::H,
            Gate::X(_) => GateKind::X,
            Gate::Rx(..) => GateKind::Rx,
            Gate::Rz(..) => GateKind::Rz,
            Gate::Phase(..) => GateKind::Phase,
            Gate::Rzz(..) => GateKind::Rzz,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::CPhase(..) => GateKind::Cphase,
            Gate::Mcx { .. } => GateKind::Mcx,
            Gate::Oracle(_) => GateKind::DiagonalOracle,
        }
    }

    /// Qubits touched, controls first.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Rx(q, _) | Gate::Rz(q, _) | Gate::Phase(q, _) => {
                vec![*q]
            }
            Gate::Rzz(a, b, _) | Gate::CPhase(a, b, _) => vec![*a, *b],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Mcx { controls, target } => {
                controls.iter().copied().chain(std::iter::once(*target)).collect()
            }
            Gate::Oracle(o) => o.qubits(),
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            Gate::Rx(_, a)
            | Gate::Rz(_, a)
            | Gate::Phase(_, a)
            | Gate::Rzz(_, _, a)
            | Gate::CPhase(_, _, a) => Some(*a),
            _ => None,
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self, Gate::Oracle(_))
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::H(_) | Gate::X(_) | Gate::Cnot { .. } | Gate::Mcx { .. } => self.clone(),
            Gate::Rx(q, a) => Gate::Rx(*q, -a),
            Gate::Rz(q, a) => Gate::Rz(*q, -a),
            Gate::Phase(q, a) => Gate::Phase(*q, -a),
            Gate::Rzz(p, q, a) => Gate::Rzz(*p, *q, -a),
            Gate::CPhase(p, q, a) => Gate::CPhase(*p, *q, -a),
            Gate::Oracle(o) => Gate::Oracle(o.inverse()),
        }
    }

    /// Checks that the qubit indices are distinct and below `n_qubits`.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qubits = self.qubits();
        for (i, &q) in qubits.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::Shape(format!(
                    "{} acts on qubit {q} but the state has {n_qubits} qubits",
                    self.kind().name()
                )));
            }
            if qubits[..i].contains(&q) {
                return Err(Error::Shape(format!(
                    "{} repeats qubit {q}",
                    self.kind().name()
                )));
            }
        }
        if let Gate::Oracle(Oracle::WeightedAdd {
            controls, weights, ..
        }) = self
        {
            if controls.len() != weights.len() {
                return Err(Error::Shape(format!(
                    "adder oracle has {} controls but {} weights",
                    controls.len(),
                    weights.len()
                )));
            }
        }
        Ok(())
    }
}

/// One step of a circuit: a unitary gate, a post-selected projection, or an
/// ancilla-hygiene check.
#[derive(Clone, Debug)]
pub enum Instruction {
    Gate(Gate),
    /// Project `qubit` onto `outcome`, renormalize, and record the retained probability.
    Project { qubit: usize, outcome: bool },
    /// Contract check: `qubits` must be `|0⟩` on every branch. Verified only
    /// in debug builds; no effect on the state.
    RequireClean { qubits: Vec<usize>, label: String },
}

impl From<Gate> for Instruction {
    fn from(g: Gate) -> Self {
        Instruction::Gate(g)
    }
}

impl Instruction {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::Gate(g) => g.qubits(),
            Instruction::Project { qubit, .. } => vec![*qubit],
            Instruction::RequireClean { qubits, .. } => qubits.clone(),
        }
    }
}

/// Row of the JSON circuit dump: `{"kind": ..., "qubits": [...], "angle": x}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub kind: String,
    pub qubits: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

impl GateRecord {
    pub fn from_instruction(ins: &Instruction) -> Option<GateRecord> {
        match ins {
            Instruction::Gate(g) => Some(GateRecord {
                kind: g.kind().name().to_string(),
                qubits: g.qubits(),
                angle: g.angle(),
                label: match g {
                    Gate::Oracle(o) => Some(o.label().to_string()),
                    _ => None,
                },
            }),
            Instruction::Project { qubit, outcome } => Some(GateRecord {
                kind: "PROJECT".to_string(),
                qubits: vec![*qubit],
                angle: None,
                label: Some(if *outcome { "1" } else { "0" }.to_string()),
            }),
            Instruction::RequireClean { .. } => None,
        }
    }
}

/// Serializes the unitary and projection steps of `ops` as a JSON gate list.
pub fn dump_json(ops: &[Instruction]) -> String {
    let records: Vec<GateRecord> = ops.iter().filter_map(GateRecord::from_instruction).collect();
    serde_json::to_string_pretty(&records).expect("gate records are always serializable")
}

/// Reversed, inverted copy of `forward`.
///
/// Fails on projections, which have no inverse.
pub fn inverse_sequence(forward: &[Instruction]) -> Result<Vec<Instruction>> {
    forward
        .iter()
        .rev()
        .map(|ins| match ins {
            Instruction::Gate(g) => Ok(Instruction::Gate(g.inverse())),
            Instruction::RequireClean { .. } => Ok(ins.clone()),
            Instruction::Project { qubit, .. } => Err(Error::Contract(format!(
                "projection on qubit {qubit} cannot be uncomputed"
            ))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_round_trip() {
        let reg = [4, 1, 6];
        let idx = write_register(0b1010_0001, &reg, 0b101);
        assert_eq!(read_register(idx, &reg), 0b101);
        // untouched bits survive
        assert_eq!(idx & 1, 1);
        assert_eq!(idx >> 7 & 1, 1);
    }

    #[test]
    fn validate_rejects_bad_indices() {
        assert!(matches!(Gate::H(3).validate(3), Err(Error::Shape(_))));
        assert!(matches!(
            Gate::Cnot {
                control: 1,
                target: 1
            }
            .validate(3),
            Err(Error::Shape(_))
        ));
        assert!(Gate::Rzz(0, 2, 0.3).validate(3).is_ok());
    }

    #[test]
    fn adder_oracle_wraps_modulo_register() {
        let add = Oracle::WeightedAdd {
            controls: vec![0, 1],
            weights: vec![3, 2],
            register: vec![2, 3],
            subtract: false,
        };
        // x0 = x1 = 1: 3 + 2 = 5 ≡ 1 (mod 4)
        assert_eq!(read_register(add.permute(0b0011), &[2, 3]), 1);
        let back = add.inverse().permute(add.permute(0b0011));
        assert_eq!(back, 0b0011);
    }

    #[test]
    fn uncompute_of_projection_is_rejected() {
        let ops = vec![
            Instruction::Gate(Gate::H(0)),
            Instruction::Project {
                qubit: 0,
                outcome: false,
            },
        ];
        assert!(matches!(inverse_sequence(&ops), Err(Error::Contract(_))));
        assert!(inverse_sequence(&[]).unwrap().is_empty());
    }

    #[test]
    fn json_dump_has_kind_qubits_angle() {
        let json = dump_json(&[Gate::Rzz(0, 1, 0.5).into(), Gate::H(2).into()]);
        let rows: Vec<GateRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(rows[0].kind, "RZZ");
        assert_eq!(rows[0].qubits, vec![0, 1]);
        assert_eq!(rows[0].angle, Some(0.5));
        assert_eq!(rows[1].angle, None);
    }
}

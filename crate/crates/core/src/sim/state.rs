use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gate::{Gate, Instruction, Oracle};
use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 26;

/// Outcome probabilities at or below this are treated as an empty subspace.
pub const POSTSELECT_CUTOFF: f64 = 1e-12;

/// Tolerance for the debug-mode ancilla hygiene check.
const CLEAN_TOLERANCE: f64 = 1e-10;

/// Dense `2^n` amplitude vector with post-selection bookkeeping.
///
/// Qubit 0 is the least significant bit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
    survival_prob: f64,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_capacity(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Statevector {
            n_qubits,
            amplitudes,
            survival_prob: 1.0,
        })
    }

    /// Wraps an explicit amplitude vector, normalizing it.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(format!(
                "amplitude vector length {len} is not a power of two ≥ 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_capacity(n_qubits)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::Shape("amplitude vector has zero norm".into()));
        }
        Ok(Statevector {
            n_qubits,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
            survival_prob: 1.0,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Product of the outcome probabilities of every projection so far.
    pub fn survival_prob(&self) -> f64 {
        self.survival_prob
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Consuming form of [`Statevector::apply`].
    pub fn apply_gate(mut self, gate: &Gate) -> Result<Self> {
        self.apply(gate)?;
        Ok(self)
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match gate {
            Gate::H(q) => self.apply_1q(
                *q,
                [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
            ),
            Gate::X(q) => self.apply_1q(
                *q,
                [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            ),
            Gate::Rx(q, theta) => {
                let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                self.apply_1q(*q, [[c(cs, 0.0), c(0.0, -sn)], [c(0.0, -sn), c(cs, 0.0)]])
            }
            Gate::Rz(q, theta) => {
                let lo = Complex64::from_polar(1.0, -theta / 2.0);
                let hi = Complex64::from_polar(1.0, theta / 2.0);
                let mask = 1usize << q;
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    *a *= if i & mask == 0 { lo } else { hi };
                }
            }
            Gate::Phase(q, theta) => {
                let ph = Complex64::from_polar(1.0, *theta);
                let mask = 1usize << q;
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & mask != 0 {
                        *a *= ph;
                    }
                }
            }
            Gate::Rzz(p, q, theta) => {
                let same = Complex64::from_polar(1.0, -theta / 2.0);
                let diff = Complex64::from_polar(1.0, theta / 2.0);
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    let parity = (i >> p ^ i >> q) & 1;
                    *a *= if parity == 0 { same } else { diff };
                }
            }
            Gate::CPhase(p, q, theta) => {
                let ph = Complex64::from_polar(1.0, *theta);
                let mask = (1usize << p) | (1usize << q);
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a *= ph;
                    }
                }
            }
            Gate::Cnot { control, target } => self.apply_mcx(1 << control, *target),
            Gate::Mcx { controls, target } => {
                let mask = controls.iter().fold(0usize, |m, &q| m | 1 << q);
                self.apply_mcx(mask, *target)
            }
            Gate::Oracle(oracle) => self.apply_oracle(oracle),
        }
        Ok(())
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        for block in self.amplitudes.chunks_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = m[0][0] * x0 + m[0][1] * x1;
                *a1 = m[1][0] * x0 + m[1][1] * x1;
            }
        }
    }

    fn apply_mcx(&mut self, control_mask: usize, target: usize) {
        let tbit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & tbit == 0 && i & control_mask == control_mask {
                self.amplitudes.swap(i, i | tbit);
            }
        }
    }

    fn apply_oracle(&mut self, oracle: &Oracle) {
        match oracle {
            Oracle::Diagonal { phase, sign, .. } => {
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    *a *= Complex64::from_polar(1.0, sign * phase(i));
                }
            }
            _ => {
                let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
                for (i, a) in self.amplitudes.iter().enumerate() {
                    out[oracle.permute(i)] = *a;
                }
                self.amplitudes = out;
            }
        }
    }

    /// Probability that measuring `qubit` yields `outcome`.
    pub fn outcome_probability(&self, qubit: usize, outcome: bool) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| (i & mask != 0) == outcome)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Post-selects `qubit` on `outcome` and returns the pre-projection
    /// outcome probability, which is also folded into the survival probability.
    pub fn project(&mut self, qubit: usize, outcome: bool) -> Result<f64> {
        let p = self.outcome_probability(qubit, outcome)?;
        if p <= POSTSELECT_CUTOFF {
            return Err(Error::EmptySubspace { probability: p });
        }
        let mask = 1usize << qubit;
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if (i & mask != 0) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        self.survival_prob *= p;
        Ok(p)
    }

    /// Consuming form of [`Statevector::project`].
    pub fn project_qubit(mut self, qubit: usize, outcome: bool) -> Result<Self> {
        self.project(qubit, outcome)?;
        Ok(self)
    }

    /// Probability mass on branches where any of `qubits` is `|1⟩`.
    pub fn dirty_mass(&self, qubits: &[usize]) -> f64 {
        let mask = qubits.iter().fold(0usize, |m, &q| m | 1 << q);
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn run_instruction(&mut self, ins: &Instruction) -> Result<()> {
        match ins {
            Instruction::Gate(g) => self.apply(g),
            Instruction::Project { qubit, outcome } => self.project(*qubit, *outcome).map(|_| ()),
            Instruction::RequireClean { qubits, label } => {
                if cfg!(debug_assertions) {
                    for &q in qubits {
                        self.check_qubit(q)?;
                    }
                    let dirty = self.dirty_mass(qubits);
                    if dirty > CLEAN_TOLERANCE {
                        return Err(Error::Contract(format!(
                            "{label}: qubits {qubits:?} carry mass {dirty:.3e} outside |0⟩"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Runs a whole instruction list in order.
    pub fn run(&mut self, ops: &[Instruction]) -> Result<()> {
        ops.iter().try_for_each(|ins| self.run_instruction(ins))
    }

    /// Draws `shots` basis samples; keys are basis strings, most significant qubit first.
    pub fn sample(&self, shots: usize, seed: u64) -> Result<BTreeMap<String, usize>> {
        if shots == 0 {
            return Err(Error::Input("shots must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cumulative = Vec::with_capacity(self.amplitudes.len());
        let mut acc = 0.0;
        for a in &self.amplitudes {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let r: f64 = rng.gen::<f64>() * acc;
            let idx = cumulative
                .partition_point(|&c| c <= r)
                .min(self.amplitudes.len() - 1);
            *counts
                .entry(basis_string(idx, self.n_qubits))
                .or_insert(0) += 1;
        }
        Ok(counts)
    }

    /// `Σ_z |amp_z|²·value_fn(z)`.
    pub fn expectation_diagonal<F: Fn(usize) -> f64>(&self, value_fn: F) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * value_fn(i))
            .sum()
    }

    /// Marginal distribution over the low `n_low` qubits (indices `0..n_low`).
    pub fn marginal_low(&self, n_low: usize) -> Vec<f64> {
        let n_low = n_low.min(self.n_qubits);
        let mask = (1usize << n_low) - 1;
        let mut out = vec![0.0; 1 << n_low];
        for (i, a) in self.amplitudes.iter().enumerate() {
            out[i & mask] += a.norm_sqr();
        }
        out
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Shape(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }
}

/// Basis string of `index` over `n` qubits, most significant qubit first.
pub fn basis_string(index: usize, n: usize) -> String {
    (0..n)
        .rev()
        .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn check_capacity(n_qubits: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::Capacity(format!(
            "{n_qubits} qubits outside supported range 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

#[inline]
fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

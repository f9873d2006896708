//! Reversible cost accumulation and threshold testing.
//!
//! The gate-level adder is a Draper-style Fourier adder. The register
//! encoding used throughout is swap-free: after [`qft`], register qubit `k`
//! carries the phase `exp(2πi·y/2^(k+1))` for register value `y`, so adding a
//! constant `a` is a phase `2π·a/2^(k+1)` on qubit `k`.
//!
//! The comparator treats the flag as an extra high bit of the cost register:
//! adding `K = 2^m − 1 − c` to the `(m+1)`-bit register `cost ‖ flag` sets the
//! flag exactly when `cost > c`, and subtracting `K` from the low `m` bits
//! alone restores the cost while leaving the carry in the flag.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{inverse_sequence, Gate, Instruction, Oracle};

/// Whether arithmetic blocks are emitted as gates or as classical oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Gate,
    Oracle,
}

/// Qubit roles for one constraint's arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostRegisterLayout {
    pub decision_qubits: Vec<usize>,
    /// Cost register, least significant bit first.
    pub cost_qubits: Vec<usize>,
    pub flag_qubit: usize,
}

impl CostRegisterLayout {
    pub fn new(decision_qubits: Vec<usize>, cost_qubits: Vec<usize>, flag_qubit: usize) -> Result<Self> {
        if cost_qubits.is_empty() {
            return Err(Error::Layout("cost register needs at least one qubit".into()));
        }
        let mut all: Vec<usize> = decision_qubits
            .iter()
            .chain(&cost_qubits)
            .copied()
            .chain(std::iter::once(flag_qubit))
            .collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != n {
            return Err(Error::Layout(
                "decision, cost and flag qubits must be disjoint".into(),
            ));
        }
        Ok(CostRegisterLayout {
            decision_qubits,
            cost_qubits,
            flag_qubit,
        })
    }

    pub fn width(&self) -> usize {
        self.cost_qubits.len()
    }

    /// Cost register followed by the flag.
    pub fn ancillas(&self) -> Vec<usize> {
        let mut q = self.cost_qubits.clone();
        q.push(self.flag_qubit);
        q
    }
}

/// Bits needed to hold any value in `0..=v`.
pub fn bits_for(v: u64) -> usize {
    (u64::BITS - v.leading_zeros()) as usize
}

/// Register width for a constraint `Σ w_i x_i ≤ bound`: wide enough for the
/// largest achievable sum and for the threshold itself, and at least one bit.
pub fn required_width(weights: &[i64], bound: i64) -> Result<usize> {
    let total = checked_weight_sum(weights)?;
    Ok(bits_for(total.max(bound.max(0) as u64)).max(1))
}

fn checked_weight_sum(weights: &[i64]) -> Result<u64> {
    weights.iter().try_fold(0u64, |acc, &w| {
        if w < 0 {
            Err(Error::Layout(format!(
                "adder weights must be non-negative, got {w}"
            )))
        } else {
            Ok(acc + w as u64)
        }
    })
}

/// Swap-free QFT on `register` (least significant qubit first).
pub fn qft(register: &[usize]) -> Vec<Instruction> {
    let mut out = Vec::new();
    for k in (0..register.len()).rev() {
        out.push(Gate::H(register[k]).into());
        for j in (0..k).rev() {
            out.push(Gate::CPhase(register[j], register[k], PI / (1u64 << (k - j)) as f64).into());
        }
    }
    out
}

pub fn inverse_qft(register: &[usize]) -> Vec<Instruction> {
    inverse_sequence(&qft(register)).expect("QFT is unitary")
}

/// Phase applied to Fourier qubit `k` to add `value`; `None` when it is a multiple of 2π.
fn fourier_angle(value: u64, k: usize) -> Option<f64> {
    let modulus = 1u64 << (k + 1);
    let r = value % modulus;
    (r != 0).then(|| 2.0 * PI * r as f64 / modulus as f64)
}

/// Adds the constant `value` to a register already in the Fourier basis.
fn fourier_add_constant(register: &[usize], value: u64, sign: f64) -> Vec<Instruction> {
    register
        .iter()
        .enumerate()
        .filter_map(|(k, &q)| fourier_angle(value, k).map(|a| Gate::Phase(q, sign * a).into()))
        .collect()
}

/// `cost += Σ w_i x_i`.
///
/// Gate mode: QFT on the cost register, one controlled phase per
/// (decision qubit, cost bit) pair with a nonzero angle, inverse QFT.
pub fn build_cost_adder(
    weights: &[i64],
    layout: &CostRegisterLayout,
    mode: Mode,
) -> Result<Vec<Instruction>> {
    if weights.len() != layout.decision_qubits.len() {
        return Err(Error::Layout(format!(
            "{} weights for {} decision qubits",
            weights.len(),
            layout.decision_qubits.len()
        )));
    }
    let total = checked_weight_sum(weights)?;
    let width = layout.width();
    if width >= 64 || total >= 1u64 << width {
        return Err(Error::Layout(format!(
            "weight sum {total} overflows a {width}-bit cost register"
        )));
    }
    let active: Vec<(usize, u64)> = layout
        .decision_qubits
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w != 0)
        .map(|(&q, &w)| (q, w as u64))
        .collect();

    Ok(match mode {
        Mode::Oracle => vec![Gate::Oracle(Oracle::WeightedAdd {
            controls: active.iter().map(|&(q, _)| q).collect(),
            weights: active.iter().map(|&(_, w)| w).collect(),
            register: layout.cost_qubits.clone(),
            subtract: false,
        })
        .into()],
        Mode::Gate => {
            let mut out = qft(&layout.cost_qubits);
            for &(control, w) in &active {
                for (k, &target) in layout.cost_qubits.iter().enumerate() {
                    if let Some(angle) = fourier_angle(w, k) {
                        out.push(Gate::CPhase(control, target, angle).into());
                    }
                }
            }
            out.extend(inverse_qft(&layout.cost_qubits));
            out
        }
    })
}

/// `flag ^= [cost > threshold]`, cost register unchanged.
///
/// `threshold` may be `-1`, which flags every branch. The flag must be clean
/// on entry; a debug-mode check is emitted first.
pub fn build_comparator(
    layout: &CostRegisterLayout,
    threshold: i64,
    mode: Mode,
) -> Result<Vec<Instruction>> {
    let width = layout.width();
    if width >= 63 || threshold < -1 || threshold >= 1i64 << width {
        return Err(Error::Layout(format!(
            "threshold {threshold} outside -1..{} for a {width}-bit register",
            1u64 << width.min(62)
        )));
    }
    let mut out = vec![Instruction::RequireClean {
        qubits: vec![layout.flag_qubit],
        label: "comparator flag".into(),
    }];
    match mode {
        Mode::Oracle => out.push(
            Gate::Oracle(Oracle::Compare {
                register: layout.cost_qubits.clone(),
                flag: layout.flag_qubit,
                threshold,
            })
            .into(),
        ),
        Mode::Gate => {
            let shift = ((1i64 << width) - 1 - threshold) as u64;
            let extended = layout.ancillas();
            out.extend(qft(&extended));
            out.extend(fourier_add_constant(&extended, shift, 1.0));
            out.extend(inverse_qft(&extended));
            out.extend(qft(&layout.cost_qubits));
            out.extend(fourier_add_constant(&layout.cost_qubits, shift, -1.0));
            out.extend(inverse_qft(&layout.cost_qubits));
        }
    }
    Ok(out)
}

/// Reversed and inverted `forward`; projections are rejected.
pub fn build_uncompute(forward: &[Instruction]) -> Result<Vec<Instruction>> {
    inverse_sequence(forward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{read_register, Statevector};

    fn layout(n_dec: usize, width: usize) -> CostRegisterLayout {
        CostRegisterLayout::new(
            (0..n_dec).collect(),
            (n_dec..n_dec + width).collect(),
            n_dec + width,
        )
        .unwrap()
    }

    fn basis(n: usize, index: usize) -> Statevector {
        let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = num_complex::Complex64::new(1.0, 0.0);
        Statevector::from_amplitudes(amps).unwrap()
    }

    fn output_index(s: &Statevector) -> usize {
        let (idx, p) = s
            .probabilities()
            .into_iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!((p - 1.0).abs() < 1e-9, "state is not a basis state");
        idx
    }

    #[test]
    fn adder_example_sums_selected_weights() {
        let l = layout(3, 3);
        for mode in [Mode::Gate, Mode::Oracle] {
            let ops = build_cost_adder(&[1, 2, 3], &l, mode).unwrap();
            let mut s = basis(7, 0b101);
            s.run(&ops).unwrap();
            let out = output_index(&s);
            assert_eq!(read_register(out, &l.cost_qubits), 4);
            assert_eq!(out & 0b111, 0b101);
        }
    }

    #[test]
    fn zero_weights_leave_register_clean() {
        let l = layout(3, 2);
        let ops = build_cost_adder(&[0, 0, 0], &l, Mode::Gate).unwrap();
        for x in 0..8 {
            let mut s = basis(6, x);
            s.run(&ops).unwrap();
            assert_eq!(output_index(&s), x);
        }
    }

    #[test]
    fn adder_overflow_and_negative_weights_are_layout_errors() {
        let l = layout(3, 2);
        assert!(matches!(
            build_cost_adder(&[1, 2, 3], &l, Mode::Gate),
            Err(Error::Layout(_))
        ));
        assert!(matches!(
            build_cost_adder(&[1, -1, 0], &layout(3, 3), Mode::Gate),
            Err(Error::Layout(_))
        ));
    }

    #[test]
    fn comparator_examples() {
        // register holds cost directly; no decision qubits needed
        let l = CostRegisterLayout::new(vec![], vec![0, 1, 2], 3).unwrap();
        for (cost, c, flag) in [(4usize, 3i64, 1usize), (3, 3, 0), (0, 0, 0)] {
            let ops = build_comparator(&l, c, Mode::Gate).unwrap();
            let mut s = basis(4, cost);
            s.run(&ops).unwrap();
            let out = output_index(&s);
            assert_eq!(out >> 3, flag, "cost {cost} threshold {c}");
            assert_eq!(out & 0b111, cost);
        }
    }

    #[test]
    fn comparator_threshold_range() {
        let l = CostRegisterLayout::new(vec![], vec![0, 1], 2).unwrap();
        assert!(build_comparator(&l, 4, Mode::Gate).is_err());
        assert!(build_comparator(&l, -2, Mode::Gate).is_err());
        // -1 flags everything
        let ops = build_comparator(&l, -1, Mode::Gate).unwrap();
        let mut s = basis(3, 0);
        s.run(&ops).unwrap();
        assert_eq!(output_index(&s), 0b100);
    }

    #[test]
    fn dirty_flag_is_a_contract_error_in_debug() {
        let l = CostRegisterLayout::new(vec![], vec![0, 1], 2).unwrap();
        let ops = build_comparator(&l, 1, Mode::Gate).unwrap();
        let mut s = basis(3, 0b100);
        let r = s.run(&ops);
        if cfg!(debug_assertions) {
            assert!(matches!(r, Err(Error::Contract(_))));
        }
    }

    #[test]
    fn uncompute_restores_clean_register() {
        let l = layout(3, 3);
        let fwd = build_cost_adder(&[1, 2, 3], &l, Mode::Gate).unwrap();
        let back = build_uncompute(&fwd).unwrap();
        let mut s = Statevector::new(7).unwrap();
        for q in 0..3 {
            s.apply(&Gate::H(q)).unwrap();
        }
        s.run(&fwd).unwrap();
        s.run(&back).unwrap();
        assert!(s.dirty_mass(&l.ancillas()) < 1e-12);
        assert!(build_uncompute(&[]).unwrap().is_empty());
        let with_projection = vec![Instruction::Project {
            qubit: 0,
            outcome: false,
        }];
        assert!(matches!(
            build_uncompute(&with_projection),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn widths() {
        assert_eq!(bits_for(0), 0);
        assert_eq!(bits_for(3), 2);
        assert_eq!(bits_for(4), 3);
        assert_eq!(required_width(&[1, 2, 3, 1, 2, 3], 3).unwrap(), 4);
        assert_eq!(required_width(&[1, 1, 1], 1).unwrap(), 2);
        assert_eq!(required_width(&[0], 0).unwrap(), 1);
        assert_eq!(required_width(&[1], 9).unwrap(), 4);
    }
}

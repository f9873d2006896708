use std::f64::consts::PI;

use num_complex::Complex64;

use super::*;
use crate::arith::Mode;
use crate::error::Error;
use crate::problem::{
    cargo_instance, compile_qubo, qubo_to_ising, ConstrainedBinaryProblem, Constraint, IsingCoeffs,
    Multipliers, Representation, RepresentationAssignment,
};
use crate::sim::{Gate, Instruction, Statevector};

use Representation::{Dephase, Qaoa, Zeno};

fn cargo() -> ConstrainedBinaryProblem {
    cargo_instance(&[1, 2, 3], 2, 3).unwrap()
}

fn mult(alpha: f64) -> Multipliers {
    Multipliers::uniform(6, 13.0, alpha).unwrap()
}

fn weight_as(r: Representation) -> RepresentationAssignment {
    RepresentationAssignment::uniform(6, Qaoa).with(0, r)
}

fn basis_state(n: usize, index: usize) -> Statevector {
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[index] = Complex64::new(1.0, 0.0);
    Statevector::from_amplitudes(amps).unwrap()
}

fn layout_for(p: &ConstrainedBinaryProblem, a: &RepresentationAssignment) -> QubitLayout {
    let q = compile_qubo(p, a, &mult(1.0)).unwrap();
    QubitLayout::new(p, a, &q).unwrap()
}

#[test]
fn phase_return_single_term() {
    let mut ising = IsingCoeffs {
        n: 1,
        ..Default::default()
    };
    ising.z.insert(0, 0.5);
    let ops = build_phase_return(&ising, PI);
    assert_eq!(ops.len(), 1);
    match &ops[0] {
        Instruction::Gate(Gate::Rz(0, a)) => assert!((a + PI).abs() < 1e-15),
        other => panic!("unexpected {other:?}"),
    }
    // RZ(−π) and RZ(π) agree up to a global phase of −1
    let a = Statevector::new(1).unwrap().apply_gate(&Gate::H(0)).unwrap();
    let x = a.clone().apply_gate(&Gate::Rz(0, -PI)).unwrap();
    let y = a.apply_gate(&Gate::Rz(0, PI)).unwrap();
    for (u, v) in x.amplitudes().iter().zip(y.amplitudes()) {
        assert!((u + v).norm() < 1e-12);
    }
    assert!(build_phase_return(&IsingCoeffs::default(), 0.3).is_empty());
}

#[test]
fn phase_return_preserves_z_distribution() {
    let p = cargo();
    let a = RepresentationAssignment::uniform(6, Qaoa);
    let ising = qubo_to_ising(&compile_qubo(&p, &a, &mult(0.0)).unwrap()).unwrap();
    let mut s = Statevector::new(13).unwrap();
    for q in 0..13 {
        s.apply(&Gate::H(q)).unwrap();
    }
    let before = s.probabilities();
    s.run(&build_phase_return(&ising, 0.37)).unwrap();
    for (x, y) in before.iter().zip(s.probabilities()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn phase_return_matches_ising_energy_phase() {
    let p = cargo();
    let a = RepresentationAssignment::uniform(6, Qaoa);
    let ising = qubo_to_ising(&compile_qubo(&p, &a, &mult(0.0)).unwrap()).unwrap();
    let gamma = 0.013;
    for x in [0usize, 5, 77, 4000, 8191] {
        let mut s = basis_state(13, x);
        s.run(&build_phase_return(&ising, gamma)).unwrap();
        let expected = Complex64::from_polar(1.0, -gamma * (ising.evaluate(x) - ising.identity));
        assert!((s.amplitudes()[x] - expected).norm() < 1e-9, "x = {x}");
    }
}

#[test]
fn dephasing_layer_examples() {
    let p = cargo();
    let a = weight_as(Dephase);
    let layout = layout_for(&p, &a);
    let reg = layout.register(&p, 0).unwrap();
    let n = layout.n_qubits();
    let weight = &p.constraints[0];

    for mode in [Mode::Gate, Mode::Oracle] {
        // cargo 2 (weight 3) at position 0: cost == bound
        let boundary = 1 << 4;
        let mut s = basis_state(n, boundary);
        s.run(&build_dephasing_layer(weight, &reg, 1.0, 0.5, mode).unwrap())
            .unwrap();
        assert!((s.amplitudes()[boundary] - Complex64::new(1.0, 0.0)).norm() < 1e-9);

        // weights 2 + 3 = c + 2
        let over = (1 << 2) | (1 << 4);
        let mut s = basis_state(n, over);
        s.run(&build_dephasing_layer(weight, &reg, 1.0, 0.5, mode).unwrap())
            .unwrap();
        let expected = Complex64::from_polar(1.0, -1.0);
        assert!((s.amplitudes()[over] - expected).norm() < 1e-9);

        // alpha = 0 is the identity everywhere
        let mut s = Statevector::new(n).unwrap();
        for q in 0..6 {
            s.apply(&Gate::H(q)).unwrap();
        }
        let before = s.clone();
        s.run(&build_dephasing_layer(weight, &reg, 0.0, 0.5, mode).unwrap())
            .unwrap();
        for (u, v) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!((u - v).norm() < 1e-9);
        }
    }
}

#[test]
fn zeno_layer_with_zero_beta_keeps_survival() {
    let p = cargo();
    let a = weight_as(Zeno);
    let layout = layout_for(&p, &a);
    let mut s = prepare_initial_state(&p, &a, &layout, Mode::Gate).unwrap();
    let entry = s.survival_prob();
    let reg = layout.register(&p, 0).unwrap();
    let decision: Vec<usize> = layout.decision().collect();
    let (ops, positions) =
        build_zeno_layer(&p.constraints[0], &reg, 0.0, 3, &decision, Mode::Gate).unwrap();
    assert_eq!(positions.len(), 3);
    for &pos in &positions {
        assert!(matches!(ops[pos], Instruction::Project { outcome: false, .. }));
    }
    s.run(&ops).unwrap();
    assert!((s.survival_prob() - entry).abs() < 1e-12);
}

#[test]
fn more_zeno_measurements_retain_more() {
    let p = cargo();
    let a = weight_as(Zeno);
    let layout = layout_for(&p, &a);
    let reg = layout.register(&p, 0).unwrap();
    let decision: Vec<usize> = layout.decision().collect();
    let survival = |q: usize| {
        let mut s = prepare_initial_state(&p, &a, &layout, Mode::Oracle).unwrap();
        let entry = s.survival_prob();
        let (ops, _) =
            build_zeno_layer(&p.constraints[0], &reg, 0.3, q, &decision, Mode::Oracle).unwrap();
        s.run(&ops).unwrap();
        s.survival_prob() / entry
    };
    let (one, four) = (survival(1), survival(4));
    assert!(four >= one, "Q=4 {four} vs Q=1 {one}");
    assert!(one < 1.0);
}

#[test]
fn zeno_layer_on_infeasible_entry_fails() {
    let p = cargo();
    let a = weight_as(Zeno);
    let layout = layout_for(&p, &a);
    let reg = layout.register(&p, 0).unwrap();
    // every cargo at position 0: weight 6 > 3
    let s0 = basis_state(layout.n_qubits(), 0b010101);
    let (ops, _) = build_zeno_layer(&p.constraints[0], &reg, 0.0, 1, &[0], Mode::Gate).unwrap();
    let mut s = s0;
    assert!(matches!(s.run(&ops), Err(Error::EmptySubspace { .. })));
}

#[test]
fn circuit_layout_examples() {
    let p = cargo();
    let params = LayerParams::default();
    let all_qaoa = RepresentationAssignment::uniform(6, Qaoa);
    let c = build_circuit(&p, &all_qaoa, &mult(1.0), &params, BlockOrdering::Natural, Mode::Gate)
        .unwrap();
    assert_eq!(c.n_qubits(), 13);
    assert!(c.projections().is_empty());
    assert_eq!(c.n_parameters, 2);

    // weight sum over the six x_ij is 12, so the cost register needs 4 bits
    let zeno = weight_as(Zeno);
    let c = build_circuit(&p, &zeno, &mult(1.0), &params, BlockOrdering::Natural, Mode::Gate)
        .unwrap();
    assert_eq!(c.n_qubits(), 11 + 4 + 1);
    assert_eq!(c.projections().len(), 1);
    let flag = c.layout.flag.unwrap();
    assert!(c.projections().iter().all(|&(_, q)| q == flag));
}

#[test]
fn orderings_share_layout() {
    let p = cargo();
    let a: RepresentationAssignment = "DEPHASE,ZENO,DEPHASE,ZENO,QAOA,QAOA".parse().unwrap();
    let params = LayerParams::default();
    let natural =
        build_circuit(&p, &a, &mult(1.0), &params, BlockOrdering::Natural, Mode::Gate).unwrap();
    let zeno_first =
        build_circuit(&p, &a, &mult(1.0), &params, BlockOrdering::ZenoFirst, Mode::Gate).unwrap();
    assert_eq!(natural.n_qubits(), zeno_first.n_qubits());
    let labels = |c: &HybridCircuit| -> Vec<String> {
        c.blocks.iter().map(|b| b.label.clone()).collect()
    };
    assert_eq!(
        labels(&natural)[1..5],
        ["dephase:weight", "zeno:position_0", "dephase:position_1", "zeno:cargo_0"]
    );
    assert_eq!(
        labels(&zeno_first)[1..5],
        ["zeno:position_0", "zeno:cargo_0", "dephase:weight", "dephase:position_1"]
    );
}

#[test]
fn initial_state_without_zeno_is_uniform() {
    let p = cargo();
    let a = weight_as(Dephase);
    let layout = layout_for(&p, &a);
    let s = prepare_initial_state(&p, &a, &layout, Mode::Gate).unwrap();
    let marginal = s.marginal_low(layout.n_bits());
    let expect = 1.0 / (1 << layout.n_bits()) as f64;
    assert!(marginal.iter().all(|&m| (m - expect).abs() < 1e-12));
    assert!(s.dirty_mass(&layout.ancillas()) < 1e-12);
}

#[test]
fn initial_state_restricted_to_zeno_feasible() {
    let p = cargo();
    let a = weight_as(Zeno);
    let layout = layout_for(&p, &a);
    for mode in [Mode::Gate, Mode::Oracle] {
        let s = prepare_initial_state(&p, &a, &layout, mode).unwrap();
        let decision = s.marginal_low(6);
        let feasible: Vec<usize> = (0..64).filter(|&x| p.constraints[0].lhs(x) <= 3).collect();
        assert_eq!(feasible.len(), 12);
        for (x, &m) in decision.iter().enumerate() {
            if feasible.contains(&x) {
                assert!((m - 1.0 / 12.0).abs() < 1e-9);
            } else {
                assert!(m < 1e-12);
            }
        }
        assert!((s.survival_prob() - 12.0 / 64.0).abs() < 1e-9);
        assert!(s.dirty_mass(&layout.ancillas()) < 1e-10);
    }
}

#[test]
fn unsatisfiable_zeno_constraint_annihilates() {
    let p = ConstrainedBinaryProblem {
        objective: vec![1, 1],
        constraints: vec![Constraint {
            coeffs: vec![1, 1],
            bound: -1,
            label: "never".into(),
        }],
        labels: vec![],
    };
    let a = RepresentationAssignment(vec![Zeno]);
    let m = Multipliers::uniform(1, 1.0, 0.0).unwrap();
    let layout = QubitLayout::new(&p, &a, &compile_qubo(&p, &a, &m).unwrap()).unwrap();
    assert!(matches!(
        prepare_initial_state(&p, &a, &layout, Mode::Gate),
        Err(Error::EmptySubspace { .. })
    ));
}

#[test]
fn oracle_circuits_have_no_stats() {
    let p = cargo();
    let c = build_circuit(
        &p,
        &weight_as(Dephase),
        &mult(1.0),
        &LayerParams::default(),
        BlockOrdering::Natural,
        Mode::Oracle,
    )
    .unwrap();
    assert!(matches!(circuit_stats(&c), Err(Error::StatsUnavailable(_))));
}

#[test]
fn negative_coefficients_cannot_use_arithmetic() {
    let p = ConstrainedBinaryProblem::new(
        vec![1, 1],
        vec![Constraint {
            coeffs: vec![1, -1],
            bound: 0,
            label: String::new(),
        }],
        vec![],
    )
    .unwrap();
    let a = RepresentationAssignment(vec![Dephase]);
    let m = Multipliers::uniform(1, 1.0, 1.0).unwrap();
    let r = build_circuit(&p, &a, &m, &LayerParams::default(), BlockOrdering::Natural, Mode::Gate);
    assert!(matches!(r, Err(Error::Layout(_))));
}

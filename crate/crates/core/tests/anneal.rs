use hybrid_qopt::anneal::{anneal, AnnealSchedule};
use hybrid_qopt::problem::{
    brute_force_solve, cargo_instance, compile_qubo, Multipliers, Representation,
    RepresentationAssignment,
};

fn setup() -> (hybrid_qopt::problem::ConstrainedBinaryProblem, Multipliers) {
    (
        cargo_instance(&[1, 2, 3], 2, 3).unwrap(),
        Multipliers::uniform(6, 13.0, 1.0).unwrap(),
    )
}

/// Minimum of the fully penalized QUBO by enumeration.
fn qubo_minimum() -> f64 {
    let (p, m) = setup();
    let q = compile_qubo(&p, &RepresentationAssignment::uniform(6, Representation::Qaoa), &m).unwrap();
    q.value_table().into_iter().fold(f64::MAX, f64::min)
}

#[test]
fn one_step_returns_the_start() {
    let (p, m) = setup();
    let r = anneal(&p, &m, &AnnealSchedule { steps: 1, seed: 4, ..Default::default() }).unwrap();
    assert_eq!(r.trace.len(), 1);
    assert_eq!(r.best_state, r.trace[0].state);
    assert_eq!(r.best_cost, r.trace[0].cost);
}

#[test]
fn seed_one_reaches_the_optimum() {
    let (p, m) = setup();
    let truth = brute_force_solve(&p).unwrap();
    let r = anneal(&p, &m, &AnnealSchedule { seed: 1, ..Default::default() }).unwrap();
    assert!((r.best_cost - qubo_minimum()).abs() < 1e-9);
    assert!(truth.optimal.contains(&r.best_decision()));
    assert_eq!(qubo_minimum(), -(truth.opt_value as f64));
}

#[test]
fn near_zero_temperature_only_descends() {
    let (p, m) = setup();
    let schedule = AnnealSchedule {
        t_start: 1e-6,
        t_end: 1e-6,
        steps: 500,
        seed: 9,
        flips_per_step: 1,
    };
    let r = anneal(&p, &m, &schedule).unwrap();
    assert!(r.best_cost <= r.trace[0].cost);
    for w in r.trace.windows(2) {
        assert!(w[1].cost <= w[0].cost + 1e-9);
    }
}

#[test]
fn same_seed_same_walk() {
    let (p, m) = setup();
    let s = AnnealSchedule { seed: 11, steps: 300, ..Default::default() };
    assert_eq!(anneal(&p, &m, &s).unwrap(), anneal(&p, &m, &s).unwrap());
}

#[test]
fn trace_csv_columns() {
    let (p, m) = setup();
    let r = anneal(&p, &m, &AnnealSchedule { steps: 4, ..Default::default() }).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,state,cost,accepted"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[1].len(), 13);
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn most_seeds_end_feasible() {
    let (p, m) = setup();
    let truth = brute_force_solve(&p).unwrap();
    let feasible = (0..20)
        .filter(|&seed| {
            let r = anneal(&p, &m, &AnnealSchedule { seed, ..Default::default() }).unwrap();
            truth.feasible.contains(&r.best_decision())
        })
        .count();
    assert!(feasible >= 16, "{feasible}/20");
}

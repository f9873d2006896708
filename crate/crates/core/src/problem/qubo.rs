use std::collections::BTreeMap;
use std::ops::Range;

use crate::arith::bits_for;
use crate::error::{Error, Result};

use super::model::{ConstrainedBinaryProblem, Representation, RepresentationAssignment};

/// Penalty weights: one Lagrange multiplier per constraint plus the
/// dephasing strength shared by every dephased constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Multipliers {
    pub lambda: Vec<f64>,
    pub alpha: f64,
}

impl Multipliers {
    pub fn uniform(n_constraints: usize, lambda: f64, alpha: f64) -> Result<Self> {
        let m = Multipliers {
            lambda: vec![lambda; n_constraints],
            alpha,
        };
        m.validate()?;
        Ok(m)
    }

    /// Same λ for every constraint, chosen to dominate the objective:
    /// `λ = Σ|c_i| + 1`.
    pub fn dominant(problem: &ConstrainedBinaryProblem, alpha: f64) -> Result<Self> {
        Self::uniform(problem.n_constraints(), default_lambda(problem), alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.iter().any(|&l| !(l >= 0.0 && l.is_finite())) || !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Input("multipliers must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// `Σ|objective| + 1`; any larger λ makes every infeasible point cost more
/// than every feasible one.
pub fn default_lambda(problem: &ConstrainedBinaryProblem) -> f64 {
    problem.objective.iter().map(|c| c.abs() as f64).sum::<f64>() + 1.0
}

/// Slack bits needed for bound `b`: `ceil(log2(b+1))`, zero when `b = 0`.
pub fn slack_width(bound: i64) -> usize {
    bits_for(bound.max(0) as u64)
}

/// `x^T Q x + B·x + const` over decision bits followed by slack bits.
#[derive(Clone, Debug, PartialEq)]
pub struct Qubo {
    pub n_bits: usize,
    /// Row-major, symmetric.
    pub q: Vec<f64>,
    pub b: Vec<f64>,
    pub constant: f64,
    /// Slack bit range of each QAOA-assigned constraint.
    pub slack_map: BTreeMap<usize, Range<usize>>,
}

impl Qubo {
    pub fn zeros(n_bits: usize) -> Self {
        Qubo {
            n_bits,
            q: vec![0.0; n_bits * n_bits],
            b: vec![0.0; n_bits],
            constant: 0.0,
            slack_map: BTreeMap::new(),
        }
    }

    pub fn q_at(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n_bits + j]
    }

    fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.q[i * self.n_bits + i] += v;
        } else {
            self.q[i * self.n_bits + j] += v / 2.0;
            self.q[j * self.n_bits + i] += v / 2.0;
        }
    }

    /// Value at the bit assignment encoded in `x` (bit `i` of `x` is bit `i`).
    pub fn evaluate(&self, x: usize) -> f64 {
        let n = self.n_bits;
        let mut v = self.constant;
        for i in (0..n).filter(|i| x >> i & 1 == 1) {
            v += self.b[i];
            let row = &self.q[i * n..(i + 1) * n];
            for j in (0..n).filter(|j| x >> j & 1 == 1) {
                v += row[j];
            }
        }
        v
    }

    /// Values at every assignment, indexed by assignment.
    pub fn value_table(&self) -> Vec<f64> {
        (0..1usize << self.n_bits).map(|x| self.evaluate(x)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n_bits;
        (0..n).all(|i| (0..i).all(|j| (self.q_at(i, j) - self.q_at(j, i)).abs() <= 1e-12))
    }

    pub fn n_slack(&self) -> usize {
        self.slack_map.values().map(|r| r.len()).sum()
    }
}

/// Negated objective plus `λ_j·(Σ a_i x_i + Σ_k 2^k s_k − b_j)²` for each
/// QAOA-assigned constraint `j`. Dephased and Zeno constraints contribute nothing.
pub fn compile_qubo(
    problem: &ConstrainedBinaryProblem,
    assignment: &RepresentationAssignment,
    mult: &Multipliers,
) -> Result<Qubo> {
    assignment.check_len(problem.n_constraints())?;
    if mult.lambda.len() != problem.n_constraints() {
        return Err(Error::Input(format!(
            "{} multipliers for {} constraints",
            mult.lambda.len(),
            problem.n_constraints()
        )));
    }
    mult.validate()?;

    let n_vars = problem.n_vars();
    let qaoa = assignment.indices_of(Representation::Qaoa);
    let mut slack_map = BTreeMap::new();
    let mut next = n_vars;
    for &j in &qaoa {
        let w = slack_width(problem.constraints[j].bound);
        slack_map.insert(j, next..next + w);
        next += w;
    }

    let mut qubo = Qubo::zeros(next);
    qubo.slack_map = slack_map;
    for (i, &c) in problem.objective.iter().enumerate() {
        qubo.b[i] -= c as f64;
    }

    for &j in &qaoa {
        let lambda = mult.lambda[j];
        let con = &problem.constraints[j];
        let mut terms: Vec<(usize, f64)> = con
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(i, &a)| (i, a as f64))
            .collect();
        terms.extend(
            qubo.slack_map[&j]
                .clone()
                .enumerate()
                .map(|(k, bit)| (bit, (1u64 << k) as f64)),
        );
        let bound = con.bound as f64;
        // (Σ c_t y_t − b)² with y_t² = y_t
        for (t, &(i, ci)) in terms.iter().enumerate() {
            qubo.b[i] += lambda * (ci * ci - 2.0 * bound * ci);
            for &(k, ck) in &terms[t + 1..] {
                qubo.add_sym(i, k, lambda * 2.0 * ci * ck);
            }
        }
        qubo.constant += lambda * bound * bound;
    }
    Ok(qubo)
}

/// Diagonal Hamiltonian in spin variables `s_i = 2x_i − 1` (so `x_i = (1+s_i)/2`).
///
/// `s_i = +1` on qubit state `|1⟩`; as an operator `s_i = −Z_i`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct IsingCoeffs {
    pub n: usize,
    /// Keyed by `(i, j)` with `i < j`.
    pub zz: BTreeMap<(usize, usize), f64>,
    pub z: BTreeMap<usize, f64>,
    pub identity: f64,
}

impl IsingCoeffs {
    pub fn evaluate(&self, x: usize) -> f64 {
        let s = |i: usize| if x >> i & 1 == 1 { 1.0 } else { -1.0 };
        self.identity
            + self.z.iter().map(|(&i, &h)| h * s(i)).sum::<f64>()
            + self.zz.iter().map(|(&(i, j), &k)| k * s(i) * s(j)).sum::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.z.is_empty() && self.zz.is_empty()
    }
}

const ISING_EPS: f64 = 1e-14;

/// Substitutes `x_i = (1+s_i)/2`.
pub fn qubo_to_ising(qubo: &Qubo) -> Result<IsingCoeffs> {
    if !qubo.is_symmetric() {
        return Err(Error::Contract("QUBO matrix is not symmetric".into()));
    }
    let n = qubo.n_bits;
    let mut out = IsingCoeffs {
        n,
        ..Default::default()
    };
    let mut identity = qubo.constant;
    for i in 0..n {
        let row_sum: f64 = (0..n).map(|j| qubo.q_at(i, j)).sum();
        let h = (row_sum + qubo.b[i]) / 2.0;
        if h.abs() > ISING_EPS {
            out.z.insert(i, h);
        }
        identity += row_sum / 4.0 + qubo.b[i] / 2.0 + qubo.q_at(i, i) / 4.0;
        for j in i + 1..n {
            let k = qubo.q_at(i, j) / 2.0;
            if k.abs() > ISING_EPS {
                out.zz.insert((i, j), k);
            }
        }
    }
    out.identity = identity;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::model::{brute_force_solve, cargo_instance};

    fn all(n: usize, r: Representation) -> RepresentationAssignment {
        RepresentationAssignment::uniform(n, r)
    }

    #[test]
    fn slack_widths() {
        assert_eq!(slack_width(0), 0);
        assert_eq!(slack_width(1), 1);
        assert_eq!(slack_width(2), 2);
        assert_eq!(slack_width(3), 2);
        assert_eq!(slack_width(4), 3);
    }

    #[test]
    fn cargo_bit_counts() {
        let p = cargo_instance(&[1, 2, 3], 2, 3).unwrap();
        let m = Multipliers::uniform(6, 3.0, 0.0).unwrap();
        let q = compile_qubo(&p, &all(6, Representation::Qaoa), &m).unwrap();
        assert_eq!(q.n_bits, 13);
        let zeno_weight = all(6, Representation::Qaoa).with(0, Representation::Zeno);
        assert_eq!(compile_qubo(&p, &zeno_weight, &m).unwrap().n_bits, 11);
    }

    #[test]
    fn zero_lambda_keeps_only_objective() {
        let p = cargo_instance(&[1, 2, 3], 2, 3).unwrap();
        let m = Multipliers::uniform(6, 0.0, 0.0).unwrap();
        let q = compile_qubo(&p, &all(6, Representation::Qaoa), &m).unwrap();
        assert!(q.q.iter().all(|&v| v == 0.0));
        assert_eq!(q.constant, 0.0);
        let table = q.value_table();
        let min = table.iter().copied().fold(f64::INFINITY, f64::min);
        let argmins: Vec<usize> = (0..table.len()).filter(|&x| table[x] == min).collect();
        // every decision bit set; slack bits free
        assert!(argmins.iter().all(|x| x & 0b111111 == 0b111111));
        assert_eq!(min, -12.0);
    }

    #[test]
    fn single_linear_bit_ising() {
        let mut q = Qubo::zeros(1);
        q.b[0] = 1.0;
        let ising = qubo_to_ising(&q).unwrap();
        assert_eq!(ising.z.get(&0), Some(&0.5));
        assert_eq!(ising.identity, 0.5);
        assert_eq!(ising.evaluate(0), 0.0);
        assert_eq!(ising.evaluate(1), 1.0);
    }

    #[test]
    fn product_term_ising() {
        let mut q = Qubo::zeros(2);
        q.q = vec![0.0, 1.0, 1.0, 0.0];
        let ising = qubo_to_ising(&q).unwrap();
        assert_eq!(ising.zz.get(&(0, 1)), Some(&0.5));
        for x in 0..4 {
            let expected = ((x & 1) * (x >> 1 & 1)) as f64 * 2.0;
            assert!((ising.evaluate(x) - expected).abs() < 1e-12);
            assert!((q.evaluate(x) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn asymmetric_qubo_is_rejected() {
        let mut q = Qubo::zeros(2);
        q.q = vec![0.0, 1.0, 0.0, 0.0];
        assert!(matches!(qubo_to_ising(&q), Err(Error::Contract(_))));
    }

    #[test]
    fn feasible_points_have_a_zero_penalty_slack() {
        let p = cargo_instance(&[1, 2, 3], 2, 3).unwrap();
        let m = Multipliers::dominant(&p, 0.0).unwrap();
        let q = compile_qubo(&p, &all(6, Representation::Qaoa), &m).unwrap();
        let bf = brute_force_solve(&p).unwrap();
        for &x in &bf.feasible {
            let best = (0..1usize << 7)
                .map(|s| q.evaluate(x | s << 6))
                .fold(f64::INFINITY, f64::min);
            assert!((best + p.objective_value(x) as f64).abs() < 1e-9);
        }
    }
}

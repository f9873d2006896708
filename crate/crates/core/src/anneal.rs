//! Simulated-annealing baseline on the fully penalized QUBO.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::csv_err;
use crate::problem::{
    compile_qubo, ConstrainedBinaryProblem, Multipliers, Qubo, Representation,
    RepresentationAssignment,
};
use crate::sim::basis_string;

/// Geometric temperature schedule for a Metropolis single-flip walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub seed: u64,
    pub flips_per_step: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            t_start: 10.0,
            t_end: 0.05,
            steps: 5000,
            seed: 0,
            flips_per_step: 1,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_start >= self.t_end) {
            return Err(Error::Input(format!(
                "need t_start ≥ t_end > 0, got {} and {}",
                self.t_start, self.t_end
            )));
        }
        if self.steps == 0 || self.flips_per_step == 0 {
            return Err(Error::Input("steps and flips_per_step must be at least 1".into()));
        }
        Ok(())
    }

    /// Temperature at `step` (geometric from `t_start` to `t_end`).
    pub fn temperature(&self, step: usize) -> f64 {
        if self.steps <= 1 {
            return self.t_start;
        }
        let frac = step as f64 / (self.steps - 1) as f64;
        self.t_start * (self.t_end / self.t_start).powf(frac)
    }
}

/// The state held at the end of one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub step: usize,
    /// QUBO bit string, decision bits in the low positions.
    pub state: usize,
    pub cost: f64,
    /// Accepted flips during this step.
    pub accepted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealResult {
    pub n_bits: usize,
    pub n_vars: usize,
    pub best_state: usize,
    pub best_cost: f64,
    /// Exactly one entry per step; entry 0 is the random starting state.
    pub trace: Vec<Visit>,
}

impl AnnealResult {
    /// Decision-variable part of the best state.
    pub fn best_decision(&self) -> usize {
        self.best_state & ((1usize << self.n_vars) - 1)
    }

    /// CSV with columns `step,state,cost,accepted`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "state", "cost", "accepted"]).map_err(csv_err)?;
        for v in &self.trace {
            w.write_record([
                v.step.to_string(),
                basis_string(v.state, self.n_bits),
                v.cost.to_string(),
                v.accepted.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Input(e.to_string()))?;
        Ok(())
    }
}

/// Energy change from flipping bit `k` of `x`.
fn flip_delta(qubo: &Qubo, x: usize, k: usize) -> f64 {
    let coupling: f64 = (0..qubo.n_bits)
        .filter(|&j| j != k && x >> j & 1 == 1)
        .map(|j| qubo.q_at(k, j))
        .sum();
    let sign = if x >> k & 1 == 1 { -1.0 } else { 1.0 };
    sign * (qubo.q_at(k, k) + qubo.b[k] + 2.0 * coupling)
}

/// Anneals the QUBO with every constraint penalized.
pub fn anneal(
    problem: &ConstrainedBinaryProblem,
    mult: &Multipliers,
    schedule: &AnnealSchedule,
) -> Result<AnnealResult> {
    schedule.validate()?;
    let all_qaoa = RepresentationAssignment::uniform(problem.n_constraints(), Representation::Qaoa);
    let qubo = compile_qubo(problem, &all_qaoa, mult)?;
    if qubo.n_bits >= usize::BITS as usize {
        return Err(Error::Capacity(format!("{} QUBO bits exceed the annealer's word size", qubo.n_bits)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut x: usize = rng.gen_range(0..1usize << qubo.n_bits);
    let mut cost = qubo.evaluate(x);
    let (mut best_state, mut best_cost) = (x, cost);
    let mut trace = Vec::with_capacity(schedule.steps);
    trace.push(Visit {
        step: 0,
        state: x,
        cost,
        accepted: 0,
    });

    for step in 1..schedule.steps {
        let temp = schedule.temperature(step);
        let mut accepted = 0;
        for _ in 0..schedule.flips_per_step {
            let k = rng.gen_range(0..qubo.n_bits);
            let delta = flip_delta(&qubo, x, k);
            let u: f64 = rng.gen();
            if delta <= 0.0 || u < (-delta / temp).exp() {
                x ^= 1 << k;
                cost += delta;
                accepted += 1;
                if cost < best_cost {
                    best_cost = cost;
                    best_state = x;
                }
            }
        }
        trace.push(Visit {
            step,
            state: x,
            cost,
            accepted,
        });
    }

    Ok(AnnealResult {
        n_bits: qubo.n_bits,
        n_vars: problem.n_vars(),
        best_state,
        // recompute to shed accumulated rounding
        best_cost: qubo.evaluate(best_state),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::cargo_instance;

    #[test]
    fn flip_delta_matches_direct_difference() {
        let p = cargo_instance(&[1, 2, 3], 2, 3).unwrap();
        let m = Multipliers::uniform(6, 13.0, 1.0).unwrap();
        let q = compile_qubo(&p, &RepresentationAssignment::uniform(6, Representation::Qaoa), &m).unwrap();
        for x in [0usize, 0b1011001110101, 0x1fff, 0b101] {
            for k in 0..q.n_bits {
                let direct = q.evaluate(x ^ 1 << k) - q.evaluate(x);
                assert!((flip_delta(&q, x, k) - direct).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn schedule_endpoints() {
        let s = AnnealSchedule {
            t_start: 8.0,
            t_end: 0.5,
            steps: 5,
            ..Default::default()
        };
        assert_eq!(s.temperature(0), 8.0);
        assert!((s.temperature(4) - 0.5).abs() < 1e-12);
        assert!((s.temperature(2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_schedules() {
        for s in [
            AnnealSchedule {
                t_start: 0.1,
                t_end: 1.0,
                ..Default::default()
            },
            AnnealSchedule {
                t_end: 0.0,
                t_start: 0.0,
                ..Default::default()
            },
            AnnealSchedule {
                steps: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(s.validate(), Err(Error::Input(_))));
        }
    }
}

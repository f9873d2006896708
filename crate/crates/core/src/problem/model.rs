use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::basis_string;

/// Largest problem the brute-force oracle will enumerate.
pub const MAX_BRUTE_FORCE_VARS: usize = 24;

/// `Σ coeffs[i]·x_i ≤ bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<i64>,
    pub bound: i64,
    #[serde(default)]
    pub label: String,
}

impl Constraint {
    pub fn lhs(&self, x: usize) -> i64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| x >> i & 1 == 1)
            .map(|(_, &a)| a)
            .sum()
    }

    pub fn is_satisfied(&self, x: usize) -> bool {
        self.lhs(x) <= self.bound
    }
}

/// Maximize `Σ objective[i]·x_i` subject to linear `≤` constraints over bits.
///
/// Variable `i` is bit `i` of an assignment index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedBinaryProblem {
    pub objective: Vec<i64>,
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub labels: Vec<String>,
}

impl ConstrainedBinaryProblem {
    pub fn new(objective: Vec<i64>, constraints: Vec<Constraint>, labels: Vec<String>) -> Result<Self> {
        let p = ConstrainedBinaryProblem {
            objective,
            constraints,
            labels,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if n == 0 {
            return Err(Error::Input("problem has no variables".into()));
        }
        if !self.labels.is_empty() && self.labels.len() != n {
            return Err(Error::Input(format!(
                "{} labels for {n} variables",
                self.labels.len()
            )));
        }
        for (j, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::Input(format!(
                    "constraint {j} has {} coefficients for {n} variables",
                    c.coeffs.len()
                )));
            }
            if c.bound < 0 {
                return Err(Error::Input(format!(
                    "constraint {j} has negative bound {}",
                    c.bound
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: usize) -> i64 {
        self.objective
            .iter()
            .enumerate()
            .filter(|(i, _)| x >> i & 1 == 1)
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn is_feasible(&self, x: usize) -> bool {
        self.constraints.iter().all(|c| c.is_satisfied(x))
    }

    pub fn var_label(&self, i: usize) -> String {
        self.labels.get(i).cloned().unwrap_or_else(|| format!("x{i}"))
    }

    pub fn constraint_label(&self, j: usize) -> String {
        let label = &self.constraints[j].label;
        if label.is_empty() {
            format!("c{j}")
        } else {
            label.clone()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: ConstrainedBinaryProblem =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("problem JSON: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem is always serializable")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Cargo loading: `x_{ij}` places cargo `i` at position `j`.
///
/// Variable index is `i·n_positions + j`. Constraints come in natural order:
/// the weight limit, then one per position, then one per cargo.
pub fn cargo_instance(weights: &[i64], n_positions: usize, capacity: i64) -> Result<ConstrainedBinaryProblem> {
    if weights.is_empty() || n_positions == 0 {
        return Err(Error::Input("need at least one cargo and one position".into()));
    }
    if capacity < 0 || weights.iter().any(|&w| w < 0) {
        return Err(Error::Input("weights and capacity must be non-negative".into()));
    }
    let n_cargo = weights.len();
    let n = n_cargo * n_positions;
    let var = |i: usize, j: usize| i * n_positions + j;

    let mut objective = vec![0; n];
    let mut labels = vec![String::new(); n];
    for (i, &w) in weights.iter().enumerate() {
        for j in 0..n_positions {
            objective[var(i, j)] = w;
            labels[var(i, j)] = format!("x_{i}_{j}");
        }
    }

    let mut constraints = vec![Constraint {
        coeffs: objective.clone(),
        bound: capacity,
        label: "weight".into(),
    }];
    for j in 0..n_positions {
        let mut coeffs = vec![0; n];
        for i in 0..n_cargo {
            coeffs[var(i, j)] = 1;
        }
        constraints.push(Constraint {
            coeffs,
            bound: 1,
            label: format!("position_{j}"),
        });
    }
    for i in 0..n_cargo {
        let mut coeffs = vec![0; n];
        for j in 0..n_positions {
            coeffs[var(i, j)] = 1;
        }
        constraints.push(Constraint {
            coeffs,
            bound: 1,
            label: format!("cargo_{i}"),
        });
    }
    ConstrainedBinaryProblem::new(objective, constraints, labels)
}

/// Exhaustive solution of a [`ConstrainedBinaryProblem`].
#[derive(Clone, Debug, PartialEq)]
pub struct BruteForce {
    pub n_vars: usize,
    pub opt_value: i64,
    pub optimal: BTreeSet<usize>,
    pub feasible: BTreeSet<usize>,
}

impl BruteForce {
    pub fn optimal_strings(&self) -> BTreeSet<String> {
        self.optimal.iter().map(|&x| basis_string(x, self.n_vars)).collect()
    }

    pub fn feasible_strings(&self) -> BTreeSet<String> {
        self.feasible.iter().map(|&x| basis_string(x, self.n_vars)).collect()
    }

    /// Dense lookup tables `(feasible, optimal)` indexed by decision assignment.
    pub fn masks(&self) -> (Vec<bool>, Vec<bool>) {
        let mut feas = vec![false; 1 << self.n_vars];
        let mut opt = vec![false; 1 << self.n_vars];
        for &x in &self.feasible {
            feas[x] = true;
        }
        for &x in &self.optimal {
            opt[x] = true;
        }
        (feas, opt)
    }
}

/// Enumerates all `2^n` assignments.
pub fn brute_force_solve(problem: &ConstrainedBinaryProblem) -> Result<BruteForce> {
    let n = problem.n_vars();
    if n > MAX_BRUTE_FORCE_VARS {
        return Err(Error::Capacity(format!(
            "brute force over {n} variables exceeds {MAX_BRUTE_FORCE_VARS}"
        )));
    }
    let mut opt_value = i64::MIN;
    let mut optimal = BTreeSet::new();
    let mut feasible = BTreeSet::new();
    for x in 0..1usize << n {
        if !problem.is_feasible(x) {
            continue;
        }
        feasible.insert(x);
        let v = problem.objective_value(x);
        if v > opt_value {
            opt_value = v;
            optimal.clear();
        }
        if v == opt_value {
            optimal.insert(x);
        }
    }
    if feasible.is_empty() {
        return Err(Error::Input("problem has no feasible point".into()));
    }
    Ok(BruteForce {
        n_vars: n,
        opt_value,
        optimal,
        feasible,
    })
}

/// How one constraint is realized in the circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Representation {
    /// Squared slack penalty inside the Ising phase return.
    Qaoa,
    /// Flag-conditioned penalty phase.
    Dephase,
    /// Repeated flag projections inside the mixer.
    Zeno,
}

impl Representation {
    pub const ALL: [Representation; 3] = [Representation::Qaoa, Representation::Dephase, Representation::Zeno];

    pub fn name(self) -> &'static str {
        match self {
            Representation::Qaoa => "QAOA",
            Representation::Dephase => "DEPHASE",
            Representation::Zeno => "ZENO",
        }
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "QAOA" | "Q" => Ok(Representation::Qaoa),
            "DEPHASE" | "DEPHASING" | "D" => Ok(Representation::Dephase),
            "ZENO" | "Z" => Ok(Representation::Zeno),
            other => Err(Error::Input(format!("unknown representation '{other}'"))),
        }
    }
}

/// One [`Representation`] per constraint.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RepresentationAssignment(pub Vec<Representation>);

impl RepresentationAssignment {
    pub fn uniform(n: usize, r: Representation) -> Self {
        RepresentationAssignment(vec![r; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> Representation {
        self.0[j]
    }

    pub fn indices_of(&self, r: Representation) -> Vec<usize> {
        (0..self.0.len()).filter(|&j| self.0[j] == r).collect()
    }

    pub fn count(&self, r: Representation) -> usize {
        self.0.iter().filter(|&&x| x == r).count()
    }

    pub fn check_len(&self, n_constraints: usize) -> Result<()> {
        if self.0.len() != n_constraints {
            return Err(Error::Input(format!(
                "assignment has {} entries for {n_constraints} constraints",
                self.0.len()
            )));
        }
        Ok(())
    }

    /// Copy with constraint `j` switched to `r`.
    pub fn with(&self, j: usize, r: Representation) -> Self {
        let mut v = self.0.clone();
        v[j] = r;
        RepresentationAssignment(v)
    }
}

impl fmt::Display for RepresentationAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|r| r.name()).collect();
        write!(f, "{}", names.join(","))
    }
}

impl FromStr for RepresentationAssignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()
            .map(RepresentationAssignment)
    }
}

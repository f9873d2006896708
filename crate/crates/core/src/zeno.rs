//! Dense toy-scale Zeno analysis: survival under repeated projection, its
//! second-order approximation, and the `P H P` limit generator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest dense dimension handled here.
pub const MAX_DENSE_DIM: usize = 256;
const HERMITIAN_TOL: f64 = 1e-12;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

fn check_dim(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}×{} matrix is not square", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 || m.nrows() > MAX_DENSE_DIM {
        return Err(Error::Capacity(format!(
            "dense dimension {} outside 1..={MAX_DENSE_DIM}",
            m.nrows()
        )));
    }
    Ok(())
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Hermitian matrix (ħ = 1).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseHamiltonian {
    matrix: CMatrix,
}

impl DenseHamiltonian {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_dim(&matrix)?;
        let dev = max_abs_diff(&matrix, &matrix.adjoint());
        if dev > HERMITIAN_TOL {
            return Err(Error::Contract(format!("matrix is not Hermitian (deviation {dev:e})")));
        }
        Ok(DenseHamiltonian { matrix })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Shape(format!("need {} entries, got {}", dim * dim, entries.len())));
        }
        Self::new(CMatrix::from_row_iterator(
            dim,
            dim,
            entries.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(CMatrix::zeros(dim, dim))
    }

    /// Seeded random Hermitian matrix with entries of order one.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        Self::new((&a + a.adjoint()).scale(0.5))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `exp(−iHt)` via eigendecomposition.
    pub fn evolution(&self, t: f64) -> CMatrix {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let phases = CVector::from_iterator(
            self.dim(),
            eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        );
        let v = &eig.eigenvectors;
        v * CMatrix::from_diagonal(&phases) * v.adjoint()
    }

    /// `⟨ψ|H|ψ⟩` and `⟨ψ|H²|ψ⟩`.
    pub fn moments(&self, psi: &CVector) -> (f64, f64) {
        let h_psi = &self.matrix * psi;
        (psi.dotc(&h_psi).re, h_psi.norm_squared())
    }

    /// Spectral norm (largest absolute eigenvalue).
    pub fn norm(&self) -> f64 {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .fold(0.0, |m, e| m.max(e.abs()))
    }
}

/// Orthogonal projector.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    matrix: CMatrix,
}

impl Projector {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_dim(&matrix)?;
        let idem = max_abs_diff(&(&matrix * &matrix), &matrix);
        let herm = max_abs_diff(&matrix, &matrix.adjoint());
        if idem > HERMITIAN_TOL || herm > HERMITIAN_TOL {
            return Err(Error::Contract(format!(
                "not an orthogonal projector (P²−P {idem:e}, P†−P {herm:e})"
            )));
        }
        Ok(Projector { matrix })
    }

    /// Projector onto the span of the given computational basis states.
    pub fn from_basis_states(dim: usize, states: &[usize]) -> Result<Self> {
        if let Some(&s) = states.iter().find(|&&s| s >= dim) {
            return Err(Error::Shape(format!("basis state {s} outside dimension {dim}")));
        }
        let mut m = CMatrix::zeros(dim, dim);
        for &s in states {
            m[(s, s)] = Complex64::new(1.0, 0.0);
        }
        Self::new(m)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Pauli X as a two-level Hamiltonian.
pub fn pauli_x() -> DenseHamiltonian {
    DenseHamiltonian::from_real(2, &[0.0, 1.0, 1.0, 0.0]).expect("X is Hermitian")
}

/// Computational basis vector.
pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// Second-order survival estimate `1 − t·ε·Θ` with `ε = t/N` and
/// `Θ = ⟨H²⟩ − ⟨H⟩²`, returned unclamped.
pub fn survival_analytic(h: &DenseHamiltonian, psi0: &CVector, t: f64, n: usize) -> f64 {
    let (m1, m2) = h.moments(psi0);
    let variance = m2 - m1 * m1;
    let eps = t / n.max(1) as f64;
    1.0 - t * eps * variance
}

fn check_compatible(h: &DenseHamiltonian, p: &Projector, psi0: &CVector) -> Result<()> {
    if h.dim() != p.dim() || psi0.len() != h.dim() {
        return Err(Error::Shape(format!(
            "dimensions differ: H {}, P {}, ψ₀ {}",
            h.dim(),
            p.dim(),
            psi0.len()
        )));
    }
    let leak = (p.matrix() * psi0 - psi0).norm();
    if leak > 1e-10 {
        return Err(Error::Contract(format!("ψ₀ is not inside the projected subspace (leak {leak:e})")));
    }
    Ok(())
}

/// `[P·exp(−iHt/N)]^N ψ₀`.
fn projected_evolution(h: &DenseHamiltonian, p: &Projector, psi0: &CVector, t: f64, n: usize) -> CVector {
    let n = n.max(1);
    let step = p.matrix() * h.evolution(t / n as f64);
    let mut psi = psi0.clone();
    for _ in 0..n {
        psi = &step * psi;
    }
    psi
}

/// `‖[P·exp(−iHt/N)]^N ψ₀‖²`.
pub fn survival_empirical(h: &DenseHamiltonian, p: &Projector, psi0: &CVector, t: f64, n: usize) -> Result<f64> {
    check_compatible(h, p, psi0)?;
    let s = projected_evolution(h, p, psi0, t, n).norm_squared() / psi0.norm_squared();
    Ok(s.clamp(0.0, 1.0))
}

/// The Zeno generator `P H P`.
pub fn zeno_hamiltonian(h: &DenseHamiltonian, p: &Projector) -> Result<DenseHamiltonian> {
    if h.dim() != p.dim() {
        return Err(Error::Shape(format!("H has dimension {}, P has {}", h.dim(), p.dim())));
    }
    let m = p.matrix() * h.matrix() * p.matrix();
    // symmetrize away rounding so the Hermitian check is about structure
    DenseHamiltonian::new((&m + m.adjoint()).scale(0.5))
}

/// `‖[P e^{−iHt/N}]^N ψ₀ − P e^{−iPHPt} ψ₀‖`.
pub fn zeno_limit_error(h: &DenseHamiltonian, p: &Projector, psi0: &CVector, t: f64, n: usize) -> Result<f64> {
    check_compatible(h, p, psi0)?;
    let hz = zeno_hamiltonian(h, p)?;
    let limit = p.matrix() * hz.evolution(t) * psi0;
    Ok((projected_evolution(h, p, psi0, t, n) - limit).norm())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Input("need at least two matching points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::Input("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// One row of the two-level Zeno demonstration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZenoDemoRow {
    pub n: usize,
    pub survival_empirical: f64,
    pub survival_closed_form: f64,
    pub survival_analytic: f64,
}

/// Rabi-flip demonstration: `H = X`, `P = |0⟩⟨0|`, `ψ₀ = |0⟩` at time `t`
/// for each measurement count in `n_list`.
pub fn zeno_demo(n_list: &[usize], t: f64) -> Result<Vec<ZenoDemoRow>> {
    let h = pauli_x();
    let p = Projector::from_basis_states(2, &[0])?;
    let psi0 = basis_vector(2, 0);
    n_list
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::Input("measurement counts must be at least 1".into()));
            }
            Ok(ZenoDemoRow {
                n,
                survival_empirical: survival_empirical(&h, &p, &psi0, t, n)?,
                survival_closed_form: (t / n as f64).cos().powi(2 * n as i32),
                survival_analytic: survival_analytic(&h, &psi0, t, n),
            })
        })
        .collect()
}

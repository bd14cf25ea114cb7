//! Dense complex operators, state vectors, and density matrices over the
//! labeled working basis, together with tensor products, the spin partial
//! trace, Hermitian matrix functions, and the state fidelity.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Hermiticity tolerance for density matrices (max entry deviation).
pub const HERM_TOL: f64 = 1e-9;
/// Allowed deviation of Tr ρ from one.
pub const TRACE_TOL: f64 = 1e-9;
/// Smallest admissible eigenvalue of a density matrix.
pub const PSD_TOL: f64 = -1e-8;
/// Eigenvalues of ρ above this (but below zero) are clamped to zero before
/// taking matrix square roots; anything lower is a hard error.
pub const EIG_CLAMP: f64 = -1e-10;

/// Validation tolerances for [`DensityMatrix`]. The module constants above
/// are the defaults; alternative sets can be threaded through configuration.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: HERM_TOL,
            trace: TRACE_TOL,
            min_eigenvalue: PSD_TOL,
        }
    }
}

/// A dense complex square matrix. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let op = Self { m };
        op.check_finite("operator entries")?;
        Ok(op)
    }

    /// Build from row-major complex entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        Self {
            m: DMatrix::from_fn(dim, dim, f),
        }
    }

    /// |i⟩⟨j| in a `dim`-dimensional space.
    pub fn ketbra(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = C64::new(1.0, 0.0);
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.m[(i, j)] = v;
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn dagger(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self { m: &self.m * &rhs.m }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self { m: &self.m + &rhs.m }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self { m: &self.m - &rhs.m }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max-norm distance to another operator.
    pub fn max_norm_diff(&self, other: &Self) -> f64 {
        (&self.m - &other.m).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max entry deviation from Hermiticity, ‖A − A†‖_max.
    pub fn herm_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.m[(i, j)] - self.m[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    fn check_finite(&self, what: &str) -> Result<()> {
        if self.m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite(what.to_string()));
        }
        Ok(())
    }

    /// Eigendecomposition of a Hermitian operator: ascending real eigenvalues
    /// and the corresponding orthonormal eigenvector columns.
    pub fn herm_eigen(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        let defect = self.herm_defect();
        if defect > HERM_TOL {
            return Err(Error::NotHermitian {
                defect,
                tol: HERM_TOL,
            });
        }
        // Symmetrize so roundoff in the input cannot leak into the solve.
        let sym = (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(sym);
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(k));
        }
        Ok((values, vectors))
    }

    /// Apply a scalar function to the eigenvalues of a Hermitian operator and
    /// reassemble in the original basis: f(H) = V f(Λ) V†.
    pub fn herm_matrix_function(&self, f: impl Fn(f64) -> C64) -> Result<Self> {
        let (values, vectors) = self.herm_eigen()?;
        let n = self.dim();
        let fl = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                f(values[i])
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let m = &vectors * fl * vectors.adjoint();
        Self::from_matrix(m)
    }

    /// exp(-i s H) for Hermitian H.
    pub fn herm_exp_i(&self, s: f64) -> Result<Self> {
        self.herm_matrix_function(|lam| C64::new(0.0, -s * lam).exp())
    }

    /// Rescale by the phase that makes the first significant entry (row-major
    /// scan, magnitude above 1e-8 of the maximum) real and positive. Used to
    /// compare unitaries up to a global phase.
    pub fn aligned_global_phase(&self) -> Self {
        let cutoff = 1e-8 * self.max_abs();
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let v = self.m[(i, j)];
                if v.norm() > cutoff {
                    let phase = v / v.norm();
                    return self.scale(phase.conj());
                }
            }
        }
        self.clone()
    }
}

/// Kronecker product; the left factor is the slow (major) index, matching the
/// spin-major basis ordering.
pub fn tensor_product(a: &Operator, b: &Operator) -> Operator {
    Operator {
        m: a.m.kronecker(&b.m),
    }
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    v: DVector<C64>,
}

impl StateVector {
    /// Normalize the given amplitudes. Zero or non-finite input is rejected.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes".into()));
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(Self { v: v / C64::new(norm, 0.0) })
    }

    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch(format!(
                "basis index {index} out of dim {dim}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(amps)
    }

    /// Equal-weight pair (|i⟩ + phase·|j⟩)/√2.
    pub fn pair(dim: usize, i: usize, j: usize, phase: C64) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[i] = C64::new(1.0, 0.0);
        amps[j] = phase;
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn amplitude(&self, i: usize) -> C64 {
        self.v[i]
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.v
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.v.dotc(&other.v)
    }

    pub fn norm(&self) -> f64 {
        self.v.norm()
    }

    /// |self⟩⟨self| as an operator.
    pub fn projector(&self) -> Operator {
        let n = self.dim();
        Operator::from_fn(n, |i, j| self.v[i] * self.v[j].conj())
    }

    pub fn apply(&self, op: &Operator) -> Result<Self> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator dim {} vs state dim {}",
                op.dim(),
                self.dim()
            )));
        }
        let w = op.matrix() * &self.v;
        Ok(Self { v: w })
    }

    /// Kronecker product of two state vectors (left factor is spin-major).
    pub fn tensor(&self, other: &Self) -> Self {
        let n = self.dim() * other.dim();
        let mut amps = Vec::with_capacity(n);
        for a in self.v.iter() {
            for b in other.v.iter() {
                amps.push(a * b);
            }
        }
        Self {
            v: DVector::from_vec(amps),
        }
    }
}

/// A Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub fn from_operator(op: Operator) -> Result<Self> {
        Self::from_operator_with(op, &Tolerances::default())
    }

    pub fn from_operator_with(op: Operator, tol: &Tolerances) -> Result<Self> {
        let rho = Self { op };
        rho.validate(tol)?;
        Ok(rho)
    }

    pub fn pure(state: &StateVector) -> Self {
        Self {
            op: state.projector(),
        }
    }

    /// Wrap without validation; for internal integrator steps whose invariants
    /// are checked at sampling times.
    pub(crate) fn from_operator_unchecked(op: Operator) -> Self {
        Self { op }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn population(&self, i: usize) -> f64 {
        self.op.get(i, i).re
    }

    pub fn purity(&self) -> f64 {
        self.op.mul(&self.op).trace().re
    }

    /// Check Hermiticity, unit trace, and positivity against the given
    /// tolerances, returning the violated invariant by name.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        self.op.check_finite("density matrix")?;
        let defect = self.op.herm_defect();
        if defect > tol.hermiticity {
            return Err(Error::NotHermitian {
                defect,
                tol: tol.hermiticity,
            });
        }
        let tr = self.op.trace();
        let tr_defect = (tr - C64::new(1.0, 0.0)).norm();
        if tr_defect > tol.trace {
            return Err(Error::NotUnitTrace {
                defect: tr_defect,
                tol: tol.trace,
            });
        }
        let (values, _) = self.op.herm_eigen()?;
        let min_eig = values.first().copied().unwrap_or(0.0);
        if min_eig < tol.min_eigenvalue {
            return Err(Error::NotPositiveSemidefinite {
                min_eig,
                tol: tol.min_eigenvalue,
            });
        }
        Ok(())
    }

    /// Trace out the spin factor of a spin-major composite space, leaving the
    /// Rydberg factor. The input dimension must be even.
    pub fn partial_trace_spin(&self) -> Result<DensityMatrix> {
        let dim = self.dim();
        if dim % 2 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "partial trace over spin requires even dimension, got {dim}"
            )));
        }
        let d = dim / 2;
        let reduced = Operator::from_fn(d, |i, j| {
            self.op.get(i, j) + self.op.get(d + i, d + j)
        });
        Ok(DensityMatrix { op: reduced })
    }

    /// √ρ with small negative eigenvalues clamped to zero. Eigenvalues below
    /// [`EIG_CLAMP`] beyond the PSD tolerance are rejected upstream.
    fn sqrt_clamped(&self) -> Result<Operator> {
        self.op.herm_matrix_function(|lam| {
            let l = if lam < 0.0 { 0.0 } else { lam };
            C64::new(l.sqrt(), 0.0)
        })
    }
}

/// State fidelity F = Tr√(√ρ ρ_ideal √ρ), with all eigendecompositions
/// clamped at [`EIG_CLAMP`] to absorb integrator positivity drift. The trace
/// of the sandwich root is evaluated as the nuclear norm ‖√ρ_ideal·√ρ‖₁,
/// which is symmetric in the arguments by construction and avoids the √
/// amplification of eigenvalue noise near zero.
pub fn state_fidelity(rho: &DensityMatrix, rho_ideal: &DensityMatrix) -> Result<f64> {
    if rho.dim() != rho_ideal.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between dim {} and dim {}",
            rho.dim(),
            rho_ideal.dim()
        )));
    }
    for r in [rho, rho_ideal] {
        let (values, _) = r.op.herm_eigen()?;
        let min_eig = values.first().copied().unwrap_or(0.0);
        if min_eig < PSD_TOL {
            return Err(Error::NotPositiveSemidefinite {
                min_eig,
                tol: PSD_TOL,
            });
        }
    }
    let product = rho_ideal.sqrt_clamped()?.mul(&rho.sqrt_clamped()?);
    let svd = product.matrix().clone().svd(false, false);
    let f: f64 = svd.singular_values.iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

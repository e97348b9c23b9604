//! Unital inclusions `N ⊆ M` with a faithful trace on `M`.

use nalgebra::DMatrix;

use crate::algebra::{FinDimAlgebra, TraceFunctional};
use crate::error::{Error, Result};
use crate::linalg::{self, frobenius_distance, hs_gram_schmidt, identity, kron, pf_eigenvector, zeros, CMatrix, Subspace};
use crate::scalar::Real;

/// Linear map on matrices.
#[derive(Debug, Clone)]
pub enum Superoperator<T: Real> {
    /// `x ↦ Σ_k K_k x K_k*`.
    Kraus(Vec<CMatrix<T>>),
    /// `x ↦ Σ_k τ(b_k x) b_k` for a trace-orthonormal self-adjoint family `b_k`,
    /// with `τ = Tr(density ·)`.
    Expectation { basis: Vec<CMatrix<T>>, density: CMatrix<T> },
    /// Matrix acting on row-major vectorisations of `dim × dim` inputs.
    Linear { dim: usize, matrix: CMatrix<T> },
}

impl<T: Real> Superoperator<T> {
    pub fn apply(&self, x: &CMatrix<T>) -> CMatrix<T> {
        match self {
            Self::Kraus(ops) => {
                let mut out = zeros::<T>(ops[0].nrows(), ops[0].nrows());
                for k in ops {
                    out += k * x * k.adjoint();
                }
                out
            }
            Self::Expectation { basis, density } => {
                let mut out = zeros::<T>(x.nrows(), x.ncols());
                let dx = density * x;
                for b in basis {
                    out += b * linalg::trace_product(b, &dx);
                }
                out
            }
            Self::Linear { dim, matrix } => {
                linalg::unvectorize(&(matrix * linalg::vectorize(x)), *dim, *dim)
            }
        }
    }

    /// Choi matrix `Σ_ij E_ij ⊗ T(E_ij)` for inputs of size `n`.
    pub fn choi(&self, n: usize) -> CMatrix<T> {
        let mut out: Option<CMatrix<T>> = None;
        for i in 0..n {
            for j in 0..n {
                let e = linalg::matrix_unit::<T>(n, i, j);
                let term = kron(&e, &self.apply(&e));
                out = Some(match out {
                    Some(acc) => acc + term,
                    None => term,
                });
            }
        }
        out.unwrap_or_else(|| zeros(0, 0))
    }

    /// `‖T(1) − 1‖`.
    pub fn unitality_residual(&self, n: usize) -> T {
        frobenius_distance(&self.apply(&identity(n)), &identity(n))
    }

    /// Completely positive (Kraus form, or PSD Choi matrix) and unital.
    pub fn is_ucp(&self, n: usize, tol: &linalg::Tolerance<T>) -> bool {
        let cp = match self {
            Self::Kraus(_) => true,
            _ => linalg::is_psd(&self.choi(n), tol),
        };
        cp && tol.accepts(self.unitality_residual(n), T::of_usize(n).sqrt())
    }
}

/// Unital inclusion `N ⊆ M ⊆ M_n(ℂ)` with a faithful trace `τ` on `M`.
#[derive(Debug, Clone)]
pub struct Inclusion<T: Real> {
    small: FinDimAlgebra<T>,
    big: FinDimAlgebra<T>,
    trace: TraceFunctional<T>,
    lambda: Vec<Vec<usize>>,
    small_basis: Vec<CMatrix<T>>,
    big_basis: Vec<CMatrix<T>>,
    connected: bool,
}

/// Inclusion matrix with rows indexed by blocks of `big` and columns by blocks of `small`.
pub fn inclusion_matrix<T: Real>(small: &FinDimAlgebra<T>, big: &FinDimAlgebra<T>) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for mb in big.blocks() {
        let mut row = Vec::new();
        for nb in small.blocks() {
            let p = nb.matrix_unit(0, 0);
            let value = linalg::trace_product(mb.central_projection(), &p).re / T::of_usize(mb.multiplicity());
            let rounded = value.round();
            if (value - rounded).abs() > T::lit(1e-6) || rounded < T::zero() {
                return Err(Error::Internal(format!(
                    "inclusion multiplicity {} is not an integer",
                    value.to_f64_lossy()
                )));
            }
            row.push(rounded.to_usize().unwrap_or(0));
        }
        out.push(row);
    }
    Ok(out)
}

fn lambda_matrix<T: Real>(lambda: &[Vec<usize>]) -> DMatrix<T> {
    let cols = lambda.first().map_or(0, Vec::len);
    DMatrix::from_fn(lambda.len(), cols, |i, j| T::of_usize(lambda[i][j]))
}

/// Markov trace on `big`: weights from the Perron-Frobenius vector of `ΛΛᵀ`.
pub fn markov_trace<T: Real>(small: &FinDimAlgebra<T>, big: &FinDimAlgebra<T>) -> Result<TraceFunctional<T>> {
    let lambda = lambda_matrix::<T>(&inclusion_matrix(small, big)?);
    let (_, v) = pf_eigenvector(&(&lambda * lambda.transpose()))?;
    let total = big
        .blocks()
        .iter()
        .zip(v.iter())
        .fold(T::zero(), |acc, (b, &t)| acc + t * T::of_usize(b.dim()));
    let weights: Vec<T> = v.iter().map(|&t| t / total).collect();
    TraceFunctional::new(big, &weights)
}

impl<T: Real> Inclusion<T> {
    pub fn new(small: FinDimAlgebra<T>, big: FinDimAlgebra<T>, trace: TraceFunctional<T>, tol: T) -> Result<Self> {
        let n = big.ambient_dim();
        if small.ambient_dim() != n {
            return Err(Error::Dimension(format!(
                "N lives in M_{} but M lives in M_{n}",
                small.ambient_dim()
            )));
        }
        let outside = small.basis().iter().fold(T::zero(), |m, b| m.max(big.residual(b)));
        if outside > tol.max(T::lit(1e-9)) * T::lit(1e3) {
            return Err(Error::Precondition(format!(
                "N is not contained in M (residual {:.3e})",
                outside.to_f64_lossy()
            )));
        }
        if frobenius_distance(&small.unit(), &big.unit()) > T::lit(1e-6) {
            return Err(Error::Precondition("N and M have different units".into()));
        }
        if trace.weights().len() != big.blocks().len() {
            return Err(Error::Trace("trace weights do not match the blocks of M".into()));
        }
        let lambda = inclusion_matrix(&small, &big)?;
        let ip = |x: &CMatrix<T>, y: &CMatrix<T>| trace.inner(x, y);
        let small_basis: Vec<CMatrix<T>> = hs_gram_schmidt(small.basis(), ip, T::lit(1e-9))
            .iter()
            .map(linalg::hermitian_part)
            .collect();
        let big_basis = big.trace_orthonormal_basis(&trace);
        let small_center = Subspace::spanned_by(n, n, &small.central_projections(), tol);
        let big_center = Subspace::spanned_by(n, n, &big.central_projections(), tol);
        let connected = small_center.intersect(&big_center, T::lit(1e-8)).dim() == 1;
        Ok(Self { small, big, trace, lambda, small_basis, big_basis, connected })
    }

    /// Inclusion carrying its Markov trace.
    pub fn with_markov_trace(small: FinDimAlgebra<T>, big: FinDimAlgebra<T>, tol: T) -> Result<Self> {
        let trace = markov_trace(&small, &big)?;
        Self::new(small, big, trace, tol)
    }

    /// `ℂ ⊆ M_n`.
    pub fn scalars_in_full(n: usize) -> Result<Self> {
        Self::with_markov_trace(FinDimAlgebra::scalars(n), FinDimAlgebra::full(n), T::lit(1e-9))
    }

    /// `ℓ∞_n ⊆ M_n` (diagonal matrices).
    pub fn diagonal_in_full(n: usize) -> Result<Self> {
        Self::block_diagonal_in_full(n, 1)
    }

    /// `⊕^k M_l ⊆ M_{kl}` embedded block diagonally.
    pub fn block_diagonal_in_full(k: usize, l: usize) -> Result<Self> {
        let small = FinDimAlgebra::block_diagonal(&vec![(l, 1); k])?;
        Self::with_markov_trace(small, FinDimAlgebra::full(k * l), T::lit(1e-9))
    }

    /// `1_a ⊗ M_b ⊆ M_{ab}`.
    pub fn ampliation(a: usize, b: usize) -> Result<Self> {
        let tol = T::lit(1e-9);
        let small = FinDimAlgebra::full(b).represent(a * b, |x| kron(&identity(a), x), tol)?;
        Self::with_markov_trace(small, FinDimAlgebra::full(a * b), tol)
    }

    /// `ℂ ⊆ M` for a given algebra `M`.
    pub fn scalars_in(big: FinDimAlgebra<T>) -> Result<Self> {
        let n = big.ambient_dim();
        Self::with_markov_trace(FinDimAlgebra::scalars(n), big, T::lit(1e-9))
    }

    pub fn small(&self) -> &FinDimAlgebra<T> {
        &self.small
    }

    pub fn big(&self) -> &FinDimAlgebra<T> {
        &self.big
    }

    pub fn trace(&self) -> &TraceFunctional<T> {
        &self.trace
    }

    pub fn ambient_dim(&self) -> usize {
        self.big.ambient_dim()
    }

    /// Trace-orthonormal self-adjoint basis of `N`.
    pub fn small_basis(&self) -> &[CMatrix<T>] {
        &self.small_basis
    }

    /// Trace-orthonormal self-adjoint basis of `M`.
    pub fn big_basis(&self) -> &[CMatrix<T>] {
        &self.big_basis
    }

    /// `Λ` with rows indexed by blocks of `M`, columns by blocks of `N`.
    pub fn inclusion_matrix(&self) -> &[Vec<usize>] {
        &self.lambda
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// `[M:N] = ‖Λ‖²`.
    pub fn index(&self) -> Result<T> {
        if !self.connected {
            return Err(Error::Connectedness("Z(N) ∩ Z(M) is larger than the scalars".into()));
        }
        let lambda = lambda_matrix::<T>(&self.lambda);
        Ok(pf_eigenvector(&(lambda.transpose() * &lambda))?.0)
    }

    /// Whether the trace is the Markov trace of the inclusion.
    pub fn has_markov_trace(&self, tol: T) -> bool {
        markov_trace(&self.small, &self.big).is_ok_and(|m| {
            m.weights().iter().zip(self.trace.weights()).all(|(a, b)| (*a - *b).abs() <= tol)
        })
    }

    /// Trace-preserving conditional expectation `E_N: M → N`.
    pub fn conditional_expectation(&self) -> Superoperator<T> {
        Superoperator::Expectation { basis: self.small_basis.clone(), density: self.trace.density().clone() }
    }

    pub fn expect(&self, x: &CMatrix<T>) -> CMatrix<T> {
        let dx = self.trace.density() * x;
        let mut out = zeros::<T>(x.nrows(), x.ncols());
        for b in &self.small_basis {
            out += b * linalg::trace_product(b, &dx);
        }
        out
    }

    /// Relative commutant `N′ ∩ M`.
    pub fn relative_commutant(&self, tol: T) -> Result<FinDimAlgebra<T>> {
        self.small.commutant().intersect(&self.big, tol)
    }

    /// `τ(x)` as a real number for self-adjoint inputs.
    pub fn tau(&self, x: &CMatrix<T>) -> T {
        self.trace.eval(x).re
    }
}

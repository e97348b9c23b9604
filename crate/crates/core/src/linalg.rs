//! Dense complex linear algebra on top of nalgebra.
//!
//! Tensor factors follow the row-major convention throughout: the basis vector
//! `|i⟩⊗|j⟩` of `ℂᵃ⊗ℂᵇ` has index `i·b + j`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{re, Real, C};

pub type CMatrix<T> = DMatrix<C<T>>;
pub type CVector<T> = DVector<C<T>>;

/// Seeded generator used for every randomized construction and check.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Absolute and relative thresholds on Frobenius norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self { abs: T::lit(1e-9), rel: T::lit(1e-9) }
    }
}

impl<T: Real> Tolerance<T> {
    pub fn new(abs: T, rel: T) -> Result<Self> {
        if abs < T::zero() || rel < T::zero() || (abs == T::zero() && rel == T::zero()) {
            return Err(Error::Precondition("tolerance needs abs > 0 or rel > 0".into()));
        }
        Ok(Self { abs, rel })
    }

    pub fn absolute(abs: T) -> Self {
        Self { abs, rel: T::zero() }
    }

    /// Whether `residual` is negligible against a quantity of size `scale`.
    pub fn accepts(&self, residual: T, scale: T) -> bool {
        residual <= self.abs + self.rel * scale
    }

    /// Threshold used for rank decisions on singular values.
    pub fn rank_cutoff(&self, largest: T) -> T {
        self.abs * largest.max(T::one())
    }
}

pub fn identity<T: Real>(n: usize) -> CMatrix<T> {
    CMatrix::identity(n, n)
}

pub fn zeros<T: Real>(rows: usize, cols: usize) -> CMatrix<T> {
    CMatrix::zeros(rows, cols)
}

/// Builds a matrix from row-major entries, rejecting non-finite values.
pub fn from_row_major<T: Real>(rows: usize, cols: usize, entries: &[C<T>]) -> Result<CMatrix<T>> {
    if rows * cols != entries.len() {
        return Err(Error::Dimension(format!(
            "{rows}x{cols} matrix needs {} entries, got {}",
            rows * cols,
            entries.len()
        )));
    }
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Precondition("matrix entries must be finite".into()));
    }
    Ok(CMatrix::from_row_slice(rows, cols, entries))
}

/// Builds a real diagonal matrix.
pub fn diag<T: Real>(values: &[T]) -> CMatrix<T> {
    let v = DVector::from_iterator(values.len(), values.iter().map(|&x| re(x)));
    CMatrix::from_diagonal(&v)
}

pub fn dagger<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    a.adjoint()
}

pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<T: Real>(factors: &[&CMatrix<T>]) -> CMatrix<T> {
    factors
        .iter()
        .fold(identity::<T>(1), |acc, f| acc.kronecker(*f))
}

pub fn scale<T: Real>(a: &CMatrix<T>, s: T) -> CMatrix<T> {
    a * re(s)
}

pub fn hermitian_part<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    (a + a.adjoint()) * re(T::lit(0.5))
}

/// `Tr(a b)` without forming the product.
pub fn trace_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> C<T> {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = C::new(T::zero(), T::zero());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Hilbert-Schmidt inner product `Tr(y* x)`, linear in `x`.
pub fn hs_inner<T: Real>(x: &CMatrix<T>, y: &CMatrix<T>) -> C<T> {
    y.dotc(x)
}

pub fn frobenius_norm<T: Real>(a: &CMatrix<T>) -> T {
    a.norm()
}

pub fn frobenius_distance<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    (a - b).norm()
}

/// Commutator norm `‖ab − ba‖`.
pub fn commutator_norm<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    (a * b - b * a).norm()
}

/// Row-major vectorisation.
pub fn vectorize<T: Real>(a: &CMatrix<T>) -> CVector<T> {
    let (r, c) = a.shape();
    CVector::from_fn(r * c, |k, _| a[(k / c, k % c)])
}

/// Inverse of [`vectorize`].
pub fn unvectorize<T: Real>(v: &CVector<T>, rows: usize, cols: usize) -> CMatrix<T> {
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

pub fn outer<T: Real>(v: &CVector<T>, w: &CVector<T>) -> CMatrix<T> {
    v * w.adjoint()
}

fn check_dims(n: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != n || dims.is_empty() {
        return Err(Error::Dimension(format!(
            "leg dimensions {dims:?} do not multiply to {n}"
        )));
    }
    Ok(())
}

/// Traces out the legs listed in `legs` (0-based). With `normalise` the result is
/// divided by the traced dimension, so `Tr` becomes the normalised trace.
pub fn partial_trace<T: Real>(
    x: &CMatrix<T>,
    dims: &[usize],
    legs: &[usize],
    normalise: bool,
) -> Result<CMatrix<T>> {
    if !x.is_square() {
        return Err(Error::Dimension("partial trace of a non-square matrix".into()));
    }
    check_dims(x.nrows(), dims)?;
    if let Some(&bad) = legs.iter().find(|&&l| l >= dims.len()) {
        return Err(Error::Dimension(format!("leg {bad} out of range for {} legs", dims.len())));
    }
    let traced: Vec<bool> = (0..dims.len()).map(|l| legs.contains(&l)).collect();
    let kept_dim: usize = dims.iter().zip(&traced).filter(|(_, t)| !**t).map(|(d, _)| d).product();
    let traced_dim: usize = dims.iter().zip(&traced).filter(|(_, t)| **t).map(|(d, _)| d).product();

    // full_index[k][t]: ambient index of (kept multi-index k, traced multi-index t).
    let mut full_index = vec![vec![0usize; traced_dim]; kept_dim];
    for full in 0..x.nrows() {
        let (mut rem, mut k, mut t) = (full, 0usize, 0usize);
        let (mut kstride, mut tstride) = (1usize, 1usize);
        for leg in (0..dims.len()).rev() {
            let digit = rem % dims[leg];
            rem /= dims[leg];
            if traced[leg] {
                t += digit * tstride;
                tstride *= dims[leg];
            } else {
                k += digit * kstride;
                kstride *= dims[leg];
            }
        }
        full_index[k][t] = full;
    }

    let mut out = zeros::<T>(kept_dim, kept_dim);
    for r in 0..kept_dim {
        for c in 0..kept_dim {
            let mut acc = C::new(T::zero(), T::zero());
            for t in 0..traced_dim {
                acc += x[(full_index[r][t], full_index[c][t])];
            }
            out[(r, c)] = acc;
        }
    }
    if normalise {
        out /= re(T::of_usize(traced_dim));
    }
    Ok(out)
}

/// Reorders tensor legs: output leg `i` is input leg `perm[i]`.
pub fn permute_legs<T: Real>(x: &CMatrix<T>, dims: &[usize], perm: &[usize]) -> Result<CMatrix<T>> {
    check_dims(x.nrows(), dims)?;
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::Dimension(format!("{perm:?} is not a permutation of {} legs", dims.len())));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let n = x.nrows();
    // map[new_index] = old_index
    let mut map = vec![0usize; n];
    let mut digits = vec![0usize; dims.len()];
    for (new, slot) in map.iter_mut().enumerate() {
        let mut rem = new;
        for leg in (0..new_dims.len()).rev() {
            digits[perm[leg]] = rem % new_dims[leg];
            rem /= new_dims[leg];
        }
        *slot = digits.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d);
    }
    Ok(CMatrix::from_fn(n, n, |i, j| x[(map[i], map[j])]))
}

/// Orthonormalises `vs` under the sesquilinear form `ip(x, y)` (linear in `x`).
/// Vectors whose residual norm falls below `tol` are dropped.
pub fn hs_gram_schmidt<T, F>(vs: &[CMatrix<T>], ip: F, tol: T) -> Vec<CMatrix<T>>
where
    T: Real,
    F: Fn(&CMatrix<T>, &CMatrix<T>) -> C<T>,
{
    let mut out: Vec<CMatrix<T>> = Vec::new();
    for v in vs {
        let size = ip(v, v).re.max(T::zero()).sqrt();
        let mut w = v.clone();
        // Two passes keep the output orthonormal to working precision.
        for _ in 0..2 {
            for q in &out {
                let c = ip(&w, q);
                w -= q * c;
            }
        }
        let norm = ip(&w, &w).re.max(T::zero()).sqrt();
        if norm > tol * size.max(T::one()) {
            out.push(w / re(norm));
        }
    }
    out
}

/// Orthonormal basis of the kernel of `a`, as column vectors: the orthogonal
/// complement of the row space.
pub fn nullspace<T: Real>(a: &CMatrix<T>, tol: T) -> Vec<CVector<T>> {
    let cols = a.ncols();
    if cols == 0 {
        return Vec::new();
    }
    let rows = column_space(&a.adjoint(), tol);
    let complement = identity::<T>(cols) - &rows * rows.adjoint();
    let basis = pivoted_gram_schmidt(&complement, T::zero(), cols - rows.ncols());
    (0..basis.ncols()).map(|k| basis.column(k).into_owned()).collect()
}

/// Orthonormal basis (columns) of the column space of `a`. Columns whose
/// residual falls below `tol · max(1, largest column norm)` count as dependent.
pub fn column_space<T: Real>(a: &CMatrix<T>, tol: T) -> CMatrix<T> {
    let largest = a.column_iter().fold(T::zero(), |m, c| m.max(c.norm()));
    pivoted_gram_schmidt(a, tol * largest.max(T::one()), a.nrows())
}

/// Gram–Schmidt with column pivoting and reorthogonalisation: repeatedly takes
/// the remaining column of largest residual norm, stopping at `limit` vectors or
/// once every residual is at most `cutoff`.
///
/// nalgebra's complex SVD can stop early on nearly rank-deficient input, so
/// subspace computations go through this routine instead.
fn pivoted_gram_schmidt<T: Real>(a: &CMatrix<T>, cutoff: T, limit: usize) -> CMatrix<T> {
    let (one, zero) = (re(T::one()), re(T::zero()));
    let mut rest = a.clone();
    let mut used = vec![false; a.ncols()];
    let mut overlaps = CVector::<T>::zeros(a.ncols());
    let mut basis: Vec<CVector<T>> = Vec::new();
    while basis.len() < limit.min(a.nrows()) {
        let (pivot, norm) = (0..a.ncols())
            .filter(|&j| !used[j])
            .map(|j| (j, rest.column(j).norm()))
            .fold((0, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if norm <= cutoff || norm == T::zero() {
            break;
        }
        used[pivot] = true;
        let mut q = rest.column(pivot).into_owned();
        for b in &basis {
            let overlap = b.dotc(&q);
            q.axpy(-overlap, b, one);
        }
        let q_norm = q.norm();
        if q_norm == T::zero() {
            continue;
        }
        q /= re(q_norm);
        for _ in 0..2 {
            // rest ← (1 − q q*) rest
            overlaps.gemv_ad(one, &rest, &q, zero);
            rest.gerc(-one, &q, &overlaps, one);
        }
        basis.push(q);
    }
    if basis.is_empty() {
        return zeros(a.nrows(), 0);
    }
    CMatrix::from_columns(&basis)
}

fn strongly_connected<T: Real>(a: &DMatrix<T>) -> bool {
    let n = a.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { a[(i, j)] } else { a[(j, i)] };
                if w > T::zero() && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n <= 1 || (reach(true) && reach(false))
}

/// Perron-Frobenius eigenvalue and positive eigenvector (unit 1-norm) of a
/// nonnegative irreducible matrix.
pub fn pf_eigenvector<T: Real>(a: &DMatrix<T>) -> Result<(T, DVector<T>)> {
    let n = a.nrows();
    if n == 0 || !a.is_square() {
        return Err(Error::Dimension("Perron-Frobenius needs a nonempty square matrix".into()));
    }
    if a.iter().any(|&x| x < T::zero()) {
        return Err(Error::Precondition("Perron-Frobenius needs a nonnegative matrix".into()));
    }
    if !strongly_connected(a) {
        return Err(Error::Connectedness("matrix is reducible".into()));
    }
    let symmetric = (a - a.transpose()).norm() <= T::default_epsilon() * a.norm().max(T::one());
    let mut v = if symmetric {
        let eig = a.clone().symmetric_eigen();
        let top = (0..n)
            .max_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap())
            .unwrap();
        eig.eigenvectors.column(top).into_owned()
    } else {
        // Power iteration on 1 + a, which is primitive when a is irreducible.
        let shifted = a + DMatrix::<T>::identity(n, n);
        let mut v = DVector::from_element(n, T::one() / T::of_usize(n));
        for _ in 0..1_000_000 {
            let mut next = &shifted * &v;
            let s = next.sum();
            next /= s;
            let delta = (&next - &v).abs().sum();
            v = next;
            if delta <= T::default_epsilon() * T::lit(16.0) {
                break;
            }
        }
        v
    };
    if v.sum() < T::zero() {
        v = -v;
    }
    let s = v.sum();
    v /= s;
    if v.iter().any(|&x| x <= T::zero()) {
        return Err(Error::Internal("Perron-Frobenius vector is not strictly positive".into()));
    }
    let av = a * &v;
    let eigenvalue = av.sum() / v.sum();
    Ok((eigenvalue, v))
}

/// Eigenvalues (ascending) and eigenvectors (columns) of the Hermitian part of `a`.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let h = hermitian_part(a);
    let eig = h.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn spectral_map<T: Real>(a: &CMatrix<T>, f: impl Fn(T) -> T) -> CMatrix<T> {
    let (values, vectors) = hermitian_eigen(a);
    let mapped: Vec<T> = values.into_iter().map(f).collect();
    &vectors * diag(&mapped) * vectors.adjoint()
}

/// Positive square root of a PSD matrix. Eigenvalues below `-tol` are rejected.
pub fn matrix_sqrt<T: Real>(p: &CMatrix<T>, tol: T) -> Result<CMatrix<T>> {
    let (values, _) = hermitian_eigen(p);
    let scale = p.norm().max(T::one());
    if values.first().is_some_and(|&v| v < -tol * scale) {
        return Err(Error::Precondition("matrix square root of a non-PSD matrix".into()));
    }
    Ok(spectral_map(p, |v| v.max(T::zero()).sqrt()))
}

/// Unitary factor of the polar decomposition `a = U |a|`, for invertible `a`.
pub fn polar_unitary<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    if !a.is_square() {
        return Err(Error::Dimension("polar decomposition of a non-square matrix".into()));
    }
    let (values, vectors) = hermitian_eigen(&(a.adjoint() * a));
    let largest = values.last().copied().unwrap_or_else(T::zero);
    if values.first().is_none_or(|&v| v <= T::default_epsilon().sqrt() * largest.max(T::one())) {
        return Err(Error::Precondition("polar unitary of a singular matrix is not unique".into()));
    }
    let inv_root: Vec<T> = values.iter().map(|&v| T::one() / v.sqrt()).collect();
    Ok(a * &vectors * diag(&inv_root) * vectors.adjoint())
}

pub fn is_hermitian<T: Real>(a: &CMatrix<T>, tol: &Tolerance<T>) -> bool {
    a.is_square() && tol.accepts((a - a.adjoint()).norm(), a.norm())
}

pub fn is_projection<T: Real>(p: &CMatrix<T>, tol: &Tolerance<T>) -> bool {
    is_hermitian(p, tol) && tol.accepts((p * p - p).norm(), p.norm())
}

pub fn is_unitary<T: Real>(u: &CMatrix<T>, tol: &Tolerance<T>) -> bool {
    u.is_square() && {
        let n = u.nrows();
        let scale = T::of_usize(n).sqrt();
        tol.accepts((u.adjoint() * u - identity::<T>(n)).norm(), scale)
            && tol.accepts((u * u.adjoint() - identity::<T>(n)).norm(), scale)
    }
}

pub fn is_psd<T: Real>(a: &CMatrix<T>, tol: &Tolerance<T>) -> bool {
    is_hermitian(a, tol) && {
        let (values, _) = hermitian_eigen(a);
        values.first().is_none_or(|&v| v >= -(tol.abs + tol.rel * a.norm()))
    }
}

pub fn min_eigenvalue<T: Real>(a: &CMatrix<T>) -> T {
    hermitian_eigen(a).0.first().copied().unwrap_or_else(T::zero)
}

fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.gen_range(-1.0..1.0))
}

pub fn random_matrix<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix<T> {
    let mut out = zeros::<T>(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = Complex::new(uniform(rng), uniform(rng));
        }
    }
    out
}

pub fn random_hermitian<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix<T> {
    hermitian_part(&random_matrix(n, n, rng))
}

/// Full-rank density matrix `g g* / Tr(g g*)`.
pub fn random_density<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix<T> {
    let g = random_matrix::<T, R>(n, n, rng);
    let p = &g * g.adjoint();
    let t = p.trace();
    p / t
}

pub fn random_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix<T> {
    polar_unitary(&random_matrix(n, n, rng)).expect("square")
}

/// Real coefficients drawn uniformly from `[-1, 1)`.
pub fn random_reals<T: Real, R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<T> {
    (0..k).map(|_| uniform(rng)).collect()
}

/// Linear combination `Σ c_k m_k`.
pub fn combine<T: Real>(coeffs: &[C<T>], mats: &[CMatrix<T>]) -> CMatrix<T> {
    let (r, c) = mats.first().map_or((0, 0), |m| m.shape());
    let mut out = zeros::<T>(r, c);
    for (k, m) in coeffs.iter().zip(mats) {
        out += m * *k;
    }
    out
}

/// Linear span of matrices of a fixed shape, with an HS-orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace<T: Real> {
    rows: usize,
    cols: usize,
    // Columns are row-major vectorisations of the orthonormal basis.
    frame: CMatrix<T>,
}

impl<T: Real> Subspace<T> {
    pub fn spanned_by(rows: usize, cols: usize, mats: &[CMatrix<T>], tol: T) -> Self {
        let stacked = CMatrix::from_fn(rows * cols, mats.len(), |k, m| mats[m][(k / cols, k % cols)]);
        Self { rows, cols, frame: column_space(&stacked, tol) }
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn basis(&self) -> Vec<CMatrix<T>> {
        (0..self.dim())
            .map(|k| unvectorize(&self.frame.column(k).into_owned(), self.rows, self.cols))
            .collect()
    }

    pub fn project(&self, x: &CMatrix<T>) -> CMatrix<T> {
        let v = vectorize(x);
        let coeffs = self.frame.adjoint() * &v;
        unvectorize(&(&self.frame * coeffs), self.rows, self.cols)
    }

    /// Distance from `x` to the subspace.
    pub fn residual(&self, x: &CMatrix<T>) -> T {
        frobenius_distance(x, &self.project(x))
    }

    /// Largest residual of `xs`.
    pub fn max_residual<'a>(&self, xs: impl IntoIterator<Item = &'a CMatrix<T>>) -> T {
        xs.into_iter().fold(T::zero(), |m, x| m.max(self.residual(x)))
    }

    /// Orthogonal projector onto the subspace, acting on vectorised matrices.
    pub fn projector(&self) -> CMatrix<T> {
        &self.frame * self.frame.adjoint()
    }

    /// Frobenius distance between the two span projectors.
    pub fn distance(&self, other: &Self) -> T {
        // ‖P − Q‖² = dim P + dim Q − 2‖P Q‖² for orthonormal frames.
        let overlap = (self.frame.adjoint() * &other.frame).norm_squared();
        (T::of_usize(self.dim() + other.dim()) - T::lit(2.0) * overlap).max(T::zero()).sqrt()
    }

    /// Orthonormal basis of the intersection with `other`.
    pub fn intersect(&self, other: &Self, tol: T) -> Self {
        let (a, b) = (&self.frame, &other.frame);
        let stacked = CMatrix::from_fn(a.nrows(), a.ncols() + b.ncols(), |r, c| {
            if c < a.ncols() {
                a[(r, c)]
            } else {
                -b[(r, c - a.ncols())]
            }
        });
        let kernel = nullspace(&stacked, tol);
        let vectors = CMatrix::from_fn(a.nrows(), kernel.len(), |r, k| {
            let coeffs = kernel[k].rows(0, a.ncols());
            (a.row(r) * coeffs)[(0, 0)]
        });
        Self { rows: self.rows, cols: self.cols, frame: column_space(&vectors, tol) }
    }
}

/// Hermitian, HS-orthonormal basis of `M_n` (generalised Gell-Mann matrices and
/// normalised diagonal units).
pub fn hermitian_matrix_basis<T: Real>(n: usize) -> Vec<CMatrix<T>> {
    let half = T::lit(0.5).sqrt();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut m = zeros::<T>(n, n);
            match i.cmp(&j) {
                std::cmp::Ordering::Equal => m[(i, i)] = re(T::one()),
                std::cmp::Ordering::Less => {
                    m[(i, j)] = re(half);
                    m[(j, i)] = re(half);
                }
                std::cmp::Ordering::Greater => {
                    m[(i, j)] = Complex::new(T::zero(), half);
                    m[(j, i)] = Complex::new(T::zero(), -half);
                }
            }
            out.push(m);
        }
    }
    out
}

/// Matrix unit `|i⟩⟨j|` in `M_n`.
pub fn matrix_unit<T: Real>(n: usize, i: usize, j: usize) -> CMatrix<T> {
    let mut m = zeros::<T>(n, n);
    m[(i, j)] = re(T::one());
    m
}

/// Maximally entangled unit vector `n^{-1/2} Σ_k |kk⟩`.
pub fn max_entangled<T: Real>(n: usize) -> CVector<T> {
    let mut v = CVector::zeros(n * n);
    let w = re(T::one() / T::of_usize(n).sqrt());
    for k in 0..n {
        v[k * n + k] = w;
    }
    v
}

/// Real least-squares solution of `a x ≈ b` and its residual norm.
pub fn real_least_squares<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> Result<(DVector<T>, T)> {
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, T::default_epsilon() * T::lit(1e4))
        .map_err(|e| Error::Internal(format!("least squares: {e}")))?;
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type M = CMatrix<f64>;

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    fn pauli_x() -> M {
        from_row_major(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]).unwrap()
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let k = kron(&identity::<f64>(2), &identity(3));
        assert_eq!(k, identity(6));
    }

    #[test]
    fn kron_projector_with_identity() {
        let k = kron(&diag(&[1.0, 0.0]), &identity(2));
        assert_eq!(k, diag(&[1.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_flip_sends_00_to_11() {
        let xx = kron(&pauli_x(), &pauli_x());
        let mut e00 = CVector::<f64>::zeros(4);
        e00[0] = re(1.0);
        let out = xx * e00;
        for k in 0..4 {
            let expected = if k == 3 { 1.0 } else { 0.0 };
            assert_eq!(out[k], re(expected));
        }
    }

    #[test]
    fn partial_trace_of_bell_projector() {
        let psi = max_entangled::<f64>(2);
        let p = outer(&psi, &psi);
        let reduced = partial_trace(&p, &[2, 2], &[1], false).unwrap();
        assert!(frobenius_distance(&reduced, &(identity::<f64>(2) * re(0.5))) < 1e-15);
    }

    #[test]
    fn normalised_partial_trace_of_identity() {
        let reduced = partial_trace(&identity::<f64>(4), &[2, 2], &[0], true).unwrap();
        assert!(frobenius_distance(&reduced, &identity(2)) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let err = partial_trace(&identity::<f64>(4), &[2, 3], &[0], true).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn gram_schmidt_examples() {
        let ip = |x: &M, y: &M| hs_inner(x, y) / re(2.0);
        let one = identity::<f64>(2);
        let out = hs_gram_schmidt(&[one.clone(), pauli_x()], ip, 1e-9);
        assert_eq!(out.len(), 2);
        assert!(frobenius_distance(&out[0], &one) < 1e-15);
        assert!(frobenius_distance(&out[1], &pauli_x()) < 1e-15);

        let out = hs_gram_schmidt(&[one.clone(), &one + pauli_x()], ip, 1e-9);
        assert!(frobenius_distance(&out[1], &pauli_x()) < 1e-15);

        let out = hs_gram_schmidt(&[one.clone(), one.clone() * re(3.0)], ip, 1e-9);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn nullspace_examples() {
        assert!(nullspace(&identity::<f64>(2), 1e-9).is_empty());
        assert_eq!(nullspace(&zeros::<f64>(2, 2), 1e-9).len(), 2);
        let k = nullspace(&diag::<f64>(&[1.0, 0.0]), 1e-9);
        assert_eq!(k.len(), 1);
        assert!((k[0][1].norm() - 1.0).abs() < 1e-12);
        assert!(k[0][0].norm() < 1e-12);
        // wide input
        let wide = from_row_major(1, 3, &[re(1.0), re(1.0), re(0.0)]).unwrap();
        assert_eq!(nullspace(&wide, 1e-9).len(), 2);
    }

    #[test]
    fn pf_examples() {
        let (l, v) = pf_eigenvector(&DMatrix::from_element(1, 1, 3.0f64)).unwrap();
        assert_eq!((l, v[0]), (3.0, 1.0));
        let lambda = DMatrix::from_row_slice(2, 1, &[1.0f64, 1.0]);
        let (l, _) = pf_eigenvector(&(lambda.transpose() * &lambda)).unwrap();
        assert!((l - 2.0).abs() < 1e-14);
        let (l, v) = pf_eigenvector(&(&lambda * lambda.transpose())).unwrap();
        assert!((l - 2.0).abs() < 1e-14);
        assert!((v[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn pf_rejects_reducible() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(pf_eigenvector(&a), Err(Error::Connectedness(_))));
    }

    #[test]
    fn pf_non_symmetric_uses_power_iteration() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 3.0, 0.0, 0.0]);
        let (l, v) = pf_eigenvector(&a).unwrap();
        assert!((l - 6f64.cbrt()).abs() < 1e-10);
        assert!((&a * &v - &v * l).norm() < 1e-10);
    }

    #[test]
    fn permute_swaps_tensor_factors() {
        let mut rng = seeded_rng(1);
        let a = random_matrix::<f64, _>(2, 2, &mut rng);
        let b = random_matrix::<f64, _>(3, 3, &mut rng);
        let swapped = permute_legs(&kron(&a, &b), &[2, 3], &[1, 0]).unwrap();
        assert!(frobenius_distance(&swapped, &kron(&b, &a)) < 1e-14);
    }

    #[test]
    fn subspace_intersection_and_distance() {
        let e = |i, j| matrix_unit::<f64>(2, i, j);
        let a = Subspace::spanned_by(2, 2, &[e(0, 0), e(0, 1)], 1e-9);
        let b = Subspace::spanned_by(2, 2, &[e(0, 0) + e(0, 1), e(1, 1)], 1e-9);
        let both = a.intersect(&b, 1e-9);
        assert_eq!(both.dim(), 1);
        assert!(both.residual(&(e(0, 0) + e(0, 1))) < 1e-12);
        assert!(a.distance(&a) < 1e-7);
        assert!(a.distance(&b) > 0.5);
    }

    #[test]
    fn polar_and_sqrt() {
        let mut rng = seeded_rng(2);
        let u = random_unitary::<f64, _>(4, &mut rng);
        assert!(is_unitary(&u, &tol()));
        let p = random_density::<f64, _>(4, &mut rng);
        assert!(is_psd(&p, &tol()));
        let s = matrix_sqrt(&p, 1e-9).unwrap();
        assert!(frobenius_distance(&(&s * &s), &p) < 1e-12);
        assert!(matrix_sqrt(&diag(&[1.0, -1.0]), 1e-9).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let mut rng = seeded_rng(3);
        let p = random_density::<f32, _>(3, &mut rng);
        let s = matrix_sqrt(&p, 1e-4).unwrap();
        assert!(frobenius_distance(&(&s * &s), &p) < 1e-5);
        let t = Tolerance::<f32>::absolute(1e-4);
        assert!(is_psd(&p, &t));
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::<f64>::new(0.0, 0.0).is_err());
        assert!(Tolerance::<f64>::new(1e-9, 0.0).is_ok());
        assert!(from_row_major::<f64>(1, 1, &[Complex::new(f64::NAN, 0.0)]).is_err());
    }

    fn small_matrix(n: usize) -> impl Strategy<Value = M> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
            .prop_map(move |v| CMatrix::from_fn(n, n, |i, j| Complex::new(v[i * n + j].0, v[i * n + j].1)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn kron_mixed_product(a in small_matrix(2), b in small_matrix(3), c in small_matrix(2), d in small_matrix(3)) {
            let lhs = kron(&a, &b) * kron(&c, &d);
            let rhs = kron(&(&a * &c), &(&b * &d));
            prop_assert!(frobenius_distance(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn column_space_of_padded_orthonormal_columns(a in small_matrix(4), seed in 0u64..1000) {
            // Orthonormal columns padded with near-zero ones: the shape on which
            // nalgebra's complex SVD returns inaccurate factors.
            let q = random_unitary::<f64, _>(16, &mut seeded_rng(seed));
            let mut m = zeros::<f64>(16, 4);
            m.set_column(0, &q.column(0));
            m.set_column(1, &q.column(1));
            m.set_column(2, &(vectorize(&a) * re(1e-16)));
            let q2 = column_space(&m, 1e-9);
            prop_assert_eq!(q2.ncols(), 2);
            let back = &q2 * q2.adjoint() * &m;
            prop_assert!(frobenius_distance(&back, &m) < 1e-12);
            prop_assert_eq!(nullspace(&m, 1e-9).len(), 2);
        }

        #[test]
        fn hermitian_eigen_on_degenerate_spectra(seed in 0u64..1000, rank in 1usize..6) {
            let q = random_unitary::<f64, _>(6, &mut seeded_rng(seed));
            let values: Vec<f64> = (0..6).map(|k| if k < rank { 1.0 } else { 1e-15 * k as f64 }).collect();
            let h = &q * diag(&values) * q.adjoint();
            let (vals, vecs) = hermitian_eigen(&h);
            let back = &vecs * diag(&vals) * vecs.adjoint();
            prop_assert!(frobenius_distance(&back, &h) < 1e-12);
            prop_assert!(frobenius_distance(&(vecs.adjoint() * &vecs), &identity(6)) < 1e-12);
        }

        #[test]
        fn kron_associative(a in small_matrix(2), b in small_matrix(2), c in small_matrix(3)) {
            let lhs = kron(&kron(&a, &b), &c);
            let rhs = kron(&a, &kron(&b, &c));
            prop_assert!(frobenius_distance(&lhs, &rhs) < 1e-14);
        }

        #[test]
        fn partial_trace_factorises(a in small_matrix(2), b in small_matrix(3)) {
            let x = kron(&a, &b);
            let left = partial_trace(&x, &[2, 3], &[1], true).unwrap();
            let right = partial_trace(&x, &[2, 3], &[0], true).unwrap();
            prop_assert!(frobenius_distance(&left, &(&a * (b.trace() / re(3.0)))) < 1e-12);
            prop_assert!(frobenius_distance(&right, &(&b * (a.trace() / re(2.0)))) < 1e-12);
        }

        #[test]
        fn gram_schmidt_orthonormal_same_span(seed in 0u64..1000) {
            let mut rng = seeded_rng(seed);
            let vs: Vec<M> = (0..5).map(|_| random_matrix(3, 3, &mut rng)).collect();
            let ip = |x: &M, y: &M| hs_inner(x, y);
            let out = hs_gram_schmidt(&vs, ip, 1e-9);
            prop_assert_eq!(out.len(), 5);
            for (i, x) in out.iter().enumerate() {
                for (j, y) in out.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((hs_inner(x, y) - re(expected)).norm() < 1e-12);
                }
            }
            let a = Subspace::spanned_by(3, 3, &vs, 1e-9);
            let b = Subspace::spanned_by(3, 3, &out, 1e-9);
            prop_assert!(a.distance(&b) < 1e-6);
        }

        #[test]
        fn sqrt_squares_back(seed in 0u64..1000) {
            let mut rng = seeded_rng(seed);
            let p = random_density::<f64, _>(4, &mut rng);
            let s = matrix_sqrt(&p, 1e-9).unwrap();
            prop_assert!(frobenius_distance(&(&s * &s), &p) < 1e-12);
        }

        #[test]
        fn pf_residual_small(entries in prop::collection::vec(0.1f64..2.0, 9)) {
            let a = DMatrix::from_row_slice(3, 3, &entries);
            let (l, v) = pf_eigenvector(&a).unwrap();
            prop_assert!((&a * &v - &v * l).norm() < 1e-9);
            prop_assert!((v.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_generators_are_deterministic() {
        let a = random_hermitian::<f64, _>(3, &mut seeded_rng(9));
        let b = random_hermitian::<f64, _>(3, &mut seeded_rng(9));
        assert_eq!(a, b);
    }
}

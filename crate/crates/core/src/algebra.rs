//! Concrete finite-dimensional *-algebras `A ⊆ M_n(ℂ)` and their block structure.
//!
//! Every algebra is stored with an HS-orthonormal self-adjoint basis and, for
//! each block `M_{n_j} ⊗ 1_{m_j}`, a family of isometries ("frames")
//! `V_{j,1}, …, V_{j,n_j}` of shape `n × m_j` whose products
//! `V_{j,k} V_{j,l}*` are the matrix units of the block.

use std::cmp::Ordering;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::inclusion::Superoperator;
use crate::linalg::{
    self, column_space, frobenius_distance, hermitian_eigen, hermitian_matrix_basis, hs_inner,
    identity, kron, nullspace, seeded_rng, zeros, CMatrix, Subspace,
};
use crate::scalar::{modulus, re, Real, C};

const DISCOVERY_SEED: u64 = 0x5eed_a1eb;
const DISCOVERY_ATTEMPTS: usize = 8;

/// One simple summand `M_{dim} ⊗ 1_{multiplicity}`.
#[derive(Debug, Clone)]
pub struct Block<T: Real> {
    dim: usize,
    multiplicity: usize,
    central_projection: CMatrix<T>,
    frames: Vec<CMatrix<T>>,
}

impl<T: Real> Block<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn central_projection(&self) -> &CMatrix<T> {
        &self.central_projection
    }

    /// Isometries `V_k` with `V_k V_l*` the matrix units.
    pub fn frames(&self) -> &[CMatrix<T>] {
        &self.frames
    }

    pub fn matrix_unit(&self, k: usize, l: usize) -> CMatrix<T> {
        &self.frames[k] * self.frames[l].adjoint()
    }

    /// Embeds `x ∈ M_{dim}` into the ambient space as `Σ x_kl V_k V_l*`.
    pub fn embed(&self, x: &CMatrix<T>) -> CMatrix<T> {
        let n = self.central_projection.nrows();
        let mut out = zeros::<T>(n, n);
        for k in 0..self.dim {
            for l in 0..self.dim {
                if x[(k, l)] != C::new(T::zero(), T::zero()) {
                    out += self.matrix_unit(k, l) * x[(k, l)];
                }
            }
        }
        out
    }

    /// Compresses an ambient element to its `M_{dim}` coordinates `(V_k* a V_l)_{11}` averaged over the multiplicity.
    pub fn coordinates(&self, a: &CMatrix<T>) -> CMatrix<T> {
        let m = re(T::of_usize(self.multiplicity));
        CMatrix::from_fn(self.dim, self.dim, |k, l| {
            (self.frames[k].adjoint() * a * &self.frames[l]).trace() / m
        })
    }

    /// HS-orthogonal projection of an ambient element onto the block, `embed(coordinates(a))`.
    fn project(&self, a: &CMatrix<T>) -> CMatrix<T> {
        let (n, m, size) = (a.nrows(), self.multiplicity, self.dim * self.multiplicity);
        let frame = CMatrix::from_fn(n, size, |i, c| self.frames[c / m][(i, c % m)]);
        let compressed = frame.adjoint() * a * &frame;
        let scale = re(T::one() / T::of_usize(m));
        let averaged = CMatrix::from_fn(size, size, |p, q| {
            if p % m != q % m {
                return C::new(T::zero(), T::zero());
            }
            let (k, l) = (p / m * m, q / m * m);
            (0..m).fold(C::new(T::zero(), T::zero()), |acc, r| acc + compressed[(k + r, l + r)]) * scale
        });
        &frame * averaged * frame.adjoint()
    }

    fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            multiplicity: self.multiplicity,
            central_projection: self.central_projection.conjugate(),
            frames: self.frames.iter().map(|f| f.conjugate()).collect(),
        }
    }
}

/// Unital *-subalgebra of `M_n(ℂ)` with known block decomposition.
#[derive(Debug, Clone)]
pub struct FinDimAlgebra<T: Real> {
    ambient_dim: usize,
    basis: Vec<CMatrix<T>>,
    blocks: Vec<Block<T>>,
}

fn try_extend<T: Real>(basis: &mut Vec<CMatrix<T>>, candidate: &CMatrix<T>, tol: T) -> bool {
    let size = candidate.norm();
    let mut w = candidate.clone();
    for _ in 0..2 {
        for q in basis.iter() {
            let c = hs_inner(&w, q);
            w.zip_apply(q, |wi, qi| *wi -= qi * c);
        }
    }
    let norm = w.norm();
    if norm > tol * size.max(T::one()) {
        basis.push(w / re(norm));
        true
    } else {
        false
    }
}

/// Self-adjoint HS-orthonormal basis of the span of `mats` and their adjoints.
fn self_adjoint_basis<T: Real>(mats: &[CMatrix<T>], tol: T) -> Vec<CMatrix<T>> {
    let half = re(T::lit(0.5));
    let minus_half_i = Complex::new(T::zero(), -T::lit(0.5));
    let mut candidates = Vec::with_capacity(2 * mats.len());
    for m in mats {
        let adj = m.adjoint();
        candidates.push((m + &adj) * half);
        candidates.push((m - &adj) * minus_half_i);
    }
    let mut basis = Vec::new();
    for c in &candidates {
        if try_extend(&mut basis, c, tol) {
            // Gram-Schmidt of self-adjoint inputs is self-adjoint up to rounding.
            let last = basis.pop().unwrap();
            let h = linalg::hermitian_part(&last);
            let norm = h.norm();
            basis.push(h / re(norm));
        }
    }
    basis
}

fn compare_matrices<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Ordering {
    let eps = T::lit(1e-8);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let (x, y) = (a[(i, j)], b[(i, j)]);
            for (p, q) in [(x.re, y.re), (x.im, y.im)] {
                if (p - q).abs() > eps {
                    return p.partial_cmp(&q).unwrap_or(Ordering::Equal);
                }
            }
        }
    }
    Ordering::Equal
}

fn sort_blocks<T: Real>(blocks: &mut [Block<T>]) {
    blocks.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then_with(|| compare_matrices(&a.central_projection, &b.central_projection))
    });
}

/// Groups ascending eigenvalues into clusters separated by gaps relative to `spread`.
/// The relative gap is widened for low-precision scalars.
fn cluster<T: Real>(values: &[T], spread: T) -> Vec<std::ops::Range<usize>> {
    let relative = 1e-6f64.max(1e4 * T::default_epsilon().to_f64_lossy());
    let gap = relative * spread.to_f64_lossy().max(1e-3);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i] - values[i - 1]).to_f64_lossy() > gap {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn columns<T: Real>(m: &CMatrix<T>, range: std::ops::Range<usize>) -> CMatrix<T> {
    m.columns(range.start, range.len()).into_owned()
}

impl<T: Real> FinDimAlgebra<T> {
    /// Smallest unital *-algebra containing `generators`.
    pub fn from_generators(generators: &[CMatrix<T>], ambient_dim: usize, tol: T) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.shape() != (ambient_dim, ambient_dim)) {
            return Err(Error::Dimension(format!(
                "generator of shape {:?} in M_{ambient_dim}",
                g.shape()
            )));
        }
        let mut letters: Vec<CMatrix<T>> = Vec::new();
        for g in generators {
            letters.push(g.clone());
            letters.push(g.adjoint());
        }
        let mut basis = Vec::new();
        try_extend(&mut basis, &identity(ambient_dim), tol);
        let mut frontier: Vec<CMatrix<T>> = basis.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for w in &frontier {
                for g in &letters {
                    let product = w * g;
                    if try_extend(&mut basis, &product, tol) {
                        next.push(basis.last().unwrap().clone());
                    }
                }
            }
            if basis.len() > ambient_dim * ambient_dim {
                return Err(Error::Internal("generated algebra exceeds ambient dimension".into()));
            }
            frontier = next;
        }
        Self::from_spanning_set(ambient_dim, &basis, tol)
    }

    /// Discovers the structure of the algebra spanned by `mats`, which must be a
    /// unital *-algebra.
    pub fn from_spanning_set(ambient_dim: usize, mats: &[CMatrix<T>], tol: T) -> Result<Self> {
        let basis = self_adjoint_basis(mats, tol);
        let span = Subspace::spanned_by(ambient_dim, ambient_dim, &basis, tol);
        if span.residual(&identity(ambient_dim)) > T::lit(1e-6) {
            return Err(Error::Structure("span does not contain the identity".into()));
        }
        let center = center_of_span(&basis, tol);
        let mut last_err = None;
        for attempt in 0..DISCOVERY_ATTEMPTS {
            match discover_blocks(&basis, &center, &span, attempt as u64) {
                Ok(mut blocks) => {
                    sort_blocks(&mut blocks);
                    let alg = Self { ambient_dim, basis, blocks };
                    alg.check_dimensions()?;
                    return Ok(alg);
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Structure("no discovery attempt".into())))
    }

    fn check_dimensions(&self) -> Result<()> {
        let dim: usize = self.blocks.iter().map(|b| b.dim * b.dim).sum();
        let rank: usize = self.blocks.iter().map(|b| b.dim * b.multiplicity).sum();
        if dim != self.basis.len() || rank > self.ambient_dim {
            return Err(Error::Structure(format!(
                "block data {:?} inconsistent with dimension {}",
                self.block_shape(),
                self.basis.len()
            )));
        }
        Ok(())
    }

    /// Full matrix algebra `M_n(ℂ)`.
    pub fn full(n: usize) -> Self {
        let frames = (0..n).map(|k| CMatrix::from_fn(n, 1, |i, _| if i == k { re(T::one()) } else { re(T::zero()) })).collect();
        Self {
            ambient_dim: n,
            basis: hermitian_matrix_basis(n),
            blocks: vec![Block { dim: n, multiplicity: 1, central_projection: identity(n), frames }],
        }
    }

    /// Scalars `ℂ·1_n`.
    pub fn scalars(n: usize) -> Self {
        let w = re(T::one() / T::of_usize(n).sqrt());
        Self {
            ambient_dim: n,
            basis: vec![identity::<T>(n) * w],
            blocks: vec![Block { dim: 1, multiplicity: n, central_projection: identity(n), frames: vec![identity(n)] }],
        }
    }

    /// Block-diagonal algebra `⊕_j M_{d_j} ⊗ 1_{m_j}` for `(d_j, m_j)` in order.
    pub fn block_diagonal(shape: &[(usize, usize)]) -> Result<Self> {
        if shape.iter().any(|&(d, m)| d == 0 || m == 0) {
            return Err(Error::Dimension("block sizes must be positive".into()));
        }
        let n: usize = shape.iter().map(|(d, m)| d * m).sum();
        let mut blocks = Vec::new();
        let mut offset = 0;
        for &(d, m) in shape {
            let frames: Vec<CMatrix<T>> = (0..d)
                .map(|k| {
                    CMatrix::from_fn(n, m, |i, r| {
                        if i == offset + k * m + r {
                            re(T::one())
                        } else {
                            re(T::zero())
                        }
                    })
                })
                .collect();
            let z = CMatrix::from_fn(n, n, |i, j| {
                if i == j && i >= offset && i < offset + d * m {
                    re(T::one())
                } else {
                    re(T::zero())
                }
            });
            blocks.push(Block { dim: d, multiplicity: m, central_projection: z, frames });
            offset += d * m;
        }
        Ok(Self::from_blocks(n, blocks))
    }

    /// `self ⊗ other` on the tensor product of the ambient spaces.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut blocks = Vec::with_capacity(self.blocks.len() * other.blocks.len());
        for a in &self.blocks {
            for b in &other.blocks {
                let mut frames = Vec::with_capacity(a.dim * b.dim);
                for fa in &a.frames {
                    for fb in &b.frames {
                        frames.push(kron(fa, fb));
                    }
                }
                blocks.push(Block {
                    dim: a.dim * b.dim,
                    multiplicity: a.multiplicity * b.multiplicity,
                    central_projection: kron(&a.central_projection, &b.central_projection),
                    frames,
                });
            }
        }
        Self::from_blocks(self.ambient_dim * other.ambient_dim, blocks)
    }

    /// Algebra generated by known blocks; the basis is assembled from matrix units.
    fn from_blocks(ambient_dim: usize, mut blocks: Vec<Block<T>>) -> Self {
        let mut basis = Vec::new();
        for b in &blocks {
            let s = re(T::one() / T::of_usize(b.multiplicity).sqrt());
            for h in hermitian_matrix_basis::<T>(b.dim) {
                basis.push(b.embed(&h) * s);
            }
        }
        sort_blocks(&mut blocks);
        Self { ambient_dim, basis, blocks }
    }

    /// Image under a unital injective *-homomorphism into `M_{target_dim}`.
    /// Structure is transported through the matrix units, no rediscovery.
    pub fn represent(&self, target_dim: usize, map: impl Fn(&CMatrix<T>) -> CMatrix<T>, tol: T) -> Result<Self> {
        let mut blocks = Vec::new();
        for b in &self.blocks {
            let e11 = map(&b.matrix_unit(0, 0));
            let first = column_space(&e11, T::lit(1e-6));
            let mult = first.ncols();
            if mult == 0 {
                return Err(Error::Structure("representation is not injective".into()));
            }
            let mut frames = vec![first.clone()];
            for k in 1..b.dim {
                frames.push(map(&b.matrix_unit(k, 0)) * &first);
            }
            blocks.push(Block {
                dim: b.dim,
                multiplicity: mult,
                central_projection: map(&b.central_projection),
                frames,
            });
        }
        let images: Vec<CMatrix<T>> = self.basis.iter().map(&map).collect();
        let basis = self_adjoint_basis(&images, tol);
        sort_blocks(&mut blocks);
        let alg = Self { ambient_dim: target_dim, basis, blocks };
        alg.check_dimensions()?;
        Ok(alg)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// HS-orthonormal self-adjoint basis.
    pub fn basis(&self) -> &[CMatrix<T>] {
        &self.basis
    }

    pub fn blocks(&self) -> &[Block<T>] {
        &self.blocks
    }

    /// `(n_j, m_j)` per block.
    pub fn block_shape(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.dim, b.multiplicity)).collect()
    }

    pub fn central_projections(&self) -> Vec<CMatrix<T>> {
        self.blocks.iter().map(|b| b.central_projection.clone()).collect()
    }

    pub fn unit(&self) -> CMatrix<T> {
        let mut u = zeros::<T>(self.ambient_dim, self.ambient_dim);
        for b in &self.blocks {
            u += &b.central_projection;
        }
        u
    }

    pub fn is_factor(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn is_abelian(&self) -> bool {
        self.blocks.iter().all(|b| b.dim == 1)
    }

    /// Distance from `x` to the span of the algebra.
    pub fn residual(&self, x: &CMatrix<T>) -> T {
        let p = self.blocks.iter().fold(zeros::<T>(self.ambient_dim, self.ambient_dim), |acc, b| acc + b.project(x));
        frobenius_distance(x, &p)
    }

    pub fn contains(&self, x: &CMatrix<T>, tol: T) -> bool {
        self.residual(x) <= tol * x.norm().max(T::one())
    }

    pub fn span(&self, tol: T) -> Subspace<T> {
        Subspace::spanned_by(self.ambient_dim, self.ambient_dim, &self.basis, tol)
    }

    /// Largest commutator norm between `x` and the basis.
    pub fn commutator_residual(&self, x: &CMatrix<T>) -> T {
        self.basis.iter().fold(T::zero(), |m, b| m.max(linalg::commutator_norm(x, b)))
    }

    /// Entrywise complex conjugate `J A J` in the computational basis.
    pub fn conj(&self) -> Self {
        let mut blocks: Vec<Block<T>> = self.blocks.iter().map(Block::conj).collect();
        sort_blocks(&mut blocks);
        Self {
            ambient_dim: self.ambient_dim,
            basis: self.basis.iter().map(|b| b.conjugate()).collect(),
            blocks,
        }
    }

    /// Commutant in `M_n(ℂ)`, assembled block by block from the frames.
    pub fn commutant(&self) -> Self {
        let mut blocks = Vec::new();
        let mut basis = Vec::new();
        for b in &self.blocks {
            // `Σ_k V_k h V_k*` for the Hermitian matrix-unit basis `h`, expanded through
            // the Gram matrices `G_ij = Σ_k V_k e_i e_j* V_k*`.
            let scale = T::one() / T::of_usize(b.dim).sqrt();
            let half = T::lit(0.5).sqrt() * scale;
            let n = self.ambient_dim;
            let gram = |i: usize, j: usize| {
                let mut g = zeros::<T>(n, n);
                for f in &b.frames {
                    g.ger(re(T::one()), &f.column(i), &f.column(j).conjugate(), re(T::one()));
                }
                g
            };
            for i in 0..b.multiplicity {
                for j in 0..b.multiplicity {
                    let x = match i.cmp(&j) {
                        Ordering::Equal => gram(i, i) * re(scale),
                        Ordering::Less => {
                            let g = gram(i, j);
                            (&g + g.adjoint()) * re(half)
                        }
                        Ordering::Greater => {
                            let g = gram(i, j);
                            (&g - g.adjoint()) * Complex::new(T::zero(), half)
                        }
                    };
                    basis.push(x);
                }
            }
            let frames = (0..b.multiplicity)
                .map(|r| CMatrix::from_fn(self.ambient_dim, b.dim, |i, k| b.frames[k][(i, r)]))
                .collect();
            blocks.push(Block {
                dim: b.multiplicity,
                multiplicity: b.dim,
                central_projection: b.central_projection.clone(),
                frames,
            });
        }
        sort_blocks(&mut blocks);
        Self { ambient_dim: self.ambient_dim, basis, blocks }
    }

    /// Intersection with another subalgebra of the same ambient space.
    pub fn intersect(&self, other: &Self, tol: T) -> Result<Self> {
        if self.ambient_dim != other.ambient_dim {
            return Err(Error::Dimension("intersecting algebras in different ambients".into()));
        }
        let common = self.span(tol).intersect(&other.span(tol), tol);
        Self::from_spanning_set(self.ambient_dim, &common.basis(), tol)
    }

    /// Trace-orthonormal self-adjoint basis built from matrix units.
    pub fn trace_orthonormal_basis(&self, trace: &TraceFunctional<T>) -> Vec<CMatrix<T>> {
        let mut out = Vec::new();
        let i = Complex::new(T::zero(), T::one());
        for (b, &t) in self.blocks.iter().zip(&trace.weights) {
            let diag_scale = re(T::one() / t.sqrt());
            let off_scale = re(T::one() / (T::lit(2.0) * t).sqrt());
            for k in 0..b.dim {
                out.push(b.matrix_unit(k, k) * diag_scale);
                for l in k + 1..b.dim {
                    let (ekl, elk) = (b.matrix_unit(k, l), b.matrix_unit(l, k));
                    out.push((&ekl + &elk) * off_scale);
                    out.push((ekl - elk) * (i * off_scale));
                }
            }
        }
        out
    }
}

/// Self-adjoint HS-orthonormal basis of the center of the span of `basis`.
fn center_of_span<T: Real>(basis: &[CMatrix<T>], tol: T) -> Vec<CMatrix<T>> {
    let d = basis.len();
    let n = basis.first().map_or(0, |b| b.nrows());
    let n2 = n * n;
    let mut stacked = zeros::<T>(d * n2, d);
    for (m, bm) in basis.iter().enumerate() {
        for (k, bk) in basis.iter().enumerate() {
            let c = bk * bm - bm * bk;
            for (idx, v) in linalg::vectorize(&c).iter().enumerate() {
                stacked[(m * n2 + idx, k)] = *v;
            }
        }
    }
    let kernel = nullspace(&stacked, tol);
    let elements: Vec<CMatrix<T>> = kernel
        .iter()
        .map(|v| {
            let coeffs: Vec<C<T>> = v.iter().copied().collect();
            linalg::combine(&coeffs, basis)
        })
        .collect();
    self_adjoint_basis(&elements, tol)
}

fn discover_blocks<T: Real>(
    basis: &[CMatrix<T>],
    center: &[CMatrix<T>],
    span: &Subspace<T>,
    attempt: u64,
) -> Result<Vec<Block<T>>> {
    let mut rng = seeded_rng(DISCOVERY_SEED.wrapping_add(attempt));
    let coeffs: Vec<C<T>> = linalg::random_reals::<T, _>(center.len(), &mut rng).into_iter().map(re).collect();
    let generic = linalg::combine(&coeffs, center);
    let (values, vectors) = hermitian_eigen(&generic);
    let spread = values.last().copied().unwrap_or_else(T::zero) - values.first().copied().unwrap_or_else(T::zero);
    let clusters = cluster(&values, spread);
    if clusters.len() != center.len() {
        return Err(Error::Structure(format!(
            "generic central element has {} eigenvalues, center has dimension {}",
            clusters.len(),
            center.len()
        )));
    }
    let mut blocks = Vec::new();
    for range in clusters {
        let support = columns(&vectors, range);
        let z = &support * support.adjoint();
        if span.residual(&z) > T::lit(1e-6) {
            return Err(Error::Structure("spectral projection outside the algebra".into()));
        }
        blocks.push(split_block(basis, &support, &mut rng)?);
    }
    Ok(blocks)
}

fn split_block<T: Real>(
    basis: &[CMatrix<T>],
    support: &CMatrix<T>,
    rng: &mut linalg::SeededRng,
) -> Result<Block<T>> {
    let rank = support.ncols();
    let compressed: Vec<CMatrix<T>> = basis.iter().map(|b| support.adjoint() * b * support).collect();
    let block_span = Subspace::spanned_by(rank, rank, &compressed, T::lit(1e-7));
    let dim_sq = block_span.dim();
    let dim = (dim_sq as f64).sqrt().round() as usize;
    if dim * dim != dim_sq || dim == 0 || !rank.is_multiple_of(dim) {
        return Err(Error::Structure(format!("block of rank {rank} has non-square dimension {dim_sq}")));
    }
    let multiplicity = rank / dim;
    let central_projection = support * support.adjoint();
    let compressed = block_span.basis();

    let coeffs: Vec<C<T>> = linalg::random_reals::<T, _>(compressed.len(), rng).into_iter().map(re).collect();
    let generic = linalg::hermitian_part(&linalg::combine(&coeffs, &compressed));
    let (values, vectors) = hermitian_eigen(&generic);
    let spread = values[rank - 1] - values[0];
    let clusters = cluster(&values, spread);
    if clusters.len() != dim || clusters.iter().any(|c| c.len() != multiplicity) {
        return Err(Error::Structure("degenerate generic element inside a block".into()));
    }
    let minimal: Vec<CMatrix<T>> = clusters.into_iter().map(|r| columns(&vectors, r)).collect();

    let mixing: Vec<C<T>> = (0..compressed.len())
        .map(|_| {
            let v = linalg::random_reals::<T, _>(2, rng);
            Complex::new(v[0], v[1])
        })
        .collect();
    let generic = linalg::combine(&mixing, &compressed);
    let m = re(T::of_usize(multiplicity));
    let mut frames = vec![support * &minimal[0]];
    for w in &minimal[1..] {
        let y = w.adjoint() * &generic * &minimal[0];
        let c = ((y.adjoint() * &y).trace() / m).re.max(T::zero()).sqrt();
        if c <= T::lit(1e-6) {
            return Err(Error::Structure("generic element misses a matrix unit".into()));
        }
        let y = y / re(c);
        if frobenius_distance(&(y.adjoint() * &y), &identity(multiplicity)) > T::lit(1e-6) {
            return Err(Error::Structure("matrix unit is not a partial isometry".into()));
        }
        frames.push(support * w * y);
    }
    Ok(Block { dim, multiplicity, central_projection, frames })
}

/// Faithful tracial state `τ(x) = Σ_j t_j Tr_j(x)`, where `Tr_j` is the trace of
/// one copy of the `j`-th block. Stored as the density `Σ_j t_j z_j / m_j`.
#[derive(Debug, Clone)]
pub struct TraceFunctional<T: Real> {
    weights: Vec<T>,
    density: CMatrix<T>,
}

impl<T: Real> TraceFunctional<T> {
    /// Trace with weight `t_j` on each block (in block order).
    pub fn new(alg: &FinDimAlgebra<T>, weights: &[T]) -> Result<Self> {
        if weights.len() != alg.blocks.len() {
            return Err(Error::Trace(format!(
                "{} weights for {} blocks",
                weights.len(),
                alg.blocks.len()
            )));
        }
        if weights.iter().any(|&t| t <= T::zero()) {
            return Err(Error::Trace("trace weights must be positive (faithfulness)".into()));
        }
        let total = alg
            .blocks
            .iter()
            .zip(weights)
            .fold(T::zero(), |acc, (b, &t)| acc + t * T::of_usize(b.dim));
        if (total - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::Trace(format!("trace of the unit is {}, not 1", total.to_f64_lossy())));
        }
        let mut density = zeros::<T>(alg.ambient_dim, alg.ambient_dim);
        for (b, &t) in alg.blocks.iter().zip(weights) {
            density += &b.central_projection * re(t / T::of_usize(b.multiplicity));
        }
        Ok(Self { weights: weights.to_vec(), density })
    }

    /// Restriction of the normalised ambient trace `Tr/n`.
    pub fn normalised(alg: &FinDimAlgebra<T>) -> Self {
        let n = T::of_usize(alg.ambient_dim);
        let weights: Vec<T> = alg.blocks.iter().map(|b| T::of_usize(b.multiplicity) / n).collect();
        Self::new(alg, &weights).expect("normalised trace is valid on a unital algebra")
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Density `D` with `τ(x) = Tr(D x)`.
    pub fn density(&self) -> &CMatrix<T> {
        &self.density
    }

    pub fn eval(&self, x: &CMatrix<T>) -> C<T> {
        linalg::trace_product(&self.density, x)
    }

    /// `τ(y* x)`.
    pub fn inner(&self, x: &CMatrix<T>, y: &CMatrix<T>) -> C<T> {
        linalg::trace_product(&(&self.density * y.adjoint()), x)
    }

    /// Largest traciality defect `|τ(xy) − τ(yx)|` over seeded random pairs in `alg`.
    pub fn traciality_residual(&self, alg: &FinDimAlgebra<T>, samples: usize, seed: u64) -> T {
        let mut rng = seeded_rng(seed);
        let mut worst = T::zero();
        for _ in 0..samples {
            let cx: Vec<C<T>> = random_complex(alg.dim(), &mut rng);
            let cy: Vec<C<T>> = random_complex(alg.dim(), &mut rng);
            let x = linalg::combine(&cx, &alg.basis);
            let y = linalg::combine(&cy, &alg.basis);
            worst = worst.max(modulus(self.eval(&(&x * &y)) - self.eval(&(&y * &x))));
        }
        worst
    }
}

pub(crate) fn random_complex<T: Real>(k: usize, rng: &mut linalg::SeededRng) -> Vec<C<T>> {
    let v = linalg::random_reals::<T, _>(2 * k, rng);
    v.chunks(2).map(|p| Complex::new(p[0], p[1])).collect()
}

/// For CP maps `T_i` on `alg` summing to the identity, returns `μ[i][j]` with
/// `T_i = μ_i^j · id` on the `j`-th block.
pub fn scalar_decompose_cp_family<T: Real>(
    maps: &[Superoperator<T>],
    alg: &FinDimAlgebra<T>,
    tol: T,
) -> Result<Vec<Vec<T>>> {
    for b in alg.basis() {
        let mut total = zeros::<T>(alg.ambient_dim, alg.ambient_dim);
        for m in maps {
            total += m.apply(b);
        }
        if frobenius_distance(&total, b) > tol {
            return Err(Error::Precondition("maps do not sum to the identity".into()));
        }
    }
    let mut out = Vec::with_capacity(maps.len());
    for (i, m) in maps.iter().enumerate() {
        let mut row = Vec::with_capacity(alg.blocks.len());
        for (j, block) in alg.blocks.iter().enumerate() {
            let z = &block.central_projection;
            let mu = (m.apply(z).dotc(z) / z.trace()).re;
            for k in 0..block.dim {
                for l in 0..block.dim {
                    let e = block.matrix_unit(k, l);
                    let defect = frobenius_distance(&m.apply(&e), &(&e * re(mu)));
                    if defect > tol {
                        return Err(Error::NotScalar(format!(
                            "map {i} on block {j} deviates by {:.3e}",
                            defect.to_f64_lossy()
                        )));
                    }
                }
            }
            row.push(mu);
        }
        out.push(row);
    }
    Ok(out)
}

/// Commutant computed as the kernel of the stacked commutator map. Quadratic in
/// the ambient dimension squared, so only suitable as a cross-check.
pub fn commutant_by_nullspace<T: Real>(alg: &FinDimAlgebra<T>, tol: T) -> Result<FinDimAlgebra<T>> {
    let n = alg.ambient_dim;
    let units: Vec<CMatrix<T>> = (0..n * n).map(|k| linalg::matrix_unit(n, k / n, k % n)).collect();
    let n2 = n * n;
    let mut stacked = zeros::<T>(alg.dim() * n2, n2);
    for (m, b) in alg.basis.iter().enumerate() {
        for (k, e) in units.iter().enumerate() {
            let c = e * b - b * e;
            for (idx, v) in linalg::vectorize(&c).iter().enumerate() {
                stacked[(m * n2 + idx, k)] = *v;
            }
        }
    }
    let kernel: Vec<CMatrix<T>> = nullspace(&stacked, tol).iter().map(|v| linalg::unvectorize(v, n, n)).collect();
    FinDimAlgebra::from_spanning_set(n, &kernel, tol)
}

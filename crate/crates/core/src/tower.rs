//! GNS spaces, Jones projections and the first two steps of the basic
//! construction `N ⊆ M ⊆ M₁ ⊆ M₂`.
//!
//! GNS coordinates are taken in a trace-orthonormal self-adjoint basis `c_k`
//! of `M`, so `Λ(x)_k = τ(c_k x)`, the modular conjugation `J` is entrywise
//! complex conjugation and the right action is the transpose of the left one.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{random_complex, FinDimAlgebra, TraceFunctional};
use crate::error::{Error, Result};
use crate::inclusion::Inclusion;
use crate::linalg::{self, column_space, frobenius_distance, hs_gram_schmidt, identity, seeded_rng, trace_product, zeros, CMatrix, CVector, Subspace};
use crate::pp_basis;
use crate::report::Report;
use crate::scalar::{modulus, re, Real, C};

const CHECK_SEED: u64 = 0x70_0e5;

/// `L²(M, τ)` with the left and right regular representations.
#[derive(Debug, Clone)]
pub struct GnsSpace<T: Real> {
    trace: TraceFunctional<T>,
    basis: Vec<CMatrix<T>>,
    /// Row `k` is `vec((ρ c_k)ᵀ)`, so that `Λ(x) = functionals · vec(x)`.
    functionals: CMatrix<T>,
    /// The basis laid side by side, `[c_1 | c_2 | …]`.
    side_by_side: CMatrix<T>,
}

impl<T: Real> GnsSpace<T> {
    pub fn new(alg: &FinDimAlgebra<T>, trace: &TraceFunctional<T>) -> Result<Self> {
        if trace.weights().len() != alg.blocks().len() || trace.weights().iter().any(|&t| t <= T::zero()) {
            return Err(Error::Trace("GNS construction needs a faithful trace on the algebra".into()));
        }
        let basis = alg.trace_orthonormal_basis(trace);
        let n = alg.ambient_dim();
        let d = basis.len();
        let weighted: Vec<CMatrix<T>> = basis.iter().map(|c| trace.density() * c).collect();
        let functionals = CMatrix::from_fn(d, n * n, |k, idx| weighted[k][(idx / n, idx % n)]);
        let side_by_side = CMatrix::from_fn(n, n * d, |i, col| basis[col / n][(i, col % n)]);
        Ok(Self { trace: trace.clone(), basis, functionals, side_by_side })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn trace(&self) -> &TraceFunctional<T> {
        &self.trace
    }

    /// Trace-orthonormal self-adjoint basis defining the coordinates.
    pub fn basis(&self) -> &[CMatrix<T>] {
        &self.basis
    }

    /// `Λ(x)`.
    pub fn lambda(&self, x: &CMatrix<T>) -> CVector<T> {
        &self.functionals * CVector::from_column_slice(x.as_slice())
    }

    /// Inverse of [`Self::lambda`] on `Λ(M)`.
    pub fn element(&self, v: &CVector<T>) -> CMatrix<T> {
        let coeffs: Vec<C<T>> = v.iter().copied().collect();
        linalg::combine(&coeffs, &self.basis)
    }

    /// Left multiplication `π(x)`.
    pub fn pi_left(&self, x: &CMatrix<T>) -> CMatrix<T> {
        let (n, d) = (x.nrows(), self.dim());
        // Column-major storage makes column `l` of the reshaped product `vec(x c_l)`.
        let products = (x * &self.side_by_side).reshape_generic(nalgebra::Dyn(n * n), nalgebra::Dyn(d));
        &self.functionals * products
    }

    /// Right multiplication `Λ(y) ↦ Λ(yx)`, equal to `J π(x)* J`.
    pub fn pi_right(&self, x: &CMatrix<T>) -> CMatrix<T> {
        self.pi_left(x).transpose()
    }

    /// The vector `Λ(1)`.
    pub fn unit_vector(&self) -> CVector<T> {
        let n = self.basis.first().map_or(0, |b| b.nrows());
        self.lambda(&identity(n))
    }
}

/// Modular conjugation `J X J` of an operator on a GNS space.
pub fn modular_conjugate<T: Real>(op: &CMatrix<T>) -> CMatrix<T> {
    op.conjugate()
}

/// One basic construction `N ⊆ M ⊆ M₁`, all represented on `L²(M, τ)`.
#[derive(Debug, Clone)]
pub struct Level<T: Real> {
    inclusion: Inclusion<T>,
    gns: GnsSpace<T>,
    jones: CMatrix<T>,
    small_rep: FinDimAlgebra<T>,
    big_rep: FinDimAlgebra<T>,
    extension: FinDimAlgebra<T>,
    extension_trace: TraceFunctional<T>,
    extension_mass: T,
    trace_relation_residual: T,
    markov_residual: T,
}

/// Orthogonal projection onto `span{Λ(b)}` for the given elements.
pub fn jones_projection<T: Real>(gns: &GnsSpace<T>, small_basis: &[CMatrix<T>]) -> CMatrix<T> {
    let d = gns.dim();
    let vectors: Vec<CVector<T>> = small_basis.iter().map(|b| gns.lambda(b)).collect();
    let stacked = CMatrix::from_fn(d, vectors.len(), |r, c| vectors[c][r]);
    let q = column_space(&stacked, T::lit(1e-9));
    &q * q.adjoint()
}

fn pair_indices(count: usize, limit: usize, seed: u64) -> Vec<(usize, usize)> {
    if count * count <= limit {
        return (0..count).flat_map(|i| (0..count).map(move |j| (i, j))).collect();
    }
    use rand::Rng;
    let mut rng = seeded_rng(seed);
    (0..limit).map(|_| (rng.gen_range(0..count), rng.gen_range(0..count))).collect()
}

impl<T: Real> Level<T> {
    /// Builds `L²(M)`, `e_N`, `M₁ = J π(N)′ J` and the trace `τ₁` on `M₁`.
    pub fn new(inclusion: Inclusion<T>, tol: T) -> Result<Self> {
        let gns = GnsSpace::new(inclusion.big(), inclusion.trace())?;
        let d = gns.dim();
        let small_rep = inclusion.small().represent(d, |x| gns.pi_left(x), tol)?;
        let big_rep = inclusion.big().represent(d, |x| gns.pi_left(x), tol)?;
        let jones = jones_projection(&gns, inclusion.small_basis());
        let extension = small_rep.commutant().conj();

        // tr₁(X) = Σ_j u_j Tr(q_j X), pinned down by tr₁(a e_N) = τ(a).
        let q = extension.central_projections();
        let big_basis = inclusion.big_basis();
        let rows = 2 * big_basis.len();
        let mut system = DMatrix::<T>::zeros(rows, q.len());
        let mut rhs = DVector::<T>::zeros(rows);
        for (r, a) in big_basis.iter().enumerate() {
            let ae = gns.pi_left(a) * &jones;
            for (j, qj) in q.iter().enumerate() {
                let v = trace_product(qj, &ae);
                system[(2 * r, j)] = v.re;
                system[(2 * r + 1, j)] = v.im;
            }
            let t = inclusion.trace().eval(a);
            rhs[2 * r] = t.re;
            rhs[2 * r + 1] = t.im;
        }
        let (u, ls_residual) = linalg::real_least_squares(&system, &rhs)?;
        if ls_residual > T::lit(1e-6) || u.iter().any(|&w| w <= T::zero()) {
            return Err(Error::Markov(format!(
                "no positive trace on M₁ extends τ (least-squares residual {:.3e})",
                ls_residual.to_f64_lossy()
            )));
        }
        let mass = q.iter().zip(u.iter()).fold(T::zero(), |acc, (qj, &w)| acc + w * qj.trace().re);
        let weights: Vec<T> = extension
            .blocks()
            .iter()
            .zip(u.iter())
            .map(|(b, &w)| w * T::of_usize(b.multiplicity()) / mass)
            .collect();
        let extension_trace = TraceFunctional::new(&extension, &weights)?;

        let unnormalised = |x: &CMatrix<T>| extension_trace.eval(x) * re(mass);
        let mut trace_relation_residual = T::zero();
        let pis: Vec<CMatrix<T>> = big_basis.iter().map(|b| gns.pi_left(b)).collect();
        for (i, j) in pair_indices(big_basis.len(), 100, CHECK_SEED) {
            let lhs = unnormalised(&(&pis[i] * &jones * &pis[j]));
            let rhs = inclusion.trace().eval(&(&big_basis[i] * &big_basis[j]));
            trace_relation_residual = trace_relation_residual.max(modulus(lhs - rhs));
        }
        if trace_relation_residual > T::lit(1e-6) {
            return Err(Error::Markov(format!(
                "tr₁(x e_N y) = τ(xy) fails by {:.3e}",
                trace_relation_residual.to_f64_lossy()
            )));
        }
        let markov_residual = big_basis.iter().zip(&pis).fold(T::zero(), |m, (b, p)| {
            m.max(modulus(extension_trace.eval(p) - inclusion.trace().eval(b)))
        });
        if markov_residual > T::lit(1e-6) {
            return Err(Error::Markov(format!(
                "τ₁ restricted to M differs from τ by {:.3e}",
                markov_residual.to_f64_lossy()
            )));
        }
        Ok(Self {
            inclusion,
            gns,
            jones,
            small_rep,
            big_rep,
            extension,
            extension_trace,
            extension_mass: mass,
            trace_relation_residual,
            markov_residual,
        })
    }

    pub fn inclusion(&self) -> &Inclusion<T> {
        &self.inclusion
    }

    pub fn gns(&self) -> &GnsSpace<T> {
        &self.gns
    }

    /// Jones projection `e_N` on `L²(M)`.
    pub fn jones(&self) -> &CMatrix<T> {
        &self.jones
    }

    /// `π(N)` on `L²(M)`.
    pub fn small_rep(&self) -> &FinDimAlgebra<T> {
        &self.small_rep
    }

    /// `π(M)` on `L²(M)`.
    pub fn big_rep(&self) -> &FinDimAlgebra<T> {
        &self.big_rep
    }

    /// `M₁ = J π(N)′ J`.
    pub fn extension(&self) -> &FinDimAlgebra<T> {
        &self.extension
    }

    /// Normalised trace `τ₁` on `M₁`.
    pub fn extension_trace(&self) -> &TraceFunctional<T> {
        &self.extension_trace
    }

    /// `tr₁(1)`, equal to the index for a Markov trace.
    pub fn extension_mass(&self) -> T {
        self.extension_mass
    }

    /// Unnormalised trace `tr₁`.
    pub fn tr1(&self, x: &CMatrix<T>) -> C<T> {
        self.extension_trace.eval(x) * re(self.extension_mass)
    }

    /// `E_M: M₁ → M`, returned in the ambient coordinates of `M`.
    pub fn expect_onto_big(&self, x: &CMatrix<T>) -> CMatrix<T> {
        let mut out = zeros::<T>(self.inclusion.ambient_dim(), self.inclusion.ambient_dim());
        for c in self.gns.basis() {
            out += c * self.extension_trace.eval(&(self.gns.pi_left(c) * x));
        }
        out
    }

    /// `E_M` as an element of `M₁` on `L²(M)`.
    pub fn expect_onto_big_rep(&self, x: &CMatrix<T>) -> CMatrix<T> {
        self.gns.pi_left(&self.expect_onto_big(x))
    }

    /// Inclusion `π(M) ⊆ M₁` with `τ₁`, the input of the next basic construction.
    pub fn next_inclusion(&self, tol: T) -> Result<Inclusion<T>> {
        Inclusion::new(self.big_rep.clone(), self.extension.clone(), self.extension_trace.clone(), tol)
    }

    fn verify(&self, tol: T) -> Report {
        let mut r = Report::new();
        let inc = &self.inclusion;
        let e = &self.jones;
        let big_basis = inc.big_basis();
        let pis: Vec<CMatrix<T>> = big_basis.iter().map(|b| self.gns.pi_left(b)).collect();

        let mut compression = T::zero();
        for (a, pa) in big_basis.iter().zip(&pis) {
            let lhs = e * pa * e;
            let rhs = self.gns.pi_left(&inc.expect(a)) * e;
            compression = compression.max(frobenius_distance(&lhs, &rhs));
        }
        r.record("jones.compression", compression, tol);

        let small_basis = inc.small_basis();
        let mut rng = seeded_rng(CHECK_SEED);
        let mut bimodule = T::zero();
        for _ in 0..50 {
            let ca = random_complex(small_basis.len(), &mut rng);
            let cb = random_complex(small_basis.len(), &mut rng);
            let cx = random_complex(big_basis.len(), &mut rng);
            let (a, b) = (linalg::combine(&ca, small_basis), linalg::combine(&cb, small_basis));
            let x = linalg::combine(&cx, big_basis);
            bimodule = bimodule.max(frobenius_distance(&inc.expect(&(&a * &x * &b)), &(&a * inc.expect(&x) * &b)));
        }
        r.record("expectation.bimodule", bimodule, tol);

        let commutes = small_basis.iter().fold(T::zero(), |m, b| m.max(linalg::commutator_norm(e, &self.gns.pi_left(b))));
        r.record("jones.in_small_commutant", commutes, tol);
        r.record("jones.commutes_with_modular_conjugation", frobenius_distance(&modular_conjugate(e), e), tol);

        // M₁ = J N′ J equals the algebra generated by M and e_N. Both generators lie in
        // M₁; by the double commutant theorem the converse holds iff M′ ∩ {e_N}′ = J N J.
        // Inside M′ = J M J that commutant is a nullspace over the right action.
        let d = self.gns.dim();
        let backward = pis.iter().chain([e]).fold(T::zero(), |m, g| m.max(self.extension.residual(g)));
        let rights: Vec<CMatrix<T>> = big_basis.iter().map(|b| self.gns.pi_right(b)).collect();
        let commutators = CMatrix::from_fn(d * d, rights.len(), |k, c| {
            let (i, j) = (k / d, k % d);
            let (x, y) = (&rights[c], e);
            (0..d).fold(re(T::zero()), |acc, l| acc + x[(i, l)] * y[(l, j)] - y[(i, l)] * x[(l, j)])
        });
        let fixed = linalg::nullspace(&commutators, T::lit(1e-9)).len();
        let small_right = small_basis.iter().fold(T::zero(), |m, b| m.max(linalg::commutator_norm(e, &self.gns.pi_right(b))));
        r.record("extension.generated_by_jones", backward.max(small_right), tol);
        r.record_flag("extension.dimension", fixed == inc.small().dim());

        let mut inner = T::zero();
        let mut unit_action = T::zero();
        let mut right_action = T::zero();
        let one = self.gns.unit_vector();
        for _ in 0..20 {
            let x = linalg::combine(&random_complex(big_basis.len(), &mut rng), big_basis);
            let y = linalg::combine(&random_complex(big_basis.len(), &mut rng), big_basis);
            let (lx, ly) = (self.gns.lambda(&x), self.gns.lambda(&y));
            inner = inner.max(modulus(ly.dotc(&lx) - inc.trace().eval(&(y.adjoint() * &x))));
            unit_action = unit_action.max((self.gns.pi_left(&x) * &one - &lx).norm());
            right_action = right_action.max((self.gns.pi_right(&x) * &ly - self.gns.lambda(&(&y * &x))).norm());
        }
        r.record("gns.inner_product", inner, tol);
        r.record("gns.left_action_on_unit", unit_action, tol);
        r.record("gns.right_action", right_action, tol);

        let left_commutant = self.big_rep.commutant();
        let right_span = Subspace::spanned_by(d, d, &rights, T::lit(1e-9));
        let commutant_gap = left_commutant
            .basis()
            .iter()
            .fold(T::zero(), |m, b| m.max(right_span.residual(b)))
            .max(rights.iter().fold(T::zero(), |m, x| m.max(left_commutant.residual(x))));
        r.record("gns.commutant_is_right_action", commutant_gap, tol);

        r.record("trace.defining_relation", self.trace_relation_residual, tol);
        r.record("markov.restriction", self.markov_residual, tol);
        if let Ok(index) = inc.index() {
            let expectation = self.expect_onto_big(e);
            let target = identity::<T>(inc.ambient_dim()) * re(T::one() / index);
            r.record("markov.expectation_of_jones", frobenius_distance(&expectation, &target), tol);
            r.record("markov.mass_is_index", (self.extension_mass - index).abs(), tol);
        }
        r
    }
}

/// Jones tower `N ⊆ M ⊆ M₁ ⊆ M₂` (the second level is added by [`Tower::iterate`]).
#[derive(Debug, Clone)]
pub struct Tower<T: Real> {
    first: Level<T>,
    second: Option<SecondLevel<T>>,
    relative_commutant: FinDimAlgebra<T>,
    relative_basis: Vec<CMatrix<T>>,
    tol: T,
}

#[derive(Debug, Clone)]
struct SecondLevel<T: Real> {
    level: Level<T>,
    /// `e_N` viewed in `M₂ ⊆ B(L²(M₁))`.
    lifted_jones: CMatrix<T>,
}

impl<T: Real> Tower<T> {
    /// First basic construction for an inclusion with a Markov trace.
    pub fn basic_construction(inclusion: Inclusion<T>, tol: T) -> Result<Self> {
        let relative_commutant = inclusion.relative_commutant(tol)?;
        let ip = |x: &CMatrix<T>, y: &CMatrix<T>| inclusion.trace().inner(x, y);
        let relative_basis = hs_gram_schmidt(relative_commutant.basis(), ip, T::lit(1e-9))
            .iter()
            .map(linalg::hermitian_part)
            .collect();
        let first = Level::new(inclusion, tol)?;
        Ok(Self { first, second: None, relative_commutant, relative_basis, tol })
    }

    /// Adds `M₂`, `e_M`, `γ₁` and `Γ`.
    pub fn iterate(mut self) -> Result<Self> {
        if self.second.is_none() {
            let next = self.first.next_inclusion(self.tol)?;
            let level = Level::new(next, self.tol)?;
            let lifted_jones = level.gns.pi_left(&self.first.jones);
            self.second = Some(SecondLevel { level, lifted_jones });
        }
        Ok(self)
    }

    /// Both levels in one call.
    pub fn build(inclusion: Inclusion<T>, tol: T) -> Result<Self> {
        Self::basic_construction(inclusion, tol)?.iterate()
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn inclusion(&self) -> &Inclusion<T> {
        &self.first.inclusion
    }

    pub fn first(&self) -> &Level<T> {
        &self.first
    }

    pub fn second(&self) -> Result<&Level<T>> {
        self.second
            .as_ref()
            .map(|s| &s.level)
            .ok_or_else(|| Error::Precondition("tower has only one level; call iterate".into()))
    }

    /// `[M:N]`.
    pub fn index(&self) -> Result<T> {
        self.inclusion().index()
    }

    /// `N′ ∩ M` in the ambient coordinates of `M`.
    pub fn relative_commutant(&self) -> &FinDimAlgebra<T> {
        &self.relative_commutant
    }

    /// Trace-orthonormal self-adjoint basis of `N′ ∩ M`.
    pub fn relative_basis(&self) -> &[CMatrix<T>] {
        &self.relative_basis
    }

    /// `e_N` on `L²(M)`.
    pub fn e_n(&self) -> &CMatrix<T> {
        &self.first.jones
    }

    /// `e_N` as an element of `M₂` on `L²(M₁)`.
    pub fn e_n_lifted(&self) -> Result<&CMatrix<T>> {
        self.second.as_ref().map(|s| &s.lifted_jones).ok_or_else(|| Error::Precondition("tower has one level".into()))
    }

    /// `e_M` on `L²(M₁)`.
    pub fn e_m(&self) -> Result<&CMatrix<T>> {
        Ok(&self.second()?.jones)
    }

    /// `π(x)` for `x ∈ M`.
    pub fn lift(&self, x: &CMatrix<T>) -> CMatrix<T> {
        self.first.gns.pi_left(x)
    }

    /// `π₁(y)` for `y ∈ M₁` given on `L²(M)`.
    pub fn lift_second(&self, y: &CMatrix<T>) -> Result<CMatrix<T>> {
        Ok(self.second()?.gns.pi_left(y))
    }

    /// `π₁(π(x))` for `x ∈ M`.
    pub fn lift_both(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.lift_second(&self.lift(x))
    }

    /// `γ₀(x) = J x* J ∈ M′ ∩ M₁` for `x ∈ N′ ∩ M`.
    pub fn gamma0(&self, x: &CMatrix<T>) -> CMatrix<T> {
        self.first.gns.pi_right(x)
    }

    /// `γ₁(y) = J₁ y* J₁ ∈ M₁′ ∩ M₂` for `y ∈ M′ ∩ M₁`.
    pub fn gamma1(&self, y: &CMatrix<T>) -> Result<CMatrix<T>> {
        Ok(self.second()?.gns.pi_right(y))
    }

    /// Canonical shift `Γ = γ₁ ∘ γ₀`.
    pub fn shift(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.gamma1(&self.gamma0(x))
    }

    /// Normalised trace `τ₂` on `M₂`.
    pub fn top_trace(&self) -> Result<&TraceFunctional<T>> {
        Ok(self.second()?.extension_trace())
    }

    /// Whether `y` on `L²(M₁)` lies in `M₂ = J₁ π₁(M)′ J₁`, as a commutator residual.
    pub fn top_membership_residual(&self, y: &CMatrix<T>) -> Result<T> {
        let second = self.second()?;
        let conj = modular_conjugate(y);
        Ok(second.small_rep.commutator_residual(&conj))
    }

    /// `M₁′ ∩ M₂ = J₁ π₁(M′ ∩ M₁) J₁`, as a basis on `L²(M₁)`.
    pub fn top_relative_commutant_basis(&self) -> Result<Vec<CMatrix<T>>> {
        let second = self.second()?;
        let m_commutant = self.first.big_rep.commutant().intersect(&self.first.extension, self.tol)?;
        Ok(m_commutant
            .basis()
            .iter()
            .map(|b| modular_conjugate(&second.gns.pi_left(b)))
            .collect())
    }

    /// Identities of both basic constructions, the Temperley-Lieb relations and
    /// the shift, as named residual checks.
    pub fn verify_identities(&self) -> Result<Report> {
        let tol = self.tol;
        let mut r = Report::new();
        r.extend("level1", self.first.verify(tol));
        let second = self.second()?;
        r.extend("level2", second.verify(tol));

        let index = self.index()?;
        let inv = re(T::one() / index);
        let e_n = self.e_n_lifted()?;
        let e_m = self.e_m()?;
        r.record("tl.e_n_e_m_e_n", frobenius_distance(&(e_n * e_m * e_n), &(e_n * inv)), tol);
        r.record("tl.e_m_e_n_e_m", frobenius_distance(&(e_m * e_n * e_m), &(e_m * inv)), tol);
        let next_index = second.inclusion.index()?;
        r.record("index.periodicity", (next_index - index).abs(), T::lit(1e-12) * index.max(T::one()));
        r.record_flag("index.integer_agreement", next_index.round() == index.round());
        r.extend("epr", self.verify_epr()?);
        r.extend("shift", self.verify_shift()?);
        Ok(r)
    }

    /// Both EPR lemmas over a basis of `N′ ∩ M`, plus perfect correlation of
    /// unit vectors of `L²(N)`.
    pub fn verify_epr(&self) -> Result<Report> {
        let tol = self.tol;
        let mut r = Report::new();
        let e_n = self.e_n();
        let e_n2 = self.e_n_lifted()?;
        let e_m = self.e_m()?;
        let range = column_space(e_n, T::lit(1e-6));
        let (mut first, mut second, mut corr) = (T::zero(), T::zero(), T::zero());
        for x in &self.relative_basis {
            let px = self.lift(x);
            let g0 = self.gamma0(x);
            first = first.max(frobenius_distance(&(&px * e_n), &(&g0 * e_n)));
            let lhs = e_n2 * self.lift_second(&px)? * e_m;
            let rhs = e_n2 * self.shift(x)? * e_m;
            second = second.max(frobenius_distance(&lhs, &rhs));
            corr = corr.max(((&px - &g0) * &range).norm());
        }
        r.record("left_equals_mirror_on_jones", first, tol);
        r.record("shift_through_jones_pair", second, tol);
        r.record("perfect_correlation", corr, tol);
        Ok(r)
    }

    /// `Γ` is a unital *-homomorphism of `N′ ∩ M` into `M₁′ ∩ M₂`.
    pub fn verify_shift(&self) -> Result<Report> {
        let tol = self.tol;
        let mut r = Report::new();
        let second = self.second()?;
        let n = self.inclusion().ambient_dim();
        let d1 = second.gns.dim();
        r.record("unital", frobenius_distance(&self.shift(&identity(n))?, &identity(d1)), tol);
        let basis = &self.relative_basis;
        let images: Vec<CMatrix<T>> = basis.iter().map(|x| self.shift(x)).collect::<Result<_>>()?;
        let (mut mult, mut adj, mut inside) = (T::zero(), T::zero(), T::zero());
        let generators: Vec<CMatrix<T>> = self
            .inclusion()
            .big_basis()
            .iter()
            .map(|b| self.lift_both(b))
            .chain(std::iter::once(Ok(self.e_n_lifted()?.clone())))
            .collect::<Result<_>>()?;
        for (x, gx) in basis.iter().zip(&images) {
            for (y, gy) in basis.iter().zip(&images) {
                mult = mult.max(frobenius_distance(&self.shift(&(x * y))?, &(gx * gy)));
            }
            adj = adj.max(frobenius_distance(&self.shift(&x.adjoint())?, &gx.adjoint()));
            for g in &generators {
                inside = inside.max(linalg::commutator_norm(gx, g));
            }
            inside = inside.max(self.top_membership_residual(gx)?);
        }
        r.record("multiplicative", mult, tol);
        r.record("adjoint", adj, tol);
        r.record("lands_in_top_relative_commutant", inside, tol);
        Ok(r)
    }

    /// For `u` in the normaliser of `N` and a unit vector `ψ ∈ L²(N)`, checks that
    /// `ω_{u*ψ}` is tracial on `N′ ∩ M` and that `γ₀(u x u*) u*ψ = x u*ψ`.
    pub fn verify_tracial_entangled_state(&self, u: &CMatrix<T>, psi: &CVector<T>) -> Result<Report> {
        if !pp_basis::normaliser_check(self.inclusion(), u, self.tol)? {
            return Err(Error::Normaliser("u does not normalise N".into()));
        }
        let tol = self.tol;
        let residual_in_range = (self.e_n() * psi - psi).norm();
        if residual_in_range > T::lit(1e-8) || (psi.norm() - T::one()).abs() > T::lit(1e-8) {
            return Err(Error::Precondition("ψ must be a unit vector in L²(N)".into()));
        }
        let phi = self.lift(&u.adjoint()) * psi;
        let state = |x: &CMatrix<T>| (self.lift(x) * &phi).dotc(&phi);
        let mut rng = seeded_rng(CHECK_SEED ^ 0xface);
        let basis = &self.relative_basis;
        let (mut tracial, mut double) = (T::zero(), T::zero());
        for _ in 0..20 {
            let x = linalg::combine(&random_complex(basis.len(), &mut rng), basis);
            let y = linalg::combine(&random_complex(basis.len(), &mut rng), basis);
            // state(z) computes ⟨φ, π(z)φ⟩ conjugated; traciality is symmetric in that.
            tracial = tracial.max(modulus(state(&(&x * &y)) - state(&(&y * &x))));
            let mirrored = self.gamma0(&(u * &x * u.adjoint())) * &phi;
            double = double.max((mirrored - self.lift(&x) * &phi).norm());
        }
        let mut r = Report::new();
        r.record("tracial", tracial, tol);
        r.record("mirror_through_unitary", double, tol);
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, outer};

    const TOL: f64 = 1e-9;

    fn pauli_x() -> CMatrix<f64> {
        CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
    }

    #[test]
    fn unit_vector_of_matrix_algebra_is_maximally_entangled() {
        // Coordinates follow the matrix-unit basis, so compare overlaps rather than entries.
        let inc = Inclusion::<f64>::scalars_in_full(2).unwrap();
        let gns = GnsSpace::new(inc.big(), inc.trace()).unwrap();
        let one = gns.unit_vector();
        assert!((one.norm() - 1.0).abs() < 1e-14);
        let e00 = gns.lambda(&linalg::matrix_unit(2, 0, 0));
        assert!((e00.dotc(&one).re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn jones_projection_examples() {
        let inc = Inclusion::<f64>::scalars_in_full(3).unwrap();
        let level = Level::new(inc, TOL).unwrap();
        let one = level.gns().unit_vector();
        assert!(frobenius_distance(level.jones(), &outer(&one, &one)) < 1e-14);

        let inc = Inclusion::<f64>::diagonal_in_full(2).unwrap();
        let level = Level::new(inc.clone(), TOL).unwrap();
        assert!((level.jones().trace().re - 2.0).abs() < 1e-12);
        let x = linalg::random_matrix::<f64, _>(2, 2, &mut seeded_rng(1));
        let lhs = level.jones() * level.gns().lambda(&x);
        let rhs = level.gns().lambda(&inc.expect(&x));
        assert!((lhs - rhs).norm() < 1e-14);
        assert_eq!(level.extension().dim(), 8);

        let full = FinDimAlgebra::<f64>::full(2);
        let inc = Inclusion::with_markov_trace(full.clone(), full, TOL).unwrap();
        let level = Level::new(inc, TOL).unwrap();
        assert!(frobenius_distance(level.jones(), &identity(4)) < 1e-12);
    }

    #[test]
    fn first_level_of_scalars_is_everything() {
        let inc = Inclusion::<f64>::scalars_in_full(2).unwrap();
        let level = Level::new(inc, TOL).unwrap();
        assert_eq!(level.extension().block_shape(), vec![(4, 1)]);
        assert!((level.extension_mass() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn non_markov_trace_is_rejected() {
        let small = FinDimAlgebra::<f64>::scalars(3);
        let big = FinDimAlgebra::<f64>::block_diagonal(&[(1, 1), (2, 1)]).unwrap();
        let trace = TraceFunctional::normalised(&big);
        let inc = Inclusion::new(small, big, trace, TOL).unwrap();
        assert!(matches!(Level::new(inc, TOL), Err(Error::Markov(_))));
    }

    #[test]
    fn tower_identities_hold_for_small_cases() {
        let cases = [
            Inclusion::<f64>::scalars_in_full(2).unwrap(),
            Inclusion::<f64>::diagonal_in_full(2).unwrap(),
            Inclusion::scalars_in(FinDimAlgebra::block_diagonal(&[(1, 1), (2, 1)]).unwrap()).unwrap(),
        ];
        for inc in cases {
            let tower = Tower::build(inc, TOL).unwrap();
            let report = tower.verify_identities().unwrap();
            assert!(report.all_passed(), "{report}");
        }
    }

    #[test]
    fn second_jones_projection_for_scalars_in_m2() {
        let tower = Tower::build(Inclusion::<f64>::scalars_in_full(2).unwrap(), TOL).unwrap();
        let e_m = tower.e_m().unwrap();
        assert!((e_m.trace().re - 4.0).abs() < 1e-12);
        assert_eq!(tower.second().unwrap().extension().block_shape(), vec![(8, 2)]);
    }

    #[test]
    fn epr_for_pauli_and_diagonal_sign() {
        let tower = Tower::build(Inclusion::<f64>::scalars_in_full(2).unwrap(), TOL).unwrap();
        let x = pauli_x();
        let e = tower.e_n();
        let lhs = tower.lift(&x) * e;
        let rhs = tower.gamma0(&x) * e;
        assert!(frobenius_distance(&lhs, &rhs) < 1e-12);
        let tower = Tower::build(Inclusion::<f64>::diagonal_in_full(2).unwrap(), TOL).unwrap();
        let z = diag(&[1.0, -1.0]);
        let e = tower.e_n();
        assert!(frobenius_distance(&(tower.lift(&z) * e), &(tower.gamma0(&z) * e)) < TOL);
        assert!(tower.verify_epr().unwrap().all_passed());
    }

    #[test]
    fn tracial_entangled_states() {
        let tower = Tower::build(Inclusion::<f64>::scalars_in_full(2).unwrap(), TOL).unwrap();
        let psi = tower.first().gns().unit_vector();
        let r = tower.verify_tracial_entangled_state(&identity(2), &psi).unwrap();
        assert!(r.all_passed(), "{r}");
        let r = tower.verify_tracial_entangled_state(&pauli_x(), &psi).unwrap();
        assert!(r.all_passed(), "{r}");

        let tower = Tower::build(Inclusion::<f64>::diagonal_in_full(2).unwrap(), TOL).unwrap();
        let psi = tower.first().gns().lambda(&diag(&[1.0, 0.0]));
        let psi = &psi / re(psi.norm());
        let r = tower.verify_tracial_entangled_state(&pauli_x(), &psi).unwrap();
        assert!(r.all_passed(), "{r}");
        let hadamard = CMatrix::from_row_slice(2, 2, &[re(1.0), re(1.0), re(1.0), re(-1.0)]) / re(2f64.sqrt());
        assert!(matches!(
            tower.verify_tracial_entangled_state(&hadamard, &psi),
            Err(Error::Normaliser(_))
        ));
    }

    #[test]
    fn shift_is_homomorphism_on_diagonal() {
        let tower = Tower::build(Inclusion::<f64>::diagonal_in_full(3).unwrap(), TOL).unwrap();
        let r = tower.verify_shift().unwrap();
        assert!(r.all_passed(), "{r}");
    }
}

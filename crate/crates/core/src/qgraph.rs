//! Quantum graphs `(S, M, B(H))` from inclusions, colourings by projection-valued
//! measures, and certified chromatic bounds.

use crate::algebra::FinDimAlgebra;
use crate::error::{Error, Result};
use crate::inclusion::Inclusion;
use crate::linalg::{self, frobenius_distance, identity, kron, kron_all, zeros, CMatrix, Subspace};
use crate::pp_basis::{homogeneity_test, weyl_unitaries, PPBasis};
use crate::report::Report;
use crate::scalar::{re, Real};
use crate::tower::Tower;

/// Residual above which a projection-valued measure counts as malformed.
const STRUCTURAL: f64 = 1e-6;

/// Operator system `S ⊆ B(H)` that is a bimodule over the commutant of `algebra`.
#[derive(Debug, Clone)]
pub struct QuantumGraph<T: Real> {
    system: Subspace<T>,
    algebra: FinDimAlgebra<T>,
    commutant: FinDimAlgebra<T>,
}

impl<T: Real> QuantumGraph<T> {
    pub fn new(system: &[CMatrix<T>], algebra: FinDimAlgebra<T>, tol: T) -> Result<Self> {
        let n = algebra.ambient_dim();
        if system.iter().any(|x| x.shape() != (n, n)) {
            return Err(Error::Dimension(format!("operator system must act on ℂ^{n}")));
        }
        let commutant = algebra.commutant();
        Ok(Self { system: Subspace::spanned_by(n, n, system, tol), algebra, commutant })
    }

    pub fn ambient_dim(&self) -> usize {
        self.algebra.ambient_dim()
    }

    pub fn system(&self) -> &Subspace<T> {
        &self.system
    }

    pub fn algebra(&self) -> &FinDimAlgebra<T> {
        &self.algebra
    }

    pub fn commutant(&self) -> &FinDimAlgebra<T> {
        &self.commutant
    }

    /// Unit membership, adjoint closure, and the commutant-bimodule property.
    pub fn verify(&self, tol: T) -> Report {
        let mut r = Report::new();
        let basis = self.system.basis();
        r.record("contains_unit", self.system.residual(&identity(self.ambient_dim())), tol);
        r.record("self_adjoint", self.system.max_residual(basis.iter().map(|x| x.adjoint()).collect::<Vec<_>>().iter()), tol);
        let mut bimodule = T::zero();
        for a in self.commutant.basis() {
            for x in &basis {
                bimodule = bimodule.max(self.system.residual(&(a * x))).max(self.system.residual(&(x * a)));
            }
        }
        r.record("commutant_bimodule", bimodule, tol);
        r
    }

    /// Orthonormal basis (trace inner product of the ambient) of `S ∩ (M′)^⊥`.
    pub fn traceless_part(&self, tol: T) -> Vec<CMatrix<T>> {
        let n = self.ambient_dim();
        let commutant = self.commutant.span(tol);
        let rest: Vec<CMatrix<T>> = self.system.basis().iter().map(|x| x - commutant.project(x)).collect();
        Subspace::spanned_by(n, n, &rest, tol).basis()
    }
}

/// The graphs `(M, N′, B(H))` and `(N′, M, B(H))` of `N ⊆ M ⊆ B(H)`.
pub fn graph_from_inclusion<T: Real>(inc: &Inclusion<T>, tol: T) -> Result<(QuantumGraph<T>, QuantumGraph<T>)> {
    graphs_of(inc.small(), inc.big(), tol)
}

/// [`graph_from_inclusion`] for algebras given directly, e.g. on `L²(M)`.
pub fn graphs_of<T: Real>(
    small: &FinDimAlgebra<T>,
    big: &FinDimAlgebra<T>,
    tol: T,
) -> Result<(QuantumGraph<T>, QuantumGraph<T>)> {
    let small_commutant = small.commutant();
    let over_commutant = QuantumGraph::new(big.basis(), small_commutant.clone(), tol)?;
    let over_big = QuantumGraph::new(small_commutant.basis(), big.clone(), tol)?;
    Ok((over_commutant, over_big))
}

/// The graph `(π(M), π(N)′, B(L²(M)))` of the standard representation.
pub fn standard_graph<T: Real>(tower: &Tower<T>) -> Result<QuantumGraph<T>> {
    let first = tower.first();
    Ok(graphs_of(first.small_rep(), first.big_rep(), tower.tol())?.0)
}

/// Projections `{P_a}` in `M ⊗ L`, with `L` a matrix algebra carrying its normalised trace.
#[derive(Debug, Clone)]
pub struct Colouring<T: Real> {
    ancilla: FinDimAlgebra<T>,
    projections: Vec<CMatrix<T>>,
}

impl<T: Real> Colouring<T> {
    pub fn new(ancilla: FinDimAlgebra<T>, projections: Vec<CMatrix<T>>) -> Result<Self> {
        let Some(first) = projections.first() else {
            return Err(Error::Colouring("a colouring needs at least one colour".into()));
        };
        let d = first.nrows();
        if projections.iter().any(|p| p.shape() != (d, d)) || d % ancilla.ambient_dim() != 0 {
            return Err(Error::Dimension("colour projections must share a shape divisible by the ancilla".into()));
        }
        Ok(Self { ancilla, projections })
    }

    pub fn colours(&self) -> usize {
        self.projections.len()
    }

    pub fn ancilla(&self) -> &FinDimAlgebra<T> {
        &self.ancilla
    }

    pub fn projections(&self) -> &[CMatrix<T>] {
        &self.projections
    }
}

/// Checks that the colouring is a projection-valued measure in `M ⊗ L` and
/// records `max_a ‖P_a (x ⊗ 1_L) P_a‖` over the traceless part of the graph.
pub fn verify_colouring<T: Real>(g: &QuantumGraph<T>, col: &Colouring<T>, tol: T) -> Result<Report> {
    let n = g.ambient_dim();
    let l = col.ancilla.ambient_dim();
    let d = n * l;
    if col.projections[0].nrows() != d {
        return Err(Error::Dimension(format!("colouring acts on ℂ^{}, expected ℂ^{d}", col.projections[0].nrows())));
    }
    let joint = g.algebra.tensor(&col.ancilla);
    let mut r = Report::new();
    let (mut idempotent, mut hermitian, mut orthogonal, mut inside) = (T::zero(), T::zero(), T::zero(), T::zero());
    let mut total = zeros::<T>(d, d);
    for (a, p) in col.projections.iter().enumerate() {
        idempotent = idempotent.max(frobenius_distance(&(p * p), p));
        hermitian = hermitian.max(frobenius_distance(p, &p.adjoint()));
        inside = inside.max(joint.residual(p));
        for q in &col.projections[a + 1..] {
            orthogonal = orthogonal.max((p * q).norm());
        }
        total += p;
    }
    r.record("pvm.idempotent", idempotent, tol);
    r.record("pvm.hermitian", hermitian, tol);
    r.record("pvm.orthogonal", orthogonal, tol);
    r.record("pvm.complete", frobenius_distance(&total, &identity(d)), tol);
    r.record("pvm.in_algebra", inside, tol);
    if let Some(c) = r.checks().iter().find(|c| c.residual > STRUCTURAL) {
        return Err(Error::Colouring(format!("{} fails with residual {:.3e}", c.name, c.residual)));
    }

    let one = identity::<T>(l);
    let mut worst = T::zero();
    for x in g.traceless_part(tol) {
        let lifted = kron(&x, &one);
        for p in &col.projections {
            worst = worst.max((p * &lifted * p).norm());
        }
    }
    r.record("colouring.traceless_killed", worst, tol);
    Ok(r)
}

/// One summand `ℂ^{n_j} ⊗ ℂ^{l_j} ⊗ ℂ^d` of `H` for a factor `N ≅ M_d` inside `M`.
#[derive(Debug, Clone)]
pub struct FrameBlock<T: Real> {
    pub multiplicity: usize,
    pub size: usize,
    /// Isometry `ℂ^{n_j} ⊗ ℂ^{l_j} ⊗ ℂ^d → H` carrying `1 ⊗ M_{l_j} ⊗ M_d` onto a summand of `M`.
    pub isometry: CMatrix<T>,
}

/// Coordinates in which `M = ⊕_j 1_{n_j} ⊗ M_{l_j} ⊗ M_d` and `N = 1 ⊗ M_d`.
#[derive(Debug, Clone)]
pub struct FactorFrame<T: Real> {
    pub factor_dim: usize,
    pub blocks: Vec<FrameBlock<T>>,
}

impl<T: Real> FactorFrame<T> {
    /// `Σ_j l_j²`.
    pub fn index(&self) -> usize {
        self.blocks.iter().map(|b| b.size * b.size).sum()
    }
}

/// Splits `H` along a factor `N ⊆ M`; `M ∩ N′` is read off in the first tensor leg.
pub fn factor_frame<T: Real>(inc: &Inclusion<T>, tol: T) -> Result<FactorFrame<T>> {
    let small = inc.small();
    if !small.is_factor() {
        return Err(Error::Precondition("the smaller algebra is not a factor".into()));
    }
    let block = &small.blocks()[0];
    let (d, r) = (block.dim(), block.multiplicity());
    let n = inc.ambient_dim();
    if d * r != n {
        return Err(Error::Precondition("the smaller algebra is not unital".into()));
    }
    let frame = CMatrix::from_fn(n, n, |row, col| block.frames()[col % d][(row, col / d)]);
    let reduced: Vec<CMatrix<T>> = inc
        .big()
        .intersect(&small.commutant(), tol)?
        .basis()
        .iter()
        .map(|y| linalg::partial_trace(&(frame.adjoint() * y * &frame), &[r, d], &[1], true))
        .collect::<Result<_>>()?;
    let reduced = FinDimAlgebra::from_spanning_set(r, &reduced, tol)?;
    let blocks = reduced
        .blocks()
        .iter()
        .map(|b| {
            let (mult, size) = (b.multiplicity(), b.dim());
            let local = CMatrix::from_fn(r, mult * size, |row, col| b.frames()[col % size][(row, col / size)]);
            FrameBlock { multiplicity: mult, size, isometry: &frame * kron(&local, &identity(d)) }
        })
        .collect();
    Ok(FactorFrame { factor_dim: d, blocks })
}

/// Colouring of `(N′, M, B(H))` with `[M:N] = Σ l_j²` colours and `L = M_l`,
/// `l = lcm(l_j)`: on each summand, the Bell projections `(u_i*⊗1)e(u_i⊗1)` of the
/// Weyl basis of `M_{l_j}`, with the second copy of `M_{l_j}` embedded as `1_{l/l_j} ⊗ (·)`.
pub fn colouring_factor_case<T: Real>(inc: &Inclusion<T>, tol: T) -> Result<Colouring<T>> {
    let frame = factor_frame(inc, tol)?;
    let l = frame.blocks.iter().fold(1, |acc, b| lcm(acc, b.size));
    let d = frame.factor_dim;
    let mut projections = Vec::with_capacity(frame.index());
    for b in &frame.blocks {
        let lj = b.size;
        let bell = linalg::max_entangled::<T>(lj);
        let bell = linalg::outer(&bell, &bell);
        let carry = kron(&b.isometry, &identity(l));
        for u in weyl_unitaries::<T>(lj) {
            let twist = kron(&u.adjoint(), &identity(lj));
            let pair = &twist * &bell * twist.adjoint();
            let ordered = kron_all(&[&identity(b.multiplicity), &pair, &identity(d), &identity(l / lj)]);
            let dims = [b.multiplicity, lj, lj, d, l / lj];
            let local = linalg::permute_legs(&ordered, &dims, &[0, 1, 3, 4, 2])?;
            projections.push(&carry * local * carry.adjoint());
        }
    }
    Colouring::new(FinDimAlgebra::full(l), projections)
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

fn require_normaliser_basis<T: Real>(basis: &PPBasis<T>, tol: T) -> Result<()> {
    let flags = basis.verify(tol)?.flags;
    if flags.complete && flags.orthonormal && flags.unitary && flags.in_normaliser {
        Ok(())
    } else {
        Err(Error::Precondition(format!("basis is not an orthonormal unitary normaliser basis: {flags:?}")))
    }
}

/// Colouring `P_i = u_i* e_N u_i` of `(π(M), π(N)′, B(L²(M)))` with `L = ℂ`.
pub fn colouring_from_basis<T: Real>(tower: &Tower<T>, basis: &PPBasis<T>) -> Result<Colouring<T>> {
    require_normaliser_basis(basis, tower.tol())?;
    let e = tower.e_n();
    let projections = basis
        .elements()
        .iter()
        .map(|u| {
            let lifted = tower.lift(u);
            lifted.adjoint() * e * lifted
        })
        .collect();
    Colouring::new(FinDimAlgebra::full(1), projections)
}

/// How a colouring is compressed to the family `R_a` whose sum is `[M:N]·1`.
#[derive(Debug, Clone)]
pub enum Compression<T: Real> {
    /// `R_a = Σ_j l_j² (τ ⊗ τ ⊗ id ⊗ id)(z_j P_a)` for the graph `(N′, M, B(H))`, `N` a factor.
    Factor(FactorFrame<T>),
    /// `R_a = Σ_i (u_i* ⊗ 1) P_a (u_i ⊗ 1)` for the graph `(M, N′, B(L²(M)))`.
    Normaliser(Vec<CMatrix<T>>),
}

/// Lower bound `c ≥ [M:N]` from `(c − [M:N])·1 = Σ_a (1 − R_a) ≥ 0`.
#[derive(Debug, Clone)]
pub struct Certificate<T: Real> {
    pub index: T,
    pub bound: usize,
    pub colours: usize,
    pub report: Report,
}

pub fn lower_bound_certificate<T: Real>(
    g: &QuantumGraph<T>,
    col: &Colouring<T>,
    compression: &Compression<T>,
    tol: T,
) -> Result<Certificate<T>> {
    let colouring = verify_colouring(g, col, tol)?;
    if !colouring.all_passed() {
        return Err(Error::Precondition(format!("colouring does not verify:\n{colouring}")));
    }
    let l = col.ancilla.ambient_dim();
    let (compressed, index): (Vec<CMatrix<T>>, T) = match compression {
        Compression::Factor(frame) => {
            let d = frame.factor_dim;
            let compressed = col
                .projections
                .iter()
                .map(|p| {
                    frame.blocks.iter().try_fold(zeros::<T>(d * l, d * l), |acc, b| {
                        let carry = kron(&b.isometry, &identity(l));
                        let local = carry.adjoint() * p * carry;
                        let dims = [b.multiplicity, b.size, d, l];
                        let reduced = linalg::partial_trace(&local, &dims, &[0, 1], true)?;
                        Ok::<_, Error>(acc + reduced * re(T::of_usize(b.size * b.size)))
                    })
                })
                .collect::<Result<_>>()?;
            (compressed, T::of_usize(frame.index()))
        }
        Compression::Normaliser(units) => {
            let compressed = col
                .projections
                .iter()
                .map(|p| {
                    units.iter().fold(zeros::<T>(p.nrows(), p.nrows()), |acc, u| {
                        let lifted = kron(u, &identity(l));
                        acc + lifted.adjoint() * p * lifted
                    })
                })
                .collect();
            (compressed, T::of_usize(units.len()))
        }
    };
    let dim = compressed[0].nrows();
    let mut report = Report::new();
    let (mut projection, mut total) = (T::zero(), zeros::<T>(dim, dim));
    for r in &compressed {
        projection = projection.max(frobenius_distance(&(r * r), r)).max(frobenius_distance(r, &r.adjoint()));
        total += r;
    }
    report.record("compressed.projection", projection, tol);
    report.record("compressed.sum", frobenius_distance(&total, &(identity::<T>(dim) * re(index))), tol);
    if projection > T::lit(STRUCTURAL) {
        return Err(Error::Certificate(format!(
            "compressed colours are not projections (residual {:.3e})",
            projection.to_f64_lossy()
        )));
    }
    let bound = (index.to_f64_lossy() - 1e-9).ceil().max(1.0) as usize;
    report.record_flag("colours_at_least_bound", col.colours() >= bound);
    Ok(Certificate { index, bound, colours: col.colours(), report })
}

/// Unitary orthonormal normaliser basis built from the block structure, if one of
/// the known patterns applies (homogeneous multiplicity-free `N`, or `N` a factor with `M` full).
pub fn find_normaliser_basis<T: Real>(inc: &Inclusion<T>, tol: T) -> Option<PPBasis<T>> {
    let mut candidates: Vec<Vec<CMatrix<T>>> = Vec::new();
    if let Ok(h) = homogeneity_test(inc) {
        if let Some(w) = h.witness {
            candidates.push(w.elements().to_vec());
        }
    }
    if let Ok(frame) = factor_frame(inc, tol) {
        if let [b] = frame.blocks.as_slice() {
            if b.multiplicity == 1 {
                let one = identity::<T>(frame.factor_dim);
                let units = weyl_unitaries::<T>(b.size)
                    .iter()
                    .map(|w| &b.isometry * kron(w, &one) * b.isometry.adjoint())
                    .collect();
                candidates.push(units);
            }
        }
    }
    candidates.into_iter().find_map(|units| {
        let basis = PPBasis::new(inc.clone(), units).ok()?;
        require_normaliser_basis(&basis, tol).ok()?;
        Some(basis)
    })
}

/// Bounds on the chromatic number of one graph, with the evidence behind them.
#[derive(Debug, Clone, Default)]
pub struct GraphBounds {
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    pub colouring: Option<Report>,
    pub certificate: Option<Report>,
    pub notes: Vec<String>,
}

impl GraphBounds {
    pub fn is_tight(&self) -> bool {
        matches!((self.lower, self.upper), (Some(a), Some(b)) if a == b)
    }
}

#[derive(Debug, Clone)]
pub struct ChromaticBounds {
    /// `(N′, M, B(H))`: quantum and quantum-commuting chromatic numbers, `N` a factor.
    pub commutant_graph: GraphBounds,
    /// `(M, N′, B(L²(M)))`: local, quantum and quantum-commuting chromatic numbers.
    pub standard_graph: GraphBounds,
}

fn bounds_from<T: Real>(
    g: &QuantumGraph<T>,
    col: Colouring<T>,
    compression: &Compression<T>,
    tol: T,
) -> GraphBounds {
    let mut out = GraphBounds::default();
    match verify_colouring(g, &col, tol) {
        Ok(report) => {
            if report.all_passed() {
                out.upper = Some(col.colours());
            } else {
                out.notes.push("constructed colouring does not verify".into());
            }
            out.colouring = Some(report);
        }
        Err(e) => out.notes.push(format!("constructed colouring rejected: {e}")),
    }
    match lower_bound_certificate(g, &col, compression, tol) {
        Ok(cert) => {
            out.lower = Some(cert.bound);
            out.certificate = Some(cert.report);
        }
        Err(e) => out.notes.push(format!("no lower-bound certificate: {e}")),
    }
    if !out.is_tight() {
        out.notes.push("bounds do not meet".into());
    }
    out
}

/// Both chromatic bounds that the factor and normaliser-basis constructions cover;
/// anything outside those hypotheses is reported as a note.
pub fn chromatic_bounds<T: Real>(inc: &Inclusion<T>, tol: T) -> ChromaticBounds {
    let commutant_graph = (|| -> Result<GraphBounds> {
        let frame = factor_frame(inc, tol)?;
        let (_, g) = graph_from_inclusion(inc, tol)?;
        let col = colouring_factor_case(inc, tol)?;
        Ok(bounds_from(&g, col, &Compression::Factor(frame), tol))
    })()
    .unwrap_or_else(|e| GraphBounds { notes: vec![format!("factor construction unavailable: {e}")], ..Default::default() });

    let standard_graph = (|| -> Result<GraphBounds> {
        let basis = find_normaliser_basis(inc, tol)
            .ok_or_else(|| Error::Hypothesis("no unitary orthonormal normaliser basis found".into()))?;
        let tower = Tower::build(inc.clone(), tol)?;
        let g = standard_graph(&tower)?;
        let col = colouring_from_basis(&tower, &basis)?;
        let units = basis.elements().iter().map(|u| tower.lift(u)).collect();
        Ok(bounds_from(&g, col, &Compression::Normaliser(units), tol))
    })()
    .unwrap_or_else(|e| GraphBounds { notes: vec![format!("normaliser construction unavailable: {e}")], ..Default::default() });

    ChromaticBounds { commutant_graph, standard_graph }
}

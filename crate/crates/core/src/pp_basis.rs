//! Pimsner-Popa bases of `M` over `N` and the structural facts about them.

use crate::algebra::FinDimAlgebra;
use crate::error::{Error, Result};
use crate::inclusion::Inclusion;
use crate::linalg::{self, frobenius_distance, identity, is_unitary, zeros, CMatrix, Tolerance};
use crate::report::Report;
use crate::scalar::{cis, re, Real};
use crate::tower::{jones_projection, GnsSpace, Tower};

/// Family `λ_1, …, λ_d ∈ M` meant to satisfy `Σ λ_i* e_N λ_i = 1`.
#[derive(Debug, Clone)]
pub struct PPBasis<T: Real> {
    inclusion: Inclusion<T>,
    elements: Vec<CMatrix<T>>,
}

/// Outcome flags of [`PPBasis::verify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BasisFlags {
    pub complete: bool,
    pub orthonormal: bool,
    pub unitary: bool,
    pub in_normaliser: bool,
}

#[derive(Debug, Clone)]
pub struct BasisReport {
    pub size: usize,
    pub flags: BasisFlags,
    pub report: Report,
}

/// Cyclic shift `U|k⟩ = |k+1⟩`.
pub fn shift_matrix<T: Real>(n: usize) -> CMatrix<T> {
    CMatrix::from_fn(n, n, |i, j| if i == (j + 1) % n { re(T::one()) } else { re(T::zero()) })
}

/// Clock `V|k⟩ = e^{2πik/n}|k⟩`.
pub fn clock_matrix<T: Real>(n: usize) -> CMatrix<T> {
    let step = T::two_pi() / T::of_usize(n);
    CMatrix::from_fn(n, n, |i, j| if i == j { cis(step * T::of_usize(i)) } else { re(T::zero()) })
}

fn power<T: Real>(m: &CMatrix<T>, k: usize) -> CMatrix<T> {
    (0..k).fold(identity(m.nrows()), |acc, _| acc * m)
}

/// Weyl unitaries `V^l U^k` in lexicographic order of `(l, k)`.
pub fn weyl_unitaries<T: Real>(n: usize) -> Vec<CMatrix<T>> {
    let (u, v) = (shift_matrix::<T>(n), clock_matrix::<T>(n));
    let mut out = Vec::with_capacity(n * n);
    for l in 0..n {
        let vl = power(&v, l);
        for k in 0..n {
            out.push(&vl * power(&u, k));
        }
    }
    out
}

impl<T: Real> PPBasis<T> {
    pub fn new(inclusion: Inclusion<T>, elements: Vec<CMatrix<T>>) -> Result<Self> {
        let n = inclusion.ambient_dim();
        if elements.is_empty() {
            return Err(Error::Precondition("a basis needs at least one element".into()));
        }
        if let Some(e) = elements.iter().find(|e| e.shape() != (n, n)) {
            return Err(Error::Dimension(format!("basis element of shape {:?} in M_{n}", e.shape())));
        }
        Ok(Self { inclusion, elements })
    }

    /// Weyl basis of `M_n` over `ℂ`.
    pub fn weyl(n: usize) -> Result<Self> {
        Self::new(Inclusion::scalars_in_full(n)?, weyl_unitaries(n))
    }

    /// Shifts `{U^k}` for `ℓ∞_n ⊆ M_n`.
    pub fn diagonal_shifts(n: usize) -> Result<Self> {
        let u = shift_matrix::<T>(n);
        Self::new(Inclusion::diagonal_in_full(n)?, (0..n).map(|k| power(&u, k)).collect())
    }

    /// `n^{-1/2} |χ_m⟩⟨χ_m|` with unnormalised characters `χ_m(k) = e^{2πimk/n}`,
    /// for `ℓ∞_n ⊆ M_n`.
    pub fn characters(n: usize) -> Result<Self> {
        let step = T::two_pi() / T::of_usize(n);
        let scale = re(T::one() / T::of_usize(n).sqrt());
        let elements = (0..n)
            .map(|m| {
                let chi = linalg::CVector::from_fn(n, |k, _| cis(step * T::of_usize(m * k % n)));
                linalg::outer(&chi, &chi) * scale
            })
            .collect();
        Self::new(Inclusion::diagonal_in_full(n)?, elements)
    }

    /// Block-cyclic shifts `S^j ⊗ 1_l` for `⊕^k M_l ⊆ M_{kl}`.
    pub fn homogeneous(k: usize, l: usize) -> Result<Self> {
        let s = linalg::kron(&shift_matrix::<T>(k), &identity(l));
        Self::new(Inclusion::block_diagonal_in_full(k, l)?, (0..k).map(|j| power(&s, j)).collect())
    }

    pub fn inclusion(&self) -> &Inclusion<T> {
        &self.inclusion
    }

    pub fn elements(&self) -> &[CMatrix<T>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Checks completeness, the expansion formula, orthonormality, the index sum,
    /// unitarity and normaliser membership.
    pub fn verify(&self, tol: T) -> Result<BasisReport> {
        let inc = &self.inclusion;
        let n = inc.ambient_dim();
        let gns = GnsSpace::new(inc.big(), inc.trace())?;
        let e = jones_projection(&gns, inc.small_basis());
        let d = gns.dim();
        let mut report = Report::new();

        let outside = self.elements.iter().fold(T::zero(), |m, x| m.max(inc.big().residual(x)));
        report.record("elements_in_big_algebra", outside, tol);

        let lifted: Vec<CMatrix<T>> = self.elements.iter().map(|x| gns.pi_left(x)).collect();
        let mut sum = zeros::<T>(d, d);
        for p in &lifted {
            sum += p.adjoint() * &e * p;
        }
        let complete = report.record("completeness", frobenius_distance(&sum, &identity(d)), tol);

        let mut expansion = T::zero();
        for x in inc.big_basis() {
            let mut rebuilt = zeros::<T>(n, n);
            for l in &self.elements {
                rebuilt += inc.expect(&(x * l.adjoint())) * l;
            }
            expansion = expansion.max(frobenius_distance(&rebuilt, x));
        }
        report.record("expansion", expansion, tol);

        let mut ortho = T::zero();
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate() {
                let target = if i == j { identity(n) } else { zeros(n, n) };
                ortho = ortho.max(frobenius_distance(&inc.expect(&(a * b.adjoint())), &target));
            }
        }
        let orthonormal = ortho <= tol;
        report.record("orthonormality_defect", ortho, T::lit(f64::INFINITY));

        if let Ok(index) = inc.index() {
            let mut total = zeros::<T>(n, n);
            for l in &self.elements {
                total += l.adjoint() * l;
            }
            report.record("index_sum", frobenius_distance(&total, &(identity::<T>(n) * re(index))), tol);
        }

        let t = Tolerance::absolute(tol);
        let unitary = self.elements.iter().all(|u| is_unitary(u, &t));
        let mut in_normaliser = unitary;
        if unitary {
            for u in &self.elements {
                in_normaliser &= normaliser_check(inc, u, tol)?;
            }
        }
        if unitary && in_normaliser && orthonormal {
            // L²(M) = ⊕ u_i* L²(N): the projections u_i* e_N u_i are orthogonal and sum to 1.
            let projections: Vec<CMatrix<T>> = lifted.iter().map(|p| p.adjoint() * &e * p).collect();
            let mut overlap = T::zero();
            for (i, p) in projections.iter().enumerate() {
                for q in &projections[i + 1..] {
                    overlap = overlap.max((p * q).norm());
                }
            }
            report.record("decomposition_orthogonal", overlap, tol);
        }

        Ok(BasisReport {
            size: self.elements.len(),
            flags: BasisFlags { complete, orthonormal, unitary, in_normaliser },
            report,
        })
    }
}

/// Whether the unitary `u ∈ M` normalises `N`. Three equivalent tests are run
/// (conjugation of `N`, commuting with `E_N`, and the Jones-projection identity);
/// disagreement means a numerical or logical fault.
pub fn normaliser_check<T: Real>(inc: &Inclusion<T>, u: &CMatrix<T>, tol: T) -> Result<bool> {
    let n = inc.ambient_dim();
    if u.shape() != (n, n) || !is_unitary(u, &Tolerance::absolute(T::lit(1e-8))) {
        return Err(Error::Precondition("normaliser test needs a unitary of the ambient size".into()));
    }
    let threshold = tol.max(T::lit(1e-12)) * T::lit(1e3);
    let ud = u.adjoint();

    let conjugation = inc.small_basis().iter().fold(T::zero(), |m, b| {
        m.max(inc.small().residual(&(&ud * b * u))).max(inc.small().residual(&(u * b * &ud)))
    });
    let expectation = inc.big_basis().iter().fold(T::zero(), |m, x| {
        m.max(frobenius_distance(&inc.expect(&(u * x * &ud)), &(u * inc.expect(x) * &ud)))
    });
    let gns = GnsSpace::new(inc.big(), inc.trace())?;
    let e = jones_projection(&gns, inc.small_basis());
    let (pu, pud) = (gns.pi_left(u), gns.pi_left(&ud));
    let jones = frobenius_distance(&(&pu * &e * &pud), &(gns.pi_right(u) * &e * gns.pi_right(&ud)));

    let verdicts = [conjugation <= threshold, expectation <= threshold, jones <= threshold];
    if verdicts.iter().any(|&v| v != verdicts[0]) {
        return Err(Error::Internal(format!(
            "normaliser tests disagree: conjugation {:.2e}, expectation {:.2e}, jones {:.2e}",
            conjugation.to_f64_lossy(),
            expectation.to_f64_lossy(),
            jones.to_f64_lossy()
        )));
    }
    Ok(verdicts[0])
}

/// A basis is orthonormal exactly when `d · dim N = dim M`.
pub fn cardinality_test<T: Real>(basis: &PPBasis<T>, verified: &BasisReport) -> Result<Report> {
    let inc = basis.inclusion();
    let balanced = basis.len() * inc.small().dim() == inc.big().dim();
    if verified.flags.complete && verified.flags.orthonormal != balanced {
        return Err(Error::Internal(format!(
            "orthonormal = {} but d·dim N = {} and dim M = {}",
            verified.flags.orthonormal,
            basis.len() * inc.small().dim(),
            inc.big().dim()
        )));
    }
    let mut r = Report::new();
    r.record_flag("orthonormal_iff_balanced", true);
    Ok(r)
}

/// Factors `a_i` of an element `x₁ ∈ N′ ∩ M₁` with `x₁ = Σ a_i* e_N a_i`.
#[derive(Debug, Clone)]
pub struct ChoiDecomposition<T: Real> {
    /// `a_i` in the ambient coordinates of `M`.
    pub factors: Vec<CMatrix<T>>,
    pub reconstruction_residual: T,
    /// Distance of `Σ a_i* x a_i` from `N′ ∩ M` over a basis.
    pub containment_residual: T,
    /// Same for `Σ a_i x a_i*`, reported for unitary normaliser bases.
    pub adjoint_containment_residual: Option<T>,
    /// Matrix of `x ↦ Σ a_i* x a_i` on the trace-orthonormal basis of `N′ ∩ M`.
    pub action: CMatrix<T>,
}

/// `N′ ∩ M₁` on `L²(M)`.
pub fn small_commutant_in_extension<T: Real>(tower: &Tower<T>) -> Result<FinDimAlgebra<T>> {
    let first = tower.first();
    first.small_rep().commutant().intersect(first.extension(), tower.tol())
}

pub fn choi_decomposition<T: Real>(tower: &Tower<T>, x1: &CMatrix<T>, basis: &PPBasis<T>) -> Result<ChoiDecomposition<T>> {
    let tol = tower.tol();
    let first = tower.first();
    let t = Tolerance::absolute(T::lit(1e-8));
    if x1.shape() != (first.gns().dim(), first.gns().dim()) || !linalg::is_psd(x1, &t) {
        return Err(Error::Precondition("x₁ must be a PSD operator on L²(M)".into()));
    }
    let scale = x1.norm().max(T::one());
    if first.extension().residual(x1) > T::lit(1e-8) * scale
        || first.small_rep().commutator_residual(x1) > T::lit(1e-8) * scale
    {
        return Err(Error::Precondition("x₁ is not in N′ ∩ M₁".into()));
    }
    let index = tower.index()?;
    let root = linalg::matrix_sqrt(x1, T::lit(1e-8))?;
    let e = tower.e_n();
    let factors: Vec<CMatrix<T>> = basis
        .elements()
        .iter()
        .map(|l| (first.expect_onto_big(&(&root * tower.lift(&l.adjoint()) * e)) * re(index)).adjoint())
        .collect();

    let d = first.gns().dim();
    let mut rebuilt = zeros::<T>(d, d);
    for a in &factors {
        let pa = tower.lift(a);
        rebuilt += pa.adjoint() * e * pa;
    }
    let reconstruction_residual = frobenius_distance(&rebuilt, x1);

    let rel = tower.relative_commutant();
    let rel_basis = tower.relative_basis();
    let apply = |x: &CMatrix<T>| {
        factors.iter().fold(zeros::<T>(x.nrows(), x.ncols()), |acc, a| acc + a.adjoint() * x * a)
    };
    let containment_residual = rel_basis.iter().fold(T::zero(), |m, b| m.max(rel.residual(&apply(b))));
    let flags_unitary = basis.elements().iter().all(|u| is_unitary(u, &Tolerance::absolute(tol)));
    let adjoint_containment_residual = if flags_unitary
        && basis.elements().iter().all(|u| normaliser_check(basis.inclusion(), u, tol).unwrap_or(false))
    {
        Some(rel_basis.iter().fold(T::zero(), |m, b| {
            let image = factors.iter().fold(zeros::<T>(b.nrows(), b.ncols()), |acc, a| acc + a * b * a.adjoint());
            m.max(rel.residual(&image))
        }))
    } else {
        None
    };
    let trace = tower.inclusion().trace();
    let k = rel_basis.len();
    let images: Vec<CMatrix<T>> = rel_basis.iter().map(apply).collect();
    let action = CMatrix::from_fn(k, k, |r, c| trace.eval(&(&rel_basis[r] * &images[c])));
    Ok(ChoiDecomposition { factors, reconstruction_residual, containment_residual, adjoint_containment_residual, action })
}

/// Result of [`homogeneity_test`].
#[derive(Debug, Clone)]
pub struct Homogeneity<T: Real> {
    pub homogeneous: bool,
    /// Normaliser basis of block-cyclic shifts when homogeneous.
    pub witness: Option<PPBasis<T>>,
    /// Block sizes `n_j` compared with `n/d` when not homogeneous.
    pub obstruction: Option<String>,
}

/// For a multiplicity-free `N ⊆ M_n`, decides whether all blocks of `N` have the
/// same size, which is when a unitary orthonormal normaliser basis exists.
pub fn homogeneity_test<T: Real>(inc: &Inclusion<T>) -> Result<Homogeneity<T>> {
    let n = inc.ambient_dim();
    let big = inc.big();
    if big.block_shape() != vec![(n, 1)] || inc.small().blocks().iter().any(|b| b.multiplicity() != 1) {
        return Err(Error::Precondition("homogeneity test needs a multiplicity-free N inside M_n".into()));
    }
    let blocks = inc.small().blocks();
    let count = blocks.len();
    let sizes: Vec<usize> = blocks.iter().map(|b| b.dim()).collect();
    if sizes.iter().any(|&s| s * count != n) {
        return Ok(Homogeneity {
            homogeneous: false,
            witness: None,
            obstruction: Some(format!("block sizes {sizes:?} differ from n/d = {n}/{count}")),
        });
    }
    // W_j = [V_{j,1} … V_{j,l}] maps ℂ^l onto the j-th block; S cycles the blocks.
    let stacked: Vec<CMatrix<T>> = blocks
        .iter()
        .map(|b| CMatrix::from_fn(n, b.dim(), |r, c| b.frames()[c][(r, 0)]))
        .collect();
    let mut s = zeros::<T>(n, n);
    for j in 0..count {
        s += &stacked[(j + 1) % count] * stacked[j].adjoint();
    }
    let witness = PPBasis::new(inc.clone(), (0..count).map(|j| power(&s, j)).collect())?;
    Ok(Homogeneity { homogeneous: true, witness: Some(witness), obstruction: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, seeded_rng};

    const TOL: f64 = 1e-9;

    fn hadamard() -> CMatrix<f64> {
        CMatrix::from_row_slice(2, 2, &[re(1.0), re(1.0), re(1.0), re(-1.0)]) / re(2f64.sqrt())
    }

    #[test]
    fn weyl_bases_are_unitary_error_bases() {
        for n in 1..=4 {
            let b = PPBasis::<f64>::weyl(n).unwrap();
            let r = b.verify(TOL).unwrap();
            assert_eq!(r.size, n * n);
            assert_eq!(
                r.flags,
                BasisFlags { complete: true, orthonormal: true, unitary: true, in_normaliser: true },
                "{}",
                r.report
            );
            assert!(r.report.all_passed(), "{}", r.report);
        }
    }

    #[test]
    fn weyl_two_is_pauli_up_to_phase() {
        let b = PPBasis::<f64>::weyl(2).unwrap();
        let e = b.elements();
        // order (l, k): 1, U, V, VU
        assert!(frobenius_distance(&e[1], &shift_matrix(2)) < 1e-15);
        assert!(frobenius_distance(&e[2], &diag(&[1.0, -1.0])) < 1e-15);
    }

    #[test]
    fn trivial_basis_for_equal_algebras() {
        let full = FinDimAlgebra::<f64>::full(2);
        let inc = Inclusion::with_markov_trace(full.clone(), full, TOL).unwrap();
        let b = PPBasis::new(inc, vec![identity(2)]).unwrap();
        let r = b.verify(TOL).unwrap();
        assert!(r.flags.complete && r.flags.orthonormal && r.flags.unitary);
    }

    #[test]
    fn shifts_and_characters() {
        for n in 1..=4 {
            let r = PPBasis::<f64>::diagonal_shifts(n).unwrap().verify(TOL).unwrap();
            assert!(r.flags.complete && r.flags.orthonormal && r.flags.in_normaliser, "{}", r.report);
            let r = PPBasis::<f64>::characters(n).unwrap().verify(TOL).unwrap();
            assert!(r.flags.complete && r.flags.orthonormal, "{}", r.report);
            assert_eq!(r.flags.unitary, n == 1);
        }
    }

    #[test]
    fn homogeneous_bases() {
        for (k, l) in [(1, 2), (2, 1), (2, 2), (3, 1)] {
            let b = PPBasis::<f64>::homogeneous(k, l).unwrap();
            let r = b.verify(TOL).unwrap();
            assert_eq!(r.size, k);
            assert!(r.flags.complete && r.flags.orthonormal && r.flags.in_normaliser, "{}", r.report);
        }
    }

    #[test]
    fn normaliser_examples() {
        let inc = Inclusion::<f64>::scalars_in_full(2).unwrap();
        let u = linalg::random_unitary::<f64, _>(2, &mut seeded_rng(3));
        assert!(normaliser_check(&inc, &u, TOL).unwrap());
        let inc = Inclusion::<f64>::diagonal_in_full(2).unwrap();
        assert!(normaliser_check(&inc, &shift_matrix(2), TOL).unwrap());
        assert!(!normaliser_check(&inc, &hadamard(), TOL).unwrap());
    }

    #[test]
    fn cardinality_with_redundant_basis() {
        let inc = Inclusion::<f64>::diagonal_in_full(2).unwrap();
        // {1, X/√2, X/√2} is complete but not orthonormal
        let x = shift_matrix::<f64>(2) * re(0.5f64.sqrt());
        let b = PPBasis::new(inc, vec![identity(2), x.clone(), x]).unwrap();
        let r = b.verify(TOL).unwrap();
        assert!(r.flags.complete);
        assert!(!r.flags.orthonormal);
        assert!(cardinality_test(&b, &r).is_ok());

        let b = PPBasis::<f64>::characters(2).unwrap();
        let r = b.verify(TOL).unwrap();
        assert!(cardinality_test(&b, &r).is_ok());
    }

    #[test]
    fn single_element_is_incomplete() {
        let inc = Inclusion::<f64>::scalars_in_full(2).unwrap();
        let r = PPBasis::new(inc, vec![identity(2)]).unwrap().verify(TOL).unwrap();
        assert!(!r.flags.complete);
    }

    #[test]
    fn homogeneity_examples() {
        let inc = Inclusion::<f64>::block_diagonal_in_full(2, 2).unwrap();
        let h = homogeneity_test(&inc).unwrap();
        assert!(h.homogeneous);
        let witness = h.witness.unwrap();
        assert_eq!(witness.len(), 2);
        let r = witness.verify(TOL).unwrap();
        assert!(r.flags.complete && r.flags.orthonormal && r.flags.in_normaliser, "{}", r.report);

        let small = FinDimAlgebra::<f64>::block_diagonal(&[(1, 1), (2, 1)]).unwrap();
        let inc = Inclusion::with_markov_trace(small, FinDimAlgebra::full(3), TOL).unwrap();
        let h = homogeneity_test(&inc).unwrap();
        assert!(!h.homogeneous && h.obstruction.is_some());

        let inc = Inclusion::<f64>::diagonal_in_full(3).unwrap();
        assert!(homogeneity_test(&inc).unwrap().homogeneous);

        let inc = Inclusion::<f64>::ampliation(2, 2).unwrap();
        assert!(matches!(homogeneity_test(&inc), Err(Error::Precondition(_))));
    }

    #[test]
    fn choi_decomposition_is_basis_independent() {
        let inc = Inclusion::<f64>::diagonal_in_full(2).unwrap();
        let tower = Tower::basic_construction(inc, TOL).unwrap();
        let commutant = small_commutant_in_extension(&tower).unwrap();
        let coeffs = crate::algebra::random_complex(commutant.dim(), &mut seeded_rng(8));
        let b = linalg::combine(&coeffs, commutant.basis());
        let x1 = &b * b.adjoint();
        let shifts = choi_decomposition(&tower, &x1, &PPBasis::diagonal_shifts(2).unwrap()).unwrap();
        let chars = choi_decomposition(&tower, &x1, &PPBasis::characters(2).unwrap()).unwrap();
        assert!(shifts.reconstruction_residual < TOL);
        assert!(chars.reconstruction_residual < TOL);
        assert!(shifts.containment_residual < TOL);
        assert!(shifts.adjoint_containment_residual.unwrap() < TOL);
        assert!(chars.adjoint_containment_residual.is_none());
        assert!(frobenius_distance(&shifts.action, &chars.action) < TOL);
    }

    #[test]
    fn choi_of_jones_and_unit() {
        let inc = Inclusion::<f64>::diagonal_in_full(2).unwrap();
        let tower = Tower::basic_construction(inc, TOL).unwrap();
        let basis = PPBasis::diagonal_shifts(2).unwrap();
        let e = tower.e_n().clone();
        let dec = choi_decomposition(&tower, &e, &basis).unwrap();
        assert!(dec.reconstruction_residual < TOL);
        let dec = choi_decomposition(&tower, &identity(4), &basis).unwrap();
        assert!(dec.reconstruction_residual < TOL);
        for (a, l) in dec.factors.iter().zip(basis.elements()) {
            assert!(frobenius_distance(a, l) < 1e-9);
        }
        let not_psd = identity::<f64>(4) * re(-1.0);
        assert!(matches!(choi_decomposition(&tower, &not_psd, &basis), Err(Error::Precondition(_))));
    }
}

//! Quantum-graph colourings and chromatic bounds over the public API.

use inclusion_teleport::linalg::{frobenius_distance, identity};
use inclusion_teleport::qgraph::{chromatic_bounds, colouring_factor_case, graph_from_inclusion, verify_colouring};
use inclusion_teleport::Inclusion;

const TOL: f64 = 1e-9;

#[test]
fn factor_colourings_are_projection_valued_measures() {
    for n in 2..=3 {
        let inc = Inclusion::scalars_in_full(n).unwrap();
        let col = colouring_factor_case(&inc, TOL).unwrap();
        assert_eq!(col.colours(), n * n);
        let d = col.projections()[0].nrows();
        let mut total = identity::<f64>(d) * nalgebra::Complex::new(-1.0, 0.0);
        for (a, p) in col.projections().iter().enumerate() {
            assert!(frobenius_distance(p, &p.adjoint()) < 1e-10);
            assert!(frobenius_distance(&(p * p), p) < 1e-10);
            for q in &col.projections()[a + 1..] {
                assert!((p * q).norm() < 1e-10);
            }
            total += p;
        }
        assert!(total.norm() < 1e-10);

        let (_, g) = graph_from_inclusion(&inc, TOL).unwrap();
        assert!(verify_colouring(&g, &col, TOL).unwrap().all_passed());
    }
}

#[test]
fn chromatic_bounds_meet_on_standard_examples() {
    let cases: Vec<(Inclusion<f64>, usize)> = vec![
        (Inclusion::scalars_in_full(2).unwrap(), 4),
        (Inclusion::scalars_in_full(3).unwrap(), 9),
        (Inclusion::diagonal_in_full(2).unwrap(), 2),
    ];
    for (inc, colours) in cases {
        let bounds = chromatic_bounds(&inc, TOL);
        let b = &bounds.standard_graph;
        assert!(b.is_tight(), "{:?}", b.notes);
        assert_eq!(b.upper, Some(colours));
    }
}

#[test]
fn non_factor_has_no_commutant_graph_colouring() {
    let inc = Inclusion::diagonal_in_full(2).unwrap();
    let bounds = chromatic_bounds(&inc, TOL);
    assert_eq!(bounds.commutant_graph.upper, None);
    assert!(!bounds.commutant_graph.notes.is_empty());
}

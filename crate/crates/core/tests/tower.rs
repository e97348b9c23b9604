//! Basic-construction identities on small inclusions.

use inclusion_teleport::{FinDimAlgebra, Inclusion, Tower};

#[test]
fn tower_identities_hold() {
    let cases: [Inclusion<f64>; 3] = [
        Inclusion::scalars_in_full(2).unwrap(),
        Inclusion::diagonal_in_full(2).unwrap(),
        Inclusion::scalars_in(FinDimAlgebra::block_diagonal(&[(1, 1), (2, 1)]).unwrap()).unwrap(),
    ];
    for inc in cases {
        let index = inc.index().unwrap();
        let tower = Tower::build(inc, 1e-9).unwrap();
        let report = tower.verify_identities().unwrap();
        assert!(report.all_passed(), "{report}");
        assert!((tower.index().unwrap() - index).abs() < 1e-12);
    }
}

#[test]
fn disconnected_inclusion_has_no_index() {
    let small = FinDimAlgebra::<f64>::block_diagonal(&[(1, 1), (1, 1)]).unwrap();
    let big = small.clone();
    let inc = Inclusion::with_markov_trace(small, big, 1e-9);
    assert!(inc.is_err() || inc.unwrap().index().is_err());
}

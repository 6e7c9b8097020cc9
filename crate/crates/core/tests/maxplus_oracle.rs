//! Karp circuit means and critical graphs against brute-force elementary
//! circuit enumeration on seeded random matrices.

mod common;

use rand::Rng;

use mpg_core::maxplus::CRITICAL_TOL;

#[cfg(feature = "exact-rational")]
#[test]
fn exact_circuit_mean_matches_enumeration() {
    let mut rng = common::rng(31);
    for _ in 0..60 {
        let n = rng.gen_range(1..=7);
        let density = rng.gen_range(0.0..0.7);
        let (_, q) = common::random_trop_matrix(&mut rng, n, density);
        let oracle = common::circuit_oracle(&q, 0.0).expect("a circuit always exists");
        assert_eq!(q.maximal_circuit_mean().unwrap(), oracle.rho);

        let report = q.critical_analysis().unwrap();
        let arcs: std::collections::BTreeSet<(usize, usize)> =
            report.critical_arcs.iter().cloned().collect();
        assert_eq!(arcs, oracle.critical_arcs);
        let nodes: std::collections::BTreeSet<usize> =
            report.critical_nodes.iter().cloned().collect();
        assert_eq!(nodes, oracle.critical_nodes);
    }
}

#[cfg(feature = "exact-rational")]
#[test]
fn float_circuit_mean_matches_enumeration() {
    let mut rng = common::rng(32);
    for _ in 0..60 {
        let n = rng.gen_range(1..=7);
        let density = rng.gen_range(0.0..0.7);
        let (m, _) = common::random_trop_matrix(&mut rng, n, density);
        let oracle = common::circuit_oracle(&m, CRITICAL_TOL).unwrap();
        let rho = m.maximal_circuit_mean().unwrap();
        assert!((rho - oracle.rho).abs() <= 1e-12);
    }
}

#[cfg(feature = "exact-rational")]
#[test]
fn tropical_eigenvectors_have_zero_residual() {
    let mut rng = common::rng(33);
    for _ in 0..60 {
        let n = rng.gen_range(1..=7);
        let density = rng.gen_range(0.0..0.7);
        let (m, _) = common::random_trop_matrix(&mut rng, n, density);
        let rho = m.maximal_circuit_mean().unwrap();
        let report = m.critical_analysis().unwrap();
        assert!(!report.critical_classes.is_empty());
        // classes partition the critical nodes
        let mut seen = std::collections::BTreeSet::new();
        for class in &report.critical_classes {
            for &v in class {
                assert!(seen.insert(v), "classes overlap at {v}");
            }
        }
        assert_eq!(
            seen,
            report.critical_nodes.iter().cloned().collect(),
            "classes do not cover the critical nodes"
        );

        for u in m.tropical_eigenvectors().unwrap() {
            // residual of M (x) u = rho + u on the finite support
            let mu = m.apply(&u);
            for (lhs, ui) in mu.iter().zip(&u) {
                match (lhs, ui) {
                    (Some(l), Some(x)) => assert!((l - rho - x).abs() <= 1e-12),
                    (None, None) => {}
                    other => panic!("support mismatch in eigenvector: {other:?}"),
                }
            }
        }
    }
}

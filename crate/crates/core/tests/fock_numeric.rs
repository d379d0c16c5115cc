use cpdual_core::duality::DualChoice;
use cpdual_core::exec::Execution;
use cpdual_core::fock::symbolic::{projection_identity_holds, Relations};
use cpdual_core::fock::{
    build_fock_rep, build_kp_projection, build_w_ew, commutator_decay, commutator_levels_by_sector, conjugate_gram_equality,
    fredholm_index_compressed, homotopy_pt_check, xi_gram, FockError, KpConfig, DEFAULT_BASIS_CAP,
};
use cpdual_core::graph::{fixtures, random_graph};
use cpdual_core::linalg::Sparse;
use cpdual_core::watatani::PathWeights;
use proptest::prelude::*;

#[test]
fn basis_sizes() {
    assert_eq!(build_fock_rep(&fixtures::single_loop(), 4, DEFAULT_BASIS_CAP).unwrap().dim(), 5);
    assert_eq!(build_fock_rep(&fixtures::cuntz(2), 3, DEFAULT_BASIS_CAP).unwrap().dim(), 15);
    // 2 vertices, 4 edges, 8 paths of length two
    assert_eq!(build_fock_rep(&fixtures::two_loop_bridge(), 2, DEFAULT_BASIS_CAP).unwrap().dim(), 14);
    assert!(matches!(build_fock_rep(&fixtures::cuntz(3), 12, 1000), Err(FockError::BasisTooLarge { .. })));
}

#[test]
fn loop_creation_is_a_nilpotent_shift() {
    let rep = build_fock_rep(&fixtures::single_loop(), 4, DEFAULT_BASIS_CAP).unwrap();
    let t = rep.creation(0);
    let mut p = t.clone();
    for _ in 0..4 {
        assert!(p.nnz() > 0);
        p = p.mul(&t);
    }
    assert_eq!(p.nnz(), 0);
}

#[test]
fn ck_relations_are_exact_on_the_interior() {
    for (name, g) in fixtures::all() {
        let rep = build_fock_rep(&g, 4, DEFAULT_BASIS_CAP).unwrap();
        assert_eq!(rep.ck_residuals().max(), 0.0, "{name}");
    }
}

#[test]
fn frame_isometries() {
    let ts = [0.0, 0.5, 1.0, 2.0, 10.0];
    let l = build_w_ew(&build_fock_rep(&fixtures::single_loop(), 6, DEFAULT_BASIS_CAP).unwrap(), &ts);
    assert_eq!(l.isometry_residual, 0.0);
    assert!(l.projection.iter().all(|r| r.residual < 1e-15));
    let o2 = build_w_ew(&build_fock_rep(&fixtures::cuntz(2), 6, DEFAULT_BASIS_CAP).unwrap(), &ts);
    assert!(o2.isometry_residual < 1e-12 && o2.range_residual < 1e-12);
    assert!(o2.projection.iter().all(|r| r.residual < 1e-12));
    assert!(o2.symbolic_identity);
    assert!(projection_identity_holds(Relations::Unitary));
    assert!(projection_identity_holds(Relations::PartialIsometry));
}

#[test]
fn fredholm_indices() {
    for g in [fixtures::single_loop(), fixtures::cuntz(2), fixtures::cuntz(3)] {
        let r = fredholm_index_compressed(&g, 8, DEFAULT_BASIS_CAP).unwrap();
        assert!(r.stable);
        assert_eq!(r.index.abs(), 1);
        assert_eq!(r.counts.len(), 2);
        assert_eq!(r.counts[1].level, 10);
    }
    for (name, g) in fixtures::all() {
        let r = fredholm_index_compressed(&g, 5, DEFAULT_BASIS_CAP).unwrap();
        assert!(r.stable, "{name}");
        assert!(r.counts[0].per_vertex.iter().all(|&i| i.abs() == 1), "{name}");
    }
}

#[test]
fn kasparov_projection_defects() {
    let cfg = KpConfig::default();
    let l = build_kp_projection(&fixtures::single_loop(), 6, DualChoice::Eop, cfg).unwrap().report();
    assert!(l.isometry_defect < 1e-10);
    let o2 = build_kp_projection(&fixtures::cuntz(2), 6, DualChoice::Eop, cfg).unwrap().report();
    assert!(o2.isometry_defect < 1e-8);
    assert!(o2.projection_residual < 1e-10);
    assert!(o2.symmetry_residual <= 4.0 * o2.projection_residual + 1e-15);
    assert!(o2.adjoint_formula_deviation.unwrap() < 1e-12);
    let ebar = build_kp_projection(&fixtures::cuntz(2), 4, DualChoice::EbarOp, cfg).unwrap().report();
    assert!(ebar.isometry_defect < 1e-10);
}

#[test]
fn conjugate_variant_needs_super_strong() {
    for g in [fixtures::quantum_su2(), fixtures::fibonacci()] {
        match build_kp_projection(&g, 3, DualChoice::EbarOp, KpConfig::default()) {
            Err(FockError::SuperStrongFails(w)) => assert!(w.second.is_some() || w.first.1 == 0.0),
            other => panic!("expected rejection, got {:?}", other.map(|p| p.report())),
        }
    }
    match build_kp_projection(&fixtures::quantum_su2(), 3, DualChoice::EbarOp, KpConfig::default()) {
        Err(FockError::SuperStrongFails(w)) => assert_eq!(w.vertex, "w"),
        _ => unreachable!(),
    }
}

#[test]
fn homotopy_projections() {
    let ts = [0.0, 0.5, 1.0, 2.0, 10.0, 1000.0];
    let r = homotopy_pt_check(&fixtures::cuntz(2), 6, &ts, KpConfig::default()).unwrap();
    assert!(r.iter().all(|x| x.residual < 1e-6), "{r:?}");
    let p = build_kp_projection(&fixtures::cuntz(2), 6, DualChoice::Eop, KpConfig::default()).unwrap().report();
    assert!((r[0].residual - p.projection_residual).abs() < 1e-12);
}

#[test]
fn conjugate_gram() {
    let l = conjugate_gram_equality(&fixtures::single_loop(), 3, 16, Execution::Parallel).unwrap();
    assert_eq!(l.max_deviation, 0.0);
    let o2 = conjugate_gram_equality(&fixtures::cuntz(2), 3, 16, Execution::Parallel).unwrap();
    assert!(o2.max_deviation < 1e-10);
    let fib = conjugate_gram_equality(&fixtures::fibonacci(), 3, 16, Execution::Parallel).unwrap();
    assert!(fib.max_deviation < 1e-8);
}

#[test]
fn xi_gram_is_positive() {
    for g in [fixtures::cuntz(2), fixtures::quantum_su2(), fixtures::fibonacci()] {
        let w = PathWeights::new(&g, 4, 16, Execution::Parallel).unwrap();
        let x = xi_gram(&g, &w, 2);
        assert!(x.min_eigenvalue > -1e-12);
        assert_eq!(x.fock_deviation, 0.0);
    }
}

#[test]
fn commutator_decay_table() {
    let o2 = fixtures::cuntz(2);
    let t = commutator_decay(&o2, 0, &[8, 16, 32], 34, 64, Execution::Parallel).unwrap();
    // measured tail norm is exactly 1/sqrt(l+2)
    for row in &t.rows {
        assert!((row.norm - 1.0 / ((row.l + 2) as f64).sqrt()).abs() < 1e-10, "{row:?}");
        assert!((row.reference - (2.0 / row.l as f64).sqrt()).abs() < 1e-15);
    }
    let ratio = t.rows[2].norm / t.rows[0].norm;
    assert!((0.4..=0.6).contains(&ratio), "{ratio}");
    // ratio column increases towards its limit sqrt(1/2)
    assert!(t.rows.windows(2).all(|w| w[1].ratio > w[0].ratio));
}

#[test]
fn loop_commutator_is_the_same_sequence() {
    let l = fixtures::single_loop();
    let per = commutator_levels_by_sector(&l, 0, 10, 64, Execution::Parallel).unwrap();
    for (m, norm) in per {
        assert!((norm - 1.0 / ((m + 1) as f64).sqrt()).abs() < 1e-12, "{m}: {norm}");
    }
}

#[test]
fn sector_model_agrees_with_explicit_model() {
    for g in [fixtures::single_loop(), fixtures::cuntz(2), fixtures::fibonacci()] {
        let p = build_kp_projection(&g, 4, DualChoice::Eop, KpConfig::default()).unwrap();
        let a = p.commutator_levels(0).unwrap();
        let b = commutator_levels_by_sector(&g, 0, 4, 64, Execution::Parallel).unwrap();
        for ((m1, x), (m2, y)) in a.iter().zip(&b) {
            assert_eq!(m1, m2);
            assert!((x - y).abs() < 1e-10, "level {m1}: {x} vs {y}");
        }
    }
}

#[test]
fn isometry_defect_is_flat_in_level() {
    for g in [fixtures::cuntz(2), fixtures::quantum_su2()] {
        let defects: Vec<f64> = (2..=5)
            .map(|l| build_kp_projection(&g, l, DualChoice::Eop, KpConfig::default()).unwrap().report().isometry_defect)
            .collect();
        assert!(defects.iter().all(|&d| d < 1e-12), "{defects:?}");
    }
}

fn adjoint_defect(a: &Sparse, b: &Sparse) -> f64 {
    a.adjoint().sub(b).max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_graphs_satisfy_ck_on_interior(n in 1usize..=4, seed in any::<u64>()) {
        let g = random_graph(n, 2, seed);
        let rep = build_fock_rep(&g, 3, DEFAULT_BASIS_CAP).unwrap();
        prop_assert_eq!(rep.ck_residuals().max(), 0.0);
        let t = rep.creation(0);
        prop_assert_eq!(adjoint_defect(&t, &t.adjoint()), 0.0);
    }

    #[test]
    fn index_is_stable(n in 1usize..=3, seed in any::<u64>()) {
        let g = random_graph(n, 2, seed);
        let r = fredholm_index_compressed(&g, 3, DEFAULT_BASIS_CAP).unwrap();
        prop_assert!(r.stable);
    }
}

use cpdual_core::crossed::{
    build_graded_truncation, build_nsharpd, ext_index_pairing, nsharpd_boundedness, rotation_delta_components, Generator, Theta, Word,
};
use cpdual_core::exec::Execution;
use num_complex::Complex64;
use proptest::prelude::*;

fn theta(num: i64, den: i64) -> Theta {
    Theta::turns(num, den).unwrap()
}

#[test]
fn small_truncations() {
    let t = build_graded_truncation(4, 1, theta(0, 1)).unwrap();
    let u = t.operator(&Word::parse("U").unwrap());
    assert_eq!(u.nnz(), 8);
    for n in -4..4 {
        assert_eq!(u.get(t.index(n + 1, 0), t.index(n, 0)), Complex64::new(1.0, 0.0));
    }
    let t8 = build_graded_truncation(4, 8, theta(0, 1)).unwrap();
    assert_eq!(t8.operator(&Word::parse("U").unwrap()).nnz(), 8 * 8);
    let r = build_graded_truncation(4, 8, theta(3, 10)).unwrap();
    let w = r.operator(&Word::parse("W").unwrap());
    for (n, m) in r.coordinates() {
        let expected = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 0.3 * m as f64);
        assert!((w.get(r.index(n, m), r.index(n, m)) - expected).norm() < 1e-12);
    }
    assert!(build_graded_truncation(2, 1, theta(0, 1)).is_err());
}

#[test]
fn invariants_at_all_sizes() {
    for window in [4, 8, 16, 32] {
        for modes in [1, 4, 8] {
            for th in [theta(0, 1), theta(3, 10), Theta::Radians { value: 2.0f64.sqrt() }] {
                let t = build_graded_truncation(window, modes, th).unwrap();
                assert!(t.checks().max() < 1e-12, "{window} {modes} {th}");
            }
        }
    }
}

#[test]
fn index_pairings() {
    let t = build_graded_truncation(64, 1, theta(3, 10)).unwrap();
    let u = ext_index_pairing(&t, &Word::parse("U").unwrap());
    assert!(u.stable);
    assert_eq!(u.index.abs(), 1);
    assert_eq!(ext_index_pairing(&t, &Word::parse("U^2").unwrap()).index.abs(), 2);
    assert_eq!(ext_index_pairing(&t, &Word::parse("W").unwrap()).index, 0);
    let rot = build_graded_truncation(32, 8, theta(3, 10)).unwrap();
    for (w, expected) in [("U", u.index), ("z", 0), ("W", 0), ("U z", u.index), ("W^2 U^-1", -u.index)] {
        let r = ext_index_pairing(&rot, &Word::parse(w).unwrap());
        assert!(r.stable, "{w}");
        assert_eq!(r.index, expected, "{w}");
    }
}

#[test]
fn nsharpd_norms() {
    let t = build_graded_truncation(32, 8, theta(0, 1)).unwrap();
    let r = build_nsharpd(&t);
    assert!(r.self_adjoint && r.anticommutes_with_grading);
    let get = |n: &str| r.commutators.iter().find(|c| c.generator == n).unwrap().norm;
    assert!((get("U") - 1.0).abs() < 1e-9);
    assert_eq!(get("W"), 0.0);
    assert!((get("z") - 1.0).abs() < 1e-9);
}

#[test]
fn boundedness_across_windows() {
    let r = nsharpd_boundedness(&[16, 32, 64, 128], 8, theta(3, 10), Execution::Parallel).unwrap();
    assert!(r.self_adjoint && r.anticommutes_with_grading);
    for row in &r.rows {
        assert!(row.variation < 0.05, "{row:?}");
    }
    let seq = nsharpd_boundedness(&[16, 32], 4, theta(3, 10), Execution::Sequential).unwrap();
    let par = nsharpd_boundedness(&[16, 32], 4, theta(3, 10), Execution::Parallel).unwrap();
    for (a, b) in seq.rows.iter().zip(&par.rows) {
        assert_eq!(a.norms, b.norms);
    }
}

#[test]
fn rotation_class_components() {
    let d = rotation_delta_components(theta(3, 10), 32, 8).unwrap();
    assert!(d.ew_symbolic);
    assert!(d.ew_numeric.iter().all(|&(_, r)| r < 1e-14));
    let nontrivial: Vec<bool> = d.summands.iter().map(|s| s.nontrivial).collect();
    assert_eq!(nontrivial, vec![false, true, true, false]);
    let w = &d.summands[1].factors[0];
    assert_eq!(w.name, "w");
    assert_eq!(w.pairing.unwrap().abs(), 1);
    let zop = &d.summands[1].factors[1];
    assert_eq!((zop.name.as_str(), zop.pairing), ("z^op", Some(0)));
}

#[test]
fn exact_phases() {
    let t = theta(3, 10);
    assert_eq!(t.phase_is_trivial(10), Some(true));
    assert_eq!(t.phase_is_trivial(5), Some(false));
    assert_eq!(Theta::from_turns_str("0.3").unwrap(), t);
    assert_eq!(Theta::from_turns_str("-0.25").unwrap(), theta(-1, 4));
    assert!(Theta::from_turns_str("abc").is_err());
}

proptest! {
    #[test]
    fn winding_is_additive(k in 1i64..=3, num in 0i64..20, modes in 1usize..=4, window in 16usize..40) {
        let t = build_graded_truncation(window, modes, theta(num, 20)).unwrap();
        let one = ext_index_pairing(&t, &Word::power(Generator::U, 1));
        let many = ext_index_pairing(&t, &Word::power(Generator::U, k));
        prop_assert!(one.stable && many.stable);
        prop_assert_eq!(many.index, k * one.index);
    }

    #[test]
    fn pairing_is_a_homomorphism(a in -3i64..=3, b in -3i64..=3, c in -2i64..=2) {
        let t = build_graded_truncation(24, 8, theta(1, 7)).unwrap();
        let w = Word(vec![(Generator::U, a), (Generator::Z, c), (Generator::W, b), (Generator::U, a)]);
        let r = ext_index_pairing(&t, &w);
        let u = ext_index_pairing(&t, &Word::power(Generator::U, 1)).index;
        prop_assert!(r.stable);
        prop_assert_eq!(r.index, 2 * a * u);
    }
}

use cpdual_core::duality::{
    build_ladder, cap_products, check_ladder_commutes, check_ladder_exact, delta_difference_vanishes, kaminker_putnam_delta,
    pd_report, random_ladder_batch, solve_theta, verify_delta_ev_vanishes, DualChoice,
};
use cpdual_core::exact::IntMatrix;
use cpdual_core::exec::Execution;
use cpdual_core::graph::{fixtures, random_graph, Graph};
use num_bigint::BigInt;
use proptest::prelude::*;

#[test]
fn cap_products_of_fixtures() {
    for (name, g) in fixtures::all() {
        assert!(cap_products(&g).all_hold(), "{name}");
    }
    let o2 = cap_products(&fixtures::cuntz(2));
    for m in [&o2.beta_e, &o2.beta_eop, &o2.beta_ebarop, &o2.e_mu, &o2.eop_mu, &o2.ebarop_mu] {
        assert_eq!(m.to_i64_rows(), vec![vec![2]]);
    }
    let b = cap_products(&fixtures::two_loop_bridge());
    assert_eq!(b.beta_e.to_i64_rows(), vec![vec![2, 1], vec![0, 1]]);
    assert_eq!(b.e_mu, b.ebarop_mu);
}

#[test]
fn ladders_of_fixtures() {
    for (name, g) in fixtures::all() {
        for c in [DualChoice::Eop, DualChoice::EbarOp] {
            let l = build_ladder(&g, c).unwrap();
            assert!(check_ladder_commutes(&l).iter().all(|x| x.ok), "{name} {c:?}");
            assert!(check_ladder_exact(&l).iter().all(|x| x.ok), "{name} {c:?}");
            assert!(solve_theta(&l).unwrap().certified, "{name} {c:?}");
        }
    }
    let o2 = build_ladder(&fixtures::cuntz(2), DualChoice::Eop).unwrap();
    assert!(o2.dual.data.k0.is_trivial() && o2.khom.k_even.is_trivial() && o2.khom.k_odd.is_trivial());
    let l = build_ladder(&fixtures::single_loop(), DualChoice::Eop).unwrap();
    assert!(l.khom.presentation.is_zero());
    let t = solve_theta(&l).unwrap();
    let th0 = t.theta0.unwrap().matrix.to_i64_rows();
    assert!(th0 == vec![vec![1]] || th0 == vec![vec![-1]]);
}

#[test]
fn corrupted_rung_is_reported() {
    let mut l = build_ladder(&fixtures::two_loop_bridge(), DualChoice::Eop).unwrap();
    let v = l.khom.presentation.get(0, 0) + BigInt::from(1);
    l.khom.presentation.set(0, 0, v);
    let failed: Vec<String> = check_ladder_commutes(&l).into_iter().filter(|c| !c.ok).map(|c| c.name).collect();
    assert!(failed.contains(&"even rung square".to_string()), "{failed:?}");
}

#[test]
fn delta_summands() {
    let l = kaminker_putnam_delta(&fixtures::single_loop());
    assert_eq!(l.summands.len(), 1);
    assert!(!l.used_dual_graph);
    let o2 = kaminker_putnam_delta(&fixtures::cuntz(2));
    assert!(o2.used_dual_graph);
    assert_eq!(o2.summands.len(), 4);
    // the bridge has two parallel loops, so it also goes through its dual graph
    let b = kaminker_putnam_delta(&fixtures::two_loop_bridge());
    assert!(b.used_dual_graph);
    assert_eq!(b.summands.len(), 8);
    let su = kaminker_putnam_delta(&fixtures::quantum_su2());
    assert_eq!(su.summands.len(), 3);
}

#[test]
fn ev_residual_vanishes_on_fixtures() {
    for (name, g) in fixtures::all() {
        let ev = verify_delta_ev_vanishes(&g);
        assert!(ev.vanishes && ev.residual.is_zero(), "{name}");
    }
    assert_eq!(verify_delta_ev_vanishes(&fixtures::single_loop()).residual, IntMatrix::zeros(1, 1));
}

#[test]
fn delta_difference_on_invertible_bimodules() {
    assert_eq!(delta_difference_vanishes(&fixtures::single_loop()), Some(true));
    assert_eq!(delta_difference_vanishes(&fixtures::cuntz(2)), None);
}

#[test]
fn reports() {
    let b = pd_report(&fixtures::two_loop_bridge(), 3, 16, 1e-9, Execution::Parallel).unwrap();
    assert!(b.checks().iter().all(|c| c.ok));
    for d in &b.duals {
        let k = d.k_data.as_ref().unwrap();
        assert_eq!((k.data.k0.free_rank(), k.data.k1.free_rank()), (1, 1));
        assert!(d.theta.as_ref().unwrap().certified);
    }
    let o2 = pd_report(&fixtures::cuntz(2), 3, 16, 1e-9, Execution::Parallel).unwrap();
    assert!(o2.k_theory.k0.is_trivial() && o2.k_homology.k_even.is_trivial());
    assert!(o2.checks().iter().all(|c| c.ok));
    let su = pd_report(&fixtures::quantum_su2(), 3, 16, 1e-9, Execution::Parallel).unwrap();
    let eop = su.duals.iter().find(|d| d.choice == DualChoice::Eop).unwrap();
    assert!(eop.theta.as_ref().unwrap().certified);
    let ebar = su.duals.iter().find(|d| d.choice == DualChoice::EbarOp).unwrap();
    assert!(ebar.note.as_deref().unwrap().contains("super-strong"));
}

#[test]
fn random_batch_modes_agree() {
    let seq = random_ladder_batch(50, 6, 1000, DualChoice::Eop, Execution::Sequential);
    let par = random_ladder_batch(50, 6, 1000, DualChoice::Eop, Execution::Parallel);
    for ((g1, a), (g2, b)) in seq.iter().zip(&par) {
        assert_eq!(g1.adjacency(), g2.adjacency());
        assert!(a.commutes && a.exact && a.theta_certified, "{:?}", g1.adjacency());
        assert_eq!((a.commutes, a.exact, a.theta_certified), (b.commutes, b.exact, b.theta_certified));
    }
}

fn arb_graph() -> impl Strategy<Value = Graph> {
    (1usize..=6, 1u32..=2, any::<u64>()).prop_map(|(n, m, s)| random_graph(n, m, s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ladders_certify(g in arb_graph()) {
        for c in [DualChoice::Eop, DualChoice::EbarOp] {
            let l = build_ladder(&g, c).unwrap();
            prop_assert!(check_ladder_commutes(&l).iter().all(|x| x.ok));
            prop_assert!(check_ladder_exact(&l).iter().all(|x| x.ok));
            prop_assert!(solve_theta(&l).unwrap().certified);
        }
    }

    #[test]
    fn k_homology_even_is_free_of_rank_k1(g in arb_graph()) {
        let r = pd_report(&g, 1, 8, 1e-9, Execution::Sequential).unwrap();
        prop_assert!(r.k0_homology_torsion_free && r.rank_k0_homology_equals_rank_k1);
    }

    #[test]
    fn ev_vanishes_when_caps_hold(g in arb_graph()) {
        if cap_products(&g).all_hold() {
            prop_assert!(verify_delta_ev_vanishes(&g).residual.is_zero());
        }
    }
}

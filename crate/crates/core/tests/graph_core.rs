use cpdual_core::graph::{fixtures, random_graph, Graph};
use proptest::prelude::*;

fn adj(rows: &[&[u64]]) -> Vec<Vec<u64>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

#[test]
fn fixture_adjacency() {
    assert_eq!(fixtures::cuntz(2).adjacency(), adj(&[&[2]]));
    assert_eq!(fixtures::two_loop_bridge().adjacency(), adj(&[&[2, 1], &[0, 1]]));
    assert_eq!(fixtures::quantum_su2().adjacency(), adj(&[&[1, 0], &[1, 1]]));
}

#[test]
fn opposite_of_fixtures() {
    let l = fixtures::single_loop();
    assert_eq!(l.opposite().adjacency(), l.adjacency());
    assert_eq!(fixtures::two_loop_bridge().opposite().adjacency(), adj(&[&[2, 0], &[1, 1]]));
}

#[test]
fn dual_graphs() {
    let d = fixtures::cuntz(2).dual_graph();
    assert_eq!((d.vertex_count(), d.edge_count()), (2, 4));
    assert_eq!(d.adjacency(), adj(&[&[1, 1], &[1, 1]]));
    let s = fixtures::quantum_su2().dual_graph();
    assert_eq!((s.vertex_count(), s.edge_count()), (3, 4));
    assert_eq!(fixtures::single_loop().dual_graph().adjacency(), adj(&[&[1]]));
}

#[test]
fn hypotheses() {
    let o2 = fixtures::cuntz(2);
    assert!(!o2.has_sources() && !o2.has_sinks() && o2.is_primitive());
    let su = fixtures::quantum_su2();
    assert!(!su.has_sources() && !su.has_sinks() && !su.is_primitive());
    let bare = Graph::new(vec!["v".into()], vec![]).unwrap();
    assert!(bare.has_sources() && bare.has_sinks());
    assert!(fixtures::fibonacci().is_primitive());
}

#[test]
fn json_round_trip_and_errors() {
    for (_, g) in fixtures::all() {
        let back = Graph::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(back.adjacency(), g.adjacency());
        assert_eq!(back.to_json_string(), g.to_json_string());
    }
    let bad = r#"{"vertices":["v"],"edges":[{"name":"e","src":"v","dst":"x"}]}"#;
    let err = Graph::from_json_str(bad).unwrap_err().to_string();
    assert!(err.contains('x'), "{err}");
}

#[test]
fn path_composition() {
    let g = fixtures::quantum_su2();
    let f = g.path_from_names(&["f"]).unwrap();
    let e = g.path_from_names(&["e"]).unwrap();
    let fe = g.compose(&f, &e).unwrap();
    assert_eq!((fe.range(), fe.source(), fe.len()), (1, 0, 2));
    assert!(g.compose(&e, &f).is_err());
    assert_eq!(g.paths_of_length(3).iter().filter(|p| p.range() == 1).count(), 4);
}

fn arb_graph() -> impl Strategy<Value = Graph> {
    (1usize..=6, 1u32..=3, any::<u64>()).prop_map(|(n, m, s)| random_graph(n, m, s))
}

proptest! {
    #[test]
    fn opposite_transposes(g in arb_graph()) {
        let a = g.adjacency();
        let b = g.opposite().adjacency();
        for i in 0..a.len() {
            for j in 0..a.len() {
                prop_assert_eq!(a[i][j], b[j][i]);
            }
        }
    }

    #[test]
    fn dual_graph_is_simple(g in arb_graph()) {
        prop_assert!(!g.dual_graph().has_multiple_edges());
    }

    #[test]
    fn dual_graph_edge_count(g in arb_graph()) {
        let by_degree: usize = (0..g.vertex_count()).map(|u| g.in_degree(u) * g.out_degree(u)).sum();
        let a = g.adjacency();
        let n = a.len();
        // composable pairs (e, f) with s(e) = r(f), counted from A^2
        let by_matrix: u64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (0..n).map(|k| a[i][k] * a[k][j]).sum::<u64>())
            .sum();
        prop_assert_eq!(by_degree as u64, by_matrix);
        prop_assert_eq!(g.dual_graph().edge_count(), by_degree);
    }
}

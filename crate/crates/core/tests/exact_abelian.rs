use cpdual_core::exact::{
    cokernel, determinant, kernel, smith_normal_form, solve_hom_constraints, transpose_projection_class, FgAbGroup, GroupHom,
    HomConstraint, IntMatrix, ProjectionDatum,
};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn m(rows: &[Vec<i64>]) -> IntMatrix {
    IntMatrix::from_rows(rows)
}

fn big(xs: &[i64]) -> Vec<BigInt> {
    xs.iter().map(|&x| BigInt::from(x)).collect()
}

#[test]
fn smith_examples() {
    let s = smith_normal_form(&IntMatrix::identity(3));
    assert_eq!((s.diagonal(), s.rank), (big(&[1, 1, 1]), 3));
    let s = smith_normal_form(&m(&[vec![-1, 0], vec![-1, 0]]));
    assert_eq!((s.diagonal(), s.rank), (big(&[1]), 1));
    assert_eq!(smith_normal_form(&m(&[vec![2, 0], vec![0, 3]])).diagonal(), big(&[1, 6]));
}

#[test]
fn kernels_and_cokernels() {
    let z = m(&[vec![0]]);
    assert_eq!((cokernel(&z).group.free_rank(), kernel(&z).group.free_rank()), (1, 1));
    let neg = m(&[vec![-1]]);
    assert!(cokernel(&neg).group.is_trivial() && kernel(&neg).group.is_trivial());
    let two = m(&[vec![2]]);
    let c = cokernel(&two).group;
    assert_eq!((c.free_rank(), c.torsion()), (0, big(&[2])));
    assert!(kernel(&two).group.is_trivial());
}

#[test]
fn constraint_solving() {
    let t = FgAbGroup::trivial();
    let x = solve_hom_constraints(&t, &t, &[]).unwrap().unwrap();
    assert!(x.is_zero());

    let z = FgAbGroup::free(1);
    let id = z.identity();
    let c = HomConstraint { post: id.clone(), pre: id.clone(), target: id.after(&id) };
    let x = solve_hom_constraints(&z, &z, &[c]).unwrap().unwrap();
    assert!(x.equals(&id));

    // no nonzero map Z/2 -> Z, so X ∘ q = q' has no solution for q' nonzero
    let z2 = FgAbGroup::from_invariants(0, &[2]);
    let onto = GroupHom::new(FgAbGroup::free(1), z2.clone(), m(&[vec![1]])).unwrap();
    let target = GroupHom::new(FgAbGroup::free(1), z.clone(), m(&[vec![1]])).unwrap();
    let c = HomConstraint { post: id.clone(), pre: onto, target };
    assert!(solve_hom_constraints(&z2, &z, &[c]).unwrap().is_none());
}

#[test]
fn isomorphism_certificates() {
    let z2 = FgAbGroup::free(2);
    assert!(z2.identity().is_isomorphism());
    let z = FgAbGroup::free(1);
    assert!(!GroupHom::new(z.clone(), z, m(&[vec![2]])).unwrap().is_isomorphism());
    let g = FgAbGroup::from_invariants(1, &[2]);
    let h = GroupHom::new(g.clone(), g, m(&[vec![1, 0], vec![1, 1]])).unwrap();
    assert!(h.is_isomorphism());
}

#[test]
fn projection_transpose() {
    let one = ProjectionDatum::new("A", false, m(&[vec![1]])).unwrap();
    assert_eq!(transpose_projection_class(&one).matrix, one.matrix);
    let d = ProjectionDatum::new("A", false, m(&[vec![1, 0], vec![0, 0]])).unwrap();
    assert_eq!(transpose_projection_class(&d).matrix, d.matrix);
    let p = ProjectionDatum::new("A", false, m(&[vec![1, 1], vec![0, 0]])).unwrap();
    let t = transpose_projection_class(&p);
    assert_eq!(t.matrix, m(&[vec![1, 0], vec![1, 0]]));
    assert!(t.opposite);
    assert_eq!(t.rank(), p.rank());
    assert!(ProjectionDatum::new("A", false, m(&[vec![2]])).is_err());
}

fn arb_matrix() -> impl Strategy<Value = IntMatrix> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(-5i64..=5, c), r).prop_map(|rows| IntMatrix::from_rows(&rows))
    })
}

fn arb_square() -> impl Strategy<Value = IntMatrix> {
    (1usize..=5).prop_flat_map(|n| {
        proptest::collection::vec(proptest::collection::vec(-5i64..=5, n), n).prop_map(|rows| IntMatrix::from_rows(&rows))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn smith_decomposition_is_exact(a in arb_matrix()) {
        let s = smith_normal_form(&a);
        prop_assert_eq!(s.u.mul(&a).mul(&s.v), s.d.clone());
        prop_assert!(determinant(&s.u).abs().is_one());
        prop_assert!(determinant(&s.v).abs().is_one());
        let d = s.diagonal();
        for w in d.windows(2) {
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
        prop_assert_eq!(s.u.mul(&s.u_inv), IntMatrix::identity(a.rows()));
        prop_assert_eq!(s.v.mul(&s.v_inv), IntMatrix::identity(a.cols()));
    }

    #[test]
    fn torsion_order_is_determinant(a in arb_square()) {
        let det = determinant(&a);
        prop_assume!(!det.is_zero());
        let g = cokernel(&a).group;
        let order = g.torsion().iter().fold(BigInt::one(), |acc, t| acc * t);
        prop_assert_eq!(g.free_rank(), 0);
        prop_assert_eq!(order, det.abs());
    }

    #[test]
    fn rank_nullity(a in arb_matrix()) {
        let k = kernel(&a);
        prop_assert_eq!(k.group.free_rank() + smith_normal_form(&a).rank, a.cols());
        prop_assert!(a.mul(&k.basis).is_zero());
    }

    #[test]
    fn solved_constraints_hold(a in arb_square()) {
        // X ∘ q = q ∘ A on coker(I - A) style data: solve X: C -> C with
        // X ∘ quotient = quotient ∘ A, which always has the solution induced by A.
        let n = a.rows();
        let pres = IntMatrix::identity(n).sub(&a);
        let c = cokernel(&pres);
        let a_hom = GroupHom::new(FgAbGroup::free(n), FgAbGroup::free(n), a.clone()).unwrap();
        let constraint = HomConstraint {
            post: c.group.identity(),
            pre: c.quotient.clone(),
            target: c.quotient.after(&a_hom),
        };
        let x = solve_hom_constraints(&c.group, &c.group, std::slice::from_ref(&constraint)).unwrap();
        let x = x.expect("A induces a map on the cokernel");
        prop_assert!(constraint.post.after(&x).after(&constraint.pre).equals(&constraint.target));
    }
}

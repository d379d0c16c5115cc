//! Poincaré-duality checks at the level of K-theory.
//!
//! The fundamental classes of the coefficient algebra `A = C(G^0)` are the
//! diagonal ones, so `μ` and `β` act as identity matrices and the degree is 0.
//! The duality ladder pairs the six-term sequence of a dual candidate with
//! the K-homology sequence of `O_E`; the comparison maps `θ` are solved for
//! as a Diophantine system and certified to be isomorphisms.

use num_bigint::BigInt;
use serde::Serialize;

use crate::exact::{is_exact_at, solve_hom_constraints, ExactError, FgAbGroup, GroupHom, HomConstraint, IntMatrix};
use crate::exec::{self, Execution};
use crate::graph::{random_graph, Graph};
use crate::pimsner::{cp_k_homology, cp_k_theory, require_no_sinks, require_no_sources, KHomologyData, PimsnerError, PvData};
use crate::watatani::{super_strong_check, SuperStrongReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum DualChoice {
    /// The algebra of the opposite graph.
    Eop,
    /// The opposite algebra, through the conjugate module.
    EbarOp,
}

#[derive(Debug, Clone, Serialize)]
pub struct DualKData {
    pub choice: DualChoice,
    pub data: PvData,
    /// Matrix of the dual module on `K_0(A^op)`.
    pub module_matrix: IntMatrix,
}

/// K-theory of a dual candidate.
///
/// `Eop` needs no sinks (injectivity of the opposite left action).
/// `EbarOp` needs no sources and applies the transpose functor, realised on
/// presentation data as a matrix transpose.
pub fn dual_k_data(g: &Graph, choice: DualChoice) -> Result<DualKData, PimsnerError> {
    match choice {
        DualChoice::Eop => {
            require_no_sinks(g)?;
            let data = cp_k_theory(&g.opposite())?;
            let module_matrix = crate::pimsner::k_theory_matrix(&g.opposite());
            Ok(DualKData { choice, data, module_matrix })
        }
        DualChoice::EbarOp => {
            require_no_sources(g)?;
            let base = cp_k_theory(g)?;
            let module_matrix = crate::pimsner::k_theory_matrix(g).transpose();
            let data = PvData::from_presentation(base.presentation.transpose());
            Ok(DualKData { choice, data, module_matrix })
        }
    }
}

/// Which tensor factor of `A ⊗ A^op` a module lives over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    A,
    Aop,
}

/// A bimodule over `C(G^0)` with basis `δ_g`, recorded by the vertices
/// through which the left and right actions see each basis vector.
struct VertexModule {
    side: Side,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl VertexModule {
    fn graph_module(g: &Graph) -> Self {
        VertexModule {
            side: Side::A,
            left: g.edge_list().iter().map(|e| e.range).collect(),
            right: g.edge_list().iter().map(|e| e.source).collect(),
        }
    }

    /// The module of the opposite graph, over `A^op`.
    fn opposite_graph_module(g: &Graph) -> Self {
        let m = Self::graph_module(&g.opposite());
        VertexModule { side: Side::Aop, ..m }
    }

    /// The conjugate-opposite module over `A^op` with the vertex supports
    /// used by the Kasparov-product formulas: the left `A^op` action goes
    /// through `s` and the right one through `r`.
    fn conjugate_opposite_module(g: &Graph) -> Self {
        VertexModule {
            side: Side::Aop,
            left: g.edge_list().iter().map(|e| e.source).collect(),
            right: g.edge_list().iter().map(|e| e.range).collect(),
        }
    }

    /// `β ⊗ [X]` as a class in `KK(C, A ⊗ A^op) = Z^{n×n}`, indexed
    /// `[A^op vertex][A vertex]`.
    fn beta_product(&self, n: usize) -> IntMatrix {
        let mut m = IntMatrix::zeros(n, n);
        for (&l, &r) in self.left.iter().zip(&self.right) {
            // β ties the factor acting on the left of X to the other tensor factor.
            let (a, b) = match self.side {
                Side::A => (r, l),
                Side::Aop => (l, r),
            };
            let v = m.get(b, a) + 1;
            m.set(b, a, v);
        }
        m
    }

    /// `[X] ⊗ μ` as a class in `KK(A ⊗ A^op, C) = Z^{n×n}`, indexed
    /// `[A vertex][A^op vertex]`.
    fn mu_product(&self, n: usize) -> IntMatrix {
        let mut m = IntMatrix::zeros(n, n);
        for (&l, &r) in self.left.iter().zip(&self.right) {
            // μ ties the right support of X to the other tensor factor.
            let (a, b) = match self.side {
                Side::A => (l, r),
                Side::Aop => (r, l),
            };
            let v = m.get(a, b) + 1;
            m.set(a, b, v);
        }
        m
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CapProducts {
    pub beta_e: IntMatrix,
    pub beta_eop: IntMatrix,
    pub beta_ebarop: IntMatrix,
    pub e_mu: IntMatrix,
    pub eop_mu: IntMatrix,
    pub ebarop_mu: IntMatrix,
    pub verdicts: Vec<(String, bool)>,
}

impl CapProducts {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.1)
    }
}

/// The four pairwise product equalities between the graph module and both
/// dual modules, each product formed from its own module.
pub fn cap_products(g: &Graph) -> CapProducts {
    let n = g.vertex_count();
    let e = VertexModule::graph_module(g);
    let eop = VertexModule::opposite_graph_module(g);
    let ebar = VertexModule::conjugate_opposite_module(g);
    let (beta_e, beta_eop, beta_ebarop) = (e.beta_product(n), eop.beta_product(n), ebar.beta_product(n));
    let (e_mu, eop_mu, ebarop_mu) = (e.mu_product(n), eop.mu_product(n), ebar.mu_product(n));
    let verdicts = vec![
        ("beta.[E] = beta.[Eop]".to_string(), beta_e == beta_eop),
        ("beta.[E] = beta.[EbarOp]".to_string(), beta_e == beta_ebarop),
        ("[E].mu = [Eop].mu".to_string(), e_mu == eop_mu),
        ("[E].mu = [EbarOp].mu".to_string(), e_mu == ebarop_mu),
    ];
    CapProducts { beta_e, beta_eop, beta_ebarop, e_mu, eop_mu, ebarop_mu, verdicts }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaSummand {
    pub edge: String,
    pub range: String,
    pub source: String,
    /// Orientation sign of the summand; the convention is `+1` throughout.
    pub sign: i8,
}

/// Formal class with one summand per edge, built on the dual graph when some
/// vertex pair carries more than one edge.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaClass {
    pub used_dual_graph: bool,
    #[serde(skip)]
    pub graph: Graph,
    pub summands: Vec<DeltaSummand>,
}

pub fn kaminker_putnam_delta(g: &Graph) -> DeltaClass {
    let used_dual_graph = g.has_multiple_edges();
    let graph = if used_dual_graph { g.dual_graph() } else { g.clone() };
    let summands = graph
        .edge_list()
        .iter()
        .map(|e| DeltaSummand {
            edge: e.name.clone(),
            range: graph.vertex_name(e.range).to_string(),
            source: graph.vertex_name(e.source).to_string(),
            sign: 1,
        })
        .collect();
    DeltaClass { used_dual_graph, graph, summands }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvCheck {
    pub used_dual_graph: bool,
    pub residual: IntMatrix,
    pub vanishes: bool,
}

/// Pairs the summands of `δ` against the evaluation class and subtracts the
/// product `β ⊗ [E]` on the graph actually used.
pub fn verify_delta_ev_vanishes(g: &Graph) -> EvCheck {
    let delta = kaminker_putnam_delta(g);
    let h = &delta.graph;
    let n = h.vertex_count();
    let mut pairing = IntMatrix::zeros(n, n);
    for s in &delta.summands {
        let (r, src) = (h.vertex_index(&s.range).unwrap(), h.vertex_index(&s.source).unwrap());
        let v = pairing.get(r, src) + BigInt::from(s.sign);
        pairing.set(r, src, v);
    }
    let products = cap_products(h);
    let residual = pairing.sub(&products.beta_e);
    let vanishes = residual.is_zero() && pairing == products.beta_eop;
    EvCheck { used_dual_graph: delta.used_dual_graph, residual, vanishes }
}

/// The two six-term sequences and the rungs between them.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub choice: DualChoice,
    pub dual: DualKData,
    pub khom: KHomologyData,
    /// `K_0(A^op) → K^0(A)`, the identity for diagonal `μ`.
    pub mu: GroupHom,
    zn: FgAbGroup,
}

impl Ladder {
    fn dual_step(&self) -> GroupHom {
        GroupHom::new(self.zn.clone(), self.zn.clone(), self.dual.data.presentation.clone()).expect("free")
    }

    fn khom_step(&self) -> GroupHom {
        GroupHom::new(self.zn.clone(), self.zn.clone(), self.khom.presentation.clone()).expect("free")
    }
}

pub fn build_ladder(g: &Graph, choice: DualChoice) -> Result<Ladder, PimsnerError> {
    let dual = dual_k_data(g, choice)?;
    let khom = cp_k_homology(g)?;
    let n = g.vertex_count();
    let zn = FgAbGroup::free(n);
    let mu = zn.identity();
    Ok(Ladder { choice, dual, khom, mu, zn })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
}

fn check(name: &str, ok: bool) -> Check {
    Check { name: name.to_string(), ok }
}

/// Commutation of the solid squares and vanishing of consecutive composites.
pub fn check_ladder_commutes(l: &Ladder) -> Vec<Check> {
    let zero = FgAbGroup::trivial();
    let d = &l.dual.data;
    let k = &l.khom;
    let z00 = GroupHom::zero(&zero, &zero);
    vec![
        check("even rung square", l.khom_step().after(&l.mu).equals(&l.mu.after(&l.dual_step()))),
        check("odd rung square", z00.after(&z00).equals(&z00.after(&z00))),
        check("outer: iota after step", d.iota0.after(&l.dual_step()).is_zero()),
        check("outer: step after boundary", l.dual_step().after(&d.boundary1).is_zero()),
        check("inner: boundary after step", k.boundary.after(&l.khom_step()).is_zero()),
        check("inner: step after restriction", l.khom_step().after(&k.restriction).is_zero()),
    ]
}

/// Exactness at all twelve nodes.
pub fn check_ladder_exact(l: &Ladder) -> Vec<Check> {
    let mut out: Vec<Check> =
        l.dual.data.exactness().into_iter().map(|(n, ok)| Check { name: format!("outer {n}"), ok }).collect();
    let zero = FgAbGroup::trivial();
    let k = &l.khom;
    let step = l.khom_step();
    let to_zero = GroupHom::zero(&k.k_odd, &zero);
    let z00 = GroupHom::zero(&zero, &zero);
    let from_zero = GroupHom::zero(&zero, &k.k_even);
    out.push(check("inner K0(A) source", is_exact_at(&k.restriction, &step)));
    out.push(check("inner K0(A) target", is_exact_at(&step, &k.boundary)));
    out.push(check("inner K1", is_exact_at(&k.boundary, &to_zero)));
    out.push(check("inner K1(A) target", is_exact_at(&to_zero, &z00)));
    out.push(check("inner K1(A) source", is_exact_at(&z00, &from_zero)));
    out.push(check("inner K0", is_exact_at(&from_zero, &k.restriction)));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaSolution {
    pub choice: DualChoice,
    /// `K_0(dual) → K^1(O_E)`.
    pub theta0: Option<GroupHom>,
    /// `K_1(dual) → K^0(O_E)`.
    pub theta1: Option<GroupHom>,
    pub certified: bool,
}

/// Solves for the dashed maps so that every square with a `θ` commutes,
/// then certifies both as isomorphisms.
pub fn solve_theta(l: &Ladder) -> Result<ThetaSolution, ExactError> {
    let d = &l.dual.data;
    let k = &l.khom;
    let zero = FgAbGroup::trivial();
    let c0 = vec![
        HomConstraint { post: k.k_odd.identity(), pre: d.iota0.clone(), target: k.boundary.after(&l.mu) },
        HomConstraint {
            post: GroupHom::zero(&k.k_odd, &zero),
            pre: d.k0.identity(),
            target: GroupHom::zero(&d.k0, &zero),
        },
    ];
    let c1 = vec![HomConstraint { post: k.restriction.clone(), pre: d.k1.identity(), target: l.mu.after(&d.boundary1) }];
    let theta0 = solve_hom_constraints(&d.k0, &k.k_odd, &c0)?;
    let theta1 = solve_hom_constraints(&d.k1, &k.k_even, &c1)?;
    let certified = theta0.as_ref().is_some_and(GroupHom::is_isomorphism)
        && theta1.as_ref().is_some_and(GroupHom::is_isomorphism);
    Ok(ThetaSolution { choice: l.choice, theta0, theta1, certified })
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderOutcome {
    pub choice: DualChoice,
    pub commutes: bool,
    pub exact: bool,
    pub theta_certified: bool,
    pub failures: Vec<String>,
}

pub fn ladder_outcome(g: &Graph, choice: DualChoice) -> Result<LadderOutcome, PimsnerError> {
    let l = build_ladder(g, choice)?;
    let comm = check_ladder_commutes(&l);
    let ex = check_ladder_exact(&l);
    let theta = solve_theta(&l).map(|t| t.certified).unwrap_or(false);
    let failures = comm.iter().chain(&ex).filter(|c| !c.ok).map(|c| c.name.clone()).collect();
    Ok(LadderOutcome {
        choice,
        commutes: comm.iter().all(|c| c.ok),
        exact: ex.iter().all(|c| c.ok),
        theta_certified: theta,
        failures,
    })
}

/// Ladder outcomes for seeded random graphs with `1..=max_n` vertices.
pub fn random_ladder_batch(count: usize, max_n: usize, base_seed: u64, choice: DualChoice, exec: Execution) -> Vec<(Graph, LadderOutcome)> {
    let seeds: Vec<u64> = (0..count as u64).map(|i| base_seed + i).collect();
    exec::map(exec, &seeds, |&seed| {
        let n = 1 + (seed as usize % max_n);
        let g = random_graph(n, 2, seed);
        let out = ladder_outcome(&g, choice).expect("random graphs have no sources or sinks");
        (g, out)
    })
}

/// For graphs whose module is invertible (a permutation matrix), the two
/// duals induce the same map on K-homology.
pub fn delta_difference_vanishes(g: &Graph) -> Option<bool> {
    let a = g.adjacency();
    let perm = a.iter().all(|r| r.iter().sum::<u64>() == 1) && (0..a.len()).all(|j| a.iter().map(|r| r[j]).sum::<u64>() == 1);
    if !perm {
        return None;
    }
    let t1 = solve_theta(&build_ladder(g, DualChoice::Eop).ok()?).ok()?;
    let t2 = solve_theta(&build_ladder(g, DualChoice::EbarOp).ok()?).ok()?;
    Some(match (&t1.theta0, &t2.theta0) {
        (Some(x), Some(y)) => x.matrix == y.matrix,
        _ => false,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DualSection {
    pub choice: DualChoice,
    pub available: bool,
    pub note: Option<String>,
    pub k_data: Option<DualKData>,
    pub theta: Option<ThetaSolution>,
    pub ladder: Option<LadderOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PdReport {
    pub k_theory: PvData,
    pub k_homology: KHomologyData,
    pub duals: Vec<DualSection>,
    pub cap_products: CapProducts,
    pub delta_ev: EvCheck,
    pub k0_homology_torsion_free: bool,
    pub rank_k0_homology_equals_rank_k1: bool,
    pub dual_candidates_isomorphic: Option<bool>,
    pub super_strong: Option<SuperStrongReport>,
}

impl PdReport {
    /// Every check that must hold for the duality to be certified.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = vec![
            check("K^0 torsion-free", self.k0_homology_torsion_free),
            check("rank K^0 = rank K_1", self.rank_k0_homology_equals_rank_k1),
            check("delta ev residual zero", self.delta_ev.vanishes),
            check("cap products agree", self.cap_products.all_hold()),
        ];
        for d in &self.duals {
            if let Some(l) = &d.ladder {
                out.push(check(&format!("{:?} ladder exact", d.choice), l.exact));
                out.push(check(&format!("{:?} ladder commutes", d.choice), l.commutes));
                out.push(check(&format!("{:?} theta certified", d.choice), l.theta_certified));
            }
        }
        if let Some(x) = self.dual_candidates_isomorphic {
            out.push(check("dual candidates have isomorphic K-data", x));
        }
        out
    }
}

/// Full K-level duality report. `k_max`, `n_max` and `tol` configure the
/// super-strong check that gates the conjugate-opposite route.
pub fn pd_report(g: &Graph, k_max: usize, n_max: usize, tol: f64, exec: Execution) -> Result<PdReport, PimsnerError> {
    let k_theory = cp_k_theory(g)?;
    let k_homology = cp_k_homology(g)?;
    let super_strong = super_strong_check(g, k_max, n_max, tol, exec).ok();
    let mut duals = Vec::new();
    for choice in [DualChoice::Eop, DualChoice::EbarOp] {
        match build_ladder(g, choice) {
            Ok(l) => {
                let theta = solve_theta(&l).ok();
                let ladder = ladder_outcome(g, choice).ok();
                let note = match (choice, &super_strong) {
                    (DualChoice::EbarOp, Some(s)) if !s.holds => Some("super-strong condition fails".to_string()),
                    _ => None,
                };
                duals.push(DualSection { choice, available: true, note, k_data: Some(l.dual.clone()), theta, ladder });
            }
            Err(e) => duals.push(DualSection {
                choice,
                available: false,
                note: Some(e.to_string()),
                k_data: None,
                theta: None,
                ladder: None,
            }),
        }
    }
    let dual_candidates_isomorphic = match (&duals[0].k_data, &duals[1].k_data) {
        (Some(a), Some(b)) => Some(a.data.k0.is_isomorphic_to(&b.data.k0) && a.data.k1.is_isomorphic_to(&b.data.k1)),
        _ => None,
    };
    Ok(PdReport {
        k0_homology_torsion_free: k_homology.k_even.is_torsion_free(),
        rank_k0_homology_equals_rank_k1: k_homology.k_even.free_rank() == k_theory.k1.free_rank(),
        cap_products: cap_products(g),
        delta_ev: verify_delta_ev_vanishes(g),
        k_theory,
        k_homology,
        duals,
        dual_candidates_isomorphic,
        super_strong,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    #[test]
    fn cap_products_of_bridge() {
        let c = cap_products(&fixtures::two_loop_bridge());
        let a = IntMatrix::from_rows(&[vec![2, 1], vec![0, 1]]);
        assert!(c.all_hold());
        for m in [&c.beta_e, &c.beta_eop, &c.beta_ebarop, &c.e_mu, &c.eop_mu, &c.ebarop_mu] {
            assert_eq!(m, &a);
        }
    }

    #[test]
    fn delta_summand_counts() {
        assert_eq!(kaminker_putnam_delta(&fixtures::single_loop()).summands.len(), 1);
        let o2 = kaminker_putnam_delta(&fixtures::cuntz(2));
        assert!(o2.used_dual_graph);
        assert_eq!(o2.summands.len(), 4);
        assert_eq!(kaminker_putnam_delta(&fixtures::quantum_su2()).summands.len(), 3);
    }

    #[test]
    fn loop_theta_is_identity() {
        let l = build_ladder(&fixtures::single_loop(), DualChoice::Eop).unwrap();
        let t = solve_theta(&l).unwrap();
        assert!(t.certified);
        assert_eq!(t.theta0.unwrap().matrix.to_i64_rows(), vec![vec![1]]);
        assert_eq!(t.theta1.unwrap().matrix.to_i64_rows(), vec![vec![1]]);
    }

    #[test]
    fn sink_blocks_opposite_graph_dual() {
        let g = Graph::new(vec!["v".into(), "w".into()], vec![("e".into(), "v".into(), "w".into()), ("f".into(), "v".into(), "v".into())]).unwrap();
        assert!(matches!(dual_k_data(&g, DualChoice::Eop), Err(PimsnerError::Sink(_))));
    }
}

//! K-theory and K-homology of graph algebras from the six-term sequences.
//!
//! With `A[u][v] = #{r = u, s = v}`, the graph module acts on `K_0(C(G^0))`
//! by `A^T` and on `K^0(C(G^0))` by `A`, giving
//! `K_0 = coker(I - A^T)`, `K_1 = ker(I - A^T)`,
//! `K^0 = ker(I - A)`, `K^1 = coker(I - A)`.

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{cokernel, is_exact_at, kernel, FgAbGroup, GroupHom, IntMatrix};
use crate::graph::Graph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PimsnerError {
    #[error("vertex `{0}` receives no edge, so the left action is not injective")]
    Source(String),
    #[error("vertex `{0}` emits no edge, so the opposite left action is not injective")]
    Sink(String),
}

/// `I - M`.
pub fn id_minus(m: &IntMatrix) -> IntMatrix {
    IntMatrix::identity(m.rows()).sub(m)
}

/// Exact K-theory data from the six-term sequence.
#[derive(Debug, Clone, Serialize)]
pub struct PvData {
    /// The map `I - [E]` on `K_0` of the coefficient algebra.
    pub presentation: IntMatrix,
    #[serde(rename = "K0")]
    pub k0: FgAbGroup,
    #[serde(rename = "K1")]
    pub k1: FgAbGroup,
    /// `K_0(C(G^0)) → K_0`.
    pub iota0: GroupHom,
    /// `K_1 → K_0(C(G^0))`, the inclusion of the kernel.
    pub boundary1: GroupHom,
}

impl PvData {
    /// Six-term data from the presentation matrix alone.
    pub fn from_presentation(presentation: IntMatrix) -> Self {
        let coker = cokernel(&presentation);
        let ker = kernel(&presentation);
        PvData {
            presentation,
            k0: coker.group,
            k1: ker.group,
            iota0: coker.quotient,
            boundary1: ker.inclusion,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.presentation.rows()
    }

    /// Exactness at all six positions of
    /// `Z^n --(I-M)--> Z^n --ι--> K_0 --> 0 --> 0 --> K_1 --∂--> Z^n`.
    pub fn exactness(&self) -> Vec<(String, bool)> {
        let n = self.vertex_count();
        let zn = FgAbGroup::free(n);
        let zero = FgAbGroup::trivial();
        let pres = GroupHom::new(zn.clone(), zn.clone(), self.presentation.clone()).expect("free domain");
        let k0_to_0 = GroupHom::zero(&self.k0, &zero);
        let zero_to_zero = GroupHom::zero(&zero, &zero);
        let zero_to_k1 = GroupHom::zero(&zero, &self.k1);
        vec![
            ("K0(A) source".into(), is_exact_at(&self.boundary1, &pres)),
            ("K0(A) target".into(), is_exact_at(&pres, &self.iota0)),
            ("K0".into(), is_exact_at(&self.iota0, &k0_to_0)),
            ("K1(A) target".into(), is_exact_at(&k0_to_0, &zero_to_zero)),
            ("K1(A) source".into(), is_exact_at(&zero_to_zero, &zero_to_k1)),
            ("K1".into(), is_exact_at(&zero_to_k1, &self.boundary1)),
        ]
    }

    /// The same data with the connecting map negated. Exactness is
    /// insensitive to this sign.
    pub fn with_negated_boundary(&self) -> Self {
        let mut out = self.clone();
        out.boundary1.matrix = out.boundary1.matrix.scale(&-BigInt::one());
        out
    }
}

/// Matrix of the graph module on `K_0(C(G^0))`, which is `A^T`.
pub fn k_theory_matrix(g: &Graph) -> IntMatrix {
    IntMatrix::from_u64_rows(&g.adjacency()).transpose()
}

/// Matrix of the graph module on `K^0(C(G^0))`, which is `A`.
pub fn k_homology_matrix(g: &Graph) -> IntMatrix {
    IntMatrix::from_u64_rows(&g.adjacency())
}

pub fn require_no_sources(g: &Graph) -> Result<(), PimsnerError> {
    match g.sources().first() {
        Some(&v) => Err(PimsnerError::Source(g.vertex_name(v).to_string())),
        None => Ok(()),
    }
}

pub fn require_no_sinks(g: &Graph) -> Result<(), PimsnerError> {
    match g.sinks().first() {
        Some(&v) => Err(PimsnerError::Sink(g.vertex_name(v).to_string())),
        None => Ok(()),
    }
}

/// `K_*` of the graph algebra. Needs injectivity of the left action.
pub fn cp_k_theory(g: &Graph) -> Result<PvData, PimsnerError> {
    require_no_sources(g)?;
    Ok(PvData::from_presentation(id_minus(&k_theory_matrix(g))))
}

/// Exact K-homology data from the dual six-term sequence.
#[derive(Debug, Clone, Serialize)]
pub struct KHomologyData {
    pub presentation: IntMatrix,
    /// `K^0`, the kernel of `I - A`.
    #[serde(rename = "K0")]
    pub k_even: FgAbGroup,
    /// `K^1`, the cokernel of `I - A`.
    #[serde(rename = "K1")]
    pub k_odd: FgAbGroup,
    /// `K^0 → K^0(C(G^0))`, restriction along the inclusion.
    pub restriction: GroupHom,
    /// `K^0(C(G^0)) → K^1`.
    pub boundary: GroupHom,
}

pub fn cp_k_homology(g: &Graph) -> Result<KHomologyData, PimsnerError> {
    require_no_sources(g)?;
    let presentation = id_minus(&k_homology_matrix(g));
    let ker = kernel(&presentation);
    let coker = cokernel(&presentation);
    Ok(KHomologyData {
        presentation,
        k_even: ker.group,
        k_odd: coker.group,
        restriction: ker.inclusion,
        boundary: coker.quotient,
    })
}

/// Independent oracle: invariants of `coker` and `ker` of `I - A^T` via
/// determinantal divisors and rank counting.
pub fn k_theory_by_minors(g: &Graph) -> (usize, Vec<BigInt>, usize) {
    let m = id_minus(&k_theory_matrix(g));
    let factors = crate::exact::invariant_factors_by_minors(&m);
    let rank = factors.len();
    let torsion = factors.into_iter().filter(|d| !d.is_one()).collect();
    (m.rows() - rank, torsion, m.cols() - rank)
}

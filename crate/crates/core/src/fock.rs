//! Truncated Fock representations of graph algebras and the Kasparov-module
//! numerics built on them.
//!
//! The Fock space at level `L` has orthonormal basis `δ_α` for paths of
//! length at most `L`. Creation operators leak out of the top level, so every
//! operator identity is measured on an interior slice.
//!
//! The module `Ξ_E` is modelled on labels `W_{α,β} = [S_α S_β^*]` with
//! `(W_{α,β} | W_{ρ,σ})_A = Φ_∞(S_β S_α^* S_ρ S_σ^*)`, which is supported at a
//! single vertex. Inner products are scalarised with the counting measure on
//! vertices.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex, Complex64};
use serde::Serialize;
use thiserror::Error;

use crate::duality::DualChoice;
use crate::exec::{self, Execution};
use crate::graph::{Graph, Path};
use crate::linalg::{exact_rank, Sparse};
use crate::watatani::{super_strong_check, PathWeights, SuperStrongWitness, WatataniError};

#[derive(Debug, Error)]
pub enum FockError {
    #[error("Fock level must be at least 2, got {0}")]
    LevelTooSmall(usize),
    #[error("truncated basis would have {size} vectors, above the cap of {cap}")]
    BasisTooLarge { size: usize, cap: usize },
    #[error("graph has a sink `{0}`; the opposite module is not defined")]
    Sink(String),
    #[error("the conjugate dual needs the super-strong condition, which fails: {0:?}")]
    SuperStrongFails(SuperStrongWitness),
    #[error("Gram block {block} is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    IndefiniteGram { block: String, eigenvalue: f64 },
    #[error("edge index {0} out of range")]
    NoSuchEdge(usize),
    #[error(transparent)]
    Weights(#[from] WatataniError),
}

/// Default cap on the number of basis vectors of a truncation.
pub const DEFAULT_BASIS_CAP: usize = 2_000_000;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct CkResiduals {
    /// `max |T_e^* T_f - δ_{ef} p_{s(e)}|` on levels `≤ L-1`.
    pub adjoint_relation: f64,
    /// `max |Σ_{r(e)=v} T_e T_e^* - p_v|` on levels `1..=L-1`.
    pub sum_relation: f64,
    /// `max |Σ_e T_e T_e^* - (1 - P_vac)|` on all levels.
    pub vacuum_relation: f64,
}

impl CkResiduals {
    pub fn max(&self) -> f64 {
        self.adjoint_relation.max(self.sum_relation).max(self.vacuum_relation)
    }
}

/// Fock space truncated at paths of length `level`.
#[derive(Debug, Clone)]
pub struct FockRep {
    graph: Graph,
    level: usize,
    basis: Vec<Path>,
    index: HashMap<Path, usize>,
    ck: CkResiduals,
}

impl FockRep {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Path] {
        &self.basis
    }

    pub fn index_of(&self, p: &Path) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn ck_residuals(&self) -> &CkResiduals {
        &self.ck
    }

    /// Basis indices with path length in `lo..=hi`.
    pub fn levels(&self, lo: usize, hi: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| (lo..=hi).contains(&self.basis[i].len())).collect()
    }

    /// `T_e δ_α = δ_{eα}`, zero when not composable or above the top level.
    pub fn creation(&self, e: usize) -> Sparse {
        let ep = self.graph.edge_path(e);
        let trip = self.basis.iter().enumerate().filter_map(|(j, a)| {
            if a.len() >= self.level {
                return None;
            }
            let ea = ep.concat(a)?;
            Some((self.index[&ea], j, c(1.0)))
        });
        Sparse::from_triplets(self.dim(), self.dim(), trip.collect::<Vec<_>>())
    }

    /// Left action of `δ_v`: projection onto paths with range `v`.
    pub fn vertex_projection(&self, v: usize) -> Sparse {
        Sparse::diagonal(&self.basis.iter().map(|p| c(if p.range() == v { 1.0 } else { 0.0 })).collect::<Vec<_>>())
    }

    pub fn vacuum_projection(&self) -> Sparse {
        Sparse::diagonal(&self.basis.iter().map(|p| c(if p.is_vertex() { 1.0 } else { 0.0 })).collect::<Vec<_>>())
    }
}

/// Builds the truncation and verifies the Cuntz–Krieger relations on its
/// interior.
pub fn build_fock_rep(g: &Graph, level: usize, cap: usize) -> Result<FockRep, FockError> {
    if level < 2 {
        return Err(FockError::LevelTooSmall(level));
    }
    let mut basis = Vec::new();
    let mut layer = g.paths_of_length(0);
    for k in 0..=level {
        if basis.len() + layer.len() > cap {
            return Err(FockError::BasisTooLarge { size: basis.len() + layer.len(), cap });
        }
        basis.extend(layer.iter().cloned());
        if k < level {
            layer = g.paths_of_length(k + 1);
        }
    }
    let index = basis.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
    let mut rep = FockRep {
        graph: g.clone(),
        level,
        basis,
        index,
        ck: CkResiduals { adjoint_relation: 0.0, sum_relation: 0.0, vacuum_relation: 0.0 },
    };
    rep.ck = ck_residuals(&rep);
    Ok(rep)
}

fn ck_residuals(rep: &FockRep) -> CkResiduals {
    let g = &rep.graph;
    let t: Vec<Sparse> = (0..g.edge_count()).map(|e| rep.creation(e)).collect();
    let ts: Vec<Sparse> = t.iter().map(Sparse::adjoint).collect();
    let interior = rep.levels(0, rep.level - 1);
    let upper = rep.levels(1, rep.level - 1);
    let mut adjoint_relation: f64 = 0.0;
    for e in 0..g.edge_count() {
        for f in 0..g.edge_count() {
            let mut m = ts[e].mul(&t[f]);
            if e == f {
                m = m.sub(&rep.vertex_projection(g.edge(e).source));
            }
            adjoint_relation = adjoint_relation.max(m.restrict(&interior, &interior).max_abs());
        }
    }
    let ranges: Vec<Sparse> = t.iter().zip(&ts).map(|(a, b)| a.mul(b)).collect();
    let mut sum_relation: f64 = 0.0;
    for v in 0..g.vertex_count() {
        let mut m = rep.vertex_projection(v).scale(c(-1.0));
        for (e, r) in ranges.iter().enumerate() {
            if g.edge(e).range == v {
                m = m.add(r);
            }
        }
        sum_relation = sum_relation.max(m.restrict(&upper, &upper).max_abs());
    }
    let mut total = Sparse::identity(rep.dim()).sub(&rep.vacuum_projection()).scale(c(-1.0));
    for r in &ranges {
        total = total.add(r);
    }
    CkResiduals { adjoint_relation, sum_relation, vacuum_relation: total.max_abs() }
}

/// Exact check of `ẽ² = (1+t²) ẽ` for `ẽ = (1+t²) e_w(t)` by rewriting words in
/// `w, w^*, q = ww^*, e = w^*w`.
pub mod symbolic {
    use super::*;

    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
    pub enum Sym {
        One,
        Q,
        W,
        WStar,
        E,
    }

    impl Sym {
        fn adjoint(self) -> Sym {
            match self {
                Sym::W => Sym::WStar,
                Sym::WStar => Sym::W,
                s => s,
            }
        }
    }

    /// Which relations hold.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
    #[serde(rename_all = "snake_case")]
    pub enum Relations {
        /// `w` is the frame column: `ww^* = q`, `w^*w = e`.
        PartialIsometry,
        /// `w` is a unitary: `q = e = 1`.
        Unitary,
    }

    fn normalise(s: Sym, rel: Relations) -> Sym {
        match (rel, s) {
            (Relations::Unitary, Sym::Q | Sym::E) => Sym::One,
            _ => s,
        }
    }

    fn product(a: Sym, b: Sym, rel: Relations) -> Option<Sym> {
        use Sym::*;
        let (a, b) = (normalise(a, rel), normalise(b, rel));
        let out = match (a, b) {
            (One, x) | (x, One) => x,
            (Q, Q) => Q,
            (W, WStar) => Q,
            (WStar, W) => E,
            (Q, W) => W,
            (WStar, Q) => WStar,
            (W, E) => W,
            (E, WStar) => WStar,
            (E, E) => E,
            _ => return None,
        };
        Some(normalise(out, rel))
    }

    /// Polynomial in `t` with coefficients in `Z[i] ⊗ span(words)`.
    pub type Entry = BTreeMap<(Sym, u32), Complex<i64>>;

    fn add_term(e: &mut Entry, key: (Sym, u32), v: Complex<i64>) {
        let slot = e.entry(key).or_insert(Complex::new(0, 0));
        *slot += v;
        if *slot == Complex::new(0, 0) {
            e.remove(&key);
        }
    }

    fn mul_entries(x: &Entry, y: &Entry, rel: Relations) -> Option<Entry> {
        let mut out = Entry::new();
        for (&(a, p), &u) in x {
            for (&(b, q), &v) in y {
                add_term(&mut out, (product(a, b, rel)?, p + q), u * v);
            }
        }
        Some(out)
    }

    fn entry(terms: &[(Sym, u32, Complex<i64>)], rel: Relations) -> Entry {
        let mut e = Entry::new();
        for &(s, p, v) in terms {
            add_term(&mut e, (normalise(s, rel), p), v);
        }
        e
    }

    /// `(1+t²) e_w(t)` as a 2×2 block matrix.
    pub fn scaled_projection(rel: Relations) -> [[Entry; 2]; 2] {
        let one = Complex::new(1, 0);
        let i = Complex::new(0, 1);
        [
            [
                entry(&[(Sym::One, 0, one), (Sym::One, 2, one), (Sym::Q, 0, -one)], rel),
                entry(&[(Sym::W, 1, -i)], rel),
            ],
            [entry(&[(Sym::WStar, 1, i)], rel), entry(&[(Sym::E, 0, one)], rel)],
        ]
    }

    /// True when `ẽ = ẽ^*` and `ẽ² = (1+t²) ẽ` hold identically.
    pub fn projection_identity_holds(rel: Relations) -> bool {
        let e = scaled_projection(rel);
        let adjoint_ok = (0..2).all(|r| {
            (0..2).all(|s| {
                let mut adj = Entry::new();
                for (&(sym, p), &v) in &e[s][r] {
                    add_term(&mut adj, (sym.adjoint(), p), v.conj());
                }
                adj == e[r][s]
            })
        });
        let one_plus_t2 = entry(&[(Sym::One, 0, Complex::new(1, 0)), (Sym::One, 2, Complex::new(1, 0))], rel);
        let square_ok = (0..2).all(|r| {
            (0..2).all(|s| {
                let mut lhs = Entry::new();
                for k in 0..2 {
                    let Some(p) = mul_entries(&e[r][k], &e[k][s], rel) else { return false };
                    for (key, v) in p {
                        add_term(&mut lhs, key, v);
                    }
                }
                mul_entries(&one_plus_t2, &e[r][s], rel).is_some_and(|rhs| rhs == lhs)
            })
        });
        adjoint_ok && square_ok
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EwResidual {
    pub t: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub frame_size: usize,
    /// `w^*w - 1` on levels `1..=L-1`.
    pub isometry_residual: f64,
    /// `ww^* - q` on levels `≤ L-1` of each component.
    pub range_residual: f64,
    /// `w^*w` on the vacuum, the Toeplitz defect; `1` for every graph.
    pub vacuum_defect: f64,
    pub projection: Vec<EwResidual>,
    /// `max_v |e_w(t) D_v - D_v e_w(t)|` with `D_v = diag(ϕ(δ_v), δ_v)`.
    pub commutation_residual: f64,
    pub symbolic_identity: bool,
}

/// The frame column `w = (T_{e_i}^*)_i : F → F^k`.
pub fn frame_column(rep: &FockRep) -> Sparse {
    let k = rep.graph.edge_count();
    let d = rep.dim();
    let blocks: Vec<Sparse> = (0..k).map(|e| rep.creation(e).adjoint()).collect();
    let grid: Vec<Vec<Option<&Sparse>>> = blocks.iter().map(|b| vec![Some(b)]).collect();
    Sparse::block(&grid, &vec![d; k], &[d])
}

/// Residuals of `w`, `e_w(t)` and its commutation with the coefficient
/// algebra.
pub fn build_w_ew(rep: &FockRep, t_samples: &[f64]) -> FrameReport {
    let g = &rep.graph;
    let k = g.edge_count();
    let d = rep.dim();
    let w = frame_column(rep);
    let ws = w.adjoint();
    let qdiag: Vec<Complex64> = (0..k)
        .flat_map(|e| rep.basis.iter().map(move |p| (e, p)))
        .map(|(e, p)| c(if p.range() == g.edge(e).source { 1.0 } else { 0.0 }))
        .collect();
    let q = Sparse::diagonal(&qdiag);
    let inner = rep.levels(0, rep.level - 1);
    let upper = rep.levels(1, rep.level - 1);
    let comp_inner: Vec<usize> = (0..k).flat_map(|i| inner.iter().map(move |&j| i * d + j)).collect();
    let isometry_residual = ws.mul(&w).sub(&Sparse::identity(d)).restrict(&upper, &upper).max_abs();
    let range_residual = w.mul(&ws).sub(&q).restrict(&comp_inner, &comp_inner).max_abs();
    let vac: Vec<usize> = rep.levels(0, 0);
    let vacuum_defect = ws.mul(&w).sub(&Sparse::identity(d)).restrict(&vac, &vac).max_abs();

    let h_inner: Vec<usize> = comp_inner.iter().copied().chain(upper.iter().map(|&j| k * d + j)).collect();
    let ew = |t: f64| {
        let s = 1.0 / (1.0 + t * t);
        let a = Sparse::identity(k * d).sub(&q.scale(c(s)));
        let b = w.scale(Complex64::new(0.0, -t * s));
        let cc = ws.scale(Complex64::new(0.0, t * s));
        let dd = Sparse::identity(d).scale(c(s));
        Sparse::block(&[vec![Some(&a), Some(&b)], vec![Some(&cc), Some(&dd)]], &[k * d, d], &[k * d, d])
    };
    let projection = t_samples
        .iter()
        .map(|&t| {
            let e = ew(t);
            EwResidual { t, residual: e.mul(&e).sub(&e).restrict(&h_inner, &h_inner).max_abs() }
        })
        .collect();

    let e1 = ew(1.0);
    let mut commutation_residual: f64 = 0.0;
    for v in 0..g.vertex_count() {
        let diag: Vec<Complex64> = (0..k)
            .flat_map(|e| rep.basis.iter().map(move |p| (e, p)))
            .map(|(e, p)| c(if g.edge(e).range == v && p.range() == g.edge(e).source { 1.0 } else { 0.0 }))
            .chain(rep.basis.iter().map(|p| c(if p.range() == v { 1.0 } else { 0.0 })))
            .collect();
        let dv = Sparse::diagonal(&diag);
        let comm = e1.mul(&dv).sub(&dv.mul(&e1));
        commutation_residual = commutation_residual.max(comm.restrict(&h_inner, &h_inner).max_abs());
    }
    FrameReport {
        frame_size: k,
        isometry_residual,
        range_residual,
        vacuum_defect,
        projection,
        commutation_residual,
        symbolic_identity: symbolic::projection_identity_holds(symbolic::Relations::PartialIsometry),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexCount {
    pub level: usize,
    pub kernel: usize,
    pub cokernel: usize,
    pub index: i64,
    /// Index of the compression cut down by each vertex projection.
    pub per_vertex: Vec<i64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FredholmReport {
    pub counts: Vec<IndexCount>,
    pub stable: bool,
    /// `dim ker - dim coker` of the compressed frame isometry. The pairing
    /// with the extension class is the negative of this.
    pub index: i64,
}

fn index_count(rep: &FockRep) -> IndexCount {
    let g = &rep.graph;
    let k = g.edge_count();
    let adj: Vec<Sparse> = (0..k).map(|e| rep.creation(e).adjoint()).collect();
    let count = |vertex: Option<usize>| {
        let domain: Vec<usize> = (0..rep.dim()).filter(|&j| vertex.is_none_or(|v| rep.basis[j].range() == v)).collect();
        let mut col = vec![usize::MAX; rep.dim()];
        for (n, &j) in domain.iter().enumerate() {
            col[j] = n;
        }
        let mut rows: Vec<Vec<(usize, i64)>> = Vec::new();
        for (e, a) in adj.iter().enumerate() {
            if vertex.is_some_and(|v| g.edge(e).range != v) {
                continue;
            }
            let s = g.edge(e).source;
            let targets: Vec<usize> = (0..rep.dim()).filter(|&i| rep.basis[i].range() == s && rep.basis[i].len() < rep.level).collect();
            let mut by_row: HashMap<usize, Vec<(usize, i64)>> = targets.iter().map(|&i| (i, Vec::new())).collect();
            for (i, j, v) in a.triplets() {
                if col[j] != usize::MAX {
                    if let Some(r) = by_row.get_mut(&i) {
                        assert!(v.im == 0.0 && v.re.fract() == 0.0, "frame entries are integers");
                        r.push((col[j], v.re as i64));
                    }
                }
            }
            let mut sorted: Vec<_> = by_row.into_iter().collect();
            sorted.sort_by_key(|x| x.0);
            rows.extend(sorted.into_iter().map(|x| x.1));
        }
        let codomain = rows.len();
        let rank = exact_rank(domain.len(), rows);
        (domain.len() - rank, codomain - rank)
    };
    let (kernel, cokernel) = count(None);
    let per_vertex = (0..g.vertex_count())
        .map(|v| {
            let (a, b) = count(Some(v));
            a as i64 - b as i64
        })
        .collect();
    IndexCount { level: rep.level, kernel, cokernel, index: kernel as i64 - cokernel as i64, per_vertex }
}

/// Index of `w̃ : F_{≤L} → ⊕_i p_{s(e_i)} F_{≤L-1}`, counted exactly at `L`
/// and `L + 2`.
pub fn fredholm_index_compressed(g: &Graph, level: usize, cap: usize) -> Result<FredholmReport, FockError> {
    let counts = vec![index_count(&build_fock_rep(g, level, cap)?), index_count(&build_fock_rep(g, level + 2, cap)?)];
    let stable = counts[0].index == counts[1].index && counts[0].per_vertex == counts[1].per_vertex;
    Ok(FredholmReport { index: counts[0].index, stable, counts })
}

/// `W_{α,β}` with `s(α) = s(β)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XiLabel {
    pub alpha: Path,
    pub beta: Path,
}

impl XiLabel {
    pub fn new(alpha: Path, beta: Path) -> Self {
        assert_eq!(alpha.source(), beta.source(), "W_{{α,β}} needs s(α) = s(β)");
        XiLabel { alpha, beta }
    }

    /// `W_{α,1}`.
    pub fn creation(alpha: Path) -> Self {
        let b = Path::vertex(alpha.source());
        XiLabel { alpha, beta: b }
    }

    pub fn degree(&self) -> i64 {
        self.alpha.len() as i64 - self.beta.len() as i64
    }

    /// The vertex `v` with `W δ_v = W`.
    pub fn right_support(&self) -> usize {
        self.beta.range()
    }
}

/// Inner products on `Ξ_E` from the q-coefficients.
#[derive(Debug, Clone, Copy)]
pub struct XiModule<'a> {
    pub graph: &'a Graph,
    pub weights: &'a PathWeights,
}

impl XiModule<'_> {
    /// `(W_{α,β} | W_{ρ,σ})_A` as `(vertex, value)`, or `None` when zero.
    pub fn inner(&self, x: &XiLabel, y: &XiLabel) -> Option<(usize, f64)> {
        if let Some(rest) = y.alpha.strip_prefix(&x.alpha) {
            let bp = x.beta.concat(&rest)?;
            return (bp == y.beta).then(|| (y.beta.range(), self.weights.omega(&y.beta)));
        }
        if let Some(rest) = x.alpha.strip_prefix(&y.alpha) {
            let sa = y.beta.concat(&rest)?;
            return (sa == x.beta).then(|| (x.beta.range(), self.weights.omega(&x.beta)));
        }
        None
    }

    pub fn scalar(&self, x: &XiLabel, y: &XiLabel) -> f64 {
        self.inner(x, y).map_or(0.0, |p| p.1)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct XiGram {
    #[serde(skip)]
    pub labels: Vec<XiLabel>,
    #[serde(skip)]
    pub gram: DMatrix<f64>,
    pub size: usize,
    pub min_eigenvalue: f64,
    /// Deviation of the sub-Gram on `{W_{μ,1}}` from the identity.
    pub fock_deviation: f64,
}

/// All pairs `|α|, |β| ≤ cutoff` of paths with common source.
pub fn xi_labels(g: &Graph, cutoff: usize) -> Vec<XiLabel> {
    let paths = g.paths_up_to(cutoff);
    let mut out: Vec<XiLabel> = paths
        .iter()
        .flat_map(|a| paths.iter().filter(move |b| b.source() == a.source()).map(move |b| XiLabel::new(a.clone(), b.clone())))
        .collect();
    out.sort_by_key(|l| (l.degree(), l.clone()));
    out
}

pub fn xi_gram(g: &Graph, weights: &PathWeights, cutoff: usize) -> XiGram {
    let m = XiModule { graph: g, weights };
    let labels = xi_labels(g, cutoff);
    let n = labels.len();
    let gram = DMatrix::from_fn(n, n, |i, j| m.scalar(&labels[i], &labels[j]));
    let min_eigenvalue = gram.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let fock: Vec<usize> = (0..n).filter(|&i| labels[i].beta.is_vertex()).collect();
    let fock_deviation = fock
        .iter()
        .flat_map(|&i| fock.iter().map(move |&j| (i, j)))
        .map(|(i, j)| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    XiGram { size: n, labels, gram, min_eigenvalue, fock_deviation }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugateGramReport {
    pub cutoff: usize,
    pub labels: usize,
    pub max_deviation: f64,
    /// Whether the left-inner-product side used Perron closed forms.
    pub perron_weights: bool,
}

/// Both sides of the intertwiner identity
/// `(W̄_{μ,ν} | W̄_{ρ,σ}) = (W_{ρ,σ} | W_{μ,ν})`.
///
/// The left side is assembled from left inner products of path tensors and
/// the operator `q`, with Perron weights when the graph is primitive. The right
/// side reduces the word `S_σ S_ρ^* S_μ S_ν^*` and applies `Φ_∞` with the
/// extrapolated limits.
pub fn conjugate_gram_equality(g: &Graph, cutoff: usize, n_max: usize, exec: Execution) -> Result<ConjugateGramReport, FockError> {
    let weights = PathWeights::new(g, 2 * cutoff, n_max.max(2 * cutoff + 1), exec)?;
    let labels = xi_labels(g, cutoff);
    let nv = g.vertex_count();
    let perron_weights = g.is_primitive();
    let q_coeff = |p: &Path| -> f64 {
        if perron_weights {
            weights.omega_perron(p).unwrap_or_else(|| weights.omega(p))
        } else {
            weights.omega(p)
        }
    };
    // Left inner product of path tensors: `_A(x|y) = [x = y] δ_{r(x)}`.
    let left = |x: &Path, y: &Path| -> Vec<f64> {
        let mut out = vec![0.0; nv];
        if x == y {
            out[x.range()] = 1.0;
        }
        out
    };
    let conj_side = |mu: &XiLabel, rho: &XiLabel| -> Vec<f64> {
        let (m, n) = (&mu.alpha, &mu.beta);
        let (r, s) = (&rho.alpha, &rho.beta);
        if r.len() >= m.len() {
            // _A(q(σ) | ν (μ|ρ_in)_A ρ_f)
            let (r_in, r_f) = r.split_at(m.len(), g);
            if r_in != *m {
                return vec![0.0; nv];
            }
            match n.concat(&r_f) {
                Some(target) => left(s, &target).into_iter().map(|x| x * q_coeff(s)).collect(),
                None => vec![0.0; nv],
            }
        } else {
            // _A(q(σ (ρ|μ_in)_A μ_f) | ν)
            let (m_in, m_f) = m.split_at(r.len(), g);
            if m_in != *r {
                return vec![0.0; nv];
            }
            match s.concat(&m_f) {
                Some(x) => left(&x, n).into_iter().map(|y| y * q_coeff(&x)).collect(),
                None => vec![0.0; nv],
            }
        }
    };
    let word_side = |rho: &XiLabel, mu: &XiLabel| -> Vec<f64> {
        let mut out = vec![0.0; nv];
        if let Some((v, val)) = reduce_and_expect(&rho.alpha, &rho.beta, &mu.alpha, &mu.beta, &weights) {
            out[v] = val;
        }
        out
    };
    let pairs: Vec<(usize, usize)> = (0..labels.len()).flat_map(|i| (0..labels.len()).map(move |j| (i, j))).collect();
    let devs = exec::map(exec, &pairs, |&(i, j)| {
        let a = conj_side(&labels[i], &labels[j]);
        let b = word_side(&labels[j], &labels[i]);
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    });
    Ok(ConjugateGramReport {
        cutoff,
        labels: labels.len(),
        max_deviation: devs.into_iter().fold(0.0, f64::max),
        perron_weights,
    })
}

/// `Φ_∞((S_ρ S_σ^*)^* S_μ S_ν^*)` by reducing `S_ρ^* S_μ` edge by edge.
fn reduce_and_expect(rho: &Path, sigma: &Path, mu: &Path, nu: &Path, weights: &PathWeights) -> Option<(usize, f64)> {
    if rho.range() != mu.range() {
        return None;
    }
    let (re, me) = (rho.edges(), mu.edges());
    let common = re.len().min(me.len());
    if re[..common] != me[..common] {
        return None;
    }
    // S_σ S_ρ^* S_μ S_ν^* = S_σ S_{μ'} S_ν^*  or  S_σ S_{ρ'}^* S_ν^*.
    let (left, right) = if me.len() >= re.len() {
        let rest = mu.strip_prefix(rho)?;
        (sigma.concat(&rest)?, nu.clone())
    } else {
        let rest = rho.strip_prefix(mu)?;
        (sigma.clone(), nu.concat(&rest)?)
    };
    (left == right).then(|| (left.range(), weights.omega(&left)))
}

/// The second tensor factor: either `Ξ_{E^op}` or the conjugate module.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpLabel {
    /// `W_{a,b}` in the opposite graph.
    Op(XiLabel),
    /// `c^{-1/2} W̄_{1,σ}` for a path `σ` of the graph.
    Conj(Path),
}

impl OpLabel {
    fn degree(&self) -> i64 {
        match self {
            OpLabel::Op(l) => l.degree(),
            OpLabel::Conj(p) => p.len() as i64,
        }
    }

    fn right_support(&self) -> usize {
        match self {
            OpLabel::Op(l) => l.right_support(),
            OpLabel::Conj(p) => p.range(),
        }
    }
}

/// `W_{α,β} ⊗ b ⊗ δ_v` with both factors right-supported at `v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TensorLabel {
    pub e: XiLabel,
    pub op: OpLabel,
    pub v: usize,
}

impl TensorLabel {
    fn block(&self) -> (i64, i64) {
        (self.e.degree(), self.op.degree())
    }

    fn degree(&self) -> i64 {
        self.e.degree() + self.op.degree()
    }
}

struct TensorModel<'a> {
    graph: &'a Graph,
    e: XiModule<'a>,
    op: XiModule<'a>,
    /// `c_k(v)^{-1}` for the conjugate factor.
    conj_scale: Option<Vec<Vec<f64>>>,
}

impl TensorModel<'_> {
    fn op_inner(&self, a: &OpLabel, b: &OpLabel) -> Option<(usize, f64)> {
        match (a, b) {
            (OpLabel::Op(x), OpLabel::Op(y)) => self.op.inner(x, y),
            (OpLabel::Conj(s), OpLabel::Conj(t)) if s == t => {
                let w = self.e.weights.omega(s);
                let scale = if s.is_vertex() {
                    1.0
                } else {
                    self.conj_scale.as_ref().map_or(1.0, |c| 1.0 / c[s.len() - 1][s.range()])
                };
                Some((s.range(), w * scale))
            }
            _ => None,
        }
    }

    fn inner(&self, x: &TensorLabel, y: &TensorLabel) -> f64 {
        if x.v != y.v {
            return 0.0;
        }
        let Some((u, a)) = self.e.inner(&x.e, &y.e) else { return 0.0 };
        let Some((w, b)) = self.op_inner(&x.op, &y.op) else { return 0.0 };
        if u != x.v || w != x.v {
            return 0.0;
        }
        a * b
    }

    fn combo_inner(&self, x: &[(TensorLabel, f64)], y: &[(TensorLabel, f64)]) -> f64 {
        x.iter().flat_map(|(a, ca)| y.iter().map(move |(b, cb)| ca * cb * self.inner(a, b))).sum()
    }

    /// `V δ_λ` as a combination of labels.
    fn v_column(&self, lambda: &Path, dual: DualChoice) -> Vec<(TensorLabel, f64)> {
        let m = lambda.len();
        let coeff = 1.0 / ((m + 1) as f64).sqrt();
        (0..=m)
            .map(|j| {
                let (head, tail) = lambda.split_at(j, self.graph);
                let v = head.source();
                let op = match dual {
                    DualChoice::Eop => OpLabel::Op(XiLabel::creation(tail.reversed())),
                    DualChoice::EbarOp => OpLabel::Conj(tail),
                };
                (TensorLabel { e: XiLabel::creation(head), op, v }, coeff)
            })
            .collect()
    }
}

/// `S_e ⊗ 1` on labels.
fn shift_label(g: &Graph, e: usize, x: &TensorLabel) -> Option<TensorLabel> {
    let alpha = g.edge_path(e).concat(&x.e.alpha)?;
    Some(TensorLabel { e: XiLabel { alpha, beta: x.e.beta.clone() }, ..x.clone() })
}

/// `S_e^* ⊗ 1` on labels.
fn unshift_label(g: &Graph, e: usize, x: &TensorLabel) -> Option<TensorLabel> {
    let ep = g.edge_path(e);
    if x.e.alpha.is_vertex() {
        if x.e.alpha.range() != g.edge(e).range {
            return None;
        }
        let beta = x.e.beta.concat(&ep)?;
        return Some(TensorLabel { e: XiLabel { alpha: Path::vertex(g.edge(e).source), beta }, ..x.clone() });
    }
    let alpha = x.e.alpha.strip_prefix(&ep)?;
    Some(TensorLabel { e: XiLabel { alpha, beta: x.e.beta.clone() }, ..x.clone() })
}

/// Gram-orthonormalised span of a label set, block by block.
struct OrthoSpace<L> {
    labels: Vec<L>,
    index: HashMap<L, usize>,
    blocks: Vec<OrthoBlock>,
    /// `(block, position)` of each label.
    place: Vec<(usize, usize)>,
    dim: usize,
    dropped: Vec<String>,
}

struct OrthoBlock {
    key: (i64, i64),
    members: Vec<usize>,
    /// Coordinates of a label combination: `Λ^{-1/2} U^T G`.
    coords: DMatrix<f64>,
    /// Orthonormal vectors as label combinations: `U Λ^{-1/2}`.
    basis: DMatrix<f64>,
    offset: usize,
}

impl<L: Clone + Eq + std::hash::Hash> OrthoSpace<L> {
    fn new(
        labels: Vec<L>,
        key: impl Fn(&L) -> (i64, i64),
        inner: impl Fn(&L, &L) -> f64 + Sync,
        exec: Execution,
        tol: f64,
    ) -> Result<Self, FockError>
    where
        L: Sync,
    {
        let mut groups: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            groups.entry(key(l)).or_default().push(i);
        }
        let groups: Vec<((i64, i64), Vec<usize>)> = groups.into_iter().collect();
        let decomposed = exec::map(exec, &groups, |(k, members)| {
            let n = members.len();
            let gram = DMatrix::from_fn(n, n, |i, j| inner(&labels[members[i]], &labels[members[j]]));
            let eig = gram.clone().symmetric_eigen();
            (*k, members.clone(), gram, eig)
        });
        let mut blocks = Vec::new();
        let mut place = vec![(0, 0); labels.len()];
        let mut dropped = Vec::new();
        let mut offset = 0;
        for (key, members, gram, eig) in decomposed {
            let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
            let floor = tol * top.max(1.0);
            if let Some(&bad) = eig.eigenvalues.iter().find(|&&x| x < -floor) {
                return Err(FockError::IndefiniteGram { block: format!("{key:?}"), eigenvalue: bad });
            }
            let keep: Vec<usize> = (0..members.len()).filter(|&i| eig.eigenvalues[i] > floor).collect();
            if keep.is_empty() {
                dropped.push(format!("block {key:?}: {} labels of zero norm", members.len()));
            }
            let mut basis = DMatrix::zeros(members.len(), keep.len());
            for (c, &i) in keep.iter().enumerate() {
                let s = eig.eigenvalues[i].sqrt();
                for r in 0..members.len() {
                    basis[(r, c)] = eig.eigenvectors[(r, i)] / s;
                }
            }
            let coords = basis.transpose() * &gram;
            let b = blocks.len();
            for (pos, &m) in members.iter().enumerate() {
                place[m] = (b, pos);
            }
            blocks.push(OrthoBlock { key, members, coords, basis, offset });
            offset += keep.len();
        }
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Ok(OrthoSpace { labels, index, blocks, place, dim: offset, dropped })
    }

    /// Coordinates of a label combination. Labels outside the set are
    /// ignored.
    fn coords(&self, combo: &[(L, f64)]) -> DVector<f64> {
        let mut per_block: HashMap<usize, DVector<f64>> = HashMap::new();
        for (l, cf) in combo {
            let Some(&i) = self.index.get(l) else { continue };
            let (b, pos) = self.place[i];
            let v = per_block.entry(b).or_insert_with(|| DVector::zeros(self.blocks[b].members.len()));
            v[pos] += cf;
        }
        let mut out = DVector::zeros(self.dim);
        for (b, v) in per_block {
            let blk = &self.blocks[b];
            let c = &blk.coords * v;
            out.rows_mut(blk.offset, c.len()).copy_from(&c);
        }
        out
    }

    /// Matrix of a monomial label map on the blocks selected by `domain`.
    fn operator(&self, map: impl Fn(&L) -> Option<L>, domain: impl Fn((i64, i64)) -> bool) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for blk in &self.blocks {
            if !domain(blk.key) {
                continue;
            }
            for k in 0..blk.basis.ncols() {
                let combo: Vec<(L, f64)> = blk
                    .members
                    .iter()
                    .enumerate()
                    .filter_map(|(r, &i)| map(&self.labels[i]).map(|l| (l, blk.basis[(r, k)])))
                    .collect();
                out.set_column(blk.offset + k, &self.coords(&combo));
            }
        }
        out
    }

    fn block_indices(&self, pred: impl Fn((i64, i64)) -> bool) -> Vec<usize> {
        self.blocks
            .iter()
            .filter(|b| pred(b.key))
            .flat_map(|b| b.offset..b.offset + b.basis.ncols())
            .collect()
    }
}

/// Tunables of the explicit Ξ model.
#[derive(Debug, Clone, Copy)]
pub struct KpConfig {
    pub n_max: usize,
    /// Relative eigenvalue floor for Gram orthonormalisation.
    pub eig_tol: f64,
    /// Cap on the number of tensor labels.
    pub max_labels: usize,
    pub exec: Execution,
}

impl Default for KpConfig {
    fn default() -> Self {
        KpConfig { n_max: 64, eig_tol: 1e-10, max_labels: 12_000, exec: Execution::Parallel }
    }
}

/// Explicit truncation of `Ξ_E ⊗ Ξ_{op} ⊗ L²(G⁰)` with the isometry `V`.
pub struct KpProjection {
    pub dual: DualChoice,
    pub level: usize,
    graph: Graph,
    fock: Vec<Path>,
    space: OrthoSpace<TensorLabel>,
    /// `V` in orthonormal coordinates, one column per Fock path.
    v: DMatrix<f64>,
    adjoint_formula_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KpReport {
    pub dual: DualChoice,
    pub level: usize,
    pub fock_dim: usize,
    pub xi_labels: usize,
    pub xi_dim: usize,
    /// `‖V^*V - 1‖` on Fock levels `≤ L-1`.
    pub isometry_defect: f64,
    /// `‖P² - P‖`.
    pub projection_residual: f64,
    /// `‖(2P-1)² - 1‖`.
    pub symmetry_residual: f64,
    pub adjoint_formula_deviation: Option<f64>,
    pub dropped_blocks: Vec<String>,
}

fn xi_side_labels(g: &Graph, max_alpha: usize) -> Vec<XiLabel> {
    let mut out = Vec::new();
    for a in g.paths_up_to(max_alpha) {
        out.push(XiLabel::creation(a.clone()));
        for f in 0..g.edge_count() {
            if g.edge(f).source == a.source() {
                out.push(XiLabel::new(a.clone(), g.edge_path(f)));
            }
        }
    }
    out
}

fn require_no_sinks(g: &Graph) -> Result<(), FockError> {
    match g.sinks().first() {
        Some(&v) => Err(FockError::Sink(g.vertex_name(v).to_string())),
        None => Ok(()),
    }
}

/// Assembles `V` against Gram-orthonormalised bases.
pub fn build_kp_projection(g: &Graph, level: usize, dual: DualChoice, cfg: KpConfig) -> Result<KpProjection, FockError> {
    if level < 2 {
        return Err(FockError::LevelTooSmall(level));
    }
    require_no_sinks(g)?;
    let weights = PathWeights::new(g, 1, cfg.n_max, cfg.exec)?;
    let opg = g.opposite();
    let op_weights = PathWeights::new(&opg, 1, cfg.n_max, cfg.exec)?;
    let conj_scale = match dual {
        DualChoice::Eop => None,
        DualChoice::EbarOp => {
            let k_max = level.min(cfg.n_max - 1);
            let ss = super_strong_check(g, k_max, cfg.n_max.max(k_max + 1), 1e-8, cfg.exec)?;
            if let Some(w) = ss.witness {
                return Err(FockError::SuperStrongFails(w));
            }
            ss.constants
        }
    };
    let conj_weights;
    let e_weights = match dual {
        DualChoice::Eop => &weights,
        DualChoice::EbarOp => {
            conj_weights = PathWeights::new(g, level, cfg.n_max.max(level + 1), cfg.exec)?;
            &conj_weights
        }
    };
    let model = TensorModel {
        graph: g,
        e: XiModule { graph: g, weights: e_weights },
        op: XiModule { graph: &opg, weights: &op_weights },
        conj_scale,
    };

    let lvl = level as i64;
    let e_labels = xi_side_labels(g, level + 1);
    let op_labels: Vec<OpLabel> = match dual {
        DualChoice::Eop => opg.paths_up_to(level).into_iter().map(|a| OpLabel::Op(XiLabel::creation(a))).collect(),
        DualChoice::EbarOp => g.paths_up_to(level).into_iter().map(OpLabel::Conj).collect(),
    };
    let mut labels = Vec::new();
    for x in &e_labels {
        for b in &op_labels {
            let v = x.right_support();
            if b.right_support() != v {
                continue;
            }
            let t = TensorLabel { e: x.clone(), op: b.clone(), v };
            if t.degree() <= lvl && t.degree() >= -1 {
                labels.push(t);
            }
        }
    }
    if labels.len() > cfg.max_labels {
        return Err(FockError::BasisTooLarge { size: labels.len(), cap: cfg.max_labels });
    }
    labels.sort();
    let space = OrthoSpace::new(labels, TensorLabel::block, |a, b| model.inner(a, b), cfg.exec, cfg.eig_tol)?;

    let fock = g.paths_up_to(level);
    let mut v = DMatrix::zeros(space.dim, fock.len());
    for (j, lambda) in fock.iter().enumerate() {
        v.set_column(j, &space.coords(&model.v_column(lambda, dual)));
    }

    let adjoint_formula_deviation = (dual == DualChoice::Eop).then(|| {
        let fidx: HashMap<&Path, usize> = fock.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let cols: Vec<Vec<(TensorLabel, f64)>> = fock.iter().map(|l| model.v_column(l, dual)).collect();
        let devs = exec::map(cfg.exec, &space.labels, |t| {
            let mut formula = vec![0.0; fock.len()];
            if let Some((j, val)) = adjoint_formula(g, &weights, &op_weights, t) {
                if let Some(&i) = fidx.get(&j) {
                    formula[i] = val;
                }
            }
            cols.iter()
                .enumerate()
                .map(|(i, col)| (model.combo_inner(col, &[(t.clone(), 1.0)]) - formula[i]).abs())
                .fold(0.0, f64::max)
        });
        devs.into_iter().fold(0.0, f64::max)
    });

    Ok(KpProjection { dual, level, graph: g.clone(), fock, space, v, adjoint_formula_deviation })
}

/// Closed form of `V^*(W_{α,β} ⊗ W_{a,b} ⊗ δ_v)`: nonzero only when `β`
/// ends `α` and `b` ends `a`.
fn adjoint_formula(g: &Graph, w: &PathWeights, w_op: &PathWeights, t: &TensorLabel) -> Option<(Path, f64)> {
    let OpLabel::Op(op) = &t.op else { return None };
    let (alpha, beta) = (&t.e.alpha, &t.e.beta);
    let (a, b) = (&op.alpha, &op.beta);
    if beta.len() > alpha.len() || b.len() > a.len() {
        return None;
    }
    if alpha.edges()[alpha.len() - beta.len()..] != *beta.edges() || a.edges()[a.len() - b.len()..] != *b.edges() {
        return None;
    }
    if beta.range() != t.v || b.range() != t.v {
        return None;
    }
    let (head, _) = alpha.split_at(alpha.len() - beta.len(), g);
    let opg = g.opposite();
    let (c, _) = a.split_at(a.len() - b.len(), &opg);
    let lambda = head.concat(&c.reversed())?;
    let deg = lambda.len() as f64;
    Some((lambda, w.omega(beta) * w_op.omega(b) / (deg + 1.0).sqrt()))
}

fn eig_residuals(vtv: &DMatrix<f64>) -> (f64, f64) {
    let ev = vtv.clone().symmetric_eigen().eigenvalues;
    let defect = ev.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    let proj = ev.iter().map(|x| (x * (x - 1.0)).abs()).fold(0.0, f64::max);
    (defect, proj)
}

impl KpProjection {
    pub fn xi_dim(&self) -> usize {
        self.space.dim
    }

    pub fn fock_dim(&self) -> usize {
        self.fock.len()
    }

    fn interior_columns(&self) -> Vec<usize> {
        (0..self.fock.len()).filter(|&i| self.fock[i].len() < self.level).collect()
    }

    pub fn report(&self) -> KpReport {
        let cols = self.interior_columns();
        let vi = self.v.select_columns(&cols);
        let (isometry_defect, _) = eig_residuals(&(vi.transpose() * &vi));
        // P² - P = V (V^*V - 1) V^*, whose norm is max |κ(κ-1)| over the
        // spectrum of V^*V.
        let (_, projection_residual) = eig_residuals(&(self.v.transpose() * &self.v));
        KpReport {
            dual: self.dual,
            level: self.level,
            fock_dim: self.fock.len(),
            xi_labels: self.space.labels.len(),
            xi_dim: self.space.dim,
            isometry_defect,
            projection_residual,
            symmetry_residual: 4.0 * projection_residual,
            adjoint_formula_deviation: self.adjoint_formula_deviation,
            dropped_blocks: self.space.dropped.clone(),
        }
    }

    /// `‖Π_m [P, S_e ⊗ 1]‖` for each degree `m` in `1..=L`.
    pub fn commutator_levels(&self, e: usize) -> Result<Vec<(usize, f64)>, FockError> {
        if e >= self.graph.edge_count() {
            return Err(FockError::NoSuchEdge(e));
        }
        let lvl = self.level as i64;
        let g = &self.graph;
        let s = self.space.operator(|x| shift_label(g, e, x), |(a, b)| a + b < lvl);
        let vt = self.v.transpose();
        let comm = &self.v * (&vt * &s) - (&s * &self.v) * &vt;
        let dom = self.space.block_indices(|(a, b)| a + b < lvl);
        let mut out = Vec::new();
        for m in 1..=self.level {
            let rows = self.space.block_indices(|(a, b)| a + b == m as i64);
            let block = comm.select_rows(&rows).select_columns(&dom);
            let norm = if block.is_empty() { 0.0 } else { block.singular_values().iter().cloned().fold(0.0, f64::max) };
            out.push((m, norm));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HomotopyResidual {
    pub t: f64,
    pub residual: f64,
}

/// `max ‖ℙ_t² - ℙ_t‖` for `ℙ_t = Z_t Z_t^*`, `Z_t = (V ; tY)/√(1+t²)`, where
/// `Y δ_μ = W_{μ,1}` lands in the orthonormalised span of `Ξ_E`.
pub fn homotopy_pt_check(g: &Graph, level: usize, t_samples: &[f64], cfg: KpConfig) -> Result<Vec<HomotopyResidual>, FockError> {
    let kp = build_kp_projection(g, level, DualChoice::Eop, cfg)?;
    let weights = PathWeights::new(g, 1, cfg.n_max, cfg.exec)?;
    let m = XiModule { graph: g, weights: &weights };
    let labels: Vec<XiLabel> =
        xi_side_labels(g, level + 1).into_iter().filter(|l| l.degree() <= level as i64).collect();
    let h2 = OrthoSpace::new(labels, |l| (l.degree(), 0), |a, b| m.scalar(a, b), cfg.exec, cfg.eig_tol)?;
    let mut y = DMatrix::zeros(h2.dim, kp.fock.len());
    for (j, mu) in kp.fock.iter().enumerate() {
        y.set_column(j, &h2.coords(&[(XiLabel::creation(mu.clone()), 1.0)]));
    }
    let vtv = kp.v.transpose() * &kp.v;
    let yty = y.transpose() * &y;
    Ok(t_samples
        .iter()
        .map(|&t| {
            let zz = (&vtv + &yty * (t * t)) / (1.0 + t * t);
            HomotopyResidual { t, residual: eig_residuals(&zz).1 }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub l: usize,
    pub norm: f64,
    pub reference: f64,
    /// `norm / √(2/l)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayTable {
    pub edge: String,
    pub level: usize,
    /// `‖Π_m [P, S_e ⊗ 1]‖` for `m = 1..=level`.
    pub per_level: Vec<(usize, f64)>,
    pub rows: Vec<DecayRow>,
}

/// Paths of length `m` that represent every sector up to symmetry. For a
/// single vertex all edges carry the same weight, so the sector norms depend
/// only on a bounded prefix; elsewhere every path is used.
fn sector_representatives(g: &Graph, m: usize, e: usize) -> Vec<Path> {
    const EXHAUSTIVE: usize = 6;
    if g.vertex_count() > 1 || m <= EXHAUSTIVE {
        return g.paths_of_length(m);
    }
    let prefixes = g.paths_of_length(3);
    let fillers: Vec<usize> = std::iter::once(e).chain((0..g.edge_count()).find(|&f| f != e)).collect();
    let mut out = Vec::new();
    for p in &prefixes {
        for &f in &fillers {
            let mut edges = p.edges().to_vec();
            edges.resize(m, f);
            out.extend(g.path_from_edges(&edges));
        }
    }
    out
}

/// Per-level commutator norms from the sector decomposition: `[P, S_e ⊗ 1]`
/// maps `V δ_λ` into the span of `X^{eλ}_j`, and `V δ_μ` back through
/// `S_e^*` into the span of `X^{μ'}_j` and `W_{s(e),e} ⊗ W_{μ^op,1}`. Every
/// sector is a handful of labels, so the norms are exact at any level.
pub fn commutator_levels_by_sector(g: &Graph, e: usize, level: usize, n_max: usize, exec: Execution) -> Result<Vec<(usize, f64)>, FockError> {
    if e >= g.edge_count() {
        return Err(FockError::NoSuchEdge(e));
    }
    require_no_sinks(g)?;
    let weights = PathWeights::new(g, 1, n_max, exec)?;
    let opg = g.opposite();
    let op_weights = PathWeights::new(&opg, 1, n_max, exec)?;
    let model = TensorModel {
        graph: g,
        e: XiModule { graph: g, weights: &weights },
        op: XiModule { graph: &opg, weights: &op_weights },
        conj_scale: None,
    };
    let ep = g.edge_path(e);
    let u = |l: &Path| model.v_column(l, DualChoice::Eop);
    let residual_norm = |y: &[(TensorLabel, f64)], proj: Option<Vec<(TensorLabel, f64)>>| {
        let yy = model.combo_inner(y, y);
        let overlap = proj.map_or(0.0, |p| {
            let pp = model.combo_inner(&p, &p);
            let py = model.combo_inner(&p, y);
            py * py / pp
        });
        (yy - overlap).max(0.0).sqrt()
    };
    let levels: Vec<usize> = (1..=level).collect();
    let per_level = exec::map(exec, &levels, |&m| {
        // Rows at degree m from (1-P) S P on V δ_λ, |λ| = m-1.
        let a = sector_representatives(g, m - 1, e)
            .iter()
            .filter_map(|lambda| {
                let el = ep.concat(lambda)?;
                let y: Vec<(TensorLabel, f64)> =
                    u(lambda).iter().filter_map(|(t, cf)| shift_label(g, e, t).map(|s| (s, *cf))).collect();
                Some(residual_norm(&y, Some(u(&el))))
            })
            .fold(0.0, f64::max);
        // Rows at degree m from P S (1-P), via its adjoint on V δ_μ, |μ| = m.
        let b = sector_representatives(g, m, e)
            .iter()
            .map(|mu| {
                let y: Vec<(TensorLabel, f64)> =
                    u(mu).iter().filter_map(|(t, cf)| unshift_label(g, e, t).map(|s| (s, *cf))).collect();
                residual_norm(&y, mu.strip_prefix(&ep).map(|rest| u(&rest)))
            })
            .fold(0.0, f64::max);
        (m, a.max(b))
    });
    Ok(per_level)
}

/// `‖(1 - P_{≤l}) [P, S_e ⊗ 1]‖` and its ratio to `√(2/l)`.
pub fn commutator_decay(g: &Graph, e: usize, l_values: &[usize], level: usize, n_max: usize, exec: Execution) -> Result<DecayTable, FockError> {
    let per_level = commutator_levels_by_sector(g, e, level, n_max, exec)?;
    let rows = l_values
        .iter()
        .map(|&l| {
            assert!(l >= 1 && l + 2 <= level, "l must lie in 1..=level-2");
            let norm = per_level.iter().filter(|(m, _)| *m > l).map(|x| x.1).fold(0.0, f64::max);
            let reference = (2.0 / l as f64).sqrt();
            DecayRow { l, norm, reference, ratio: norm / reference }
        })
        .collect();
    Ok(DecayTable { edge: g.edge(e).name.clone(), level, per_level, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    #[test]
    fn basis_sizes() {
        assert_eq!(build_fock_rep(&fixtures::single_loop(), 4, DEFAULT_BASIS_CAP).unwrap().dim(), 5);
        assert_eq!(build_fock_rep(&fixtures::cuntz(2), 3, DEFAULT_BASIS_CAP).unwrap().dim(), 15);
        assert_eq!(build_fock_rep(&fixtures::two_loop_bridge(), 2, DEFAULT_BASIS_CAP).unwrap().dim(), 14);
    }

    #[test]
    fn ck_relations_on_interior() {
        for (_, g) in fixtures::all() {
            let rep = build_fock_rep(&g, 4, DEFAULT_BASIS_CAP).unwrap();
            assert_eq!(rep.ck_residuals().max(), 0.0);
        }
    }

    #[test]
    fn symbolic_projection() {
        assert!(symbolic::projection_identity_holds(symbolic::Relations::PartialIsometry));
        assert!(symbolic::projection_identity_holds(symbolic::Relations::Unitary));
    }

    #[test]
    fn frame_isometry_of_o2() {
        let rep = build_fock_rep(&fixtures::cuntz(2), 6, DEFAULT_BASIS_CAP).unwrap();
        let r = build_w_ew(&rep, &[0.0, 1.0, 3.0]);
        assert!(r.isometry_residual < 1e-12 && r.range_residual < 1e-12);
        assert_eq!(r.vacuum_defect, 1.0);
        assert!(r.projection.iter().all(|x| x.residual < 1e-12));
        assert!(r.commutation_residual < 1e-12);
    }

    #[test]
    fn index_of_shift() {
        let r = fredholm_index_compressed(&fixtures::single_loop(), 5, DEFAULT_BASIS_CAP).unwrap();
        assert!(r.stable);
        assert_eq!(r.index, 1);
    }

    #[test]
    fn loop_isometry() {
        let kp = build_kp_projection(&fixtures::single_loop(), 6, DualChoice::Eop, KpConfig::default()).unwrap();
        let r = kp.report();
        assert!(r.isometry_defect < 1e-10, "{r:?}");
        assert!(r.adjoint_formula_deviation.unwrap() < 1e-12);
    }

    #[test]
    fn sector_model_matches_explicit_model() {
        for g in [fixtures::cuntz(2), fixtures::quantum_su2()] {
            let kp = build_kp_projection(&g, 4, DualChoice::Eop, KpConfig::default()).unwrap();
            for e in 0..g.edge_count() {
                let explicit = kp.commutator_levels(e).unwrap();
                let sector = commutator_levels_by_sector(&g, e, 4, 64, Execution::Parallel).unwrap();
                for ((m, a), (_, b)) in explicit.iter().zip(&sector) {
                    assert!((a - b).abs() < 1e-9, "edge {e} level {m}: {a} vs {b}");
                }
            }
        }
    }
}

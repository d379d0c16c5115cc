//! Watatani indices, Perron data and the q-coefficient limits.
//!
//! The index `e^{β_n} = A^n 1` is kept exactly. For a path `α` of length `k`
//! the q-coefficient is the limit of
//! `r_n(α) = e^{β_{n-k}}(s(α)) / e^{β_n}(r(α))`; it depends only on `k`,
//! `r(α)` and `s(α)`. Limits are estimated by exact-rational Richardson
//! extrapolation in `h = 1/n` on far-tail points and classified by fitting
//! the residuals on `[n_max/2, n_max]`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::graph::{Graph, Path};

#[derive(Debug, Error, PartialEq)]
pub enum WatataniError {
    #[error("graph is not primitive; Perron data withheld")]
    NotPrimitive,
    #[error("power iteration did not converge in {0} steps")]
    NoConvergence(usize),
    #[error("vertex `{0}` receives no edge, so the index vanishes there")]
    Source(String),
    #[error("the q-coefficient limit does not exist for a path of length {k} from `{source_vertex}` to `{range_vertex}`")]
    NoLimit { k: usize, range_vertex: String, source_vertex: String },
}

/// `A^n 1` for `n = 0..=top`.
#[derive(Debug, Clone)]
pub struct IndexTable {
    values: Vec<Vec<BigInt>>,
}

impl IndexTable {
    pub fn new(g: &Graph, top: usize) -> Self {
        let a = g.adjacency();
        let n = g.vertex_count();
        let mut values = Vec::with_capacity(top + 1);
        values.push(vec![BigInt::from(1); n]);
        for step in 1..=top {
            let prev: &Vec<BigInt> = &values[step - 1];
            let next: Vec<BigInt> = (0..n)
                .map(|u| (0..n).filter(|&v| a[u][v] > 0).map(|v| &prev[v] * a[u][v]).sum())
                .collect();
            values.push(next);
        }
        IndexTable { values }
    }

    pub fn top(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, n: usize) -> &[BigInt] {
        &self.values[n]
    }

    /// `r_n = e^{β_{n-k}}(s) / e^{β_n}(r)`.
    pub fn ratio(&self, n: usize, k: usize, r: usize, s: usize) -> BigRational {
        BigRational::new(self.values[n - k][s].clone(), self.values[n][r].clone())
    }
}

/// `e^{β_n} = A^n 1`.
pub fn watatani_index(g: &Graph, n: usize) -> Vec<BigInt> {
    IndexTable::new(g, n).at(n).to_vec()
}

#[derive(Debug, Clone, Serialize)]
pub struct PerronData {
    pub eigenvalue: f64,
    /// Right Perron vector `A w = λ w`, normalised to maximum 1.
    pub vector: Vec<f64>,
    /// `|λ_2| / λ`.
    pub gap_ratio: f64,
    pub iterations: usize,
}

/// Power iteration for the Perron data of a primitive graph.
pub fn perron(g: &Graph, tol: f64, max_iter: usize) -> Result<PerronData, WatataniError> {
    if !g.is_primitive() {
        return Err(WatataniError::NotPrimitive);
    }
    let n = g.vertex_count();
    let a = g.adjacency();
    let mut w = vec![1.0f64; n];
    let mut lambda = 0.0;
    for it in 1..=max_iter {
        let next: Vec<f64> = (0..n).map(|u| (0..n).map(|v| a[u][v] as f64 * w[v]).sum()).collect();
        let norm = next.iter().cloned().fold(0.0, f64::max);
        let next: Vec<f64> = next.iter().map(|x| x / norm).collect();
        let diff = next.iter().zip(&w).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        w = next;
        lambda = norm;
        if diff < tol {
            let m = DMatrix::from_fn(n, n, |i, j| a[i][j] as f64);
            let mut moduli: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm()).collect();
            moduli.sort_by(|x, y| y.partial_cmp(x).unwrap());
            let second = moduli.get(1).copied().unwrap_or(0.0);
            return Ok(PerronData { eigenvalue: lambda, vector: w, gap_ratio: second / lambda, iterations: it });
        }
    }
    let _ = lambda;
    Err(WatataniError::NoConvergence(max_iter))
}

/// Natural log of a positive rational, robust to huge numerators and denominators.
pub fn ln_rational(x: &BigRational) -> f64 {
    fn ln_int(x: &BigInt) -> f64 {
        let bits = x.bits();
        if bits < 1000 {
            x.to_f64().unwrap().ln()
        } else {
            let shift = bits - 64;
            let top: BigInt = x >> shift;
            top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
    ln_int(x.numer()) - ln_int(x.denom())
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    sign * ln_rational(&x.abs()).exp()
}

/// Richardson extrapolation to `h = 0` through `(1/n_j, y_j)`.
pub fn richardson_at_zero(points: &[(usize, BigRational)]) -> BigRational {
    let hs: Vec<BigRational> =
        points.iter().map(|(n, _)| BigRational::new(BigInt::from(1), BigInt::from(*n as u64))).collect();
    let mut total = BigRational::zero();
    for (j, (_, y)) in points.iter().enumerate() {
        let mut w = BigRational::from_integer(BigInt::from(1));
        for (i, hi) in hs.iter().enumerate() {
            if i != j {
                w = w * hi / (hi - &hs[j]);
            }
        }
        total += w * y;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Convergence {
    /// The sequence is constant on the window.
    Exact,
    Geometric { rate: f64 },
    Polynomial { exponent: f64 },
    /// No limit was detected.
    None,
}

impl Convergence {
    pub fn converges(&self) -> bool {
        match *self {
            Convergence::Exact => true,
            Convergence::Geometric { rate } => rate < 1.0,
            Convergence::Polynomial { exponent } => exponent > 0.0,
            Convergence::None => false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QLimit {
    pub k: usize,
    pub range: usize,
    pub source: usize,
    pub coefficient: f64,
    /// Set when the sequence is constant on the window.
    #[serde(skip)]
    pub exact: Option<BigRational>,
    pub convergence: Convergence,
    /// Closed form `w(s) / (λ^k w(r))` for primitive graphs.
    pub perron: Option<f64>,
}

/// Below this the extrapolated limit is reported as zero.
pub const SNAP_TO_ZERO: f64 = 1e-9;

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    (slope, rss)
}

/// Limit of `r_n` for paths of length `k` from `s` to `r`, using window
/// `[n_max/2, n_max]` and a table reaching at least `32 n_max + 1`.
pub fn q_limit_for(table: &IndexTable, k: usize, r: usize, s: usize, n_max: usize) -> QLimit {
    assert!(n_max >= 8 && n_max > k, "n_max must exceed the path length and be at least 8");
    assert!(table.top() > 32 * n_max, "index table too short");
    let far: Vec<(usize, BigRational)> = (1..=5).map(|j| {
        let n = n_max << j;
        (n, table.ratio(n, k, r, s))
    }).collect();
    let limit = richardson_at_zero(&far);
    let lo = (n_max / 2).max(k + 1);
    let window: Vec<(usize, BigRational)> = (lo..=n_max).map(|n| (n, table.ratio(n, k, r, s))).collect();
    let odd = table.ratio(32 * n_max + 1, k, r, s);

    let mut out = QLimit { k, range: r, source: s, coefficient: 0.0, exact: None, convergence: Convergence::None, perron: None };
    let constant = window.iter().all(|(_, y)| *y == window[0].1) && far.iter().all(|(_, y)| *y == window[0].1) && odd == window[0].1;
    if constant {
        out.exact = Some(window[0].1.clone());
        out.coefficient = rational_to_f64(&window[0].1);
        out.convergence = Convergence::Exact;
        return out;
    }
    let residuals: Vec<(f64, f64)> = window
        .iter()
        .filter_map(|(n, y)| {
            let d = (y - &limit).abs();
            (!d.is_zero()).then(|| (*n as f64, ln_rational(&d)))
        })
        .collect();
    let tail_err = [(far[4].1.clone()), odd].iter().map(|y| (y - &limit).abs()).max().unwrap();
    let coefficient = rational_to_f64(&limit);
    out.coefficient = if coefficient.abs() < SNAP_TO_ZERO { 0.0 } else { coefficient };
    if residuals.len() < 3 {
        out.convergence = Convergence::Exact;
        return out;
    }
    let mut sorted: Vec<f64> = residuals.iter().map(|p| p.1).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let tail_ok = tail_err.is_zero() || ln_rational(&tail_err) < median + (0.25f64).ln() || rational_to_f64(&tail_err) < 1e-12;
    if !tail_ok {
        out.convergence = Convergence::None;
        return out;
    }
    let ys: Vec<f64> = residuals.iter().map(|p| p.1).collect();
    let ns: Vec<f64> = residuals.iter().map(|p| p.0).collect();
    let logn: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let (slope_p, rss_p) = linear_fit(&logn, &ys);
    let (slope_g, rss_g) = linear_fit(&ns, &ys);
    out.convergence = if rss_g <= rss_p {
        Convergence::Geometric { rate: slope_g.exp() }
    } else {
        Convergence::Polynomial { exponent: -slope_p }
    };
    out
}

/// Cached q-coefficients `ω(k, r, s)` for all lengths up to `k_max`.
#[derive(Debug, Clone)]
pub struct PathWeights {
    pub k_max: usize,
    pub n_max: usize,
    limits: BTreeMap<(usize, usize, usize), QLimit>,
}

impl PathWeights {
    pub fn new(g: &Graph, k_max: usize, n_max: usize, exec: Execution) -> Result<Self, WatataniError> {
        if let Some(&v) = g.sources().first() {
            return Err(WatataniError::Source(g.vertex_name(v).to_string()));
        }
        let table = IndexTable::new(g, 32 * n_max + 2);
        let perron_data = perron(g, 1e-14, 100_000).ok();
        let n = g.vertex_count();
        let keys: Vec<(usize, usize, usize)> =
            (0..=k_max).flat_map(|k| (0..n).flat_map(move |r| (0..n).map(move |s| (k, r, s)))).collect();
        let computed = exec::map(exec, &keys, |&(k, r, s)| {
            let mut q = q_limit_for(&table, k, r, s, n_max);
            if let Some(p) = &perron_data {
                q.perron = Some(p.vector[s] / (p.eigenvalue.powi(k as i32) * p.vector[r]));
            }
            q
        });
        Ok(PathWeights { k_max, n_max, limits: keys.into_iter().zip(computed).collect() })
    }

    pub fn limit(&self, k: usize, r: usize, s: usize) -> &QLimit {
        self.limits.get(&(k, r, s)).expect("path length beyond k_max")
    }

    /// `ω(α)`, the q-coefficient of `δ_α`.
    pub fn omega(&self, p: &Path) -> f64 {
        self.limit(p.len(), p.range(), p.source()).coefficient
    }

    pub fn omega_exact(&self, p: &Path) -> Option<&BigRational> {
        self.limit(p.len(), p.range(), p.source()).exact.as_ref()
    }

    /// `ω` from the Perron closed form when the graph is primitive.
    pub fn omega_perron(&self, p: &Path) -> Option<f64> {
        self.limit(p.len(), p.range(), p.source()).perron
    }

    pub fn all(&self) -> impl Iterator<Item = &QLimit> {
        self.limits.values()
    }
}

/// The q-coefficient of a single path.
pub fn q_limit(g: &Graph, path: &Path, n_max: usize) -> QLimit {
    let table = IndexTable::new(g, 32 * n_max + 2);
    let mut q = q_limit_for(&table, path.len(), path.range(), path.source(), n_max);
    if let Ok(p) = perron(g, 1e-14, 100_000) {
        q.perron = Some(p.vector[path.source()] / (p.eigenvalue.powi(path.len() as i32) * p.vector[path.range()]));
    }
    q
}

/// `Φ_∞(S_μ S_ν^*)` as a function on vertices.
pub fn phi_infinity(g: &Graph, weights: &PathWeights, mu: &Path, nu: &Path) -> Vec<f64> {
    let mut out = vec![0.0; g.vertex_count()];
    if mu == nu {
        out[mu.range()] = weights.omega(mu);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelVerdict {
    pub k: usize,
    pub holds: bool,
    /// Smallest fitted polynomial exponent among the frame elements, if any
    /// converge polynomially.
    pub min_poly_exponent: Option<f64>,
    pub elements: Vec<PathCoefficient>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathCoefficient {
    pub path: String,
    pub coefficient: f64,
    pub convergence: Convergence,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionOneReport {
    pub holds: bool,
    pub min_poly_exponent: Option<f64>,
    pub levels: Vec<LevelVerdict>,
}

/// Convergence of `e^{-β_n} ν e^{β_{n-k}}` for every frame element `δ_α`,
/// `|α| ≤ k_max`, with per-element rates.
pub fn assumption_one_check(g: &Graph, k_max: usize, n_max: usize, exec: Execution) -> Result<AssumptionOneReport, WatataniError> {
    let weights = PathWeights::new(g, k_max, n_max, exec)?;
    let mut levels = Vec::new();
    for k in 1..=k_max {
        let elements: Vec<PathCoefficient> = g
            .paths_of_length(k)
            .iter()
            .map(|p| {
                let q = weights.limit(k, p.range(), p.source());
                PathCoefficient { path: g.path_label(p), coefficient: q.coefficient, convergence: q.convergence }
            })
            .collect();
        let holds = elements.iter().all(|e| e.convergence.converges());
        let min_poly_exponent = elements
            .iter()
            .filter_map(|e| match e.convergence {
                Convergence::Polynomial { exponent } => Some(exponent),
                _ => None,
            })
            .reduce(f64::min);
        levels.push(LevelVerdict { k, holds, min_poly_exponent, elements });
    }
    let holds = levels.iter().all(|l| l.holds);
    let min_poly_exponent = levels.iter().filter_map(|l| l.min_poly_exponent).reduce(f64::min);
    Ok(AssumptionOneReport { holds, min_poly_exponent, levels })
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperStrongWitness {
    pub k: usize,
    pub vertex: String,
    pub first: (String, f64),
    /// When the first coefficient is zero, a path into the same vertex with a
    /// nonzero coefficient, if any.
    pub second: Option<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperStrongReport {
    pub holds: bool,
    /// `c_k(v)` per length `k = 1..=k_max`, when the condition holds.
    pub constants: Option<Vec<Vec<f64>>>,
    pub witness: Option<SuperStrongWitness>,
}

/// Does `q(δ_α) = c_{|α|}(r(α)) δ_α` hold with `c_k` invertible?
pub fn super_strong_check(g: &Graph, k_max: usize, n_max: usize, tol: f64, exec: Execution) -> Result<SuperStrongReport, WatataniError> {
    let weights = PathWeights::new(g, k_max, n_max, exec)?;
    let n = g.vertex_count();
    let mut constants = Vec::new();
    for k in 1..=k_max {
        let paths = g.paths_of_length(k);
        let mut row = vec![f64::NAN; n];
        for v in 0..n {
            let into: Vec<&Path> = paths.iter().filter(|p| p.range() == v).collect();
            let Some(first) = into.first() else { continue };
            let c0 = weights.omega(first);
            let label = |p: &Path| (g.path_label(p), weights.omega(p));
            if c0.abs() < SNAP_TO_ZERO {
                // c_k(v) would have to vanish; pair with a path that does not
                let second = into[1..].iter().find(|p| weights.omega(p).abs() >= SNAP_TO_ZERO).map(|p| label(p));
                return Ok(SuperStrongReport {
                    holds: false,
                    constants: None,
                    witness: Some(SuperStrongWitness { k, vertex: g.vertex_name(v).into(), first: label(first), second }),
                });
            }
            for p in &into[1..] {
                let c = weights.omega(p);
                if (c - c0).abs() > tol * c0.abs().max(1.0) || c.abs() < SNAP_TO_ZERO {
                    return Ok(SuperStrongReport {
                        holds: false,
                        constants: None,
                        witness: Some(SuperStrongWitness {
                            k,
                            vertex: g.vertex_name(v).into(),
                            first: label(first),
                            second: Some(label(p)),
                        }),
                    });
                }
            }
            row[v] = c0;
        }
        constants.push(row);
    }
    Ok(SuperStrongReport { holds: true, constants: Some(constants), witness: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    #[test]
    fn index_of_quantum_su2() {
        let e = watatani_index(&fixtures::quantum_su2(), 5);
        assert_eq!(e, vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn index_of_cuntz() {
        assert_eq!(watatani_index(&fixtures::cuntz(2), 3), vec![BigInt::from(8)]);
    }

    #[test]
    fn richardson_recovers_rational_functions() {
        let pts: Vec<(usize, BigRational)> =
            (1..=5).map(|j| (10usize << j, BigRational::new(BigInt::from(1), BigInt::from((10u64 << j) + 1)))).collect();
        let l = rational_to_f64(&richardson_at_zero(&pts));
        assert!(l.abs() < 1e-9);
    }

    #[test]
    fn fibonacci_perron() {
        let p = perron(&fixtures::fibonacci(), 1e-14, 10_000).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.eigenvalue - phi).abs() < 1e-12);
        assert!(perron(&fixtures::quantum_su2(), 1e-12, 100).is_err());
    }

    #[test]
    fn quantum_su2_coefficients() {
        let g = fixtures::quantum_su2();
        let f = g.path_from_names(&["f"]).unwrap();
        let e = g.path_from_names(&["e"]).unwrap();
        let gg = g.path_from_names(&["g"]).unwrap();
        let qf = q_limit(&g, &f, 40);
        assert_eq!(qf.coefficient, 0.0);
        assert!(matches!(qf.convergence, Convergence::Polynomial { exponent } if (0.8..1.2).contains(&exponent)));
        let qe = q_limit(&g, &e, 40);
        assert_eq!(qe.convergence, Convergence::Exact);
        assert_eq!(qe.coefficient, 1.0);
        assert!((q_limit(&g, &gg, 40).coefficient - 1.0).abs() < 1e-9);
    }
}

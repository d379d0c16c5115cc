//! Sparse complex matrices, spectral norms and exact sparse rank.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Compressed-row sparse complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Sparse {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<Complex64>,
}

impl Sparse {
    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut per_row: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); rows];
        for (i, j, v) in triplets {
            assert!(i < rows && j < cols, "triplet out of range");
            *per_row[i].entry(j).or_insert(Complex64::zero()) += v;
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in per_row {
            for (j, v) in r {
                if v != Complex64::zero() {
                    col_idx.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Sparse { rows, cols, row_ptr, col_idx, vals }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_triplets(rows, cols, std::iter::empty())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, Complex64::new(1.0, 0.0))))
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        Self::from_triplets(d.len(), d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.rows).flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.vals[k])))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .find(|&k| self.col_idx[k] == j)
            .map_or(Complex64::zero(), |k| self.vals[k])
    }

    pub fn adjoint(&self) -> Sparse {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(i, j, v)| (j, i, v.conj())))
    }

    pub fn scale(&self, s: Complex64) -> Sparse {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.drop_zeros()
    }

    fn drop_zeros(self) -> Sparse {
        let (r, c) = (self.rows, self.cols);
        Self::from_triplets(r, c, self.triplets().collect::<Vec<_>>())
    }

    pub fn add(&self, other: &Sparse) -> Sparse {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sum dimension mismatch");
        Self::from_triplets(self.rows, self.cols, self.triplets().chain(other.triplets()).collect::<Vec<_>>())
    }

    pub fn sub(&self, other: &Sparse) -> Sparse {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Sparse) -> Sparse {
        assert_eq!(self.cols, other.rows, "product dimension mismatch");
        let mut trip = Vec::new();
        for i in 0..self.rows {
            let mut acc: HashMap<usize, Complex64> = HashMap::new();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (m, a) = (self.col_idx[k], self.vals[k]);
                for l in other.row_ptr[m]..other.row_ptr[m + 1] {
                    *acc.entry(other.col_idx[l]).or_insert(Complex64::zero()) += a * other.vals[l];
                }
            }
            trip.extend(acc.into_iter().map(|(j, v)| (i, j, v)));
        }
        Self::from_triplets(self.rows, other.cols, trip)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k] * x[self.col_idx[k]]).sum())
            .collect()
    }

    /// Keeps the listed rows and columns, in the given order.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> Sparse {
        let mut rmap = vec![usize::MAX; self.rows];
        for (new, &old) in rows.iter().enumerate() {
            rmap[old] = new;
        }
        let mut cmap = vec![usize::MAX; self.cols];
        for (new, &old) in cols.iter().enumerate() {
            cmap[old] = new;
        }
        Self::from_triplets(
            rows.len(),
            cols.len(),
            self.triplets()
                .filter(|&(i, j, _)| rmap[i] != usize::MAX && cmap[j] != usize::MAX)
                .map(|(i, j, v)| (rmap[i], cmap[j], v))
                .collect::<Vec<_>>(),
        )
    }

    /// Block matrix from a grid of optional blocks.
    pub fn block(grid: &[Vec<Option<&Sparse>>], row_sizes: &[usize], col_sizes: &[usize]) -> Sparse {
        let roff: Vec<usize> = row_sizes.iter().scan(0, |s, &x| { let o = *s; *s += x; Some(o) }).collect();
        let coff: Vec<usize> = col_sizes.iter().scan(0, |s, &x| { let o = *s; *s += x; Some(o) }).collect();
        let mut trip = Vec::new();
        for (bi, row) in grid.iter().enumerate() {
            for (bj, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    assert_eq!((b.rows, b.cols), (row_sizes[bi], col_sizes[bj]), "block size mismatch");
                    trip.extend(b.triplets().map(|(i, j, v)| (roff[bi] + i, coff[bj] + j, v)));
                }
            }
        }
        Self::from_triplets(row_sizes.iter().sum(), col_sizes.iter().sum(), trip)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Exact structural equality with the adjoint.
    pub fn is_self_adjoint(&self) -> bool {
        self.rows == self.cols && self.triplets().all(|(i, j, v)| self.get(j, i) == v.conj())
    }

    /// Largest singular value. Dense SVD for small matrices, power iteration
    /// on `X^* X` otherwise.
    pub fn spectral_norm(&self) -> f64 {
        if self.nnz() == 0 {
            return 0.0;
        }
        if self.rows * self.cols <= 160_000 {
            return self.to_dense().singular_values().iter().cloned().fold(0.0, f64::max);
        }
        power_norm(self, 1e-13, 20_000)
    }
}

/// Power iteration on `X^* X` with a seeded start vector.
pub fn power_norm(x: &Sparse, tol: f64, max_iter: usize) -> f64 {
    let xa = x.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut v: Vec<Complex64> = (0..x.cols()).map(|_| Complex64::new(1.0 + 0.1 * rng.gen::<f64>(), 0.0)).collect();
    let normalise = |v: &mut Vec<Complex64>| {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|z| *z /= n);
        }
        n
    };
    normalise(&mut v);
    let mut last = 0.0;
    for _ in 0..max_iter {
        let mut w = xa.mul_vec(&x.mul_vec(&v));
        let lambda = normalise(&mut w);
        v = w;
        if (lambda - last).abs() <= tol * lambda.max(1e-300) {
            return lambda.sqrt();
        }
        last = lambda;
    }
    last.sqrt()
}

/// Rank over `Q` of an integer matrix given by triplets, by sparse
/// elimination.
pub fn exact_rank(cols: usize, rows: impl IntoIterator<Item = Vec<(usize, i64)>>) -> usize {
    let mut pivots: HashMap<usize, BTreeMap<usize, BigRational>> = HashMap::new();
    let mut rank = 0;
    for row in rows {
        let mut r: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (c, v) in row {
            assert!(c < cols);
            if v != 0 {
                *r.entry(c).or_insert_with(BigRational::zero) += BigRational::from_integer(BigInt::from(v));
            }
        }
        r.retain(|_, v| !v.is_zero());
        while let Some((&c, lead)) = r.iter().next() {
            match pivots.get(&c) {
                Some(p) => {
                    let factor = lead / &p[&c];
                    for (&pc, pv) in p {
                        let e = r.entry(pc).or_insert_with(BigRational::zero);
                        *e -= &factor * pv;
                    }
                    r.retain(|_, v| !v.is_zero());
                }
                None => {
                    pivots.insert(c, r);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

/// Numerical rank of a dense complex matrix.
pub fn numeric_rank(m: &DMatrix<Complex64>, rel_tol: f64) -> usize {
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * top.max(1e-300)).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn product_and_adjoint() {
        let a = Sparse::from_triplets(2, 2, vec![(0, 1, Complex64::new(0.0, 1.0)), (1, 0, c(2.0))]);
        let p = a.mul(&a.adjoint());
        assert_eq!(p.get(0, 0), c(1.0));
        assert_eq!(p.get(1, 1), c(4.0));
        assert!(p.is_self_adjoint());
    }

    #[test]
    fn power_iteration_matches_svd() {
        let n = 500;
        let shift = Sparse::from_triplets(n, n, (0..n - 1).map(|i| (i, i + 1, c(1.0))));
        let x = shift.add(&shift.adjoint()).scale(c(0.5));
        let expected = (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((power_norm(&x, 1e-15, 200_000) - expected).abs() < 1e-6);
    }

    #[test]
    fn rank_over_rationals() {
        let rows = vec![vec![(0, 1), (1, 2)], vec![(0, 2), (1, 4)], vec![(2, 3)]];
        assert_eq!(exact_rank(3, rows), 2);
    }
}

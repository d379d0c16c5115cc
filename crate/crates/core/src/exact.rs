//! Exact integer linear algebra and finitely generated abelian groups.
//!
//! Groups are kept as presentations `Z^m / im(R)`. Homomorphisms are integer
//! matrices acting on the presentation generators. Everything is `BigInt`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("ill-defined homomorphism: relation {relation} of the domain does not map into the relations of the codomain")]
    IllDefined { relation: usize },
    #[error("projection datum is not idempotent")]
    NotIdempotent,
}

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> BigInt) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        IntMatrix { rows, cols, data }
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        Self::from_fn(r, c, |i, j| BigInt::from(rows[i][j]))
    }

    pub fn from_u64_rows(rows: &[Vec<u64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| BigInt::from(rows[i][j]))
    }

    /// Columns given as vectors; `rows` fixes the height when there are none.
    pub fn from_columns(rows: usize, columns: &[Vec<BigInt>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i].clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).fold(BigInt::zero(), |acc, j| acc + self.get(i, j) * &v[j]))
            .collect()
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> IntMatrix {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// `[self | other]`.
    pub fn hcat(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                other.get(i, j - self.cols).clone()
            }
        })
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> IntMatrix {
        let (r0, c0) = (rows.start, cols.start);
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(r0 + i, c0 + j).clone())
    }

    /// Entries as `i64` rows, panicking if any entry overflows.
    pub fn to_i64_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_i64().expect("entry fits in i64")).collect())
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row_dst += k * row_src
    fn add_row(&mut self, dst: usize, src: usize, k: &BigInt) {
        for j in 0..self.cols {
            let v = &self.data[src * self.cols + j] * k;
            self.data[dst * self.cols + j] += v;
        }
    }

    /// col_dst += k * col_src
    fn add_col(&mut self, dst: usize, src: usize, k: &BigInt) {
        for i in 0..self.rows {
            let v = &self.data[i * self.cols + src] * k;
            self.data[i * self.cols + dst] += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -&self.data[r * self.cols + j];
            self.data[r * self.cols + j] = v;
        }
    }

    fn negate_col(&mut self, c: usize) {
        for i in 0..self.rows {
            let v = -&self.data[i * self.cols + c];
            self.data[i * self.cols + c] = v;
        }
    }
}

/// Writes a big integer as a JSON number when it fits, else as a string.
fn serialize_bigint<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    match x.to_i64() {
        Some(v) => s.serialize_i64(v),
        None => s.serialize_str(&x.to_string()),
    }
}

struct BigIntJson<'a>(&'a BigInt);

impl Serialize for BigIntJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_bigint(self.0, s)
    }
}

struct RowJson<'a>(&'a [BigInt]);

impl Serialize for RowJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for x in self.0 {
            seq.serialize_element(&BigIntJson(x))?;
        }
        seq.end()
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            seq.serialize_element(&RowJson(&self.data[i * self.cols..(i + 1) * self.cols]))?;
        }
        seq.end()
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// `U · M · V = D` with `U`, `V` unimodular and `D` diagonal with
/// `d_1 | d_2 | …`, all positive.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub v_inv: IntMatrix,
    pub rank: usize,
}

impl SmithDecomposition {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rank).map(|i| self.d.get(i, i).clone()).collect()
    }
}

fn min_abs_position(d: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..d.rows {
        for j in t..d.cols {
            let x = d.get(i, j);
            if x.is_zero() {
                continue;
            }
            match best {
                Some((bi, bj)) if d.get(bi, bj).abs() <= x.abs() => {}
                _ => best = Some((i, j)),
            }
        }
    }
    best
}

/// Smith normal form with transforms, pivoting on the entry of least
/// absolute value.
pub fn smith_normal_form(m: &IntMatrix) -> SmithDecomposition {
    let (rows, cols) = (m.rows, m.cols);
    let mut d = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut u_inv = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let mut v_inv = IntMatrix::identity(cols);

    // Row operation on D, mirrored on U and U^{-1}.
    let row_add = |d: &mut IntMatrix, u: &mut IntMatrix, u_inv: &mut IntMatrix, dst: usize, src: usize, k: &BigInt| {
        d.add_row(dst, src, k);
        u.add_row(dst, src, k);
        u_inv.add_col(src, dst, &-k);
    };
    let col_add = |d: &mut IntMatrix, v: &mut IntMatrix, v_inv: &mut IntMatrix, dst: usize, src: usize, k: &BigInt| {
        d.add_col(dst, src, k);
        v.add_col(dst, src, k);
        v_inv.add_row(src, dst, &-k);
    };

    let mut t = 0;
    while t < rows.min(cols) {
        let Some((pi, pj)) = min_abs_position(&d, t) else { break };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        u_inv.swap_cols(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);
        v_inv.swap_rows(t, pj);
        loop {
            let pivot = d.get(t, t).clone();
            let mut clean = true;
            for i in t + 1..rows {
                if !d.get(i, t).is_zero() {
                    let q = d.get(i, t).div_floor(&pivot);
                    row_add(&mut d, &mut u, &mut u_inv, i, t, &-q);
                    clean &= d.get(i, t).is_zero();
                }
            }
            for j in t + 1..cols {
                if !d.get(t, j).is_zero() {
                    let q = d.get(t, j).div_floor(&pivot);
                    col_add(&mut d, &mut v, &mut v_inv, j, t, &-q);
                    clean &= d.get(t, j).is_zero();
                }
            }
            if !clean {
                // A remainder smaller than the pivot survived; move it to the pivot.
                let mut best: Option<(usize, bool)> = None;
                let mut best_abs = pivot.abs();
                for i in t + 1..rows {
                    let a = d.get(i, t).abs();
                    if !a.is_zero() && a < best_abs {
                        best_abs = a;
                        best = Some((i, true));
                    }
                }
                for j in t + 1..cols {
                    let a = d.get(t, j).abs();
                    if !a.is_zero() && a < best_abs {
                        best_abs = a;
                        best = Some((j, false));
                    }
                }
                match best {
                    Some((i, true)) => {
                        d.swap_rows(t, i);
                        u.swap_rows(t, i);
                        u_inv.swap_cols(t, i);
                    }
                    Some((j, false)) => {
                        d.swap_cols(t, j);
                        v.swap_cols(t, j);
                        v_inv.swap_rows(t, j);
                    }
                    None => {}
                }
                continue;
            }
            // Row and column are clear; enforce divisibility of the rest.
            let mut offender = None;
            'scan: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !d.get(i, j).is_multiple_of(&pivot) {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(i) => row_add(&mut d, &mut u, &mut u_inv, t, i, &BigInt::one()),
                None => break,
            }
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
            u_inv.negate_col(t);
        }
        t += 1;
    }
    SmithDecomposition { u, u_inv, d, v, v_inv, rank: t }
}

/// Integer solution of `C x = b`, if any.
pub fn solve_integer_system(c: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigInt>> {
    solve_with_smith(c, &smith_normal_form(c), b)
}

fn solve_with_smith(c: &IntMatrix, s: &SmithDecomposition, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(c.rows, b.len());
    let ub = s.u.mul_vec(b);
    let mut y = vec![BigInt::zero(); c.cols];
    for (i, ubi) in ub.iter().enumerate() {
        if i < s.rank {
            let di = s.d.get(i, i);
            if !ubi.is_multiple_of(di) {
                return None;
            }
            y[i] = ubi / di;
        } else if !ubi.is_zero() {
            return None;
        }
    }
    Some(s.v.mul_vec(&y))
}

/// A basis of the integer kernel, as the columns of the returned matrix.
/// The basis is primitive (saturated).
pub fn kernel_basis(m: &IntMatrix) -> IntMatrix {
    let s = smith_normal_form(m);
    s.v.submatrix(0..m.cols, s.rank..m.cols)
}

/// Invariant factors from determinantal divisors `d_k = gcd of k×k minors`.
/// Exponential in the size; meant as an independent oracle for small inputs.
pub fn invariant_factors_by_minors(m: &IntMatrix) -> Vec<BigInt> {
    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    }
    let mut factors = Vec::new();
    let mut prev = BigInt::one();
    for k in 1..=m.rows.min(m.cols) {
        let mut g = BigInt::zero();
        for rs in combinations(m.rows, k) {
            for cs in combinations(m.cols, k) {
                let minor = IntMatrix::from_fn(k, k, |i, j| m.get(rs[i], cs[j]).clone());
                g = g.gcd(&determinant(&minor));
            }
        }
        if g.is_zero() {
            break;
        }
        factors.push(&g / &prev);
        prev = g;
    }
    factors
}

/// Fraction-free (Bareiss) determinant.
pub fn determinant(m: &IntMatrix) -> BigInt {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a.get(k, k).is_zero() {
            match (k + 1..n).find(|&i| !a.get(i, k).is_zero()) {
                Some(i) => {
                    a.swap_rows(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                a.set(i, j, v);
            }
        }
        prev = a.get(k, k).clone();
    }
    sign * a.get(n - 1, n - 1)
}

/// `Z^gens / im(relations)`.
#[derive(Debug, Clone)]
pub struct FgAbGroup {
    relations: IntMatrix,
    smith: SmithDecomposition,
}

impl FgAbGroup {
    /// Presentation with the given relation columns.
    pub fn presented(relations: IntMatrix) -> Self {
        let smith = smith_normal_form(&relations);
        FgAbGroup { relations, smith }
    }

    pub fn free(rank: usize) -> Self {
        Self::presented(IntMatrix::zeros(rank, 0))
    }

    pub fn trivial() -> Self {
        Self::free(0)
    }

    /// `Z^free ⊕ ⊕ Z/t_i`.
    pub fn from_invariants(free: usize, torsion: &[i64]) -> Self {
        let n = free + torsion.len();
        let mut r = IntMatrix::zeros(n, torsion.len());
        for (k, t) in torsion.iter().enumerate() {
            r.set(free + k, k, BigInt::from(*t));
        }
        Self::presented(r)
    }

    pub fn generators(&self) -> usize {
        self.relations.rows
    }

    pub fn relations(&self) -> &IntMatrix {
        &self.relations
    }

    pub fn smith(&self) -> &SmithDecomposition {
        &self.smith
    }

    pub fn free_rank(&self) -> usize {
        self.relations.rows - self.smith.rank
    }

    /// Invariant factors greater than one.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.smith.diagonal().into_iter().filter(|d| !d.is_one()).collect()
    }

    pub fn is_torsion_free(&self) -> bool {
        self.torsion().is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank() == 0 && self.is_torsion_free()
    }

    /// Same invariants.
    pub fn is_isomorphic_to(&self, other: &FgAbGroup) -> bool {
        self.free_rank() == other.free_rank() && self.torsion() == other.torsion()
    }

    /// Is the vector (in generator coordinates) zero in the group?
    pub fn is_zero_element(&self, v: &[BigInt]) -> bool {
        assert_eq!(v.len(), self.generators());
        solve_with_smith(&self.relations, &self.smith, v).is_some()
    }

    pub fn identity(&self) -> GroupHom {
        GroupHom {
            domain: self.clone(),
            codomain: self.clone(),
            matrix: IntMatrix::identity(self.generators()),
        }
    }
}

impl PartialEq for FgAbGroup {
    fn eq(&self, other: &Self) -> bool {
        self.is_isomorphic_to(other)
    }
}

impl fmt::Display for FgAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.free_rank() {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for t in self.torsion() {
            parts.push(format!("Z/{t}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl Serialize for FgAbGroup {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let torsion = self.torsion();
        let mut st = s.serialize_struct("FgAbGroup", 2)?;
        st.serialize_field("free_rank", &self.free_rank())?;
        st.serialize_field("torsion", &RowJson(&torsion))?;
        st.end()
    }
}

/// A homomorphism between presented groups, given on generators.
#[derive(Debug, Clone)]
pub struct GroupHom {
    pub domain: FgAbGroup,
    pub codomain: FgAbGroup,
    pub matrix: IntMatrix,
}

impl GroupHom {
    /// Checks that every domain relation maps to zero.
    pub fn new(domain: FgAbGroup, codomain: FgAbGroup, matrix: IntMatrix) -> Result<Self, ExactError> {
        if matrix.rows != codomain.generators() || matrix.cols != domain.generators() {
            return Err(ExactError::Dimension(format!(
                "matrix is {}x{}, expected {}x{}",
                matrix.rows,
                matrix.cols,
                codomain.generators(),
                domain.generators()
            )));
        }
        let images = matrix.mul(domain.relations());
        for c in 0..images.cols {
            if !codomain.is_zero_element(&images.column(c)) {
                return Err(ExactError::IllDefined { relation: c });
            }
        }
        Ok(GroupHom { domain, codomain, matrix })
    }

    pub fn zero(domain: &FgAbGroup, codomain: &FgAbGroup) -> Self {
        GroupHom {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix: IntMatrix::zeros(codomain.generators(), domain.generators()),
        }
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &GroupHom) -> GroupHom {
        assert_eq!(first.codomain.generators(), self.domain.generators(), "composition mismatch");
        GroupHom {
            domain: first.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: self.matrix.mul(&first.matrix),
        }
    }

    /// Equality as maps of groups.
    pub fn equals(&self, other: &GroupHom) -> bool {
        let diff = self.matrix.sub(&other.matrix);
        (0..diff.cols).all(|j| self.codomain.is_zero_element(&diff.column(j)))
    }

    pub fn is_zero(&self) -> bool {
        (0..self.matrix.cols).all(|j| self.codomain.is_zero_element(&self.matrix.column(j)))
    }

    /// Generators (as columns, in domain generator coordinates) of the kernel.
    pub fn kernel_generators(&self) -> IntMatrix {
        let m = self.domain.generators();
        let stacked = self.matrix.hcat(&self.codomain.relations().scale(&BigInt::from(-1)));
        let k = kernel_basis(&stacked);
        k.submatrix(0..m, 0..k.cols)
    }

    pub fn is_injective(&self) -> bool {
        let k = self.kernel_generators();
        (0..k.cols).all(|j| self.domain.is_zero_element(&k.column(j)))
    }

    pub fn is_surjective(&self) -> bool {
        let span = self.matrix.hcat(self.codomain.relations());
        let s = smith_normal_form(&span);
        s.rank == self.codomain.generators() && s.diagonal().iter().all(One::is_one)
    }

    pub fn is_isomorphism(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }
}

impl Serialize for GroupHom {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GroupHom", 3)?;
        st.serialize_field("domain", &self.domain)?;
        st.serialize_field("codomain", &self.codomain)?;
        st.serialize_field("matrix", &self.matrix)?;
        st.end()
    }
}

/// Exactness of `P --f--> X --g--> Q` at `X`.
pub fn is_exact_at(f: &GroupHom, g: &GroupHom) -> bool {
    if !g.after(f).is_zero() {
        return false;
    }
    let k = g.kernel_generators();
    let span = f.matrix.hcat(f.codomain.relations());
    let s = smith_normal_form(&span);
    (0..k.cols).all(|j| solve_with_smith(&span, &s, &k.column(j)).is_some())
}

pub fn is_isomorphism(h: &GroupHom) -> bool {
    h.is_isomorphism()
}

/// Kernel of an integer matrix as a free group with its inclusion.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub basis: IntMatrix,
    pub group: FgAbGroup,
    pub inclusion: GroupHom,
}

pub fn kernel(m: &IntMatrix) -> Kernel {
    let basis = kernel_basis(m);
    let group = FgAbGroup::free(basis.cols);
    let inclusion = GroupHom {
        domain: group.clone(),
        codomain: FgAbGroup::free(m.cols),
        matrix: basis.clone(),
    };
    Kernel { basis, group, inclusion }
}

/// Cokernel of an integer matrix with the quotient map from `Z^rows`.
#[derive(Debug, Clone)]
pub struct Cokernel {
    pub group: FgAbGroup,
    pub quotient: GroupHom,
}

pub fn cokernel(m: &IntMatrix) -> Cokernel {
    let group = FgAbGroup::presented(m.clone());
    let quotient = GroupHom {
        domain: FgAbGroup::free(m.rows),
        codomain: group.clone(),
        matrix: IntMatrix::identity(m.rows),
    };
    Cokernel { group, quotient }
}

/// `post ∘ X ∘ pre = target`.
#[derive(Debug, Clone)]
pub struct HomConstraint {
    pub post: GroupHom,
    pub pre: GroupHom,
    pub target: GroupHom,
}

/// Finds an integer matrix `X: G → H` that is a well-defined homomorphism and
/// meets every constraint, or `None` when the Diophantine system has no
/// solution.
pub fn solve_hom_constraints(
    g: &FgAbGroup,
    h: &FgAbGroup,
    constraints: &[HomConstraint],
) -> Result<Option<GroupHom>, ExactError> {
    let (mg, mh) = (g.generators(), h.generators());
    for c in constraints {
        if c.post.domain.generators() != mh
            || c.pre.codomain.generators() != mg
            || c.target.domain.generators() != c.pre.domain.generators()
            || c.target.codomain.generators() != c.post.codomain.generators()
        {
            return Err(ExactError::Dimension("constraint shapes do not match X".into()));
        }
    }
    // Unknowns: X (mh*mg, row-major), then Z for well-definedness, then one
    // slack block per constraint.
    let rg = g.relations().cols;
    let rh = h.relations().cols;
    let nx = mh * mg;
    let nz = rh * rg;
    let mut slack_offsets = Vec::new();
    let mut total = nx + nz;
    for c in constraints {
        slack_offsets.push(total);
        total += c.post.codomain.relations().cols * c.pre.domain.generators();
    }
    let mut eqs: Vec<(Vec<BigInt>, BigInt)> = Vec::new();
    let xi = |i: usize, j: usize| i * mg + j;

    // X R_G = R_H Z
    for col in 0..rg {
        for i in 0..mh {
            let mut row = vec![BigInt::zero(); total];
            for j in 0..mg {
                row[xi(i, j)] += g.relations().get(j, col);
            }
            for l in 0..rh {
                row[nx + l * rg + col] -= h.relations().get(i, l);
            }
            eqs.push((row, BigInt::zero()));
        }
    }
    // post X pre e_f - target e_f = R_K w_f
    for (c, &off) in constraints.iter().zip(&slack_offsets) {
        let k_rel = c.post.codomain.relations();
        let rk = k_rel.cols;
        let nf = c.pre.domain.generators();
        let mk = c.post.codomain.generators();
        for f in 0..nf {
            for a in 0..mk {
                let mut row = vec![BigInt::zero(); total];
                for i in 0..mh {
                    let p = c.post.matrix.get(a, i);
                    if p.is_zero() {
                        continue;
                    }
                    for j in 0..mg {
                        let q = c.pre.matrix.get(j, f);
                        if !q.is_zero() {
                            row[xi(i, j)] += p * q;
                        }
                    }
                }
                for l in 0..rk {
                    row[off + l * nf + f] -= k_rel.get(a, l);
                }
                eqs.push((row, c.target.matrix.get(a, f).clone()));
            }
        }
    }
    if eqs.is_empty() {
        return Ok(Some(GroupHom::zero(g, h)));
    }
    let cmat = IntMatrix::from_fn(eqs.len(), total, |i, j| eqs[i].0[j].clone());
    let rhs: Vec<BigInt> = eqs.iter().map(|e| e.1.clone()).collect();
    let Some(sol) = solve_integer_system(&cmat, &rhs) else { return Ok(None) };
    let x = IntMatrix::from_fn(mh, mg, |i, j| sol[xi(i, j)].clone());
    let hom = GroupHom::new(g.clone(), h.clone(), x)?;
    for c in constraints {
        if !c.post.after(&hom).after(&c.pre).equals(&c.target) {
            return Ok(None);
        }
    }
    Ok(Some(hom))
}

/// A projection matrix over a named algebra, or over its opposite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionDatum {
    pub algebra: String,
    pub opposite: bool,
    pub matrix: IntMatrix,
}

impl ProjectionDatum {
    pub fn new(algebra: &str, opposite: bool, matrix: IntMatrix) -> Result<Self, ExactError> {
        if matrix.rows != matrix.cols {
            return Err(ExactError::Dimension("projection must be square".into()));
        }
        if matrix.mul(&matrix) != matrix {
            return Err(ExactError::NotIdempotent);
        }
        Ok(ProjectionDatum { algebra: algebra.to_string(), opposite, matrix })
    }

    /// Rank of an idempotent equals its trace.
    pub fn rank(&self) -> BigInt {
        (0..self.matrix.rows).fold(BigInt::zero(), |acc, i| acc + self.matrix.get(i, i))
    }
}

/// `[p^op] ↦ [p^T]`: the class of the transposed matrix over the opposite algebra.
pub fn transpose_projection_class(p: &ProjectionDatum) -> ProjectionDatum {
    ProjectionDatum { algebra: p.algebra.clone(), opposite: !p.opposite, matrix: p.matrix.transpose() }
}

//! The circle and rotation algebras on `Z`-graded Fock space.
//!
//! The Hilbert space is `⊕_{|n| ≤ N} ℓ²(modes)` where the modes are Fourier
//! modes of `L²(S¹)`. Generators:
//!
//! * `U δ_{n,m} = δ_{n+1,m}`, the bilateral shift, so `[N, U] = U`;
//! * `W δ_{n,m} = e^{imθ} δ_{n,m}`, the rotation by `θ`;
//! * `z δ_{n,m} = e^{-inθ} δ_{n,m+1}`, multiplication by `e^{iφ}` twisted
//!   so that `U z U^* = e^{iθ} z`.
//!
//! All three are monomial, so compressions have exact kernel and cokernel
//! counts.

use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::fock::symbolic;
use crate::linalg::Sparse;

#[derive(Debug, Error, PartialEq)]
pub enum CrossedError {
    #[error("window must be at least 4, got {0}")]
    WindowTooSmall(usize),
    #[error("need at least one Fourier mode")]
    NoModes,
    #[error("cannot parse generator word `{0}`")]
    BadWord(String),
    #[error("rotation denominator must be positive")]
    BadTheta,
}

/// A rotation angle, exact when given as a rational multiple of `2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Theta {
    /// `θ = 2π · num / den`.
    Turns { num: i64, den: i64 },
    Radians { value: f64 },
}

impl Theta {
    pub fn turns(num: i64, den: i64) -> Result<Theta, CrossedError> {
        if den <= 0 {
            return Err(CrossedError::BadTheta);
        }
        let g = num.gcd(&den);
        Ok(Theta::Turns { num: num / g, den: den / g })
    }

    /// Reads a decimal fraction of a full turn such as `0.3` exactly.
    pub fn from_turns_str(s: &str) -> Result<Theta, CrossedError> {
        let s = s.trim();
        let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 15 {
            return Err(CrossedError::BadTheta);
        }
        let den = 10i64.pow(frac.len() as u32);
        let digits = format!("{int}{frac}");
        let num: i64 = digits.parse().map_err(|_| CrossedError::BadTheta)?;
        Theta::turns(if neg { -num } else { num }, den)
    }

    pub fn negate(self) -> Theta {
        match self {
            Theta::Turns { num, den } => Theta::Turns { num: -num, den },
            Theta::Radians { value } => Theta::Radians { value: -value },
        }
    }

    pub fn radians(self) -> f64 {
        match self {
            Theta::Turns { num, den } => 2.0 * std::f64::consts::PI * num as f64 / den as f64,
            Theta::Radians { value } => value,
        }
    }

    /// `e^{ikθ}`, reduced exactly modulo the denominator when rational.
    pub fn phase(self, k: i64) -> Complex64 {
        match self {
            Theta::Turns { num, den } => {
                let r = (k as i128 * num as i128).rem_euclid(den as i128) as f64;
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r / den as f64)
            }
            Theta::Radians { value } => Complex64::from_polar(1.0, k as f64 * value),
        }
    }

    /// Whether `e^{ikθ} = 1` exactly. `None` for a real angle.
    pub fn phase_is_trivial(self, k: i64) -> Option<bool> {
        match self {
            Theta::Turns { num, den } => Some((k as i128 * num as i128).rem_euclid(den as i128) == 0),
            Theta::Radians { .. } => None,
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Turns { num, den } => write!(f, "2π·{num}/{den}"),
            Theta::Radians { value } => write!(f, "{value}"),
        }
    }
}

/// One generator of the unitary group used in words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Generator {
    U,
    W,
    Z,
}

/// A word `g_1^{k_1} g_2^{k_2} …`, applied right to left.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Word(pub Vec<(Generator, i64)>);

impl Word {
    /// Accepts factors like `U`, `U^2`, `W^-1`, `z`, separated by spaces or `*`.
    pub fn parse(s: &str) -> Result<Word, CrossedError> {
        let bad = || CrossedError::BadWord(s.to_string());
        let mut out = Vec::new();
        for tok in s.split(|c: char| c == '*' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let (g, pow) = tok.split_once('^').unwrap_or((tok, "1"));
            let gen = match g {
                "U" | "u" | "w" => Generator::U,
                "W" => Generator::W,
                "z" | "Z" => Generator::Z,
                _ => return Err(bad()),
            };
            let k: i64 = pow.parse().map_err(|_| bad())?;
            out.push((gen, k));
        }
        if out.is_empty() {
            return Err(bad());
        }
        Ok(Word(out))
    }

    pub fn power(g: Generator, k: i64) -> Word {
        Word(vec![(g, k)])
    }

    /// Image of `δ_{n,m}` on the infinite lattice: target and the exponent
    /// `k` of the phase `e^{ikθ}`.
    pub fn apply(&self, n: i64, m: i64) -> (i64, i64, i64) {
        let (mut n, mut m, mut k) = (n, m, 0i64);
        for &(g, p) in self.0.iter().rev() {
            match g {
                Generator::U => n += p,
                Generator::W => k += p * m,
                Generator::Z => {
                    // z^p δ_{n,m} = e^{-ipnθ} δ_{n,m+p}
                    k -= p * n;
                    m += p;
                }
            }
        }
        (n, m, k)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&(g, p)| (g, -p)).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&(g, p)| {
                let name = match g {
                    Generator::U => "U",
                    Generator::W => "W",
                    Generator::Z => "z",
                };
                if p == 1 { name.to_string() } else { format!("{name}^{p}") }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Window `|n| ≤ N`, Fourier modes `m_lo..m_lo+M`, rotation `θ`.
#[derive(Debug, Clone, Serialize)]
pub struct GradedTruncation {
    pub window: usize,
    pub modes: usize,
    pub theta: Theta,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationChecks {
    pub shift_unitary: f64,
    pub number_commutator: f64,
    pub rotation_commutes_with_number: f64,
    pub rotation_unitary: f64,
    pub covariance: f64,
}

impl TruncationChecks {
    pub fn max(&self) -> f64 {
        [self.shift_unitary, self.number_commutator, self.rotation_commutes_with_number, self.rotation_unitary, self.covariance]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn build_graded_truncation(window: usize, modes: usize, theta: Theta) -> Result<GradedTruncation, CrossedError> {
    if window < 4 {
        return Err(CrossedError::WindowTooSmall(window));
    }
    if modes == 0 {
        return Err(CrossedError::NoModes);
    }
    Ok(GradedTruncation { window, modes, theta })
}

impl GradedTruncation {
    pub fn dim(&self) -> usize {
        (2 * self.window + 1) * self.modes
    }

    fn m_lo(&self) -> i64 {
        -((self.modes / 2) as i64)
    }

    fn n_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.window as i64)..=self.window as i64
    }

    fn m_range(&self) -> std::ops::Range<i64> {
        self.m_lo()..self.m_lo() + self.modes as i64
    }

    fn in_window(&self, n: i64, m: i64) -> bool {
        self.n_range().contains(&n) && self.m_range().contains(&m)
    }

    pub fn index(&self, n: i64, m: i64) -> usize {
        debug_assert!(self.in_window(n, m));
        (n + self.window as i64) as usize * self.modes + (m - self.m_lo()) as usize
    }

    pub fn coordinates(&self) -> Vec<(i64, i64)> {
        self.n_range().flat_map(|n| self.m_range().map(move |m| (n, m))).collect()
    }

    /// Basis vectors at least `margin` away from every edge of the window. A
    /// single Fourier mode has no mode boundary.
    pub fn interior(&self, margin: i64) -> Vec<usize> {
        let (lo, hi) = (self.m_lo(), self.m_lo() + self.modes as i64 - 1);
        self.coordinates()
            .into_iter()
            .filter(|&(n, m)| {
                n.abs() <= self.window as i64 - margin && (self.modes == 1 || (m >= lo + margin && m <= hi - margin))
            })
            .map(|(n, m)| self.index(n, m))
            .collect()
    }

    /// The word as a matrix, dropping images that leave the window.
    pub fn operator(&self, w: &Word) -> Sparse {
        let trip: Vec<_> = self
            .coordinates()
            .into_iter()
            .filter_map(|(n, m)| {
                let (n2, m2, k) = w.apply(n, m);
                self.in_window(n2, m2).then(|| (self.index(n2, m2), self.index(n, m), self.theta.phase(k)))
            })
            .collect();
        Sparse::from_triplets(self.dim(), self.dim(), trip)
    }

    pub fn number(&self) -> Sparse {
        Sparse::diagonal(&self.coordinates().iter().map(|&(n, _)| Complex64::new(n as f64, 0.0)).collect::<Vec<_>>())
    }

    pub fn dirac(&self) -> Sparse {
        Sparse::diagonal(&self.coordinates().iter().map(|&(_, m)| Complex64::new(m as f64, 0.0)).collect::<Vec<_>>())
    }

    pub fn checks(&self) -> TruncationChecks {
        let u = self.operator(&Word::power(Generator::U, 1));
        let w = self.operator(&Word::power(Generator::W, 1));
        let z = self.operator(&Word::power(Generator::Z, 1));
        let n = self.number();
        let id = Sparse::identity(self.dim());
        let inner = self.interior(1);
        let on = |m: &Sparse| m.restrict(&inner, &inner).max_abs();
        let shift_unitary = on(&u.adjoint().mul(&u).sub(&id)).max(on(&u.mul(&u.adjoint()).sub(&id)));
        let number_commutator = on(&n.mul(&u).sub(&u.mul(&n)).sub(&u));
        let rotation_commutes_with_number = on(&n.mul(&w).sub(&w.mul(&n)));
        let rotation_unitary = w.adjoint().mul(&w).sub(&id).max_abs();
        let e = Complex64::new(0.0, 0.0) + self.theta.phase(1);
        let covariance = on(&u.mul(&z).mul(&u.adjoint()).sub(&z.scale(e))).max(on(&w.mul(&z).mul(&w.adjoint()).sub(&z.scale(e))));
        TruncationChecks { shift_unitary, number_commutator, rotation_commutes_with_number, rotation_unitary, covariance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingCount {
    pub window: usize,
    /// Number of Fourier modes counted.
    pub band: usize,
    pub kernel: usize,
    pub cokernel: usize,
    /// `(kernel - cokernel) / band`, the rank of the index class.
    pub index: i64,
    /// Whether `kernel - cokernel` is a nonzero band's multiple.
    pub divisible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingReport {
    pub word: String,
    pub counts: Vec<PairingCount>,
    pub stable: bool,
    pub index: i64,
}

fn pairing_count(t: &GradedTruncation, w: &Word) -> PairingCount {
    // Compression of a monomial unitary to `n ≥ 0`. Basis vectors whose image
    // (or preimage) leaves the window are truncation artefacts and are
    // excluded from the domain (or codomain). Counting is restricted to a band
    // of modes the word cannot shift out of the window, and the index is
    // normalised per mode of the band.
    let reach: i64 = w.0.iter().filter(|(g, _)| *g == Generator::Z).map(|(_, p)| p.abs()).sum();
    let (lo, hi) = (t.m_lo() + reach, t.m_lo() + t.modes as i64 - 1 - reach);
    let band = (hi - lo + 1).max(0);
    let inv = w.inverse();
    let mut kernel = 0;
    let mut cokernel = 0;
    for (n, m) in t.coordinates() {
        if n < 0 || m < lo || m > hi {
            continue;
        }
        let (n2, m2, k) = w.apply(n, m);
        if t.in_window(n2, m2) && n2 < 0 {
            debug_assert!(t.theta.phase(k).norm() > 0.5);
            kernel += 1;
        }
        let (n3, m3, _) = inv.apply(n, m);
        if t.in_window(n3, m3) && n3 < 0 {
            cokernel += 1;
        }
    }
    let raw = kernel as i64 - cokernel as i64;
    let divisible = band > 0 && raw % band == 0;
    let index = if band > 0 { raw.div_euclid(band) } else { 0 };
    PairingCount { window: t.window, band: band as usize, kernel, cokernel, index, divisible }
}

/// Index of `P_{N≥0} g P_{N≥0}`, counted at the window and the window plus 4.
pub fn ext_index_pairing(t: &GradedTruncation, w: &Word) -> PairingReport {
    let bigger = GradedTruncation { window: t.window + 4, ..t.clone() };
    let counts = vec![pairing_count(t, w), pairing_count(&bigger, w)];
    let stable = counts.iter().all(|c| c.divisible) && counts[0].index == counts[1].index;
    PairingReport { word: w.to_string(), index: counts[0].index, stable, counts }
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorNorm {
    pub generator: String,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NSharpD {
    pub window: usize,
    pub dim: usize,
    pub self_adjoint: bool,
    pub anticommutes_with_grading: bool,
    pub commutators: Vec<CommutatorNorm>,
}

/// Generators whose commutators with `N#D` are measured.
pub fn standard_generators() -> Vec<(String, Vec<(Word, Complex64)>)> {
    let one = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    vec![
        ("U".into(), vec![(Word::power(Generator::U, 1), one)]),
        ("W".into(), vec![(Word::power(Generator::W, 1), one)]),
        ("z".into(), vec![(Word::power(Generator::Z, 1), one)]),
        ("cos".into(), vec![(Word::power(Generator::Z, 1), half), (Word::power(Generator::Z, -1), half)]),
    ]
}

/// `N#D = [[0, N - iD], [N + iD, 0]]` and `‖[N#D, g ⊕ g]‖` on the interior.
pub fn build_nsharpd(t: &GradedTruncation) -> NSharpD {
    let d = t.dim();
    let n = t.number();
    let dd = t.dirac();
    let i = Complex64::new(0.0, 1.0);
    let lower = n.add(&dd.scale(i));
    let upper = n.sub(&dd.scale(i));
    let op = Sparse::block(&[vec![None, Some(&upper)], vec![Some(&lower), None]], &[d, d], &[d, d]);
    let grading = Sparse::diagonal(&(0..2 * d).map(|k| Complex64::new(if k < d { 1.0 } else { -1.0 }, 0.0)).collect::<Vec<_>>());
    let anti = grading.mul(&op).add(&op.mul(&grading));
    let inner = t.interior(1);
    let cols: Vec<usize> = inner.iter().copied().chain(inner.iter().map(|&k| k + d)).collect();
    let commutators = standard_generators()
        .into_iter()
        .map(|(name, terms)| {
            let mut g = Sparse::zeros(d, d);
            for (w, c) in &terms {
                g = g.add(&t.operator(w).scale(*c));
            }
            let gg = Sparse::block(&[vec![Some(&g), None], vec![None, Some(&g)]], &[d, d], &[d, d]);
            let comm = op.mul(&gg).sub(&gg.mul(&op));
            let all_rows: Vec<usize> = (0..2 * d).collect();
            CommutatorNorm { generator: name, norm: comm.restrict(&all_rows, &cols).spectral_norm() }
        })
        .collect();
    NSharpD { window: t.window, dim: 2 * d, self_adjoint: op.is_self_adjoint(), anticommutes_with_grading: anti.nnz() == 0, commutators }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundednessRow {
    pub generator: String,
    pub norms: Vec<f64>,
    /// `(max - min) / max` across windows.
    pub variation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundednessReport {
    pub windows: Vec<usize>,
    pub self_adjoint: bool,
    pub anticommutes_with_grading: bool,
    pub rows: Vec<BoundednessRow>,
}

pub fn nsharpd_boundedness(windows: &[usize], modes: usize, theta: Theta, exec: Execution) -> Result<BoundednessReport, CrossedError> {
    let truncs: Vec<GradedTruncation> = windows.iter().map(|&w| build_graded_truncation(w, modes, theta)).collect::<Result<_, _>>()?;
    let ops = exec::map(exec, &truncs, build_nsharpd);
    let rows = ops[0]
        .commutators
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let norms: Vec<f64> = ops.iter().map(|o| o.commutators[i].norm).collect();
            let hi = norms.iter().cloned().fold(0.0, f64::max);
            let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
            BoundednessRow { generator: c.generator.clone(), variation: if hi > 0.0 { (hi - lo) / hi } else { 0.0 }, norms }
        })
        .collect();
    Ok(BoundednessReport {
        windows: windows.to_vec(),
        self_adjoint: ops.iter().all(|o| o.self_adjoint),
        anticommutes_with_grading: ops.iter().all(|o| o.anticommutes_with_grading),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Factor {
    pub name: String,
    /// Index pairing of the factor's unitary with the extension; `None` for
    /// projections.
    pub pairing: Option<i64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summand {
    pub sign: i64,
    pub factors: Vec<Factor>,
    pub nontrivial: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RotationDelta {
    pub theta: Theta,
    pub summands: Vec<Summand>,
    /// `e_w(t) = (1+t²)^{-1} [[t², -itU], [itU^*, 1]]` is a projection, by
    /// rewriting with `UU^* = U^*U = 1`.
    pub ew_symbolic: bool,
    /// Numerical `e_w(t)² - e_w(t)` on the interior for sampled `t`.
    pub ew_numeric: Vec<(f64, f64)>,
}

/// The four summands of the rotation-algebra class and their pairings with
/// the number-operator extension. Opposite factors pair in the algebra with
/// angle `-θ`.
pub fn rotation_delta_components(theta: Theta, window: usize, modes: usize) -> Result<RotationDelta, CrossedError> {
    let t = build_graded_truncation(window, modes, theta)?;
    let t_op = build_graded_truncation(window, modes, theta.negate())?;
    let pair = |name: &str| -> Factor {
        let (trunc, base) = match name.strip_suffix("^op") {
            Some(b) => (&t_op, b),
            None => (&t, name),
        };
        let gen = match base {
            "w" => Some(Generator::U),
            "z" => Some(Generator::Z),
            "W" => Some(Generator::W),
            _ => None,
        };
        Factor { name: name.to_string(), pairing: gen.map(|g| ext_index_pairing(trunc, &Word::power(g, 1)).index) }
    };
    let summand = |sign: i64, names: &[&str]| {
        let factors: Vec<Factor> = names.iter().map(|n| pair(n)).collect();
        let nontrivial = factors.iter().any(|f| f.pairing.is_some_and(|p| p != 0));
        Summand { sign, factors, nontrivial }
    };
    let summands = vec![
        summand(1, &["z", "W", "ι"]),
        summand(1, &["w", "z^op"]),
        summand(-1, &["z", "w^op"]),
        summand(-1, &["ι", "z^op", "W^op"]),
    ];
    let d = t.dim();
    let u = t.operator(&Word::power(Generator::U, 1));
    let inner = t.interior(1);
    let both: Vec<usize> = inner.iter().copied().chain(inner.iter().map(|&k| k + d)).collect();
    let ew_numeric = [0.0, 0.5, 1.0, 2.0, 10.0]
        .iter()
        .map(|&s: &f64| {
            let f = 1.0 / (1.0 + s * s);
            let a = Sparse::identity(d).scale(Complex64::new(s * s * f, 0.0));
            let b = u.scale(Complex64::new(0.0, -s * f));
            let c = u.adjoint().scale(Complex64::new(0.0, s * f));
            let e = Sparse::identity(d).scale(Complex64::new(f, 0.0));
            let p = Sparse::block(&[vec![Some(&a), Some(&b)], vec![Some(&c), Some(&e)]], &[d, d], &[d, d]);
            (s, p.mul(&p).sub(&p).restrict(&both, &both).max_abs())
        })
        .collect();
    Ok(RotationDelta {
        theta,
        summands,
        ew_symbolic: symbolic::projection_identity_holds(symbolic::Relations::Unitary),
        ew_numeric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_invariants() {
        for (m, th) in [(1, Theta::turns(0, 1).unwrap()), (8, Theta::turns(0, 1).unwrap()), (8, Theta::turns(3, 10).unwrap())] {
            let t = build_graded_truncation(8, m, th).unwrap();
            assert!(t.checks().max() < 1e-12, "{:?}", t.checks());
        }
    }

    #[test]
    fn shift_index() {
        let t = build_graded_truncation(16, 1, Theta::turns(3, 10).unwrap()).unwrap();
        let r = ext_index_pairing(&t, &Word::parse("U").unwrap());
        assert!(r.stable);
        assert_eq!(r.index.abs(), 1);
        assert_eq!(ext_index_pairing(&t, &Word::parse("U^2").unwrap()).index, 2 * r.index);
        assert_eq!(ext_index_pairing(&t, &Word::parse("W").unwrap()).index, 0);
    }

    #[test]
    fn word_parsing() {
        assert_eq!(Word::parse("U^2 W^-1 z").unwrap().0.len(), 3);
        assert!(Word::parse("Q").is_err());
        assert_eq!(Theta::from_turns_str("0.3").unwrap(), Theta::Turns { num: 3, den: 10 });
    }

    #[test]
    fn nsharpd_commutators() {
        let t = build_graded_truncation(16, 8, Theta::turns(0, 1).unwrap()).unwrap();
        let r = build_nsharpd(&t);
        assert!(r.self_adjoint && r.anticommutes_with_grading);
        let get = |n: &str| r.commutators.iter().find(|c| c.generator == n).unwrap().norm;
        assert!((get("U") - 1.0).abs() < 1e-9);
        assert!(get("W") < 1e-12);
        assert!((get("z") - 1.0).abs() < 1e-9);
    }
}

//! Cartan data, the principal grading, and explicit fundamental
//! representations of A_n built as exterior powers of the defining module.

use nalgebra::DMatrix;
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = Rational64;
pub type QMatrix = DMatrix<Q>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Series {
    A,
    B,
    C,
    D,
    G2,
}

impl std::str::FromStr for Series {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Series::A),
            "B" | "b" => Ok(Series::B),
            "C" | "c" => Ok(Series::C),
            "D" | "d" => Ok(Series::D),
            "G2" | "g2" => Ok(Series::G2),
            other => Err(Error::Argument(format!("unknown series {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CartanMatrix {
    pub series: Series,
    pub rank: usize,
    pub entries: Vec<Vec<i64>>,
}

impl CartanMatrix {
    /// Entry K_ij with 1-based indices.
    pub fn k(&self, i: usize, j: usize) -> i64 {
        self.entries[i - 1][j - 1]
    }

    /// Entry with 1-based indices, zero outside 1..=rank.
    pub fn k_or_zero(&self, i: isize, j: isize) -> i64 {
        let r = self.rank as isize;
        if i < 1 || j < 1 || i > r || j > r {
            0
        } else {
            self.entries[(i - 1) as usize][(j - 1) as usize]
        }
    }

    pub fn to_rational(&self) -> QMatrix {
        DMatrix::from_fn(self.rank, self.rank, |i, j| Q::from_integer(self.entries[i][j]))
    }
}

/// Cartan matrix of the given series and rank (Bourbaki ordering, long
/// roots first for B, short root last for C).
pub fn cartan_matrix(series: Series, rank: usize) -> Result<CartanMatrix> {
    let min_rank = match series {
        Series::A => 1,
        Series::B => 2,
        Series::C => 2,
        Series::D => 4,
        Series::G2 => 2,
    };
    if rank < min_rank || (series == Series::G2 && rank != 2) {
        return Err(Error::config(
            "/algebra",
            format!("rank {rank} is not valid for series {series:?}"),
        ));
    }
    let mut k = vec![vec![0i64; rank]; rank];
    for i in 0..rank {
        k[i][i] = 2;
    }
    match series {
        Series::A | Series::B | Series::C => {
            for i in 0..rank - 1 {
                k[i][i + 1] = -1;
                k[i + 1][i] = -1;
            }
            if series == Series::B {
                k[rank - 1][rank - 2] = -2;
            } else if series == Series::C {
                k[rank - 2][rank - 1] = -2;
            }
        }
        Series::D => {
            for i in 0..rank - 2 {
                k[i][i + 1] = -1;
                k[i + 1][i] = -1;
            }
            k[rank - 3][rank - 1] = -1;
            k[rank - 1][rank - 3] = -1;
        }
        Series::G2 => {
            k[0][1] = -1;
            k[1][0] = -3;
        }
    }
    Ok(CartanMatrix { series, rank, entries: k })
}

/// Exact inverse by Gauss-Jordan elimination over the rationals.
pub fn cartan_inverse(k: &CartanMatrix) -> Result<QMatrix> {
    rational_inverse(&k.to_rational())
}

pub fn rational_inverse(m: &QMatrix) -> Result<QMatrix> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Argument("inverse of a non-square matrix".into()));
    }
    let mut a = m.clone();
    let mut inv = QMatrix::identity(n, n);
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[(r, col)].is_zero())
            .ok_or_else(|| Error::Internal("singular rational matrix".into()))?;
        a.swap_rows(col, pivot);
        inv.swap_rows(col, pivot);
        let p = a[(col, col)];
        for c in 0..n {
            a[(col, c)] /= p;
            inv[(col, c)] /= p;
        }
        for r in 0..n {
            if r != col && !a[(r, col)].is_zero() {
                let f = a[(r, col)];
                for c in 0..n {
                    let ac = a[(col, c)];
                    let ic = inv[(col, c)];
                    a[(r, c)] -= f * ac;
                    inv[(r, c)] -= f * ic;
                }
            }
        }
    }
    Ok(inv)
}

/// The j-th fundamental module of A_n with Chevalley generators as exact
/// rational matrices. Basis: e_{i1}∧…∧e_{ij}, i1<…<ij, lexicographic.
#[derive(Debug, Clone)]
pub struct FundamentalRep {
    pub n: usize,
    pub j: usize,
    pub dim: usize,
    /// Basis subsets (0-based indices into the defining module).
    pub basis: Vec<Vec<usize>>,
    pub h: Vec<QMatrix>,
    pub e: Vec<QMatrix>,
    pub f: Vec<QMatrix>,
    pub hw_index: usize,
}

/// All j-element subsets of 0..m in lexicographic order.
fn subsets(m: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..j).collect();
    if j > m {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = j;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < m - j + i {
                cur[i] += 1;
                for t in i + 1..j {
                    cur[t] = cur[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Derivation action on Λ^j of the elementary matrix E_{a,b} of gl(m).
fn lift_elementary(basis: &[Vec<usize>], a: usize, b: usize) -> QMatrix {
    let dim = basis.len();
    let mut out = QMatrix::zeros(dim, dim);
    for (col, set) in basis.iter().enumerate() {
        let Some(pos) = set.iter().position(|&x| x == b) else { continue };
        if a != b && set.contains(&a) {
            continue;
        }
        let mut img = set.clone();
        img[pos] = a;
        // sort and track the permutation sign
        let mut sign = 1i64;
        for i in 0..img.len() {
            for k in 0..img.len() - 1 - i {
                if img[k] > img[k + 1] {
                    img.swap(k, k + 1);
                    sign = -sign;
                }
            }
        }
        let row = basis.iter().position(|s| *s == img).expect("basis closed under E_ab");
        out[(row, col)] += Q::from_integer(sign);
    }
    out
}

/// Lift an arbitrary gl(n+1) matrix into Λ^j (Lie algebra action).
pub fn exterior_lift(basis: &[Vec<usize>], m: &QMatrix) -> QMatrix {
    let dim = basis.len();
    let mut out = QMatrix::zeros(dim, dim);
    for a in 0..m.nrows() {
        for b in 0..m.ncols() {
            if !m[(a, b)].is_zero() {
                out += lift_elementary(basis, a, b) * m[(a, b)];
            }
        }
    }
    out
}

fn elementary(m: usize, a: usize, b: usize) -> QMatrix {
    let mut e = QMatrix::zeros(m, m);
    e[(a, b)] = Q::one();
    e
}

pub fn fundamental_rep(n: usize, j: usize) -> Result<FundamentalRep> {
    if n == 0 || j == 0 || j > n {
        return Err(Error::Argument(format!("fundamental weight index j={j} outside 1..={n}")));
    }
    let m = n + 1;
    let basis = subsets(m, j);
    let mut h = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    for i in 0..n {
        e.push(lift_elementary(&basis, i, i + 1));
        f.push(lift_elementary(&basis, i + 1, i));
        let hi = elementary(m, i, i) - elementary(m, i + 1, i + 1);
        h.push(exterior_lift(&basis, &hi));
    }
    let hw: Vec<usize> = (0..j).collect();
    let hw_index = basis.iter().position(|s| *s == hw).expect("highest vector in basis");
    Ok(FundamentalRep { n, j, dim: basis.len(), basis, h, e, f, hw_index })
}

/// Refuses every series other than A.
pub fn fundamental_rep_for(series: Series, n: usize, j: usize) -> Result<FundamentalRep> {
    if series != Series::A {
        return Err(Error::Argument(format!(
            "explicit representations are only constructed for series A (got {series:?})"
        )));
    }
    fundamental_rep(n, j)
}

fn commutator(a: &QMatrix, b: &QMatrix) -> QMatrix {
    a * b - b * a
}

/// H = Σ_i (K⁻¹c)_i h_i in the given representation.
pub fn grading_operator(rep: &FundamentalRep, c: &[i64]) -> Result<QMatrix> {
    if c.len() != rep.n {
        return Err(Error::Argument(format!("grading column has length {}, expected {}", c.len(), rep.n)));
    }
    let kinv = cartan_inverse(&cartan_matrix(Series::A, rep.n)?)?;
    let mut hm = QMatrix::zeros(rep.dim, rep.dim);
    for i in 0..rep.n {
        let mut w = Q::zero();
        for (k, ck) in c.iter().enumerate() {
            w += kinv[(i, k)] * Q::from_integer(*ck);
        }
        hm += &rep.h[i] * w;
    }
    Ok(hm)
}

pub fn principal_grading(rep: &FundamentalRep) -> QMatrix {
    grading_operator(rep, &vec![1; rep.n]).expect("shape matches")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Y_i^{±m} = [X±_{i+m−1},[…[X±_{i+1},X±_i]…]] for i = 1..n−m+1 (returned in
/// site order). Empty when m = 0 or m > n.
pub fn graded_generators(rep: &FundamentalRep, m: usize, sign: Sign) -> Vec<QMatrix> {
    if m == 0 || m > rep.n {
        return Vec::new();
    }
    let gens = match sign {
        Sign::Plus => &rep.e,
        Sign::Minus => &rep.f,
    };
    (0..=rep.n - m)
        .map(|i| {
            let mut y = gens[i].clone();
            for step in 1..m {
                y = commutator(&gens[i + step], &y);
            }
            y
        })
        .collect()
}

fn max_abs_q(m: &QMatrix) -> f64 {
    m.iter().map(|q| (*q.numer() as f64 / *q.denom() as f64).abs()).fold(0.0, f64::max)
}

fn max_abs_f(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Floating-point image of a representation.
#[derive(Debug, Clone)]
pub struct RepF {
    pub n: usize,
    pub j: usize,
    pub dim: usize,
    pub h: Vec<DMatrix<f64>>,
    pub e: Vec<DMatrix<f64>>,
    pub f: Vec<DMatrix<f64>>,
    pub hw_index: usize,
}

pub fn q_to_f64(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

pub fn to_f64(m: &QMatrix) -> DMatrix<f64> {
    m.map(|q| q_to_f64(&q))
}

impl FundamentalRep {
    pub fn to_float(&self) -> RepF {
        RepF {
            n: self.n,
            j: self.j,
            dim: self.dim,
            h: self.h.iter().map(to_f64).collect(),
            e: self.e.iter().map(to_f64).collect(),
            f: self.f.iter().map(to_f64).collect(),
            hw_index: self.hw_index,
        }
    }
}

/// Max-norm of all Chevalley and highest-weight relation residuals,
/// computed exactly.
pub fn verify_chevalley(rep: &FundamentalRep) -> f64 {
    let k = cartan_matrix(Series::A, rep.n).expect("rank >= 1");
    let n = rep.n;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max(max_abs_q(&commutator(&rep.h[i], &rep.h[j])));
            let kij = Q::from_integer(k.entries[i][j]);
            worst = worst.max(max_abs_q(&(commutator(&rep.h[i], &rep.e[j]) - &rep.e[j] * kij)));
            worst = worst.max(max_abs_q(&(commutator(&rep.h[i], &rep.f[j]) + &rep.f[j] * kij)));
            let expect = if i == j { rep.h[j].clone() } else { QMatrix::zeros(rep.dim, rep.dim) };
            worst = worst.max(max_abs_q(&(commutator(&rep.e[i], &rep.f[j]) - expect)));
        }
    }
    let hw = rep.hw_index;
    for i in 0..n {
        worst = worst.max(rep.e[i].column(hw).iter().map(|q| q_to_f64(q).abs()).fold(0.0, f64::max));
        for r in 0..rep.dim {
            let expect = if r == hw && i + 1 == rep.j { Q::one() } else { Q::zero() };
            worst = worst.max(q_to_f64(&(rep.h[i][(r, hw)] - expect)).abs());
        }
    }
    worst
}

/// Same relations evaluated in floating point; used for corrupted inputs.
pub fn verify_chevalley_float(rep: &RepF) -> f64 {
    let k = cartan_matrix(Series::A, rep.n).expect("rank >= 1");
    let comm = |a: &DMatrix<f64>, b: &DMatrix<f64>| a * b - b * a;
    let mut worst = 0.0f64;
    for i in 0..rep.n {
        for j in 0..rep.n {
            let kij = k.entries[i][j] as f64;
            worst = worst.max(max_abs_f(&comm(&rep.h[i], &rep.h[j])));
            worst = worst.max(max_abs_f(&(comm(&rep.h[i], &rep.e[j]) - &rep.e[j] * kij)));
            worst = worst.max(max_abs_f(&(comm(&rep.h[i], &rep.f[j]) + &rep.f[j] * kij)));
            let expect = if i == j { rep.h[j].clone() } else { DMatrix::zeros(rep.dim, rep.dim) };
            worst = worst.max(max_abs_f(&(comm(&rep.e[i], &rep.f[j]) - expect)));
        }
    }
    let hw = rep.hw_index;
    for i in 0..rep.n {
        worst = worst.max(rep.e[i].column(hw).amax());
        for r in 0..rep.dim {
            let expect = if r == hw && i + 1 == rep.j { 1.0 } else { 0.0 };
            worst = worst.max((rep.h[i][(r, hw)] - expect).abs());
        }
    }
    worst
}

/// JSON-friendly dump with entries written as "p/q".
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RepDump {
    pub series: Series,
    pub n: usize,
    pub j: usize,
    pub dim: usize,
    pub hw_index: usize,
    pub h: Vec<Vec<Vec<String>>>,
    pub e: Vec<Vec<Vec<String>>>,
    pub f: Vec<Vec<Vec<String>>>,
}

fn dump_matrix(m: &QMatrix) -> Vec<Vec<String>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| format!("{}/{}", m[(r, c)].numer(), m[(r, c)].denom())).collect())
        .collect()
}

pub fn parse_rational(s: &str) -> Result<Q> {
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let p: i64 = p.trim().parse().map_err(|_| Error::Argument(format!("bad rational {s:?}")))?;
    let q: i64 = q.trim().parse().map_err(|_| Error::Argument(format!("bad rational {s:?}")))?;
    if q == 0 {
        return Err(Error::Argument(format!("zero denominator in {s:?}")));
    }
    Ok(Q::new(p, q))
}

impl FundamentalRep {
    pub fn dump(&self) -> RepDump {
        RepDump {
            series: Series::A,
            n: self.n,
            j: self.j,
            dim: self.dim,
            hw_index: self.hw_index,
            h: self.h.iter().map(dump_matrix).collect(),
            e: self.e.iter().map(dump_matrix).collect(),
            f: self.f.iter().map(dump_matrix).collect(),
        }
    }
}

impl RepDump {
    /// Rebuild the exact representation from a dump.
    pub fn load(&self) -> Result<FundamentalRep> {
        let parse = |m: &Vec<Vec<String>>| -> Result<QMatrix> {
            let rows = m.len();
            let cols = m.first().map_or(0, |r| r.len());
            let mut out = QMatrix::zeros(rows, cols);
            for (r, row) in m.iter().enumerate() {
                if row.len() != cols {
                    return Err(Error::Argument("ragged matrix in representation dump".into()));
                }
                for (c, s) in row.iter().enumerate() {
                    out[(r, c)] = parse_rational(s)?;
                }
            }
            Ok(out)
        };
        let all = |v: &Vec<Vec<Vec<String>>>| v.iter().map(parse).collect::<Result<Vec<_>>>();
        Ok(FundamentalRep {
            n: self.n,
            j: self.j,
            dim: self.dim,
            basis: subsets(self.n + 1, self.j),
            h: all(&self.h)?,
            e: all(&self.e)?,
            f: all(&self.f)?,
            hw_index: self.hw_index,
        })
    }
}

/// Binomial coefficient, used for dimension checks.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

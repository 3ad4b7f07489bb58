//! Exact integer and rational linear algebra over `Z^d`.
//!
//! Everything here is arbitrary precision: entries are [`BigInt`], rational
//! quantities are always-reduced [`BigRational`]. The operations are the ones
//! needed to conjugate integer matrices: determinants, exact inverses of
//! unimodular matrices, primitive kernel vectors and completion of a primitive
//! vector to a basis of `Z^d`.

use std::fmt;
use std::ops::{Index, Mul};

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Integer = BigInt;
pub type Rational = BigRational;
pub type IntVector = Vec<BigInt>;

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch { expected: c, got: bad.len() });
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Convenience constructor for small literal matrices.
    ///
    /// Panics on ragged or empty input.
    pub fn from_i64<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
        )
        .expect("literal matrix must be rectangular and non-empty")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m.data[i * d + i] = BigInt::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> IntVector {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare { rows: self.rows, cols: self.cols })
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn checked_mul(&self, rhs: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: rhs.rows });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = a * rhs.get(k, j);
                    out.data[i * rhs.cols + j] += prod;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Result<IntVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn mul_rational_vec(&self, v: &[BigRational]) -> Result<Vec<BigRational>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(BigRational::zero(), |acc, (a, b)| acc + b * a)
            })
            .collect())
    }

    /// `self - s * I`.
    pub fn sub_scalar_identity(&self, s: &BigInt) -> Result<IntMatrix> {
        let d = self.ensure_square()?;
        let mut m = self.clone();
        for i in 0..d {
            let v = m.get(i, i) - s;
            m.set(i, i, v);
        }
        Ok(m)
    }

    pub fn neg(&self) -> IntMatrix {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| -v).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn pow(&self, mut e: u64) -> Result<IntMatrix> {
        let d = self.ensure_square()?;
        let mut base = self.clone();
        let mut acc = Self::identity(d);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self.get(i, j).is_zero()))
    }

    /// Returns the common diagonal value `s` if the matrix is square, upper
    /// triangular and has every diagonal entry equal to `s` with `|s| = 1`.
    pub fn upper_unipotent_sign(&self) -> Option<i8> {
        if !self.is_square() || !self.is_upper_triangular() {
            return None;
        }
        let first = self.get(0, 0);
        let sign = if first.is_one() {
            1
        } else if *first == -BigInt::one() {
            -1
        } else {
            return None;
        };
        (0..self.rows).all(|i| self.get(i, i) == first).then_some(sign)
    }

    /// The lower-right `(d-k) x (d-k)` block.
    pub fn trailing_block(&self, k: usize) -> IntMatrix {
        let n = self.rows - k;
        let mut out = Self::zeros(n, self.cols - k);
        for i in 0..n {
            for j in 0..self.cols - k {
                out.set(i, j, self.get(i + k, j + k).clone());
            }
        }
        out
    }

    /// `diag(I_k, self)`.
    pub fn embed_lower_right(&self, k: usize) -> IntMatrix {
        let d = self.rows + k;
        let mut out = Self::identity(d);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i + k, j + k, self.get(i, j).clone());
            }
        }
        out
    }

    /// `self^T * v`, the pull-back of a frequency vector through `x -> self * x`.
    pub fn transpose_mul_vec(&self, v: &[BigInt]) -> Result<IntVector> {
        self.transpose().mul_vec(v)
    }

    pub fn max_abs_entry(&self) -> BigInt {
        self.data.iter().map(|v| v.abs()).max().unwrap_or_default()
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        self.get(i, j)
    }
}

impl Mul<&IntMatrix> for &IntMatrix {
    type Output = IntMatrix;

    /// Panics on incompatible shapes; use [`IntMatrix::checked_mul`] otherwise.
    fn mul(self, rhs: &IntMatrix) -> IntMatrix {
        self.checked_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A square integer matrix with determinant `+1` or `-1`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct UnimodularMatrix {
    matrix: IntMatrix,
    det: i8,
}

impl UnimodularMatrix {
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        let d = det(&matrix)?;
        let det = if d.is_one() {
            1
        } else if d == -BigInt::one() {
            -1
        } else {
            return Err(Error::NotUnimodular(d.to_string()));
        };
        Ok(Self { matrix, det })
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: IntMatrix::identity(d), det: 1 }
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> IntMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn det(&self) -> i8 {
        self.det
    }

    pub fn inverse(&self) -> UnimodularMatrix {
        unimodular_inverse(self)
    }

    pub fn compose(&self, rhs: &UnimodularMatrix) -> UnimodularMatrix {
        UnimodularMatrix { matrix: &self.matrix * &rhs.matrix, det: self.det * rhs.det }
    }
}

/// Extended Euclid: returns `(g, x, y)` with `a*x + b*y = g` and `g >= 0`.
pub fn extended_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let (mut old_r, mut r) = (a.clone(), b.clone());
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    let (mut old_t, mut t) = (BigInt::zero(), BigInt::one());
    while !r.is_zero() {
        let q = old_r.div_floor(&r);
        let next_r = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = &old_s - &q * &s;
        old_s = std::mem::replace(&mut s, next_s);
        let next_t = &old_t - &q * &t;
        old_t = std::mem::replace(&mut t, next_t);
    }
    if old_r.is_negative() {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Solves `p*r - q*s = 1` for coprime `p, q`.
///
/// The pair is canonical: for `p != 0`, `s` is reduced into `[0, |p|)` (and
/// `r` adjusted along the solution line `r + q*t, s + p*t`). For `p = 0` the
/// only solutions are `s = -q`, and `r = 0` is returned.
pub fn bezout(p: &BigInt, q: &BigInt) -> Result<(BigInt, BigInt)> {
    let (g, x, y) = extended_gcd(p, q);
    if !g.is_one() {
        return Err(Error::NotCoprime(p.to_string(), q.to_string()));
    }
    // p*x + q*y = 1, so (r, s) = (x, -y).
    let (r, s) = (x, -y);
    if p.is_zero() {
        return Ok((BigInt::zero(), -q.clone()));
    }
    let modulus = p.abs();
    let s_canon = s.mod_floor(&modulus);
    // s_canon = s + p*t
    let t = (&s_canon - &s) / p;
    let r_canon = r + q * &t;
    Ok((r_canon, s_canon))
}

/// Exact determinant by Bareiss fraction-free elimination.
pub fn det(m: &IntMatrix) -> Result<BigInt> {
    let n = m.ensure_square()?;
    let mut a = m.to_rows();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    Ok(sign * &a[n - 1][n - 1])
}

/// Reduced row echelon form over `Q`, pivoting on the leftmost nonzero column
/// and the smallest row index. Returns the reduced rows and pivot columns.
pub(crate) fn rref(m: &IntMatrix) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut a: Vec<Vec<BigRational>> = m
        .to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(BigRational::from_integer).collect())
        .collect();
    let (rows, cols) = (m.rows, m.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for v in a[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let (pivot, row) = if i < r {
                    let (lo, hi) = a.split_at_mut(r);
                    (&hi[0], &mut lo[i])
                } else {
                    let (lo, hi) = a.split_at_mut(i);
                    (&lo[r], &mut hi[0])
                };
                for (x, y) in row.iter_mut().zip(pivot) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Exact two-sided inverse of a unimodular matrix.
pub fn unimodular_inverse(m: &UnimodularMatrix) -> UnimodularMatrix {
    let d = m.dim();
    let mut aug = IntMatrix::zeros(d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            aug.set(i, j, m.matrix.get(i, j).clone());
        }
        aug.set(i, d + i, BigInt::one());
    }
    let (reduced, _) = rref(&aug);
    let data = reduced
        .into_iter()
        .flat_map(|row| row.into_iter().skip(d))
        .map(|v| {
            debug_assert!(v.is_integer(), "inverse of a unimodular matrix is integral");
            v.to_integer()
        })
        .collect();
    UnimodularMatrix {
        matrix: IntMatrix { rows: d, cols: d, data },
        det: m.det,
    }
}

pub fn gcd_of(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// Primitive integer vector spanning the first free direction of the kernel.
///
/// The rational null space is read off the reduced row echelon form; the
/// vector attached to the smallest free column is scaled to integers, divided
/// by its content and given a positive leading entry.
pub fn kernel_primitive_vector(m: &IntMatrix) -> Result<IntVector> {
    let (reduced, pivots) = rref(m);
    let free = (0..m.cols).find(|c| !pivots.contains(c)).ok_or(Error::TrivialKernel)?;
    let mut v = vec![BigRational::zero(); m.cols];
    v[free] = BigRational::one();
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -reduced[row][free].clone();
    }
    let lcm = v.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let mut ints: IntVector = v.iter().map(|x| (x * &lcm).to_integer()).collect();
    let g = gcd_of(&ints);
    for x in ints.iter_mut() {
        *x /= &g;
    }
    if ints.iter().find(|x| !x.is_zero()).is_some_and(Signed::is_negative) {
        for x in ints.iter_mut() {
            *x = -&*x;
        }
    }
    Ok(ints)
}

/// Completes a primitive vector to a unimodular matrix with determinant `+1`
/// whose first column is `v`.
///
/// When the first two coordinates are coprime the classical Bézout block
/// `[[v1, s], [v2, r]]` is used with the remaining columns taken from the
/// identity. Otherwise a chain of extended-gcd row operations reduces `v` to
/// `e1`, and the inverse of the accumulated transform is returned.
pub fn complete_to_unimodular(v: &[BigInt]) -> Result<UnimodularMatrix> {
    let d = v.len();
    if d == 0 {
        return Err(Error::InvalidParameter("empty vector".into()));
    }
    let g = gcd_of(v);
    if !g.is_one() {
        return Err(Error::NotPrimitive(g.to_string()));
    }
    if d == 1 {
        return if v[0].is_one() {
            Ok(UnimodularMatrix::identity(1))
        } else {
            Err(Error::NoPositiveCompletion(v[0].to_string()))
        };
    }
    if let Ok((r, s)) = bezout(&v[0], &v[1]) {
        let mut p = IntMatrix::identity(d);
        for (i, x) in v.iter().enumerate() {
            p.set(i, 0, x.clone());
        }
        p.set(0, 1, s);
        p.set(1, 1, r);
        return Ok(UnimodularMatrix { matrix: p, det: 1 });
    }

    // U * v = e1 with det(U) = 1, then P = U^{-1}.
    let mut w: IntVector = v.to_vec();
    let mut u = IntMatrix::identity(d);
    for i in (1..d).rev() {
        if w[i].is_zero() {
            continue;
        }
        let (g, x, y) = extended_gcd(&w[0], &w[i]);
        let (a0, ai) = (&w[0] / &g, &w[i] / &g);
        // [[x, y], [-ai, a0]] has determinant x*a0 + y*ai = 1.
        for j in 0..d {
            let (u0, ui) = (u.get(0, j).clone(), u.get(i, j).clone());
            u.set(0, j, &x * &u0 + &y * &ui);
            u.set(i, j, &a0 * &ui - &ai * &u0);
        }
        w[0] = g;
        w[i] = BigInt::zero();
    }
    if w[0].is_negative() {
        // Negate rows 0 and 1 together to keep det(U) = 1.
        for r in 0..2 {
            for j in 0..d {
                let v = -u.get(r, j);
                u.set(r, j, v);
            }
        }
    }
    let p = unimodular_inverse(&UnimodularMatrix { matrix: u, det: 1 });
    debug_assert_eq!(p.matrix.column(0), v);
    Ok(p)
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: &BigRational) -> BigRational {
    x - x.floor()
}

pub fn parse_integer(s: &str) -> Result<BigInt> {
    s.trim().parse::<BigInt>().map_err(|e| Error::Parse(format!("integer {s:?}: {e}")))
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"-0.125"` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let den = parse_integer(d)?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(parse_integer(n)?, den));
    }
    if let Some((int, fr)) = t.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), fr);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!("decimal {s:?}")));
        }
        let mut num = parse_integer(&digits)?;
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), fr.len());
        return Ok(BigRational::new(num, den));
    }
    Ok(BigRational::from_integer(parse_integer(t)?))
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Integer literal in JSON: a decimal string (no precision cap) or a plain
/// JSON integer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum IntLiteral {
    Text(String),
    Number(serde_json::Number),
}

impl IntLiteral {
    pub(crate) fn to_bigint(&self) -> Result<BigInt> {
        match self {
            IntLiteral::Text(s) => parse_integer(s),
            IntLiteral::Number(n) => {
                if let Some(v) = n.as_i64() {
                    Ok(BigInt::from(v))
                } else if let Some(v) = n.as_u64() {
                    Ok(BigInt::from(v))
                } else {
                    Err(Error::Parse(format!("non-integer matrix entry {n}")))
                }
            }
        }
    }
}

/// Wire form `{"rows": r, "cols": c, "entries": [["1", "0"], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Vec<IntLiteral>>,
}

impl From<&IntMatrix> for MatrixJson {
    fn from(m: &IntMatrix) -> Self {
        MatrixJson {
            rows: m.rows,
            cols: m.cols,
            entries: m
                .to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(|v| IntLiteral::Text(v.to_string())).collect())
                .collect(),
        }
    }
}

impl TryFrom<MatrixJson> for IntMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.entries.len() != j.rows {
            return Err(Error::DimensionMismatch { expected: j.rows, got: j.entries.len() });
        }
        let rows = j
            .entries
            .iter()
            .map(|r| {
                if r.len() != j.cols {
                    return Err(Error::DimensionMismatch { expected: j.cols, got: r.len() });
                }
                r.iter().map(IntLiteral::to_bigint).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        IntMatrix::from_rows(rows)
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        IntMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn vec_i(v: &[i64]) -> IntVector {
        v.iter().map(|&x| bi(x)).collect()
    }

    /// Expansion by minors along the first row.
    fn cofactor_det(m: &[Vec<i64>]) -> BigInt {
        let n = m.len();
        if n == 1 {
            return bi(m[0][0]);
        }
        (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect())
                    .collect();
                let term = bi(m[0][j]) * cofactor_det(&minor);
                if j % 2 == 0 {
                    term
                } else {
                    -term
                }
            })
            .sum()
    }

    #[test]
    fn bezout_examples() {
        assert_eq!(bezout(&bi(1), &bi(0)).unwrap(), (bi(1), bi(0)));
        assert_eq!(bezout(&bi(2), &bi(1)).unwrap(), (bi(1), bi(1)));
        // Brute force over a small window: the canonical pair is the unique
        // solution of 5r - 3s = 1 with s in [0, 5).
        let brute: Vec<(i64, i64)> = (-20..=20)
            .flat_map(|r| (0..5).map(move |s| (r, s)))
            .filter(|&(r, s)| 5 * r - 3 * s == 1)
            .collect();
        assert_eq!(brute, vec![(2, 3)]);
        assert_eq!(bezout(&bi(5), &bi(3)).unwrap(), (bi(2), bi(3)));
    }

    #[test]
    fn bezout_rejects_common_factor() {
        assert!(matches!(bezout(&bi(4), &bi(6)), Err(Error::NotCoprime(..))));
        assert!(matches!(bezout(&bi(0), &bi(0)), Err(Error::NotCoprime(..))));
    }

    #[test]
    fn bezout_edge_signs() {
        for (p, q) in [(0, 1), (0, -1), (-1, 0), (-7, 3), (7, -3), (-7, -3), (1, 17)] {
            let (r, s) = bezout(&bi(p), &bi(q)).unwrap();
            assert_eq!(bi(p) * &r - bi(q) * &s, bi(1), "({p}, {q})");
        }
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(det(&IntMatrix::identity(4)).unwrap(), bi(1));
        assert_eq!(det(&IntMatrix::from_i64(&[[1, 0], [1, 1]])).unwrap(), bi(1));
        assert_eq!(det(&IntMatrix::from_i64(&[[0, 1], [1, 0]])).unwrap(), bi(-1));
        assert!(matches!(
            det(&IntMatrix::from_i64(&[[1, 2, 3]])),
            Err(Error::NotSquare { rows: 1, cols: 3 })
        ));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        use rand::{Rng, SeedableRng};
        let mut rng = crate::rng::SplitMix64::seed_from_u64(5);
        for _ in 0..40 {
            let rows: Vec<Vec<i64>> =
                (0..5).map(|_| (0..5).map(|_| rng.random_range(-9..=9)).collect()).collect();
            let m = IntMatrix::from_i64(&rows);
            assert_eq!(det(&m).unwrap(), cofactor_det(&rows));
        }
    }

    #[test]
    fn inverse_of_bezout_block() {
        // P = [[p, s], [q, r]] with pr - qs = 1 inverts to [[r, -s], [-q, p]].
        let (p, q) = (bi(7), bi(5));
        let (r, s) = bezout(&p, &q).unwrap();
        let m = IntMatrix::from_rows(vec![vec![p.clone(), s.clone()], vec![q.clone(), r.clone()]]).unwrap();
        let inv = unimodular_inverse(&UnimodularMatrix::new(m).unwrap());
        let expected = IntMatrix::from_rows(vec![vec![r, -s], vec![-q, p]]).unwrap();
        assert_eq!(inv.matrix(), &expected);
        assert_eq!(unimodular_inverse(&UnimodularMatrix::identity(3)).matrix(), &IntMatrix::identity(3));
    }

    #[test]
    fn unimodular_rejects_other_determinants() {
        let m = IntMatrix::from_i64(&[[2, 0], [0, 1]]);
        assert!(matches!(UnimodularMatrix::new(m), Err(Error::NotUnimodular(_))));
    }

    #[test]
    fn kernel_examples() {
        let m = IntMatrix::from_i64(&[[0, 0], [1, 0]]);
        assert_eq!(kernel_primitive_vector(&m).unwrap(), vec_i(&[0, 1]));
        assert_eq!(kernel_primitive_vector(&IntMatrix::zeros(3, 3)).unwrap(), vec_i(&[1, 0, 0]));
        let a = IntMatrix::from_i64(&[[1, 2, 3], [0, 1, 4], [0, 0, 1]]);
        let m = a.sub_scalar_identity(&bi(1)).unwrap();
        assert_eq!(kernel_primitive_vector(&m).unwrap(), vec_i(&[1, 0, 0]));
        assert_eq!(kernel_primitive_vector(&IntMatrix::identity(2)), Err(Error::TrivialKernel));
    }

    #[test]
    fn kernel_clears_denominators() {
        // x + 2y - 3z = 0, 2x + 4y - 6z = 0 -> first free column y: (-2, 1, 0) -> (2, -1, 0)
        let m = IntMatrix::from_i64(&[[2, 4, -6], [1, 2, -3], [0, 0, 0]]);
        let v = kernel_primitive_vector(&m).unwrap();
        assert_eq!(v, vec_i(&[2, -1, 0]));
        // 3x - 2y = 0 -> (2, 3)
        let v = kernel_primitive_vector(&IntMatrix::from_i64(&[[3, -2], [6, -4]])).unwrap();
        assert_eq!(v, vec_i(&[2, 3]));
    }

    #[test]
    fn completion_examples() {
        assert_eq!(complete_to_unimodular(&vec_i(&[1, 0, 0, 0])).unwrap().matrix(), &IntMatrix::identity(4));
        assert_eq!(
            complete_to_unimodular(&vec_i(&[2, 3])).unwrap().matrix(),
            &IntMatrix::from_i64(&[[2, 1], [3, 2]])
        );
        for v in [vec_i(&[6, 10, 15]), vec_i(&[0, 0, -1]), vec_i(&[-6, 10, 15, 0]), vec_i(&[4, 6, 9])] {
            let p = complete_to_unimodular(&v).unwrap();
            assert_eq!(p.matrix().column(0), v);
            assert_eq!(det(p.matrix()).unwrap(), bi(1));
        }
        assert!(matches!(complete_to_unimodular(&vec_i(&[2, 4])), Err(Error::NotPrimitive(_))));
        assert!(complete_to_unimodular(&vec_i(&[-1])).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("1/3").unwrap(), BigRational::new(bi(1), bi(3)));
        assert_eq!(parse_rational("-0.125").unwrap(), BigRational::new(bi(-1), bi(8)));
        assert_eq!(parse_rational("4/8").unwrap(), BigRational::new(bi(1), bi(2)));
        assert_eq!(parse_rational(" 7 ").unwrap(), BigRational::from_integer(bi(7)));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(format_rational(&BigRational::new(bi(-2), bi(4))), "-1/2");
    }

    #[test]
    fn matrix_json_codec() {
        let m = IntMatrix::from_rows(vec![
            vec![parse_integer("123456789012345678901234567890").unwrap(), bi(-1)],
            vec![bi(0), bi(1)],
        ])
        .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(
            text,
            r#"{"rows":2,"cols":2,"entries":[["123456789012345678901234567890","-1"],["0","1"]]}"#
        );
        let back: IntMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let numeric: IntMatrix = serde_json::from_str(r#"{"rows":1,"cols":2,"entries":[[3,-4]]}"#).unwrap();
        assert_eq!(numeric, IntMatrix::from_i64(&[[3, -4]]));
        assert!(serde_json::from_str::<IntMatrix>(r#"{"rows":2,"cols":2,"entries":[[1,0]]}"#).is_err());
        assert!(serde_json::from_str::<IntMatrix>(r#"{"rows":1,"cols":1,"entries":[[1]],"x":0}"#).is_err());
    }
}

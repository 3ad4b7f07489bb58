//! Closed-form orbit coordinates for upper triangular unipotent flows.
//!
//! For `B` upper triangular with unit diagonal, the i-th coordinate of
//! `T^n_{B,b} x` (before reduction mod 1) is a polynomial in `n` of degree at
//! most `d - i + 1` (1-based `i`). It is produced bottom-up: the last
//! coordinate is `x_d + n b_d`, and each higher coordinate is the running sum
//! of the contributions of the coordinates below it.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{format_rational, frac, IntMatrix};
use crate::torus::{AffineTorusFlow, TorusPoint};

/// Polynomial with exact rational coefficients in ascending degree order.
///
/// The coefficient vector never has a trailing zero; the zero polynomial has
/// no coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RationalPolynomial {
    coeffs: Vec<BigRational>,
}

impl RationalPolynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// Parses ascending coefficients such as `["0", "1/2"]`.
    pub fn parse(coeffs: &[&str]) -> Result<Self> {
        Ok(Self::new(coeffs.iter().map(|c| crate::lattice::parse_rational(c)).collect::<Result<_>>()?))
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect())
    }

    /// `n`, as a polynomial.
    pub fn identity() -> Self {
        Self::from_i64(&[0, 1])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, n: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * n + c)
    }

    pub fn eval_int(&self, n: i64) -> BigRational {
        self.eval(&BigRational::from_integer(n.into()))
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..len)
                .map(|i| {
                    let a = self.coeffs.get(i).cloned().unwrap_or_default();
                    let b = other.coeffs.get(i).cloned().unwrap_or_default();
                    a + b
                })
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `p(a n + b)`.
    pub fn compose_affine(&self, a: &BigRational, b: &BigRational) -> Self {
        let lin = Self::new(vec![b.clone(), a.clone()]);
        self.coeffs
            .iter()
            .rev()
            .fold(Self::zero(), |acc, c| acc.mul(&lin).add(&Self::constant(c.clone())))
    }

    /// Binomial polynomial `C(n, m) = n (n-1) ... (n-m+1) / m!`.
    pub fn binomial(m: usize) -> Self {
        let mut p = Self::from_i64(&[1]);
        for j in 0..m {
            let factor = Self::from_i64(&[-(j as i64), 1]).scale(&BigRational::new(BigInt::one(), BigInt::from(j + 1)));
            p = p.mul(&factor);
        }
        p
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(format_rational).collect()
    }
}

impl fmt::Debug for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_strings())
    }
}

impl Serialize for RationalPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

/// `q(n) = sum_{k=1}^{n-1} p(k)`, as the unique polynomial with `q(1) = 0`
/// and `q(n+1) - q(n) = p(n)`.
pub fn discrete_sum(p: &RationalPolynomial) -> RationalPolynomial {
    let Some(deg) = p.degree() else {
        return RationalPolynomial::zero();
    };
    // Newton coefficients: p(n) = sum_j D_j C(n, j) with D_j the j-th forward
    // difference at 0; then sum_{k=0}^{n-1} C(k, j) = C(n, j+1).
    let mut diffs: Vec<BigRational> = (0..=deg as i64).map(|k| p.eval_int(k)).collect();
    let mut total = RationalPolynomial::zero();
    for j in 0..=deg {
        total = total.add(&RationalPolynomial::binomial(j + 1).scale(&diffs[0]));
        diffs = diffs.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    total.sub(&RationalPolynomial::constant(p.eval_int(0)))
}

/// `p(n) mod 1` in `[0, 1)`.
pub fn evaluate_mod1(p: &RationalPolynomial, n: u64) -> BigRational {
    frac(&p.eval(&BigRational::from_integer(n.into())))
}

/// Coordinate polynomials of an orbit of an upper triangular flow.
///
/// For unit diagonal a single polynomial per coordinate covers every
/// `n >= 0`. For diagonal `-1` the orbit splits by parity: `polys` is valid on
/// even `n` and `odd_polys` on odd `n`, both written in the variable `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitPolynomials {
    pub polys: Vec<RationalPolynomial>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub odd_polys: Option<Vec<RationalPolynomial>>,
}

impl OrbitPolynomials {
    pub fn dim(&self) -> usize {
        self.polys.len()
    }

    pub fn is_parity_split(&self) -> bool {
        self.odd_polys.is_some()
    }

    /// The polynomials that describe `T^n x`.
    pub fn branch(&self, n: u64) -> &[RationalPolynomial] {
        match &self.odd_polys {
            Some(odd) if n % 2 == 1 => odd,
            _ => &self.polys,
        }
    }

    pub fn point_at(&self, n: u64) -> TorusPoint {
        TorusPoint::new(self.branch(n).iter().map(|p| p.eval(&BigRational::from_integer(n.into()))).collect())
    }

    /// Checks `deg P_i <= d - i + 1` (1-based) on every branch.
    pub fn degrees_within_bounds(&self) -> bool {
        let d = self.dim();
        std::iter::once(&self.polys)
            .chain(self.odd_polys.as_ref())
            .all(|polys| polys.iter().enumerate().all(|(i, p)| p.degree().is_none_or(|deg| deg <= d - i)))
    }
}

/// Closed-form orbit of `x` under `y -> B y + b` for upper triangular `B`
/// with constant diagonal `+1` or `-1`.
pub fn orbit_polynomials(b_matrix: &IntMatrix, shift: &TorusPoint, x: &TorusPoint) -> Result<OrbitPolynomials> {
    let sign = b_matrix.upper_unipotent_sign().ok_or(Error::NotUpperUnipotent)?;
    let d = b_matrix.rows();
    for p in [shift, x] {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
    }
    if sign == 1 {
        return Ok(OrbitPolynomials {
            polys: positive_orbit(b_matrix, shift.coords(), x.coords()),
            odd_polys: None,
        });
    }
    // Diagonal -1: T^2 = (B^2, B b + b) is unit upper triangular.
    let square = b_matrix * b_matrix;
    let bb = b_matrix.mul_rational_vec(shift.coords())?;
    let shift2: Vec<BigRational> = bb.iter().zip(shift.coords()).map(|(u, v)| u + v).collect();
    let flow = AffineTorusFlow::new(b_matrix.clone(), shift.clone())?;
    let x1 = flow.apply(x)?;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let even = positive_orbit(&square, &shift2, x.coords())
        .iter()
        .map(|p| p.compose_affine(&half, &BigRational::zero()))
        .collect();
    let odd = positive_orbit(&square, &shift2, x1.coords())
        .iter()
        .map(|p| p.compose_affine(&half, &-half.clone()))
        .collect();
    Ok(OrbitPolynomials { polys: even, odd_polys: Some(odd) })
}

fn positive_orbit(b: &IntMatrix, shift: &[BigRational], x: &[BigRational]) -> Vec<RationalPolynomial> {
    let d = b.rows();
    let mut polys = vec![RationalPolynomial::zero(); d];
    for i in (0..d).rev() {
        // x_i(n) = x_i + sum_{k=0}^{n-1} step(k), step(k) = b_i + sum_{j>i} B_ij x_j(k)
        let mut step = RationalPolynomial::constant(shift[i].clone());
        for (j, pj) in polys.iter().enumerate().skip(i + 1) {
            let c = b.get(i, j);
            if !c.is_zero() {
                step = step.add(&pj.scale(&BigRational::from_integer(c.clone())));
            }
        }
        let head = x[i].clone() + step.eval_int(0);
        polys[i] = discrete_sum(&step).add(&RationalPolynomial::constant(head));
    }
    polys
}

/// Phase `sum_i k_i P_i(n)` of the character `e(k . x_n)` along an orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitPhase {
    pub poly: RationalPolynomial,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub odd_poly: Option<RationalPolynomial>,
}

impl OrbitPhase {
    pub fn branch(&self, n: u64) -> &RationalPolynomial {
        match &self.odd_poly {
            Some(odd) if n % 2 == 1 => odd,
            _ => &self.poly,
        }
    }

    pub fn eval_mod1(&self, n: u64) -> BigRational {
        evaluate_mod1(self.branch(n), n)
    }
}

pub fn phase_polynomial(k: &[BigInt], orbit: &OrbitPolynomials) -> Result<OrbitPhase> {
    if k.len() != orbit.dim() {
        return Err(Error::DimensionMismatch { expected: orbit.dim(), got: k.len() });
    }
    let combine = |polys: &[RationalPolynomial]| {
        polys
            .iter()
            .zip(k)
            .filter(|(_, ki)| !ki.is_zero())
            .fold(RationalPolynomial::zero(), |acc, (p, ki)| acc.add(&p.scale(&BigRational::from_integer(ki.clone()))))
    };
    Ok(OrbitPhase { poly: combine(&orbit.polys), odd_poly: orbit.odd_polys.as_deref().map(combine) })
}

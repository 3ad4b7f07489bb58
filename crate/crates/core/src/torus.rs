//! Affine maps `x -> A x + a (mod 1)` on the d-torus with exact rational
//! points.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{det, format_rational, frac, parse_rational, IntMatrix, UnimodularMatrix};

/// A point of `R^d / Z^d` with every coordinate in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TorusPoint(Vec<BigRational>);

impl TorusPoint {
    /// Reduces each coordinate mod 1.
    pub fn new(coords: Vec<BigRational>) -> Self {
        Self(coords.iter().map(frac).collect())
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![BigRational::zero(); d])
    }

    pub fn parse(coords: &[&str]) -> Result<Self> {
        Ok(Self::new(coords.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?))
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(format_rational).collect()
    }
}

/// `T_{A,a}(x) = A x + a mod 1` with `A` unimodular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineTorusFlow {
    matrix: IntMatrix,
    shift: TorusPoint,
}

impl AffineTorusFlow {
    pub fn new(matrix: IntMatrix, shift: TorusPoint) -> Result<Self> {
        let d = matrix.ensure_square()?;
        if shift.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: shift.dim() });
        }
        let dt = det(&matrix)?;
        if dt.abs() != BigInt::one() {
            return Err(Error::NotUnimodular(dt.to_string()));
        }
        Ok(Self { matrix, shift })
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn shift(&self) -> &TorusPoint {
        &self.shift
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    fn check_dim(&self, x: &TorusPoint) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(())
    }

    pub fn apply(&self, x: &TorusPoint) -> Result<TorusPoint> {
        self.check_dim(x)?;
        let ax = self.matrix.mul_rational_vec(x.coords())?;
        Ok(TorusPoint::new(ax.into_iter().zip(self.shift.coords()).map(|(v, s)| v + s).collect()))
    }

    /// `n`-fold application, reducing after every step.
    pub fn iterate(&self, x: &TorusPoint, n: u64) -> Result<TorusPoint> {
        self.check_dim(x)?;
        let mut cur = x.clone();
        for _ in 0..n {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// Orbit `x, T x, ..., T^n x`.
    pub fn orbit(&self, x: &TorusPoint, n: u64) -> Result<Vec<TorusPoint>> {
        self.check_dim(x)?;
        let mut out = Vec::with_capacity(n as usize + 1);
        out.push(x.clone());
        for _ in 0..n {
            let next = self.apply(out.last().expect("non-empty"))?;
            out.push(next);
        }
        Ok(out)
    }

    /// `A^n x + (A^{n-1} + ... + I) a mod 1` by binary powering of the
    /// homogeneous matrix `[[A, a], [0, 1]]`.
    pub fn iterate_closed_form(&self, x: &TorusPoint, n: u64) -> Result<TorusPoint> {
        self.check_dim(x)?;
        let d = self.dim();
        // (M, s) stands for y -> M y + s; composition reduces s mod 1.
        let compose = |(m1, s1): &(IntMatrix, Vec<BigRational>), (m2, s2): &(IntMatrix, Vec<BigRational>)| {
            let ms2 = m1.mul_rational_vec(s2).expect("square");
            (m1 * m2, ms2.iter().zip(s1).map(|(a, b)| frac(&(a + b))).collect::<Vec<_>>())
        };
        let mut acc = (IntMatrix::identity(d), vec![BigRational::zero(); d]);
        let mut base = (self.matrix.clone(), self.shift.coords().to_vec());
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = compose(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = compose(&base, &base);
            }
        }
        let mx = acc.0.mul_rational_vec(x.coords())?;
        Ok(TorusPoint::new(mx.into_iter().zip(acc.1).map(|(a, b)| a + b).collect()))
    }

    /// `h(x) = P x mod 1`.
    pub fn push_forward(p: &UnimodularMatrix, x: &TorusPoint) -> Result<TorusPoint> {
        Ok(TorusPoint::new(p.matrix().mul_rational_vec(x.coords())?))
    }
}

/// The flow `T_{B,b}` with `B = P^{-1} A P`, `b = P^{-1} a mod 1`, so that
/// `T_{A,a}(P x) = P T_{B,b}(x)` on the torus.
pub fn conjugate_flow(flow: &AffineTorusFlow, p: &UnimodularMatrix) -> Result<AffineTorusFlow> {
    if p.dim() != flow.dim() {
        return Err(Error::DimensionMismatch { expected: flow.dim(), got: p.dim() });
    }
    let p_inv = p.inverse();
    let b = p_inv.matrix() * &(flow.matrix() * p.matrix());
    let shift = TorusPoint::new(p_inv.matrix().mul_rational_vec(flow.shift().coords())?);
    Ok(AffineTorusFlow { matrix: b, shift })
}

/// Zero-entropy trichotomy of 2x2 affine flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum FlowClass {
    DistalUnipotent { sign: i8 },
    Equicontinuous,
    PositiveEntropy { log_modulus: f64 },
}

/// Classifies a 2x2 flow by trace and determinant.
///
/// With `det = 1`: `|tr| > 2` has entropy `log` of the spectral radius,
/// `tr = +-2` is (negative-)unipotent, `|tr| < 2` has eigenvalues on the unit
/// circle other than `+-1`. With `det = -1`: `tr != 0` has positive entropy,
/// `tr = 0` has eigenvalues `1, -1`.
pub fn classify_flow_2x2(flow: &AffineTorusFlow) -> Result<FlowClass> {
    classify_matrix_2x2(flow.matrix())
}

pub fn classify_matrix_2x2(a: &IntMatrix) -> Result<FlowClass> {
    if a.rows() != 2 || a.cols() != 2 {
        return Err(Error::WrongDimension { expected: 2, got: a.rows().max(a.cols()) });
    }
    let dt = det(a)?;
    let tr = a.get(0, 0) + a.get(1, 1);
    let two = BigInt::from(2);
    let tr_f: f64 = num_traits::ToPrimitive::to_f64(&tr).unwrap_or(f64::INFINITY);
    if dt.is_one() {
        if tr.abs() > two {
            let t = tr_f.abs();
            let radius = (t + (t * t - 4.0).sqrt()) / 2.0;
            Ok(FlowClass::PositiveEntropy { log_modulus: radius.ln() })
        } else if tr.abs() == two {
            Ok(FlowClass::DistalUnipotent { sign: if tr.is_positive() { 1 } else { -1 } })
        } else {
            Ok(FlowClass::Equicontinuous)
        }
    } else if dt == -BigInt::one() {
        if tr.is_zero() {
            Ok(FlowClass::Equicontinuous)
        } else {
            let t = tr_f.abs();
            let radius = (t + (t * t + 4.0).sqrt()) / 2.0;
            Ok(FlowClass::PositiveEntropy { log_modulus: radius.ln() })
        }
    } else {
        Err(Error::NotUnimodular(dt.to_string()))
    }
}

/// Wire form `{"A": matrix, "a": ["1/3", "0"], "dim": d}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowJson {
    #[serde(rename = "A")]
    pub matrix: IntMatrix,
    #[serde(rename = "a")]
    pub shift: Vec<String>,
    pub dim: usize,
}

impl From<&AffineTorusFlow> for FlowJson {
    fn from(f: &AffineTorusFlow) -> Self {
        FlowJson { matrix: f.matrix.clone(), shift: f.shift.to_strings(), dim: f.dim() }
    }
}

impl TryFrom<FlowJson> for AffineTorusFlow {
    type Error = Error;

    fn try_from(j: FlowJson) -> Result<Self> {
        if j.matrix.rows() != j.dim {
            return Err(Error::DimensionMismatch { expected: j.dim, got: j.matrix.rows() });
        }
        let refs: Vec<&str> = j.shift.iter().map(String::as_str).collect();
        AffineTorusFlow::new(j.matrix, TorusPoint::parse(&refs)?)
    }
}

impl Serialize for AffineTorusFlow {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FlowJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for AffineTorusFlow {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        AffineTorusFlow::try_from(FlowJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

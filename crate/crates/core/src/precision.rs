//! Binary fixed-point reals on top of `BigInt`, with just enough
//! transcendental support (square root, logarithm, exponential) to evaluate
//! `alpha * g(beta)` at thousands of bits.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::parse_rational;

/// `mant / 2^bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixed {
    mant: BigInt,
    bits: u64,
}

impl Fixed {
    pub fn from_mantissa(mant: BigInt, bits: u64) -> Self {
        Self { mant, bits }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn one(bits: u64) -> Self {
        Self { mant: BigInt::one() << bits, bits }
    }

    /// `floor(r * 2^bits) / 2^bits`.
    pub fn from_rational(r: &BigRational, bits: u64) -> Self {
        let num = r.numer() << bits;
        Self { mant: num_integer::Integer::div_floor(&num, r.denom()), bits }
    }

    /// `floor(sqrt(r) * 2^bits) / 2^bits` for `r >= 0`.
    pub fn sqrt_rational(r: &BigRational, bits: u64) -> Self {
        let scaled = num_integer::Integer::div_floor(&(r.numer() << (2 * bits)), r.denom());
        Self { mant: scaled.sqrt(), bits }
    }

    pub fn with_bits(&self, bits: u64) -> Self {
        let mant = if bits >= self.bits {
            &self.mant << (bits - self.bits)
        } else {
            &self.mant >> (self.bits - bits)
        };
        Self { mant, bits }
    }

    pub fn mul(&self, other: &Fixed) -> Fixed {
        debug_assert_eq!(self.bits, other.bits);
        Fixed { mant: (&self.mant * &other.mant) >> self.bits, bits: self.bits }
    }

    pub fn add(&self, other: &Fixed) -> Fixed {
        debug_assert_eq!(self.bits, other.bits);
        Fixed { mant: &self.mant + &other.mant, bits: self.bits }
    }

    pub fn div(&self, other: &Fixed) -> Fixed {
        debug_assert_eq!(self.bits, other.bits);
        Fixed { mant: (&self.mant << self.bits) / &other.mant, bits: self.bits }
    }

    pub fn mul_rational_floor(&self, r: &BigRational) -> Fixed {
        let mant = num_integer::Integer::div_floor(&(&self.mant * r.numer()), r.denom());
        Fixed { mant, bits: self.bits }
    }

    pub fn sqrt(&self) -> Fixed {
        Fixed { mant: (&self.mant << self.bits).sqrt(), bits: self.bits }
    }

    /// Fractional part as an `f64` in `[0, 1)`, from the top 64 fractional bits.
    pub fn frac_f64(&self) -> f64 {
        let top = if self.bits >= 64 {
            (&self.mant >> (self.bits - 64)) & BigInt::from(u64::MAX)
        } else {
            (&self.mant << (64 - self.bits)) & BigInt::from(u64::MAX)
        };
        let v = top.to_u64().expect("masked to 64 bits");
        // Rounding can push values within 2^-54 of 1 up to exactly 1.0.
        let f = v as f64 / 18446744073709551616.0;
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    }

    pub fn to_f64(&self) -> f64 {
        let shift = self.mant.bits().saturating_sub(60);
        let head = (&self.mant >> shift).to_f64().unwrap_or(f64::NAN);
        head * 2f64.powi(shift as i32 - self.bits as i32)
    }

    /// Natural logarithm for a positive value.
    pub fn ln(&self) -> Fixed {
        assert!(self.mant.is_positive(), "logarithm of a non-positive value");
        let target = self.bits;
        // Split x = m * 2^k with m in [1, 2).
        let k = self.mant.bits() as i64 - 1 - self.bits as i64;
        let reductions = ((target as f64).sqrt() / 2.0).ceil().max(4.0) as u64;
        let guard = reductions + 32 + 64 - u64::from(target.leading_zeros());
        let wp = target + guard;
        let m = Fixed {
            mant: if k >= 0 { self.mant.clone() << (wp - target) >> k as u64 } else { self.mant.clone() << ((wp - target) as i64 - k) as u64 },
            bits: wp,
        };
        let mut result = ln_near_one(&m, reductions);
        if k != 0 {
            let ln2 = ln_near_one(&Fixed { mant: BigInt::from(2) << wp, bits: wp }, reductions);
            result.mant += ln2.mant * BigInt::from(k);
        }
        result.with_bits(target)
    }

    /// `e^x`.
    pub fn exp(&self) -> Fixed {
        let target = self.bits;
        let reductions = ((target as f64).sqrt() / 2.0).ceil().max(4.0) as u64;
        // Integer part of x costs bits in the squaring phase; keep them as guard too.
        let int_bits = (&self.mant >> self.bits).abs().bits();
        let guard = 2 * reductions + 32 + int_bits + 64 - u64::from(target.leading_zeros());
        let wp = target + guard;
        let y = Fixed { mant: (&self.mant << (wp - target)) >> reductions, bits: wp };
        let one = Fixed::one(wp);
        let mut sum = one.clone();
        let mut term = one;
        let mut k = 1u64;
        loop {
            term = term.mul(&y);
            term.mant /= BigInt::from(k);
            if term.mant.is_zero() {
                break;
            }
            sum = sum.add(&term);
            k += 1;
        }
        for _ in 0..reductions {
            sum = sum.mul(&sum);
        }
        sum.with_bits(target)
    }
}

/// `ln m` for `m` in `[1, 2]`, via `2^r * 2 atanh((y-1)/(y+1))` with
/// `y = m^(1/2^r)`.
fn ln_near_one(m: &Fixed, reductions: u64) -> Fixed {
    let wp = m.bits;
    let mut y = m.clone();
    for _ in 0..reductions {
        y = y.sqrt();
    }
    let one = Fixed::one(wp);
    let z = Fixed { mant: &y.mant - &one.mant, bits: wp }.div(&Fixed { mant: &y.mant + &one.mant, bits: wp });
    let z2 = z.mul(&z);
    let mut power = z.clone();
    let mut sum = z;
    let mut k = 3u64;
    loop {
        power = power.mul(&z2);
        let term = &power.mant / BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum.mant += term;
        k += 2;
    }
    Fixed { mant: sum.mant << (reductions + 1), bits: wp }
}

/// A real parameter known in closed form: a rational or the square root of
/// a non-negative rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealParam {
    Rational(BigRational),
    Sqrt(BigRational),
}

impl RealParam {
    /// Accepts `"p/q"`, decimals such as `"1.5"`, and `"sqrt(r)"`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            let r = parse_rational(inner)?;
            if r.is_negative() {
                return Err(Error::InvalidParameter(format!("sqrt of negative {inner}")));
            }
            return Ok(Self::Sqrt(r));
        }
        Ok(Self::Rational(parse_rational(t)?))
    }

    /// Exact value of a finite `f64`.
    pub fn from_f64(v: f64) -> Result<Self> {
        BigRational::from_float(v)
            .map(Self::Rational)
            .ok_or_else(|| Error::InvalidParameter(format!("non-finite value {v}")))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            RealParam::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            RealParam::Sqrt(r) => r.to_f64().unwrap_or(f64::NAN).sqrt(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RealParam::Rational(r) | RealParam::Sqrt(r) => r.is_zero(),
        }
    }

    pub fn to_fixed(&self, bits: u64) -> Fixed {
        match self {
            RealParam::Rational(r) => Fixed::from_rational(r, bits),
            RealParam::Sqrt(r) => Fixed::sqrt_rational(r, bits),
        }
    }

    /// `(s, stride)` with `self^stride = s` rational, `stride` in `{1, 2}`.
    pub fn rational_power_step(&self) -> (BigRational, u64) {
        match self {
            RealParam::Rational(r) => (r.clone(), 1),
            RealParam::Sqrt(r) => (r.clone(), 2),
        }
    }
}

impl std::fmt::Display for RealParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RealParam::Rational(r) => f.write_str(&crate::lattice::format_rational(r)),
            RealParam::Sqrt(r) => write!(f, "sqrt({})", crate::lattice::format_rational(r)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn sqrt_two_against_known_digits() {
        let s = Fixed::sqrt_rational(&q("2"), 200);
        assert!((s.to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
        // Squaring recovers 2 up to a couple of ulps at 200 bits.
        let sq = s.mul(&s);
        let err = (Fixed::from_rational(&q("2"), 200).mant - sq.mant).abs();
        assert!(err.bits() <= 203);
    }

    #[test]
    fn logarithm_matches_f64_and_identities() {
        for v in ["1.5", "2", "3", "10", "0.25", "1", "123456789/1000"] {
            let x = Fixed::from_rational(&q(v), 300);
            let expect = q(v).to_f64().unwrap().ln();
            assert!((x.ln().to_f64() - expect).abs() < 1e-14, "ln {v}");
        }
        // ln 6 = ln 2 + ln 3 to ~290 bits.
        let bits = 300;
        let l2 = Fixed::from_rational(&q("2"), bits).ln();
        let l3 = Fixed::from_rational(&q("3"), bits).ln();
        let l6 = Fixed::from_rational(&q("6"), bits).ln();
        assert!((l6.mant - l2.add(&l3).mant).abs().bits() < 10);
    }

    #[test]
    fn exponential_inverts_logarithm() {
        let bits = 400;
        for v in ["1.5", "7/3", "40"] {
            let x = Fixed::from_rational(&q(v), bits);
            let back = x.ln().exp();
            let rel = (back.mant.clone() - x.mant.clone()).abs().bits() as i64 - x.mant.bits() as i64;
            assert!(rel < -(bits as i64) + 20, "exp(ln {v}) lost precision: {rel}");
        }
        assert!((Fixed::from_rational(&q("1"), 128).exp().to_f64() - std::f64::consts::E).abs() < 1e-15);
        assert!((Fixed::from_rational(&q("-2"), 128).exp().to_f64() - (-2f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn fractional_parts() {
        assert_eq!(Fixed::from_rational(&q("16/3"), 128).frac_f64(), 1.0 / 3.0);
        assert_eq!(Fixed::from_rational(&q("8"), 128).frac_f64(), 0.0);
        assert_eq!(Fixed::from_rational(&q("-1/4"), 128).frac_f64(), 0.75);
        assert_eq!(Fixed::from_rational(&q("5/4"), 10).frac_f64(), 0.25);
    }

    #[test]
    fn param_parsing() {
        assert_eq!(RealParam::parse("sqrt(2)").unwrap(), RealParam::Sqrt(q("2")));
        assert_eq!(RealParam::parse("1.5").unwrap(), RealParam::Rational(q("3/2")));
        assert_eq!(RealParam::from_f64(0.5).unwrap(), RealParam::Rational(q("1/2")));
        assert!(RealParam::parse("sqrt(-1)").is_err());
        assert!(RealParam::from_f64(f64::NAN).is_err());
        assert_eq!(RealParam::parse("sqrt(3/2)").unwrap().to_string(), "sqrt(3/2)");
    }
}

//! Weight sequences `n -> c_n`: the Möbius function, geometric sequences
//! `exp(2 pi i alpha beta^n g(beta))`, and their moment statistic.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::precision::{Fixed, RealParam};
use crate::summation::KahanSum;

/// `mu[n]` for `0 <= n <= limit`, with `mu[0] = 0`.
///
/// Linear sieve: every composite is crossed out once, by its smallest prime
/// factor.
pub fn mobius_sieve(limit: usize) -> Vec<i8> {
    let mut mu = vec![0i8; limit + 1];
    if limit == 0 {
        return mu;
    }
    mu[1] = 1;
    let mut composite = vec![false; limit + 1];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let Some(m) = i.checked_mul(p).filter(|&m| m <= limit) else {
                break;
            };
            composite[m] = true;
            if i % p == 0 {
                mu[m] = 0;
                break;
            }
            mu[m] = -mu[i];
        }
    }
    mu
}

/// Segmented Möbius sieve yielding `(first_n, values)` blocks covering
/// `1..=limit`, using `O(sqrt(limit) + segment)` working memory.
pub struct MobiusSegments {
    limit: u64,
    next: u64,
    segment: u64,
    primes: Vec<u64>,
}

impl MobiusSegments {
    pub fn new(limit: u64, segment: u64) -> Self {
        let root = (limit as f64).sqrt() as u64 + 2;
        let small = mobius_sieve(root as usize);
        let primes = (2..=root).filter(|&p| small[p as usize] == -1 && is_prime_u64(p)).collect();
        // mu(p) = -1 narrows the candidates; trial division removes products of three primes.
        Self { limit, next: 1, segment: segment.max(1), primes }
    }
}

fn is_prime_u64(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

impl Iterator for MobiusSegments {
    type Item = (u64, Vec<i8>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next > self.limit {
            return None;
        }
        let lo = self.next;
        let hi = (lo + self.segment - 1).min(self.limit);
        let len = (hi - lo + 1) as usize;
        let mut mu = vec![1i8; len];
        let mut rest: Vec<u64> = (lo..=hi).collect();
        for &p in &self.primes {
            if p * p > hi {
                break;
            }
            let first = lo.div_ceil(p) * p;
            for m in (first..=hi).step_by(p as usize) {
                let idx = (m - lo) as usize;
                mu[idx] = -mu[idx];
                rest[idx] /= p;
            }
            let sq = p * p;
            let first = lo.div_ceil(sq) * sq;
            for m in (first..=hi).step_by(sq as usize) {
                mu[(m - lo) as usize] = 0;
            }
        }
        for (idx, r) in rest.iter().enumerate() {
            if *r > 1 && mu[idx] != 0 {
                mu[idx] = -mu[idx];
            }
        }
        self.next = hi + 1;
        Some((lo, mu))
    }
}

/// The catalog of admissible `g`: positive on `(1, inf)` with non-negative
/// first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum GFunction {
    Const1,
    Identity,
    Log,
    Power(f64),
}

impl GFunction {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "const1" | "1" => Ok(GFunction::Const1),
            "identity" | "id" => Ok(GFunction::Identity),
            "log" | "ln" => Ok(GFunction::Log),
            other => {
                let gamma = other
                    .strip_prefix("power(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::Parse(format!("unknown g function {other:?}")))?;
                let gamma: f64 = gamma.trim().parse().map_err(|e| Error::Parse(format!("power exponent: {e}")))?;
                Ok(GFunction::Power(gamma))
            }
        }
    }
}

impl fmt::Display for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GFunction::Const1 => f.write_str("const1"),
            GFunction::Identity => f.write_str("identity"),
            GFunction::Log => f.write_str("log"),
            GFunction::Power(g) => write!(f, "power({g})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricParams {
    pub alpha: RealParam,
    pub beta: RealParam,
    pub g: GFunction,
    pub precision_bits: u64,
}

impl GeometricParams {
    pub fn new(alpha: RealParam, beta: RealParam, g: GFunction, precision_bits: u64) -> Result<Self> {
        if alpha.is_zero() {
            return Err(Error::InvalidParameter("alpha must be non-zero".into()));
        }
        let beta_gt_one = match &beta {
            RealParam::Rational(r) => r > &BigRational::one(),
            RealParam::Sqrt(r) => r > &BigRational::one(),
        };
        if !beta_gt_one {
            return Err(Error::InvalidParameter(format!("beta = {beta} must exceed 1")));
        }
        if let GFunction::Power(gamma) = g {
            if !(gamma.is_finite() && gamma >= 0.0) {
                return Err(Error::InvalidParameter(format!("power exponent {gamma} must be finite and >= 0")));
            }
        }
        Ok(Self { alpha, beta, g, precision_bits })
    }

    /// Floor `ceil(n log2 beta) + 64` on the working precision for term `n`.
    pub fn required_bits(&self, n: u64) -> u64 {
        (n as f64 * self.beta.to_f64().log2()).ceil() as u64 + 64
    }

    /// `alpha * g(beta)` with `bits` fractional bits (plus internal guard).
    fn scale_constant(&self, bits: u64) -> Fixed {
        let wp = bits + 32;
        let alpha = self.alpha.to_fixed(wp);
        let beta = self.beta.to_fixed(wp);
        let g = match &self.g {
            GFunction::Const1 => Fixed::one(wp),
            GFunction::Identity => beta,
            GFunction::Log => beta.ln(),
            GFunction::Power(gamma) => {
                let gamma = BigRational::from_float(*gamma).expect("validated finite");
                if gamma.is_integer() {
                    let e = gamma.to_integer().to_u64().expect("non-negative exponent");
                    match &self.beta {
                        RealParam::Rational(r) => Fixed::from_rational(&num_traits::pow(r.clone(), e as usize), wp),
                        RealParam::Sqrt(r) => {
                            let even = Fixed::from_rational(&num_traits::pow(r.clone(), (e / 2) as usize), wp);
                            if e % 2 == 1 {
                                even.mul(&beta)
                            } else {
                                even
                            }
                        }
                    }
                } else {
                    beta.ln().mul(&Fixed::from_rational(&gamma, wp)).exp()
                }
            }
        };
        alpha.mul(&g)
    }
}

/// `exp(2 pi i theta_n)`, `theta_n = frac(alpha beta^n g(beta))`, with the
/// product formed at `precision_bits` fractional bits.
pub fn geometric_sequence(params: &GeometricParams, n: u64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidParameter("geometric sequences are indexed from n = 1".into()));
    }
    let required = params.required_bits(n);
    if params.precision_bits < required {
        return Err(Error::InsufficientPrecision { required, given: params.precision_bits });
    }
    let bits = params.precision_bits;
    let c = params.scale_constant(bits);
    let (step, stride) = params.beta.rational_power_step();
    let base = if stride == 2 && n % 2 == 1 { c.mul(&params.beta.to_fixed(c.bits())) } else { c };
    let value = base.mul_rational_floor(&num_traits::pow(step, (n / stride) as usize));
    Ok(unit(value.frac_f64()))
}

/// `c_1, ..., c_n_max` of a geometric sequence, generated incrementally.
///
/// One fixed-point run at `max(precision_bits, required_bits(n_max))` plus
/// guard bits; each step multiplies by a rational (`beta`, or `beta^2` on two
/// interleaved chains when `beta` is a square root), so the truncation error
/// after `n` steps stays below `beta^n (1 + 1/(beta - 1))` ulps.
pub fn geometric_table(params: &GeometricParams, n_max: u64) -> Vec<Complex64> {
    if n_max == 0 {
        return Vec::new();
    }
    let beta = params.beta.to_f64();
    let guard = 16 + (2.0 + 1.0 / (beta - 1.0)).log2().ceil() as u64;
    let bits = params.precision_bits.max(params.required_bits(n_max)) + guard;
    let c = params.scale_constant(bits);
    let (step, stride) = params.beta.rational_power_step();
    let mut chains = vec![c.clone()];
    if stride == 2 {
        chains.push(c.mul(&params.beta.to_fixed(c.bits())));
    }
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let chain = &mut chains[(n % stride) as usize];
        if n >= stride {
            *chain = chain.mul_rational_floor(&step);
        }
        out.push(unit(chain.frac_f64()));
    }
    out
}

fn unit(theta: f64) -> Complex64 {
    let (s, c) = (TAU * theta).sin_cos();
    Complex64::new(c, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Mobius,
    Geometric,
    Custom,
}

#[derive(Clone)]
enum Source {
    Mobius(Arc<[i8]>),
    Table(Arc<[Complex64]>),
    Function(Arc<dyn Fn(u64) -> Complex64 + Send + Sync>),
}

/// A deterministic complex sequence indexed from `n = 1`.
#[derive(Clone)]
pub struct WeightSequence {
    kind: WeightKind,
    label: String,
    source: Source,
}

impl WeightSequence {
    /// `mu(n)` for `n <= n_max`.
    pub fn mobius(n_max: u64) -> Self {
        Self {
            kind: WeightKind::Mobius,
            label: "mobius".into(),
            source: Source::Mobius(mobius_sieve(n_max as usize).into()),
        }
    }

    pub fn from_mobius_table(mu: Vec<i8>) -> Self {
        Self { kind: WeightKind::Mobius, label: "mobius".into(), source: Source::Mobius(mu.into()) }
    }

    pub fn geometric(params: &GeometricParams, n_max: u64) -> Self {
        let label = format!("geometric(alpha={}, beta={}, g={})", params.alpha, params.beta, params.g);
        Self { kind: WeightKind::Geometric, label, source: Source::Table(geometric_table(params, n_max).into()) }
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(u64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { kind: WeightKind::Custom, label: label.into(), source: Source::Function(Arc::new(f)) }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::custom(format!("constant({c})"), move |_| c)
    }

    /// `exp(2 pi i n theta)`.
    pub fn character(theta: f64) -> Self {
        Self::custom(format!("character({theta})"), move |n| unit((n as f64 * theta).rem_euclid(1.0)))
    }

    pub fn from_values(label: impl Into<String>, values: Vec<Complex64>) -> Self {
        Self { kind: WeightKind::Custom, label: label.into(), source: Source::Table(values.into()) }
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest `n` the sequence can produce, or `None` if unbounded.
    pub fn available(&self) -> Option<u64> {
        match &self.source {
            Source::Mobius(mu) => Some(mu.len().saturating_sub(1) as u64),
            Source::Table(t) => Some(t.len() as u64),
            Source::Function(_) => None,
        }
    }

    pub fn ensure_available(&self, n: u64) -> Result<()> {
        match self.available() {
            Some(avail) if avail < n => Err(Error::SequenceTooShort { available: avail, requested: n }),
            _ => Ok(()),
        }
    }

    /// `c_n`; panics when `n` is outside the precomputed range.
    #[inline]
    pub fn get(&self, n: u64) -> Complex64 {
        match &self.source {
            Source::Mobius(mu) => Complex64::new(f64::from(mu[n as usize]), 0.0),
            Source::Table(t) => t[(n - 1) as usize],
            Source::Function(f) => f(n),
        }
    }
}

impl fmt::Debug for WeightSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightSequence")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .field("available", &self.available())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequenceStats {
    pub lambda: f64,
    pub k_estimate: f64,
    pub n_used: u64,
}

/// `(1/N) sum_{n <= N} |c_n|^lambda`.
pub fn lambda_moment(seq: &WeightSequence, lambda: f64, n: u64) -> Result<SequenceStats> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must exceed 1")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    seq.ensure_available(n)?;
    let mut acc = KahanSum::default();
    for i in 1..=n {
        acc.add(seq.get(i).norm().powf(lambda));
    }
    Ok(SequenceStats { lambda, k_estimate: acc.total() / n as f64, n_used: n })
}

/// Trial-division Möbius value; test oracle and spot-checker.
pub fn mobius_trial_division(mut n: u64) -> i8 {
    assert!(n >= 1);
    let mut mu = 1i8;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

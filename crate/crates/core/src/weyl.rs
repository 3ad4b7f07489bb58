//! Weighted Weyl sums, oscillation probes and disjointness averages
//! `S_N(x) = (1/N) sum_{n=1}^{N} c_n f(T^n x)` for trigonometric `f`.
//!
//! Polynomial phases are always reduced mod 1 exactly. A phase `P(n) = Q(n)/D`
//! with integer `Q` is evaluated by Horner's rule on `Q mod D`: in wrapping
//! `u64` arithmetic when `D` is a power of two up to `2^64`, in `u128` when
//! `D < 2^63`, and with big integers otherwise. Real coefficients are taken
//! at their exact binary value, so they fall on the power-of-two path.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{format_rational, frac, IntMatrix};
use crate::orbit::{orbit_polynomials, phase_polynomial, OrbitPhase, RationalPolynomial};
use crate::rng::SplitMix64;
use crate::sequences::{WeightKind, WeightSequence};
use crate::summation::{checkpointed_segment_means, KahanSum, SumOptions, BLOCK_TERMS};
use crate::torus::{conjugate_flow, AffineTorusFlow, TorusPoint};
use crate::triangular::triangularize;

#[inline]
fn e(theta: f64) -> Complex64 {
    let (s, c) = (TAU * theta).sin_cos();
    Complex64::new(c, s)
}

/// `Q(n) mod D`, ready for repeated evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
enum PhaseKernel {
    Zero,
    Dyadic { coeffs: Vec<u64>, shift: u32 },
    Modular { coeffs: Vec<u64>, den: u64 },
    Big { coeffs: Vec<BigInt>, den: BigInt },
}

impl PhaseKernel {
    fn compile(p: &RationalPolynomial) -> Self {
        if p.is_zero() {
            return PhaseKernel::Zero;
        }
        let den = p.coeffs().iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let coeffs: Vec<BigInt> =
            p.coeffs().iter().map(|c| (c.numer() * (&den / c.denom())).mod_floor(&den)).collect();
        let bits = den.bits();
        if bits <= 65 && den.trailing_zeros() == Some(bits - 1) {
            return PhaseKernel::Dyadic {
                coeffs: coeffs.iter().map(|c| c.to_u64().expect("below 2^64")).collect(),
                shift: (bits - 1) as u32,
            };
        }
        if bits <= 63 {
            return PhaseKernel::Modular {
                coeffs: coeffs.iter().map(|c| c.to_u64().expect("below den")).collect(),
                den: den.to_u64().expect("below 2^63"),
            };
        }
        PhaseKernel::Big { coeffs, den }
    }

    /// `P(n) mod 1` as a double in `[0, 1]`.
    #[inline]
    fn frac(&self, n: u64) -> f64 {
        match self {
            PhaseKernel::Zero => 0.0,
            PhaseKernel::Dyadic { coeffs, shift } => {
                let acc = coeffs.iter().rev().fold(0u64, |acc, &c| acc.wrapping_mul(n).wrapping_add(c));
                if *shift == 0 {
                    0.0
                } else {
                    let masked = if *shift == 64 { acc } else { acc & ((1u64 << shift) - 1) };
                    masked as f64 * (-f64::from(*shift)).exp2()
                }
            }
            PhaseKernel::Modular { coeffs, den } => {
                let d = u128::from(*den);
                let x = u128::from(n) % d;
                let acc = coeffs.iter().rev().fold(0u128, |acc, &c| (acc * x + u128::from(c)) % d);
                acc as f64 / *den as f64
            }
            PhaseKernel::Big { coeffs, den } => {
                let x = BigInt::from(n);
                let acc = coeffs.iter().rev().fold(BigInt::zero(), |acc, c| (acc * &x + c).mod_floor(den));
                BigRational::new(acc, den.clone()).to_f64().unwrap_or(0.0)
            }
        }
    }
}

/// A phase compiled for the hot loop; parity-split phases carry two kernels.
#[derive(Debug, Clone)]
struct CompiledPhase {
    even: PhaseKernel,
    odd: Option<PhaseKernel>,
}

impl CompiledPhase {
    #[inline]
    fn frac(&self, n: u64) -> f64 {
        match &self.odd {
            Some(odd) if n % 2 == 1 => odd.frac(n),
            _ => self.even.frac(n),
        }
    }
}

/// Phase polynomial `P` of a Weyl sum `sum c_n e(P(n))`.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSpec {
    Rational(RationalPolynomial),
    /// An orbit phase; diagonal `-1` flows select the branch by parity of `n`.
    Orbit(OrbitPhase),
    /// Ascending real coefficients, each used at its exact binary value.
    Real(Vec<f64>),
}

impl PhaseSpec {
    /// `n^k t`.
    pub fn monomial(k: u32, t: BigRational) -> Self {
        let mut coeffs = vec![BigRational::zero(); k as usize + 1];
        coeffs[k as usize] = t;
        PhaseSpec::Rational(RationalPolynomial::new(coeffs))
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            PhaseSpec::Rational(p) => p.degree(),
            PhaseSpec::Orbit(o) => o.poly.degree().max(o.odd_poly.as_ref().and_then(RationalPolynomial::degree)),
            PhaseSpec::Real(c) => c.iter().rposition(|&x| x != 0.0),
        }
    }

    fn compile(&self) -> Result<CompiledPhase> {
        Ok(match self {
            PhaseSpec::Rational(p) => CompiledPhase { even: PhaseKernel::compile(p), odd: None },
            PhaseSpec::Orbit(o) => CompiledPhase {
                even: PhaseKernel::compile(&o.poly),
                odd: o.odd_poly.as_ref().map(PhaseKernel::compile),
            },
            PhaseSpec::Real(c) => {
                let coeffs = c
                    .iter()
                    .map(|&x| {
                        BigRational::from_float(x)
                            .map(|r| frac(&r))
                            .ok_or_else(|| Error::InvalidParameter(format!("non-finite phase coefficient {x}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                CompiledPhase { even: PhaseKernel::compile(&RationalPolynomial::new(coeffs)), odd: None }
            }
        })
    }
}

impl fmt::Display for PhaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |p: &RationalPolynomial| p.to_strings().join(" ");
        match self {
            PhaseSpec::Rational(p) => write!(f, "rational[{}]", join(p)),
            PhaseSpec::Orbit(o) => match &o.odd_poly {
                None => write!(f, "orbit[{}]", join(&o.poly)),
                Some(odd) => write!(f, "orbit[even: {}; odd: {}]", join(&o.poly), join(odd)),
            },
            PhaseSpec::Real(c) => {
                let parts: Vec<String> = c.iter().map(|x| format!("{x:e}")).collect();
                write!(f, "real[{}]", parts.join(" "))
            }
        }
    }
}

/// `f(x) = sum_k a_k e(k . x)` with `k` in a box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    dim: usize,
    lower: Vec<i64>,
    upper: Vec<i64>,
    terms: BTreeMap<Vec<i64>, Complex64>,
}

impl TrigPolynomial {
    /// Coefficients for repeated frequencies are added together.
    pub fn new(
        lower: Vec<i64>,
        upper: Vec<i64>,
        terms: impl IntoIterator<Item = (Vec<i64>, Complex64)>,
    ) -> Result<Self> {
        let dim = lower.len();
        if upper.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidParameter(format!("empty box {lower:?}..{upper:?}")));
        }
        let mut map = BTreeMap::new();
        for (k, a) in terms {
            if k.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: k.len() });
            }
            if k.iter().zip(lower.iter().zip(&upper)).any(|(ki, (l, u))| ki < l || ki > u) {
                return Err(Error::InvalidParameter(format!("frequency {k:?} outside {lower:?}..{upper:?}")));
            }
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite coefficient for {k:?}")));
            }
            *map.entry(k).or_insert(Complex64::zero()) += a;
        }
        Ok(Self { dim, lower, upper, terms: map })
    }

    /// Box taken as the bounding box of the frequencies.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<i64>, Complex64)>) -> Result<Self> {
        let terms: Vec<_> = terms.into_iter().collect();
        let mut lower = vec![0; dim];
        let mut upper = vec![0; dim];
        for (i, (k, _)) in terms.iter().enumerate() {
            if k.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: k.len() });
            }
            for j in 0..dim {
                if i == 0 {
                    lower[j] = k[j];
                    upper[j] = k[j];
                }
                lower[j] = lower[j].min(k[j]);
                upper[j] = upper[j].max(k[j]);
            }
        }
        Self::new(lower, upper, terms)
    }

    /// The character `e(k . x)`.
    pub fn character(k: Vec<i64>) -> Self {
        Self::new(k.clone(), k.clone(), [(k, Complex64::one())]).expect("single in-box term")
    }

    /// Every frequency of the box with `a_k = r e(phi)`, `r, phi` uniform in
    /// `[0, 1)`.
    pub fn random_box(lower: Vec<i64>, upper: Vec<i64>, seed: u64) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidParameter(format!("empty box {lower:?}..{upper:?}")));
        }
        let mut rng = SplitMix64::seed_from_u64(seed);
        let mut terms = Vec::new();
        let mut k = lower.clone();
        loop {
            let r: f64 = rng.random();
            let phi: f64 = rng.random();
            terms.push((k.clone(), r * e(phi)));
            // Odometer over the box, last coordinate fastest.
            let mut j = k.len();
            loop {
                if j == 0 {
                    return Self::new(lower, upper, terms);
                }
                j -= 1;
                if k[j] < upper[j] {
                    k[j] += 1;
                    break;
                }
                k[j] = lower[j];
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[i64], Complex64)> {
        self.terms.iter().map(|(k, a)| (k.as_slice(), *a))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `sum |a_k|`, an upper bound for `sup |f|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.values().map(|a| a.norm()).sum()
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, a)| a * e(k.iter().zip(x).map(|(&ki, xi)| ki as f64 * xi).sum::<f64>()))
            .sum()
    }

    /// `f o h` for `h(x) = P x`: frequency `k` becomes `P^T k`.
    pub fn pullback(&self, p: &IntMatrix) -> Result<Self> {
        if p.rows() != self.dim || p.cols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: p.rows() });
        }
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| {
                let kb: Vec<BigInt> = k.iter().map(|&v| BigInt::from(v)).collect();
                let pk = p.transpose_mul_vec(&kb)?;
                let pk = pk
                    .iter()
                    .map(|v| v.to_i64().ok_or_else(|| Error::InvalidParameter(format!("frequency {v} overflows i64"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok((pk, *a))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(self.dim, terms)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    k: Vec<i64>,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrigJson {
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lower: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upper: Option<Vec<i64>>,
    terms: Vec<TermJson>,
}

impl Serialize for TrigPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TrigJson {
            dim: self.dim,
            lower: Some(self.lower.clone()),
            upper: Some(self.upper.clone()),
            terms: self.terms.iter().map(|(k, a)| TermJson { k: k.clone(), re: a.re, im: a.im }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrigPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = TrigJson::deserialize(d)?;
        let terms = j.terms.into_iter().map(|t| (t.k, Complex64::new(t.re, t.im)));
        match (j.lower, j.upper) {
            (Some(l), Some(u)) => {
                if l.len() != j.dim {
                    return Err(serde::de::Error::custom(format!("box has dimension {}, expected {}", l.len(), j.dim)));
                }
                TrigPolynomial::new(l, u, terms)
            }
            (None, None) => TrigPolynomial::from_terms(j.dim, terms),
            _ => Err(Error::InvalidParameter("give both lower and upper, or neither".into())),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub n: u64,
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
    /// `(1/N) sum |c_n| * sum |a_k|`.
    pub bound: f64,
}

impl SeriesPoint {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Averages at increasing checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumSeries {
    pub points: Vec<SeriesPoint>,
    pub weights: WeightKind,
    pub weights_label: String,
    pub descriptor: String,
}

impl SumSeries {
    pub fn at(&self, n: u64) -> Option<&SeriesPoint> {
        self.points.iter().find(|p| p.n == n)
    }

    pub fn last(&self) -> &SeriesPoint {
        self.points.last().expect("series has at least one checkpoint")
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.magnitude).collect()
    }

    /// `N,re,im,mag` rows; floats in shortest round-trip exponent form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,re,im,mag\n");
        for p in &self.points {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", p.n, p.re, p.im, p.magnitude));
        }
        out
    }
}

fn build_series(
    means: Vec<[f64; 3]>,
    checkpoints: &[u64],
    sup: f64,
    weights: &WeightSequence,
    descriptor: String,
) -> Result<SumSeries> {
    let points = means
        .into_iter()
        .zip(checkpoints)
        .map(|([re, im, abs], &n)| {
            let magnitude = re.hypot(im);
            let bound = abs * sup;
            if magnitude > bound * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::BoundViolated { n, magnitude: magnitude.to_string(), bound: bound.to_string() });
            }
            Ok(SeriesPoint { n, re, im, magnitude, bound })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SumSeries { points, weights: weights.kind(), weights_label: weights.label().to_string(), descriptor })
}

fn prepare(weights: &WeightSequence, checkpoints: &[u64]) -> Result<()> {
    crate::summation::validate_checkpoints(checkpoints)?;
    weights.ensure_available(*checkpoints.last().expect("validated"))
}

/// Kahan sums of `(re, im, |c_n|)` of `c_n g(n)` over `lo..=hi`, skipping
/// zero weights.
#[inline]
fn weighted_segment(weights: &WeightSequence, lo: u64, hi: u64, mut g: impl FnMut(u64) -> Complex64) -> [f64; 3] {
    let mut acc = [KahanSum::default(); 3];
    for n in lo..=hi {
        let c = weights.get(n);
        if c.is_zero() {
            continue;
        }
        let z = c * g(n);
        acc[0].add(z.re);
        acc[1].add(z.im);
        acc[2].add(c.norm());
    }
    acc.map(|a| a.total())
}

/// `(1/N) sum_{n <= N} c_n e(P(n))` at each checkpoint.
pub fn weyl_sum(
    weights: &WeightSequence,
    phase: &PhaseSpec,
    checkpoints: &[u64],
    opts: &SumOptions,
) -> Result<SumSeries> {
    prepare(weights, checkpoints)?;
    let kernel = phase.compile()?;
    let means = checkpointed_segment_means(
        |lo, hi| weighted_segment(weights, lo, hi, |n| e(kernel.frac(n))),
        checkpoints,
        opts,
    )?;
    build_series(means, checkpoints, 1.0, weights, format!("weyl {phase}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    Weak,
    /// Weak phases plus `samples` random polynomials of degree at most `m`.
    Strong { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeEntry {
    /// Exponent `k` of a weak phase `n^k t`; `None` for sampled polynomials.
    pub order: Option<u32>,
    pub phase: String,
    pub series: SumSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeSummary {
    pub n: u64,
    pub max: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub checkpoints: Vec<u64>,
    pub weak: Vec<ProbeEntry>,
    pub strong: Vec<ProbeEntry>,
}

fn summarize<'a>(checkpoints: &[u64], entries: impl Iterator<Item = &'a ProbeEntry> + Clone) -> Vec<ProbeSummary> {
    checkpoints
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut mags: Vec<f64> = entries.clone().map(|e| e.series.points[i].magnitude).collect();
            mags.sort_by(f64::total_cmp);
            let len = mags.len();
            let median = match len {
                0 => f64::NAN,
                _ if len % 2 == 1 => mags[len / 2],
                _ => (mags[len / 2 - 1] + mags[len / 2]) / 2.0,
            };
            ProbeSummary { n, max: mags.last().copied().unwrap_or(f64::NAN), median }
        })
        .collect()
}

impl ProbeReport {
    pub fn weak_summary(&self) -> Vec<ProbeSummary> {
        summarize(&self.checkpoints, self.weak.iter())
    }

    /// Weak phases `n^k t` for one `k`.
    pub fn summary_for_order(&self, k: u32) -> Vec<ProbeSummary> {
        summarize(&self.checkpoints, self.weak.iter().filter(move |e| e.order == Some(k)))
    }

    pub fn strong_summary(&self) -> Vec<ProbeSummary> {
        summarize(&self.checkpoints, self.strong.iter())
    }
}

/// `(2j + 1)/40` for `j < 20`, then `0` and the binary value of `(sqrt 5 - 1)/2`.
pub fn default_t_grid() -> Vec<BigRational> {
    let mut grid: Vec<BigRational> =
        (0..20).map(|j| BigRational::new(BigInt::from(2 * j + 1), BigInt::from(40))).collect();
    grid.push(BigRational::zero());
    grid.push(BigRational::from_float((5f64.sqrt() - 1.0) / 2.0).expect("finite"));
    grid
}

/// Weak (and optionally strong) higher-order oscillation probe of order `m`.
pub fn oscillation_probe(
    weights: &WeightSequence,
    m: u32,
    t_grid: &[BigRational],
    mode: ProbeMode,
    checkpoints: &[u64],
    opts: &SumOptions,
) -> Result<ProbeReport> {
    if m == 0 {
        return Err(Error::InvalidParameter("probe order m must be at least 1".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| t.is_negative() || **t >= BigRational::one()) {
        return Err(Error::InvalidParameter(format!("t = {} is outside [0, 1)", format_rational(t))));
    }
    prepare(weights, checkpoints)?;
    let mut weak = Vec::new();
    for k in 1..=m {
        for t in t_grid {
            let phase = PhaseSpec::monomial(k, t.clone());
            let series = weyl_sum(weights, &phase, checkpoints, opts)?;
            weak.push(ProbeEntry { order: Some(k), phase: format!("n^{k} * {}", format_rational(t)), series });
        }
    }
    let mut strong = Vec::new();
    if let ProbeMode::Strong { samples, seed } = mode {
        let mut rng = SplitMix64::seed_from_u64(seed);
        for _ in 0..samples {
            let deg = rng.random_range(1..=m as usize);
            let mut coeffs = vec![0.0];
            coeffs.extend((0..deg).map(|_| rng.random::<f64>()));
            let phase = PhaseSpec::Real(coeffs);
            let series = weyl_sum(weights, &phase, checkpoints, opts)?;
            strong.push(ProbeEntry { order: None, phase: phase.to_string(), series });
        }
    }
    Ok(ProbeReport { checkpoints: checkpoints.to_vec(), weak, strong })
}

/// A unimodular flow `x -> A x + a mod 1` with real shift, for the float engine.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTorusFlow {
    matrix: IntMatrix,
    shift: Vec<f64>,
}

impl RealTorusFlow {
    pub fn new(matrix: IntMatrix, shift: Vec<f64>) -> Result<Self> {
        let d = matrix.ensure_square()?;
        if shift.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: shift.len() });
        }
        let dt = crate::lattice::det(&matrix)?;
        if dt.abs() != BigInt::one() {
            return Err(Error::NotUnimodular(dt.to_string()));
        }
        if shift.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("non-finite shift".into()));
        }
        Ok(Self { matrix, shift })
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowData {
    Rational(AffineTorusFlow),
    Real(RealTorusFlow),
}

impl FlowData {
    pub fn dim(&self) -> usize {
        match self {
            FlowData::Rational(f) => f.dim(),
            FlowData::Real(f) => f.matrix.rows(),
        }
    }

    fn float_parts(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let (m, shift) = match self {
            FlowData::Rational(f) => (f.matrix(), f.shift().to_f64()),
            FlowData::Real(f) => (f.matrix(), f.shift.clone()),
        };
        let entries = m
            .to_rows()
            .iter()
            .flatten()
            .map(|v| v.to_f64().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidParameter("matrix entries overflow f64".into()))?;
        Ok((entries, shift))
    }
}

impl From<AffineTorusFlow> for FlowData {
    fn from(f: AffineTorusFlow) -> Self {
        FlowData::Rational(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointData {
    Rational(TorusPoint),
    Real(Vec<f64>),
}

impl PointData {
    pub fn dim(&self) -> usize {
        match self {
            PointData::Rational(p) => p.dim(),
            PointData::Real(p) => p.len(),
        }
    }

    fn to_f64(&self) -> Vec<f64> {
        match self {
            PointData::Rational(p) => p.to_f64(),
            PointData::Real(p) => p.iter().map(|v| v - v.floor()).collect(),
        }
    }
}

impl From<TorusPoint> for PointData {
    fn from(p: TorusPoint) -> Self {
        PointData::Rational(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Exact,
    Float,
}

/// `(a_k, phase_k)` such that `f(T^n x) = sum a_k e(phase_k(n))`.
///
/// Upper triangular flows are expanded directly; other unipotent flows are
/// first conjugated to triangular form, with `f` pulled back along `P`.
pub fn exact_expansion(
    flow: &AffineTorusFlow,
    f: &TrigPolynomial,
    x: &TorusPoint,
) -> Result<Vec<(Complex64, OrbitPhase)>> {
    let d = flow.dim();
    for got in [f.dim(), x.dim()] {
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    let (flow, f, x) = if flow.matrix().upper_unipotent_sign().is_some() {
        (flow.clone(), f.clone(), x.clone())
    } else {
        let form = triangularize(flow.matrix()).map_err(|err| match err {
            Error::NotUnipotent => Error::EngineUnavailable("exact engine needs a unipotent matrix".into()),
            other => other,
        })?;
        let y = AffineTorusFlow::push_forward(&form.p.inverse(), x)?;
        (conjugate_flow(flow, &form.p)?, f.pullback(form.p.matrix())?, y)
    };
    let orbit = orbit_polynomials(flow.matrix(), flow.shift(), &x)?;
    f.terms()
        .map(|(k, a)| {
            let k: Vec<BigInt> = k.iter().map(|&v| BigInt::from(v)).collect();
            Ok((a, phase_polynomial(&k, &orbit)?))
        })
        .collect()
}

/// `S_N(x) = (1/N) sum_{n <= N} c_n f(T^n x)` at each checkpoint.
pub fn disjointness_series(
    weights: &WeightSequence,
    flow: &FlowData,
    f: &TrigPolynomial,
    x: &PointData,
    checkpoints: &[u64],
    engine: Engine,
    opts: &SumOptions,
) -> Result<SumSeries> {
    let d = flow.dim();
    for got in [f.dim(), x.dim()] {
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    prepare(weights, checkpoints)?;
    let sup = f.sup_bound();
    match engine {
        Engine::Exact => {
            let (FlowData::Rational(flow), PointData::Rational(x)) = (flow, x) else {
                return Err(Error::EngineUnavailable("exact engine needs rational shift and point".into()));
            };
            let terms = exact_expansion(flow, f, x)?
                .into_iter()
                .map(|(a, phase)| Ok((a, PhaseSpec::Orbit(phase).compile()?)))
                .collect::<Result<Vec<_>>>()?;
            let means = checkpointed_segment_means(
                |lo, hi| {
                    weighted_segment(weights, lo, hi, |n| terms.iter().map(|(a, k)| a * e(k.frac(n))).sum())
                },
                checkpoints,
                opts,
            )?;
            build_series(means, checkpoints, sup, weights, format!("disjoint exact d={d} terms={}", f.len()))
        }
        Engine::Float => {
            let (matrix, shift) = flow.float_parts()?;
            let n_max = *checkpoints.last().expect("validated");
            let step = |x: &[f64], out: &mut [f64]| {
                for i in 0..d {
                    let v = matrix[i * d..(i + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + shift[i];
                    out[i] = v - v.floor();
                }
            };
            // Orbit states x_{j B} at block starts, produced sequentially once.
            let mut starts = vec![x.to_f64()];
            let mut cur = starts[0].clone();
            let mut next = vec![0.0; d];
            for n in 1..n_max {
                step(&cur, &mut next);
                std::mem::swap(&mut cur, &mut next);
                if n % BLOCK_TERMS == 0 {
                    starts.push(cur.clone());
                }
            }
            let terms: Vec<(Vec<f64>, Complex64)> =
                f.terms().map(|(k, a)| (k.iter().map(|&v| v as f64).collect(), a)).collect();
            let means = checkpointed_segment_means(
                |lo, hi| {
                    let block = (lo - 1) / BLOCK_TERMS;
                    let mut cur = starts[block as usize].clone();
                    let mut next = vec![0.0; d];
                    for _ in block * BLOCK_TERMS..lo - 1 {
                        step(&cur, &mut next);
                        std::mem::swap(&mut cur, &mut next);
                    }
                    let mut acc = [KahanSum::default(); 3];
                    for n in lo..=hi {
                        step(&cur, &mut next);
                        std::mem::swap(&mut cur, &mut next);
                        let c = weights.get(n);
                        if c.is_zero() {
                            continue;
                        }
                        let fx: Complex64 =
                            terms.iter().map(|(k, a)| a * e(k.iter().zip(&cur).map(|(ki, xi)| ki * xi).sum())).sum();
                        let z = c * fx;
                        acc[0].add(z.re);
                        acc[1].add(z.im);
                        acc[2].add(c.norm());
                    }
                    acc.map(|a| a.total())
                },
                checkpoints,
                opts,
            )?;
            build_series(means, checkpoints, sup, weights, format!("disjoint float d={d} terms={}", f.len()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: u64,
    pub magnitude: f64,
    /// `|S_prev| / |S_N|`; absent on the first row.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// Strictly decreasing magnitudes.
    pub monotone: bool,
}

impl DecayReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.ratio).collect()
    }
}

pub fn decay_from_magnitudes(points: &[(u64, f64)]) -> Result<DecayReport> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("decay report needs at least two checkpoints".into()));
    }
    let rows = points
        .iter()
        .enumerate()
        .map(|(i, &(n, magnitude))| DecayRow { n, magnitude, ratio: (i > 0).then(|| points[i - 1].1 / magnitude) })
        .collect();
    let monotone = points.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(DecayReport { rows, monotone })
}

pub fn decay_report(series: &SumSeries) -> Result<DecayReport> {
    let points: Vec<(u64, f64)> = series.points.iter().map(|p| (p.n, p.magnitude)).collect();
    decay_from_magnitudes(&points)
}

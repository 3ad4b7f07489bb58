//! Experiment configuration files. Unknown fields are rejected everywhere.

use anyhow::{bail, Context, Result};
use distal_core::lattice::parse_rational;
use distal_core::orbit::RationalPolynomial;
use distal_core::sequences::GeometricParams;
use distal_core::weyl::{FlowData, PointData, RealTorusFlow};
use distal_core::{
    AffineTorusFlow, Engine, GFunction, IntMatrix, PhaseSpec, RealParam, Rational, TorusPoint, TrigPolynomial,
    WeightSequence,
};
use num_complex::Complex64;
use serde::Deserialize;

/// A matrix as `{"rows", "cols", "entries"}` or as a bare array of rows.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MatrixInput {
    Rows(Vec<Vec<serde_json::Number>>),
    Full(IntMatrix),
}

impl MatrixInput {
    pub fn into_matrix(self) -> Result<IntMatrix> {
        match self {
            MatrixInput::Full(m) => Ok(m),
            MatrixInput::Rows(rows) => {
                let rows = rows
                    .into_iter()
                    .map(|r| {
                        r.into_iter()
                            .map(|v| v.to_string().parse().with_context(|| format!("matrix entry {v} is not an integer")))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(IntMatrix::from_rows(rows)?)
            }
        }
    }
}

/// A real number written as a JSON number, `"p/q"`, a decimal string, or
/// `"sqrt(r)"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(serde_json::Number),
    Text(String),
}

pub enum ScalarValue {
    Exact(Rational),
    Real(f64),
}

impl Scalar {
    pub fn value(&self) -> Result<ScalarValue> {
        let text = match self {
            Scalar::Number(n) => n.to_string(),
            Scalar::Text(s) => s.clone(),
        };
        if let Ok(r) = parse_rational(&text) {
            return Ok(ScalarValue::Exact(r));
        }
        match RealParam::parse(&text).with_context(|| format!("cannot read {text:?} as a number"))? {
            RealParam::Rational(r) => Ok(ScalarValue::Exact(r)),
            sqrt => Ok(ScalarValue::Real(sqrt.to_f64())),
        }
    }

    pub fn to_f64(&self) -> Result<f64> {
        Ok(match self.value()? {
            ScalarValue::Exact(r) => num_traits::ToPrimitive::to_f64(&r).unwrap_or(f64::NAN),
            ScalarValue::Real(v) => v,
        })
    }
}

/// Rational coordinates when every entry is rational, doubles otherwise.
pub fn read_coords(values: &[Scalar]) -> Result<Result<Vec<Rational>, Vec<f64>>> {
    let parsed = values.iter().map(Scalar::value).collect::<Result<Vec<_>>>()?;
    if parsed.iter().all(|v| matches!(v, ScalarValue::Exact(_))) {
        Ok(Ok(parsed
            .into_iter()
            .map(|v| match v {
                ScalarValue::Exact(r) => r,
                ScalarValue::Real(_) => unreachable!(),
            })
            .collect()))
    } else {
        values.iter().map(Scalar::to_f64).collect::<Result<Vec<_>>>().map(Err)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(rename = "A")]
    pub matrix: MatrixInput,
    #[serde(rename = "a")]
    pub shift: Vec<Scalar>,
    #[serde(default)]
    pub dim: Option<usize>,
}

impl FlowConfig {
    pub fn into_flow(self) -> Result<FlowData> {
        let matrix = self.matrix.into_matrix()?;
        if let Some(d) = self.dim {
            if d != matrix.rows() {
                bail!("flow declares dim {d} but A has {} rows", matrix.rows());
            }
        }
        Ok(match read_coords(&self.shift)? {
            Ok(exact) => FlowData::Rational(AffineTorusFlow::new(matrix, TorusPoint::new(exact))?),
            Err(real) => FlowData::Real(RealTorusFlow::new(matrix, real)?),
        })
    }

    pub fn into_rational_flow(self) -> Result<AffineTorusFlow> {
        match self.into_flow()? {
            FlowData::Rational(f) => Ok(f),
            FlowData::Real(_) => bail!("this command needs a rational shift"),
        }
    }
}

pub fn read_point(values: &[Scalar]) -> Result<PointData> {
    Ok(match read_coords(values)? {
        Ok(exact) => PointData::Rational(TorusPoint::new(exact)),
        Err(real) => PointData::Real(real),
    })
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsConfig {
    Mobius,
    Geometric {
        alpha: String,
        beta: String,
        #[serde(default = "default_g")]
        g: String,
        #[serde(default = "default_precision")]
        precision: u64,
    },
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Character {
        theta: f64,
    },
}

fn default_g() -> String {
    "const1".into()
}

fn default_precision() -> u64 {
    128
}

impl WeightsConfig {
    pub fn build(&self, n_max: u64) -> Result<WeightSequence> {
        Ok(match self {
            WeightsConfig::Mobius => WeightSequence::mobius(n_max),
            WeightsConfig::Geometric { alpha, beta, g, precision } => {
                let params =
                    GeometricParams::new(RealParam::parse(alpha)?, RealParam::parse(beta)?, GFunction::parse(g)?, *precision)?;
                WeightSequence::geometric(&params, n_max)
            }
            WeightsConfig::Constant { re, im } => WeightSequence::constant(Complex64::new(*re, *im)),
            WeightsConfig::Character { theta } => WeightSequence::character(*theta),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseConfig {
    /// Ascending exact coefficients.
    Rational(Vec<Scalar>),
    /// Ascending real coefficients.
    Real(Vec<f64>),
}

impl PhaseConfig {
    pub fn into_phase(self) -> Result<PhaseSpec> {
        Ok(match self {
            PhaseConfig::Rational(c) => {
                let coeffs = c
                    .iter()
                    .map(|s| match s.value()? {
                        ScalarValue::Exact(r) => Ok(r),
                        ScalarValue::Real(_) => bail!("irrational coefficient in a rational phase; use \"real\""),
                    })
                    .collect::<Result<Vec<_>>>()?;
                PhaseSpec::Rational(RationalPolynomial::new(coeffs))
            }
            PhaseConfig::Real(c) => PhaseSpec::Real(c),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ObservableConfig {
    Random { random: RandomBox },
    Explicit(TrigPolynomial),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBox {
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

impl ObservableConfig {
    pub fn build(self, seed: u64) -> Result<TrigPolynomial> {
        Ok(match self {
            ObservableConfig::Random { random } => TrigPolynomial::random_box(random.lower, random.upper, seed)?,
            ObservableConfig::Explicit(f) => f,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylConfig {
    pub weights: WeightsConfig,
    pub phase: PhaseConfig,
    pub checkpoints: Vec<u64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProbeModeConfig {
    Weak,
    Strong,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub weights: WeightsConfig,
    pub order: u32,
    #[serde(default)]
    pub t_grid: Option<Vec<Scalar>>,
    #[serde(default = "default_mode")]
    pub mode: ProbeModeConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub checkpoints: Vec<u64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_mode() -> ProbeModeConfig {
    ProbeModeConfig::Weak
}

fn default_samples() -> usize {
    16
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisjointConfig {
    pub weights: WeightsConfig,
    pub flow: FlowConfig,
    pub f: ObservableConfig,
    pub x: Vec<Scalar>,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    pub checkpoints: Vec<u64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_engine() -> Engine {
    Engine::Exact
}

pub fn last_checkpoint(checkpoints: &[u64]) -> Result<u64> {
    distal_core::summation::validate_checkpoints(checkpoints)?;
    Ok(*checkpoints.last().expect("validated"))
}

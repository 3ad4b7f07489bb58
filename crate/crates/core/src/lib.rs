//! Exact machinery for affine distal flows on the d-torus and numerical
//! disjointness experiments against oscillating weight sequences.

pub mod error;
pub mod lattice;
pub mod orbit;
pub mod precision;
pub mod rng;
pub mod sequences;
pub mod summation;
pub mod torus;
pub mod triangular;
pub mod weyl;

pub use error::{Error, Result};
pub use lattice::{IntMatrix, IntVector, Integer, Rational, UnimodularMatrix};
pub use orbit::{OrbitPhase, OrbitPolynomials, RationalPolynomial};
pub use torus::{AffineTorusFlow, FlowClass, TorusPoint};
pub use triangular::{TriangularForm, UnipotentCertificate};
pub use precision::{Fixed, RealParam};
pub use sequences::{GFunction, GeometricParams, SequenceStats, WeightKind, WeightSequence};
pub use summation::SumOptions;
pub use weyl::{
    DecayReport, Engine, FlowData, PhaseSpec, PointData, ProbeMode, ProbeReport, RealTorusFlow, SumSeries,
    TrigPolynomial,
};

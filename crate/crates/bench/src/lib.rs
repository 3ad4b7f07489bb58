//! Shared inputs for the criterion benches.

use distal_core::triangular::random_unipotent;
use distal_core::{AffineTorusFlow, IntMatrix, TorusPoint, TrigPolynomial};

/// `x -> [[1, 1], [0, 1]] x + (0, 1/2)`.
pub fn shear_flow() -> AffineTorusFlow {
    AffineTorusFlow::new(IntMatrix::from_i64(&[[1, 1], [0, 1]]), TorusPoint::parse(&["0", "1/2"]).unwrap())
        .expect("unimodular")
}

pub fn observable(radius: i64, seed: u64) -> TrigPolynomial {
    TrigPolynomial::random_box(vec![-radius; 2], vec![radius; 2], seed).expect("non-empty box")
}

pub fn unipotent_batch(d: usize, count: u64) -> Vec<IntMatrix> {
    (0..count).map(|s| random_unipotent(d, s, 3).expect("valid parameters")).collect()
}

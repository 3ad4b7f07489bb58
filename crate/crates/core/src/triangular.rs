//! Conjugation of (negative-)unipotent integer matrices to upper triangular
//! normal form by a determinant-one integer change of basis.
//!
//! The recursion peels one invariant direction at a time: a primitive vector
//! `v` with `A v = v` is completed to a unimodular `P1`, which moves `v` to
//! `e1` and leaves a block `[[1, *], [0, A1]]`; the lower block `A1` is again
//! unipotent and is handled the same way. The two-dimensional route through
//! the fixed point of the associated Möbius map is kept as
//! [`parabolic_fixed_point`] and cross-checked against the kernel direction.

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_core::SeedableRng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    complete_to_unimodular, det, kernel_primitive_vector, IntMatrix, UnimodularMatrix,
};
use crate::rng::SplitMix64;

/// Witness that a matrix has the single eigenvalue `sign`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UnipotentCertificate {
    pub sign: i8,
    pub dim: usize,
}

/// `P^{-1} A P = B` with `B` upper triangular and constant diagonal `sign`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangularForm {
    pub p: UnimodularMatrix,
    pub b: IntMatrix,
    pub sign: i8,
}

impl TriangularForm {
    /// Re-verifies every invariant of the form against `a` in exact arithmetic.
    pub fn verify(&self, a: &IntMatrix) -> bool {
        let p = self.p.matrix();
        self.p.det() == 1
            && self.b.upper_unipotent_sign() == Some(self.sign)
            && p * &self.b == a * p
    }
}

/// Checks that the characteristic polynomial of `a` is `(x - s)^d` for
/// `s = +1` or `s = -1`, via `(A - sI)^d = 0`.
pub fn check_unipotent(a: &IntMatrix) -> Result<UnipotentCertificate> {
    let d = a.ensure_square()?;
    let dt = det(a)?;
    if dt.abs() != BigInt::one() {
        return Err(Error::NotUnimodular(dt.to_string()));
    }
    for sign in [1i8, -1] {
        let shifted = a.sub_scalar_identity(&BigInt::from(sign))?;
        if shifted.pow(d as u64)?.is_zero() {
            return Ok(UnipotentCertificate { sign, dim: d });
        }
    }
    Err(Error::NotUnipotent)
}

/// Fixed point `p/q = (a - d) / (2c)` of `z -> (az + b)/(cz + d)` for a
/// unipotent `[[a, b], [c, d]]`, in lowest terms with `q > 0`.
///
/// `(p, q)` is the direction fixed by the matrix.
pub fn parabolic_fixed_point(a: &IntMatrix) -> Result<(BigInt, BigInt)> {
    if a.rows() != 2 || a.cols() != 2 {
        return Err(Error::WrongDimension { expected: 2, got: a.rows().max(a.cols()) });
    }
    let cert = check_unipotent(a)?;
    if cert.sign != 1 {
        return Err(Error::InvalidParameter("parabolic fixed point needs eigenvalue +1".into()));
    }
    let c = a.get(1, 0);
    if c.is_zero() {
        return Err(Error::AlreadyTriangular);
    }
    let mut p = a.get(0, 0) - a.get(1, 1);
    let mut q = BigInt::from(2) * c;
    let g = p.gcd(&q);
    p /= &g;
    q /= &g;
    if q.is_negative() {
        p = -p;
        q = -q;
    }
    Ok((p, q))
}

/// Triangularizes a unipotent or negative-unipotent unimodular matrix.
pub fn triangularize(a: &IntMatrix) -> Result<TriangularForm> {
    let cert = check_unipotent(a)?;
    let positive = if cert.sign == 1 { a.clone() } else { a.neg() };
    let p = triangularize_positive(&positive)?;
    let b_pos = &p.inverse().into_matrix() * &(&positive * p.matrix());
    let b = if cert.sign == 1 { b_pos } else { b_pos.neg() };
    debug_assert_eq!(b.upper_unipotent_sign(), Some(cert.sign));
    Ok(TriangularForm { p, b, sign: cert.sign })
}

fn triangularize_positive(a: &IntMatrix) -> Result<UnimodularMatrix> {
    let d = a.rows();
    if d == 1 {
        return Ok(UnimodularMatrix::identity(1));
    }
    let v = kernel_primitive_vector(&a.sub_scalar_identity(&BigInt::one())?)?;
    let p1 = complete_to_unimodular(&v)?;
    let conj = &p1.inverse().into_matrix() * &(a * p1.matrix());
    debug_assert!(conj.get(0, 0).is_one());
    debug_assert!((1..d).all(|i| conj.get(i, 0).is_zero()));
    let rest = triangularize_positive(&conj.trailing_block(1))?;
    let p2 = UnimodularMatrix::new(rest.matrix().embed_lower_right(1))?;
    Ok(p1.compose(&p2))
}

/// Random `Q U Q^{-1}` with `U` upper unipotent (off-diagonal entries in
/// `[-bound, bound]`) and `Q` a product of at most `2d` elementary
/// transvections `I + c E_ij`, `c` in `{-2, -1, 1, 2}`.
pub fn random_unipotent(d: usize, seed: u64, bound: i64) -> Result<IntMatrix> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension {d} < 2")));
    }
    if bound < 0 {
        return Err(Error::InvalidParameter(format!("negative bound {bound}")));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut u = IntMatrix::identity(d);
    for i in 0..d {
        for j in i + 1..d {
            u.set(i, j, BigInt::from(rng.random_range(-bound..=bound)));
        }
    }
    let mut q = IntMatrix::identity(d);
    let mut q_inv = IntMatrix::identity(d);
    let steps = rng.random_range(1..=2 * d);
    for _ in 0..steps {
        let i = rng.random_range(0..d);
        let j = (i + rng.random_range(1..d)) % d;
        let c = [-2i64, -1, 1, 2][rng.random_range(0..4)];
        let mut e = IntMatrix::identity(d);
        e.set(i, j, BigInt::from(c));
        let mut e_inv = IntMatrix::identity(d);
        e_inv.set(i, j, BigInt::from(-c));
        q = &q * &e;
        q_inv = &e_inv * &q_inv;
    }
    Ok(&q * &(&u * &q_inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn unipotent_checks() {
        for d in 1..5 {
            assert_eq!(check_unipotent(&IntMatrix::identity(d)).unwrap().sign, 1);
        }
        assert_eq!(check_unipotent(&IntMatrix::from_i64(&[[1, 0], [1, 1]])).unwrap().sign, 1);
        assert_eq!(check_unipotent(&IntMatrix::from_i64(&[[-1, 3], [0, -1]])).unwrap().sign, -1);
        assert_eq!(check_unipotent(&IntMatrix::from_i64(&[[2, 1], [1, 1]])), Err(Error::NotUnipotent));
        assert_eq!(check_unipotent(&IntMatrix::from_i64(&[[1, 0], [0, -1]])), Err(Error::NotUnipotent));
        assert!(matches!(
            check_unipotent(&IntMatrix::from_i64(&[[2, 0], [0, 1]])),
            Err(Error::NotUnimodular(_))
        ));
        assert!(matches!(check_unipotent(&IntMatrix::from_i64(&[[1, 0]])), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(parabolic_fixed_point(&IntMatrix::from_i64(&[[1, 0], [1, 1]])).unwrap(), (bi(0), bi(1)));
        let a = IntMatrix::from_i64(&[[3, -1], [4, -1]]);
        let (p, q) = parabolic_fixed_point(&a).unwrap();
        assert_eq!((p.clone(), q.clone()), (bi(1), bi(2)));
        let fixed = a.sub_scalar_identity(&bi(1)).unwrap().mul_vec(&[p, q]).unwrap();
        assert!(fixed.iter().all(Zero::is_zero));
        assert_eq!(
            parabolic_fixed_point(&IntMatrix::from_i64(&[[1, 5], [0, 1]])),
            Err(Error::AlreadyTriangular)
        );
    }

    #[test]
    fn triangularize_identity_and_shear() {
        let id = triangularize(&IntMatrix::identity(3)).unwrap();
        assert_eq!(id.p.matrix(), &IntMatrix::identity(3));
        assert_eq!(id.b, IntMatrix::identity(3));

        let a = IntMatrix::from_i64(&[[1, 0], [1, 1]]);
        let form = triangularize(&a).unwrap();
        assert!(form.verify(&a));
        assert_eq!(form.sign, 1);
        let t = form.b.get(0, 1);
        assert!(t.abs().is_one(), "off-diagonal entry {t}");
    }

    #[test]
    fn negative_sign_keeps_p() {
        let a = IntMatrix::from_i64(&[[1, 0], [1, 1]]).neg();
        let form = triangularize(&a).unwrap();
        assert_eq!(form.sign, -1);
        assert!(form.verify(&a));
        let pos = triangularize(&a.neg()).unwrap();
        assert_eq!(pos.p, form.p);
        assert_eq!(pos.b.neg(), form.b);
    }

    #[test]
    fn generated_instances() {
        assert_eq!(random_unipotent(2, 9, 0).unwrap(), IntMatrix::identity(2));
        let m = random_unipotent(3, 42, 3).unwrap();
        assert_eq!(check_unipotent(&m).unwrap().sign, 1);
        let m = random_unipotent(4, 7, 5).unwrap();
        let form = triangularize(&m).unwrap();
        assert!(form.verify(&m));
        assert_eq!(random_unipotent(4, 7, 5).unwrap(), m);
    }

    #[test]
    fn already_triangular_input_stays_upper_unipotent() {
        let b = IntMatrix::from_i64(&[[1, 2, 3], [0, 1, 4], [0, 0, 1]]);
        let form = triangularize(&b).unwrap();
        assert!(form.verify(&b));
    }

    #[test]
    fn rejects_non_unipotent() {
        assert_eq!(triangularize(&IntMatrix::from_i64(&[[2, 1], [1, 1]])), Err(Error::NotUnipotent));
    }
}

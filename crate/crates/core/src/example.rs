//! The worked example: `F(x) = 1234 + 166x + 94x^2`, six shares, and
//! reconstruction from the points at X = 2, 4, 5.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::field::{FieldError, FieldModulus, SecretPolynomial};
use crate::interpolation::{reconstruct_polynomial, InterpolationError, ReconstructionInput};
use crate::sharing::SharePoint;

pub const EXAMPLE_COEFFS: [u64; 3] = [1234, 166, 94];
pub const EXAMPLE_POINTS: [(u64, u64); 6] = [(1, 1494), (2, 1942), (3, 2578), (4, 3402), (5, 4414), (6, 5614)];
pub const EXAMPLE_RECONSTRUCTION_XS: [u64; 3] = [2, 4, 5];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExampleError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Interpolation(#[from] InterpolationError),
    #[error("{check}: expected {expected}, got {actual}")]
    Mismatch {
        check: String,
        expected: String,
        actual: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleReport {
    pub p: u64,
    pub points: Vec<SharePoint>,
    pub secret: u64,
    pub coeffs: Vec<u64>,
    pub checks: usize,
}

fn check<T: PartialEq + std::fmt::Debug>(name: String, expected: T, actual: T) -> Result<(), ExampleError> {
    if expected == actual {
        Ok(())
    } else {
        Err(ExampleError::Mismatch {
            check: name,
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
        })
    }
}

/// Lagrange interpolation at zero over the rationals.
pub fn rational_secret(points: &[SharePoint]) -> BigRational {
    let mut acc = BigRational::zero();
    for (j, pj) in points.iter().enumerate() {
        let mut basis = BigRational::one();
        for (m, pm) in points.iter().enumerate() {
            if m != j {
                let xm = BigInt::from(pm.x);
                let xj = BigInt::from(pj.x);
                basis *= BigRational::new(-xm.clone(), xj - xm);
            }
        }
        acc += basis * BigRational::from_integer(BigInt::from(pj.y));
    }
    acc
}

/// Runs the eight checks of the worked example under prime `p`:
/// the six table values, the reconstructed secret (modular and rational
/// routes), and the reconstructed coefficients. `inject` replaces the
/// reconstruction input at its abscissa. Stops at the first mismatch.
pub fn verify_worked_example(p: u64, inject: Option<SharePoint>) -> Result<ExampleReport, ExampleError> {
    let modulus = FieldModulus::test_profile(p)?;
    let poly = SecretPolynomial::new(EXAMPLE_COEFFS.to_vec(), modulus);
    let points: Vec<SharePoint> = (1..=6u64).map(|x| SharePoint::new(x, poly.eval(x))).collect();

    let mut checks = 0;
    for (pt, &(x, y)) in points.iter().zip(&EXAMPLE_POINTS) {
        check(format!("F({x})"), y, pt.y)?;
        checks += 1;
    }

    let chosen: Vec<SharePoint> = EXAMPLE_RECONSTRUCTION_XS
        .iter()
        .map(|&x| match inject {
            Some(pt) if pt.x == x => pt,
            _ => points[(x - 1) as usize],
        })
        .collect();
    let rebuilt = reconstruct_polynomial(&ReconstructionInput::new(chosen.clone(), modulus))?;
    check("F(0)".into(), EXAMPLE_COEFFS[0], rebuilt.secret())?;
    check(
        "F(0) over Q".into(),
        BigRational::from_integer(BigInt::from(EXAMPLE_COEFFS[0])),
        rational_secret(&chosen),
    )?;
    checks += 1;
    check(
        "coefficients".into(),
        EXAMPLE_COEFFS.to_vec(),
        rebuilt.coeffs().to_vec(),
    )?;
    checks += 1;

    Ok(ExampleReport {
        p,
        points,
        secret: rebuilt.secret(),
        coeffs: rebuilt.coeffs().to_vec(),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_PRIME;

    #[test]
    fn passes_with_default_prime() {
        let r = verify_worked_example(DEFAULT_PRIME, None).unwrap();
        assert_eq!(r.checks, 8);
        assert_eq!(r.secret, 1234);
        assert_eq!(r.coeffs, EXAMPLE_COEFFS);
    }

    #[test]
    fn small_prime_fails() {
        let err = verify_worked_example(97, None).unwrap_err();
        assert!(matches!(err, ExampleError::Mismatch { ref check, .. } if check == "F(1)"));
    }

    #[test]
    fn injected_point_fails() {
        let err = verify_worked_example(DEFAULT_PRIME, Some(SharePoint::new(2, 1943))).unwrap_err();
        assert!(matches!(err, ExampleError::Mismatch { ref check, .. } if check == "F(0)"));
    }

    #[test]
    fn non_prime_rejected() {
        assert!(matches!(verify_worked_example(100, None), Err(ExampleError::Field(_))));
    }

    #[test]
    fn rational_route() {
        let pts: Vec<SharePoint> = [(2, 1942), (4, 3402), (5, 4414)]
            .iter()
            .map(|&(x, y)| SharePoint::new(x, y))
            .collect();
        assert_eq!(rational_secret(&pts), BigRational::from_integer(1234.into()));
    }
}

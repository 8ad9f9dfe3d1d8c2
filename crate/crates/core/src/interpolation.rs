//! Lagrange reconstruction of the sharing polynomial over Z_p.
//!
//! Basis polynomials follow the textbook product
//! `l_j(x) = prod_{m != j} (x - x_m) / (x_j - x_m)`, each division done by a
//! modular inverse. Exactly `k` points are required; extra points are an
//! error rather than a fit.

use thiserror::Error;

use crate::field::{FieldError, FieldModulus, SecretPolynomial};
use crate::sharing::{binding_abscissa, binding_code_at, BindingCode, SharePoint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpolationError {
    #[error("two points share the abscissa {0}")]
    DuplicateAbscissa(u64),
    #[error("need {needed} points, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },
    #[error("expected exactly {expected} points, got {got}")]
    TooManyPoints { expected: usize, got: usize },
    #[error("basis index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconstructionInput {
    pub points: Vec<SharePoint>,
    /// Threshold `k`; the polynomial has degree `k - 1`.
    pub threshold: usize,
    pub modulus: FieldModulus,
}

impl ReconstructionInput {
    /// Threshold taken from the number of points.
    pub fn new(points: Vec<SharePoint>, modulus: FieldModulus) -> Self {
        let threshold = points.len();
        Self {
            points,
            threshold,
            modulus,
        }
    }

    pub fn with_threshold(points: Vec<SharePoint>, threshold: usize, modulus: FieldModulus) -> Self {
        Self {
            points,
            threshold,
            modulus,
        }
    }

    fn validate(&self) -> Result<(), InterpolationError> {
        let got = self.points.len();
        if got < self.threshold || got == 0 {
            return Err(InterpolationError::NotEnoughPoints {
                needed: self.threshold.max(1),
                got,
            });
        }
        if got > self.threshold {
            return Err(InterpolationError::TooManyPoints {
                expected: self.threshold,
                got,
            });
        }
        for (i, a) in self.points.iter().enumerate() {
            let xa = self.modulus.reduce(a.x);
            if self.points[i + 1..].iter().any(|b| self.modulus.reduce(b.x) == xa) {
                return Err(InterpolationError::DuplicateAbscissa(a.x));
            }
        }
        Ok(())
    }
}

/// `l_j(x)` for the input's abscissae.
pub fn lagrange_basis_at(input: &ReconstructionInput, j: usize, x: u64) -> Result<u64, InterpolationError> {
    input.validate()?;
    basis_at(input, j, x)
}

fn basis_at(input: &ReconstructionInput, j: usize, x: u64) -> Result<u64, InterpolationError> {
    let m = input.modulus;
    let xj = input.points.get(j).ok_or(InterpolationError::IndexOutOfRange {
        index: j,
        len: input.points.len(),
    })?;
    let mut acc = 1;
    for (i, pt) in input.points.iter().enumerate() {
        if i == j {
            continue;
        }
        let num = m.sub(x, pt.x);
        let den = m.sub(xj.x, pt.x);
        acc = m.mul(acc, m.mul(num, m.inverse(den)?));
    }
    Ok(acc)
}

/// `F(0) = sum_j y_j l_j(0)`.
pub fn reconstruct_secret(input: &ReconstructionInput) -> Result<u64, InterpolationError> {
    input.validate()?;
    let m = input.modulus;
    let mut secret = 0;
    for (j, pt) in input.points.iter().enumerate() {
        secret = m.add(secret, m.mul(m.reduce(pt.y), basis_at(input, j, 0)?));
    }
    Ok(secret)
}

/// Expands `sum_j y_j l_j(x)` into coefficients `[a0, .., a_{k-1}]`.
pub fn reconstruct_polynomial(input: &ReconstructionInput) -> Result<SecretPolynomial, InterpolationError> {
    input.validate()?;
    let m = input.modulus;
    let k = input.points.len();

    // master(x) = prod_m (x - x_m), ascending coefficients, degree k.
    let mut master = vec![0u64; k + 1];
    master[0] = 1;
    for (deg, pt) in input.points.iter().enumerate() {
        let root = m.reduce(pt.x);
        for i in (0..=deg + 1).rev() {
            let shifted = if i > 0 { master[i - 1] } else { 0 };
            master[i] = m.sub(shifted, m.mul(master[i], root));
        }
    }

    let mut coeffs = vec![0u64; k];
    let mut quotient = vec![0u64; k];
    for pt in &input.points {
        let root = m.reduce(pt.x);
        // Synthetic division: master(x) / (x - x_j).
        let mut carry = 0;
        for i in (0..k).rev() {
            carry = m.add(master[i + 1], m.mul(carry, root));
            quotient[i] = carry;
        }
        // quotient(x_j) = prod_{m != j} (x_j - x_m)
        let denom = quotient.iter().rev().fold(0, |acc, &c| m.add(m.mul(acc, root), c));
        let scale = m.mul(m.reduce(pt.y), m.inverse(denom)?);
        for (c, q) in coeffs.iter_mut().zip(&quotient) {
            *c = m.add(*c, m.mul(*q, scale));
        }
    }
    Ok(SecretPolynomial::new(coeffs, m))
}

/// Recomputes the binding code from a reconstructed polynomial.
pub fn verify_binding(poly: &SecretPolynomial, code: &BindingCode, file_id: &[u8]) -> bool {
    let x_kc = binding_abscissa(file_id, poly.modulus());
    x_kc == code.x_kc && binding_code_at(poly.secret(), poly, x_kc) == *code
}

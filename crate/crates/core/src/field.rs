//! Exact arithmetic over the prime field Z_p and exact integer n-th roots.
//!
//! Field elements are plain `u64` values in `[0, p)`. Every product is
//! computed in `u128`, so any prime below 2^64 is supported without overflow.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The Mersenne prime 2^61 - 1, the default production modulus.
pub const DEFAULT_PRIME: u64 = (1 << 61) - 1;

/// Smallest modulus accepted by the production profile.
pub const PRODUCTION_MIN: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is below the production minimum 2^16")]
    ModulusTooSmall(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// Whether a modulus was admitted under the production or the test profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    Production,
    Test,
}

/// A prime modulus `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FieldModulus {
    p: u64,
    profile: Profile,
}

impl FieldModulus {
    /// Production modulus: prime and at least 2^16.
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p < PRODUCTION_MIN {
            return Err(FieldError::ModulusTooSmall(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Self {
            p,
            profile: Profile::Production,
        })
    }

    /// Test-profile modulus: any prime, including tiny ones like 97 that
    /// make exhaustive enumeration feasible.
    pub fn test_profile(p: u64) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        let profile = if p >= PRODUCTION_MIN {
            Profile::Production
        } else {
            Profile::Test
        };
        Ok(Self { p, profile })
    }

    pub fn value(self) -> u64 {
        self.p
    }

    pub fn profile(self) -> Profile {
        self.profile
    }

    pub fn is_production(self) -> bool {
        self.profile == Profile::Production
    }

    pub fn reduce(self, v: u64) -> u64 {
        v % self.p
    }

    pub fn add(self, a: u64, b: u64) -> u64 {
        ((u128::from(a) + u128::from(b)) % u128::from(self.p)) as u64
    }

    pub fn sub(self, a: u64, b: u64) -> u64 {
        let (a, b) = (a % self.p, b % self.p);
        if a >= b {
            a - b
        } else {
            self.p - (b - a)
        }
    }

    pub fn mul(self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    pub fn neg(self, a: u64) -> u64 {
        self.sub(0, a)
    }

    pub fn inverse(self, a: u64) -> Result<u64, FieldError> {
        mod_inverse(a, self)
    }
}

impl Default for FieldModulus {
    fn default() -> Self {
        Self {
            p: DEFAULT_PRIME,
            profile: Profile::Production,
        }
    }
}

impl TryFrom<u64> for FieldModulus {
    type Error = FieldError;

    fn try_from(p: u64) -> Result<Self, Self::Error> {
        Self::test_profile(p)
    }
}

impl From<FieldModulus> for u64 {
    fn from(m: FieldModulus) -> u64 {
        m.p
    }
}

impl fmt::Display for FieldModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(m)) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve prime bases are exact for
/// every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &b in &BASES {
        let mut x = pow_mod(b, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Multiplicative inverse by the extended Euclidean algorithm.
pub fn mod_inverse(a: u64, modulus: FieldModulus) -> Result<u64, FieldError> {
    let p = modulus.value();
    let a = a % p;
    if a == 0 {
        return Err(FieldError::ZeroInverse);
    }
    let (mut r0, mut r1) = (i128::from(p), i128::from(a));
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1, "modulus must be prime");
    Ok(t0.rem_euclid(i128::from(p)) as u64)
}

/// Polynomial `a0 + a1 x + ... + a_{k-1} x^{k-1}` over Z_p whose constant
/// term is the shared secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretPolynomial {
    coeffs: Vec<u64>,
    modulus: FieldModulus,
}

impl SecretPolynomial {
    /// Coefficients in ascending degree order; each is reduced mod p.
    pub fn new(coeffs: Vec<u64>, modulus: FieldModulus) -> Self {
        let coeffs = coeffs.into_iter().map(|c| modulus.reduce(c)).collect();
        Self { coeffs, modulus }
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn modulus(&self) -> FieldModulus {
        self.modulus
    }

    /// The constant term `a0`.
    pub fn secret(&self) -> u64 {
        self.coeffs.first().copied().unwrap_or(0)
    }

    /// Number of coefficients, i.e. the reconstruction threshold `k`.
    pub fn threshold(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: u64) -> u64 {
        poly_eval(self, x)
    }
}

/// Horner evaluation.
pub fn poly_eval(poly: &SecretPolynomial, x: u64) -> u64 {
    let m = poly.modulus;
    let x = m.reduce(x);
    poly.coeffs.iter().rev().fold(0, |acc, &c| m.add(m.mul(acc, x), c))
}

/// Largest `r` with `r^n <= v`.
///
/// Callers that need an exact root must check `r^n == v` themselves.
pub fn integer_nth_root(v: &BigUint, n: u32) -> BigUint {
    assert!(n >= 1, "root degree must be positive");
    if n == 1 || v <= &BigUint::one() {
        return v.clone();
    }
    let bits = v.bits();
    if bits <= 64 {
        return BigUint::from(nth_root_u64(u64::try_from(v).expect("fits in u64"), n));
    }
    // Newton from 2^ceil(bits/n), which is >= the true root; the iterates
    // decrease monotonically until they reach the floor root.
    let n_big = BigUint::from(n);
    let n_minus_one = BigUint::from(n - 1);
    let mut x = BigUint::one() << bits.div_ceil(u64::from(n));
    loop {
        let y = (&n_minus_one * &x + v / x.pow(n - 1)) / &n_big;
        if y >= x {
            return x;
        }
        x = y;
    }
}

fn nth_root_u64(v: u64, n: u32) -> u64 {
    if n == 1 || v < 2 {
        return v;
    }
    if n >= 64 {
        return 1;
    }
    let fits = |r: u64| match r.checked_pow(n) {
        Some(pw) => pw <= v,
        None => false,
    };
    let mut r = (v as f64).powf(1.0 / f64::from(n)) as u64;
    while r > 0 && !fits(r) {
        r -= 1;
    }
    while fits(r + 1) {
        r += 1;
    }
    r
}

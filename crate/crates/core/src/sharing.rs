//! Splitting a file secret into authorization points.
//!
//! The polynomial is `F(X) = a0 + a1 X + ... + a_{k-1} X^{k-1}` over Z_p,
//! where `a0` is the secret and the remaining coefficients are tokens
//! hashed out of the owner's attributes. Participants receive `(X, F(X))`
//! for `X = 1..=n`; `X = 0` is never issued.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{poly_eval, FieldModulus, SecretPolynomial};
use crate::hash::{fnv1a64, fnv1a64_parts};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SharingError {
    #[error("need at least {needed} attributes, got {got}")]
    TooFewAttributes { needed: usize, got: usize },
    #[error("secret {secret} is not below the modulus {p}")]
    SecretTooLarge { secret: u64, p: u64 },
    #[error("threshold {k} needs at least {k} users, got {n_users}")]
    NotEnoughUsers { k: usize, n_users: usize },
    #[error("threshold must be at least 2, got {0}")]
    ThresholdTooSmall(usize),
    #[error("leading coefficient is zero; the threshold would silently drop")]
    ZeroLeadingCoefficient,
}

/// One participant's authorization point `(x, F(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SharePoint {
    pub x: u64,
    pub y: u64,
}

impl SharePoint {
    pub fn new(x: u64, y: u64) -> Self {
        Self { x, y }
    }
}

/// File binding code `kc = (a0 + F(x_kc)) mod p`, kept by the server as
/// the pair `(0, kc)` and rechecked after every reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingCode {
    pub kc: u64,
    pub x_kc: u64,
}

/// Coefficients `[a1, .., a_{k-1}]` from the first `k - 1` attributes:
/// `a_j = fnv1a64(salt || attribute_j) mod p`, with 0 remapped to 1.
pub fn derive_attribute_tokens(
    attributes: &[&[u8]],
    salt: &[u8],
    k: usize,
    modulus: FieldModulus,
) -> Result<Vec<u64>, SharingError> {
    if k < 2 {
        return Err(SharingError::ThresholdTooSmall(k));
    }
    let needed = k - 1;
    if attributes.len() < needed {
        return Err(SharingError::TooFewAttributes {
            needed,
            got: attributes.len(),
        });
    }
    Ok(attributes[..needed]
        .iter()
        .map(|attr| match modulus.reduce(fnv1a64_parts(&[salt, attr])) {
            0 => 1,
            t => t,
        })
        .collect())
}

/// Evaluates `[secret, coeffs..]` at `X = 1..=n_users`.
///
/// Production-profile moduli reject a zero leading coefficient; the test
/// profile allows it so degenerate polynomials can be enumerated.
pub fn split_secret(
    secret: u64,
    coeffs: &[u64],
    n_users: usize,
    modulus: FieldModulus,
) -> Result<Vec<SharePoint>, SharingError> {
    let poly = sharing_polynomial(secret, coeffs, modulus)?;
    let k = poly.threshold();
    if n_users < k {
        return Err(SharingError::NotEnoughUsers { k, n_users });
    }
    Ok((1..=n_users as u64)
        .map(|x| SharePoint::new(x, poly_eval(&poly, x)))
        .collect())
}

/// Builds and validates the polynomial `[secret, coeffs..]`.
pub fn sharing_polynomial(
    secret: u64,
    coeffs: &[u64],
    modulus: FieldModulus,
) -> Result<SecretPolynomial, SharingError> {
    let p = modulus.value();
    if secret >= p {
        return Err(SharingError::SecretTooLarge { secret, p });
    }
    let mut all = Vec::with_capacity(coeffs.len() + 1);
    all.push(secret);
    all.extend_from_slice(coeffs);
    let poly = SecretPolynomial::new(all, modulus);
    if poly.threshold() < 2 {
        return Err(SharingError::ThresholdTooSmall(poly.threshold()));
    }
    if modulus.is_production() && poly.coeffs().last() == Some(&0) {
        return Err(SharingError::ZeroLeadingCoefficient);
    }
    Ok(poly)
}

/// `x_kc = (fnv1a64(file_id) mod (p - 1)) + 1`, always in `[1, p)`.
pub fn binding_abscissa(file_id: &[u8], modulus: FieldModulus) -> u64 {
    fnv1a64(file_id) % (modulus.value() - 1) + 1
}

pub fn binding_code(secret: u64, poly: &SecretPolynomial, file_id: &[u8]) -> BindingCode {
    binding_code_at(secret, poly, binding_abscissa(file_id, poly.modulus()))
}

pub fn binding_code_at(secret: u64, poly: &SecretPolynomial, x_kc: u64) -> BindingCode {
    let m = poly.modulus();
    BindingCode {
        kc: m.add(m.reduce(secret), poly_eval(poly, x_kc)),
        x_kc,
    }
}

fn credential_pad(credentials: &[u8], modulus: FieldModulus) -> u64 {
    modulus.reduce(fnv1a64(credentials))
}

/// `y_enc = (y + fnv1a64(credentials) mod p) mod p`; `x` stays in clear.
pub fn encrypt_share(share: SharePoint, credentials: &[u8], modulus: FieldModulus) -> SharePoint {
    SharePoint::new(share.x, modulus.add(share.y, credential_pad(credentials, modulus)))
}

pub fn decrypt_share(share: SharePoint, credentials: &[u8], modulus: FieldModulus) -> SharePoint {
    SharePoint::new(share.x, modulus.sub(share.y, credential_pad(credentials, modulus)))
}

/// Share record handed to a receiver; this is also the JSON file format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareRecord {
    pub file_id: String,
    pub x: u64,
    pub y_enc: u64,
    pub p: u64,
    pub kc: u64,
    pub x_kc: u64,
}

impl ShareRecord {
    pub fn seal(
        file_id: &str,
        share: SharePoint,
        binding: BindingCode,
        credentials: &[u8],
        modulus: FieldModulus,
    ) -> Self {
        let enc = encrypt_share(share, credentials, modulus);
        Self {
            file_id: file_id.to_owned(),
            x: enc.x,
            y_enc: enc.y,
            p: modulus.value(),
            kc: binding.kc,
            x_kc: binding.x_kc,
        }
    }

    pub fn open(&self, credentials: &[u8], modulus: FieldModulus) -> SharePoint {
        decrypt_share(SharePoint::new(self.x, self.y_enc), credentials, modulus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_PRIME;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p97() -> FieldModulus {
        FieldModulus::test_profile(97).unwrap()
    }

    fn brute_eval(coeffs: &[u64], x: u64, p: u64) -> u64 {
        coeffs.iter().rev().fold(0, |acc, &c| (acc * x + c) % p)
    }

    #[test]
    fn table_points() {
        let shares = split_secret(1234, &[166, 94], 6, FieldModulus::default()).unwrap();
        let expected = [(1, 1494), (2, 1942), (3, 2578), (4, 3402), (5, 4414), (6, 5614)];
        let got: Vec<(u64, u64)> = shares.iter().map(|s| (s.x, s.y)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn small_field_splits() {
        let shares = split_secret(5, &[0, 0], 3, p97()).unwrap();
        assert!(shares.iter().all(|s| s.y == 5));
        let shares = split_secret(5, &[3, 2], 3, p97()).unwrap();
        let oracle: Vec<u64> = (1..=3).map(|x| brute_eval(&[5, 3, 2], x, 97)).collect();
        assert_eq!(oracle, vec![10, 19, 32]);
        assert_eq!(shares.iter().map(|s| s.y).collect::<Vec<_>>(), oracle);
    }

    #[test]
    fn split_errors() {
        let m = FieldModulus::default();
        assert_eq!(
            split_secret(DEFAULT_PRIME, &[1, 1], 3, m),
            Err(SharingError::SecretTooLarge {
                secret: DEFAULT_PRIME,
                p: DEFAULT_PRIME
            })
        );
        assert_eq!(
            split_secret(1, &[1, 1], 2, m),
            Err(SharingError::NotEnoughUsers { k: 3, n_users: 2 })
        );
        assert_eq!(
            split_secret(5, &[3, 0], 3, m),
            Err(SharingError::ZeroLeadingCoefficient)
        );
        assert_eq!(split_secret(5, &[], 3, m), Err(SharingError::ThresholdTooSmall(1)));
    }

    #[test]
    fn never_issues_x_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let n = rng.gen_range(3..50);
            let shares = split_secret(rng.gen_range(0..DEFAULT_PRIME), &[7, 9], n, FieldModulus::default()).unwrap();
            assert!(shares.iter().all(|s| s.x != 0));
            assert_eq!(shares.len(), n);
        }
    }

    #[test]
    fn tokens_are_deterministic_and_salted() {
        let m = FieldModulus::default();
        let attrs: [&[u8]; 3] = [b"alice", b"owner", b"pw"];
        let t1 = derive_attribute_tokens(&attrs, b"salt", 3, m).unwrap();
        assert_eq!(t1, derive_attribute_tokens(&attrs, b"salt", 3, m).unwrap());
        assert_eq!(t1.len(), 2);
        assert_eq!(t1[0], fnv1a64(b"saltalice") % DEFAULT_PRIME);
        let t2 = derive_attribute_tokens(&attrs, b"pepper", 3, m).unwrap();
        assert_ne!(t1, t2);
        assert_eq!(
            derive_attribute_tokens(&attrs[..1], b"salt", 3, m),
            Err(SharingError::TooFewAttributes { needed: 2, got: 1 })
        );
    }

    #[test]
    fn zero_token_remaps_to_one() {
        let m = p97();
        let attr = (0u32..)
            .map(|i| i.to_string())
            .find(|a| fnv1a64_parts(&[b"s", a.as_bytes()]).is_multiple_of(97))
            .unwrap();
        let tokens = derive_attribute_tokens(&[attr.as_bytes()], b"s", 2, m).unwrap();
        assert_eq!(tokens, vec![1]);
    }

    #[test]
    fn binding_code_examples() {
        let poly = SecretPolynomial::new(vec![1234, 166, 94], FieldModulus::default());
        // F(7) = 1234 + 166*7 + 94*49 = 7002
        assert_eq!(poly_eval(&poly, 7), 7002);
        assert_eq!(binding_code_at(1234, &poly, 7), BindingCode { kc: 8236, x_kc: 7 });

        let constant = SecretPolynomial::new(vec![60, 0, 0], p97());
        assert_eq!(binding_code(60, &constant, b"file").kc, 120 % 97);
        assert_eq!(binding_code(1234, &poly, b"f"), binding_code(1234, &poly, b"f"));
        let x = binding_code(1234, &poly, b"f").x_kc;
        assert!((1..DEFAULT_PRIME).contains(&x));
    }

    #[test]
    fn share_encryption() {
        let m = p97();
        let creds = (0u32..)
            .map(|i| format!("cred{i}"))
            .find(|c| fnv1a64(c.as_bytes()) % 97 == 10)
            .unwrap();
        let enc = encrypt_share(SharePoint::new(2, 90), creds.as_bytes(), m);
        assert_eq!(enc, SharePoint::new(2, 3));

        let big = FieldModulus::default();
        let creds_100 = fnv1a64(b"c");
        let enc = encrypt_share(SharePoint::new(2, 1942), b"c", big);
        assert_eq!(enc.y, (1942 + creds_100 % DEFAULT_PRIME) % DEFAULT_PRIME);
        assert_eq!(decrypt_share(enc, b"c", big), SharePoint::new(2, 1942));
    }

    #[test]
    fn wrong_credentials_change_y() {
        let m = FieldModulus::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let good: [u8; 16] = rng.gen();
            let bad: [u8; 16] = rng.gen();
            let share = SharePoint::new(3, rng.gen_range(0..DEFAULT_PRIME));
            let enc = encrypt_share(share, &good, m);
            assert_ne!(decrypt_share(enc, &bad, m).y, share.y);
        }
    }

    #[test]
    fn share_record_round_trip() {
        let m = FieldModulus::default();
        let binding = BindingCode { kc: 8236, x_kc: 7 };
        let rec = ShareRecord::seal("doc", SharePoint::new(5, 4414), binding, b"bob", m);
        assert_eq!(rec.open(b"bob", m), SharePoint::new(5, 4414));
        let json = serde_json::to_value(&rec).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["file_id", "kc", "p", "x", "x_kc", "y_enc"]);
    }
}

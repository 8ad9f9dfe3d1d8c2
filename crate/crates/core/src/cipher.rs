//! Involution-function stream cipher.
//!
//! Two exact realizations of `f(x) = (a - x^(1/n))^n`:
//!
//! * [`CipherMode::Additive`]: `n = 1` per byte mod 256, so `s -> (a - s) mod 256`.
//!   Ciphertext is the same length as the plaintext.
//! * [`CipherMode::Power`]: byte `s` stands in for `x^(1/n)`, and the symbol
//!   `(a - s)^n` is stored as a fixed-width big-endian integer. Decryption
//!   takes the exact integer n-th root and rejects anything that is not a
//!   perfect power.
//!
//! A file is sealed by XOR-masking with a key-derived [`MaskSchedule`] and
//! then enciphering the masked bytes.

use std::collections::HashMap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::field::integer_nth_root;
use crate::hash::fnv1a64;
use crate::keystream::{KeystreamError, LcgParams, MaskSchedule, DEFAULT_REP_PERIOD_BITS};

pub const MAX_POWER: u8 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CipherError {
    #[error("file name must not be empty")]
    EmptyFilename,
    #[error("key out of range: {0}")]
    KeyOutOfRange(&'static str),
    #[error("symbol {index} is not a perfect n-th power")]
    InexactRoot { index: usize },
    #[error("symbol {index} decodes outside the byte range")]
    SymbolOutOfRange { index: usize },
    #[error("bad envelope header: {0}")]
    BadHeader(&'static str),
    #[error("payload holds {actual} bytes, header implies {expected}")]
    LengthMismatch { expected: u64, actual: u64 },
    #[error(transparent)]
    Keystream(#[from] KeystreamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CipherMode {
    Additive,
    Power,
}

impl CipherMode {
    pub fn tag(self) -> u8 {
        match self {
            CipherMode::Additive => 0,
            CipherMode::Power => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(CipherMode::Additive),
            1 => Some(CipherMode::Power),
            _ => None,
        }
    }
}

/// Secret key `a` and power `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CipherKey {
    a: u64,
    n: u8,
    mode: CipherMode,
}

impl CipherKey {
    /// Additive-mode key; only `a mod 256` affects the byte map, the full
    /// value still seeds the mask schedule.
    pub fn additive(a: u64) -> Self {
        Self {
            a,
            n: 1,
            mode: CipherMode::Additive,
        }
    }

    pub fn power(a: u64, n: u8) -> Result<Self, CipherError> {
        if a < 256 {
            return Err(CipherError::KeyOutOfRange("power mode needs a >= 256"));
        }
        if !(1..=MAX_POWER).contains(&n) {
            return Err(CipherError::KeyOutOfRange("power mode needs n in [1, 8]"));
        }
        Ok(Self {
            a,
            n,
            mode: CipherMode::Power,
        })
    }

    pub fn new(a: u64, n: u8, mode: CipherMode) -> Result<Self, CipherError> {
        match mode {
            CipherMode::Additive if n != 1 => Err(CipherError::KeyOutOfRange("additive mode needs n = 1")),
            CipherMode::Additive => Ok(Self::additive(a)),
            CipherMode::Power => Self::power(a, n),
        }
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn mode(&self) -> CipherMode {
        self.mode
    }

    /// Bytes per ciphertext symbol: 1 in additive mode,
    /// `ceil(n * bitlen(a) / 8) + 1` in power mode.
    pub fn symbol_width(&self) -> u8 {
        match self.mode {
            CipherMode::Additive => 1,
            CipherMode::Power => {
                let bits = 64 - self.a.leading_zeros();
                ((u32::from(self.n) * bits).div_ceil(8) + 1) as u8
            }
        }
    }
}

/// `FK = a XOR fnv1a64(filename)`, bumped by 256 in power mode when the
/// result would be below 256.
pub fn derive_file_key(master_key: u64, filename: &[u8], mode: CipherMode, n: u8) -> Result<CipherKey, CipherError> {
    if filename.is_empty() {
        return Err(CipherError::EmptyFilename);
    }
    let mut a = master_key ^ fnv1a64(filename);
    if mode == CipherMode::Power && a < 256 {
        a += 256;
    }
    CipherKey::new(a, n, mode)
}

pub fn encrypt_symbol(s: u8, key: &CipherKey) -> BigUint {
    match key.mode {
        CipherMode::Additive => BigUint::from((key.a as u8).wrapping_sub(s)),
        CipherMode::Power => BigUint::from(key.a - u64::from(s)).pow(u32::from(key.n)),
    }
}

fn decrypt_power_symbol(c: &BigUint, key: &CipherKey, index: usize) -> Result<u8, CipherError> {
    let n = u32::from(key.n);
    let r = integer_nth_root(c, n);
    if &r.pow(n) != c {
        return Err(CipherError::InexactRoot { index });
    }
    let r = u64::try_from(&r).map_err(|_| CipherError::SymbolOutOfRange { index })?;
    key.a
        .checked_sub(r)
        .and_then(|s| u8::try_from(s).ok())
        .ok_or(CipherError::SymbolOutOfRange { index })
}

pub fn decrypt_symbol(c: &BigUint, key: &CipherKey) -> Result<u8, CipherError> {
    match key.mode {
        CipherMode::Additive => {
            let c = u8::try_from(c).map_err(|_| CipherError::SymbolOutOfRange { index: 0 })?;
            Ok((key.a as u8).wrapping_sub(c))
        }
        CipherMode::Power => decrypt_power_symbol(c, key, 0),
    }
}

/// Enciphers each byte into a fixed-width big-endian symbol of
/// [`CipherKey::symbol_width`] bytes.
pub fn encrypt_bytes(data: &[u8], key: &CipherKey) -> Vec<u8> {
    match key.mode {
        CipherMode::Additive => {
            let a = key.a as u8;
            data.iter().map(|&s| a.wrapping_sub(s)).collect()
        }
        CipherMode::Power => {
            let width = usize::from(key.symbol_width());
            let table = power_table(key);
            let mut out = Vec::with_capacity(data.len() * width);
            for &s in data {
                out.extend_from_slice(&table[usize::from(s)]);
            }
            out
        }
    }
}

/// The 256 fixed-width symbols of a Power-mode key, indexed by byte.
fn power_table(key: &CipherKey) -> Vec<Vec<u8>> {
    let width = usize::from(key.symbol_width());
    (0..=255u8)
        .map(|s| {
            let bytes = encrypt_symbol(s, key).to_bytes_be();
            let mut slot = vec![0u8; width];
            slot[width - bytes.len()..].copy_from_slice(&bytes);
            slot
        })
        .collect()
}

pub fn decrypt_bytes(payload: &[u8], key: &CipherKey) -> Result<Vec<u8>, CipherError> {
    match key.mode {
        CipherMode::Additive => {
            let a = key.a as u8;
            Ok(payload.iter().map(|&c| a.wrapping_sub(c)).collect())
        }
        CipherMode::Power => {
            let width = usize::from(key.symbol_width());
            if !payload.len().is_multiple_of(width) {
                return Err(CipherError::LengthMismatch {
                    expected: (payload.len() / width * width) as u64,
                    actual: payload.len() as u64,
                });
            }
            let table = power_table(key);
            let lookup: HashMap<&[u8], u8> = table
                .iter()
                .enumerate()
                .map(|(s, sym)| (sym.as_slice(), s as u8))
                .collect();
            payload
                .chunks_exact(width)
                .enumerate()
                .map(|(index, chunk)| match lookup.get(chunk) {
                    Some(&s) => Ok(s),
                    // Not a valid symbol; the root check says why.
                    None => decrypt_power_symbol(&BigUint::from_bytes_be(chunk), key, index),
                })
                .collect()
        }
    }
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const MASK_PRIME: u64 = (1 << 31) - 1;

impl MaskSchedule {
    /// Mask schedule whose LCG seeds are mixed out of the key, so nothing
    /// about the mask needs to be stored alongside the ciphertext.
    ///
    /// Both streams use the prime modulus 2^31 - 1 with zero increment;
    /// a power-of-two modulus would make the state parity alternate.
    pub fn for_key(key: &CipherKey, block_bytes: u32) -> Result<Self, CipherError> {
        let tag = (u64::from(key.mode.tag()) << 56) | (u64::from(key.n) << 48);
        let h1 = mix64(key.a ^ tag);
        let h2 = mix64(h1 ^ 0x5851_f42d_4c95_7f2d);
        let seed1 = 1 + h1 % (MASK_PRIME - 1);
        let seed2 = 1 + h2 % (MASK_PRIME - 1);
        let rand = LcgParams::new(seed1, 48_271, 0, MASK_PRIME)?;
        let rep = LcgParams::new(seed2, 16_807, 0, MASK_PRIME)?;
        Ok(MaskSchedule::new(rand, rep, DEFAULT_REP_PERIOD_BITS, block_bytes)?)
    }
}

pub const ENVELOPE_MAGIC: [u8; 4] = *b"IFSC";
pub const ENVELOPE_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvelopeHeader {
    pub mode: CipherMode,
    pub n: u8,
    pub symbol_width: u8,
    pub block_bytes: u32,
    pub plaintext_len: u64,
}

impl EnvelopeHeader {
    pub fn validate(&self) -> Result<(), CipherError> {
        match self.mode {
            CipherMode::Additive if self.n != 1 || self.symbol_width != 1 => {
                Err(CipherError::BadHeader("additive mode needs n = 1 and width 1"))
            }
            CipherMode::Power if !(1..=MAX_POWER).contains(&self.n) => Err(CipherError::BadHeader("n out of range")),
            CipherMode::Power if self.symbol_width == 0 => Err(CipherError::BadHeader("zero symbol width")),
            _ if self.block_bytes == 0 => Err(CipherError::BadHeader("zero block size")),
            _ => Ok(()),
        }
    }

    pub fn payload_len(&self) -> u64 {
        self.plaintext_len * u64::from(self.symbol_width)
    }
}

/// Sealed file: header plus enciphered payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherEnvelope {
    pub header: EnvelopeHeader,
    pub payload: Vec<u8>,
}

impl CipherEnvelope {
    /// Serialized size in bytes.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }
}

/// Masks with the key-derived schedule, then enciphers.
pub fn seal_file(data: &[u8], key: &CipherKey, block_bytes: u32) -> Result<CipherEnvelope, CipherError> {
    let schedule = MaskSchedule::for_key(key, block_bytes)?;
    Ok(seal_with_schedule(data, key, &schedule))
}

pub fn seal_with_schedule(data: &[u8], key: &CipherKey, schedule: &MaskSchedule) -> CipherEnvelope {
    let mut masked = data.to_vec();
    schedule.apply(&mut masked);
    let payload = encrypt_bytes(&masked, key);
    CipherEnvelope {
        header: EnvelopeHeader {
            mode: key.mode,
            n: key.n,
            symbol_width: key.symbol_width(),
            block_bytes: schedule.block_bytes(),
            plaintext_len: data.len() as u64,
        },
        payload,
    }
}

/// Inverse of [`seal_file`]; the mask schedule is rebuilt from the key and
/// the header's block size.
pub fn open_file(envelope: &CipherEnvelope, key: &CipherKey) -> Result<Vec<u8>, CipherError> {
    let schedule = MaskSchedule::for_key(key, envelope.header.block_bytes)?;
    open_with_schedule(envelope, key, &schedule)
}

pub fn open_with_schedule(
    envelope: &CipherEnvelope,
    key: &CipherKey,
    schedule: &MaskSchedule,
) -> Result<Vec<u8>, CipherError> {
    let header = &envelope.header;
    header.validate()?;
    if header.mode != key.mode || header.n != key.n || header.symbol_width != key.symbol_width() {
        return Err(CipherError::BadHeader("header does not match key parameters"));
    }
    if header.payload_len() != envelope.payload.len() as u64 {
        return Err(CipherError::LengthMismatch {
            expected: header.payload_len(),
            actual: envelope.payload.len() as u64,
        });
    }
    let mut data = decrypt_bytes(&envelope.payload, key)?;
    schedule.apply(&mut data);
    Ok(data)
}

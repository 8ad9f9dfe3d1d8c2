//! LCG bit streams and the two-stream XOR mask applied to plaintext before
//! the involution cipher.
//!
//! The mask for each block of `block_bytes` is `N1 ^ N2`, where `N1` is a
//! fresh run of bits from the `Rand` generator and `N2` tiles a short
//! pattern of `rep_period_bits` bits drawn once per block from the `Rep`
//! generator. Bit `i` of a block lands in byte `i / 8` at bit position
//! `i % 8` (least significant first).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeystreamError {
    #[error("invalid LCG parameters: {0}")]
    InvalidParams(&'static str),
    #[error("invalid mask schedule: {0}")]
    InvalidSchedule(&'static str),
    #[error("monobit check needs at least {min} bits, got {got}")]
    TooFewBits { min: usize, got: usize },
}

/// `X_{i+1} = (a X_i + c) mod m`, with all parameters reduced mod `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LcgParams {
    seed: u64,
    multiplier: u64,
    increment: u64,
    modulus: u64,
}

impl LcgParams {
    pub fn new(seed: u64, multiplier: u64, increment: u64, modulus: u64) -> Result<Self, KeystreamError> {
        if modulus < 2 {
            return Err(KeystreamError::InvalidParams("modulus must be at least 2"));
        }
        Ok(Self {
            seed: seed % modulus,
            multiplier: multiplier % modulus,
            increment: increment % modulus,
            modulus,
        })
    }

    /// The literal `Rand` parameters of the reference evaluation:
    /// X0 = 9741, a = 1674, c = 1234, m = 231.
    pub fn rand_literal() -> Self {
        Self::new(9741, 1674, 1234, 231).expect("valid literal parameters")
    }

    /// The literal `Rep` parameters of the reference evaluation:
    /// X0 = 9123, a = 1324, c = 2234, m = 432.
    pub fn rep_literal() -> Self {
        Self::new(9123, 1324, 2234, 432).expect("valid literal parameters")
    }

    /// m = 2^31, a = 1103515245, c = 12345.
    pub fn recommended(seed: u64) -> Self {
        Self::new(seed, 1_103_515_245, 12_345, 1 << 31).expect("valid recommended parameters")
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn multiplier(&self) -> u64 {
        self.multiplier
    }

    pub fn increment(&self) -> u64 {
        self.increment
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn generator(&self) -> Lcg {
        Lcg {
            params: *self,
            state: self.seed,
        }
    }
}

/// A running LCG. Yields successive states `X_1, X_2, ...`.
#[derive(Debug, Clone)]
pub struct Lcg {
    params: LcgParams,
    state: u64,
}

impl Lcg {
    pub fn state(&self) -> u64 {
        self.state
    }

    #[inline]
    pub fn next_state(&mut self) -> u64 {
        let LcgParams {
            multiplier: a,
            increment: c,
            modulus: m,
            ..
        } = self.params;
        self.state = if m <= 1 << 32 {
            // a, X, c < 2^32 so a*X + c < 2^64.
            (a * self.state + c) % m
        } else {
            ((u128::from(a) * u128::from(self.state) + u128::from(c)) % u128::from(m)) as u64
        };
        self.state
    }

    /// Parity of the next state.
    #[inline]
    pub fn next_bit(&mut self) -> bool {
        self.next_state() & 1 == 1
    }
}

impl Iterator for Lcg {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        Some(self.next_state())
    }
}

/// Runs the recurrence `count` times from `X0`, emitting `X_{i+1} mod 2`.
pub fn lcg_bits(params: &LcgParams, count: usize) -> Vec<bool> {
    let mut lcg = params.generator();
    (0..count).map(|_| lcg.next_bit()).collect()
}

pub const DEFAULT_BLOCK_BYTES: u32 = 1024;
pub const DEFAULT_REP_PERIOD_BITS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskSchedule {
    rand_params: LcgParams,
    rep_params: LcgParams,
    rep_period_bits: u32,
    block_bytes: u32,
}

impl MaskSchedule {
    pub fn new(
        rand_params: LcgParams,
        rep_params: LcgParams,
        rep_period_bits: u32,
        block_bytes: u32,
    ) -> Result<Self, KeystreamError> {
        if block_bytes == 0 {
            return Err(KeystreamError::InvalidSchedule("block_bytes must be positive"));
        }
        if rep_period_bits < 8 {
            return Err(KeystreamError::InvalidSchedule("rep_period_bits must be at least 8"));
        }
        if (u64::from(block_bytes) * 8) % u64::from(rep_period_bits) != 0 {
            return Err(KeystreamError::InvalidSchedule(
                "rep_period_bits must divide the block bit length",
            ));
        }
        Ok(Self {
            rand_params,
            rep_params,
            rep_period_bits,
            block_bytes,
        })
    }

    /// Schedule built from the literal reference parameters, with the
    /// default period and block size.
    pub fn literal() -> Self {
        Self::new(
            LcgParams::rand_literal(),
            LcgParams::rep_literal(),
            DEFAULT_REP_PERIOD_BITS,
            DEFAULT_BLOCK_BYTES,
        )
        .expect("default schedule is valid")
    }

    pub fn rand_params(&self) -> &LcgParams {
        &self.rand_params
    }

    pub fn rep_params(&self) -> &LcgParams {
        &self.rep_params
    }

    pub fn rep_period_bits(&self) -> u32 {
        self.rep_period_bits
    }

    pub fn block_bytes(&self) -> u32 {
        self.block_bytes
    }

    /// The mask `K = N1 ^ N2` for `len` bytes.
    pub fn mask(&self, len: usize) -> Vec<u8> {
        let mut out = vec![0u8; len];
        self.apply(&mut out);
        out
    }

    /// XORs the mask into `data` in place.
    pub fn apply(&self, data: &mut [u8]) {
        let mut rand = self.rand_params.generator();
        let mut rep = self.rep_params.generator();
        let period = self.rep_period_bits as usize;
        let mut pattern = vec![false; period];
        for block in data.chunks_mut(self.block_bytes as usize) {
            for bit in pattern.iter_mut() {
                *bit = rep.next_bit();
            }
            for (i, byte) in block.iter_mut().enumerate() {
                let mut k = 0u8;
                for b in 0..8 {
                    let n1 = rand.next_bit();
                    let n2 = pattern[(i * 8 + b) % period];
                    k |= u8::from(n1 ^ n2) << b;
                }
                *byte ^= k;
            }
        }
    }
}

/// Masks (or unmasks) `data`; applying it twice with the same schedule is
/// the identity.
pub fn xor_mask(data: &[u8], schedule: &MaskSchedule) -> Vec<u8> {
    let mut out = data.to_vec();
    schedule.apply(&mut out);
    out
}

pub const MONOBIT_MIN_BITS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonobitStats {
    pub ones: usize,
    pub zeros: usize,
    /// `|ones - zeros| / total`
    pub bias: f64,
}

pub fn monobit_check(bits: &[bool]) -> Result<MonobitStats, KeystreamError> {
    if bits.len() < MONOBIT_MIN_BITS {
        return Err(KeystreamError::TooFewBits {
            min: MONOBIT_MIN_BITS,
            got: bits.len(),
        });
    }
    let ones = bits.iter().filter(|&&b| b).count();
    let zeros = bits.len() - ones;
    Ok(MonobitStats {
        ones,
        zeros,
        bias: ones.abs_diff(zeros) as f64 / bits.len() as f64,
    })
}

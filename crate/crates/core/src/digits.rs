//! Binary digits of π and other deterministic bit sources.
//!
//! Two independent routes to the digits of π live here. `bbp_hex_digit`
//! extracts a single hexadecimal digit at an arbitrary position with the
//! Bailey–Borwein–Plouffe series; its cost grows linearly with the position,
//! so it cannot feed millions of bits. `pi_fraction_bits` evaluates the
//! Chudnovsky series by binary splitting and produces a whole prefix at once.
//! The two are cross-checked in the tests.

use std::path::Path;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            r = ((r as u128 * base as u128) % m as u128) as u64;
        }
        base = ((base as u128 * base as u128) % m as u128) as u64;
        exp >>= 1;
    }
    r
}

/// Fractional part of `Σ_k 16^(n−k) / (8k + j)`.
fn bbp_series(j: u64, n: u64) -> f64 {
    let mut s = 0.0f64;
    for k in 0..=n {
        let m = 8 * k + j;
        s += pow_mod(16, n - k, m) as f64 / m as f64;
        s -= s.floor();
    }
    let mut k = n + 1;
    loop {
        let t = 16f64.powi(-((k - n) as i32)) / (8 * k + j) as f64;
        if t < 1e-17 {
            break;
        }
        s += t;
        k += 1;
    }
    s - s.floor()
}

/// Hexadecimal digit of π at `position` after the point (position 0 is the
/// `2` in `3.243F6A88…`).
pub fn bbp_hex_digit(position: u64) -> u8 {
    let n = position;
    let x = 4.0 * bbp_series(1, n) - 2.0 * bbp_series(4, n) - bbp_series(5, n) - bbp_series(6, n);
    let x = x - x.floor();
    (x * 16.0).floor() as u8
}

type Triple = (BigInt, BigInt, BigInt);

fn chudnovsky_split(a: u64, b: u64) -> Triple {
    if b == a + 1 {
        let a = a as i128;
        let p = BigInt::from(-(6 * a - 5) * (2 * a - 1)) * BigInt::from(6 * a - 1);
        let q = BigInt::from(10939058860032000i128) * BigInt::from(a * a) * BigInt::from(a);
        let r = &p * BigInt::from(545140134 * a + 13591409);
        return (p, q, r);
    }
    let m = (a + b) / 2;
    let (pam, qam, ram) = chudnovsky_split(a, m);
    let (pmb, qmb, rmb) = chudnovsky_split(m, b);
    let r = &qmb * ram + &pam * rmb;
    (pam * pmb, qam * qmb, r)
}

/// About `2^(bits(a) + prec) / a`, accurate to a few units in the last place.
fn reciprocal(a: &BigUint, prec: u64) -> BigUint {
    let na = a.bits();
    if prec <= 62 {
        let k = na.min(64);
        let top = (a >> (na - k)).to_u64().expect("at most 64 bits") as u128;
        return BigUint::from((1u128 << (k + prec)) / top);
    }
    let h = prec / 2 + 8;
    let y0 = reciprocal(a, h) << (prec - h);
    let k = na.min(prec + 16);
    let at = a >> (na - k);
    let e = (BigInt::one() << (k + prec)) - BigInt::from(&at * &y0);
    let y0 = BigInt::from(y0);
    let y1 = &y0 + ((&y0 * e) >> (k + prec));
    y1.to_biguint().expect("Newton step keeps the reciprocal positive")
}

/// About `2^prec / √c`.
fn inv_sqrt(c: u64, prec: u64) -> BigUint {
    if prec <= 40 {
        return BigUint::from((2f64.powi(prec as i32) / (c as f64).sqrt()) as u64);
    }
    let h = prec / 2 + 8;
    let y0 = inv_sqrt(c, h) << (prec - h);
    let e = (BigInt::one() << (2 * prec)) - BigInt::from(c) * BigInt::from(&y0 * &y0);
    let y0 = BigInt::from(y0);
    let y1 = &y0 + ((&y0 * e) >> (2 * prec + 1));
    y1.to_biguint().expect("Newton step keeps the root positive")
}

/// `floor(π · 2^bits)`.
fn pi_scaled(bits: u64) -> BigUint {
    const GUARD: u64 = 64;
    let prec = bits + GUARD;
    // Each Chudnovsky term contributes log2(151931373056000) ≈ 47.11 bits.
    let terms = prec / 47 + 2;
    let (_, q, r) = chudnovsky_split(1, terms);
    let denom = (BigInt::from(13591409u64) * &q + r).to_biguint().expect("series denominator is positive");
    let q = q.to_biguint().expect("Q is positive");
    let nd = denom.bits();
    let rc = reciprocal(&denom, prec + GUARD);
    // ratio ≈ (Q / denom) · 2^prec
    let ratio = (q * rc) >> (nd + GUARD);
    let root = inv_sqrt(10005, prec) * BigUint::from(426880u64 * 10005);
    (ratio * root) >> (prec + GUARD)
}

static PI_CACHE: Mutex<Option<Arc<Vec<u8>>>> = Mutex::new(None);

/// The first `count` binary digits of π after the point, one bit per byte.
/// Results are memoized per process.
pub fn pi_fraction_bits(count: usize) -> Arc<Vec<u8>> {
    let mut guard = PI_CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(bits) = guard.as_ref() {
        if bits.len() >= count {
            return Arc::clone(bits);
        }
    }
    let have = guard.as_ref().map_or(0, |b| b.len());
    let n = count.max(2 * have).max(4096);
    let v = pi_scaled(n as u64);
    let mut out = vec![0u8; n];
    // Integer part 3 sits above bit n; bit n−1−i is fraction bit i.
    let digits = v.to_u64_digits();
    for (i, slot) in out.iter_mut().enumerate() {
        let pos = n - 1 - i;
        *slot = ((digits[pos / 64] >> (pos % 64)) & 1) as u8;
    }
    let arc = Arc::new(out);
    *guard = Some(Arc::clone(&arc));
    arc
}

#[derive(Clone, Debug)]
pub enum DigitSource {
    /// Binary expansion of π after the point.
    Pi,
    /// Bytes of a file, most significant bit first.
    File(Arc<Vec<u8>>),
    /// ChaCha8 keystream bits.
    Prng(u64),
}

/// A random-access bit sequence with a read cursor.
#[derive(Clone, Debug)]
pub struct DigitStream {
    source: DigitSource,
    cursor: usize,
}

impl DigitStream {
    pub fn pi() -> Self {
        DigitStream { source: DigitSource::Pi, cursor: 0 }
    }

    pub fn prng(seed: u64) -> Self {
        DigitStream { source: DigitSource::Prng(seed), cursor: 0 }
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        DigitStream { source: DigitSource::File(Arc::new(bytes)), cursor: 0 }
    }

    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::from_bytes(std::fs::read(path)?))
    }

    pub fn source(&self) -> &DigitSource {
        &self.source
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn seek(&mut self, cursor: usize) {
        self.cursor = cursor;
    }

    /// Number of bits the source can supply, if finite.
    pub fn capacity(&self) -> Option<usize> {
        match &self.source {
            DigitSource::File(b) => Some(b.len() * 8),
            _ => None,
        }
    }

    /// Bits `[start, start + len)`, independent of the cursor.
    pub fn bits(&self, start: usize, len: usize) -> Result<Vec<u8>> {
        let end = start.checked_add(len).ok_or(Error::StreamUnderflow { requested: usize::MAX, available: 0 })?;
        match &self.source {
            DigitSource::Pi => {
                let bits = pi_fraction_bits(end);
                Ok(bits[start..end].to_vec())
            }
            DigitSource::File(bytes) => {
                let available = bytes.len() * 8;
                if end > available {
                    return Err(Error::StreamUnderflow { requested: end, available });
                }
                Ok((start..end).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect())
            }
            DigitSource::Prng(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let word = start / 64;
                // ChaCha word positions count 32-bit words.
                rng.set_word_pos(2 * word as u128);
                let mut out = Vec::with_capacity(len);
                let mut cur = rng.next_u64();
                let mut w = word;
                for i in start..end {
                    if i / 64 != w {
                        cur = rng.next_u64();
                        w = i / 64;
                    }
                    out.push(((cur >> (63 - i % 64)) & 1) as u8);
                }
                Ok(out)
            }
        }
    }

    pub fn bit_at(&self, index: usize) -> Result<u8> {
        Ok(self.bits(index, 1)?[0])
    }

    /// Reads `len` bits at the cursor and advances it.
    pub fn take(&mut self, len: usize) -> Result<Vec<u8>> {
        let out = self.bits(self.cursor, len)?;
        self.cursor += len;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 3.243F6A8885A308D313198A2E03707344A4093822299F31D008
    const PI_HEX: &str = "243F6A8885A308D313198A2E03707344A4093822299F31D008";

    #[test]
    fn bbp_matches_known_prefix() {
        for (i, c) in PI_HEX.chars().enumerate() {
            assert_eq!(bbp_hex_digit(i as u64), c.to_digit(16).unwrap() as u8, "position {i}");
        }
    }

    #[test]
    fn bulk_matches_known_prefix() {
        let bits = pi_fraction_bits(PI_HEX.len() * 4);
        for (i, c) in PI_HEX.chars().enumerate() {
            let nib = bits[4 * i..4 * i + 4].iter().fold(0u32, |a, &b| 2 * a + b as u32);
            assert_eq!(nib, c.to_digit(16).unwrap(), "hex position {i}");
        }
    }

    #[test]
    fn reciprocal_matches_exact_division() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for bits in [10u64, 70, 300, 2000, 9000] {
            let mut bytes = vec![0u8; (bits as usize).div_ceil(8)];
            rng.fill_bytes(&mut bytes);
            let a = (BigUint::from_bytes_le(&bytes) >> (bytes.len() as u64 * 8 - bits)) | BigUint::one();
            for prec in [40u64, 63, 200, 3000] {
                let exact = (BigUint::one() << (a.bits() + prec)) / &a;
                let approx = reciprocal(&a, prec);
                let diff = if approx > exact { &approx - &exact } else { &exact - &approx };
                assert!(diff <= BigUint::from(4u32), "bits {bits} prec {prec} diff {diff}");
            }
        }
    }

    #[test]
    fn inv_sqrt_matches_integer_root() {
        for prec in [30u64, 41, 128, 1000, 5000] {
            // floor(2^prec/√c) = floor(sqrt(2^(2prec)/c))
            let exact = ((BigUint::one() << (2 * prec)) / BigUint::from(10005u32)).sqrt();
            let approx = inv_sqrt(10005, prec);
            let diff = if approx > exact { &approx - &exact } else { &exact - &approx };
            assert!(diff <= BigUint::from(4u32), "prec {prec} diff {diff}");
        }
    }

    #[test]
    fn streams_are_deterministic() {
        let s = DigitStream::prng(5);
        assert_eq!(s.bits(100, 50).unwrap(), s.bits(100, 50).unwrap());
        assert_eq!(s.bits(0, 200).unwrap()[100..150], s.bits(100, 50).unwrap()[..]);
        let mut t = DigitStream::from_bytes(vec![0b1010_0000]);
        assert_eq!(t.take(4).unwrap(), vec![1, 0, 1, 0]);
        assert_eq!(t.cursor(), 4);
        assert!(matches!(t.take(5), Err(Error::StreamUnderflow { requested: 9, available: 8 })));
    }
}

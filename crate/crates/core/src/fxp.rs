//! Unsigned Q8.6 fixed-point arithmetic, bit-exact with the accelerator datapath.
//!
//! A word is 14 bits: 8 integer bits and 6 fractional bits, so the represented
//! value is `raw / 64`. Arithmetic saturates instead of wrapping; the
//! `overflowing_*` variants expose whether saturation occurred.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of fractional bits.
pub const FRAC_BITS: u32 = 6;
/// Total word width.
pub const WORD_BITS: u32 = 14;
/// Largest raw value (`2^14 - 1`).
pub const RAW_MAX: u16 = (1 << WORD_BITS) - 1;
/// Largest representable real value, 255.984375.
pub const MAX_VALUE: f64 = RAW_MAX as f64 / SCALE;

const SCALE: f64 = (1u32 << FRAC_BITS) as f64;
const HALF_ULP_RAW: u32 = 1 << (FRAC_BITS - 1);

/// Hard cap on Babylonian iterations.
pub const SQRT_MAX_ITERATIONS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FxError {
    #[error("value {0} is outside the Q8.6 range [0, 255.984375]")]
    OutOfRange(f64),
    #[error("raw word {0} does not fit in 14 bits")]
    RawOutOfRange(u32),
    #[error("division by zero")]
    DivideByZero,
}

/// A Q8.6 unsigned fixed-point word.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub struct Fx(u16);

/// Full-width product of two [`Fx`] words, interpreted as Q16.12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FxWide(u32);

impl FxWide {
    pub const fn raw(self) -> u32 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / (SCALE * SCALE)
    }

    /// Rounds back to Q8.6, ties up, saturating at [`RAW_MAX`].
    pub const fn round_to_fx(self) -> (Fx, bool) {
        let rounded = (self.0 + HALF_ULP_RAW) >> FRAC_BITS;
        if rounded > RAW_MAX as u32 {
            (Fx::MAX, true)
        } else {
            (Fx(rounded as u16), false)
        }
    }
}

impl Fx {
    pub const ZERO: Fx = Fx(0);
    pub const ONE: Fx = Fx(1 << FRAC_BITS);
    pub const MAX: Fx = Fx(RAW_MAX);
    /// Smallest nonzero magnitude, 2^-6.
    pub const EPSILON: Fx = Fx(1);

    pub const fn from_raw(raw: u16) -> Result<Fx, FxError> {
        if raw > RAW_MAX {
            Err(FxError::RawOutOfRange(raw as u32))
        } else {
            Ok(Fx(raw))
        }
    }

    /// Panics if `raw` needs more than 14 bits. Intended for constants.
    pub const fn from_raw_unchecked(raw: u16) -> Fx {
        assert!(raw <= RAW_MAX, "raw word exceeds 14 bits");
        Fx(raw)
    }

    pub const fn raw(self) -> u16 {
        self.0
    }

    /// Round-to-nearest (ties up) conversion from a real value.
    pub fn encode(x: f64) -> Result<Fx, FxError> {
        if !(0.0..=MAX_VALUE).contains(&x) {
            return Err(FxError::OutOfRange(x));
        }
        // x * 64 is exact for any f64 in range, so the only rounding is the floor.
        let raw = (x * SCALE + 0.5).floor() as u16;
        Ok(Fx(raw.min(RAW_MAX)))
    }

    pub fn decode(self) -> f64 {
        self.0 as f64 / SCALE
    }

    pub const fn overflowing_add(self, rhs: Fx) -> (Fx, bool) {
        let sum = self.0 as u32 + rhs.0 as u32;
        if sum > RAW_MAX as u32 {
            (Fx::MAX, true)
        } else {
            (Fx(sum as u16), false)
        }
    }

    /// Subtraction saturating at zero; the flag reports underflow.
    pub const fn overflowing_sub(self, rhs: Fx) -> (Fx, bool) {
        if rhs.0 > self.0 {
            (Fx::ZERO, true)
        } else {
            (Fx(self.0 - rhs.0), false)
        }
    }

    pub const fn widening_mul(self, rhs: Fx) -> FxWide {
        FxWide(self.0 as u32 * rhs.0 as u32)
    }

    pub const fn overflowing_mul(self, rhs: Fx) -> (Fx, bool) {
        self.widening_mul(rhs).round_to_fx()
    }

    /// Truncating division, `floor(a * 64 / b)`, as a restoring divider computes it.
    pub const fn overflowing_div(self, rhs: Fx) -> Result<(Fx, bool), FxError> {
        if rhs.0 == 0 {
            return Err(FxError::DivideByZero);
        }
        let quotient = ((self.0 as u32) << FRAC_BITS) / rhs.0 as u32;
        if quotient > RAW_MAX as u32 {
            Ok((Fx::MAX, true))
        } else {
            Ok((Fx(quotient as u16), false))
        }
    }

    pub const fn checked_div(self, rhs: Fx) -> Result<Fx, FxError> {
        match self.overflowing_div(rhs) {
            Ok((q, _)) => Ok(q),
            Err(e) => Err(e),
        }
    }

    pub fn sqrt(self) -> (Fx, SqrtTrace) {
        sqrt(self)
    }
}

impl Add for Fx {
    type Output = Fx;
    fn add(self, rhs: Fx) -> Fx {
        self.overflowing_add(rhs).0
    }
}

impl Sub for Fx {
    type Output = Fx;
    fn sub(self, rhs: Fx) -> Fx {
        self.overflowing_sub(rhs).0
    }
}

impl Mul for Fx {
    type Output = Fx;
    fn mul(self, rhs: Fx) -> Fx {
        self.overflowing_mul(rhs).0
    }
}

impl TryFrom<u16> for Fx {
    type Error = FxError;
    fn try_from(raw: u16) -> Result<Fx, FxError> {
        Fx::from_raw(raw)
    }
}

impl From<Fx> for u16 {
    fn from(v: Fx) -> u16 {
        v.0
    }
}

impl fmt::Debug for Fx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fx({} = {:.6})", self.0, self.decode())
    }
}

/// Prints the decoded value with six fractional digits, which is exact for Q8.6.
impl fmt::Display for Fx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.decode())
    }
}

/// Record of one square-root evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqrtTrace {
    /// Raw radicand as supplied.
    pub radicand: Fx,
    /// The shifted integer radicand `radicand.raw * 64` the iteration runs on.
    pub shifted: u32,
    pub seed: u32,
    /// `x_1, x_2, ...`
    pub iterates: Vec<u32>,
    pub iterations: u32,
}

/// Seed table: `round(64 * sqrt(sqrt(i * (i + 1))))` for bucket `[i, i + 1)`.
///
/// Indices 0..4 are unreachable since the normalised index always has its
/// leading one in bit 2 or bit 3.
pub const SEED_LUT: [u16; 16] = [
    0, 0, 0, 0, 135, 150, 163, 175, 186, 197, 207, 217, 226, 235, 244, 252,
];

/// Bucket index in `[4, 16)` and half-exponent `e` such that
/// `t ≈ index * 4^(e - 1)`.
pub fn seed_index(t: u32) -> (usize, u32) {
    debug_assert!(t > 0);
    let e = (31 - t.leading_zeros()) / 2;
    let index = ((t as u64) << 2 >> (2 * e)) as usize;
    (index, e)
}

/// Initial estimate from the leading-one position refined by [`SEED_LUT`].
pub fn sqrt_seed(t: u32) -> u32 {
    if t == 0 {
        return 0;
    }
    let (index, e) = seed_index(t);
    // LUT entries carry 6 fractional bits and approximate sqrt(index) = sqrt(t) / 2^(e-1).
    let scaled = (SEED_LUT[index] as u32) << e;
    ((scaled + (1 << 6)) >> 7).max(1)
}

/// Exact floor square root of a Q8.6 word via seeded Babylonian iteration.
///
/// Runs on `t = raw * 64`, so the integer result is directly the Q8.6 result.
pub fn sqrt(s: Fx) -> (Fx, SqrtTrace) {
    let t = (s.raw() as u32) << FRAC_BITS;
    let seed = sqrt_seed(t);
    let mut trace = SqrtTrace {
        radicand: s,
        shifted: t,
        seed,
        iterates: Vec::with_capacity(SQRT_MAX_ITERATIONS as usize),
        iterations: 0,
    };
    if t == 0 {
        return (Fx::ZERO, trace);
    }

    let step = |x: u32| (x + t / x) / 2;
    // The seed may sit below the root; one unconditional step lifts it to >= floor(sqrt(t)).
    let mut prev = step(seed);
    trace.iterates.push(prev);
    trace.iterations = 1;
    let mut last = prev;
    while trace.iterations < SQRT_MAX_ITERATIONS {
        last = step(prev);
        trace.iterates.push(last);
        trace.iterations += 1;
        if last + 1 >= prev {
            break;
        }
        prev = last;
    }

    let mut root = prev.min(last);
    if root * root > t {
        root -= 1;
    }
    // root <= sqrt(2^20) always fits.
    (Fx(root as u16), trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(raw: u16) -> Fx {
        Fx::from_raw(raw).unwrap()
    }

    fn brute_isqrt(t: u32) -> u32 {
        let mut r = 0u32;
        while (r + 1) * (r + 1) <= t {
            r += 1;
        }
        r
    }

    #[test]
    fn encode_examples() {
        assert_eq!(Fx::encode(1.0).unwrap().raw(), 64);
        assert_eq!(Fx::encode(2.5).unwrap().raw(), 160);
        assert_eq!(Fx::encode(0.0156).unwrap().raw(), 1);
        assert_eq!(Fx::encode(0.025).unwrap().raw(), 2);
        assert_eq!(Fx::encode(MAX_VALUE).unwrap(), Fx::MAX);
        assert!(matches!(Fx::encode(256.0), Err(FxError::OutOfRange(_))));
        assert!(matches!(Fx::encode(-0.001), Err(FxError::OutOfRange(_))));
        assert!(Fx::encode(f64::NAN).is_err());
    }

    #[test]
    fn encode_ties_round_up() {
        // 1/128 is exactly half an ulp.
        assert_eq!(Fx::encode(1.0 / 128.0).unwrap().raw(), 1);
        assert_eq!(Fx::encode(1.0 + 1.0 / 128.0).unwrap().raw(), 65);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(fx(64).decode(), 1.0);
        assert_eq!(fx(2).decode(), 0.03125);
        assert_eq!(fx(16383).decode(), 255.984375);
        assert_eq!(Fx::EPSILON.decode(), 0.015625);
        assert_eq!(fx(28).to_string(), "0.437500");
    }

    #[test]
    fn from_raw_rejects_wide_words() {
        assert!(Fx::from_raw(16384).is_err());
        assert!(Fx::from_raw(16383).is_ok());
    }

    #[test]
    fn add_sub_examples() {
        assert_eq!(fx(64).overflowing_add(fx(32)), (fx(96), false));
        assert_eq!(fx(16383).overflowing_add(fx(1)), (fx(16383), true));
        assert_eq!(fx(0) + fx(0), fx(0));

        assert_eq!(fx(64).overflowing_sub(fx(64)), (fx(0), false));
        assert_eq!(fx(64).overflowing_sub(fx(16)), (fx(48), false));
        assert_eq!(fx(10).overflowing_sub(fx(20)), (fx(0), true));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(fx(96).overflowing_mul(fx(128)), (fx(192), false));
        // wide = 32 is exactly half an ulp; ties go up.
        assert_eq!(fx(1).overflowing_mul(fx(32)), (fx(1), false));
        assert_eq!(fx(1).overflowing_mul(fx(31)), (fx(0), false));
        assert_eq!(fx(160) * fx(128), fx(320));
        assert_eq!(fx(16383).overflowing_mul(fx(128)), (Fx::MAX, true));
        assert_eq!(fx(96).widening_mul(fx(128)).raw(), 12288);
    }

    #[test]
    fn div_examples() {
        assert_eq!(fx(64).checked_div(fx(192)).unwrap(), fx(21));
        for r in [1u16, 7, 64, 1280, 16383] {
            assert_eq!(fx(r).checked_div(fx(r)).unwrap(), Fx::ONE);
        }
        assert_eq!(fx(64).checked_div(fx(0)), Err(FxError::DivideByZero));
        assert_eq!(fx(16383).overflowing_div(fx(1)).unwrap(), (Fx::MAX, true));
    }

    #[test]
    fn sqrt_examples() {
        let (r, t) = sqrt(fx(256));
        assert_eq!(r, fx(128));
        assert!(t.iterations <= 2);

        assert_eq!(sqrt(fx(128)).0, fx(90));
        assert_eq!(sqrt(fx(2)).0, fx(11));
        assert_eq!(brute_isqrt(128 * 64), 90);
        assert_eq!(brute_isqrt(2 * 64), 11);

        let (z, zt) = sqrt(Fx::ZERO);
        assert_eq!(z, Fx::ZERO);
        assert_eq!(zt.iterations, 0);
        assert!(zt.iterates.is_empty());
    }

    #[test]
    fn sqrt_trace_records_iterates() {
        let (_, t) = sqrt(fx(128));
        assert_eq!(t.shifted, 8192);
        assert_eq!(t.iterates.len() as u32, t.iterations);
        assert!(t.seed > 0);
    }

    #[test]
    fn sqrt_exhaustive_matches_brute_force() {
        for raw in 0..=RAW_MAX {
            let (r, t) = sqrt(fx(raw));
            assert_eq!(r.raw() as u32, brute_isqrt(raw as u32 * 64), "raw={raw}");
            assert!(t.iterations <= SQRT_MAX_ITERATIONS);
        }
    }

    #[test]
    fn sqrt_gipps_domain_takes_two_iterations() {
        for raw in 2..=66 {
            assert_eq!(sqrt(fx(raw)).1.iterations, 2, "raw={raw}");
        }
    }

    #[test]
    fn seed_lut_relative_error_within_six_percent() {
        // Each bucket [i, i+1) is approximated by SEED_LUT[i] / 64; check against
        // a fine sampling of the bucket including both edges.
        for (i, &entry) in SEED_LUT.iter().enumerate().skip(4) {
            let approx = entry as f64 / 64.0;
            for k in 0..=1000 {
                let m = i as f64 + k as f64 / 1000.0;
                let rel = (approx / m.sqrt() - 1.0).abs();
                assert!(rel <= 0.06, "bucket {i} at {m}: {rel}");
            }
        }
    }

    #[test]
    fn seed_index_normalises() {
        for t in 1..(1u32 << 20) {
            let (i, e) = seed_index(t);
            assert!((4..16).contains(&i), "t={t}");
            let lo = (i as u64) << (2 * e) >> 2;
            assert!(lo <= t as u64);
        }
    }
}

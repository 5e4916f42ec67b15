//! Independent bit-exact reference for the instruction pipeline.
//!
//! Works on plain `u128` integers in units of 2^-6 and finds square roots by
//! bisection, sharing no code with [`crate::fxp`] or [`crate::gipps`]. Any
//! disagreement between the two paths is a bug in one of them.

use crate::fxp::Fx;
use crate::gipps::{GippsError, GippsOperands};

const ULP_DENOM: u128 = 64;
const CEILING: u128 = 16_383;
/// Latency model: one cycle before the root, two Babylonian cycles, one after.
const MODEL_LATENCY: u32 = 1 + 2 + 1;

/// Stage values produced by the oracle, in raw units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleResult {
    pub va: u16,
    pub cycles: u32,
    /// q, f, r, s, p1, p2, p3, p4
    pub stages: [u16; 8],
}

fn clamp(x: u128) -> u128 {
    if x > CEILING {
        CEILING
    } else {
        x
    }
}

/// Nearest integer to `num / den`, halves away from zero (all values are nonnegative).
fn round_half_up(num: u128, den: u128) -> u128 {
    (2 * num + den) / (2 * den)
}

/// Largest `r` with `r * r <= n`, by bisection.
pub fn floor_isqrt(n: u128) -> u128 {
    let (mut lo, mut hi) = (0u128, n.min(1 << 32) + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if mid * mid <= n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Re-derives the instruction result from the operand bits.
pub fn pipeline_oracle(ops: &GippsOperands) -> Result<OracleResult, GippsError> {
    let a = ops.a.raw() as u128;
    let t = ops.t.raw() as u128;
    let vstar = ops.vstar.raw() as u128;
    let v = ops.v.raw() as u128;

    if vstar == 0 {
        return Err(GippsError::InvalidOperands(
            "desired speed must be positive",
        ));
    }
    if t == 0 {
        return Err(GippsError::InvalidOperands("time step must be positive"));
    }
    if v > vstar {
        return Err(GippsError::InvalidOperands(
            "current speed must not exceed desired speed",
        ));
    }

    // ratio in ulps: (v/64) / (vstar/64) * 64
    let q = clamp(v * ULP_DENOM / vstar);
    let f = ULP_DENOM.saturating_sub(q);
    // 0.025 -> nearest ulp
    let k_radicand = round_half_up(25 * ULP_DENOM, 1000);
    let r = clamp(k_radicand + q);
    // sqrt(r / 64) * 64 = sqrt(r * 64)
    let s = floor_isqrt(r * ULP_DENOM);

    let k_gain = 5 * ULP_DENOM / 2;
    let p1 = clamp(round_half_up(k_gain * a, ULP_DENOM));
    let p2 = clamp(round_half_up(p1 * t, ULP_DENOM));
    let p3 = clamp(round_half_up(p2 * f, ULP_DENOM));
    let p4 = clamp(round_half_up(p3 * s, ULP_DENOM));
    let va = clamp(v + p4);

    let narrow = |x: u128| x as u16;
    Ok(OracleResult {
        va: narrow(va),
        cycles: MODEL_LATENCY,
        stages: [q, f, r, s, p1, p2, p3, p4].map(narrow),
    })
}

impl OracleResult {
    pub fn va_fx(&self) -> Fx {
        Fx::from_raw_unchecked(self.va)
    }
}

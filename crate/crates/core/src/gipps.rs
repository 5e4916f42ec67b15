//! The accelerator instruction: the Gipps free-acceleration update evaluated
//! through the Q8.6 datapath, with a cycle count and a per-stage trace.
//!
//! ```text
//! Va = V + 2.5 a T (1 - V/V*) sqrt(0.025 + V/V*)
//! ```

use std::fmt;

use thiserror::Error;

use crate::fxp::{Fx, SqrtTrace};

/// 2.5, exact in Q8.6.
pub const K_GAIN: Fx = Fx::from_raw_unchecked(160);
/// 0.025 rounded to the nearest Q8.6 word (0.03125).
pub const K_RADICAND: Fx = Fx::from_raw_unchecked(2);
/// Cycles spent outside the square root: divide/subtract/add, then the multiply chain.
pub const FIXED_CYCLES: u32 = 2;
/// In-domain latency of one instruction.
pub const NOMINAL_CYCLES: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GippsError {
    #[error("invalid operands: {0}")]
    InvalidOperands(&'static str),
    #[error("reference domain error: {0}")]
    Domain(&'static str),
}

/// The four instruction operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GippsOperands {
    /// Maximum acceleration.
    pub a: Fx,
    /// Reaction time, equal to the simulation step.
    pub t: Fx,
    /// Desired speed.
    pub vstar: Fx,
    /// Current speed.
    pub v: Fx,
}

impl GippsOperands {
    pub fn new(a: Fx, t: Fx, vstar: Fx, v: Fx) -> Self {
        GippsOperands { a, t, vstar, v }
    }

    /// Quantizes real operands through [`Fx::encode`].
    pub fn encode(a: f64, t: f64, vstar: f64, v: f64) -> Result<Self, crate::fxp::FxError> {
        Ok(GippsOperands {
            a: Fx::encode(a)?,
            t: Fx::encode(t)?,
            vstar: Fx::encode(vstar)?,
            v: Fx::encode(v)?,
        })
    }

    pub fn validate(&self) -> Result<(), GippsError> {
        if self.vstar.raw() == 0 {
            return Err(GippsError::InvalidOperands(
                "desired speed must be positive",
            ));
        }
        if self.t.raw() == 0 {
            return Err(GippsError::InvalidOperands("time step must be positive"));
        }
        if self.v > self.vstar {
            return Err(GippsError::InvalidOperands(
                "current speed must not exceed desired speed",
            ));
        }
        Ok(())
    }
}

/// Intermediate datapath values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GippsTrace {
    /// V / V*
    pub q: Fx,
    /// 1 - q
    pub f: Fx,
    /// 0.025 + q
    pub r: Fx,
    /// sqrt(r)
    pub s: Fx,
    pub p1: Fx,
    pub p2: Fx,
    pub p3: Fx,
    pub p4: Fx,
    pub sqrt: SqrtTrace,
}

impl GippsTrace {
    /// Named stage values in evaluation order.
    pub fn stages(&self) -> [(&'static str, Fx); 8] {
        [
            ("q", self.q),
            ("f", self.f),
            ("r", self.r),
            ("s", self.s),
            ("p1", self.p1),
            ("p2", self.p2),
            ("p3", self.p3),
            ("p4", self.p4),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GippsResult {
    pub va: Fx,
    pub cycles: u32,
    pub trace: GippsTrace,
}

/// One line per stage: `name raw decoded`.
impl fmt::Display for GippsResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in self.trace.stages() {
            writeln!(f, "{name:<6} {:>5} {value}", value.raw())?;
        }
        writeln!(f, "{:<6} {:>5} {}", "va", self.va.raw(), self.va)?;
        write!(f, "cycles {}", self.cycles)
    }
}

/// Executes one instruction.
pub fn gipps_step(ops: &GippsOperands) -> Result<GippsResult, GippsError> {
    ops.validate()?;

    // cycle 1
    let q = ops
        .v
        .checked_div(ops.vstar)
        .map_err(|_| GippsError::InvalidOperands("desired speed must be positive"))?;
    let f = Fx::ONE - q;
    let r = K_RADICAND + q;
    // cycles 2..=3 in-domain
    let (s, sqrt) = r.sqrt();
    // cycle 4
    let p1 = K_GAIN * ops.a;
    let p2 = p1 * ops.t;
    let p3 = p2 * f;
    let p4 = p3 * s;
    let va = ops.v + p4;

    Ok(GippsResult {
        va,
        cycles: FIXED_CYCLES + sqrt.iterations,
        trace: GippsTrace {
            q,
            f,
            r,
            s,
            p1,
            p2,
            p3,
            p4,
            sqrt,
        },
    })
}

/// Ideal real-valued form of the update.
pub fn gipps_reference(a: f64, t: f64, vstar: f64, v: f64) -> Result<f64, GippsError> {
    if vstar.is_nan() || vstar <= 0.0 {
        return Err(GippsError::Domain("desired speed must be positive"));
    }
    if t.is_nan() || t <= 0.0 {
        return Err(GippsError::Domain("time step must be positive"));
    }
    if a.is_nan() || a < 0.0 {
        return Err(GippsError::Domain("acceleration must be nonnegative"));
    }
    if !(0.0..=vstar).contains(&v) {
        return Err(GippsError::Domain("speed must lie in [0, desired speed]"));
    }
    Ok(reference_unchecked(a, t, vstar, v))
}

/// [`gipps_reference`] without domain checks; used in timing loops.
#[inline]
pub fn reference_unchecked(a: f64, t: f64, vstar: f64, v: f64) -> f64 {
    let ratio = v / vstar;
    v + 2.5 * a * t * (1.0 - ratio) * (0.025 + ratio).sqrt()
}

/// [`gipps_reference`] on the decoded operand values.
pub fn reference_for(ops: &GippsOperands) -> Result<f64, GippsError> {
    gipps_reference(
        ops.a.decode(),
        ops.t.decode(),
        ops.vstar.decode(),
        ops.v.decode(),
    )
}

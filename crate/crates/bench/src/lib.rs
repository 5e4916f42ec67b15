//! Shared operand generators for the criterion benches.

use gipps_core::{Fx, GippsOperands};

/// A deterministic spread of in-domain operands: `v` walks `[0, vstar]` for a
/// handful of desired speeds, accelerations and steps.
pub fn operand_set(n: usize) -> Vec<GippsOperands> {
    const VSTAR: [u16; 5] = [320, 640, 1280, 2304, 4480];
    const ACCEL: [u16; 4] = [32, 64, 128, 320];
    const STEP: [u16; 3] = [16, 32, 64];
    (0..n)
        .map(|i| {
            let vstar = VSTAR[i % VSTAR.len()];
            let v = (i as u64 * 2_654_435_761 % (vstar as u64 + 1)) as u16;
            GippsOperands {
                a: Fx::from_raw_unchecked(ACCEL[i / VSTAR.len() % ACCEL.len()]),
                t: Fx::from_raw_unchecked(STEP[i % STEP.len()]),
                vstar: Fx::from_raw_unchecked(vstar),
                v: Fx::from_raw_unchecked(v),
            }
        })
        .collect()
}

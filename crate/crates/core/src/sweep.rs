//! Verification sweeps: the instruction against the bit-exact oracle and the
//! ideal real-valued update over a grid of operands.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::fxp::{Fx, FxError};
use crate::gipps::{gipps_step, reference_for, GippsError, GippsOperands, NOMINAL_CYCLES};
use crate::oracle::pipeline_oracle;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub vstar: Vec<Fx>,
    pub a: Vec<Fx>,
    pub t: Vec<Fx>,
    /// Only evaluate `v = vstar` instead of every `v` in `[0, vstar]`.
    pub only_at_desired: bool,
}

impl SweepGrid {
    pub fn from_reals(vstar: &[f64], a: &[f64], t: &[f64]) -> Result<SweepGrid, FxError> {
        let enc = |xs: &[f64]| {
            xs.iter()
                .map(|&x| Fx::encode(x))
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(SweepGrid {
            vstar: enc(vstar)?,
            a: enc(a)?,
            t: enc(t)?,
            only_at_desired: false,
        })
    }

    pub fn cases(&self) -> Vec<GippsOperands> {
        let mut out = Vec::new();
        for &vstar in &self.vstar {
            for &a in &self.a {
                for &t in &self.t {
                    let lo = if self.only_at_desired { vstar.raw() } else { 0 };
                    out.extend((lo..=vstar.raw()).map(|v| GippsOperands {
                        a,
                        t,
                        vstar,
                        v: Fx::from_raw_unchecked(v),
                    }));
                }
            }
        }
        out
    }
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid::from_reals(
            &[5.0, 10.0, 20.0, 36.0, 70.0],
            &[0.5, 1.0, 2.0, 5.0],
            &[0.25, 0.5, 1.0],
        )
        .expect("default grid is in range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCase {
    pub ops: GippsOperands,
    pub va_fixed: Fx,
    pub va_ideal: f64,
    pub abs_err: f64,
    pub cycles: u32,
    pub sqrt_iterations: u32,
    pub oracle_match: bool,
}

impl SweepCase {
    pub const CSV_HEADER: &'static str = "a,T,vstar,v,va_fixed,va_ideal,abs_err";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.9},{:.9}",
            self.ops.a,
            self.ops.t,
            self.ops.vstar,
            self.ops.v,
            self.va_fixed,
            self.va_ideal,
            self.abs_err
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub cases: usize,
    pub max_abs_err: f64,
    pub mean_abs_err: f64,
    /// Operands of the worst case.
    pub worst: Option<GippsOperands>,
    pub max_sqrt_iterations: u32,
    pub cycle_histogram: BTreeMap<u32, usize>,
    pub oracle_mismatches: usize,
    pub first_mismatch: Option<GippsOperands>,
}

impl SweepSummary {
    pub fn passed(&self) -> bool {
        self.oracle_mismatches == 0 && self.cycle_histogram.keys().all(|&c| c == NOMINAL_CYCLES)
    }
}

pub fn evaluate_case(ops: &GippsOperands) -> Result<SweepCase, GippsError> {
    let res = gipps_step(ops)?;
    let oracle = pipeline_oracle(ops)?;
    let stages = res.trace.stages().map(|(_, v)| v.raw());
    let va_ideal = reference_for(ops)?;
    Ok(SweepCase {
        ops: *ops,
        va_fixed: res.va,
        va_ideal,
        abs_err: (res.va.decode() - va_ideal).abs(),
        cycles: res.cycles,
        sqrt_iterations: res.trace.sqrt.iterations,
        oracle_match: oracle.va == res.va.raw()
            && oracle.cycles == res.cycles
            && oracle.stages == stages,
    })
}

/// Evaluates every grid case; the returned cases keep grid order.
pub fn run_sweep(grid: &SweepGrid) -> Result<(Vec<SweepCase>, SweepSummary), GippsError> {
    let cases: Vec<SweepCase> = grid
        .cases()
        .par_iter()
        .map(evaluate_case)
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_, _>>()?;
    let summary = summarize(&cases);
    Ok((cases, summary))
}

pub fn summarize(cases: &[SweepCase]) -> SweepSummary {
    let mut s = SweepSummary {
        cases: cases.len(),
        max_abs_err: 0.0,
        mean_abs_err: 0.0,
        worst: None,
        max_sqrt_iterations: 0,
        cycle_histogram: BTreeMap::new(),
        oracle_mismatches: 0,
        first_mismatch: None,
    };
    let mut total = 0.0;
    for c in cases {
        total += c.abs_err;
        if s.worst.is_none() || c.abs_err > s.max_abs_err {
            s.max_abs_err = c.abs_err;
            s.worst = Some(c.ops);
        }
        s.max_sqrt_iterations = s.max_sqrt_iterations.max(c.sqrt_iterations);
        *s.cycle_histogram.entry(c.cycles).or_default() += 1;
        if !c.oracle_match {
            s.oracle_mismatches += 1;
            s.first_mismatch.get_or_insert(c.ops);
        }
    }
    if !cases.is_empty() {
        s.mean_abs_err = total / cases.len() as f64;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_size() {
        // sum over V* of (raw + 1), times 4 accelerations and 3 steps
        let per = [320 + 1, 640 + 1, 1280 + 1, 2304 + 1, 4480 + 1];
        assert_eq!(
            SweepGrid::default().cases().len(),
            per.iter().sum::<usize>() * 12
        );
    }

    #[test]
    fn at_desired_speed_is_exact() {
        let grid = SweepGrid {
            only_at_desired: true,
            ..SweepGrid::default()
        };
        let (cases, summary) = run_sweep(&grid).unwrap();
        assert_eq!(cases.len(), 60);
        assert!(cases.iter().all(|c| c.abs_err == 0.0));
        assert!(summary.passed());
    }

    #[test]
    fn csv_line_format() {
        let ops = GippsOperands::encode(2.0, 0.5, 20.0, 0.0).unwrap();
        let c = evaluate_case(&ops).unwrap();
        assert!(c.oracle_match);
        assert_eq!(
            c.csv_line(),
            "2.000000,0.500000,20.000000,0.000000,0.437500,0.395284708,0.042215292"
        );
    }
}

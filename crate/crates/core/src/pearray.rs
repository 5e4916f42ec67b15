//! Cycle model for an array of accelerator processing elements.
//!
//! Each PE is non-pipelined: it accepts a new instruction only after the
//! previous one retires. Batch elements are assigned round-robin
//! (`element i -> PE i % P`), so a batch costs the busiest PE's cycle total.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gipps::{gipps_step, GippsError, GippsOperands, GippsResult};

pub const DEFAULT_CLOCK_HZ: u64 = 250_000_000;

/// Below this many elements the batch is evaluated on the calling thread.
const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PeArrayError {
    #[error("PE count must be at least 1")]
    NoPes,
    #[error("clock frequency must be positive")]
    ZeroClock,
    #[error("batch element {index}: {source}")]
    InvalidOperands {
        index: usize,
        #[source]
        source: GippsError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeArrayConfig {
    num_pes: usize,
    clock_hz: u64,
    batch_overhead_cycles: u64,
}

impl PeArrayConfig {
    pub fn new(num_pes: usize, clock_hz: u64) -> Result<Self, PeArrayError> {
        if num_pes == 0 {
            return Err(PeArrayError::NoPes);
        }
        if clock_hz == 0 {
            return Err(PeArrayError::ZeroClock);
        }
        Ok(PeArrayConfig {
            num_pes,
            clock_hz,
            batch_overhead_cycles: 0,
        })
    }

    /// Fixed cycles charged once per non-empty batch, for bus-overhead sensitivity studies.
    pub fn with_batch_overhead(mut self, cycles: u64) -> Self {
        self.batch_overhead_cycles = cycles;
        self
    }

    pub fn num_pes(&self) -> usize {
        self.num_pes
    }

    pub fn clock_hz(&self) -> u64 {
        self.clock_hz
    }

    pub fn batch_overhead_cycles(&self) -> u64 {
        self.batch_overhead_cycles
    }

    pub fn cycles_to_ns(&self, cycles: u64) -> f64 {
        cycles as f64 * 1e9 / self.clock_hz as f64
    }
}

impl Default for PeArrayConfig {
    fn default() -> Self {
        PeArrayConfig {
            num_pes: 1,
            clock_hz: DEFAULT_CLOCK_HZ,
            batch_overhead_cycles: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchReport {
    pub ops: u64,
    pub cycles: u64,
    pub modeled_time_ns: f64,
    /// Largest single-instruction latency seen in the batch.
    pub per_op_cycles: u32,
}

impl BatchReport {
    pub const EMPTY: BatchReport = BatchReport {
        ops: 0,
        cycles: 0,
        modeled_time_ns: 0.0,
        per_op_cycles: 0,
    };

    /// Sums two reports taken back to back.
    pub fn accumulate(&mut self, other: &BatchReport) {
        self.ops += other.ops;
        self.cycles += other.cycles;
        self.modeled_time_ns += other.modeled_time_ns;
        self.per_op_cycles = self.per_op_cycles.max(other.per_op_cycles);
    }

    pub const CSV_HEADER: &'static str = "ops,cycles,modeled_time_ns,per_op_cycles";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.3},{}",
            self.ops, self.cycles, self.modeled_time_ns, self.per_op_cycles
        )
    }
}

/// `field:value` lines.
impl fmt::Display for BatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ops:{}", self.ops)?;
        writeln!(f, "cycles:{}", self.cycles)?;
        writeln!(f, "modeled_time_ns:{:.3}", self.modeled_time_ns)?;
        write!(f, "per_op_cycles:{}", self.per_op_cycles)
    }
}

/// Cycle accounting for a batch whose per-instruction latencies are known.
pub fn batch_cycles(op_cycles: impl IntoIterator<Item = u32>, cfg: &PeArrayConfig) -> (u64, u32) {
    let mut per_pe = vec![0u64; cfg.num_pes];
    let mut worst = 0u32;
    let mut any = false;
    for (i, c) in op_cycles.into_iter().enumerate() {
        per_pe[i % cfg.num_pes] += c as u64;
        worst = worst.max(c);
        any = true;
    }
    if !any {
        return (0, 0);
    }
    let busiest = per_pe.into_iter().max().unwrap_or(0);
    (busiest + cfg.batch_overhead_cycles, worst)
}

/// Runs a batch across the PE array.
///
/// Results are positionally aligned with `batch` and identical to calling
/// [`gipps_step`] on each element in turn, however the host schedules the work.
pub fn dispatch_batch(
    batch: &[GippsOperands],
    cfg: &PeArrayConfig,
) -> Result<(Vec<GippsResult>, BatchReport), PeArrayError> {
    let eval = |(index, ops): (usize, &GippsOperands)| {
        gipps_step(ops).map_err(|source| PeArrayError::InvalidOperands { index, source })
    };
    let results: Vec<GippsResult> = if batch.len() >= PARALLEL_THRESHOLD {
        // Rayon's Result collection may surface any failing element; collect
        // everything first so the lowest index is reported.
        let all: Vec<_> = batch.par_iter().enumerate().map(eval).collect();
        all.into_iter().collect::<Result<_, _>>()?
    } else {
        batch
            .iter()
            .enumerate()
            .map(eval)
            .collect::<Result<_, _>>()?
    };

    let (cycles, per_op_cycles) = batch_cycles(results.iter().map(|r| r.cycles), cfg);
    let report = BatchReport {
        ops: batch.len() as u64,
        cycles,
        modeled_time_ns: cfg.cycles_to_ns(cycles),
        per_op_cycles,
    };
    Ok((results, report))
}

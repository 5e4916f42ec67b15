//! Host-vs-accelerator timing comparison.
//!
//! The host side times a plain `f64` evaluation of the update over a fixed
//! operand set, averaged over at least [`MIN_ITERATIONS`] passes. The
//! accelerator side is the cycle model, which is exact.

use std::fmt;
use std::hint::black_box;
use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use gipps_core::gipps::reference_unchecked;
use gipps_core::{dispatch_batch, BatchReport, Fx, GippsOperands, PeArrayConfig};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MIN_ITERATIONS: u32 = 100;
/// Per-iteration times below this many timer ticks are flagged as unreliable.
pub const MIN_TICKS_PER_ITERATION: u32 = 100;

/// Historical software baseline: a C implementation on a Core i3-350M.
pub const HISTORICAL_HOST_NS: f64 = 144.0;
pub const HISTORICAL_RATIO: f64 = 9.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub host_ns_per_op: f64,
    pub host_iterations: u32,
    pub modeled_ns_per_op: f64,
    pub modeled_ratio: f64,
    pub batch: BatchReport,
    pub num_pes: usize,
    pub clock_hz: u64,
    pub host: String,
    pub timer_warning: Option<String>,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "host_ns_per_op,host_iterations,modeled_ns_per_op,modeled_ratio,ops,cycles,modeled_time_ns,per_op_cycles,num_pes,clock_hz,host";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.3},{},{:.3},{:.3},{},{},{},\"{}\"",
            self.host_ns_per_op,
            self.host_iterations,
            self.modeled_ns_per_op,
            self.modeled_ratio,
            self.batch.csv_row(),
            self.num_pes,
            self.clock_hz,
            self.host.replace('"', "'"),
        )
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "host:{}", self.host)?;
        writeln!(f, "host_iterations:{}", self.host_iterations)?;
        writeln!(f, "host_ns_per_op:{:.3}", self.host_ns_per_op)?;
        writeln!(f, "modeled_ns_per_op:{:.3}", self.modeled_ns_per_op)?;
        writeln!(f, "modeled_ratio:{:.3}", self.modeled_ratio)?;
        writeln!(f, "num_pes:{}", self.num_pes)?;
        writeln!(f, "clock_hz:{}", self.clock_hz)?;
        writeln!(f, "{}", self.batch)?;
        write!(
            f,
            "historical_baseline: {HISTORICAL_HOST_NS} ns/op in C on a Core i3-350M, \
             {HISTORICAL_RATIO}x slower than one 16 ns accelerator op (context only)"
        )?;
        if let Some(w) = &self.timer_warning {
            write!(f, "\nwarning:{w}")?;
        }
        Ok(())
    }
}

/// Deterministic in-domain operands: V* in [1, 70], a in [0.5, 5], T in [0.25, 1].
pub fn bench_operands(n: usize, seed: u64) -> Vec<GippsOperands> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |lo: u16, hi: u16| lo + (rng.next_u64() % (hi - lo + 1) as u64) as u16;
    (0..n)
        .map(|_| {
            let vstar = pick(64, 4480);
            let v = pick(0, vstar);
            GippsOperands {
                a: Fx::from_raw_unchecked(pick(32, 320)),
                t: Fx::from_raw_unchecked(pick(16, 64)),
                vstar: Fx::from_raw_unchecked(vstar),
                v: Fx::from_raw_unchecked(v),
            }
        })
        .collect()
}

/// Smallest observable nonzero step of the monotonic clock.
pub fn timer_tick() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..1000 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 == t0 {
            t1 = Instant::now();
        }
        best = best.min(t1 - t0);
    }
    best
}

#[cfg(target_os = "linux")]
fn pin_to_current_cpu() {
    // SAFETY: plain libc calls on a zeroed, stack-owned cpu_set_t for the calling thread.
    unsafe {
        let cpu = libc::sched_getcpu();
        if cpu < 0 {
            return;
        }
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(cpu as usize, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set);
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_to_current_cpu() {}

/// Average host time per op, in ns, over `iterations` passes of `ops`.
/// Also returns the mean time of one pass.
pub fn time_host(ops: &[GippsOperands], iterations: u32) -> (f64, Duration) {
    let reals: Vec<[f64; 4]> = ops
        .iter()
        .map(|o| [o.a.decode(), o.t.decode(), o.vstar.decode(), o.v.decode()])
        .collect();
    pin_to_current_cpu();

    // warm-up pass
    let mut sink = 0.0;
    for &[a, t, vs, v] in &reals {
        sink += reference_unchecked(a, t, vs, v);
    }
    black_box(sink);

    let start = Instant::now();
    for _ in 0..iterations {
        let mut acc = 0.0;
        for r in &reals {
            let [a, t, vs, v] = *black_box(r);
            acc += reference_unchecked(a, t, vs, v);
        }
        black_box(acc);
    }
    let elapsed = start.elapsed();
    let per_op = elapsed.as_secs_f64() * 1e9 / (iterations as f64 * reals.len() as f64);
    (per_op, elapsed / iterations)
}

pub fn host_description() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, m)| m.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".to_string());
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    format!(
        "{cpu}; {}-{}; {}; {profile} build",
        std::env::consts::ARCH,
        std::env::consts::OS,
        env!("GIPPS_RUSTC_VERSION"),
    )
}

pub fn run_bench(n_ops: usize, iterations: u32, pe_cfg: &PeArrayConfig) -> Result<BenchReport> {
    if n_ops == 0 {
        bail!("n_ops must be at least 1");
    }
    if iterations < MIN_ITERATIONS {
        bail!("iterations must be at least {MIN_ITERATIONS}, got {iterations}");
    }
    let ops = bench_operands(n_ops, 0x5eed);
    let (host_ns_per_op, per_iteration) = time_host(&ops, iterations);

    let tick = timer_tick();
    let timer_warning = (per_iteration < tick * MIN_TICKS_PER_ITERATION).then(|| {
        format!(
            "one iteration took {per_iteration:?}, under {MIN_TICKS_PER_ITERATION} timer ticks of {tick:?}; increase --n-ops"
        )
    });

    let (_, batch) = dispatch_batch(&ops, pe_cfg)?;
    let modeled_ns_per_op = pe_cfg.cycles_to_ns(batch.per_op_cycles as u64);
    Ok(BenchReport {
        host_ns_per_op,
        host_iterations: iterations,
        modeled_ns_per_op,
        modeled_ratio: host_ns_per_op / modeled_ns_per_op,
        batch,
        num_pes: pe_cfg.num_pes(),
        clock_hz: pe_cfg.clock_hz(),
        host: host_description(),
        timer_warning,
    })
}

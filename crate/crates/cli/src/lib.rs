//! Subcommand implementations for the `gipps` binary.
//!
//! Every command writes its human-readable output to a caller-supplied
//! writer so the same code paths are exercised by the integration tests.

pub mod bench;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use gipps_core::{
    gipps_step, run_sim, run_sweep, BatchReport, Fx, GippsOperands, PeArrayConfig, SimConfig,
    SweepGrid, SweepSummary, TraceRow,
};

pub use bench::{run_bench, BenchReport};

/// Quantizes a decimal flag through the Q8.6 encoder.
pub fn parse_fx(name: &str, x: f64) -> Result<Fx> {
    Fx::encode(x).with_context(|| format!("--{name} {x}"))
}

pub fn cmd_step(a: f64, t: f64, vstar: f64, v: f64, out: &mut dyn Write) -> Result<()> {
    let ops = GippsOperands {
        a: parse_fx("a", a)?,
        t: parse_fx("t", t)?,
        vstar: parse_fx("vstar", vstar)?,
        v: parse_fx("v", v)?,
    };
    let res = gipps_step(&ops)?;
    writeln!(
        out,
        "operands a={} T={} vstar={} v={}",
        ops.a, ops.t, ops.vstar, ops.v
    )?;
    writeln!(out, "{res}")?;
    writeln!(out, "va = {}", res.va)?;
    Ok(())
}

pub fn cmd_sqrt(s: f64, out: &mut dyn Write) -> Result<()> {
    let s = parse_fx("s", s)?;
    let (root, trace) = s.sqrt();
    writeln!(out, "radicand {} {}", s.raw(), s)?;
    writeln!(out, "shifted {}", trace.shifted)?;
    writeln!(out, "seed {}", trace.seed)?;
    for (i, x) in trace.iterates.iter().enumerate() {
        writeln!(out, "x{} {}", i + 1, x)?;
    }
    writeln!(out, "iterations {}", trace.iterations)?;
    writeln!(out, "result {} {}", root.raw(), root)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_summary(s: &SweepSummary, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "cases:{}", s.cases)?;
    writeln!(out, "oracle_mismatches:{}", s.oracle_mismatches)?;
    writeln!(out, "max_abs_err:{:.9}", s.max_abs_err)?;
    writeln!(out, "mean_abs_err:{:.9}", s.mean_abs_err)?;
    if let Some(w) = s.worst {
        writeln!(
            out,
            "worst_case:a={} T={} vstar={} v={}",
            w.a, w.t, w.vstar, w.v
        )?;
    }
    writeln!(out, "max_sqrt_iterations:{}", s.max_sqrt_iterations)?;
    for (cycles, n) in &s.cycle_histogram {
        writeln!(out, "cycles[{cycles}]:{n}")?;
    }
    Ok(())
}

/// Runs the grid, writes the per-case CSV when `csv_path` is given, and fails
/// unless every case matches the oracle and takes the nominal cycle count.
pub fn cmd_sweep(
    grid: &SweepGrid,
    csv_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<SweepSummary> {
    // Open the output first so an unwritable path fails before the work.
    let mut csv = csv_path.map(create).transpose()?;
    let (cases, summary) = run_sweep(grid)?;
    if let Some(w) = csv.as_mut() {
        writeln!(w, "{}", gipps_core::SweepCase::CSV_HEADER)?;
        for c in &cases {
            writeln!(w, "{}", c.csv_line())?;
        }
        w.flush()?;
    }
    write_summary(&summary, out)?;

    if let Some(m) = summary.first_mismatch {
        bail!(
            "oracle mismatch at a={} T={} vstar={} v={}",
            m.a,
            m.t,
            m.vstar,
            m.v
        );
    }
    if let Some(c) = cases
        .iter()
        .find(|c| c.cycles != gipps_core::gipps::NOMINAL_CYCLES)
    {
        bail!(
            "{} cycles at a={} T={} vstar={} v={}",
            c.cycles,
            c.ops.a,
            c.ops.t,
            c.ops.vstar,
            c.ops.v
        );
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    #[default]
    Csv,
    /// One JSON object per line.
    Jsonl,
}

pub fn write_trace(rows: &[TraceRow], format: TraceFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        TraceFormat::Csv => {
            writeln!(out, "{}", TraceRow::CSV_HEADER)?;
            for r in rows {
                writeln!(out, "{}", r.csv_line())?;
            }
        }
        TraceFormat::Jsonl => {
            for r in rows {
                serde_json::to_writer(&mut *out, r)?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

/// Loads the config file (if any) and applies `key=value` overrides on top.
pub fn load_sim_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<SimConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config {}", p.display()))?;
            SimConfig::parse(&text)?
        }
        None => SimConfig::default(),
    };
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the workload; the trace goes to `trace_path` or, if absent, to `trace_out`.
pub fn cmd_sim(
    cfg: &SimConfig,
    pe_cfg: &PeArrayConfig,
    format: TraceFormat,
    trace_path: Option<&Path>,
    trace_out: &mut dyn Write,
    report_out: &mut dyn Write,
) -> Result<BatchReport> {
    let mut file = trace_path.map(create).transpose()?;
    let (rows, report) = run_sim(cfg, pe_cfg)?;
    match file.as_mut() {
        Some(f) => {
            write_trace(&rows, format, f)?;
            f.flush()?;
        }
        None => write_trace(&rows, format, trace_out)?,
    }
    writeln!(report_out, "vehicles:{}", cfg.n_vehicles)?;
    writeln!(report_out, "steps:{}", cfg.n_steps)?;
    writeln!(report_out, "trace_rows:{}", rows.len())?;
    writeln!(report_out, "{report}")?;
    Ok(report)
}

pub fn cmd_bench(
    n_ops: usize,
    iterations: u32,
    pe_cfg: &PeArrayConfig,
    csv_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<BenchReport> {
    let report = run_bench(n_ops, iterations, pe_cfg)?;
    writeln!(out, "{report}")?;
    if let Some(p) = csv_path {
        let mut w = create(p)?;
        writeln!(w, "{}", BenchReport::CSV_HEADER)?;
        writeln!(w, "{}", report.csv_row())?;
        w.flush()?;
    }
    Ok(report)
}

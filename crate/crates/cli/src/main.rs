use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gipps_cli::{cmd_bench, cmd_sim, cmd_sqrt, cmd_step, cmd_sweep, load_sim_config, TraceFormat};
use gipps_core::{PeArrayConfig, SweepGrid, DEFAULT_CLOCK_HZ};

#[derive(Parser, Debug)]
#[command(name = "gipps", version, about = "Fixed-point Gipps accelerator model")]
struct Cli {
    /// Accelerator clock frequency.
    #[arg(long, global = true, default_value_t = DEFAULT_CLOCK_HZ)]
    clock_hz: u64,
    /// Number of processing elements.
    #[arg(long, global = true, default_value_t = 1)]
    pes: usize,
    /// Output file (CSV for sweep/bench, trace for sim).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Simulation config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one instruction and print every pipeline stage.
    Step {
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        vstar: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        v: f64,
    },
    /// Show the Babylonian iterates for one square root.
    Sqrt {
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
    },
    /// Check the datapath against both references over a grid.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0, 20.0, 36.0, 70.0])]
        vstar: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 5.0])]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0])]
        t: Vec<f64>,
        /// Only evaluate v = vstar.
        #[arg(long)]
        only_at_desired: bool,
    },
    /// Run the single-lane traffic workload.
    Sim {
        #[arg(long)]
        vehicles: Option<u32>,
        #[arg(long)]
        steps: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        step_t: Option<f64>,
        /// Extra `key=value` overrides, applied last.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Compare host floating-point time with the modeled accelerator.
    Bench {
        #[arg(long, default_value_t = 1000)]
        n_ops: usize,
        #[arg(long, default_value_t = 100)]
        iterations: u32,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Jsonl,
}

fn run(cli: Cli) -> Result<()> {
    let pe_cfg = PeArrayConfig::new(cli.pes, cli.clock_hz)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Step { a, t, vstar, v } => cmd_step(a, t, vstar, v, &mut out)?,
        Command::Sqrt { s } => cmd_sqrt(s, &mut out)?,
        Command::Sweep {
            vstar,
            a,
            t,
            only_at_desired,
        } => {
            let grid = SweepGrid {
                only_at_desired,
                ..SweepGrid::from_reals(&vstar, &a, &t)?
            };
            cmd_sweep(&grid, cli.out.as_deref(), &mut out)?;
        }
        Command::Sim {
            vehicles,
            steps,
            seed,
            step_t,
            set,
            format,
        } => {
            let mut overrides: Vec<(String, String)> = [
                ("n_vehicles", vehicles.map(|x| x.to_string())),
                ("n_steps", steps.map(|x| x.to_string())),
                ("seed", seed.map(|x| x.to_string())),
                ("step_t", step_t.map(|x| x.to_string())),
            ]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
            for kv in set {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
                overrides.push((k.trim().to_string(), v.trim().to_string()));
            }
            let cfg = load_sim_config(cli.config.as_deref(), &overrides)?;
            let format = match format {
                Format::Csv => TraceFormat::Csv,
                Format::Jsonl => TraceFormat::Jsonl,
            };
            // With no --out the trace owns stdout and the report goes to stderr.
            if cli.out.is_some() {
                cmd_sim(
                    &cfg,
                    &pe_cfg,
                    format,
                    cli.out.as_deref(),
                    &mut io::sink(),
                    &mut out,
                )?;
            } else {
                cmd_sim(&cfg, &pe_cfg, format, None, &mut out, &mut io::stderr())?;
            }
        }
        Command::Bench { n_ops, iterations } => {
            let report = cmd_bench(n_ops, iterations, &pe_cfg, cli.out.as_deref(), &mut out)?;
            if let Some(w) = &report.timer_warning {
                eprintln!("warning: {w}");
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

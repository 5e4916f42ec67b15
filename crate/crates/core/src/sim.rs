//! Single-lane free-flow traffic workload driven through the PE array.
//!
//! Vehicles do not interact: each one accelerates toward its own desired
//! speed under the accelerated update, with its velocity clamped to the
//! desired speed after every step. Gaps are recorded for the trace only and
//! may go negative when a faster follower passes through its leader.
//!
//! # Fleet generation
//!
//! Desired speeds and accelerations are drawn from a ChaCha8 stream seeded
//! with `SeedableRng::seed_from_u64(seed)`. Each draw takes one `u64`, keeps
//! its top 53 bits and scales by 2^-53 to get `u` in `[0, 1)`; the value is
//! `min + u * (max - min)`, then quantized with [`Fx::encode`]. Vehicles are
//! generated in id order, desired speed first, then acceleration.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::fxp::{Fx, FxError};
use crate::gipps::GippsOperands;
use crate::pearray::{dispatch_batch, BatchReport, PeArrayConfig, PeArrayError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Fx(#[from] FxError),
    #[error(transparent)]
    Dispatch(#[from] PeArrayError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub id: u32,
    pub position: f64,
    pub velocity: Fx,
    pub desired_speed: Fx,
    pub max_accel: Fx,
}

/// Inclusive range of decoded real values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    fn check(&self, name: &str) -> Result<(), SimError> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(SimError::Config(format!("{name} range is empty")));
        }
        if self.min > self.max {
            return Err(SimError::Config(format!(
                "{name} range is inverted ({} > {})",
                self.min, self.max
            )));
        }
        Fx::encode(self.min)?;
        Fx::encode(self.max)?;
        Ok(())
    }

    fn sample(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Simulation step, which is also the reaction time.
    pub step_t: Fx,
    pub n_steps: u32,
    pub n_vehicles: u32,
    pub initial_spacing_m: f64,
    pub seed: u64,
    pub desired_speed: Range,
    pub max_accel: Range,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step_t: Fx::from_raw_unchecked(32),
            n_steps: 60,
            n_vehicles: 100,
            initial_spacing_m: 10.0,
            seed: 42,
            desired_speed: Range::new(15.0, 35.0),
            max_accel: Range::new(1.0, 3.0),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.step_t.raw() == 0 {
            return Err(SimError::Config("step_t must be positive".into()));
        }
        if self.n_steps == 0 {
            return Err(SimError::Config("n_steps must be positive".into()));
        }
        if self.n_vehicles == 0 {
            return Err(SimError::Config("n_vehicles must be positive".into()));
        }
        if !(self.initial_spacing_m > 0.0 && self.initial_spacing_m.is_finite()) {
            return Err(SimError::Config(
                "initial_spacing_m must be positive".into(),
            ));
        }
        self.desired_speed.check("desired speed")?;
        self.max_accel.check("acceleration")?;
        if Fx::encode(self.desired_speed.min)?.raw() == 0 {
            return Err(SimError::Config("desired speed must be positive".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SimError> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, SimError> {
            value
                .parse()
                .map_err(|_| SimError::Config(format!("invalid value for {key}: {value:?}")))
        }
        match key {
            "step_t" => self.step_t = Fx::encode(num(key, value)?)?,
            "n_steps" => self.n_steps = num(key, value)?,
            "n_vehicles" => self.n_vehicles = num(key, value)?,
            "initial_spacing_m" => self.initial_spacing_m = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "min_desired_speed" => self.desired_speed.min = num(key, value)?,
            "max_desired_speed" => self.desired_speed.max = num(key, value)?,
            "min_accel" => self.max_accel.min = num(key, value)?,
            "max_accel" => self.max_accel.max = num(key, value)?,
            _ => return Err(SimError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<SimConfig, SimError> {
        let mut cfg = SimConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SimError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }
}

/// One vehicle's state after a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: u32,
    pub vehicle_id: u32,
    pub velocity: f64,
    pub position_m: f64,
    /// Signed distance to the vehicle with the next-lower id; `None` for the leader.
    pub gap_to_leader_m: Option<f64>,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "step,vehicle_id,velocity,position_m,gap_to_leader_m";

    pub fn csv_line(&self) -> String {
        let gap = self
            .gap_to_leader_m
            .map(|g| format!("{g:.6}"))
            .unwrap_or_default();
        format!(
            "{},{},{:.6},{:.6},{}",
            self.step, self.vehicle_id, self.velocity, self.position_m, gap
        )
    }
}

fn unit_draw(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn init_fleet(cfg: &SimConfig) -> Result<Vec<Vehicle>, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_vehicles;
    (0..n)
        .map(|id| {
            let desired_speed = Fx::encode(cfg.desired_speed.sample(unit_draw(&mut rng)))?;
            let max_accel = Fx::encode(cfg.max_accel.sample(unit_draw(&mut rng)))?;
            Ok(Vehicle {
                id,
                position: (n - 1 - id) as f64 * cfg.initial_spacing_m,
                velocity: Fx::ZERO,
                desired_speed,
                max_accel,
            })
        })
        .collect()
}

/// Advances every vehicle by one step.
pub fn step_sim(
    vehicles: &[Vehicle],
    cfg: &SimConfig,
    pe_cfg: &PeArrayConfig,
) -> Result<(Vec<Vehicle>, BatchReport), SimError> {
    let batch: Vec<GippsOperands> = vehicles
        .iter()
        .map(|veh| GippsOperands {
            a: veh.max_accel,
            t: cfg.step_t,
            vstar: veh.desired_speed,
            v: veh.velocity,
        })
        .collect();
    let (results, report) = dispatch_batch(&batch, pe_cfg)?;
    let dt = cfg.step_t.decode();
    let next = vehicles
        .iter()
        .zip(&results)
        .map(|(veh, res)| {
            let velocity = res.va.min(veh.desired_speed);
            Vehicle {
                velocity,
                position: veh.position + velocity.decode() * dt,
                ..*veh
            }
        })
        .collect();
    Ok((next, report))
}

fn trace_rows(step: u32, vehicles: &[Vehicle], out: &mut Vec<TraceRow>) {
    out.extend(vehicles.iter().enumerate().map(|(i, veh)| {
        TraceRow {
            step,
            vehicle_id: veh.id,
            velocity: veh.velocity.decode(),
            position_m: veh.position,
            gap_to_leader_m: i
                .checked_sub(1)
                .map(|lead| vehicles[lead].position - veh.position),
        }
    }));
}

/// Initializes the fleet and runs `n_steps` steps, tracing every vehicle after each one.
pub fn run_sim(
    cfg: &SimConfig,
    pe_cfg: &PeArrayConfig,
) -> Result<(Vec<TraceRow>, BatchReport), SimError> {
    let mut fleet = init_fleet(cfg)?;
    let mut rows = Vec::with_capacity(cfg.n_steps as usize * fleet.len());
    let mut total = BatchReport::EMPTY;
    for step in 1..=cfg.n_steps {
        let (next, report) = step_sim(&fleet, cfg, pe_cfg)?;
        total.accumulate(&report);
        fleet = next;
        trace_rows(step, &fleet, &mut rows);
    }
    Ok((rows, total))
}

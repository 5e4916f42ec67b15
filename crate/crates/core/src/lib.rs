//! Bit-accurate software model of a fixed-point accelerator for the Gipps
//! car-following update.
//!
//! - [`fxp`]: Q8.6 arithmetic and the seeded Babylonian square root.
//! - [`gipps`]: the four-operand instruction and the ideal real-valued update.
//! - [`oracle`]: an independent integer re-derivation of the instruction.
//! - [`pearray`]: batch dispatch and cycle accounting across P processing elements.
//! - [`sim`]: a single-lane free-flow traffic workload.
//! - [`sweep`]: grid verification against both references.

pub mod fxp;
pub mod gipps;
pub mod oracle;
pub mod pearray;
pub mod sim;
pub mod sweep;

pub use fxp::{Fx, FxError, FxWide, SqrtTrace};
pub use gipps::{gipps_reference, gipps_step, GippsError, GippsOperands, GippsResult, GippsTrace};
pub use oracle::{pipeline_oracle, OracleResult};
pub use pearray::{dispatch_batch, BatchReport, PeArrayConfig, PeArrayError, DEFAULT_CLOCK_HZ};
pub use sim::{init_fleet, run_sim, step_sim, SimConfig, SimError, TraceRow, Vehicle};
pub use sweep::{run_sweep, SweepCase, SweepGrid, SweepSummary};

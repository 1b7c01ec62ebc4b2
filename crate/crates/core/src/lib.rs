//! Slot-synchronous simulator of single-hop multi-channel radio networks
//! under budgeted oblivious jamming.
//!
//! The crate is organised bottom-up:
//!
//! * [`radio`]: channel outcomes and energy accounting for one slot
//! * [`rng`]: seeded per-node random streams
//! * [`protocols`]: the five broadcast protocols as node state machines
//! * [`adversary`]: jamming schedules compiled before a trial starts
//! * [`engine`]: the trial loop
//! * [`metrics`]: summaries, traces, safety checks, epoch classes, fits
//! * [`harness`]: configuration, trials, sweeps and output files

pub mod adversary;
pub mod engine;
pub mod harness;
pub mod metrics;
pub mod protocols;
pub mod radio;
pub mod rng;

pub use adversary::{make_schedule, JamSchedule, StrategySpec};
pub use engine::{simulate, Termination, TrialRun};
pub use harness::{run_trial, sweep, ExperimentConfig};
pub use metrics::TrialSummary;
pub use protocols::{Alpha, NodeStatus, ProtocolKind, ProtocolParams};

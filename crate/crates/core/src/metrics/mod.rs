//! Trial summaries, traces, safety checks, epoch classes and scaling fits.

mod epoch;
mod safety;
mod scaling;
mod trace;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{Termination, TrialRun};
use crate::protocols::{HelperRecord, NodeStatus, ProtocolKind, ProtocolParams};

pub use epoch::{classify_epoch, Blocking, EpochClass, StepJam, STEP1, STEP2};
pub use safety::{verify_safety, SafetyContext, SafetyMonitor, Violation, ViolationKind};
pub use scaling::{
    competitiveness_report, fit_scaling, quantile, BudgetRow, CompetitivenessReport, ScalingFit, Spread,
};
pub use trace::{read_trace, read_trace_file, TraceRow, TraceWriter, TRACE_HEADER};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("trace is truncated: {0}")]
    Truncated(String),
    #[error("bad trace row at slot {slot}, node {node}: {msg}")]
    BadRow { slot: u64, node: usize, msg: String },
    #[error("unexpected trace header {0:?}")]
    BadHeader(String),
    #[error("{0} is not an epoch/phase protocol")]
    NotAdaptive(ProtocolKind),
    #[error("epoch {epoch} has no phase {phase}")]
    NoReferencePhase { epoch: u32, phase: u32 },
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive point ({0}, {1})")]
    NonPositive(f64, f64),
    #[error("all x values are equal")]
    Degenerate,
    #[error("no summaries")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}

pub const SUMMARY_HEADER: &str =
    "trial_id,protocol,n,C,T,seed,max_node_cost,adversary_spend,termination_slot,all_informed,all_halted,violations";

/// Everything measured in one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial_id: u64,
    pub protocol: ProtocolKind,
    pub n: u32,
    pub channels: Option<u32>,
    /// Configured budget T.
    pub budget: u64,
    /// Trial seed the node streams were derived from.
    pub seed: u64,
    pub costs: Vec<u64>,
    pub max_node_cost: u64,
    /// Realized spend T(pi) over the executed slots.
    pub adversary_spend: u64,
    pub first_informed: Vec<Option<u64>>,
    pub halted_at: Vec<Option<u64>>,
    pub helpers: Vec<Option<HelperRecord>>,
    pub all_informed: bool,
    pub all_halted: bool,
    pub violations: Vec<Violation>,
    pub termination: Termination,
}

impl TrialSummary {
    pub fn new(
        trial_id: u64,
        params: &ProtocolParams,
        seed: u64,
        run: TrialRun,
        violations: Vec<Violation>,
    ) -> Self {
        TrialSummary {
            trial_id,
            protocol: params.kind,
            n: params.n,
            channels: params.channels,
            budget: params.budget,
            seed,
            max_node_cost: run.ledger.max_node_cost(),
            adversary_spend: run.ledger.adversary,
            all_informed: run.first_informed.iter().all(Option::is_some),
            all_halted: run.final_status.iter().all(|&s| s == NodeStatus::Halted),
            costs: run.ledger.node,
            first_informed: run.first_informed,
            halted_at: run.halted_at,
            helpers: run.helpers,
            violations,
            termination: run.termination,
        }
    }

    pub fn record(&self) -> SummaryRecord {
        SummaryRecord {
            trial_id: self.trial_id,
            protocol: self.protocol.name(),
            n: self.n,
            c: self.channels,
            t: self.budget,
            seed: self.seed,
            max_node_cost: self.max_node_cost,
            adversary_spend: self.adversary_spend,
            termination_slot: match self.termination {
                Termination::Complete(s) => SlotOrCap::Slot(s),
                Termination::Cap(_) => SlotOrCap::Cap("cap"),
            },
            all_informed: self.all_informed,
            all_halted: self.all_halted,
            violations: self
                .violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        }
    }
}

impl serde::Serialize for Termination {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Termination::Complete(t) => s.serialize_u64(*t),
            Termination::Cap(_) => s.serialize_str("cap"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SlotOrCap {
    Slot(u64),
    Cap(&'static str),
}

/// One row of the summary file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRecord {
    pub trial_id: u64,
    pub protocol: &'static str,
    pub n: u32,
    #[serde(rename = "C")]
    pub c: Option<u32>,
    #[serde(rename = "T")]
    pub t: u64,
    pub seed: u64,
    pub max_node_cost: u64,
    pub adversary_spend: u64,
    pub termination_slot: SlotOrCap,
    pub all_informed: bool,
    pub all_halted: bool,
    pub violations: String,
}

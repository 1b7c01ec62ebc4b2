//! Per-node protocol state machines.
//!
//! Nodes are driven by events instead of slots: a node reports the next slot
//! in which it does something (or the next boundary where it runs its
//! end-of-iteration checks), and the engine skips everything in between.
//! Within an iteration or step a node's action probability is constant and
//! its state only changes on what it hears, so sampling the gap to the next
//! non-idle slot geometrically is the same distribution as flipping a coin
//! every slot.

mod adv;
mod epidemic;

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::{ChannelOutcome, NodeId, SlotAction};
use crate::rng::Stream;

pub use adv::{
    adv_params, adv_phase_end, advc_phases, AdvLayout, AdvNode, PhaseCheck, PhaseSpan, StepCounters,
};
pub use epidemic::{
    epidemic_action, mc_params, mc_should_halt, mcc_iteration_len, mcc_should_halt, per_slot_action, round_map,
    EpidemicNode, FIRST_ITERATION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("n must be a power of two >= 2, got {0}")]
    BadNodeCount(u32),
    #[error("iteration index must be >= 6, got {0}")]
    IterationTooSmall(u32),
    #[error("alpha must lie strictly between 0 and 1/4, got {0}")]
    AlphaOutOfRange(Alpha),
    #[error("phase {phase} is not in epoch {epoch}")]
    PhaseOutOfRange { epoch: u32, phase: u32 },
    #[error("{kind} needs a channel count C")]
    MissingChannels { kind: ProtocolKind },
    #[error("C = {c} exceeds n/2 = {half}")]
    TooManyChannels { c: u32, half: u32 },
    #[error("C must be a power of two, got {0}")]
    ChannelsNotPowerOfTwo(u32),
    #[error("{name} must be positive and finite, got {value}")]
    BadConstant { name: &'static str, value: f64 },
    #[error("simulated channel {ch} outside [1, {max}]")]
    ChannelOutOfRange { ch: u32, max: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "multicastcore")]
    MultiCastCore,
    #[serde(rename = "multicast")]
    MultiCast,
    #[serde(rename = "multicastadv")]
    MultiCastAdv,
    #[serde(rename = "multicast-c")]
    MultiCastC,
    #[serde(rename = "multicastadv-c")]
    MultiCastAdvC,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::MultiCastCore,
        ProtocolKind::MultiCast,
        ProtocolKind::MultiCastAdv,
        ProtocolKind::MultiCastC,
        ProtocolKind::MultiCastAdvC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::MultiCastCore => "multicastcore",
            ProtocolKind::MultiCast => "multicast",
            ProtocolKind::MultiCastAdv => "multicastadv",
            ProtocolKind::MultiCastC => "multicast-c",
            ProtocolKind::MultiCastAdvC => "multicastadv-c",
        }
    }

    /// Epoch/phase protocols with helper status.
    pub fn is_adv(self) -> bool {
        matches!(self, ProtocolKind::MultiCastAdv | ProtocolKind::MultiCastAdvC)
    }

    pub fn uses_channel_limit(self) -> bool {
        matches!(self, ProtocolKind::MultiCastC | ProtocolKind::MultiCastAdvC)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown protocol {s:?}"))
    }
}

/// Exact rational exponent used by the adaptive protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alpha(pub Ratio<u64>);

impl Alpha {
    pub fn new(num: u64, den: u64) -> Self {
        Alpha(Ratio::new(num, den))
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn is_valid(self) -> bool {
        *self.0.numer() > 0 && self.0 < Ratio::new(1, 4)
    }

    /// `steps * alpha >= 2`, exactly.
    pub fn spans_two(self, steps: u32) -> bool {
        steps as u128 * *self.0.numer() as u128 >= 2 * *self.0.denom() as u128
    }
}

impl Default for Alpha {
    fn default() -> Self {
        Alpha::new(1, 8)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Alpha {
    type Err = String;

    /// Accepts `p/q` or a plain decimal such as `0.125`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("bad alpha {s:?}");
        if let Some((p, q)) = s.split_once('/') {
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            let q: u64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            return Ok(Alpha::new(p, q));
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || (int.is_empty() && frac.is_empty()) {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let num: u64 = digits.parse().map_err(|_| bad())?;
        Ok(Alpha::new(num, 10u64.pow(frac.len() as u32)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeStatus {
    #[serde(rename = "un")]
    Uninformed,
    #[serde(rename = "in")]
    Informed,
    #[serde(rename = "helper")]
    Helper,
    #[serde(rename = "halt")]
    Halted,
}

impl NodeStatus {
    pub fn name(self) -> &'static str {
        match self {
            NodeStatus::Uninformed => "un",
            NodeStatus::Informed => "in",
            NodeStatus::Helper => "helper",
            NodeStatus::Halted => "halt",
        }
    }

    pub fn knows_message(self) -> bool {
        self != NodeStatus::Uninformed
    }
}

impl fmt::Display for NodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "un" => Ok(NodeStatus::Uninformed),
            "in" => Ok(NodeStatus::Informed),
            "helper" => Ok(NodeStatus::Helper),
            "halt" => Ok(NodeStatus::Halted),
            _ => Err(format!("unknown status {s:?}")),
        }
    }
}

/// Epoch and phase at which a node became a helper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HelperRecord {
    pub epoch: u32,
    pub phase: u32,
}

/// Where a node is in its protocol, as written in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseLabel {
    Iteration(u32),
    Step { epoch: u32, phase: u32, step: u8 },
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PhaseLabel::Iteration(i) => write!(f, "i{i}"),
            PhaseLabel::Step { epoch, phase, step } => write!(f, "e{epoch}.p{phase}.s{step}"),
        }
    }
}

impl FromStr for PhaseLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad phase label {s:?}");
        if let Some(i) = s.strip_prefix('i') {
            return i.parse().map(PhaseLabel::Iteration).map_err(|_| bad());
        }
        let mut parts = s.split('.');
        let mut field = |prefix: char| -> Result<u32, String> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(prefix))
                .and_then(|v| v.parse().ok())
                .ok_or_else(bad)
        };
        let epoch = field('e')?;
        let phase = field('p')?;
        let step = field('s')?;
        if parts.next().is_some() || !(1..=2).contains(&step) {
            return Err(bad());
        }
        Ok(PhaseLabel::Step { epoch, phase, step: step as u8 })
    }
}

/// Validated protocol parameters shared by every node of a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    pub kind: ProtocolKind,
    pub n: u32,
    /// Channel limit C, for the limited-channel variants.
    pub channels: Option<u32>,
    pub alpha: Alpha,
    pub a: f64,
    pub b: f64,
    /// Adversary budget T. Only MultiCastCore reads it.
    pub budget: u64,
}

impl ProtocolParams {
    pub fn new(kind: ProtocolKind, n: u32) -> Self {
        ProtocolParams {
            kind,
            n,
            channels: None,
            alpha: Alpha::default(),
            a: 4.0,
            b: 4.0,
            budget: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(ParamError::BadNodeCount(self.n));
        }
        for (name, value) in [("a", self.a), ("b", self.b)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::BadConstant { name, value });
            }
        }
        match self.kind {
            ProtocolKind::MultiCastC => {
                let c = self.channels.ok_or(ParamError::MissingChannels { kind: self.kind })?;
                if c == 0 || c > self.n / 2 {
                    return Err(ParamError::TooManyChannels { c, half: self.n / 2 });
                }
            }
            ProtocolKind::MultiCastAdvC => {
                let c = self.channels.ok_or(ParamError::MissingChannels { kind: self.kind })?;
                if !c.is_power_of_two() {
                    return Err(ParamError::ChannelsNotPowerOfTwo(c));
                }
            }
            _ => {}
        }
        if self.kind.is_adv() && !self.alpha.is_valid() {
            return Err(ParamError::AlphaOutOfRange(self.alpha));
        }
        Ok(())
    }

    pub fn lg_n(&self) -> u32 {
        self.n.trailing_zeros()
    }

    /// Physical channel count the protocol actually uses, after rounding.
    pub fn effective_channels(&self) -> Option<u32> {
        match self.kind {
            ProtocolKind::MultiCastC => self.channels.map(|c| 1 << (31 - c.leading_zeros())),
            ProtocolKind::MultiCastAdvC => self.channels,
            _ => None,
        }
    }

    /// Largest channel index any node may ever use; `None` when unbounded.
    pub fn channel_universe(&self) -> Option<u32> {
        match self.kind {
            ProtocolKind::MultiCastCore | ProtocolKind::MultiCast => Some(self.n / 2),
            ProtocolKind::MultiCastC | ProtocolKind::MultiCastAdvC => self.effective_channels(),
            ProtocolKind::MultiCastAdv => None,
        }
    }

    /// Highest phase index an AdvC epoch may contain.
    pub fn phase_cap(&self) -> Option<u32> {
        match self.kind {
            ProtocolKind::MultiCastAdvC => self.channels.map(|c| c.trailing_zeros()),
            _ => None,
        }
    }

    /// Phase in which helpers are expected to emerge.
    pub fn reference_phase(&self) -> Option<u32> {
        let unlimited = self.lg_n().saturating_sub(1);
        match self.kind {
            ProtocolKind::MultiCastAdv => Some(unlimited),
            ProtocolKind::MultiCastAdvC => {
                let c = self.channels?;
                Some(if c <= self.n / 2 { c.trailing_zeros() } else { unlimited })
            }
            _ => None,
        }
    }

    /// Channel count at the reference phase, or the full range for the
    /// epidemic protocols.
    pub fn reference_channels(&self) -> u32 {
        match self.reference_phase() {
            Some(j) => 1 << j,
            None => self.channel_universe().unwrap_or(self.n / 2),
        }
    }

    pub fn layout(&self) -> Option<AdvLayout> {
        self.kind
            .is_adv()
            .then(|| AdvLayout::new(self.alpha, self.b, self.phase_cap()))
    }

    /// Fresh state for `node`; node 0 is the source.
    pub fn spawn(&self, node: NodeId) -> ProtocolNode {
        let status = if node == 0 {
            NodeStatus::Informed
        } else {
            NodeStatus::Uninformed
        };
        match self.kind {
            ProtocolKind::MultiCastCore => {
                ProtocolNode::Epidemic(EpidemicNode::core(self.n, self.a, self.budget, status))
            }
            ProtocolKind::MultiCast => {
                ProtocolNode::Epidemic(EpidemicNode::growing(self.n, self.a, status, None))
            }
            ProtocolKind::MultiCastC => ProtocolNode::Epidemic(EpidemicNode::growing(
                self.n,
                self.a,
                status,
                self.effective_channels(),
            )),
            ProtocolKind::MultiCastAdv | ProtocolKind::MultiCastAdvC => ProtocolNode::Adv(Box::new(
                AdvNode::new(self.alpha, self.b, self.phase_cap(), status),
            )),
        }
    }
}

/// The next thing a node does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeEvent {
    Act(u64, SlotAction),
    /// End of the current iteration or step, handled before any action in
    /// that slot.
    Boundary(u64),
}

#[derive(Debug, Clone)]
pub enum ProtocolNode {
    Epidemic(EpidemicNode),
    Adv(Box<AdvNode>),
}

impl ProtocolNode {
    /// Next event at or after `from`. Must not be called on a halted node.
    pub fn next_event(&mut self, from: u64, rng: &mut Stream) -> NodeEvent {
        match self {
            ProtocolNode::Epidemic(n) => n.next_event(from, rng),
            ProtocolNode::Adv(n) => n.next_event(from, rng),
        }
    }

    /// Runs the boundary checks due at `slot`, pushing each status entered.
    pub fn boundary(&mut self, slot: u64, entered: &mut Vec<NodeStatus>) {
        match self {
            ProtocolNode::Epidemic(n) => n.boundary(slot, entered),
            ProtocolNode::Adv(n) => n.boundary(slot, entered),
        }
    }

    /// Feeds back what the node heard; returns the new status if it changed.
    pub fn observe(&mut self, outcome: ChannelOutcome) -> Option<NodeStatus> {
        match self {
            ProtocolNode::Epidemic(n) => n.observe(outcome),
            ProtocolNode::Adv(n) => n.observe(outcome),
        }
    }

    pub fn status(&self) -> NodeStatus {
        match self {
            ProtocolNode::Epidemic(n) => n.status(),
            ProtocolNode::Adv(n) => n.status(),
        }
    }

    pub fn label(&self) -> PhaseLabel {
        match self {
            ProtocolNode::Epidemic(n) => n.label(),
            ProtocolNode::Adv(n) => n.label(),
        }
    }

    pub fn helper(&self) -> Option<HelperRecord> {
        match self {
            ProtocolNode::Epidemic(_) => None,
            ProtocolNode::Adv(n) => n.helper(),
        }
    }
}

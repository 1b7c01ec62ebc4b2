//! MultiCastAdv and MultiCastAdvC: epochs of phases, each phase a
//! dissemination step followed by a status-adjustment step.

use std::ops::RangeInclusive;

use super::epidemic::saturating_ceil;
use super::{Alpha, HelperRecord, NodeEvent, NodeStatus, ParamError, PhaseLabel};
use crate::radio::{Channel, ChannelOutcome, Payload, SlotAction};
use crate::rng::Stream;

/// Step length and action probability of phase `j` in epoch `i`.
pub fn adv_params(i: u32, j: u32, alpha: Alpha, b: f64) -> Result<(u64, f64), ParamError> {
    if !alpha.is_valid() {
        return Err(ParamError::AlphaOutOfRange(alpha));
    }
    if i == 0 || j >= i {
        return Err(ParamError::PhaseOutOfRange { epoch: i, phase: j });
    }
    Ok(params_unchecked(i, j, alpha, b))
}

fn params_unchecked(i: u32, j: u32, alpha: Alpha, b: f64) -> (u64, f64) {
    let k = (i - j) as f64;
    // alpha * (i - j), kept as num/den until the last step
    let e = *alpha.0.numer() as f64 * k / *alpha.0.denom() as f64;
    let cube = (i as f64).powi(3);
    let r = saturating_ceil(b * libm::exp2(2.0 * e) * cube);
    (r.max(1), libm::exp2(-e - 1.0))
}

/// Phases run in epoch `i` when at most `2^cap` channels are available.
pub fn advc_phases(i: u32, cap: Option<u32>) -> RangeInclusive<u32> {
    let last = i.saturating_sub(1);
    0..=cap.map_or(last, |c| last.min(c))
}

/// One phase of the slot layout. Step one covers `[start, start + slots)`
/// and step two the following `slots` slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpan {
    pub epoch: u32,
    pub phase: u32,
    pub start: u64,
    pub slots: u64,
    pub prob: f64,
}

impl PhaseSpan {
    pub fn step_start(&self, step: u8) -> u64 {
        self.start + self.slots * (step as u64 - 1)
    }

    pub fn end(&self) -> u64 {
        self.start.saturating_add(self.slots.saturating_mul(2))
    }

    pub fn channels(&self) -> u32 {
        1u32.checked_shl(self.phase).unwrap_or(u32::MAX)
    }
}

/// Deterministic sequence of phases from slot 0. Shared by the nodes, the
/// phase-targeting adversary and the epoch classifier.
#[derive(Debug, Clone)]
pub struct AdvLayout {
    alpha: Alpha,
    b: f64,
    cap: Option<u32>,
    epoch: u32,
    phase: u32,
    start: u64,
}

impl AdvLayout {
    pub fn new(alpha: Alpha, b: f64, cap: Option<u32>) -> Self {
        AdvLayout { alpha, b, cap, epoch: 1, phase: 0, start: 0 }
    }

    pub fn cap(&self) -> Option<u32> {
        self.cap
    }
}

impl Iterator for AdvLayout {
    type Item = PhaseSpan;

    fn next(&mut self) -> Option<PhaseSpan> {
        let (slots, prob) = params_unchecked(self.epoch, self.phase, self.alpha, self.b);
        let span = PhaseSpan {
            epoch: self.epoch,
            phase: self.phase,
            start: self.start,
            slots,
            prob,
        };
        self.start = span.end();
        if self.phase < *advc_phases(self.epoch, self.cap).end() {
            self.phase += 1;
        } else {
            self.epoch += 1;
            self.phase = 0;
        }
        Some(span)
    }
}

/// Step-two counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepCounters {
    /// N_m: slots in which m was heard.
    pub data: u64,
    /// N'_m: slots in which m or the beacon was heard.
    pub heard: u64,
    /// N_n
    pub noise: u64,
    /// N_s
    pub silence: u64,
}

impl StepCounters {
    pub fn record(&mut self, outcome: ChannelOutcome) {
        match outcome {
            ChannelOutcome::Message(Payload::Data) => {
                self.data += 1;
                self.heard += 1;
            }
            ChannelOutcome::Message(Payload::Beacon) => self.heard += 1,
            ChannelOutcome::Noise => self.noise += 1,
            ChannelOutcome::Silence => self.silence += 1,
        }
    }

    pub fn listens(&self) -> u64 {
        self.heard + self.noise + self.silence
    }
}

/// Context for the end-of-phase checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCheck {
    pub epoch: u32,
    pub phase: u32,
    pub slots: u64,
    pub prob: f64,
    pub alpha: Alpha,
    /// Drop the N'_m upper bound (last phase of a channel-limited epoch).
    pub relaxed: bool,
}

/// End-of-step-two checks, applied in order. Returns the new status, the
/// helper record and every status entered along the way.
pub fn adv_phase_end(
    status: NodeStatus,
    helper: Option<HelperRecord>,
    c: &StepCounters,
    chk: &PhaseCheck,
) -> (NodeStatus, Option<HelperRecord>, Vec<NodeStatus>) {
    let mut status = status;
    let mut helper = helper;
    let mut entered = Vec::new();
    let rp = chk.slots as f64 * chk.prob;
    let rp2 = rp * chk.prob;

    if status == NodeStatus::Uninformed && c.data >= 1 {
        status = NodeStatus::Informed;
        entered.push(status);
    }
    if status == NodeStatus::Informed
        && c.data as f64 >= 1.5 * rp2
        && c.silence as f64 >= 0.9 * rp
        && (chk.relaxed || c.heard as f64 <= 2.2 * rp2)
    {
        status = NodeStatus::Helper;
        helper = Some(HelperRecord { epoch: chk.epoch, phase: chk.phase });
        entered.push(status);
    }
    if status == NodeStatus::Helper {
        if let Some(h) = helper {
            if chk.epoch >= h.epoch
                && chk.alpha.spans_two(chk.epoch - h.epoch)
                && chk.phase == h.phase
                && c.noise as f64 <= rp / 3000.0
            {
                status = NodeStatus::Halted;
                entered.push(status);
            }
        }
    }
    (status, helper, entered)
}

#[derive(Debug, Clone)]
pub struct AdvNode {
    layout: AdvLayout,
    span: PhaseSpan,
    step: u8,
    alpha: Alpha,
    status: NodeStatus,
    helper: Option<HelperRecord>,
    counters: StepCounters,
}

impl AdvNode {
    pub fn new(alpha: Alpha, b: f64, cap: Option<u32>, status: NodeStatus) -> Self {
        let mut layout = AdvLayout::new(alpha, b, cap);
        let span = layout.next().expect("layout is unbounded");
        AdvNode {
            layout,
            span,
            step: 1,
            alpha,
            status,
            helper: None,
            counters: StepCounters::default(),
        }
    }

    pub fn status(&self) -> NodeStatus {
        self.status
    }

    pub fn helper(&self) -> Option<HelperRecord> {
        self.helper
    }

    pub fn span(&self) -> PhaseSpan {
        self.span
    }

    pub fn counters(&self) -> StepCounters {
        self.counters
    }

    pub fn label(&self) -> PhaseLabel {
        PhaseLabel::Step {
            epoch: self.span.epoch,
            phase: self.span.phase,
            step: self.step,
        }
    }

    fn step_end(&self) -> u64 {
        self.span.step_start(self.step).saturating_add(self.span.slots)
    }

    pub fn next_event(&mut self, from: u64, rng: &mut Stream) -> NodeEvent {
        let end = self.step_end();
        if from >= end {
            return NodeEvent::Boundary(end);
        }
        let p = self.span.prob;
        let rate = if self.step == 1 { p } else { 2.0 * p };
        let slot = from.saturating_add(rng.geometric(rate));
        if slot >= end {
            return NodeEvent::Boundary(end);
        }
        let informed = self.status.knows_message();
        let listen = if self.step == 1 {
            !informed
        } else {
            rng.bernoulli_ratio(1, 2)
        };
        let ch = Channel(rng.uniform(1, self.span.channels() as u64) as u32);
        let action = if listen {
            SlotAction::Listen(ch)
        } else if informed {
            SlotAction::Broadcast(ch, Payload::Data)
        } else {
            SlotAction::Broadcast(ch, Payload::Beacon)
        };
        NodeEvent::Act(slot, action)
    }

    pub fn observe(&mut self, outcome: ChannelOutcome) -> Option<NodeStatus> {
        if self.step == 2 {
            self.counters.record(outcome);
            return None;
        }
        if self.status == NodeStatus::Uninformed && outcome == ChannelOutcome::Message(Payload::Data) {
            self.status = NodeStatus::Informed;
            return Some(self.status);
        }
        None
    }

    pub fn boundary(&mut self, slot: u64, entered: &mut Vec<NodeStatus>) {
        debug_assert_eq!(slot, self.step_end());
        if self.step == 1 {
            self.step = 2;
            self.counters = StepCounters::default();
            return;
        }
        let chk = PhaseCheck {
            epoch: self.span.epoch,
            phase: self.span.phase,
            slots: self.span.slots,
            prob: self.span.prob,
            alpha: self.alpha,
            relaxed: self.layout.cap() == Some(self.span.phase),
        };
        let (status, helper, path) = adv_phase_end(self.status, self.helper, &self.counters, &chk);
        self.status = status;
        self.helper = helper;
        entered.extend(path);
        self.span = self.layout.next().expect("layout is unbounded");
        self.step = 1;
        self.counters = StepCounters::default();
    }
}

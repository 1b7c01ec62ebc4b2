//! Safety invariants checked over a stream of trace events.
//!
//! Events of one slot arrive in two groups: boundary transitions first,
//! then the slot's actions. Checks triggered by a transition are evaluated
//! once its whole group has been applied, so a node that becomes informed
//! at the same boundary as another node becomes a helper does not count
//! as lacking the message. A halt at a boundary is judged before anyone
//! acts in that slot.

use std::fmt;

use serde::Serialize;

use super::MetricsError;
use crate::engine::{EventKind, Observer, TraceEvent};
use crate::protocols::{NodeStatus, PhaseLabel, ProtocolKind, ProtocolParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ViolationKind {
    /// V1: a node halted while some node was uninformed.
    HaltWhileUninformed,
    /// V2: a node became a helper while some node lacked the message.
    HelperWhileUninformed,
    /// V3: a node halted while some active node was below helper.
    HaltBelowHelper,
    /// V4: a helper record outside the reference phase or too early.
    HelperOffReference,
    /// A status regression or skipped step.
    BadTransition,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            ViolationKind::HaltWhileUninformed => "V1",
            ViolationKind::HelperWhileUninformed => "V2",
            ViolationKind::HaltBelowHelper => "V3",
            ViolationKind::HelperOffReference => "V4",
            ViolationKind::BadTransition => "VS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub slot: u64,
    pub node: usize,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}:{}", self.kind.code(), self.slot, self.node)
    }
}

/// What the checks need to know about the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SafetyContext {
    pub adaptive: bool,
    /// Helpers must record an epoch at least this large.
    pub helper_epoch: Option<u32>,
    /// Phase in which helpers must appear.
    pub helper_phase: Option<u32>,
}

impl SafetyContext {
    pub fn for_params(p: &ProtocolParams) -> Self {
        let limited = p.kind == ProtocolKind::MultiCastAdvC && p.channels.is_some_and(|c| c <= p.n / 2);
        SafetyContext {
            adaptive: p.kind.is_adv(),
            helper_epoch: (p.kind.is_adv() && !limited).then(|| p.lg_n() + 1),
            helper_phase: p.reference_phase(),
        }
    }

    /// Guess from the trace itself: adaptive when labels carry epochs,
    /// unlimited channels.
    pub fn infer(events: &[TraceEvent]) -> Result<Self, MetricsError> {
        let n = events.iter().filter(|e| e.kind == EventKind::Init).count() as u32;
        if n < 2 || !n.is_power_of_two() {
            return Err(MetricsError::Truncated(format!("{n} init rows")));
        }
        let adaptive = events
            .iter()
            .any(|e| matches!(e.label, PhaseLabel::Step { .. }));
        let kind = if adaptive { ProtocolKind::MultiCastAdv } else { ProtocolKind::MultiCast };
        Ok(SafetyContext::for_params(&ProtocolParams::new(kind, n)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Boundary(u64),
    Action(u64),
}

/// Streaming invariant checker.
#[derive(Debug, Clone)]
pub struct SafetyMonitor {
    ctx: SafetyContext,
    status: Vec<Option<NodeStatus>>,
    counts: [usize; 4],
    /// Nodes that never held the message, halted ones included.
    ignorant: usize,
    group: Option<Group>,
    pending: Vec<Violation>,
    violations: Vec<Violation>,
    ends: usize,
}

fn idx(s: NodeStatus) -> usize {
    s as usize
}

impl SafetyMonitor {
    pub fn new(ctx: SafetyContext) -> Self {
        SafetyMonitor {
            ctx,
            status: Vec::new(),
            counts: [0; 4],
            ignorant: 0,
            group: None,
            pending: Vec::new(),
            violations: Vec::new(),
            ends: 0,
        }
    }

    fn flush(&mut self) {
        let un = self.ignorant;
        let below = self.counts[idx(NodeStatus::Uninformed)] + self.counts[idx(NodeStatus::Informed)];
        for v in self.pending.drain(..) {
            let hit = match v.kind {
                ViolationKind::HaltWhileUninformed | ViolationKind::HelperWhileUninformed => un > 0,
                ViolationKind::HaltBelowHelper => below > 0,
                _ => true,
            };
            if hit {
                self.violations.push(v);
            }
        }
    }

    pub fn observe(&mut self, ev: &TraceEvent) {
        let group = match ev.kind {
            EventKind::Init | EventKind::Boundary => Some(Group::Boundary(ev.slot)),
            EventKind::Listen { .. } | EventKind::Broadcast { .. } => Some(Group::Action(ev.slot)),
            EventKind::End { .. } => None,
        };
        if group != self.group {
            self.flush();
            self.group = group;
        }
        if ev.node >= self.status.len() {
            self.status.resize(ev.node + 1, None);
        }
        if let EventKind::End { .. } = ev.kind {
            self.ends += 1;
            return;
        }
        let new = ev.status_after;
        let Some(old) = self.status[ev.node] else {
            self.status[ev.node] = Some(new);
            self.counts[idx(new)] += 1;
            if new == NodeStatus::Uninformed {
                self.ignorant += 1;
            }
            return;
        };
        if old == new {
            return;
        }
        let v = |kind| Violation { kind, slot: ev.slot, node: ev.node };
        let ok_step = match (old, new) {
            (NodeStatus::Uninformed, NodeStatus::Informed) => true,
            // an uninformed epidemic node can halt; that is V1, not a bad step
            (NodeStatus::Informed | NodeStatus::Uninformed, NodeStatus::Halted) => !self.ctx.adaptive,
            (NodeStatus::Informed, NodeStatus::Helper) | (NodeStatus::Helper, NodeStatus::Halted) => self.ctx.adaptive,
            _ => false,
        };
        if !ok_step {
            self.violations.push(v(ViolationKind::BadTransition));
        }
        if old == NodeStatus::Uninformed && matches!(new, NodeStatus::Informed | NodeStatus::Helper) {
            self.ignorant -= 1;
        }
        if new == NodeStatus::Uninformed {
            self.ignorant += 1;
        }
        self.counts[idx(old)] -= 1;
        self.counts[idx(new)] += 1;
        self.status[ev.node] = Some(new);
        match new {
            NodeStatus::Halted => {
                self.pending.push(v(ViolationKind::HaltWhileUninformed));
                if self.ctx.adaptive {
                    self.pending.push(v(ViolationKind::HaltBelowHelper));
                }
            }
            NodeStatus::Helper if self.ctx.adaptive => {
                self.pending.push(v(ViolationKind::HelperWhileUninformed));
                let off = match ev.label {
                    PhaseLabel::Step { epoch, phase, .. } => {
                        self.ctx.helper_epoch.is_some_and(|e| epoch < e) || Some(phase) != self.ctx.helper_phase
                    }
                    PhaseLabel::Iteration(_) => true,
                };
                if off {
                    self.violations.push(v(ViolationKind::HelperOffReference));
                }
            }
            _ => {}
        }
    }

    /// Violations so far, without requiring the end marker.
    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// Final list. Fails unless every node has an end row.
    pub fn finish(mut self) -> Result<Vec<Violation>, MetricsError> {
        self.flush();
        let nodes = self.status.len();
        if nodes == 0 || self.ends < nodes {
            return Err(MetricsError::Truncated(format!(
                "{} of {} nodes have an end row",
                self.ends, nodes
            )));
        }
        self.violations.sort();
        Ok(self.violations)
    }
}

impl Observer for SafetyMonitor {
    fn event(&mut self, ev: &TraceEvent) {
        self.observe(ev);
    }
}

/// Checks a complete trace.
pub fn verify_safety(events: &[TraceEvent], ctx: SafetyContext) -> Result<Vec<Violation>, MetricsError> {
    let mut m = SafetyMonitor::new(ctx);
    for e in events {
        m.observe(e);
    }
    m.finish()
}

//! The trial loop.
//!
//! Nodes hand the engine their next event; the engine keeps them in a
//! priority queue ordered by (slot, boundaries before actions, node id) and
//! resolves every slot that has at least one action. Slots in which nobody
//! acts are never visited.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::adversary::JamSchedule;
use crate::protocols::{HelperRecord, NodeEvent, NodeStatus, ParamError, PhaseLabel, ProtocolParams};
use crate::radio::{resolve_into, Channel, ChannelOutcome, EnergyLedger, NodeId, Payload, RadioError, SlotAction};
use crate::rng::{Role, Stream};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error("jam schedule changed during the run")]
    ScheduleTampered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Init,
    Listen { channel: Channel, outcome: ChannelOutcome },
    Broadcast { channel: Channel, payload: Payload },
    /// A status change at an iteration or phase boundary.
    Boundary,
    /// Final row per node; `capped` when the slot cap stopped the trial.
    End { capped: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub slot: u64,
    pub node: NodeId,
    pub label: PhaseLabel,
    pub kind: EventKind,
    pub status_after: NodeStatus,
}

/// Receives trial events as they happen.
pub trait Observer {
    /// Whether to report every listen and broadcast. When false only
    /// status-changing actions are reported.
    fn wants_actions(&self) -> bool {
        false
    }

    fn event(&mut self, ev: &TraceEvent);
}

impl Observer for () {
    fn event(&mut self, _: &TraceEvent) {}
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn wants_actions(&self) -> bool {
        self.0.wants_actions() || self.1.wants_actions()
    }

    fn event(&mut self, ev: &TraceEvent) {
        self.0.event(ev);
        self.1.event(ev);
    }
}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn wants_actions(&self) -> bool {
        (**self).wants_actions()
    }

    fn event(&mut self, ev: &TraceEvent) {
        (**self).event(ev)
    }
}

impl<O: Observer> Observer for Option<O> {
    fn wants_actions(&self) -> bool {
        self.as_ref().is_some_and(O::wants_actions)
    }

    fn event(&mut self, ev: &TraceEvent) {
        if let Some(o) = self {
            o.event(ev);
        }
    }
}

/// Collects every event in memory.
#[derive(Debug, Default, Clone)]
pub struct Recorder {
    pub events: Vec<TraceEvent>,
}

impl Observer for Recorder {
    fn wants_actions(&self) -> bool {
        true
    }

    fn event(&mut self, ev: &TraceEvent) {
        self.events.push(*ev);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Every node halted; the slot is the last halt.
    Complete(u64),
    /// The slot cap was reached first.
    Cap(u64),
}

impl Termination {
    pub fn slot(self) -> u64 {
        match self {
            Termination::Complete(s) | Termination::Cap(s) => s,
        }
    }

    pub fn capped(self) -> bool {
        matches!(self, Termination::Cap(_))
    }
}

/// Raw per-trial results.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub ledger: EnergyLedger,
    pub first_informed: Vec<Option<u64>>,
    pub halted_at: Vec<Option<u64>>,
    pub helpers: Vec<Option<HelperRecord>>,
    pub final_status: Vec<NodeStatus>,
    pub termination: Termination,
}

const BOUNDARY: u8 = 0;
const ACTION: u8 = 1;

/// Runs one trial. Node `u` draws from the protocol stream `u` of
/// `trial_seed`; the schedule is never consulted for anything but jam sets.
pub fn simulate<O: Observer>(
    params: &ProtocolParams,
    schedule: &JamSchedule,
    trial_seed: u64,
    max_slots: u64,
    obs: &mut O,
) -> Result<TrialRun, EngineError> {
    params.validate()?;
    if !schedule.verify() {
        return Err(EngineError::ScheduleTampered);
    }
    let n = params.n as usize;
    let verbose = obs.wants_actions();
    let mut nodes: Vec<_> = (0..n).map(|u| params.spawn(u)).collect();
    let mut rngs: Vec<_> = (0..n)
        .map(|u| Stream::for_role(trial_seed, Role::Protocol, u as u32))
        .collect();
    let mut pending = vec![SlotAction::Idle; n];
    let mut heap = BinaryHeap::with_capacity(2 * n);
    let mut ledger = EnergyLedger::new(n);
    let mut first_informed = vec![None; n];
    let mut halted_at = vec![None; n];
    let mut cursor = schedule.cursor();

    let push = |heap: &mut BinaryHeap<_>, pending: &mut [SlotAction], u: usize, ev: NodeEvent| match ev {
        NodeEvent::Act(s, a) => {
            pending[u] = a;
            heap.push(Reverse((s, ACTION, u)));
        }
        NodeEvent::Boundary(s) => heap.push(Reverse((s, BOUNDARY, u))),
    };

    for u in 0..n {
        let status = nodes[u].status();
        if status.knows_message() {
            first_informed[u] = Some(0);
        }
        obs.event(&TraceEvent {
            slot: 0,
            node: u,
            label: nodes[u].label(),
            kind: EventKind::Init,
            status_after: status,
        });
        let ev = nodes[u].next_event(0, &mut rngs[u]);
        push(&mut heap, &mut pending, u, ev);
    }

    let mut entered = Vec::new();
    let mut acts: Vec<(NodeId, SlotAction)> = Vec::new();
    let mut heard = Vec::new();
    let mut capped = false;

    while let Some(&Reverse((slot, kind, u))) = heap.peek() {
        if (kind == BOUNDARY && slot > max_slots) || (kind == ACTION && slot >= max_slots) {
            capped = true;
            break;
        }
        heap.pop();
        if kind == BOUNDARY {
            let label = nodes[u].label();
            entered.clear();
            nodes[u].boundary(slot, &mut entered);
            for &st in &entered {
                if st == NodeStatus::Informed && first_informed[u].is_none() {
                    first_informed[u] = Some(slot);
                }
                if st == NodeStatus::Halted {
                    halted_at[u] = Some(slot);
                }
                obs.event(&TraceEvent { slot, node: u, label, kind: EventKind::Boundary, status_after: st });
            }
            if nodes[u].status() != NodeStatus::Halted {
                let ev = nodes[u].next_event(slot, &mut rngs[u]);
                push(&mut heap, &mut pending, u, ev);
            }
            continue;
        }

        acts.clear();
        acts.push((u, pending[u]));
        while let Some(&Reverse((s, k, v))) = heap.peek() {
            if s != slot || k != ACTION {
                break;
            }
            heap.pop();
            acts.push((v, pending[v]));
        }
        resolve_into(&acts, cursor.at(slot), &mut heard)?;
        let mut h = heard.iter();
        for &(v, action) in &acts {
            let label = nodes[v].label();
            match action {
                SlotAction::Idle => {}
                SlotAction::Broadcast(channel, payload) => {
                    ledger.charge(v);
                    if verbose {
                        obs.event(&TraceEvent {
                            slot,
                            node: v,
                            label,
                            kind: EventKind::Broadcast { channel, payload },
                            status_after: nodes[v].status(),
                        });
                    }
                }
                SlotAction::Listen(channel) => {
                    ledger.charge(v);
                    let &(w, outcome) = h.next().expect("one outcome per listener");
                    debug_assert_eq!(w, v);
                    let changed = nodes[v].observe(outcome);
                    if changed == Some(NodeStatus::Informed) && first_informed[v].is_none() {
                        first_informed[v] = Some(slot);
                    }
                    if verbose || changed.is_some() {
                        obs.event(&TraceEvent {
                            slot,
                            node: v,
                            label,
                            kind: EventKind::Listen { channel, outcome },
                            status_after: nodes[v].status(),
                        });
                    }
                }
            }
        }
        for &(v, _) in &acts {
            let ev = nodes[v].next_event(slot + 1, &mut rngs[v]);
            push(&mut heap, &mut pending, v, ev);
        }
    }

    if !schedule.verify() {
        return Err(EngineError::ScheduleTampered);
    }
    let termination = if capped {
        Termination::Cap(max_slots)
    } else {
        Termination::Complete(halted_at.iter().flatten().copied().max().unwrap_or(0))
    };
    ledger.adversary = schedule.spend_before(termination.slot());
    let final_status: Vec<_> = nodes.iter().map(|x| x.status()).collect();
    for (u, node) in nodes.iter().enumerate() {
        obs.event(&TraceEvent {
            slot: termination.slot(),
            node: u,
            label: node.label(),
            kind: EventKind::End { capped },
            status_after: final_status[u],
        });
    }
    Ok(TrialRun {
        ledger,
        first_informed,
        halted_at,
        helpers: nodes.iter().map(|x| x.helper()).collect(),
        final_status,
        termination,
    })
}

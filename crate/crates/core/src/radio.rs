//! Channel semantics and energy accounting for one slot.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

/// A 1-based channel index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Channel(pub u32);

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// What goes on the air. The message bytes themselves live with the trial;
/// every node that knows the message sends the same bytes, so the payload
/// only needs to say which of the two kinds it is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Payload {
    Data,
    Beacon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotAction {
    Idle,
    Listen(Channel),
    Broadcast(Channel, Payload),
}

impl SlotAction {
    pub fn channel(&self) -> Option<Channel> {
        match *self {
            SlotAction::Idle => None,
            SlotAction::Listen(c) | SlotAction::Broadcast(c, _) => Some(c),
        }
    }

    pub fn is_idle(&self) -> bool {
        matches!(self, SlotAction::Idle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelOutcome {
    Silence,
    Message(Payload),
    Noise,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RadioError {
    #[error("node {node} used channel 0; channels are 1-based")]
    ZeroChannel { node: NodeId },
}

/// Outcome on a channel given its broadcasters and whether it is jammed.
pub fn resolve_channel<I>(broadcasts: I, jammed: bool) -> ChannelOutcome
where
    I: IntoIterator<Item = Payload>,
{
    if jammed {
        return ChannelOutcome::Noise;
    }
    let mut it = broadcasts.into_iter();
    match (it.next(), it.next()) {
        (None, _) => ChannelOutcome::Silence,
        (Some(p), None) => ChannelOutcome::Message(p),
        _ => ChannelOutcome::Noise,
    }
}

/// Per-node and adversary energy counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnergyLedger {
    pub node: Vec<u64>,
    pub adversary: u64,
}

impl EnergyLedger {
    pub fn new(n: usize) -> Self {
        EnergyLedger {
            node: vec![0; n],
            adversary: 0,
        }
    }

    pub fn charge(&mut self, node: NodeId) {
        self.node[node] += 1;
    }

    pub fn max_node_cost(&self) -> u64 {
        self.node.iter().copied().max().unwrap_or(0)
    }

    pub fn total_node_cost(&self) -> u64 {
        self.node.iter().sum()
    }
}

/// What one slot produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlotReport {
    /// Outcome for each listener, in the order the listeners were given.
    pub heard: Vec<(NodeId, ChannelOutcome)>,
    /// Nodes charged one unit (every broadcaster and listener).
    pub charged: Vec<NodeId>,
    pub adversary_charge: u64,
}

/// Resolves a slot: groups broadcasters by channel, hands each listener its
/// channel's outcome and charges everyone who was not idle.
///
/// `jam_set` must be sorted.
pub fn step_slot(
    actions: &[(NodeId, SlotAction)],
    jam_set: &[Channel],
    ledger: &mut EnergyLedger,
) -> Result<SlotReport, RadioError> {
    let mut report = SlotReport::default();
    resolve_into(actions, jam_set, &mut report.heard)?;
    for &(node, action) in actions {
        if !action.is_idle() {
            ledger.charge(node);
            report.charged.push(node);
        }
    }
    report.adversary_charge = jam_set.len() as u64;
    ledger.adversary += report.adversary_charge;
    Ok(report)
}

/// Listener outcomes for a slot, without touching any ledger.
pub fn resolve_into(
    actions: &[(NodeId, SlotAction)],
    jam_set: &[Channel],
    heard: &mut Vec<(NodeId, ChannelOutcome)>,
) -> Result<(), RadioError> {
    heard.clear();
    for &(node, action) in actions {
        if action.channel() == Some(Channel(0)) {
            return Err(RadioError::ZeroChannel { node });
        }
    }
    for &(node, action) in actions {
        let SlotAction::Listen(ch) = action else {
            continue;
        };
        let on_channel = actions.iter().filter_map(|&(_, a)| match a {
            SlotAction::Broadcast(c, p) if c == ch => Some(p),
            _ => None,
        });
        let jammed = jam_set.binary_search(&ch).is_ok();
        heard.push((node, resolve_channel(on_channel, jammed)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: Payload = Payload::Data;
    const B: Payload = Payload::Beacon;

    #[test]
    fn truth_table() {
        assert_eq!(resolve_channel([], false), ChannelOutcome::Silence);
        assert_eq!(resolve_channel([M], false), ChannelOutcome::Message(M));
        assert_eq!(resolve_channel([M, B], false), ChannelOutcome::Noise);
        assert_eq!(resolve_channel([M], true), ChannelOutcome::Noise);
        assert_eq!(resolve_channel([B], false), ChannelOutcome::Message(B));
        assert_eq!(resolve_channel([], true), ChannelOutcome::Noise);
    }

    #[test]
    fn one_broadcaster_one_listener() {
        let mut ledger = EnergyLedger::new(2);
        let r = step_slot(
            &[(0, SlotAction::Broadcast(Channel(2), M)), (1, SlotAction::Listen(Channel(2)))],
            &[],
            &mut ledger,
        )
        .unwrap();
        assert_eq!(r.heard, vec![(1, ChannelOutcome::Message(M))]);
        assert_eq!(ledger.node, vec![1, 1]);
        assert_eq!(ledger.adversary, 0);
    }

    #[test]
    fn jammed_listeners_hear_noise() {
        let mut ledger = EnergyLedger::new(2);
        let r = step_slot(
            &[(0, SlotAction::Listen(Channel(1))), (1, SlotAction::Listen(Channel(1)))],
            &[Channel(1)],
            &mut ledger,
        )
        .unwrap();
        assert_eq!(r.heard, vec![(0, ChannelOutcome::Noise), (1, ChannelOutcome::Noise)]);
        assert_eq!(ledger.adversary, 1);
    }

    #[test]
    fn idle_slot_still_charges_jammer() {
        let mut ledger = EnergyLedger::new(3);
        let idle = [(0, SlotAction::Idle), (1, SlotAction::Idle), (2, SlotAction::Idle)];
        let r = step_slot(&idle, &[Channel(1), Channel(2), Channel(3)], &mut ledger).unwrap();
        assert!(r.heard.is_empty());
        assert_eq!(ledger.adversary, 3);
        assert_eq!(ledger.total_node_cost(), 0);
    }

    #[test]
    fn channel_zero_rejected() {
        let mut ledger = EnergyLedger::new(1);
        let err = step_slot(&[(0, SlotAction::Listen(Channel(0)))], &[], &mut ledger).unwrap_err();
        assert_eq!(err, RadioError::ZeroChannel { node: 0 });
    }

    #[test]
    fn different_channels_do_not_interfere() {
        let mut ledger = EnergyLedger::new(4);
        let r = step_slot(
            &[
                (0, SlotAction::Broadcast(Channel(1), M)),
                (1, SlotAction::Broadcast(Channel(2), B)),
                (2, SlotAction::Listen(Channel(1))),
                (3, SlotAction::Listen(Channel(2))),
            ],
            &[],
            &mut ledger,
        )
        .unwrap();
        assert_eq!(
            r.heard,
            vec![(2, ChannelOutcome::Message(M)), (3, ChannelOutcome::Message(B))]
        );
    }
}

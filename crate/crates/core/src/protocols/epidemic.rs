//! MultiCastCore, MultiCast and MultiCastC: repeated epidemic broadcast
//! iterations, each followed by a noise-count termination check.

use super::{NodeEvent, NodeStatus, ParamError, PhaseLabel};
use crate::radio::{Channel, ChannelOutcome, Payload, SlotAction};
use crate::rng::{Coin, Stream};

/// First iteration index of MultiCast.
pub const FIRST_ITERATION: u32 = 6;
/// MultiCastCore acts with probability 2^-6 in every slot.
const CORE_EXP: u32 = 6;

/// Iteration length and action probability of MultiCast iteration `i`.
pub fn mc_params(i: u32, n: u32, a: f64) -> Result<(u64, f64), ParamError> {
    if i < FIRST_ITERATION {
        return Err(ParamError::IterationTooSmall(i));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(ParamError::BadNodeCount(n));
    }
    let lg = n.trailing_zeros() as f64;
    let r = a * i as f64 * libm::exp2(2.0 * i as f64) * lg * lg;
    Ok((saturating_ceil(r), libm::exp2(-(i as f64))))
}

/// MultiCastCore iteration length `a lg max(T, n)`.
pub fn mcc_iteration_len(a: f64, budget: u64, n: u32) -> u64 {
    let t_hat = budget.max(n as u64) as f64;
    saturating_ceil(a * libm::log2(t_hat))
}

/// MultiCastCore halts when fewer than R/128 listens heard noise.
pub fn mcc_should_halt(noise: u64, slots: u64) -> bool {
    (noise as u128) * 128 < slots as u128
}

/// MultiCast halts when fewer than R_i / 2^(i+1) listens heard noise.
pub fn mc_should_halt(noise: u64, slots: u64, i: u32) -> bool {
    if noise == 0 {
        return slots > 0;
    }
    if i + 1 >= 64 {
        return false;
    }
    ((noise as u128) << (i + 1)) < slots as u128
}

/// Position of simulated channel `ch` inside a MultiCastC round: the
/// 1-based slot within the round and the physical channel.
pub fn round_map(ch: u32, n: u32, c: u32) -> Result<(u32, Channel), ParamError> {
    let half = n / 2;
    if c == 0 || c > half {
        return Err(ParamError::TooManyChannels { c, half });
    }
    if ch == 0 || ch > half {
        return Err(ParamError::ChannelOutOfRange { ch, max: half });
    }
    Ok(((ch - 1) / c + 1, Channel((ch - 1) % c + 1)))
}

/// The action for a drawn coin. Uninformed nodes never broadcast.
pub fn epidemic_action(status: NodeStatus, coin: Coin, ch: Channel) -> SlotAction {
    match coin {
        Coin::Listen => SlotAction::Listen(ch),
        Coin::Broadcast if status.knows_message() => SlotAction::Broadcast(ch, Payload::Data),
        _ => SlotAction::Idle,
    }
}

/// One slot drawn the slow way: a channel and a three-way coin with
/// probability `p` each for listen and broadcast.
pub fn per_slot_action(status: NodeStatus, p: f64, channels: u32, rng: &mut Stream) -> SlotAction {
    let ch = rng.uniform(1, channels as u64) as u32;
    let coin = rng.categorical(p).expect("p <= 1/2");
    epidemic_action(status, coin, Channel(ch))
}

pub(crate) fn saturating_ceil(x: f64) -> u64 {
    let c = libm::ceil(x);
    if c >= u64::MAX as f64 {
        u64::MAX
    } else if c <= 0.0 {
        0
    } else {
        c as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Schedule {
    Fixed,
    Growing { a: f64, n: u32 },
}

#[derive(Debug, Clone)]
pub struct EpidemicNode {
    schedule: Schedule,
    /// Channel range the node draws from, n/2.
    sim_channels: u32,
    /// Physical channel limit C for MultiCastC.
    limit: Option<u32>,
    round_len: u64,
    status: NodeStatus,
    iteration: u32,
    /// Iteration length, in rounds.
    slots: u64,
    /// Round at which the current iteration ends.
    end: u64,
    noise: u64,
    /// Listen (and broadcast) probability is 2^-exp.
    exp: u32,
}

impl EpidemicNode {
    pub fn core(n: u32, a: f64, budget: u64, status: NodeStatus) -> Self {
        let slots = mcc_iteration_len(a, budget, n);
        EpidemicNode {
            schedule: Schedule::Fixed,
            sim_channels: n / 2,
            limit: None,
            round_len: 1,
            status,
            iteration: 1,
            slots,
            end: slots,
            noise: 0,
            exp: CORE_EXP,
        }
    }

    /// MultiCast, or MultiCastC when `limit` is set.
    pub fn growing(n: u32, a: f64, status: NodeStatus, limit: Option<u32>) -> Self {
        let (slots, _) = mc_params(FIRST_ITERATION, n, a).expect("validated n");
        let round_len = limit.map_or(1, |c| (n / 2).div_ceil(c) as u64);
        EpidemicNode {
            schedule: Schedule::Growing { a, n },
            sim_channels: n / 2,
            limit,
            round_len,
            status,
            iteration: FIRST_ITERATION,
            slots,
            end: slots,
            noise: 0,
            exp: FIRST_ITERATION,
        }
    }

    pub fn status(&self) -> NodeStatus {
        self.status
    }

    pub fn label(&self) -> PhaseLabel {
        PhaseLabel::Iteration(self.iteration)
    }

    pub fn iteration_len(&self) -> u64 {
        self.slots
    }

    pub fn noise(&self) -> u64 {
        self.noise
    }

    fn prob(&self) -> f64 {
        libm::exp2(-(self.exp as f64))
    }

    pub fn next_event(&mut self, from: u64, rng: &mut Stream) -> NodeEvent {
        let boundary = NodeEvent::Boundary(self.end.saturating_mul(self.round_len));
        let round = from.div_ceil(self.round_len);
        if round >= self.end {
            return boundary;
        }
        let p = self.prob();
        let informed = self.status.knows_message();
        let rate = if informed { 2.0 * p } else { p };
        let round = round.saturating_add(rng.geometric(rate));
        if round >= self.end {
            return boundary;
        }
        let coin = if informed && !rng.bernoulli_ratio(1, 2) {
            Coin::Broadcast
        } else {
            Coin::Listen
        };
        let ch = rng.uniform(1, self.sim_channels as u64) as u32;
        match self.limit {
            None => NodeEvent::Act(round, epidemic_action(self.status, coin, Channel(ch))),
            Some(c) => {
                let n = self.sim_channels * 2;
                let (offset, phys) = round_map(ch, n, c).expect("channel in range");
                let slot = round * self.round_len + (offset as u64 - 1);
                NodeEvent::Act(slot, epidemic_action(self.status, coin, phys))
            }
        }
    }

    pub fn observe(&mut self, outcome: ChannelOutcome) -> Option<NodeStatus> {
        match outcome {
            ChannelOutcome::Noise => {
                self.noise += 1;
                None
            }
            ChannelOutcome::Message(Payload::Data) if self.status == NodeStatus::Uninformed => {
                self.status = NodeStatus::Informed;
                Some(self.status)
            }
            _ => None,
        }
    }

    pub fn boundary(&mut self, slot: u64, entered: &mut Vec<NodeStatus>) {
        debug_assert_eq!(slot, self.end * self.round_len);
        let halt = match self.schedule {
            Schedule::Fixed => mcc_should_halt(self.noise, self.slots),
            Schedule::Growing { .. } => mc_should_halt(self.noise, self.slots, self.iteration),
        };
        if halt {
            self.status = NodeStatus::Halted;
            entered.push(NodeStatus::Halted);
            return;
        }
        self.iteration += 1;
        self.noise = 0;
        if let Schedule::Growing { a, n } = self.schedule {
            let (slots, _) = mc_params(self.iteration, n, a).expect("valid iteration");
            self.slots = slots;
            self.exp = self.iteration;
        }
        self.end = self.end.saturating_add(self.slots);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mc_params_examples() {
        let (r, p) = mc_params(6, 16, 1.0).unwrap();
        assert_eq!(r, 393_216);
        assert_eq!(p, 1.0 / 64.0);
        let (r, p) = mc_params(7, 16, 1.0).unwrap();
        assert_eq!(r, 1_835_008);
        assert_eq!(p, 1.0 / 128.0);
        assert_eq!(mc_params(5, 16, 1.0), Err(ParamError::IterationTooSmall(5)));
    }

    #[test]
    fn core_halt_threshold() {
        let r = mcc_iteration_len(128.0, 1024, 8);
        assert_eq!(r, 1280);
        assert!(mcc_should_halt(9, r));
        assert!(!mcc_should_halt(10, r));
        assert!(mcc_should_halt(0, r));
        // T below n uses n
        assert_eq!(mcc_iteration_len(4.0, 0, 16), 16);
    }

    #[test]
    fn mc_halt_threshold() {
        let (r, _) = mc_params(6, 16, 1.0).unwrap();
        assert!(mc_should_halt(3071, r, 6));
        assert!(!mc_should_halt(3072, r, 6));
    }

    #[test]
    fn round_map_examples() {
        assert_eq!(round_map(6, 16, 4).unwrap(), (2, Channel(2)));
        assert_eq!(round_map(3, 16, 4).unwrap(), (1, Channel(3)));
        assert_eq!(round_map(8, 16, 4).unwrap(), (2, Channel(4)));
        assert!(round_map(1, 16, 16).is_err());
    }

    #[test]
    fn uninformed_never_broadcasts() {
        assert_eq!(
            epidemic_action(NodeStatus::Uninformed, Coin::Broadcast, Channel(1)),
            SlotAction::Idle
        );
        assert_eq!(
            epidemic_action(NodeStatus::Informed, Coin::Broadcast, Channel(3)),
            SlotAction::Broadcast(Channel(3), Payload::Data)
        );
        let mut rng = Stream::new(1);
        let mut node = EpidemicNode::growing(16, 1.0, NodeStatus::Uninformed, None);
        let mut from = 0;
        for _ in 0..5_000 {
            match node.next_event(from, &mut rng) {
                NodeEvent::Act(s, a) => {
                    assert!(matches!(a, SlotAction::Listen(_)));
                    from = s + 1;
                }
                NodeEvent::Boundary(_) => break,
            }
        }
    }

    #[test]
    fn status_flips_on_message() {
        let mut node = EpidemicNode::core(8, 4.0, 0, NodeStatus::Uninformed);
        assert_eq!(node.observe(ChannelOutcome::Noise), None);
        assert_eq!(node.noise(), 1);
        assert_eq!(node.observe(ChannelOutcome::Message(Payload::Data)), Some(NodeStatus::Informed));
        assert_eq!(node.observe(ChannelOutcome::Message(Payload::Data)), None);
    }

    #[test]
    fn limited_channels_stay_in_round() {
        let mut rng = Stream::new(4);
        let mut node = EpidemicNode::growing(16, 1.0, NodeStatus::Informed, Some(2));
        let mut from = 0;
        for _ in 0..2_000 {
            match node.next_event(from, &mut rng) {
                NodeEvent::Act(s, a) => {
                    let ch = a.channel().unwrap().0;
                    assert!((1..=2).contains(&ch));
                    assert!(s >= from);
                    from = s + 1;
                }
                NodeEvent::Boundary(b) => {
                    assert_eq!(b, node.iteration_len() * 4);
                    break;
                }
            }
        }
    }
}

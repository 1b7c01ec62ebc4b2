//! Seeded random streams.
//!
//! Every trial gets a seed derived from the master seed and the trial index,
//! and every node (and the harness) draws from its own ChaCha8 stream keyed
//! off that trial seed. Adding trials never perturbs earlier ones, and node
//! streams never interact.
//!
//! Mixing function: `mix(x) = splitmix64(x)`, and
//!
//! ```text
//! trial_seed(master, k)         = mix(master ^ mix(k + 1))
//! stream_seed(trial, role, idx) = mix(trial ^ mix(role_tag << 32 | idx))
//! ```
//!
//! with `role_tag` 1 for protocol streams and 2 for harness streams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DrawError {
    #[error("categorical draw needs 0 <= q <= 1/2, got {0}")]
    Categorical(f64),
    #[error("empty uniform range [{0}, {1}]")]
    EmptyRange(u64, u64),
}

/// Who a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Protocol,
    Harness,
}

impl Role {
    fn tag(self) -> u64 {
        match self {
            Role::Protocol => 1,
            Role::Harness => 2,
        }
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial.wrapping_add(1)))
}

pub fn stream_seed(trial_seed: u64, role: Role, index: u32) -> u64 {
    splitmix64(trial_seed ^ splitmix64((role.tag() << 32) | index as u64))
}

/// The three-way coin of the epidemic protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coin {
    Listen,
    Broadcast,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Uniform { lo: u64, hi: u64 },
    Bernoulli(f64),
    BernoulliRatio { num: u64, den: u64 },
    /// listen with q, broadcast with q, idle with 1 - 2q
    Categorical(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drawn {
    Int(u64),
    Bool(bool),
    Coin(Coin),
}

#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_role(trial_seed: u64, role: Role, index: u32) -> Self {
        Stream::new(stream_seed(trial_seed, role, index))
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn draw(&mut self, dist: Distribution) -> Result<Drawn, DrawError> {
        Ok(match dist {
            Distribution::Uniform { lo, hi } => {
                if lo > hi {
                    return Err(DrawError::EmptyRange(lo, hi));
                }
                Drawn::Int(self.uniform(lo, hi))
            }
            Distribution::Bernoulli(q) => Drawn::Bool(self.bernoulli(q)),
            Distribution::BernoulliRatio { num, den } => Drawn::Bool(self.bernoulli_ratio(num, den)),
            Distribution::Categorical(q) => Drawn::Coin(self.categorical(q)?),
        })
    }

    /// Uniform integer in `[lo, hi]`. Panics if `lo > hi`.
    pub fn uniform(&mut self, lo: u64, hi: u64) -> u64 {
        if lo == hi {
            return lo;
        }
        self.rng.random_range(lo..=hi)
    }

    /// Uniform f64 in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, q: f64) -> bool {
        if q >= 1.0 {
            return true;
        }
        if q <= 0.0 {
            return false;
        }
        self.unit() < q
    }

    /// Exact Bernoulli(num/den).
    pub fn bernoulli_ratio(&mut self, num: u64, den: u64) -> bool {
        assert!(den > 0, "zero denominator");
        if num >= den {
            return true;
        }
        if num == 0 {
            return false;
        }
        self.rng.random_range(0..den) < num
    }

    pub fn categorical(&mut self, q: f64) -> Result<Coin, DrawError> {
        if !(0.0..=0.5).contains(&q) {
            return Err(DrawError::Categorical(q));
        }
        let u = self.unit();
        Ok(if u < q {
            Coin::Listen
        } else if u < 2.0 * q {
            Coin::Broadcast
        } else {
            Coin::Idle
        })
    }

    /// Number of failures before the first success of a Bernoulli(q) sequence.
    ///
    /// Saturates at `u64::MAX` when `q <= 0`.
    pub fn geometric(&mut self, q: f64) -> u64 {
        if q >= 1.0 {
            return 0;
        }
        if q <= 0.0 {
            return u64::MAX;
        }
        let u = self.unit();
        let g = libm::floor(libm::log1p(-u) / libm::log1p(-q));
        if g >= u64::MAX as f64 {
            u64::MAX
        } else {
            g as u64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_and_singleton() {
        let mut s = Stream::new(3);
        for _ in 0..100 {
            assert_eq!(s.draw(Distribution::Bernoulli(1.0)), Ok(Drawn::Bool(true)));
            assert_eq!(s.draw(Distribution::Uniform { lo: 1, hi: 1 }), Ok(Drawn::Int(1)));
        }
    }

    #[test]
    fn categorical_rejects_large_q() {
        let mut s = Stream::new(3);
        assert_eq!(s.categorical(0.6), Err(DrawError::Categorical(0.6)));
        assert!(s.categorical(0.5).is_ok());
    }

    #[test]
    fn bernoulli_mean_within_three_se() {
        let mut s = Stream::new(11);
        let n = 100_000;
        let q = 1.0 / 64.0;
        let hits = (0..n).filter(|_| s.bernoulli(q)).count() as f64;
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((hits / n as f64 - q).abs() <= 3.0 * se);
        let hits = (0..n).filter(|_| s.bernoulli_ratio(1, 64)).count() as f64;
        assert!((hits / n as f64 - q).abs() <= 3.0 * se);
    }

    #[test]
    fn geometric_mean() {
        let mut s = Stream::new(5);
        let q = 0.01;
        let n = 100_000;
        let sum: u64 = (0..n).map(|_| s.geometric(q)).sum();
        let mean = sum as f64 / n as f64;
        let expect = (1.0 - q) / q;
        let sd = ((1.0 - q) / (q * q)).sqrt() / (n as f64).sqrt();
        assert!((mean - expect).abs() < 4.0 * sd, "{mean} vs {expect}");
        assert_eq!(s.geometric(1.0), 0);
        assert_eq!(s.geometric(0.0), u64::MAX);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut s = Stream::for_role(9, Role::Protocol, 4);
            (0..8).map(|_| s.uniform(0, 1 << 40)).collect()
        };
        let b: Vec<u64> = {
            let mut s = Stream::for_role(9, Role::Protocol, 4);
            (0..8).map(|_| s.uniform(0, 1 << 40)).collect()
        };
        let c: Vec<u64> = {
            let mut s = Stream::for_role(9, Role::Harness, 4);
            (0..8).map(|_| s.uniform(0, 1 << 40)).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
    }
}

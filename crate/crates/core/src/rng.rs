//! Seeded random streams handed to behaviors.
//!
//! Each `(entity, level, period)` triple gets its own ChaCha stream whose seed
//! is the SHA-256 of the run seed and the triple, so draws never depend on
//! the order in which the engine calls behaviors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::state::{AgentId, LevelId};
use crate::time::Interval;

pub type BehaviorRng = ChaCha8Rng;

/// Owner of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamOwner {
    Agent(AgentId),
    Environment,
    Reaction,
}

pub fn stream(
    seed: u64,
    owner: StreamOwner,
    level: Option<&LevelId>,
    period: &Interval,
) -> BehaviorRng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    match owner {
        StreamOwner::Agent(a) => {
            h.update([0u8]);
            h.update(a.0.to_le_bytes());
        }
        StreamOwner::Environment => h.update([1u8]),
        StreamOwner::Reaction => h.update([2u8]),
    }
    match level {
        Some(l) => {
            h.update([1u8]);
            h.update((l.as_str().len() as u64).to_le_bytes());
            h.update(l.as_str().as_bytes());
        }
        None => h.update([0u8]),
    }
    for t in [period.lower, period.upper] {
        h.update(t.numer().to_le_bytes());
        h.update(t.denom().to_le_bytes());
    }
    let mut key = [0u8; 32];
    key.copy_from_slice(&h.finalize());
    ChaCha8Rng::from_seed(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Timestamp;
    use rand::Rng;

    fn p(lower: i64, upper: i64) -> Interval {
        Interval {
            lower: Timestamp::from_integer(lower),
            upper: Timestamp::from_integer(upper),
        }
    }

    #[test]
    fn streams_are_stable_and_distinct() {
        let a = LevelId::from("A");
        let draw = |seed, owner, period: &Interval| {
            stream(seed, owner, Some(&a), period).random::<u64>()
        };
        let base = draw(7, StreamOwner::Agent(AgentId(1)), &p(0, 1));
        assert_eq!(base, draw(7, StreamOwner::Agent(AgentId(1)), &p(0, 1)));
        assert_ne!(base, draw(8, StreamOwner::Agent(AgentId(1)), &p(0, 1)));
        assert_ne!(base, draw(7, StreamOwner::Agent(AgentId(2)), &p(0, 1)));
        assert_ne!(base, draw(7, StreamOwner::Environment, &p(0, 1)));
        assert_ne!(base, draw(7, StreamOwner::Agent(AgentId(1)), &p(1, 2)));
        assert_ne!(
            base,
            stream(7, StreamOwner::Agent(AgentId(1)), None, &p(0, 1)).random::<u64>()
        );
    }
}

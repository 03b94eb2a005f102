//! The four-part agent state used by the composed protocols, and its packed
//! 64-bit key.

use crate::clock::ClockPart;
use crate::engine::PackedState;
use crate::leader_election::{Coin, LeaderLocal};
use crate::majority::MajorityLocal;
use crate::slow::{SlowCongruenceState, SlowParityState};
use crate::weights::WeightLocal;

/// Version of the key layout below. Bump on any change to it.
pub const STATE_LAYOUT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Leader,
    Follower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalPart {
    pub role: Role,
    /// Committed weight index.
    pub weight: Option<u8>,
    /// Member of the heaviest completed weight.
    pub top: bool,
    /// Member of a weight currently counted in Y.
    pub on_scale: bool,
    /// Set once a balance comparison ended in a tie.
    pub output: bool,
    /// Switched to the fallback protocol.
    pub panic: bool,
}

impl GlobalPart {
    pub const FOLLOWER: Self = Self {
        role: Role::Follower,
        weight: None,
        top: false,
        on_scale: false,
        output: false,
        panic: false,
    };

    pub const LEADER: Self = Self {
        role: Role::Leader,
        ..Self::FOLLOWER
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocalPart {
    Idle,
    Election(LeaderLocal),
    Weights(WeightLocal),
    Majority(MajorityLocal),
    Done,
    SlowParity(SlowParityState),
    SlowCongruence(SlowCongruenceState),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompoundState {
    /// Member of X. Never changes.
    pub input: bool,
    pub global: GlobalPart,
    pub clock: ClockPart,
    pub local: LocalPart,
}

impl CompoundState {
    pub fn is_leader(&self) -> bool {
        self.global.role == Role::Leader
    }
}

// Key layout, least significant bit first:
//   0       input
//   1       role (1 = leader)
//   2..8    weight index, 63 = none
//   8..12   top, on_scale, output, panic
//   12..24  round
//   24..36  counter
//   36..40  local tag
//   40..64  local payload
const NO_WEIGHT: u64 = 63;

fn bit(x: u64, i: u32) -> bool {
    x >> i & 1 == 1
}

fn field(x: u64, lo: u32, width: u32) -> u64 {
    x >> lo & ((1 << width) - 1)
}

fn pack_local(l: LocalPart) -> (u64, u64) {
    match l {
        LocalPart::Idle => (0, 0),
        LocalPart::Election(e) => {
            let coin = match e.coin {
                None => 0,
                Some(Coin::Heads) => 1,
                Some(Coin::Tails) => 2,
            };
            let heard = e.heard_heads.map_or(0, |r| 1 | u64::from(r) << 1);
            (1, coin | heard << 2)
        }
        LocalPart::Weights(w) => {
            let (tag, a, b) = match w {
                WeightLocal::Free => (0, 0, 0),
                WeightLocal::Leader => (1, 0, 0),
                WeightLocal::Seed(q) => (2, q, 0),
                WeightLocal::Member { weight, index } => (3, weight, index),
                WeightLocal::Committed => (4, 0, 0),
                WeightLocal::Failed(j) => (5, j, 0),
                WeightLocal::Certified(j) => (6, j, 0),
                WeightLocal::End => (7, 0, 0),
            };
            (2, tag | u64::from(a) << 3 | u64::from(b) << 11)
        }
        LocalPart::Majority(m) => {
            let (tag, v) = match m {
                MajorityLocal::Value(v) => (0, (v + 2) as u64),
                MajorityLocal::XWin => (1, 0),
                MajorityLocal::YWin => (2, 0),
                MajorityLocal::XFinal => (3, 0),
                MajorityLocal::YFinal => (4, 0),
                MajorityLocal::Tie => (5, 0),
            };
            (3, tag | v << 3)
        }
        LocalPart::Done => (4, 0),
        LocalPart::SlowParity(s) => (5, s.pack()),
        LocalPart::SlowCongruence(s) => (6, s.pack()),
    }
}

fn unpack_local(tag: u64, p: u64) -> LocalPart {
    match tag {
        0 => LocalPart::Idle,
        1 => LocalPart::Election(LeaderLocal {
            coin: match p & 3 {
                0 => None,
                1 => Some(Coin::Heads),
                _ => Some(Coin::Tails),
            },
            heard_heads: bit(p, 2).then(|| field(p, 3, 12) as u16),
        }),
        2 => {
            let a = field(p, 3, 8) as u8;
            let b = field(p, 11, 8) as u8;
            LocalPart::Weights(match p & 7 {
                0 => WeightLocal::Free,
                1 => WeightLocal::Leader,
                2 => WeightLocal::Seed(a),
                3 => WeightLocal::Member { weight: a, index: b },
                4 => WeightLocal::Committed,
                5 => WeightLocal::Failed(a),
                6 => WeightLocal::Certified(a),
                _ => WeightLocal::End,
            })
        }
        3 => LocalPart::Majority(match p & 7 {
            0 => MajorityLocal::Value(field(p, 3, 3) as i8 - 2),
            1 => MajorityLocal::XWin,
            2 => MajorityLocal::YWin,
            3 => MajorityLocal::XFinal,
            4 => MajorityLocal::YFinal,
            _ => MajorityLocal::Tie,
        }),
        4 => LocalPart::Done,
        5 => LocalPart::SlowParity(SlowParityState::unpack(p)),
        _ => LocalPart::SlowCongruence(SlowCongruenceState::unpack(p)),
    }
}

impl PackedState for CompoundState {
    fn pack(self) -> u64 {
        let g = self.global;
        debug_assert!(g.weight.map_or(true, |w| u64::from(w) < NO_WEIGHT));
        debug_assert!(self.clock.round < 1 << 12 && self.clock.counter < 1 << 12);
        let (tag, payload) = pack_local(self.local);
        u64::from(self.input)
            | u64::from(g.role == Role::Leader) << 1
            | g.weight.map_or(NO_WEIGHT, u64::from) << 2
            | u64::from(g.top) << 8
            | u64::from(g.on_scale) << 9
            | u64::from(g.output) << 10
            | u64::from(g.panic) << 11
            | u64::from(self.clock.round) << 12
            | u64::from(self.clock.counter) << 24
            | tag << 36
            | payload << 40
    }

    fn unpack(key: u64) -> Self {
        let w = field(key, 2, 6);
        CompoundState {
            input: bit(key, 0),
            global: GlobalPart {
                role: if bit(key, 1) { Role::Leader } else { Role::Follower },
                weight: (w != NO_WEIGHT).then_some(w as u8),
                top: bit(key, 8),
                on_scale: bit(key, 9),
                output: bit(key, 10),
                panic: bit(key, 11),
            },
            clock: ClockPart {
                round: field(key, 12, 12) as u16,
                counter: field(key, 24, 12) as u16,
            },
            local: unpack_local(field(key, 36, 4), key >> 40),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn pack_round_trips(s in strategies::compound()) {
            prop_assert_eq!(CompoundState::unpack(s.pack()), s);
        }

        #[test]
        fn pack_is_injective(a in strategies::compound(), b in strategies::compound()) {
            prop_assert_eq!(a == b, a.pack() == b.pack());
        }
    }
}

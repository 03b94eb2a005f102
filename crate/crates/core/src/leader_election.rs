//! Leader election by repeated coin flips. In every round each remaining
//! leader flips a coin, heads spread by epidemic, and a leader that flipped
//! tails and hears of heads in the same round steps down. After the phase,
//! two leaders meeting is an anomaly.

use serde::Serialize;

use crate::engine::state::{CompoundState, Role};
use crate::engine::Configuration;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coin {
    Heads,
    Tails,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeaderLocal {
    pub coin: Option<Coin>,
    /// Latest round for which a heads flip is known.
    pub heard_heads: Option<u16>,
}

impl LeaderLocal {
    /// State at entry to a new round: no coin, stale heads knowledge dropped.
    pub fn on_round_entry(self, round: u16) -> Self {
        Self {
            coin: None,
            heard_heads: self.heard_heads.filter(|&r| r >= round),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LeaderParams {
    pub d: u32,
}

impl LeaderParams {
    pub fn new(d: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParams("leader-election multiplier d must be positive".into()));
        }
        Ok(Self { d })
    }

    pub fn rounds(&self, log: u32) -> u32 {
        self.d * log
    }
}

/// One side of an election interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LeAgent {
    pub role: Role,
    pub local: LeaderLocal,
    pub round: u16,
    /// The agent entered `round` in this very interaction; its coin is fixed
    /// at its next one.
    pub entered: bool,
}

/// Same-round election step for two agents in round `ini.round`.
pub fn le_transition(mut ini: LeAgent, mut res: LeAgent) -> (LeAgent, LeAgent) {
    debug_assert_eq!(ini.round, res.round);
    let r = ini.round;
    for (agent, coin) in [(&mut ini, Coin::Heads), (&mut res, Coin::Tails)] {
        if agent.role == Role::Leader && agent.local.coin.is_none() && !agent.entered {
            agent.local.coin = Some(coin);
            if coin == Coin::Heads {
                agent.local.heard_heads = Some(r);
            }
        }
    }
    if ini.local.heard_heads == Some(r) || res.local.heard_heads == Some(r) {
        ini.local.heard_heads = Some(r);
        res.local.heard_heads = Some(r);
    }
    for agent in [&mut ini, &mut res] {
        if agent.role == Role::Leader
            && agent.local.coin == Some(Coin::Tails)
            && agent.local.heard_heads == Some(r)
        {
            agent.role = Role::Follower;
        }
    }
    (ini, res)
}

pub fn count_leaders(config: &Configuration<CompoundState>) -> u64 {
    config
        .states()
        .iter()
        .filter(|s| !s.global.panic && s.global.role == Role::Leader)
        .count() as u64
}

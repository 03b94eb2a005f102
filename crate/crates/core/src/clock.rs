//! Leader-driven round clock. A leader counts the interactions it initiates;
//! after c·LOG of them it moves to the next round, and rounds spread by
//! epidemic adoption. Agents more than one round apart signal an anomaly.

use serde::Serialize;

use crate::engine::state::CompoundState;
use crate::engine::Configuration;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockPart {
    pub round: u16,
    /// Interactions initiated in this round; always 0 for followers.
    pub counter: u16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClockParams {
    pub log: u32,
    pub c: u32,
    /// Number of rounds of the composed protocol. Leaders stop counting in
    /// the last round, `total_rounds - 1`.
    pub total_rounds: u32,
}

/// Largest counter value the packed state layout can hold.
pub const MAX_ROUND_LEN: u32 = 1 << 12;
/// Largest round count the packed state layout can hold.
pub const MAX_ROUNDS: u32 = 1 << 12;

/// ceil(log2 n) for n >= 1.
pub fn ceil_log2(n: usize) -> u32 {
    usize::BITS - (n.max(1) - 1).leading_zeros()
}

/// Accepts LOG when 2^LOG >= n and LOG is within a factor three of log2 n.
pub fn check_log_estimate(n: usize, log: u32) -> Result<()> {
    let lo = ceil_log2(n);
    if log == 0 || log < lo || log > 3 * lo.max(1) {
        return Err(Error::InvalidParams(format!(
            "LOG estimate {log} outside [{lo}, {}] for n = {n}",
            3 * lo.max(1)
        )));
    }
    Ok(())
}

impl ClockParams {
    pub fn new(log: u32, c: u32, total_rounds: u32) -> Result<Self> {
        if log == 0 {
            return Err(Error::InvalidParams("LOG must be positive".into()));
        }
        if c == 0 {
            return Err(Error::InvalidParams("clock constant c must be positive".into()));
        }
        if c * log >= MAX_ROUND_LEN {
            return Err(Error::InvalidParams(format!(
                "round length c*LOG = {} exceeds {}",
                c * log,
                MAX_ROUND_LEN - 1
            )));
        }
        if total_rounds == 0 || total_rounds > MAX_ROUNDS {
            return Err(Error::InvalidParams(format!("round count {total_rounds} out of range")));
        }
        Ok(Self {
            log,
            c,
            total_rounds,
        })
    }

    /// Interactions a leader initiates per round.
    pub fn round_len(&self) -> u16 {
        (self.c * self.log) as u16
    }

    pub fn final_round(&self) -> u16 {
        (self.total_rounds - 1) as u16
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClockOutcome {
    pub initiator: ClockPart,
    pub responder: ClockPart,
    pub anomaly: bool,
    pub initiator_entered: bool,
    pub responder_entered: bool,
}

/// One clock step: the initiating leader counts, then rounds are compared.
/// A gap of one is closed by the lower agent adopting the higher round; a
/// larger gap is an anomaly and leaves both parts unchanged.
pub fn clock_tick(
    ini: ClockPart,
    ini_leader: bool,
    res: ClockPart,
    res_leader: bool,
    p: &ClockParams,
) -> ClockOutcome {
    let mut out = ClockOutcome {
        initiator: ini,
        responder: res,
        anomaly: false,
        initiator_entered: false,
        responder_entered: false,
    };
    if ini_leader && ini.round < p.final_round() {
        out.initiator.counter += 1;
        if out.initiator.counter >= p.round_len() {
            out.initiator.counter = 0;
            out.initiator.round += 1;
            out.initiator_entered = true;
        }
    }
    let (a, b) = (out.initiator.round, out.responder.round);
    if a.abs_diff(b) >= 2 {
        return ClockOutcome {
            initiator: ini,
            responder: res,
            anomaly: true,
            initiator_entered: false,
            responder_entered: false,
        };
    }
    if a == b + 1 {
        out.responder.round = a;
        if res_leader {
            out.responder.counter = 0;
        }
        out.responder_entered = true;
    } else if b == a + 1 {
        out.initiator.round = b;
        out.initiator.counter = 0;
        out.initiator_entered = true;
    }
    out
}

/// Largest round minus smallest round over the population.
pub fn max_round_skew(config: &Configuration<CompoundState>) -> u32 {
    round_skew(config.states().iter().filter(|s| !s.global.panic).map(|s| s.clock.round))
}

pub(crate) fn round_skew(rounds: impl Iterator<Item = u16>) -> u32 {
    let (lo, hi) = rounds.fold((u16::MAX, 0u16), |(lo, hi), r| (lo.min(r), hi.max(r)));
    u32::from(hi.saturating_sub(lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ClockParams {
        ClockParams::new(4, 2, 100).unwrap()
    }

    fn at(round: u16, counter: u16) -> ClockPart {
        ClockPart { round, counter }
    }

    #[test]
    fn leader_advances_after_round_length() {
        let p = params();
        let o = clock_tick(at(3, 7), true, at(3, 0), false, &p);
        assert_eq!(o.initiator, at(4, 0));
        assert!(o.initiator_entered);
        // The follower is now one round behind and adopts at once.
        assert_eq!(o.responder, at(4, 0));
        assert!(o.responder_entered);
        assert!(!o.anomaly);
    }

    #[test]
    fn counting_only_by_initiating_leader() {
        let p = params();
        let o = clock_tick(at(3, 2), true, at(3, 0), false, &p);
        assert_eq!(o.initiator, at(3, 3));
        let o = clock_tick(at(3, 0), false, at(3, 2), true, &p);
        assert_eq!(o.responder, at(3, 2));
    }

    #[test]
    fn adoption_and_anomaly() {
        let p = params();
        let o = clock_tick(at(5, 0), false, at(4, 0), false, &p);
        assert_eq!((o.initiator.round, o.responder.round), (5, 5));
        assert!(o.responder_entered && !o.initiator_entered);
        let o = clock_tick(at(4, 0), false, at(5, 0), false, &p);
        assert_eq!((o.initiator.round, o.responder.round), (5, 5));
        let o = clock_tick(at(7, 0), false, at(5, 0), false, &p);
        assert!(o.anomaly);
        assert_eq!((o.initiator, o.responder), (at(7, 0), at(5, 0)));
    }

    #[test]
    fn ticking_into_a_two_round_gap_is_an_anomaly() {
        let p = params();
        let o = clock_tick(at(5, 7), true, at(4, 0), false, &p);
        assert!(o.anomaly);
    }

    #[test]
    fn adopting_leader_resets_counter() {
        let p = params();
        let o = clock_tick(at(6, 1), true, at(5, 5), true, &p);
        assert_eq!(o.responder, at(6, 0));
    }

    #[test]
    fn leaders_stop_in_final_round() {
        let p = ClockParams::new(4, 2, 10).unwrap();
        let o = clock_tick(at(9, 0), true, at(9, 0), false, &p);
        assert_eq!(o.initiator, at(9, 0));
    }

    #[test]
    fn log_estimate_bounds() {
        assert!(check_log_estimate(4096, 12).is_ok());
        assert!(check_log_estimate(4096, 36).is_ok());
        assert!(check_log_estimate(4096, 11).is_err());
        assert!(check_log_estimate(4096, 37).is_err());
        assert!(check_log_estimate(4096, 0).is_err());
        assert!(check_log_estimate(1000, 10).is_ok());
        assert!(ClockParams::new(0, 4, 10).is_err());
        assert!(ClockParams::new(12, 0, 10).is_err());
        assert!(ClockParams::new(12, 400, 10).is_err());
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4096), 12);
        assert_eq!(ceil_log2(4097), 13);
    }

    #[test]
    fn skew() {
        assert_eq!(round_skew([0u16, 0, 0].into_iter()), 0);
        assert_eq!(round_skew([1u16, 0, 0].into_iter()), 1);
    }
}

//! Exact majority with tie detection. Values are averaged within a round and
//! doubled on entry to the next; a value reaching ±2 becomes a pending win
//! that spreads, and the leader certifies it on the following round entry.
//! If nothing is won by the last round the leader declares a tie.

use crate::engine::{
    AnomalyKind, Configuration, OutputValue, PackedState, Protocol, Transition, Verdict,
};
use crate::slow::uniform_output;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MajorityLocal {
    Value(i8),
    XWin,
    YWin,
    /// Certified: |X| > |Y|.
    XFinal,
    /// Certified: |X| < |Y|.
    YFinal,
    Tie,
}

impl MajorityLocal {
    pub fn is_certified(self) -> bool {
        matches!(self, Self::XFinal | Self::YFinal | Self::Tie)
    }

    pub fn is_pending_win(self) -> bool {
        matches!(self, Self::XWin | Self::YWin)
    }

    pub fn verdict(self) -> Verdict {
        match self {
            Self::XFinal => Verdict::XWins,
            Self::YFinal => Verdict::YWins,
            Self::Tie => Verdict::Tie,
            _ => Verdict::Unresolved,
        }
    }

    /// All values the protocol can hold.
    pub fn all() -> Vec<Self> {
        let mut v: Vec<_> = (-2..=2).map(Self::Value).collect();
        v.extend([Self::XWin, Self::YWin, Self::XFinal, Self::YFinal, Self::Tie]);
        v
    }
}

pub fn maj_init(in_x: bool, in_y: bool) -> MajorityLocal {
    MajorityLocal::Value(match (in_x, in_y) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    })
}

/// Floor of the mean to the first agent, ceiling to the second.
pub fn maj_average(a: i8, b: i8) -> (i8, i8) {
    let s = i16::from(a) + i16::from(b);
    (s.div_euclid(2) as i8, (s - s.div_euclid(2)) as i8)
}

/// Where an agent stands in a majority phase of `len` rounds (len = LOG + 4).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhasePosition {
    /// One-based round within the phase.
    pub round: u32,
    pub len: u32,
}

impl PhasePosition {
    pub fn is_last(&self) -> bool {
        self.round == self.len
    }
}

/// Entry into round `pos.round >= 2` of a phase. `partner` is the state of
/// the agent met on entry, which is already in the new round; the leader
/// enters first and so has no meaningful partner.
pub fn maj_on_round_entry(
    state: MajorityLocal,
    is_leader: bool,
    pos: PhasePosition,
    partner: Option<MajorityLocal>,
) -> Result<MajorityLocal, AnomalyKind> {
    use MajorityLocal::*;
    let doubled = |v: i8| match v {
        2 => XWin,
        -2 => YWin,
        v => Value(2 * v),
    };
    if is_leader {
        return Ok(match state {
            XWin => XFinal,
            YWin => YFinal,
            Value(_) if pos.is_last() => Tie,
            Value(v) => doubled(v),
            certified => certified,
        });
    }
    let partner = partner.unwrap_or(state);
    match partner {
        XFinal => match state {
            XWin | XFinal => Ok(XFinal),
            _ => Err(AnomalyKind::Protocol),
        },
        YFinal => match state {
            YWin | YFinal => Ok(YFinal),
            _ => Err(AnomalyKind::Protocol),
        },
        Tie => match state {
            Value(_) | Tie => Ok(Tie),
            _ => Err(AnomalyKind::Protocol),
        },
        _ if state.is_pending_win() || state.is_certified() || pos.is_last() => {
            Err(AnomalyKind::Protocol)
        }
        _ => match state {
            Value(v) => Ok(doubled(v)),
            _ => unreachable!(),
        },
    }
}

/// Same-round rules: averaging between values and the three epidemics.
pub fn maj_epidemic(a: MajorityLocal, b: MajorityLocal) -> (MajorityLocal, MajorityLocal) {
    use MajorityLocal::*;
    let infects = |w: MajorityLocal, v: MajorityLocal| match (w, v) {
        (XWin, Value(0..=2)) => true,
        (YWin, Value(-2..=0)) => true,
        (Tie, Value(_)) => true,
        _ => false,
    };
    match (a, b) {
        (Value(x), Value(y)) => {
            let (p, q) = maj_average(x, y);
            if (p == x && q == y) || (p == y && q == x) {
                (a, b)
            } else {
                (Value(p), Value(q))
            }
        }
        _ if infects(a, b) => (a, a),
        _ if infects(b, a) => (b, b),
        _ => (a, b),
    }
}

/// Verdict of a finished phase: the common certified value, else unresolved.
pub fn maj_verdict(locals: impl IntoIterator<Item = MajorityLocal>) -> Verdict {
    let mut it = locals.into_iter();
    let Some(first) = it.next() else {
        return Verdict::Unresolved;
    };
    if first.is_certified() && it.all(|s| s == first) {
        first.verdict()
    } else {
        Verdict::Unresolved
    }
}

/// Load-balancing drill: agents hold integer loads and only average.
#[derive(Clone, Copy, Debug, Default)]
pub struct AveragingDrill;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Load(pub i64);

impl PackedState for Load {
    fn pack(self) -> u64 {
        self.0 as u64
    }

    fn unpack(key: u64) -> Self {
        Load(key as i64)
    }
}

impl AveragingDrill {
    /// Half the agents at 0 and half at `delta`.
    pub fn initial(n: usize, delta: i64) -> Vec<Load> {
        (0..n).map(|i| Load(if i % 2 == 0 { 0 } else { delta })).collect()
    }

    pub fn discrepancy(config: &Configuration<Load>) -> u64 {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for &k in config.counts().keys() {
            let v = Load::unpack(k).0;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi.abs_diff(lo)
    }
}

impl Protocol for AveragingDrill {
    type State = Load;

    fn transition(&self, a: Load, b: Load) -> Transition<Load> {
        let s = a.0 + b.0;
        let lo = s.div_euclid(2);
        let (p, q) = (lo, s - lo);
        if (p == a.0 && q == b.0) || (p == b.0 && q == a.0) {
            Transition::new(a, b)
        } else {
            Transition::new(Load(p), Load(q))
        }
    }

    fn output(&self, config: &Configuration<Load>) -> Option<OutputValue> {
        Some(OutputValue::Discrepancy(Self::discrepancy(config)))
    }
}

/// Output helper for phases read over a whole configuration.
pub fn verdict_output(locals: impl Iterator<Item = MajorityLocal>) -> Option<OutputValue> {
    uniform_output(locals.map(|l| OutputValue::Verdict(l.verdict())))
        .filter(|v| *v != OutputValue::Verdict(Verdict::Unresolved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use MajorityLocal::*;

    const MID: PhasePosition = PhasePosition { round: 3, len: 16 };
    const LAST: PhasePosition = PhasePosition { round: 16, len: 16 };

    #[test]
    fn init_examples() {
        assert_eq!(maj_init(true, false), Value(1));
        assert_eq!(maj_init(false, true), Value(-1));
        assert_eq!(maj_init(true, true), Value(0));
        assert_eq!(maj_init(false, false), Value(0));
    }

    #[test]
    fn averaging_examples() {
        assert_eq!(maj_average(1, -1), (0, 0));
        assert_eq!(maj_average(2, 1), (1, 2));
        assert_eq!(maj_average(-2, 1), (-1, 0));
        assert_eq!(maj_epidemic(Value(1), Value(-1)), (Value(0), Value(0)));
        assert_eq!(maj_epidemic(Value(1), Value(0)), (Value(1), Value(0)));
        assert_eq!(maj_epidemic(Value(0), Value(1)), (Value(0), Value(1)));
        assert_eq!(maj_epidemic(Value(1), Value(1)), (Value(1), Value(1)));
    }

    #[test]
    fn epidemic_examples() {
        assert_eq!(maj_epidemic(XWin, Value(2)), (XWin, XWin));
        assert_eq!(maj_epidemic(XWin, Value(-1)), (XWin, Value(-1)));
        assert_eq!(maj_epidemic(Value(0), YWin), (YWin, YWin));
        assert_eq!(maj_epidemic(Tie, Value(0)), (Tie, Tie));
        assert_eq!(maj_epidemic(XWin, YWin), (XWin, YWin));
    }

    #[test]
    fn doubling_then_win() {
        assert_eq!(maj_on_round_entry(Value(1), false, MID, Some(Value(0))), Ok(Value(2)));
        assert_eq!(maj_on_round_entry(Value(2), false, MID, Some(Value(0))), Ok(XWin));
        assert_eq!(maj_on_round_entry(Value(-2), true, MID, None), Ok(YWin));
        assert_eq!(maj_on_round_entry(Value(0), true, MID, None), Ok(Value(0)));
    }

    #[test]
    fn leader_certifies_and_declares_tie() {
        assert_eq!(maj_on_round_entry(XWin, true, MID, None), Ok(XFinal));
        assert_eq!(maj_on_round_entry(YWin, true, MID, None), Ok(YFinal));
        assert_eq!(maj_on_round_entry(Value(0), true, LAST, None), Ok(Tie));
        assert_eq!(maj_on_round_entry(Value(-2), true, LAST, None), Ok(Tie));
        assert_eq!(maj_on_round_entry(XFinal, true, LAST, None), Ok(XFinal));
    }

    #[test]
    fn followers_copy_certified_partner() {
        assert_eq!(maj_on_round_entry(XWin, false, MID, Some(XFinal)), Ok(XFinal));
        assert_eq!(maj_on_round_entry(XFinal, false, MID, Some(XFinal)), Ok(XFinal));
        assert_eq!(maj_on_round_entry(Value(1), false, LAST, Some(Tie)), Ok(Tie));
        assert_eq!(maj_on_round_entry(Tie, false, LAST, Some(Tie)), Ok(Tie));
    }

    #[test]
    fn anomalies_on_entry() {
        let bad = Err(AnomalyKind::Protocol);
        // Disagreeing with the leader's certified value.
        assert_eq!(maj_on_round_entry(Value(1), false, MID, Some(XFinal)), bad);
        assert_eq!(maj_on_round_entry(YWin, false, MID, Some(XFinal)), bad);
        // A pending win that the leader did not certify.
        assert_eq!(maj_on_round_entry(XWin, false, MID, Some(Value(0))), bad);
        // A pending win at the tie round.
        assert_eq!(maj_on_round_entry(XWin, false, LAST, Some(Tie)), bad);
        assert_eq!(maj_on_round_entry(Value(0), false, LAST, Some(Value(0))), bad);
    }

    #[test]
    fn verdicts() {
        assert_eq!(maj_verdict([XFinal; 3]), Verdict::XWins);
        assert_eq!(maj_verdict([YFinal; 3]), Verdict::YWins);
        assert_eq!(maj_verdict([Tie; 3]), Verdict::Tie);
        assert_eq!(maj_verdict([Tie, XFinal]), Verdict::Unresolved);
        assert_eq!(maj_verdict([XWin, XWin]), Verdict::Unresolved);
    }

    #[test]
    fn averaging_drill_settles() {
        use crate::engine::run_trial;
        let r = run_trial(&AveragingDrill, AveragingDrill::initial(64, 20), 2, 10_000_000).unwrap();
        assert!(r.silent);
        let Some(OutputValue::Discrepancy(d)) = r.output else { panic!() };
        assert!(d <= 1);
    }
}

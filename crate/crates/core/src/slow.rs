//! Always-correct fallback protocols: four-state slow parity and the slow
//! m-congruence protocol built on a mass sequence.

use std::fmt;

use serde::Serialize;

use crate::engine::{Configuration, OutputValue, PackedState, Protocol, Transition};
use crate::error::{Error, Result};

/// Slow parity: a leader carries the parity of the inputs it has absorbed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlowParityState {
    L0,
    L1,
    F0,
    F1,
}

impl SlowParityState {
    pub fn is_leader(self) -> bool {
        matches!(self, Self::L0 | Self::L1)
    }

    pub fn bit(self) -> u8 {
        match self {
            Self::L0 | Self::F0 => 0,
            Self::L1 | Self::F1 => 1,
        }
    }

    pub fn leader(bit: u8) -> Self {
        if bit % 2 == 0 {
            Self::L0
        } else {
            Self::L1
        }
    }

    pub fn follower(bit: u8) -> Self {
        if bit % 2 == 0 {
            Self::F0
        } else {
            Self::F1
        }
    }

    pub const ALL: [Self; 4] = [Self::L0, Self::L1, Self::F0, Self::F1];
}

impl fmt::Display for SlowParityState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let role = if self.is_leader() { 'L' } else { 'F' };
        write!(f, "{role}_{}", self.bit())
    }
}

pub fn slow_parity_init(in_x: bool) -> SlowParityState {
    if in_x {
        SlowParityState::L1
    } else {
        SlowParityState::F0
    }
}

pub fn slow_parity_transition(
    a: SlowParityState,
    b: SlowParityState,
) -> (SlowParityState, SlowParityState) {
    match (a.is_leader(), b.is_leader()) {
        (true, true) => (
            SlowParityState::leader(a.bit() + b.bit()),
            SlowParityState::F0,
        ),
        (true, false) => (a, SlowParityState::follower(a.bit())),
        (false, true) => (SlowParityState::follower(b.bit()), b),
        (false, false) => (a, b),
    }
}

pub fn slow_parity_output(s: SlowParityState) -> OutputValue {
    if s.bit() == 0 {
        OutputValue::Even
    } else {
        OutputValue::Odd
    }
}

/// Standalone slow parity protocol.
#[derive(Clone, Copy, Debug, Default)]
pub struct SlowParity;

impl SlowParity {
    pub fn initial(n: usize, x: usize) -> Vec<SlowParityState> {
        (0..n).map(|i| slow_parity_init(i < x)).collect()
    }
}

impl PackedState for SlowParityState {
    fn pack(self) -> u64 {
        self as u64
    }

    fn unpack(key: u64) -> Self {
        Self::ALL[key as usize]
    }
}

impl Protocol for SlowParity {
    type State = SlowParityState;

    fn transition(&self, a: SlowParityState, b: SlowParityState) -> Transition<SlowParityState> {
        let (a, b) = slow_parity_transition(a, b);
        Transition::new(a, b)
    }

    fn output(&self, config: &Configuration<SlowParityState>) -> Option<OutputValue> {
        uniform_output(config.states().iter().map(|&s| slow_parity_output(s)))
    }
}

pub(crate) fn uniform_output(mut it: impl Iterator<Item = OutputValue>) -> Option<OutputValue> {
    let first = it.next()?;
    it.all(|o| o == first).then_some(first)
}

/// Masses m_0 = 1, ..., m_k = m where each step doubles or adds one,
/// extended beyond k by m_{k+i} = m * 2^i.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MassSequence {
    m: u64,
    masses: Vec<u64>,
    /// `doubling[i]` tells how m_i was formed from m_{i-1}; entry 0 is unused.
    doubling: Vec<bool>,
}

/// Sequence from the binary expansion of m: after the leading one, each bit
/// doubles and each set bit then adds one.
pub fn build_mass_sequence(m: u64) -> Result<MassSequence> {
    if m < 2 {
        return Err(Error::InvalidModulus(m));
    }
    let mut masses = vec![1u64];
    let mut doubling = vec![false];
    let top = 63 - m.leading_zeros();
    for bit in (0..top).rev() {
        let last = *masses.last().unwrap();
        masses.push(last * 2);
        doubling.push(true);
        if m >> bit & 1 == 1 {
            masses.push(last * 2 + 1);
            doubling.push(false);
        }
    }
    debug_assert_eq!(*masses.last().unwrap(), m);
    Ok(MassSequence {
        m,
        masses,
        doubling,
    })
}

impl MassSequence {
    pub fn m(&self) -> u64 {
        self.m
    }

    /// Index of the last element, m_k = m.
    pub fn k(&self) -> usize {
        self.masses.len() - 1
    }

    pub fn masses(&self) -> &[u64] {
        &self.masses
    }

    /// m_i, including the extension past k.
    pub fn mass(&self, i: usize) -> u64 {
        match i.checked_sub(self.k()) {
            None | Some(0) => self.masses[i],
            Some(e) => self.m << e,
        }
    }

    /// Whether m_i = 2 m_{i-1}. Every step past k is a doubling.
    pub fn is_doubling(&self, i: usize) -> bool {
        assert!(i >= 1, "step 0 has no predecessor");
        i > self.k() || self.doubling[i]
    }
}

/// Opinion of an agent without mass: `T` and `t` say divisible, `f` says not.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opinion {
    StrongTrue,
    WeakTrue,
    False,
}

/// A slow-congruence agent. `Main(i)` carries mass m_i; `Aux(i)` carries
/// m_i - 1 and exists only for doubling steps i >= 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlowCongruenceState {
    Zero(Opinion),
    Main(u8),
    Aux(u8),
}

impl fmt::Display for SlowCongruenceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero(Opinion::StrongTrue) => f.write_str("(0,T)"),
            Self::Zero(Opinion::WeakTrue) => f.write_str("(0,t)"),
            Self::Zero(Opinion::False) => f.write_str("(0,f)"),
            Self::Main(i) => write!(f, "(m{i},F)"),
            Self::Aux(i) => write!(f, "(m{i}-1,F)"),
        }
    }
}

impl SlowCongruenceState {
    pub fn mass(self, seq: &MassSequence) -> u64 {
        match self {
            Self::Zero(_) => 0,
            Self::Main(i) => seq.mass(i.into()),
            Self::Aux(i) => seq.mass(i.into()) - 1,
        }
    }

    pub fn has_mass(self) -> bool {
        !matches!(self, Self::Zero(_))
    }

    /// Every state value of the protocol for this sequence.
    pub fn all(seq: &MassSequence) -> Vec<Self> {
        let mut v = vec![
            Self::Zero(Opinion::StrongTrue),
            Self::Zero(Opinion::WeakTrue),
            Self::Zero(Opinion::False),
        ];
        for i in 0..=seq.k() {
            v.push(Self::Main(i as u8));
        }
        for i in 2..=seq.k() {
            if seq.is_doubling(i) {
                v.push(Self::Aux(i as u8));
            }
        }
        v
    }
}

pub fn slow_congruence_init(in_x: bool) -> SlowCongruenceState {
    if in_x {
        SlowCongruenceState::Main(0)
    } else {
        SlowCongruenceState::Zero(Opinion::WeakTrue)
    }
}

/// The state carrying m_j - 1 for j >= 1.
fn minus_one(seq: &MassSequence, j: u8) -> SlowCongruenceState {
    debug_assert!(j >= 1);
    if j == 1 || !seq.is_doubling(j.into()) {
        SlowCongruenceState::Main(j - 1)
    } else {
        SlowCongruenceState::Aux(j)
    }
}

/// Numbered rules of the slow congruence protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CongruenceRule {
    R10,
    R20,
    R30,
    R40,
    R50,
    R60,
    R70,
    R80,
    R85,
    R90,
}

impl CongruenceRule {
    pub const ALL: [Self; 10] = [
        Self::R10,
        Self::R20,
        Self::R30,
        Self::R40,
        Self::R50,
        Self::R60,
        Self::R70,
        Self::R80,
        Self::R85,
        Self::R90,
    ];

    pub fn number(self) -> u32 {
        match self {
            Self::R10 => 10,
            Self::R20 => 20,
            Self::R30 => 30,
            Self::R40 => 40,
            Self::R50 => 50,
            Self::R60 => 60,
            Self::R70 => 70,
            Self::R80 => 80,
            Self::R85 => 85,
            Self::R90 => 90,
        }
    }
}

/// Applies `rule` with `p` in the first left-hand position and `q` in the
/// second. Returns the right-hand side if the pattern matches.
pub fn congruence_rule(
    rule: CongruenceRule,
    p: SlowCongruenceState,
    q: SlowCongruenceState,
    seq: &MassSequence,
) -> Option<(SlowCongruenceState, SlowCongruenceState)> {
    use CongruenceRule::*;
    use Opinion::*;
    use SlowCongruenceState::*;
    let k = seq.k();
    let f = Zero(False);
    match (rule, p, q) {
        (R10, Main(i), Main(j)) if i == j && usize::from(i) + 1 < k && seq.is_doubling(usize::from(i) + 1) => {
            Some((Main(i + 1), f))
        }
        (R20, Main(i), Main(0)) if usize::from(i) + 1 < k && !seq.is_doubling(usize::from(i) + 1) => {
            Some((Main(i + 1), f))
        }
        (R30, Main(i), Main(j)) if i == j && usize::from(i) + 1 == k && seq.is_doubling(k) => {
            Some((Zero(StrongTrue), Zero(StrongTrue)))
        }
        (R40, Main(i), Main(0)) if usize::from(i) + 1 == k && !seq.is_doubling(k) => {
            Some((Zero(StrongTrue), Zero(StrongTrue)))
        }
        (R50, Main(i), Main(j))
            if usize::from(i) + 1 < k && !seq.is_doubling(usize::from(i) + 1) && 0 < j && j <= i =>
        {
            Some((Main(i + 1), minus_one(seq, j)))
        }
        (R60, Aux(i1), Zero(_)) if i1 >= 2 && seq.is_doubling(i1.into()) => {
            Some((minus_one(seq, i1 - 1), Main(i1 - 1)))
        }
        (R70, Main(i), Main(j)) if usize::from(i) + 1 == k && !seq.is_doubling(k) && j > 0 => {
            Some((f, minus_one(seq, j)))
        }
        (R80, x, Zero(StrongTrue)) if x.has_mass() => Some((x, f)),
        (R85, x, Zero(WeakTrue)) if x.has_mass() => Some((x, f)),
        (R90, Zero(StrongTrue), Zero(False)) => Some((Zero(StrongTrue), Zero(WeakTrue))),
        _ => None,
    }
}

/// Fires the lowest-numbered rule whose pattern matches the pair in either
/// orientation, trying the pair as given first. Returns the rule and the new
/// (initiator, responder) states.
pub fn fire_congruence_rule(
    a: SlowCongruenceState,
    b: SlowCongruenceState,
    seq: &MassSequence,
) -> Option<(CongruenceRule, SlowCongruenceState, SlowCongruenceState)> {
    for rule in CongruenceRule::ALL {
        if let Some((x, y)) = congruence_rule(rule, a, b, seq) {
            return Some((rule, x, y));
        }
        if let Some((y, x)) = congruence_rule(rule, b, a, seq) {
            return Some((rule, x, y));
        }
    }
    None
}

pub fn slow_congruence_transition(
    a: SlowCongruenceState,
    b: SlowCongruenceState,
    seq: &MassSequence,
) -> (SlowCongruenceState, SlowCongruenceState) {
    match fire_congruence_rule(a, b, seq) {
        Some((_, x, y)) => (x, y),
        None => (a, b),
    }
}

pub fn slow_congruence_output(s: SlowCongruenceState) -> OutputValue {
    match s {
        SlowCongruenceState::Zero(Opinion::StrongTrue | Opinion::WeakTrue) => OutputValue::Divisible,
        _ => OutputValue::NotDivisible,
    }
}

pub fn total_mass<'a>(
    states: impl IntoIterator<Item = &'a SlowCongruenceState>,
    seq: &MassSequence,
) -> u64 {
    states.into_iter().map(|s| s.mass(seq)).sum()
}

/// Standalone slow m-congruence protocol.
#[derive(Clone, Debug)]
pub struct SlowCongruence {
    seq: MassSequence,
}

impl SlowCongruence {
    pub fn new(m: u64) -> Result<Self> {
        Ok(Self {
            seq: build_mass_sequence(m)?,
        })
    }

    pub fn sequence(&self) -> &MassSequence {
        &self.seq
    }

    pub fn initial(n: usize, x: usize) -> Vec<SlowCongruenceState> {
        (0..n).map(|i| slow_congruence_init(i < x)).collect()
    }
}

impl PackedState for SlowCongruenceState {
    fn pack(self) -> u64 {
        match self {
            Self::Zero(o) => o as u64,
            Self::Main(i) => 0x100 | u64::from(i),
            Self::Aux(i) => 0x200 | u64::from(i),
        }
    }

    fn unpack(key: u64) -> Self {
        let i = (key & 0xff) as u8;
        match key >> 8 {
            0 => Self::Zero([Opinion::StrongTrue, Opinion::WeakTrue, Opinion::False][i as usize]),
            1 => Self::Main(i),
            _ => Self::Aux(i),
        }
    }
}

impl Protocol for SlowCongruence {
    type State = SlowCongruenceState;

    fn transition(
        &self,
        a: SlowCongruenceState,
        b: SlowCongruenceState,
    ) -> Transition<SlowCongruenceState> {
        let (a, b) = slow_congruence_transition(a, b, &self.seq);
        Transition::new(a, b)
    }

    fn output(&self, config: &Configuration<SlowCongruenceState>) -> Option<OutputValue> {
        uniform_output(config.states().iter().map(|&s| slow_congruence_output(s)))
    }
}

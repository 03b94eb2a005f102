//! Simulation machinery: configurations, the uniform pair scheduler,
//! transition application, silence detection and time accounting.

pub mod rng;
pub mod state;

use std::fmt;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use rng::{schedule_step, RngStream};

/// Index of an agent in the population. Agents are anonymous to the
/// protocols; ids only exist for scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub usize);

/// A state type with a fixed-width integer encoding, used as the key of the
/// configuration's multiplicity map.
pub trait PackedState: Copy + Eq + fmt::Debug + Send + Sync {
    fn pack(self) -> u64;
    fn unpack(key: u64) -> Self;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnomalyKind {
    Clock,
    Protocol,
}

impl fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnomalyKind::Clock => "clock",
            AnomalyKind::Protocol => "protocol",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyEvent {
    pub kind: AnomalyKind,
    /// Zero-based index of the interaction that raised it.
    pub interaction: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    XWins,
    YWins,
    Tie,
    Unresolved,
}

/// What a protocol reports once its configuration has settled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputValue {
    Even,
    Odd,
    Divisible,
    NotDivisible,
    Leaders(u64),
    Verdict(Verdict),
    /// Index of the first weight that could not be completed.
    MaxWeight(u32),
    /// Largest minus smallest load.
    Discrepancy(u64),
}

impl fmt::Display for OutputValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputValue::Even => f.write_str("even"),
            OutputValue::Odd => f.write_str("odd"),
            OutputValue::Divisible => f.write_str("divisible"),
            OutputValue::NotDivisible => f.write_str("not-divisible"),
            OutputValue::Leaders(k) => write!(f, "leaders:{k}"),
            OutputValue::Verdict(Verdict::XWins) => f.write_str("x-wins"),
            OutputValue::Verdict(Verdict::YWins) => f.write_str("y-wins"),
            OutputValue::Verdict(Verdict::Tie) => f.write_str("tie"),
            OutputValue::Verdict(Verdict::Unresolved) => f.write_str("unresolved"),
            OutputValue::MaxWeight(j) => write!(f, "max-weight:{j}"),
            OutputValue::Discrepancy(d) => write!(f, "discrepancy:{d}"),
        }
    }
}

impl std::str::FromStr for OutputValue {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("unknown output value {s:?}");
        Ok(match s {
            "even" => OutputValue::Even,
            "odd" => OutputValue::Odd,
            "divisible" => OutputValue::Divisible,
            "not-divisible" => OutputValue::NotDivisible,
            "x-wins" => OutputValue::Verdict(Verdict::XWins),
            "y-wins" => OutputValue::Verdict(Verdict::YWins),
            "tie" => OutputValue::Verdict(Verdict::Tie),
            "unresolved" => OutputValue::Verdict(Verdict::Unresolved),
            _ => {
                let (tag, num) = s.split_once(':').ok_or_else(bad)?;
                let v: u64 = num.parse().map_err(|_| bad())?;
                match tag {
                    "leaders" => OutputValue::Leaders(v),
                    "max-weight" => OutputValue::MaxWeight(u32::try_from(v).map_err(|_| bad())?),
                    "discrepancy" => OutputValue::Discrepancy(v),
                    _ => return Err(bad()),
                }
            }
        })
    }
}

/// Result of one rule application to an ordered pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition<S> {
    pub initiator: S,
    pub responder: S,
    pub anomaly: Option<AnomalyKind>,
}

impl<S> Transition<S> {
    pub fn new(initiator: S, responder: S) -> Self {
        Self {
            initiator,
            responder,
            anomaly: None,
        }
    }

    pub fn anomaly(initiator: S, responder: S, kind: AnomalyKind) -> Self {
        Self {
            initiator,
            responder,
            anomaly: Some(kind),
        }
    }
}

/// A population protocol: a pairwise rule plus an output map.
pub trait Protocol: Sync {
    type State: PackedState;

    fn transition(&self, initiator: Self::State, responder: Self::State) -> Transition<Self::State>;

    /// The configuration's output, or `None` while agents disagree.
    fn output(&self, config: &Configuration<Self::State>) -> Option<OutputValue>;

    /// Whether this state belongs to the fallback protocol.
    fn is_fallback(&self, _state: &Self::State) -> bool {
        false
    }

    /// A rule is the identity on a pair when it changes neither state and
    /// raises nothing.
    fn is_identity(&self, a: Self::State, b: Self::State) -> bool {
        let t = self.transition(a, b);
        t.anomaly.is_none() && t.initiator == a && t.responder == b
    }
}

/// The whole population: per-agent states, their packed keys, and the
/// derived multiplicity map.
#[derive(Clone, Debug)]
pub struct Configuration<S> {
    states: Vec<S>,
    keys: Vec<u64>,
    counts: FxHashMap<u64, u32>,
}

impl<S: PackedState> Configuration<S> {
    pub fn new(states: Vec<S>) -> Result<Self> {
        if states.len() < 2 || states.len() > u32::MAX as usize {
            return Err(Error::InvalidPopulation(states.len()));
        }
        let keys: Vec<u64> = states.iter().map(|s| s.pack()).collect();
        let mut counts = FxHashMap::default();
        for &k in &keys {
            *counts.entry(k).or_insert(0) += 1;
        }
        Ok(Self {
            states,
            keys,
            counts,
        })
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, id: AgentId) -> S {
        self.states[id.0]
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    /// Packed keys, in agent order.
    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn counts(&self) -> &FxHashMap<u64, u32> {
        &self.counts
    }

    pub fn count_of(&self, s: S) -> u32 {
        self.counts.get(&s.pack()).copied().unwrap_or(0)
    }

    /// Distinct state values with their multiplicities, in key order.
    pub fn distinct(&self) -> Vec<(S, u32)> {
        let mut v: Vec<_> = self.counts.iter().map(|(&k, &c)| (k, c)).collect();
        v.sort_unstable();
        v.into_iter().map(|(k, c)| (S::unpack(k), c)).collect()
    }

    /// Replaces the state of one agent. Returns true if the new state's value
    /// was absent from the configuration before.
    pub fn set(&mut self, id: AgentId, s: S) -> bool {
        self.set_keyed(id.0, s, s.pack())
    }

    fn set_keyed(&mut self, i: usize, s: S, key: u64) -> bool {
        let old = self.keys[i];
        if old == key {
            return false;
        }
        self.states[i] = s;
        self.keys[i] = key;
        match self.counts.get_mut(&old) {
            Some(c) if *c > 1 => *c -= 1,
            _ => {
                self.counts.remove(&old);
            }
        }
        let slot = self.counts.entry(key).or_insert(0);
        *slot += 1;
        *slot == 1
    }

    /// Recomputes keys and multiplicities from the state array and compares.
    pub fn is_consistent(&self) -> bool {
        let mut fresh: FxHashMap<u64, u32> = FxHashMap::default();
        for (s, &k) in self.states.iter().zip(&self.keys) {
            if s.pack() != k {
                return false;
            }
            *fresh.entry(k).or_insert(0) += 1;
        }
        let total: u64 = self.counts.values().map(|&c| u64::from(c)).sum();
        fresh == self.counts && total == self.states.len() as u64
    }
}

/// Direct-mapped memo of the transition function on packed keys. Rules are
/// pure, so a hit returns exactly what the rule would.
struct Memo {
    slots: Vec<MemoSlot>,
    shift: u32,
}

#[derive(Clone, Copy, Default)]
struct MemoSlot {
    a: u64,
    b: u64,
    x: u64,
    y: u64,
    /// 0 empty, 1 no anomaly, 2 clock, 3 protocol.
    tag: u8,
}

const MEMO_BITS: u32 = 13;

impl Memo {
    fn new() -> Self {
        Self {
            slots: vec![MemoSlot::default(); 1 << MEMO_BITS],
            shift: 64 - MEMO_BITS,
        }
    }

    #[inline]
    fn index(&self, a: u64, b: u64) -> usize {
        let h = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.rotate_left(29).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        (h >> self.shift) as usize
    }

    #[inline]
    fn get(&self, a: u64, b: u64) -> Option<(u64, u64, Option<AnomalyKind>)> {
        let s = &self.slots[self.index(a, b)];
        if s.tag == 0 || s.a != a || s.b != b {
            return None;
        }
        let anomaly = match s.tag {
            1 => None,
            2 => Some(AnomalyKind::Clock),
            _ => Some(AnomalyKind::Protocol),
        };
        Some((s.x, s.y, anomaly))
    }

    fn put(&mut self, a: u64, b: u64, x: u64, y: u64, anomaly: Option<AnomalyKind>) {
        let i = self.index(a, b);
        self.slots[i] = MemoSlot {
            a,
            b,
            x,
            y,
            tag: match anomaly {
                None => 1,
                Some(AnomalyKind::Clock) => 2,
                Some(AnomalyKind::Protocol) => 3,
            },
        };
    }
}

/// Old and new states of one scheduled interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransitionDelta<S> {
    pub initiator: AgentId,
    pub responder: AgentId,
    pub before: (S, S),
    pub after: (S, S),
    pub anomaly: Option<AnomalyKind>,
}

impl<S: PartialEq> TransitionDelta<S> {
    pub fn changed(&self) -> bool {
        self.before != self.after
    }
}

pub fn apply_transition<P: Protocol>(
    config: &mut Configuration<P::State>,
    proto: &P,
    i: AgentId,
    j: AgentId,
) -> TransitionDelta<P::State> {
    assert_ne!(i, j, "an agent cannot interact with itself");
    let before = (config.state(i), config.state(j));
    let t = proto.transition(before.0, before.1);
    config.set(i, t.initiator);
    config.set(j, t.responder);
    TransitionDelta {
        initiator: i,
        responder: j,
        before,
        after: (t.initiator, t.responder),
        anomaly: t.anomaly,
    }
}

/// True iff no ordered pair of agents can change state or raise an anomaly.
/// Runs over distinct state values, pairing a value with itself only when at
/// least two agents hold it.
pub fn is_silent<P: Protocol>(config: &Configuration<P::State>, proto: &P) -> bool {
    let distinct = config.distinct();
    for (x, (a, ca)) in distinct.iter().enumerate() {
        if *ca >= 2 && !proto.is_identity(*a, *a) {
            return false;
        }
        for (b, _) in &distinct[x + 1..] {
            if !proto.is_identity(*a, *b) || !proto.is_identity(*b, *a) {
                return false;
            }
        }
    }
    true
}

/// Agents grouped by packed key, for drawing a uniform holder of a value.
struct Holders {
    by_key: FxHashMap<u64, Vec<u32>>,
    /// Position of each agent within its group.
    pos: Vec<u32>,
}

impl Holders {
    fn new(keys: &[u64]) -> Self {
        let mut by_key: FxHashMap<u64, Vec<u32>> = FxHashMap::default();
        let mut pos = Vec::with_capacity(keys.len());
        for (i, &k) in keys.iter().enumerate() {
            let g = by_key.entry(k).or_default();
            pos.push(g.len() as u32);
            g.push(i as u32);
        }
        Self { by_key, pos }
    }

    /// Distinct agents holding `ka` and `kb`, uniform over such pairs.
    fn draw(&self, rng: &mut RngStream, ka: u64, kb: u64) -> (usize, usize) {
        let ga = &self.by_key[&ka];
        let gb = &self.by_key[&kb];
        let x = rng.below(ga.len() as u32);
        let y = if ka == kb {
            let y = rng.below(gb.len() as u32 - 1);
            y + u32::from(y >= x)
        } else {
            rng.below(gb.len() as u32)
        };
        (ga[x as usize] as usize, gb[y as usize] as usize)
    }

    fn moved(&mut self, agent: usize, from: u64, to: u64) {
        if from == to {
            return;
        }
        let g = self.by_key.get_mut(&from).expect("agent was grouped");
        let p = self.pos[agent] as usize;
        g.swap_remove(p);
        if let Some(&other) = g.get(p) {
            self.pos[other as usize] = p as u32;
        }
        let g = self.by_key.entry(to).or_default();
        self.pos[agent] = g.len() as u32;
        g.push(agent as u32);
    }
}

/// Sparse stepping is used while the expected gap between active
/// interactions is at least this many steps.
const SPARSE_MIN_GAP: u64 = 128;

/// Hooks into a running simulation. All methods default to no-ops.
pub trait Observer<S> {
    fn on_change(&mut self, _step: u64, _delta: &TransitionDelta<S>) {}

    /// Called once per parallel time unit (every n interactions) and at the end
    /// of the run.
    fn on_sample(&mut self, _step: u64, _config: &Configuration<S>) {}

    fn should_stop(&self) -> bool {
        false
    }
}

impl<S> Observer<S> for () {}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// End the run at the first anomaly (used by drills that only measure
    /// detection).
    pub stop_on_anomaly: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub n: u64,
    pub output: Option<OutputValue>,
    pub anomaly: Option<AnomalyEvent>,
    pub interactions_total: u64,
    /// One past the index of the last state change; equals the total when
    /// the run did not end silent.
    pub interactions_to_silence: u64,
    pub parallel_time: f64,
    pub silent: bool,
    pub fell_back: bool,
    pub budget_exceeded: bool,
    /// Number of distinct state values that appeared at any point of the run.
    pub distinct_states: u64,
}

pub struct Simulation<'p, P: Protocol> {
    proto: &'p P,
    config: Configuration<P::State>,
    rng: RngStream,
    n: u32,
    steps: u64,
    last_change: Option<u64>,
    anomaly: Option<AnomalyEvent>,
    fell_back: bool,
    observed: FxHashSet<u64>,
    options: RunOptions,
    /// Interactions that changed a state or raised an anomaly.
    changes: u64,
    memo: Memo,
}

impl<'p, P: Protocol> Simulation<'p, P> {
    pub fn new(proto: &'p P, states: Vec<P::State>, seed: u64) -> Result<Self> {
        let config = Configuration::new(states)?;
        let observed = config.counts().keys().copied().collect();
        let fell_back = config.states().iter().any(|s| proto.is_fallback(s));
        Ok(Self {
            proto,
            n: config.n() as u32,
            config,
            rng: RngStream::new(seed),
            steps: 0,
            last_change: None,
            anomaly: None,
            fell_back,
            observed,
            options: RunOptions::default(),
            changes: 0,
            memo: Memo::new(),
        })
    }

    pub fn with_options(mut self, options: RunOptions) -> Self {
        self.options = options;
        self
    }

    pub fn config(&self) -> &Configuration<P::State> {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn anomaly(&self) -> Option<AnomalyEvent> {
        self.anomaly
    }

    /// Runs one scheduled interaction.
    pub fn step(&mut self) -> TransitionDelta<P::State> {
        let (i, j) = self.rng.pair(self.n);
        let (i, j) = (i as usize, j as usize);
        let (a, b) = (self.config.states[i], self.config.states[j]);
        self.interact(i, j, &mut ()).unwrap_or(TransitionDelta {
            initiator: AgentId(i),
            responder: AgentId(j),
            before: (a, b),
            after: (a, b),
            anomaly: None,
        })
    }

    /// Applies the rule to agents i and j. Returns the delta when the
    /// interaction changed a state or raised an anomaly.
    #[inline]
    fn interact<O: Observer<P::State>>(
        &mut self,
        i: usize,
        j: usize,
        obs: &mut O,
    ) -> Option<TransitionDelta<P::State>> {
        let ka = self.config.keys[i];
        let kb = self.config.keys[j];
        let step = self.steps;
        self.steps += 1;
        match self.memo.get(ka, kb) {
            Some((x, y, None)) if x == ka && y == kb => None,
            Some((x, y, anomaly)) => {
                let t = Transition {
                    initiator: P::State::unpack(x),
                    responder: P::State::unpack(y),
                    anomaly,
                };
                Some(self.record(step, i, j, (x, y), t, obs))
            }
            None => {
                let t = self.proto.transition(self.config.states[i], self.config.states[j]);
                let (x, y) = (t.initiator.pack(), t.responder.pack());
                self.memo.put(ka, kb, x, y, t.anomaly);
                if t.anomaly.is_none() && x == ka && y == kb {
                    return None;
                }
                Some(self.record(step, i, j, (x, y), t, obs))
            }
        }
    }

    /// Commits a non-identity interaction; `keys` are the packed new states.
    #[cold]
    fn record<O: Observer<P::State>>(
        &mut self,
        step: u64,
        i: usize,
        j: usize,
        keys: (u64, u64),
        t: Transition<P::State>,
        obs: &mut O,
    ) -> TransitionDelta<P::State> {
        let delta = TransitionDelta {
            initiator: AgentId(i),
            responder: AgentId(j),
            before: (self.config.states[i], self.config.states[j]),
            after: (t.initiator, t.responder),
            anomaly: t.anomaly,
        };
        self.last_change = Some(step);
        self.changes += 1;
        if let Some(kind) = t.anomaly {
            if self.anomaly.is_none() {
                self.anomaly = Some(AnomalyEvent {
                    kind,
                    interaction: step,
                });
            }
        }
        if !delta.changed() {
            return delta;
        }
        if self.config.set_keyed(i, t.initiator, keys.0) {
            self.observed.insert(keys.0);
        }
        if self.config.set_keyed(j, t.responder, keys.1) {
            self.observed.insert(keys.1);
        }
        if !self.fell_back
            && (self.proto.is_fallback(&t.initiator) || self.proto.is_fallback(&t.responder))
        {
            self.fell_back = true;
        }
        obs.on_change(step, &delta);
        delta
    }

    fn stopped_on_anomaly(&self) -> bool {
        self.options.stop_on_anomaly && self.anomaly.is_some()
    }

    /// The rule on packed keys, through the memo.
    fn rule(&mut self, ka: u64, kb: u64) -> (u64, u64, Option<AnomalyKind>) {
        if let Some(r) = self.memo.get(ka, kb) {
            return r;
        }
        let t = self.proto.transition(P::State::unpack(ka), P::State::unpack(kb));
        let (x, y) = (t.initiator.pack(), t.responder.pack());
        self.memo.put(ka, kb, x, y, t.anomaly);
        (x, y, t.anomaly)
    }

    fn active(&mut self, ka: u64, kb: u64) -> bool {
        let (x, y, anomaly) = self.rule(ka, kb);
        anomaly.is_some() || x != ka || y != kb
    }

    /// Runs until the configuration is silent, the budget is spent, or the
    /// observer asks to stop.
    ///
    /// Steps run in windows of n interactions. After a window with few state
    /// changes the distinct state values are scanned pairwise; when few
    /// ordered agent pairs are active the run switches to
    /// [`Simulation::run_sparse`].
    pub fn run<O: Observer<P::State>>(&mut self, budget: u64, obs: &mut O) -> Result<TrialResult> {
        if budget == 0 {
            return Err(Error::InvalidBudget("max_interactions must be positive".into()));
        }
        let window = u64::from(self.n);
        let scan_below = 4 + window / 128;
        let mut silent = self.steps == 0 && is_silent(&self.config, self.proto);
        obs.on_sample(self.steps, &self.config);
        while !silent && self.steps < budget && !obs.should_stop() {
            let end = ((self.steps / window + 1) * window).min(budget);
            let changes = self.changes;
            while self.steps < end {
                let (i, j) = self.rng.pair(self.n);
                if self.interact(i as usize, j as usize, obs).is_some() && self.stopped_on_anomaly() {
                    break;
                }
            }
            obs.on_sample(self.steps, &self.config);
            if self.stopped_on_anomaly() {
                break;
            }
            if self.changes - changes <= scan_below {
                silent = self.run_sparse(budget, obs);
            }
        }
        debug_assert!(self.config.is_consistent());
        Ok(self.result(silent, budget))
    }

    /// Moves the step counter to `to` through interactions known to be
    /// identities, sampling at each multiple of n passed.
    fn skip_to<O: Observer<P::State>>(&mut self, to: u64, obs: &mut O) {
        let window = u64::from(self.n);
        let mut next = (self.steps / window + 1) * window;
        while next <= to {
            obs.on_sample(next, &self.config);
            next += window;
        }
        self.steps = to;
    }

    /// Event-driven stepping while few ordered agent pairs are active.
    ///
    /// With A active pairs out of n(n-1), the scheduled pairs are iid, so
    /// the number of identity interactions before the next active one is
    /// geometric with success probability A/(n(n-1)), and that interaction
    /// is uniform over the active pairs. Sampling both is equivalent in law
    /// to stepping through.
    ///
    /// Returns true when the configuration is silent. Returns false as soon
    /// as A is too large for this to pay off, or when the budget ran out or
    /// the run must stop.
    fn run_sparse<O: Observer<P::State>>(&mut self, budget: u64, obs: &mut O) -> bool {
        let n = u64::from(self.n);
        let pairs = n * (n - 1);
        let limit = pairs / SPARSE_MIN_GAP;
        let mut values: Vec<u64> = self.config.counts.keys().copied().collect();
        let mut holders = Holders::new(&self.config.keys);
        let mut active: Vec<(u64, u64)> = Vec::new();
        for x in 0..values.len() {
            for y in 0..values.len() {
                let (ka, kb) = (values[x], values[y]);
                if self.active(ka, kb) {
                    active.push((ka, kb));
                }
            }
        }
        loop {
            let weight = |&(ka, kb): &(u64, u64), counts: &FxHashMap<u64, u32>| {
                let ca = u64::from(counts[&ka]);
                if ka == kb {
                    ca * ca.saturating_sub(1)
                } else {
                    ca * u64::from(counts[&kb])
                }
            };
            let total: u64 = active.iter().map(|p| weight(p, &self.config.counts)).sum();
            if total == 0 {
                return true;
            }
            if total > limit || obs.should_stop() {
                return false;
            }
            let at = self
                .steps
                .saturating_add(self.rng.geometric_with(total as f64 / pairs as f64));
            if at >= budget {
                self.skip_to(budget, obs);
                return false;
            }
            self.skip_to(at, obs);
            let mut r = self.rng.below_u64(total);
            let &(ka, kb) = active
                .iter()
                .find(|p| {
                    let w = weight(p, &self.config.counts);
                    if r < w {
                        true
                    } else {
                        r -= w;
                        false
                    }
                })
                .expect("draw falls inside the total weight");
            let (i, j) = holders.draw(&mut self.rng, ka, kb);
            let delta = self
                .interact(i, j, obs)
                .expect("pair drawn from the active set changes something");
            holders.moved(i, ka, self.config.keys[i]);
            holders.moved(j, kb, self.config.keys[j]);
            if self.steps % n == 0 {
                obs.on_sample(self.steps, &self.config);
            }
            if self.stopped_on_anomaly() {
                return false;
            }
            if !delta.changed() {
                continue;
            }
            let counts = &self.config.counts;
            let before = values.len();
            values.retain(|v| counts.contains_key(v));
            if values.len() != before {
                active.retain(|(a, b)| counts.contains_key(a) && counts.contains_key(b));
            }
            for key in [self.config.keys[i], self.config.keys[j]] {
                if values.contains(&key) {
                    continue;
                }
                values.push(key);
                for v in values.clone() {
                    if self.active(key, v) {
                        active.push((key, v));
                    }
                    if v != key && self.active(v, key) {
                        active.push((v, key));
                    }
                }
            }
        }
    }

    fn result(&self, silent: bool, budget: u64) -> TrialResult {
        let to_silence = if silent {
            self.last_change.map_or(0, |c| c + 1)
        } else {
            self.steps
        };
        let output = if silent {
            self.proto.output(&self.config)
        } else {
            None
        };
        TrialResult {
            n: u64::from(self.n),
            output,
            anomaly: self.anomaly,
            interactions_total: self.steps,
            interactions_to_silence: to_silence,
            parallel_time: to_silence as f64 / f64::from(self.n),
            silent,
            fell_back: self.fell_back,
            budget_exceeded: !silent && self.steps >= budget,
            distinct_states: self.observed.len() as u64,
        }
    }
}

/// Runs one trial from `states` to silence or until `max_interactions`.
pub fn run_trial<P: Protocol>(
    proto: &P,
    states: Vec<P::State>,
    seed: u64,
    max_interactions: u64,
) -> Result<TrialResult> {
    if max_interactions == 0 {
        return Err(Error::InvalidBudget("max_interactions must be positive".into()));
    }
    Simulation::new(proto, states, seed)?.run(max_interactions, &mut ())
}

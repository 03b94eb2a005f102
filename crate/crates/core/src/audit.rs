//! Static rule audit. Each module's rules are restated here as a table of
//! named, prioritised patterns, written from the protocol description rather
//! than from the implementation. For every input pattern the auditor
//! collects the rules that would change something, keeps the
//! highest-priority ones (lowest number), and reports
//!
//! - an overlap when those winners disagree on the outcome, and
//! - a mismatch when the implementation's outcome differs from the winner's
//!   (or is not the identity when no rule applies).
//!
//! Pairs where several rules of different priority fire with different
//! outcomes are counted as "contested"; they are resolved by priority and
//! are not errors.

use std::collections::BTreeSet;
use std::fmt::{self, Debug};

use serde::Serialize;

use crate::clock::{clock_tick, ClockPart, ClockParams};
use crate::engine::state::Role;
use crate::engine::AnomalyKind;
use crate::leader_election::{le_transition, Coin, LeAgent, LeaderLocal};
use crate::majority::{maj_epidemic, maj_on_round_entry, MajorityLocal, PhasePosition};
use crate::slow::{
    build_mass_sequence, slow_congruence_transition, slow_parity_transition, Opinion,
    SlowCongruenceState, SlowParityState,
};
use crate::weights::{wc_on_round_entry, wc_same_round, WeightEntry, WeightLocal, WeightMode};

struct Rule<I, O> {
    name: &'static str,
    priority: u32,
    fire: Box<dyn Fn(&I) -> Vec<O>>,
}

fn rule<I, O>(name: &'static str, priority: u32, fire: impl Fn(&I) -> Vec<O> + 'static) -> Rule<I, O> {
    Rule {
        name,
        priority,
        fire: Box::new(fire),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ModuleReport {
    pub module: String,
    pub patterns: u64,
    /// Patterns on which some rule changes something.
    pub active: u64,
    /// Patterns where rules of different priority disagree.
    pub contested: u64,
    pub overlaps: Vec<String>,
    pub mismatches: Vec<String>,
}

impl ModuleReport {
    pub fn is_clean(&self) -> bool {
        self.overlaps.is_empty() && self.mismatches.is_empty()
    }
}

impl fmt::Display for ModuleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} patterns, {} active, {} contested, {} overlaps, {} mismatches",
            self.module,
            self.patterns,
            self.active,
            self.contested,
            self.overlaps.len(),
            self.mismatches.len()
        )
    }
}

/// Runs one table. `identity` gives the outcome of doing nothing.
fn audit<I: Debug, O: Clone + PartialEq + Debug>(
    module: String,
    inputs: impl IntoIterator<Item = I>,
    rules: &[Rule<I, O>],
    identity: impl Fn(&I) -> O,
    implementation: impl Fn(&I) -> O,
) -> ModuleReport {
    let mut report = ModuleReport {
        module,
        ..ModuleReport::default()
    };
    for input in inputs {
        report.patterns += 1;
        let idle = identity(&input);
        let mut fired: Vec<(u32, &str, O)> = Vec::new();
        for r in rules {
            for out in (r.fire)(&input) {
                if out != idle {
                    fired.push((r.priority, r.name, out));
                }
            }
        }
        let got = implementation(&input);
        let Some(top) = fired.iter().map(|f| f.0).min() else {
            if got != idle {
                report
                    .mismatches
                    .push(format!("{input:?}: no rule applies but implementation gives {got:?}"));
            }
            continue;
        };
        report.active += 1;
        if fired.iter().any(|f| f.2 != fired[0].2) && fired.iter().any(|f| f.0 != top) {
            report.contested += 1;
        }
        let winners: Vec<_> = fired.iter().filter(|f| f.0 == top).collect();
        if winners.iter().any(|w| w.2 != winners[0].2) {
            let names: Vec<String> = winners.iter().map(|w| format!("{} -> {:?}", w.1, w.2)).collect();
            report.overlaps.push(format!("{input:?}: {}", names.join("; ")));
            continue;
        }
        if got != winners[0].2 {
            report.mismatches.push(format!(
                "{input:?}: rule {} gives {:?}, implementation {got:?}",
                winners[0].1, winners[0].2
            ));
        }
    }
    report
}

/// Unordered outcome of a pair rule.
fn both<S: Ord>(x: S, y: S) -> (S, S) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Applies an ordered pattern to a pair in both orientations.
fn either<S: Copy + Ord>(p: (S, S), f: impl Fn(S, S) -> Option<(S, S)>) -> Vec<(S, S)> {
    let mut out = Vec::new();
    if let Some((x, y)) = f(p.0, p.1) {
        out.push(both(x, y));
    }
    if let Some((y, x)) = f(p.1, p.0) {
        out.push(both(x, y));
    }
    out
}

fn pairs<S: Copy>(states: &[S]) -> Vec<(S, S)> {
    states.iter().flat_map(|&a| states.iter().map(move |&b| (a, b))).collect()
}

/// States reachable from `init` under the table's rules, treating any two
/// present states as able to meet.
fn closure<S: Copy + Ord>(init: &[S], rules: &[Rule<(S, S), (S, S)>]) -> Vec<S> {
    let mut seen: BTreeSet<S> = init.iter().copied().collect();
    loop {
        let now: Vec<S> = seen.iter().copied().collect();
        let mut grew = false;
        for p in pairs(&now) {
            for r in rules {
                for (x, y) in (r.fire)(&p) {
                    grew |= seen.insert(x);
                    grew |= seen.insert(y);
                }
            }
        }
        if !grew {
            return now;
        }
    }
}

// Slow parity: four states, leaders duel and recruit followers.

fn slow_parity() -> ModuleReport {
    use SlowParityState::*;
    let leader = |b: u8| if b % 2 == 0 { L0 } else { L1 };
    let follower = |b: u8| if b % 2 == 0 { F0 } else { F1 };
    let bit = |s: SlowParityState| u8::from(matches!(s, L1 | F1));
    let is_leader = |s: SlowParityState| matches!(s, L0 | L1);
    let rules: Vec<Rule<(SlowParityState, SlowParityState), _>> = vec![
        rule("duel", 1, move |&p| {
            either(p, |a, b| (is_leader(a) && is_leader(b)).then(|| (leader(bit(a) + bit(b)), F0)))
        }),
        rule("recruit", 1, move |&p| {
            either(p, |a, b| (is_leader(a) && !is_leader(b)).then(|| (a, follower(bit(a)))))
        }),
    ];
    let states = closure(&[L1, F0], &rules);
    audit(
        "slow-parity".into(),
        pairs(&states),
        &rules,
        |&(a, b)| both(a, b),
        |&(a, b)| {
            let (x, y) = slow_parity_transition(a, b);
            both(x, y)
        },
    )
}

// Slow congruence, stated over mass values. A state is either a mass
// holder (v, F) with v > 0 or one of the zero-mass opinions.

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Cong {
    Mass(u64),
    /// (0, T)
    Strong,
    /// (0, t)
    Weak,
    /// (0, f)
    No,
}

/// m_0 = 1, then per bit of m below the leading one: double, and add one
/// when the bit is set.
fn masses_for(m: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    let bits = 64 - m.leading_zeros();
    for b in (0..bits - 1).rev() {
        let v = *out.last().unwrap() * 2;
        out.push(v);
        if m >> b & 1 == 1 {
            out.push(v + 1);
        }
    }
    out
}

fn congruence_rules(ms: &[u64]) -> Vec<Rule<(Cong, Cong), (Cong, Cong)>> {
    use Cong::*;
    let k = ms.len() - 1;
    let index = {
        let ms = ms.to_vec();
        move |v: u64| ms.iter().position(|&x| x == v)
    };
    let ms = ms.to_vec();
    let doubles = {
        let ms = ms.clone();
        move |i: usize| ms[i + 1] == 2 * ms[i]
    };
    let increments = {
        let ms = ms.clone();
        move |i: usize| ms[i + 1] == ms[i] + 1
    };
    let mut rules: Vec<Rule<(Cong, Cong), (Cong, Cong)>> = Vec::new();
    {
        let (index, doubles, ms) = (index.clone(), doubles.clone(), ms.clone());
        rules.push(rule("10", 10, move |&p| {
            either(p, |a, b| match (a, b) {
                (Mass(x), Mass(y)) if x == y => {
                    let i = index(x)?;
                    (i + 1 < k && doubles(i)).then(|| (Mass(ms[i + 1]), No))
                }
                _ => None,
            })
        }));
    }
    {
        let (index, increments, ms) = (index.clone(), increments.clone(), ms.clone());
        rules.push(rule("20", 20, move |&p| {
            either(p, |a, b| match (a, b) {
                (Mass(x), Mass(1)) => {
                    let i = index(x)?;
                    (i + 1 < k && increments(i)).then(|| (Mass(ms[i + 1]), No))
                }
                _ => None,
            })
        }));
    }
    {
        let (doubles, ms) = (doubles.clone(), ms.clone());
        rules.push(rule("30", 30, move |&p| {
            either(p, |a, b| {
                (a == Mass(ms[k - 1]) && b == a && doubles(k - 1)).then_some((Strong, Strong))
            })
        }));
    }
    {
        let (increments, ms) = (increments.clone(), ms.clone());
        rules.push(rule("40", 40, move |&p| {
            either(p, |a, b| {
                (a == Mass(ms[k - 1]) && b == Mass(1) && increments(k - 1)).then_some((Strong, Strong))
            })
        }));
    }
    {
        // Restricted to i + 1 < k: at i = k - 1 the pattern is rule 70's.
        let (index, increments, ms) = (index.clone(), increments.clone(), ms.clone());
        rules.push(rule("50", 50, move |&p| {
            either(p, |a, b| match (a, b) {
                (Mass(x), Mass(y)) => {
                    let (i, j) = (index(x)?, index(y)?);
                    (i + 1 < k && increments(i) && 0 < j && j <= i).then(|| (Mass(ms[i + 1]), Mass(y - 1)))
                }
                _ => None,
            })
        }));
    }
    {
        let ms = ms.clone();
        rules.push(rule("60", 60, move |&p| {
            either(p, |a, b| match (a, b) {
                (Mass(v), Strong | Weak | No) => (1..k)
                    .find(|&i| ms[i + 1] == 2 * ms[i] && ms[i + 1] - 1 == v)
                    .map(|i| (Mass(ms[i] - 1), Mass(ms[i]))),
                _ => None,
            })
        }));
    }
    {
        let (index, increments, ms) = (index.clone(), increments.clone(), ms.clone());
        rules.push(rule("70", 70, move |&p| {
            either(p, |a, b| match (a, b) {
                (Mass(x), Mass(y)) if x == ms[k - 1] && increments(k - 1) => {
                    let j = index(y)?;
                    (j > 0).then_some((No, Mass(y - 1)))
                }
                _ => None,
            })
        }));
    }
    rules.push(rule("80", 80, |&p| {
        either(p, |a, b| (matches!(a, Mass(_)) && b == Strong).then_some((a, No)))
    }));
    rules.push(rule("85", 85, |&p| {
        either(p, |a, b| (matches!(a, Mass(_)) && b == Weak).then_some((a, No)))
    }));
    rules.push(rule("90", 90, |&p| {
        either(p, |a, b| (a == Strong && b == No).then_some((Strong, Weak)))
    }));
    rules
}

fn slow_congruence(m: u64) -> ModuleReport {
    let ms = masses_for(m);
    let seq = build_mass_sequence(m).expect("m >= 2");
    let name = format!("slow-congruence(m={m})");
    let implemented: Vec<u64> = (0..=seq.k()).map(|i| seq.mass(i)).collect();
    if implemented != ms {
        return ModuleReport {
            module: name,
            mismatches: vec![format!("mass sequence {implemented:?}, expected {ms:?}")],
            ..ModuleReport::default()
        };
    }
    let rules = congruence_rules(&ms);
    let states = closure(&[Cong::Mass(1), Cong::Weak], &rules);
    let to_impl = |s: Cong| -> SlowCongruenceState {
        match s {
            Cong::Strong => SlowCongruenceState::Zero(Opinion::StrongTrue),
            Cong::Weak => SlowCongruenceState::Zero(Opinion::WeakTrue),
            Cong::No => SlowCongruenceState::Zero(Opinion::False),
            Cong::Mass(v) => *SlowCongruenceState::all(&seq)
                .iter()
                .find(|t| t.has_mass() && t.mass(&seq) == v)
                .unwrap_or_else(|| panic!("no implemented state carries mass {v}")),
        }
    };
    let from_impl = |s: SlowCongruenceState| -> Cong {
        match s {
            SlowCongruenceState::Zero(Opinion::StrongTrue) => Cong::Strong,
            SlowCongruenceState::Zero(Opinion::WeakTrue) => Cong::Weak,
            SlowCongruenceState::Zero(Opinion::False) => Cong::No,
            s => Cong::Mass(s.mass(&seq)),
        }
    };
    audit(
        name,
        pairs(&states),
        &rules,
        |&(a, b)| both(a, b),
        |&(a, b)| {
            let (x, y) = slow_congruence_transition(to_impl(a), to_impl(b), &seq);
            both(from_impl(x), from_impl(y))
        },
    )
}

// Majority: same-round averaging and epidemics, then round entry.

fn majority_states() -> Vec<MajorityLocal> {
    use MajorityLocal::*;
    let mut v: Vec<_> = (-2..=2).map(Value).collect();
    v.extend([XWin, YWin, XFinal, YFinal, Tie]);
    v
}

fn majority_same_round() -> ModuleReport {
    use MajorityLocal::*;
    let rules: Vec<Rule<(MajorityLocal, MajorityLocal), _>> = vec![
        rule("average", 1, |&p| {
            either(p, |a, b| match (a, b) {
                (Value(x), Value(y)) => {
                    let s = i32::from(x) + i32::from(y);
                    let lo = s.div_euclid(2);
                    Some((Value(lo as i8), Value((s - lo) as i8)))
                }
                _ => None,
            })
        }),
        rule("x-win", 1, |&p| {
            either(p, |a, b| (a == XWin && matches!(b, Value(0..=2))).then_some((XWin, XWin)))
        }),
        rule("y-win", 1, |&p| {
            either(p, |a, b| (a == YWin && matches!(b, Value(-2..=0))).then_some((YWin, YWin)))
        }),
        rule("tie", 1, |&p| {
            either(p, |a, b| (a == Tie && matches!(b, Value(_))).then_some((Tie, Tie)))
        }),
    ];
    audit(
        "majority".into(),
        pairs(&majority_states()),
        &rules,
        |&(a, b)| both(a, b),
        |&(a, b)| {
            let (x, y) = maj_epidemic(a, b);
            both(x, y)
        },
    )
}

type MajEntry = (MajorityLocal, bool, Option<MajorityLocal>, bool);
type MajOut = Result<MajorityLocal, AnomalyKind>;

fn majority_entry() -> ModuleReport {
    use MajorityLocal::*;
    let doubled = |v: i8| match 2 * v {
        w if w > 2 => XWin,
        w if w < -2 => YWin,
        w => Value(w),
    };
    let last = |&(_, _, _, l): &MajEntry| l;
    let rules: Vec<Rule<MajEntry, MajOut>> = vec![
        rule("leader-certify", 1, |&(s, leader, _, _): &MajEntry| match (leader, s) {
            (true, XWin) => vec![Ok(XFinal)],
            (true, YWin) => vec![Ok(YFinal)],
            _ => vec![],
        }),
        rule("leader-tie", 1, move |e: &MajEntry| match (e.1, e.0) {
            (true, Value(_)) if last(e) => vec![Ok(Tie)],
            _ => vec![],
        }),
        rule("leader-double", 1, move |e: &MajEntry| match (e.1, e.0) {
            (true, Value(v)) if !last(e) => vec![Ok(doubled(v))],
            _ => vec![],
        }),
        rule("copy-certified", 1, |&(s, leader, p, _): &MajEntry| match (leader, p) {
            (false, Some(XFinal)) if matches!(s, XWin | XFinal) => vec![Ok(XFinal)],
            (false, Some(YFinal)) if matches!(s, YWin | YFinal) => vec![Ok(YFinal)],
            (false, Some(Tie)) if matches!(s, Value(_) | Tie) => vec![Ok(Tie)],
            _ => vec![],
        }),
        rule("disagree-with-leader", 1, |&(s, leader, p, _): &MajEntry| match (leader, p) {
            (false, Some(XFinal)) if !matches!(s, XWin | XFinal) => vec![Err(AnomalyKind::Protocol)],
            (false, Some(YFinal)) if !matches!(s, YWin | YFinal) => vec![Err(AnomalyKind::Protocol)],
            (false, Some(Tie)) if !matches!(s, Value(_) | Tie) => vec![Err(AnomalyKind::Protocol)],
            _ => vec![],
        }),
        rule("uncertified-win", 2, |&(s, leader, p, _): &MajEntry| {
            let partner_certified = matches!(p, Some(XFinal | YFinal | Tie));
            if !leader && !partner_certified && !matches!(s, Value(_)) {
                vec![Err(AnomalyKind::Protocol)]
            } else {
                vec![]
            }
        }),
        rule("missed-tie", 2, move |e: &MajEntry| {
            let partner_certified = matches!(e.2, Some(XFinal | YFinal | Tie));
            if !e.1 && !partner_certified && last(e) {
                vec![Err(AnomalyKind::Protocol)]
            } else {
                vec![]
            }
        }),
        rule("double", 3, move |e: &MajEntry| match (e.1, e.0) {
            (false, Value(v)) if !last(e) => vec![Ok(doubled(v))],
            _ => vec![],
        }),
    ];
    let mut inputs = Vec::new();
    for s in majority_states() {
        for last in [false, true] {
            inputs.push((s, true, None, last));
            for p in majority_states() {
                inputs.push((s, false, Some(p), last));
            }
        }
    }
    let pos = |last: bool| PhasePosition {
        round: if last { 8 } else { 3 },
        len: 8,
    };
    audit(
        "majority-entry".into(),
        inputs,
        &rules,
        |e| Ok(e.0),
        |&(s, leader, p, last)| maj_on_round_entry(s, leader, pos(last), p),
    )
}

// Leader election within one round r.

const LE_ROUND: u16 = 5;

fn le_agents() -> Vec<LeAgent> {
    let mut v = Vec::new();
    for role in [Role::Leader, Role::Follower] {
        for coin in [None, Some(Coin::Heads), Some(Coin::Tails)] {
            for heard_heads in [None, Some(LE_ROUND)] {
                for entered in [false, true] {
                    v.push(LeAgent {
                        role,
                        local: LeaderLocal { coin, heard_heads },
                        round: LE_ROUND,
                        entered,
                    });
                }
            }
        }
    }
    v
}

type LeOut = ((Role, LeaderLocal), (Role, LeaderLocal));

fn leader_election() -> ModuleReport {
    let view = |a: &LeAgent| (a.role, a.local);
    // A leader's coin is fixed at its first interaction of the round after
    // the one that brought it in: heads as initiator, tails as responder.
    let flips = |a: &LeAgent| a.role == Role::Leader && a.local.coin.is_none() && !a.entered;
    let rules: Vec<Rule<(LeAgent, LeAgent), LeOut>> = vec![rule("round-step", 1, move |&(a, b)| {
        let mut x = view(&a);
        let mut y = view(&b);
        if flips(&a) {
            x.1.coin = Some(Coin::Heads);
        }
        if flips(&b) {
            y.1.coin = Some(Coin::Tails);
        }
        let heads = x.1.coin == Some(Coin::Heads) && flips(&a)
            || x.1.heard_heads == Some(LE_ROUND)
            || y.1.heard_heads == Some(LE_ROUND);
        if heads {
            x.1.heard_heads = Some(LE_ROUND);
            y.1.heard_heads = Some(LE_ROUND);
        }
        for s in [&mut x, &mut y] {
            if s.0 == Role::Leader && s.1.coin == Some(Coin::Tails) && heads {
                s.0 = Role::Follower;
            }
        }
        vec![(x, y)]
    })];
    let agents = le_agents();
    audit(
        "leader-election".into(),
        pairs(&agents),
        &rules,
        move |(a, b)| (view(a), view(b)),
        move |&(a, b)| {
            let (x, y) = le_transition(a, b);
            (view(&x), view(&y))
        },
    )
}

// Weight creation.

fn weight_states(q: u8, mode: &WeightMode) -> Vec<WeightLocal> {
    use WeightLocal::*;
    let mut v = vec![Free, Leader, Committed, End];
    for j in 0..=q + 1 {
        v.extend([Seed(j), Failed(j), Certified(j)]);
    }
    for w in 0..=q {
        for index in 0..=mode.seed_index(w) {
            v.push(Member { weight: w, index });
        }
    }
    v
}

/// Sequence index of the seed of round q and the split of index i, from
/// the masses alone.
struct Split {
    masses: Vec<u64>,
}

impl Split {
    fn new(m: Option<u64>, top: usize) -> Self {
        let mut masses = match m {
            None => vec![1],
            Some(m) => masses_for(m),
        };
        while masses.len() < top {
            let v = *masses.last().unwrap() * 2;
            masses.push(v);
        }
        Self { masses }
    }

    fn seed(&self, m: Option<u64>, q: u8) -> u8 {
        let want = m.unwrap_or(1) << q;
        self.masses.iter().position(|&x| x == want).unwrap() as u8
    }

    fn halves(&self, i: u8) -> (u8, u8) {
        let i = usize::from(i);
        if self.masses[i] == 2 * self.masses[i - 1] {
            (i as u8 - 1, i as u8 - 1)
        } else {
            (i as u8 - 1, 0)
        }
    }
}

fn weights_same_round(m: Option<u64>) -> ModuleReport {
    use WeightLocal::*;
    let mode = match m {
        None => WeightMode::Parity,
        Some(m) => WeightMode::Modular(build_mass_sequence(m).expect("m >= 2")),
    };
    let susceptible = |s: WeightLocal| !matches!(s, Failed(_) | Certified(_) | End);
    let mut inputs = Vec::new();
    for q in 0..5u8 {
        for p in pairs(&weight_states(q, &mode)) {
            inputs.push((q, p));
        }
    }
    let split = std::rc::Rc::new(Split::new(m, 40));
    let sp = split.clone();
    let rules: Vec<Rule<(u8, (WeightLocal, WeightLocal)), (WeightLocal, WeightLocal)>> = vec![
        rule("seed", 1, move |&(q, p)| {
            let idx = sp.seed(m, q);
            either(p, |a, b| {
                (a == Seed(q) && b == Free).then_some((Leader, Member { weight: q, index: idx }))
            })
        }),
        rule("split", 2, move |&(q, p)| {
            either(p, |a, b| match (a, b) {
                (Member { weight, index }, Free) if weight == q && index > 0 => {
                    let (x, y) = split.halves(index);
                    Some((Member { weight, index: x }, Member { weight, index: y }))
                }
                _ => None,
            })
        }),
        rule("failure-epidemic", 4, move |&(_, p)| {
            either(p, |a, b| match a {
                Failed(j) if susceptible(b) => Some((a, Failed(j))),
                _ => None,
            })
        }),
    ];
    let name = match m {
        None => "weights".to_string(),
        Some(m) => format!("weights(m={m})"),
    };
    audit(
        name,
        inputs,
        &rules,
        |&(_, (a, b))| both(a, b),
        move |&(q, (a, b))| {
            let (x, y) = wc_same_round(a, b, q, &mode);
            both(x, y)
        },
    )
}

type WcEntry = (WeightLocal, Role, Option<u8>, u8, WeightLocal);

fn weights_entry() -> ModuleReport {
    use WeightLocal::*;
    let keep = |local| {
        Ok(WeightEntry {
            local,
            commit: None,
            top: false,
        })
    };
    let rules: Vec<Rule<WcEntry, Result<WeightEntry, AnomalyKind>>> = vec![
        rule("leader-seed", 1, move |&(s, r, _, q, _): &WcEntry| match (r, s) {
            (Role::Leader, Leader) => vec![keep(Seed(q))],
            _ => vec![],
        }),
        rule("leader-leftover", 1, move |&(s, r, _, q, _): &WcEntry| match (r, s) {
            (Role::Leader, Seed(j)) if j + 1 == q => vec![keep(Failed(j))],
            _ => vec![],
        }),
        rule("leader-certify", 1, move |&(s, r, _, q, _): &WcEntry| match (r, s) {
            (Role::Leader, Failed(j)) if j + 2 == q => vec![keep(Certified(j))],
            _ => vec![],
        }),
        rule("leader-end", 1, move |&(s, r, _, q, _): &WcEntry| match (r, s) {
            (Role::Leader, Certified(j)) if j + 3 == q => vec![keep(End)],
            _ => vec![],
        }),
        rule("adopt-certified", 1, |&(_, r, w, q, p): &WcEntry| {
            if r == Role::Follower && q >= 2 && p == Certified(q - 2) {
                vec![Ok(WeightEntry {
                    local: Certified(q - 2),
                    commit: None,
                    top: q >= 3 && w == Some(q - 3),
                })]
            } else {
                vec![]
            }
        }),
        rule("uncertified-failure", 1, |&(s, r, _, q, p): &WcEntry| match s {
            Failed(j) if r == Role::Follower && j + 2 == q && p != Certified(j) => {
                vec![Err(AnomalyKind::Protocol)]
            }
            _ => vec![],
        }),
        rule("leftover", 2, move |&(s, r, _, q, _): &WcEntry| match s {
            Member { weight, index } if r == Role::Follower && weight + 1 == q && index > 0 => {
                vec![keep(Failed(weight))]
            }
            _ => vec![],
        }),
        rule("commit", 2, |&(s, r, _, q, _): &WcEntry| match s {
            Member { weight, index: 0 } if r == Role::Follower && weight + 2 == q => vec![Ok(WeightEntry {
                local: Committed,
                commit: Some(weight),
                top: false,
            })],
            _ => vec![],
        }),
        rule("end", 2, move |&(s, r, _, q, _): &WcEntry| match s {
            Certified(j) if r == Role::Follower && j + 3 == q => vec![keep(End)],
            _ => vec![],
        }),
    ];
    let mode = WeightMode::Parity;
    let mut inputs = Vec::new();
    for q in 1..6u8 {
        let states = weight_states(q, &mode);
        for &s in &states {
            for role in [Role::Leader, Role::Follower] {
                for w in std::iter::once(None).chain((0..q).map(Some)) {
                    for &p in &states {
                        inputs.push((s, role, w, q, p));
                    }
                }
            }
        }
    }
    audit(
        "weights-entry".into(),
        inputs,
        &rules,
        move |e| keep(e.0),
        |&(s, r, w, q, p)| wc_on_round_entry(s, r, w, q, p),
    )
}

// Clock: the initiating leader ticks, then rounds are compared.

type ClockIn = (ClockPart, bool, ClockPart, bool);
type ClockOut = (ClockPart, ClockPart, bool);

fn clock() -> ModuleReport {
    let p = ClockParams::new(2, 2, 5).expect("valid clock params");
    let len = (p.log * p.c) as u16;
    let last = (p.total_rounds - 1) as u16;
    let ticked = move |a: ClockPart, leader: bool| {
        if !leader || a.round >= last {
            a
        } else if a.counter + 1 >= len {
            ClockPart {
                round: a.round + 1,
                counter: 0,
            }
        } else {
            ClockPart {
                counter: a.counter + 1,
                ..a
            }
        }
    };
    let adopt = |s: ClockPart, leader: bool, round: u16| ClockPart {
        round,
        counter: if leader { 0 } else { s.counter },
    };
    let rules: Vec<Rule<ClockIn, ClockOut>> = vec![
        rule("skew", 1, move |&(a, la, b, _): &ClockIn| {
            let t = ticked(a, la);
            if t.round.abs_diff(b.round) >= 2 {
                vec![(a, b, true)]
            } else {
                vec![]
            }
        }),
        rule("responder-catches-up", 2, move |&(a, la, b, lb): &ClockIn| {
            let t = ticked(a, la);
            if t.round == b.round + 1 {
                vec![(t, adopt(b, lb, t.round), false)]
            } else {
                vec![]
            }
        }),
        rule("initiator-catches-up", 2, move |&(a, la, b, _): &ClockIn| {
            let t = ticked(a, la);
            if b.round == t.round + 1 {
                vec![(adopt(t, la, b.round), b, false)]
            } else {
                vec![]
            }
        }),
        rule("tick", 3, move |&(a, la, b, _): &ClockIn| vec![(ticked(a, la), b, false)]),
    ];
    let mut agents = Vec::new();
    for round in 0..=last {
        agents.push((ClockPart { round, counter: 0 }, false));
        for counter in 0..len {
            agents.push((ClockPart { round, counter }, true));
        }
    }
    let inputs: Vec<ClockIn> = pairs(&agents)
        .into_iter()
        .map(|((a, la), (b, lb))| (a, la, b, lb))
        .collect();
    audit(
        "clock".into(),
        inputs,
        &rules,
        |&(a, _, b, _)| (a, b, false),
        move |&(a, la, b, lb): &ClockIn| {
            let o = clock_tick(a, la, b, lb, &p);
            (o.initiator, o.responder, o.anomaly)
        },
    )
}

/// Moduli audited for the congruence and m-mode weight tables by default.
pub const DEFAULT_AUDIT_MODULI: [u64; 6] = [2, 3, 5, 6, 7, 11];

/// Audits every module; the congruence tables are built for each modulus.
pub fn audit_rules(moduli: &[u64]) -> Vec<ModuleReport> {
    let mut out = vec![slow_parity()];
    out.extend(moduli.iter().map(|&m| slow_congruence(m)));
    out.push(majority_same_round());
    out.push(majority_entry());
    out.push(leader_election());
    out.push(weights_same_round(None));
    out.extend(moduli.iter().map(|&m| weights_same_round(Some(m))));
    out.push(weights_entry());
    out.push(clock());
    out
}

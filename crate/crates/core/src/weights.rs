//! Weight creation. In round q the leader seeds a mass of 2^q (m·2^q in
//! modular mode) that free agents split into unit pieces; those agents form
//! weight W_q. The first weight that cannot be completed within its round
//! starts a failure cascade that marks the previous weight as the top one.

use std::collections::BTreeMap;

use crate::engine::state::{CompoundState, Role};
use crate::engine::{AnomalyKind, Configuration};
use crate::slow::MassSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WeightLocal {
    /// Not yet part of any weight.
    Free,
    /// The leader between seedings.
    Leader,
    /// The leader holding the undelivered seed of round q.
    Seed(u8),
    /// Member of weight `weight` holding the mass with sequence index `index`.
    Member { weight: u8, index: u8 },
    /// Member whose weight index is now recorded in the global part.
    Committed,
    /// Weight j could not be completed (not yet confirmed by the leader).
    Failed(u8),
    /// The leader confirmed that weight j failed.
    Certified(u8),
    End,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightMode {
    Parity,
    Modular(MassSequence),
}

impl WeightMode {
    /// Sequence index of the mass seeded in round q.
    pub fn seed_index(&self, q: u8) -> u8 {
        match self {
            WeightMode::Parity => q,
            WeightMode::Modular(seq) => seq.k() as u8 + q,
        }
    }

    pub fn mass(&self, index: u8) -> u64 {
        match self {
            WeightMode::Parity => 1u64 << index,
            WeightMode::Modular(seq) => seq.mass(index.into()),
        }
    }

    /// Sequence indices a piece of mass splits into.
    pub fn split(&self, index: u8) -> (u8, u8) {
        debug_assert!(index > 0);
        let doubling = match self {
            WeightMode::Parity => true,
            WeightMode::Modular(seq) => seq.is_doubling(index.into()),
        };
        if doubling {
            (index - 1, index - 1)
        } else {
            (index - 1, 0)
        }
    }

    /// Agents in a completed weight j.
    pub fn weight_size(&self, j: u8) -> u64 {
        self.mass(self.seed_index(j))
    }
}

fn is_susceptible(s: WeightLocal) -> bool {
    !matches!(s, WeightLocal::Failed(_) | WeightLocal::Certified(_) | WeightLocal::End)
}

/// Same-round rules for two agents in creation round q: seeding, splitting,
/// and the spread of a failure notice.
pub fn wc_same_round(
    a: WeightLocal,
    b: WeightLocal,
    q: u8,
    mode: &WeightMode,
) -> (WeightLocal, WeightLocal) {
    use WeightLocal::*;
    match (a, b) {
        (Seed(r), Free) if r == q => (
            Leader,
            Member {
                weight: q,
                index: mode.seed_index(q),
            },
        ),
        (Free, Seed(r)) if r == q => (
            Member {
                weight: q,
                index: mode.seed_index(q),
            },
            Leader,
        ),
        (Member { weight, index }, Free) if weight == q && index > 0 => {
            let (x, y) = mode.split(index);
            (Member { weight, index: x }, Member { weight, index: y })
        }
        (Free, Member { weight, index }) if weight == q && index > 0 => {
            let (x, y) = mode.split(index);
            (Member { weight, index: y }, Member { weight, index: x })
        }
        (Failed(j), s) if is_susceptible(s) => (a, Failed(j)),
        (s, Failed(j)) if is_susceptible(s) => (Failed(j), b),
        _ => (a, b),
    }
}

/// Effect of entering a creation round on one agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightEntry {
    pub local: WeightLocal,
    /// Weight index to record in the global part.
    pub commit: Option<u8>,
    pub top: bool,
}

/// Entry into creation round `q >= 1` (0-based within the phase). `weight`
/// is the agent's committed weight index; `partner` is the local state of
/// the agent met on entry, already in round q.
pub fn wc_on_round_entry(
    state: WeightLocal,
    role: Role,
    weight: Option<u8>,
    q: u8,
    partner: WeightLocal,
) -> Result<WeightEntry, AnomalyKind> {
    use WeightLocal::*;
    let keep = |local| WeightEntry {
        local,
        commit: None,
        top: false,
    };
    if role == Role::Leader {
        return Ok(keep(match state {
            Leader => Seed(q),
            Seed(r) if r + 1 == q => Failed(r),
            Failed(j) if j + 2 == q => Certified(j),
            Certified(j) if j + 3 == q => End,
            s => s,
        }));
    }
    if q >= 2 && partner == Certified(q - 2) {
        return Ok(WeightEntry {
            local: Certified(q - 2),
            commit: None,
            top: q >= 3 && weight == Some(q - 3),
        });
    }
    Ok(match state {
        Failed(j) if j + 2 == q => return Err(AnomalyKind::Protocol),
        Member { weight: w, index } if w + 1 == q && index > 0 => keep(Failed(w)),
        Member { weight: w, index: 0 } if w + 2 == q => WeightEntry {
            local: Committed,
            commit: Some(w),
            top: false,
        },
        Certified(j) if j + 3 == q => keep(End),
        s => keep(s),
    })
}

/// Per committed weight index: (agent count, total mass). Every committed
/// agent carries unit mass.
pub fn weight_census(config: &Configuration<CompoundState>) -> BTreeMap<u8, (u64, u64)> {
    let mut out = BTreeMap::new();
    for s in config.states() {
        if s.global.panic {
            continue;
        }
        if let Some(w) = s.global.weight {
            let e = out.entry(w).or_insert((0, 0));
            e.0 += 1;
            e.1 += 1;
        }
    }
    out
}

/// Weight index carried by the top-marked agents, if they all agree.
pub fn top_weight(config: &Configuration<CompoundState>) -> Option<u8> {
    let mut found = None;
    for s in config.states() {
        if s.global.top {
            let w = s.global.weight?;
            if *found.get_or_insert(w) != w {
                return None;
            }
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slow::build_mass_sequence;
    use WeightLocal::*;

    #[test]
    fn seeding_and_splitting() {
        let p = WeightMode::Parity;
        assert_eq!(wc_same_round(Seed(0), Free, 0, &p), (Leader, Member { weight: 0, index: 0 }));
        assert_eq!(wc_same_round(Free, Seed(2), 2, &p), (Member { weight: 2, index: 2 }, Leader));
        let (a, b) = wc_same_round(Member { weight: 2, index: 2 }, Free, 2, &p);
        assert_eq!((a, b), (Member { weight: 2, index: 1 }, Member { weight: 2, index: 1 }));
        // Stale seeds and finished pieces do nothing.
        assert_eq!(wc_same_round(Seed(1), Free, 2, &p), (Seed(1), Free));
        assert_eq!(
            wc_same_round(Member { weight: 2, index: 0 }, Free, 2, &p),
            (Member { weight: 2, index: 0 }, Free)
        );
    }

    #[test]
    fn modular_split_follows_sequence() {
        let m = WeightMode::Modular(build_mass_sequence(5).unwrap());
        assert_eq!(m.seed_index(0), 3);
        assert_eq!(m.mass(3), 5);
        assert_eq!(m.split(3), (2, 0));
        assert_eq!(m.split(2), (1, 1));
        assert_eq!(m.split(4), (3, 3));
        assert_eq!(m.weight_size(2), 20);
    }

    /// Splitting a seed to unit pieces always yields `weight_size` pieces.
    #[test]
    fn split_tree_leaf_counts() {
        fn leaves(mode: &WeightMode, i: u8) -> u64 {
            if i == 0 {
                return 1;
            }
            let (a, b) = mode.split(i);
            leaves(mode, a) + leaves(mode, b)
        }
        for m in [2, 3, 5, 6, 7, 11] {
            let mode = WeightMode::Modular(build_mass_sequence(m).unwrap());
            for q in 0..6 {
                assert_eq!(leaves(&mode, mode.seed_index(q)), m << q);
            }
        }
        for q in 0..10 {
            assert_eq!(leaves(&WeightMode::Parity, q), 1 << q);
        }
    }

    #[test]
    fn failure_spreads_to_susceptible_states() {
        let p = WeightMode::Parity;
        assert_eq!(wc_same_round(Failed(3), Free, 4, &p), (Failed(3), Failed(3)));
        assert_eq!(wc_same_round(Committed, Failed(3), 4, &p), (Failed(3), Failed(3)));
        assert_eq!(wc_same_round(Certified(3), Failed(3), 5, &p), (Certified(3), Failed(3)));
    }

    #[test]
    fn leader_entry_cascade() {
        let e = |s, q| wc_on_round_entry(s, Role::Leader, None, q, Free).unwrap().local;
        assert_eq!(e(Leader, 3), Seed(3));
        assert_eq!(e(Seed(2), 3), Failed(2));
        assert_eq!(e(Failed(2), 4), Certified(2));
        assert_eq!(e(Certified(2), 5), End);
    }

    #[test]
    fn follower_entry_rules() {
        let f = Role::Follower;
        let e = wc_on_round_entry(Member { weight: 2, index: 1 }, f, None, 3, Free).unwrap();
        assert_eq!(e.local, Failed(2));
        let e = wc_on_round_entry(Member { weight: 2, index: 0 }, f, None, 4, Free).unwrap();
        assert_eq!((e.local, e.commit), (Committed, Some(2)));
        let e = wc_on_round_entry(Member { weight: 2, index: 0 }, f, None, 3, Free).unwrap();
        assert_eq!(e.local, Member { weight: 2, index: 0 });
        let e = wc_on_round_entry(Committed, f, Some(3), 6, Certified(4)).unwrap();
        assert_eq!((e.local, e.top), (Certified(4), true));
        let e = wc_on_round_entry(Committed, f, Some(2), 6, Certified(4)).unwrap();
        assert_eq!((e.local, e.top), (Certified(4), false));
        let e = wc_on_round_entry(Certified(4), f, None, 7, End).unwrap();
        assert_eq!(e.local, End);
        assert_eq!(
            wc_on_round_entry(Failed(4), f, None, 6, Failed(4)),
            Err(AnomalyKind::Protocol)
        );
    }
}

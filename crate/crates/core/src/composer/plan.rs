//! Round plans: the fixed sequence of phases a composed protocol runs
//! through, compiled into a per-round lookup table.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "protocol", rename_all = "kebab-case")]
pub enum PhaseKind {
    LeaderElection,
    WeightCreation,
    /// Majority of X against the top weight.
    TopWeightCheck,
    /// Majority of X against the weights on the scale, after adding weight
    /// `cursor`.
    Balance { cursor: u32 },
    /// A standalone majority phase (drills only).
    Majority,
    /// Final round: agents settle and hold their answer.
    Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Phase {
    #[serde(flatten)]
    pub kind: PhaseKind,
    pub round_start: u32,
    pub round_count: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanTask {
    Parity,
    Congruence,
    LeaderElection,
    Majority,
    Weights,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundPlan {
    pub phases: Vec<Phase>,
    pub total_rounds: u32,
    #[serde(skip)]
    table: Vec<(u16, u16)>,
}

impl RoundPlan {
    fn from_phases(kinds: Vec<(PhaseKind, u32)>) -> Self {
        let mut phases = Vec::with_capacity(kinds.len());
        let mut table = Vec::new();
        let mut start = 0;
        for (idx, (kind, len)) in kinds.into_iter().enumerate() {
            phases.push(Phase {
                kind,
                round_start: start,
                round_count: len,
            });
            table.extend((0..len).map(|rel| (idx as u16, rel as u16)));
            start += len;
        }
        RoundPlan {
            phases,
            total_rounds: start,
            table,
        }
    }

    /// Plan for `task` with round-length estimate `log` and election
    /// multiplier `d`.
    pub fn build(task: PlanTask, log: u32, d: u32) -> Result<Self> {
        if log == 0 {
            return Err(Error::InvalidParams("LOG must be positive".into()));
        }
        if d == 0 {
            return Err(Error::InvalidParams("leader-election multiplier d must be positive".into()));
        }
        let majority = log + 4;
        let mut kinds = Vec::new();
        match task {
            PlanTask::Parity | PlanTask::Congruence => {
                let last = if task == PlanTask::Parity { 1 } else { 0 };
                kinds.push((PhaseKind::LeaderElection, d * log));
                kinds.push((PhaseKind::WeightCreation, log + 3));
                kinds.push((PhaseKind::TopWeightCheck, majority));
                for cursor in (last..=log).rev() {
                    kinds.push((PhaseKind::Balance { cursor }, majority));
                }
            }
            PlanTask::LeaderElection => kinds.push((PhaseKind::LeaderElection, d * log)),
            PlanTask::Majority => kinds.push((PhaseKind::Majority, majority)),
            PlanTask::Weights => kinds.push((PhaseKind::WeightCreation, log + 3)),
        }
        if task != PlanTask::Majority {
            kinds.push((PhaseKind::Verdict, 1));
        }
        Ok(Self::from_phases(kinds))
    }

    /// Phase index and zero-based round within that phase.
    #[inline]
    pub fn locate(&self, round: u16) -> (usize, u32) {
        let (p, r) = self.table[usize::from(round)];
        (usize::from(p), u32::from(r))
    }

    pub fn phase(&self, idx: usize) -> &Phase {
        &self.phases[idx]
    }

    /// First round after leader election, or 0 when the plan has none.
    pub fn election_end(&self) -> u32 {
        self.phases
            .iter()
            .find(|p| p.kind == PhaseKind::LeaderElection)
            .map_or(0, |p| p.round_start + p.round_count)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

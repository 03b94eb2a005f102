//! Composition of the fast protocols under one clock, the balance-scale
//! loop, and the switch to the slow protocol on any anomaly.

pub mod plan;

use serde::Serialize;

use crate::clock::{check_log_estimate, clock_tick, ClockParams, ClockPart};
use crate::engine::state::{CompoundState, GlobalPart, LocalPart, Role};
use crate::engine::{
    run_trial, AnomalyKind, Configuration, OutputValue, Protocol, Transition, TrialResult,
};
use crate::error::{Error, Result};
use crate::leader_election::{count_leaders, le_transition, LeAgent, LeaderLocal};
use crate::majority::{
    maj_epidemic, maj_init, maj_on_round_entry, verdict_output, MajorityLocal, PhasePosition,
};
use crate::slow::{
    build_mass_sequence, slow_congruence_init, slow_congruence_output, slow_congruence_transition,
    slow_parity_init, slow_parity_output, slow_parity_transition, uniform_output, MassSequence,
};
use crate::weights::{top_weight, wc_on_round_entry, wc_same_round, WeightLocal, WeightMode};
pub use plan::{Phase, PhaseKind, PlanTask, RoundPlan};

/// Constants of the fast protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StackParams {
    /// Upper estimate of log2 n.
    pub log: u32,
    /// Leader interactions per round, in units of LOG.
    pub c: u32,
    /// Leader-election rounds, in units of LOG.
    pub d: u32,
}

pub const DEFAULT_CLOCK_C: u32 = 16;
pub const DEFAULT_LEADER_D: u32 = 4;

impl StackParams {
    /// Defaults for population size n: LOG = ceil(log2 n).
    pub fn for_population(n: usize) -> Self {
        Self {
            log: crate::clock::ceil_log2(n).max(1),
            c: DEFAULT_CLOCK_C,
            d: DEFAULT_LEADER_D,
        }
    }

    pub fn with_c(self, c: u32) -> Self {
        Self { c, ..self }
    }

    pub fn with_d(self, d: u32) -> Self {
        Self { d, ..self }
    }
}

/// What a composed run computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum StackTask {
    Parity,
    Congruence { m: u64 },
    LeaderElection,
    Majority,
    Weights { m: Option<u64> },
}

#[derive(Clone, Debug)]
enum Fallback {
    None,
    Parity,
    Congruence(MassSequence),
}

/// The composed fast protocol with its slow fallback.
#[derive(Clone, Debug)]
pub struct FastStack {
    task: StackTask,
    plan: RoundPlan,
    clock: ClockParams,
    mode: WeightMode,
    fallback: Fallback,
    election_end: u16,
}

pub fn build_round_plan(task: StackTask, n: usize, params: StackParams) -> Result<RoundPlan> {
    check_log_estimate(n, params.log)?;
    RoundPlan::build(plan_task(task), params.log, params.d)
}

fn plan_task(task: StackTask) -> PlanTask {
    match task {
        StackTask::Parity => PlanTask::Parity,
        StackTask::Congruence { .. } => PlanTask::Congruence,
        StackTask::LeaderElection => PlanTask::LeaderElection,
        StackTask::Majority => PlanTask::Majority,
        StackTask::Weights { .. } => PlanTask::Weights,
    }
}

impl FastStack {
    pub fn new(task: StackTask, n: usize, params: StackParams) -> Result<Self> {
        let plan = build_round_plan(task, n, params)?;
        let clock = ClockParams::new(params.log, params.c, plan.total_rounds)?;
        let (mode, fallback) = match task {
            StackTask::Parity => (WeightMode::Parity, Fallback::Parity),
            StackTask::Congruence { m } => {
                let seq = build_mass_sequence(m)?;
                (WeightMode::Modular(seq.clone()), Fallback::Congruence(seq))
            }
            StackTask::Weights { m: Some(m) } => {
                (WeightMode::Modular(build_mass_sequence(m)?), Fallback::None)
            }
            _ => (WeightMode::Parity, Fallback::None),
        };
        let max_weight = u32::from(mode.seed_index(0)) + params.log + 3;
        if max_weight > 62 {
            return Err(Error::InvalidParams(format!("LOG = {} too large", params.log)));
        }
        Ok(Self {
            task,
            election_end: plan.election_end() as u16,
            plan,
            clock,
            mode,
            fallback,
        })
    }

    pub fn plan(&self) -> &RoundPlan {
        &self.plan
    }

    pub fn clock_params(&self) -> &ClockParams {
        &self.clock
    }

    pub fn task(&self) -> StackTask {
        self.task
    }

    pub fn election_end(&self) -> u16 {
        self.election_end
    }

    /// Initial configuration: the first `x` agents are in X. Full stacks and
    /// the election drill start with every agent a leader; the other drills
    /// start with agent 0 as the only leader. In the majority drill the `y`
    /// agents after X form Y.
    pub fn initial(&self, n: usize, x: usize, y: usize) -> Vec<CompoundState> {
        let clock = ClockPart::default();
        (0..n)
            .map(|i| {
                let input = i < x;
                let base = CompoundState {
                    input,
                    global: GlobalPart::LEADER,
                    clock,
                    local: LocalPart::Election(LeaderLocal::default()),
                };
                match self.task {
                    StackTask::Parity | StackTask::Congruence { .. } | StackTask::LeaderElection => {
                        base
                    }
                    StackTask::Majority => {
                        // X is agents 1..=x and Y the next y, so the leader is in neither.
                        let in_x = (1..=x).contains(&i);
                        let in_y = (x + 1..=x + y).contains(&i);
                        CompoundState {
                            input: in_x,
                            global: if i == 0 { GlobalPart::LEADER } else { GlobalPart::FOLLOWER },
                            local: LocalPart::Majority(maj_init(in_x, in_y)),
                            ..base
                        }
                    }
                    StackTask::Weights { .. } => CompoundState {
                        global: if i == 0 { GlobalPart::LEADER } else { GlobalPart::FOLLOWER },
                        local: LocalPart::Weights(if i == 0 {
                            WeightLocal::Seed(0)
                        } else {
                            WeightLocal::Free
                        }),
                        ..base
                    },
                }
            })
            .collect()
    }

    /// Discards the fast state and restarts the agent in the slow protocol.
    pub fn switch(&self, s: CompoundState) -> CompoundState {
        let local = match &self.fallback {
            Fallback::None => LocalPart::Idle,
            Fallback::Parity => LocalPart::SlowParity(slow_parity_init(s.input)),
            Fallback::Congruence(_) => LocalPart::SlowCongruence(slow_congruence_init(s.input)),
        };
        CompoundState {
            input: s.input,
            global: GlobalPart {
                panic: true,
                ..GlobalPart::FOLLOWER
            },
            clock: ClockPart::default(),
            local,
        }
    }

    fn slow_step(&self, a: CompoundState, b: CompoundState) -> (CompoundState, CompoundState) {
        match (&self.fallback, a.local, b.local) {
            (Fallback::Parity, LocalPart::SlowParity(x), LocalPart::SlowParity(y)) => {
                let (x, y) = slow_parity_transition(x, y);
                (
                    CompoundState { local: LocalPart::SlowParity(x), ..a },
                    CompoundState { local: LocalPart::SlowParity(y), ..b },
                )
            }
            (Fallback::Congruence(seq), LocalPart::SlowCongruence(x), LocalPart::SlowCongruence(y)) => {
                let (x, y) = slow_congruence_transition(x, y, seq);
                (
                    CompoundState { local: LocalPart::SlowCongruence(x), ..a },
                    CompoundState { local: LocalPart::SlowCongruence(y), ..b },
                )
            }
            _ => (a, b),
        }
    }

    fn panic_pair(&self, a: CompoundState, b: CompoundState, kind: AnomalyKind) -> Transition<CompoundState> {
        Transition::anomaly(self.switch(a), self.switch(b), kind)
    }

    /// Round-entry step of `agent`, which has just moved into its current
    /// round. `partner` is the other agent of the interaction.
    fn enter(&self, agent: &mut CompoundState, partner: &CompoundState) -> Result<(), AnomalyKind> {
        let round = agent.clock.round;
        let (idx, rel) = self.plan.locate(round);
        let phase = self.plan.phase(idx);
        if rel == 0 {
            if idx > 0 {
                close_phase(agent, self.plan.phase(idx - 1))?;
            }
            self.open_phase(agent, phase);
            return Ok(());
        }
        match (phase.kind, agent.local) {
            (PhaseKind::LeaderElection, LocalPart::Election(l)) => {
                agent.local = LocalPart::Election(l.on_round_entry(round));
            }
            (PhaseKind::WeightCreation, LocalPart::Weights(w)) => {
                let pw = match partner.local {
                    LocalPart::Weights(pw) => pw,
                    _ => WeightLocal::Free,
                };
                let e = wc_on_round_entry(w, agent.global.role, agent.global.weight, rel as u8, pw)?;
                agent.local = LocalPart::Weights(e.local);
                if let Some(w) = e.commit {
                    agent.global.weight = Some(w);
                }
                agent.global.top |= e.top;
            }
            (
                PhaseKind::TopWeightCheck | PhaseKind::Balance { .. } | PhaseKind::Majority,
                LocalPart::Majority(v),
            ) => {
                let pv = match partner.local {
                    LocalPart::Majority(pv) => Some(pv),
                    _ => None,
                };
                let pos = PhasePosition {
                    round: rel + 1,
                    len: phase.round_count,
                };
                agent.local = LocalPart::Majority(maj_on_round_entry(v, agent.is_leader(), pos, pv)?);
            }
            (PhaseKind::Verdict, _) => {}
            _ => return Err(AnomalyKind::Protocol),
        }
        Ok(())
    }

    fn open_phase(&self, agent: &mut CompoundState, phase: &Phase) {
        agent.local = match phase.kind {
            PhaseKind::LeaderElection => LocalPart::Election(LeaderLocal::default()),
            PhaseKind::WeightCreation => LocalPart::Weights(if agent.is_leader() {
                WeightLocal::Seed(0)
            } else {
                WeightLocal::Free
            }),
            PhaseKind::TopWeightCheck => LocalPart::Majority(maj_init(agent.input, agent.global.top)),
            PhaseKind::Balance { cursor } => {
                if agent.global.weight.map(u32::from) == Some(cursor) {
                    agent.global.on_scale = true;
                }
                LocalPart::Majority(maj_init(agent.input, agent.global.on_scale))
            }
            PhaseKind::Majority => LocalPart::Majority(MajorityLocal::Value(0)),
            PhaseKind::Verdict => LocalPart::Done,
        };
    }

    /// Rules between two agents in the same round.
    fn same_round(&self, a: &mut CompoundState, b: &mut CompoundState, a_entered: bool, b_entered: bool) {
        let (idx, rel) = self.plan.locate(a.clock.round);
        match (self.plan.phase(idx).kind, a.local, b.local) {
            (PhaseKind::LeaderElection, LocalPart::Election(x), LocalPart::Election(y)) => {
                let agent = |s: &CompoundState, local, entered| LeAgent {
                    role: s.global.role,
                    local,
                    round: s.clock.round,
                    entered,
                };
                let (p, q) = le_transition(agent(a, x, a_entered), agent(b, y, b_entered));
                for (s, r) in [(&mut *a, p), (&mut *b, q)] {
                    if s.global.role == Role::Leader && r.role == Role::Follower {
                        s.clock.counter = 0;
                    }
                    s.global.role = r.role;
                    s.local = LocalPart::Election(r.local);
                }
            }
            (PhaseKind::WeightCreation, LocalPart::Weights(x), LocalPart::Weights(y)) => {
                let (x, y) = wc_same_round(x, y, rel as u8, &self.mode);
                a.local = LocalPart::Weights(x);
                b.local = LocalPart::Weights(y);
            }
            (
                PhaseKind::TopWeightCheck | PhaseKind::Balance { .. } | PhaseKind::Majority,
                LocalPart::Majority(x),
                LocalPart::Majority(y),
            ) => {
                let (x, y) = maj_epidemic(x, y);
                a.local = LocalPart::Majority(x);
                b.local = LocalPart::Majority(y);
            }
            _ => {}
        }
    }

    fn fast_output(&self, config: &Configuration<CompoundState>) -> Option<OutputValue> {
        let last = self.clock.final_round();
        if config.states().iter().any(|s| s.clock.round != last) {
            return None;
        }
        match self.task {
            StackTask::Parity => uniform_output(config.states().iter().map(|s| {
                if s.global.output {
                    OutputValue::Even
                } else {
                    OutputValue::Odd
                }
            })),
            StackTask::Congruence { .. } => uniform_output(config.states().iter().map(|s| {
                if s.global.output {
                    OutputValue::Divisible
                } else {
                    OutputValue::NotDivisible
                }
            })),
            StackTask::LeaderElection => Some(OutputValue::Leaders(count_leaders(config))),
            StackTask::Majority => verdict_output(config.states().iter().map(|s| match s.local {
                LocalPart::Majority(v) => v,
                _ => MajorityLocal::Value(0),
            })),
            StackTask::Weights { .. } => {
                top_weight(config).map(|w| OutputValue::MaxWeight(u32::from(w) + 1))
            }
        }
    }

    fn slow_output(&self, config: &Configuration<CompoundState>) -> Option<OutputValue> {
        let mut outs = Vec::with_capacity(config.n());
        for s in config.states() {
            outs.push(match s.local {
                LocalPart::SlowParity(p) => slow_parity_output(p),
                LocalPart::SlowCongruence(c) => slow_congruence_output(c),
                _ => return None,
            });
        }
        uniform_output(outs.into_iter())
    }
}

/// Reads the verdict of the phase just finished from the agent's own
/// certified state and applies its effect.
fn close_phase(agent: &mut CompoundState, prev: &Phase) -> Result<(), AnomalyKind> {
    let v = match agent.local {
        LocalPart::Majority(v) => v,
        _ => {
            return match prev.kind {
                PhaseKind::TopWeightCheck | PhaseKind::Balance { .. } => Err(AnomalyKind::Protocol),
                _ => Ok(()),
            }
        }
    };
    match (prev.kind, v) {
        (PhaseKind::TopWeightCheck, MajorityLocal::YFinal | MajorityLocal::Tie) => Ok(()),
        (PhaseKind::TopWeightCheck, _) => Err(AnomalyKind::Protocol),
        (PhaseKind::Balance { .. }, MajorityLocal::XFinal) => Ok(()),
        (PhaseKind::Balance { cursor }, MajorityLocal::YFinal) => {
            if agent.global.weight.map(u32::from) == Some(cursor) {
                agent.global.on_scale = false;
            }
            Ok(())
        }
        (PhaseKind::Balance { .. }, MajorityLocal::Tie) => {
            agent.global.output = true;
            Ok(())
        }
        (PhaseKind::Balance { .. }, _) => Err(AnomalyKind::Protocol),
        _ => Ok(()),
    }
}

impl Protocol for FastStack {
    type State = CompoundState;

    fn transition(&self, a: CompoundState, b: CompoundState) -> Transition<CompoundState> {
        match (a.global.panic, b.global.panic) {
            (true, true) => {
                let (a, b) = self.slow_step(a, b);
                return Transition::new(a, b);
            }
            (true, false) => return Transition::new(a, self.switch(b)),
            (false, true) => return Transition::new(self.switch(a), b),
            (false, false) => {}
        }
        let clk = clock_tick(a.clock, a.is_leader(), b.clock, b.is_leader(), &self.clock);
        if clk.anomaly {
            return self.panic_pair(a, b, AnomalyKind::Clock);
        }
        if a.is_leader()
            && b.is_leader()
            && a.clock.round >= self.election_end
            && b.clock.round >= self.election_end
        {
            return self.panic_pair(a, b, AnomalyKind::Protocol);
        }
        let mut x = CompoundState { clock: clk.initiator, ..a };
        let mut y = CompoundState { clock: clk.responder, ..b };
        if clk.initiator_entered {
            if let Err(kind) = self.enter(&mut x, &y) {
                return self.panic_pair(a, b, kind);
            }
        }
        if clk.responder_entered {
            if let Err(kind) = self.enter(&mut y, &x) {
                return self.panic_pair(a, b, kind);
            }
        }
        if x.clock.round == y.clock.round {
            self.same_round(&mut x, &mut y, clk.initiator_entered, clk.responder_entered);
        }
        Transition::new(x, y)
    }

    fn output(&self, config: &Configuration<CompoundState>) -> Option<OutputValue> {
        let panicked = config.states().iter().filter(|s| s.global.panic).count();
        if panicked == 0 {
            self.fast_output(config)
        } else if panicked == config.n() {
            self.slow_output(config)
        } else {
            None
        }
    }

    fn is_fallback(&self, s: &CompoundState) -> bool {
        s.global.panic
    }
}

/// Default interaction budget for a fast stack: 10^4 · n · LOG^3.
pub fn fast_budget(n: usize, log: u32) -> u64 {
    10_000 * n as u64 * u64::from(log).pow(3)
}

/// Default interaction budget for a slow protocol: 100 · n^2 · log2 n.
pub fn slow_budget(n: usize) -> u64 {
    let n = n as u64;
    100 * n * n * u64::from(crate::clock::ceil_log2(n as usize).max(1))
}

/// Runs a full parity or congruence stack with |X| = x.
pub fn run_stack(
    task: StackTask,
    n: usize,
    x: usize,
    params: StackParams,
    seed: u64,
    budget: Option<u64>,
) -> Result<TrialResult> {
    if x > n {
        return Err(Error::InvalidParams(format!("|X| = {x} exceeds n = {n}")));
    }
    let stack = FastStack::new(task, n, params)?;
    let budget = budget.unwrap_or_else(|| fast_budget(n, params.log) + slow_budget(n));
    run_trial(&stack, stack.initial(n, x, 0), seed, budget)
}

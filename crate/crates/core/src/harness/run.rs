//! Running single trials and whole plans.

use rayon::prelude::*;

use crate::clock::max_round_skew;
use crate::composer::{fast_budget, slow_budget, FastStack};
use crate::engine::state::CompoundState;
use crate::engine::{
    Configuration, Observer, OutputValue, Protocol, RngStream, RunOptions, Simulation,
    TransitionDelta, TrialResult, Verdict,
};
use crate::error::{Error, Result};
use crate::leader_election::count_leaders;
use crate::majority::AveragingDrill;
use crate::slow::{SlowCongruence, SlowParity};
use crate::weights::{top_weight, weight_census, WeightMode};

use super::plan::{Cell, ExperimentPlan, Task};
use super::results::TrialRow;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "POPPROTO_WORKERS";

/// Per-sample readings of a clocked run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Probe {
    /// Largest round skew among unswitched agents at any sample.
    pub max_skew: u32,
    /// Fewest leaders among unswitched agents at any sample before the
    /// first anomaly.
    pub min_leaders: u64,
    pub samples: u64,
}

impl Default for Probe {
    fn default() -> Self {
        Probe {
            max_skew: 0,
            min_leaders: u64::MAX,
            samples: 0,
        }
    }
}

/// Samples skew and leader count every n interactions, rescanning only
/// when something changed since the last sample.
#[derive(Default)]
pub struct StackProbe {
    probe: Probe,
    dirty: bool,
    anomaly: bool,
}

impl StackProbe {
    pub fn probe(&self) -> Probe {
        self.probe
    }
}

impl Observer<CompoundState> for StackProbe {
    fn on_change(&mut self, _step: u64, delta: &TransitionDelta<CompoundState>) {
        self.dirty = true;
        self.anomaly |= delta.anomaly.is_some();
    }

    fn on_sample(&mut self, _step: u64, config: &Configuration<CompoundState>) {
        self.probe.samples += 1;
        if !std::mem::take(&mut self.dirty) && self.probe.samples > 1 {
            return;
        }
        self.probe.max_skew = self.probe.max_skew.max(max_round_skew(config));
        if !self.anomaly {
            self.probe.min_leaders = self.probe.min_leaders.min(count_leaders(config));
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub row: TrialRow,
    pub result: TrialResult,
    /// Present for clocked tasks.
    pub probe: Option<Probe>,
}

/// The answer a correct run must report, computed from the inputs alone.
pub fn oracle(cell: &Cell) -> Option<OutputValue> {
    let x = cell.x as u64;
    Some(match cell.task {
        Task::Parity | Task::SlowParity => {
            if x % 2 == 0 {
                OutputValue::Even
            } else {
                OutputValue::Odd
            }
        }
        Task::Congruence | Task::SlowCongruence => {
            if x % cell.m? == 0 {
                OutputValue::Divisible
            } else {
                OutputValue::NotDivisible
            }
        }
        Task::LeaderElection => OutputValue::Leaders(1),
        Task::Majority => OutputValue::Verdict(match x.cmp(&(cell.y.unwrap_or(0) as u64)) {
            std::cmp::Ordering::Greater => Verdict::XWins,
            std::cmp::Ordering::Less => Verdict::YWins,
            std::cmp::Ordering::Equal => Verdict::Tie,
        }),
        Task::Weights | Task::Averaging => return None,
    })
}

/// Whether weights 0..Max each hold exactly their nominal number of agents
/// and no agent is committed to a later index.
pub fn census_is_exact(config: &Configuration<CompoundState>, mode: &WeightMode) -> bool {
    let Some(top) = top_weight(config) else {
        return false;
    };
    let census = weight_census(config);
    (0..=top).all(|i| census.get(&i).map(|e| e.0) == Some(mode.weight_size(i)))
        && census.keys().all(|&i| i <= top)
}

fn default_budget(cell: &Cell) -> u64 {
    let n = cell.n;
    match cell.task {
        Task::Parity | Task::Congruence => fast_budget(n, cell.params.log) + slow_budget(n),
        Task::SlowParity | Task::SlowCongruence => slow_budget(n),
        _ => fast_budget(n, cell.params.log),
    }
}

fn simulate<P: Protocol, O: Observer<P::State>>(
    proto: &P,
    states: Vec<P::State>,
    seed: u64,
    budget: u64,
    stop_on_anomaly: bool,
    obs: &mut O,
) -> Result<(TrialResult, Configuration<P::State>)> {
    let mut sim = Simulation::new(proto, states, seed)?.with_options(RunOptions { stop_on_anomaly });
    let r = sim.run(budget, obs)?;
    Ok((r, sim.config().clone()))
}

/// Runs trial `trial` of `cell` with the given seed.
pub fn run_cell_trial(cell: &Cell, trial: u64, seed: u64) -> Result<TrialRecord> {
    let budget = cell.budget.unwrap_or_else(|| default_budget(cell));
    let (n, x) = (cell.n, cell.x);
    let (result, probe, correct) = match cell.task {
        Task::SlowParity => {
            let (r, _) = simulate(&SlowParity, SlowParity::initial(n, x), seed, budget, false, &mut ())?;
            let ok = r.silent && r.output == oracle(cell);
            (r, None, ok)
        }
        Task::SlowCongruence => {
            let p = SlowCongruence::new(cell.m.expect("validated"))?;
            let (r, _) = simulate(&p, SlowCongruence::initial(n, x), seed, budget, false, &mut ())?;
            let ok = r.silent && r.output == oracle(cell);
            (r, None, ok)
        }
        Task::Averaging => {
            let init = AveragingDrill::initial(n, x as i64);
            let (r, _) = simulate(&AveragingDrill, init, seed, budget, false, &mut ())?;
            let ok = matches!(r.output, Some(OutputValue::Discrepancy(d)) if d <= 2);
            (r, None, ok)
        }
        _ => {
            let stack = FastStack::new(cell.stack_task(), n, cell.params)?;
            let init = stack.initial(n, x, cell.y.unwrap_or(0));
            let mut obs = StackProbe::default();
            let (r, config) = simulate(&stack, init, seed, budget, cell.task.is_drill(), &mut obs)?;
            let ok = match cell.task {
                Task::Weights => {
                    let mode = match cell.m {
                        None => WeightMode::Parity,
                        Some(m) => WeightMode::Modular(crate::slow::build_mass_sequence(m)?),
                    };
                    r.anomaly.is_none() && r.silent && census_is_exact(&config, &mode)
                }
                Task::LeaderElection | Task::Majority => r.anomaly.is_none() && r.output == oracle(cell),
                _ => r.silent && r.output == oracle(cell),
            };
            (r, Some(obs.probe), ok)
        }
    };
    Ok(TrialRecord {
        row: TrialRow::new(cell, seed, trial, &result, correct),
        result,
        probe,
    })
}

pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(k),
            _ => Err(Error::InvalidPlan(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |k| k.get())),
    }
}

/// Runs every trial of the plan on `workers` threads. Trial t of cell c has
/// global index c·trials + t and seed `child_seed(master_seed, index)`, so
/// the records do not depend on the worker count.
pub fn run_plan(plan: &ExperimentPlan, workers: usize) -> Result<Vec<TrialRecord>> {
    let cells = plan.cells()?;
    let trials = plan.trials;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidPlan(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..cells.len() as u64 * trials)
            .into_par_iter()
            .map(|g| {
                let cell = &cells[(g / trials) as usize];
                run_cell_trial(cell, g % trials, RngStream::child_seed(plan.master_seed, g))
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::plan::{PlanDraft, XSpec};

    fn plan(task: Task, n: usize, x: &[usize], trials: u64) -> ExperimentPlan {
        PlanDraft {
            task: Some(task),
            n_list: Some(vec![n]),
            x_list: Some(x.iter().map(|&x| XSpec::Count(x)).collect()),
            trials: Some(trials),
            master_seed: Some(11),
            ..PlanDraft::default()
        }
        .validate()
        .unwrap()
    }

    #[test]
    fn oracles_follow_the_inputs() {
        let cells = plan(Task::SlowParity, 64, &[0, 3], 1).cells().unwrap();
        assert_eq!(oracle(&cells[0]), Some(OutputValue::Even));
        assert_eq!(oracle(&cells[1]), Some(OutputValue::Odd));
        let mut c = cells[1];
        c.task = Task::Majority;
        c.y = Some(3);
        assert_eq!(oracle(&c), Some(OutputValue::Verdict(Verdict::Tie)));
        c.y = Some(4);
        assert_eq!(oracle(&c), Some(OutputValue::Verdict(Verdict::YWins)));
    }

    #[test]
    fn slow_parity_rows_are_correct() {
        let recs = run_plan(&plan(Task::SlowParity, 64, &[0, 1, 5], 4), 2).unwrap();
        assert_eq!(recs.len(), 12);
        assert!(recs.iter().all(|r| r.row.correct && r.row.silent));
        assert_eq!(recs[5].row.trial, 1);
        assert_eq!(recs[5].row.x, 1);
    }

    #[test]
    fn records_do_not_depend_on_workers() {
        let p = plan(Task::SlowParity, 48, &[3, 8], 3);
        let a: Vec<_> = run_plan(&p, 1).unwrap().into_iter().map(|r| r.row).collect();
        let b: Vec<_> = run_plan(&p, 3).unwrap().into_iter().map(|r| r.row).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn weights_drill_census() {
        let mut p = plan(Task::Weights, 256, &[0], 3);
        p.params.c = Some(4);
        for r in run_plan(&p, 1).unwrap() {
            let probe = r.probe.unwrap();
            assert!(probe.samples > 0);
            if r.row.anomaly_kind.is_none() {
                assert!(r.row.correct, "{:?}", r.row);
                assert!(probe.max_skew <= 1);
            }
        }
    }
}

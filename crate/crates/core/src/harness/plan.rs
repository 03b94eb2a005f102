//! Experiment plans: what to run, on which grid, and where results go.
//! Plans come from an optional TOML file with CLI flags layered on top.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::composer::{StackParams, DEFAULT_CLOCK_C, DEFAULT_LEADER_D};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Parity,
    Congruence,
    SlowParity,
    SlowCongruence,
    LeaderElection,
    Majority,
    Weights,
    /// Load balancing by averaging alone; x is the initial discrepancy.
    Averaging,
}

impl Task {
    pub const ALL: [Task; 8] = [
        Task::Parity,
        Task::Congruence,
        Task::SlowParity,
        Task::SlowCongruence,
        Task::LeaderElection,
        Task::Majority,
        Task::Weights,
        Task::Averaging,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Parity => "parity",
            Task::Congruence => "congruence",
            Task::SlowParity => "slow-parity",
            Task::SlowCongruence => "slow-congruence",
            Task::LeaderElection => "leader-election",
            Task::Majority => "majority",
            Task::Weights => "weights",
            Task::Averaging => "averaging",
        }
    }

    /// Sub-protocol drills stop at their first anomaly.
    pub fn is_drill(self) -> bool {
        matches!(
            self,
            Task::LeaderElection | Task::Majority | Task::Weights | Task::Averaging
        )
    }

    /// Stable tasks must be correct on every trial, panicked or not.
    pub fn is_stable(self) -> bool {
        matches!(
            self,
            Task::Parity | Task::Congruence | Task::SlowParity | Task::SlowCongruence
        )
    }

    pub fn needs_m(self) -> bool {
        matches!(self, Task::Congruence | Task::SlowCongruence)
    }

    pub fn allows_m(self) -> bool {
        self.needs_m() || self == Task::Weights
    }

    /// Tasks driven by the round clock.
    pub fn is_clocked(self) -> bool {
        matches!(
            self,
            Task::Parity | Task::Congruence | Task::LeaderElection | Task::Majority | Task::Weights
        )
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

/// An agent count given absolutely (`100`), as a fraction of n (`0.25`),
/// or as `n/k` with an optional offset (`n/6`, `n/6-1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum XSpec {
    Count(usize),
    Fraction(f64),
    Share { k: usize, offset: i64 },
}

impl XSpec {
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let v = match *self {
            XSpec::Count(c) => c as i64,
            XSpec::Fraction(f) => (f * n as f64).floor() as i64,
            XSpec::Share { k, offset } => (n / k) as i64 + offset,
        };
        usize::try_from(v).map_err(|_| Error::InvalidPlan(format!("{self} is negative for n = {n}")))
    }
}

impl fmt::Display for XSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            XSpec::Count(c) => write!(f, "{c}"),
            XSpec::Fraction(x) => write!(f, "{x:?}"),
            XSpec::Share { k, offset: 0 } => write!(f, "n/{k}"),
            XSpec::Share { k, offset } => write!(f, "n/{k}{offset:+}"),
        }
    }
}

impl FromStr for XSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let bad = || format!("bad agent count {s:?}: expected N, a fraction in [0, 1], or n/K[+-D]");
        if let Some(rest) = s.strip_prefix("n/") {
            let cut = rest.find(['+', '-']).unwrap_or(rest.len());
            let k: usize = rest[..cut].parse().map_err(|_| bad())?;
            if k == 0 {
                return Err(bad());
            }
            let offset = match &rest[cut..] {
                "" => 0,
                o => o.strip_prefix('+').unwrap_or(o).parse().map_err(|_| bad())?,
            };
            return Ok(XSpec::Share { k, offset });
        }
        if let Ok(c) = s.parse::<usize>() {
            return Ok(XSpec::Count(c));
        }
        match s.parse::<f64>() {
            Ok(f) if (0.0..=1.0).contains(&f) => Ok(XSpec::Fraction(f)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for XSpec {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<XSpec> for String {
    fn from(x: XSpec) -> String {
        x.to_string()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Protocol constants; unset fields take their defaults per population.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanParams {
    pub c: Option<u32>,
    pub d: Option<u32>,
    pub log: Option<u32>,
}

impl PlanParams {
    pub fn stack_params(&self, n: usize) -> StackParams {
        let base = StackParams::for_population(n);
        StackParams {
            log: self.log.unwrap_or(base.log),
            c: self.c.unwrap_or(DEFAULT_CLOCK_C),
            d: self.d.unwrap_or(DEFAULT_LEADER_D),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentPlan {
    pub task: Task,
    pub n_list: Vec<usize>,
    pub x_list: Vec<XSpec>,
    /// |Y| values; majority only.
    pub y_list: Vec<XSpec>,
    pub m: Option<u64>,
    pub trials: u64,
    pub master_seed: u64,
    pub params: PlanParams,
    pub budget: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

/// Plan fields as read from a config file or flags; everything optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDraft {
    pub task: Option<Task>,
    pub n_list: Option<Vec<usize>>,
    pub x_list: Option<Vec<XSpec>>,
    pub y_list: Option<Vec<XSpec>>,
    pub m: Option<u64>,
    pub trials: Option<u64>,
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub params: PlanParams,
    pub budget: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl PlanDraft {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::Format {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: PlanDraft) -> PlanDraft {
        PlanDraft {
            task: over.task.or(self.task),
            n_list: over.n_list.or(self.n_list),
            x_list: over.x_list.or(self.x_list),
            y_list: over.y_list.or(self.y_list),
            m: over.m.or(self.m),
            trials: over.trials.or(self.trials),
            master_seed: over.master_seed.or(self.master_seed),
            params: PlanParams {
                c: over.params.c.or(self.params.c),
                d: over.params.d.or(self.params.d),
                log: over.params.log.or(self.params.log),
            },
            budget: over.budget.or(self.budget),
            output_path: over.output_path.or(self.output_path),
            format: over.format.or(self.format),
        }
    }

    pub fn validate(self) -> Result<ExperimentPlan> {
        let usage = |m: String| Err(Error::InvalidPlan(m));
        let Some(task) = self.task else {
            return usage("no task given".into());
        };
        let n_list = self.n_list.unwrap_or_default();
        if n_list.is_empty() {
            return usage("empty n list".into());
        }
        if let Some(&n) = n_list.iter().find(|&&n| n < 2) {
            return usage(format!("population size {n} is below 2"));
        }
        let x_list = self.x_list.unwrap_or_else(|| vec![XSpec::Count(0)]);
        if x_list.is_empty() {
            return usage("empty x list".into());
        }
        let y_list = match (task, self.y_list) {
            (Task::Majority, None) => vec![XSpec::Count(0)],
            (Task::Majority, Some(y)) if y.is_empty() => return usage("empty y list".into()),
            (Task::Majority, Some(y)) => y,
            (_, None) => Vec::new(),
            (_, Some(_)) => return usage(format!("y only applies to majority, not {task}")),
        };
        match (task.allows_m(), task.needs_m(), self.m) {
            (false, _, Some(_)) => return usage(format!("m does not apply to {task}")),
            (_, true, None) => return usage(format!("{task} needs m")),
            (_, _, Some(m)) if m < 2 => return usage(format!("modulus {m} is below 2")),
            _ => {}
        }
        let trials = self.trials.unwrap_or(1);
        if trials == 0 {
            return usage("trials must be at least 1".into());
        }
        if self.budget == Some(0) {
            return usage("budget must be positive".into());
        }
        for p in [self.params.c, self.params.d, self.params.log] {
            if p == Some(0) {
                return usage("c, d and log must be positive".into());
            }
        }
        let plan = ExperimentPlan {
            task,
            n_list,
            x_list,
            y_list,
            m: self.m,
            trials,
            master_seed: self.master_seed.unwrap_or(0),
            params: self.params,
            budget: self.budget,
            output_path: self.output_path,
            format: self.format.unwrap_or_default(),
        };
        for cell in plan.cells()? {
            cell.check()?;
        }
        Ok(plan)
    }
}

/// One point of the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub task: Task,
    pub n: usize,
    pub x: usize,
    pub y: Option<usize>,
    pub m: Option<u64>,
    pub params: StackParams,
    pub budget: Option<u64>,
}

impl Cell {
    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPlan(m));
        let (n, x) = (self.n, self.x);
        match self.task {
            Task::Averaging => {}
            Task::Majority => {
                let y = self.y.unwrap_or(0);
                if x + y >= n {
                    return bad(format!("|X| + |Y| = {} leaves no room for the leader at n = {n}", x + y));
                }
            }
            _ if x > n => return bad(format!("|X| = {x} exceeds n = {n}")),
            _ => {}
        }
        if self.task.is_clocked() {
            crate::composer::build_round_plan(self.stack_task(), n, self.params)
                .map_err(|e| Error::InvalidPlan(e.to_string()))?;
        }
        Ok(())
    }

    pub fn stack_task(&self) -> crate::composer::StackTask {
        use crate::composer::StackTask;
        match self.task {
            Task::Parity => StackTask::Parity,
            Task::Congruence => StackTask::Congruence {
                m: self.m.expect("validated"),
            },
            Task::LeaderElection => StackTask::LeaderElection,
            Task::Majority => StackTask::Majority,
            Task::Weights => StackTask::Weights { m: self.m },
            t => panic!("{t} is not a clocked task"),
        }
    }
}

impl ExperimentPlan {
    /// Grid cells in a fixed order: n, then x, then y.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let ys: Vec<Option<&XSpec>> = if self.y_list.is_empty() {
            vec![None]
        } else {
            self.y_list.iter().map(Some).collect()
        };
        let mut out = Vec::new();
        for &n in &self.n_list {
            for x in &self.x_list {
                for y in &ys {
                    out.push(Cell {
                        task: self.task,
                        n,
                        x: x.resolve(n)?,
                        y: y.map(|y| y.resolve(n)).transpose()?,
                        m: self.m,
                        params: self.params.stack_params(n),
                        budget: self.budget,
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn total_trials(&self) -> Result<u64> {
        Ok(self.cells()?.len() as u64 * self.trials)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

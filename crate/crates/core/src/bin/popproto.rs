use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use popproto::audit::{audit_rules, DEFAULT_AUDIT_MODULI};
use popproto::composer::build_round_plan;
use popproto::harness::{
    execute_plan, worker_count, AggregateStats, ExperimentPlan, Format, PlanDraft, PlanParams, Task,
    XSpec,
};
use popproto::Error;

const USAGE: u8 = 1;
const FAILURE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "popproto",
    version,
    about = "Population-protocol experiments",
    after_help = "POPPROTO_WORKERS sets the number of worker threads (default: all cores)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials of any task.
    Run(PlanArgs),
    /// Run a sub-protocol drill (leader-election, majority, weights, averaging).
    Drill(PlanArgs),
    /// Check every module's rules for overlapping patterns and for
    /// disagreement with the implementation.
    AuditRules {
        /// Moduli for the congruence and modular weight tables.
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<u64>>,
        /// Print every finding.
        #[arg(long)]
        verbose: bool,
    },
}

#[derive(Args)]
struct PlanArgs {
    /// TOML file with plan fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    /// Population sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// |X| values: N, a fraction of n, or n/K[+-D].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<XSpec>>,
    /// |Y| values for majority, same forms as --x.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<XSpec>>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed; trial seeds are derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Clock constant: leader interactions per round in units of LOG.
    #[arg(long)]
    c: Option<u32>,
    /// Leader-election rounds in units of LOG.
    #[arg(long)]
    d: Option<u32>,
    /// Override of LOG, the estimate of log2 n.
    #[arg(long)]
    log: Option<u32>,
    /// Interaction budget per trial.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// Print the validated plan and round schedules as JSON and exit.
    #[arg(long)]
    dump_plan: bool,
}

impl PlanArgs {
    fn draft(&self) -> PlanDraft {
        PlanDraft {
            task: self.task,
            n_list: self.n.clone(),
            x_list: self.x.clone(),
            y_list: self.y.clone(),
            m: self.m,
            trials: self.trials,
            master_seed: self.seed,
            params: PlanParams {
                c: self.c,
                d: self.d,
                log: self.log,
            },
            budget: self.budget,
            output_path: self.output.clone(),
            format: self.format,
        }
    }

    fn plan(&self) -> Result<ExperimentPlan, Error> {
        let base = match &self.config {
            // A malformed plan file is bad input, not a failed run.
            Some(path) => PlanDraft::from_toml_file(path).map_err(|e| match e {
                Error::Format { .. } => Error::InvalidPlan(e.to_string()),
                e => e,
            })?,
            None => PlanDraft::default(),
        };
        base.overlay(self.draft()).validate()
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Io { .. } | Error::Format { .. } => ExitCode::from(FAILURE),
        _ => ExitCode::from(USAGE),
    }
}

fn dump_plan(plan: &ExperimentPlan) -> Result<(), Error> {
    let mut schedules = Vec::new();
    if plan.task.is_clocked() {
        for cell in plan.cells()? {
            if schedules.iter().any(|(n, _): &(usize, _)| *n == cell.n) {
                continue;
            }
            schedules.push((cell.n, build_round_plan(cell.stack_task(), cell.n, cell.params)?));
        }
    }
    let doc = serde_json::json!({
        "plan": plan,
        "round_plans": schedules
            .iter()
            .map(|(n, p)| serde_json::json!({ "n": n, "schedule": p }))
            .collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&doc).expect("plan serializes");
    // A closed pipe (e.g. `| head`) is not an error here.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.1}"))
}

fn print_stats(stats: &[AggregateStats]) {
    println!("task,n,x,y,m,trials,correctness_rate,panic_rate,clock,protocol,median_time,p95_time,max_states");
    for s in stats {
        println!(
            "{},{},{},{},{},{},{},{:.4},{},{},{},{},{}",
            s.task,
            s.n,
            s.x,
            s.y.map_or_else(String::new, |y| y.to_string()),
            s.m.map_or_else(String::new, |m| m.to_string()),
            s.trials,
            s.correctness_rate.map_or_else(|| "-".into(), |r| format!("{r:.4}")),
            s.panic_rate,
            s.clock_anomalies,
            s.protocol_anomalies,
            fmt_opt(s.median_parallel_time),
            fmt_opt(s.p95_parallel_time),
            s.max_distinct_states,
        );
    }
}

fn run(args: &PlanArgs, drill: bool) -> ExitCode {
    let plan = match args.plan() {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    if drill && !plan.task.is_drill() {
        return fail(&Error::InvalidPlan(format!("{} is not a drill; use `run`", plan.task)));
    }
    if args.dump_plan {
        return match dump_plan(&plan) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        };
    }
    let workers = match worker_count() {
        Ok(w) => w,
        Err(e) => return fail(&e),
    };
    let (_, stats) = match execute_plan(&plan, workers) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(FAILURE);
        }
    };
    print_stats(&stats);
    let broken = plan.task.is_stable() && stats.iter().any(|s| s.correctness_rate != Some(1.0));
    if broken {
        eprintln!("error: a stable task produced a wrong answer");
        return ExitCode::from(FAILURE);
    }
    ExitCode::SUCCESS
}

fn audit(moduli: Option<&[u64]>, verbose: bool) -> ExitCode {
    let moduli = moduli.unwrap_or(&DEFAULT_AUDIT_MODULI);
    if let Some(&m) = moduli.iter().find(|&&m| !(2..=64).contains(&m)) {
        return fail(&Error::InvalidModulus(m));
    }
    let reports = audit_rules(moduli);
    for r in &reports {
        println!("{r}");
        if verbose {
            for o in &r.overlaps {
                println!("  overlap: {o}");
            }
            for o in &r.mismatches {
                println!("  mismatch: {o}");
            }
        }
    }
    if reports.iter().all(|r| r.is_clean()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match &cli.command {
        Command::Run(a) => run(a, false),
        Command::Drill(a) => run(a, true),
        Command::AuditRules { m, verbose } => audit(m.as_deref(), *verbose),
    }
}

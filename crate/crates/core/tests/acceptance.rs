//! Acceptance suite. Runs every criterion at its stated size and tolerance
//! and prints one PASS/FAIL line per criterion; exits nonzero if any fails.
//!
//! Usage: `cargo test --release --test acceptance [-- 3 6 ...]` to run a
//! subset by number.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;

use popproto::audit::{audit_rules, DEFAULT_AUDIT_MODULI};
use popproto::clock::ceil_log2;
use popproto::composer::{fast_budget, slow_budget, FastStack, StackParams, StackTask};
use popproto::engine::state::{CompoundState, LocalPart, Role};
use popproto::engine::{
    Configuration, Observer, OutputValue, Protocol, RngStream, RunOptions, Simulation,
    TransitionDelta, TrialResult, Verdict,
};
use popproto::harness::{run_plan, worker_count, ExperimentPlan, PlanDraft, PlanParams, Probe, StackProbe, Task, TrialRecord, XSpec};
use popproto::majority::{AveragingDrill, Load, MajorityLocal};
use popproto::slow::{SlowCongruence, SlowCongruenceState};

/// Clock constant used for all clocked criteria, frozen after calibrating
/// the total anomaly rate of the parity stack at n = 4096.
const CLOCK_C: u32 = 3;
const LEADER_D: u32 = 4;

/// Slow parity: mean parallel time ≤ K1 · n log2 n.
const K1: f64 = 1.0;
/// Distinct compound states ≤ K9 · LOG³.
const K9: f64 = 16.0;
/// Averaging reaches discrepancy ≤ 2 within K11 · (log2 δ + log2 n).
const K11: f64 = 4.0;

const MASTER_SEED: u64 = 0x5eed;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

/// Records of clocked runs, kept for the skew criterion.
#[derive(Default)]
struct Ledger {
    probes: Vec<(u8, bool, Probe)>,
    crit6_states: Vec<(u64, u64)>,
}

impl Ledger {
    fn keep(&mut self, criterion: u8, recs: &[TrialRecord]) {
        for r in recs {
            if let Some(p) = r.probe {
                self.probes.push((criterion, r.result.anomaly.is_none(), p));
            }
        }
    }
}

fn plan(task: Task, n: &[usize], x: &[XSpec], trials: u64, salt: u64) -> PlanDraft {
    PlanDraft {
        task: Some(task),
        n_list: Some(n.to_vec()),
        x_list: Some(x.to_vec()),
        trials: Some(trials),
        master_seed: Some(MASTER_SEED ^ salt),
        params: PlanParams {
            c: Some(CLOCK_C),
            d: Some(LEADER_D),
            log: None,
        },
        ..PlanDraft::default()
    }
}

fn run(p: PlanDraft) -> Vec<TrialRecord> {
    let p: ExperimentPlan = p.validate().expect("acceptance plans are valid");
    run_plan(&p, worker_count().expect("worker count")).expect("trials run")
}

fn counts(v: &[usize]) -> Vec<XSpec> {
    v.iter().map(|&x| XSpec::Count(x)).collect()
}

fn rate(hits: usize, total: usize) -> f64 {
    hits as f64 / total.max(1) as f64
}

fn simulate<P: Protocol, O: Observer<P::State>>(
    proto: &P,
    states: Vec<P::State>,
    seed: u64,
    budget: u64,
    stop_on_anomaly: bool,
    obs: &mut O,
) -> (TrialResult, Configuration<P::State>) {
    let mut sim = Simulation::new(proto, states, seed)
        .expect("valid configuration")
        .with_options(RunOptions { stop_on_anomaly });
    let r = sim.run(budget, obs).expect("run");
    (r, sim.config().clone())
}

fn seed(salt: u64, i: u64) -> u64 {
    RngStream::child_seed(MASTER_SEED ^ salt, i)
}

fn c1_slow_parity() -> Outcome {
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for n in [16usize, 256, 1024] {
        let xs: Vec<usize> = {
            let mut v = vec![0, 1, 2, 3, n / 6 - 1, n / 6, n / 6 + 1];
            v.sort_unstable();
            v.dedup();
            v
        };
        let recs = run(plan(Task::SlowParity, &[n], &counts(&xs), 200, 1));
        let wrong = recs.iter().filter(|r| !r.row.correct || !r.row.silent).count();
        if wrong > 0 {
            bad.push(format!("n={n}: {wrong} wrong or unsettled"));
        }
        let bound = n as f64 * (n as f64).log2();
        for &x in &xs {
            let ts: Vec<f64> = recs.iter().filter(|r| r.row.x == x as u64).map(|r| r.row.parallel_time).collect();
            let mean = ts.iter().sum::<f64>() / ts.len() as f64;
            worst = worst.max(mean / bound);
        }
    }
    if worst > K1 {
        bad.push(format!("mean time reaches {worst:.3}·n log n > {K1}"));
    }
    Outcome::new(
        bad.is_empty(),
        format!("max mean/(n log n) = {worst:.3} (K1 = {K1}) {}", bad.join("; ")),
    )
}

/// Checks on every state change that the two agents' total mass drops by
/// 0 or m.
struct MassAudit<'a> {
    p: &'a SlowCongruence,
    steps: u64,
    violations: u64,
}

impl Observer<SlowCongruenceState> for MassAudit<'_> {
    fn on_change(&mut self, _step: u64, d: &TransitionDelta<SlowCongruenceState>) {
        let seq = self.p.sequence();
        let before = d.before.0.mass(seq) + d.before.1.mass(seq);
        let after = d.after.0.mass(seq) + d.after.1.mass(seq);
        self.steps += 1;
        if !(after == before || after + seq.m() == before) {
            self.violations += 1;
        }
    }
}

fn c2_slow_congruence() -> Outcome {
    let mut jobs = Vec::new();
    for m in [2u64, 3, 5, 6, 7, 11] {
        for n in [64usize, 512] {
            let mut xs: Vec<usize> = (0..=2 * m as usize + 1).collect();
            xs.extend([n / 6 - 1, n / 6, n / 6 + 1]);
            xs.sort_unstable();
            xs.dedup();
            for x in xs {
                for t in 0..100u64 {
                    jobs.push((m, n, x, t));
                }
            }
        }
    }
    let results: Vec<(bool, u64, u64)> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(m, n, x, _))| {
            let p = SlowCongruence::new(m).unwrap();
            let mut audit = MassAudit {
                p: &p,
                steps: 0,
                violations: 0,
            };
            let (r, _) = simulate(&p, SlowCongruence::initial(n, x), seed(2, i as u64), slow_budget(n), false, &mut audit);
            let want = if x as u64 % m == 0 {
                OutputValue::Divisible
            } else {
                OutputValue::NotDivisible
            };
            (r.silent && r.output == Some(want), audit.steps, audit.violations)
        })
        .collect();
    let wrong = results.iter().filter(|r| !r.0).count();
    let steps: u64 = results.iter().map(|r| r.1).sum();
    let violations: u64 = results.iter().map(|r| r.2).sum();
    Outcome::new(
        wrong == 0 && violations == 0,
        format!(
            "{} runs, {wrong} wrong; {steps} audited transitions, {violations} mass violations",
            results.len()
        ),
    )
}

fn c3_leader_election(ledger: &mut Ledger) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for n in [1024usize, 4096] {
        let recs = run(plan(Task::LeaderElection, &[n], &counts(&[0]), 500, 3 + n as u64));
        ledger.keep(3, &recs);
        let single = rate(recs.iter().filter(|r| r.row.correct).count(), recs.len());
        let starved = recs.iter().filter(|r| r.probe.map_or(true, |p| p.min_leaders == 0)).count();
        pass &= single >= 0.99 && starved == 0;
        notes.push(format!("n={n}: single-leader {single:.3}, runs losing all leaders {starved}"));
    }
    // Fixtures: k leaders already past the election, all in the final round.
    let n = 1024usize;
    let stack = FastStack::new(
        StackTask::LeaderElection,
        n,
        StackParams::for_population(n).with_c(CLOCK_C).with_d(LEADER_D),
    )
    .unwrap();
    let last = stack.clock_params().final_round();
    let fixtures: Vec<(u64, Option<f64>)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let k = 2 + (i % 3) as usize;
            let states: Vec<CompoundState> = stack
                .initial(n, 0, 0)
                .into_iter()
                .enumerate()
                .map(|(a, mut s)| {
                    s.clock.round = last;
                    s.local = LocalPart::Done;
                    if a >= k {
                        s.global.role = Role::Follower;
                    }
                    s
                })
                .collect();
            let budget = 10 * (n * n) as u64;
            let (r, _) = simulate(&stack, states, seed(31, i), budget, true, &mut ());
            let hit = r
                .anomaly
                .filter(|a| a.kind == popproto::engine::AnomalyKind::Protocol)
                .map(|a| (a.interaction + 1) as f64 / n as f64);
            (k as u64, hit)
        })
        .collect();
    let detected = fixtures.iter().filter(|f| f.1.is_some()).count();
    let within = rate(detected, fixtures.len());
    let mean: f64 = fixtures.iter().filter_map(|f| f.1).sum::<f64>() / detected.max(1) as f64;
    pass &= within >= 0.95;
    notes.push(format!(
        "fixtures n={n}, k in 2..=4: {detected}/{} detected within 10n, mean {mean:.0} parallel time",
        fixtures.len()
    ));
    Outcome::new(pass, notes.join("; "))
}

/// Weighted value sum Σ v · 2^(L - round) over agents holding a plain value.
/// Averaging keeps it and doubling on round entry keeps it, so it must stay
/// at its initial value until a win or tie state appears.
struct MajorityAudit {
    probe: StackProbe,
    horizon: u32,
    initial: i64,
    same_round: u64,
    entries: u64,
    samples: u64,
    violations: u64,
}

fn weight(s: &CompoundState, horizon: u32) -> Option<i64> {
    match s.local {
        LocalPart::Majority(MajorityLocal::Value(v)) => Some(i64::from(v) << (horizon - u32::from(s.clock.round))),
        _ => None,
    }
}

impl Observer<CompoundState> for MajorityAudit {
    fn on_change(&mut self, step: u64, d: &TransitionDelta<CompoundState>) {
        self.probe.on_change(step, d);
        if d.anomaly.is_some() {
            return;
        }
        let h = self.horizon;
        let four = [d.before.0, d.before.1, d.after.0, d.after.1].map(|s| weight(&s, h));
        if let [Some(a), Some(b), Some(c), Some(e)] = four {
            if d.before.0.clock.round == d.after.0.clock.round && d.before.1.clock.round == d.after.1.clock.round {
                self.same_round += 1;
            } else {
                self.entries += 1;
            }
            if a + b != c + e {
                self.violations += 1;
            }
        }
    }

    fn on_sample(&mut self, step: u64, config: &Configuration<CompoundState>) {
        self.probe.on_sample(step, config);
        let total: Option<i64> = config.states().iter().map(|s| weight(s, self.horizon)).sum();
        if let Some(t) = total {
            self.samples += 1;
            if t != self.initial {
                self.violations += 1;
            }
        }
    }
}

fn c4_majority(ledger: &mut Ledger) -> Outcome {
    let n = 4096usize;
    let params = StackParams::for_population(n).with_c(CLOCK_C).with_d(LEADER_D);
    let stack = FastStack::new(StackTask::Majority, n, params).unwrap();
    let horizon = stack.plan().total_rounds;
    let jobs: Vec<(i64, u64)> = (-3..=3).flat_map(|d| (0..300u64).map(move |t| (d, t))).collect();
    let out: Vec<(i64, Option<bool>, bool, [u64; 4], Probe)> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(delta, _))| {
            let mut s = (n / 3) as i64;
            if (s + delta) % 2 != 0 {
                s += 1;
            }
            let x = ((s + delta) / 2) as usize;
            let y = ((s - delta) / 2) as usize;
            let mut audit = MajorityAudit {
                probe: StackProbe::default(),
                horizon,
                initial: (x as i64 - y as i64) << horizon,
                same_round: 0,
                entries: 0,
                samples: 0,
                violations: 0,
            };
            let (r, _) = simulate(&stack, stack.initial(n, x, y), seed(4, i as u64), fast_budget(n, params.log), true, &mut audit);
            let want = OutputValue::Verdict(match delta.signum() {
                1 => Verdict::XWins,
                -1 => Verdict::YWins,
                _ => Verdict::Tie,
            });
            let verdict = r.anomaly.is_none().then(|| r.output == Some(want));
            let c = [audit.same_round, audit.entries, audit.samples, audit.violations];
            (delta, verdict, r.anomaly.is_some(), c, audit.probe.probe())
        })
        .collect();
    for o in &out {
        ledger.probes.push((4, !o.2, o.4));
    }
    let wrong = out.iter().filter(|o| o.1 == Some(false)).count();
    let anomalies = out.iter().filter(|o| o.2).count();
    let sum = |k: usize| out.iter().map(|o| o.3[k]).sum::<u64>();
    let per_delta: BTreeMap<i64, usize> = out.iter().filter(|o| o.2).fold(BTreeMap::new(), |mut m, o| {
        *m.entry(o.0).or_default() += 1;
        m
    });
    let anomaly_rate = rate(anomalies, out.len());
    Outcome::new(
        wrong == 0 && anomaly_rate <= 0.05 && sum(3) == 0,
        format!(
            "{} runs, {wrong} wrong verdicts, anomaly rate {anomaly_rate:.4} (per delta {per_delta:?}); \
             invariant checks: {} averaging, {} doubling, {} whole-population, {} violations",
            out.len(),
            sum(0),
            sum(1),
            sum(2),
            sum(3)
        ),
    )
}

fn c5_weights(ledger: &mut Ledger) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in [1024usize, 4096] {
        let recs = run(plan(Task::Weights, &[n], &counts(&[0]), 200, 5 + n as u64));
        ledger.keep(5, &recs);
        let need = (n as f64 / 3.0).log2();
        let good = recs
            .iter()
            .filter(|r| {
                let max = match r.row.output.parse::<OutputValue>() {
                    Ok(OutputValue::MaxWeight(j)) => j,
                    _ => 0,
                };
                r.row.correct && f64::from(max) > need
            })
            .count();
        let share = rate(good, recs.len());
        pass &= share >= 0.95;
        notes.push(format!("n={n}: {share:.3} exact with Max > {need:.2}"));
        for m in [3u64, 5] {
            let mut p = plan(Task::Weights, &[n], &counts(&[0]), 200, 50 + m + n as u64);
            p.m = Some(m);
            let recs = run(p);
            ledger.keep(5, &recs);
            let share = rate(recs.iter().filter(|r| r.row.correct).count(), recs.len());
            pass &= share >= 0.95;
            notes.push(format!("n={n} m={m}: {share:.3} exact"));
        }
    }
    Outcome::new(pass, notes.join("; "))
}

fn c6_parity(ledger: &mut Ledger) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in [1024usize, 4096] {
        let mut xs: Vec<usize> = (0..=8).collect();
        xs.extend([n / 6 - 1, n / 6]);
        let recs = run(plan(Task::Parity, &[n], &counts(&xs), 100, 6 + n as u64));
        ledger.keep(6, &recs);
        let log = u64::from(ceil_log2(n));
        ledger
            .crit6_states
            .extend(recs.iter().map(|r| (log, r.row.distinct_states)));
        let wrong = recs.iter().filter(|r| !r.row.correct).count();
        let loud = recs.iter().filter(|r| !r.row.silent).count();
        let calm = rate(recs.iter().filter(|r| !r.row.panic).count(), recs.len());
        let panicked = recs.iter().filter(|r| r.row.panic).count();
        pass &= wrong == 0 && loud == 0 && calm >= 0.9;
        notes.push(format!(
            "n={n}: {} runs, {wrong} wrong, {loud} not silent, no-panic rate {calm:.3} ({panicked} panicked, all correct)",
            recs.len()
        ));
    }
    Outcome::new(pass, notes.join("; "))
}

fn c7_congruence(ledger: &mut Ledger) -> Outcome {
    let n = 2048usize;
    let mut pass = true;
    let mut notes = Vec::new();
    for m in [3u64, 5, 11] {
        let xs = [m as usize, m as usize + 1, n / 6];
        let mut p = plan(Task::Congruence, &[n], &counts(&xs), 100, 7 + m);
        p.m = Some(m);
        let recs = run(p);
        ledger.keep(7, &recs);
        let wrong = recs.iter().filter(|r| !r.row.correct).count();
        let loud = recs.iter().filter(|r| !r.row.silent).count();
        let panicked = recs.iter().filter(|r| r.row.panic).count();
        let divisible = xs.iter().filter(|&&x| x as u64 % m == 0).count();
        pass &= wrong == 0 && loud == 0;
        notes.push(format!(
            "m={m} x={xs:?} ({divisible} divisible): {wrong} wrong, {loud} not silent, {panicked} panicked"
        ));
    }
    Outcome::new(pass, notes.join("; "))
}

fn c8_scaling() -> Outcome {
    let mut pts = Vec::new();
    for e in 9..=13u32 {
        let n = 1usize << e;
        let recs = run(plan(Task::Parity, &[n], &[XSpec::Share { k: 6, offset: 0 }], 25, 8 + n as u64));
        let mut ts: Vec<f64> = recs
            .iter()
            .filter(|r| !r.row.panic && r.row.silent)
            .map(|r| r.row.parallel_time)
            .collect();
        ts.sort_by(f64::total_cmp);
        let median = ts[ts.len() / 2];
        pts.push((f64::from(ceil_log2(n)), median));
    }
    let ratios: Vec<f64> = pts.iter().map(|(l, t)| t / l.powi(3)).collect();
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    // Least-squares slope of ln t against ln LOG.
    let k = pts.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|(l, t)| (l.ln(), t.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let shown: Vec<String> = pts.iter().zip(&ratios).map(|((l, t), r)| format!("LOG {l}: {t:.0} ({r:.2}·LOG³)")).collect();
    Outcome::new(
        slope <= 3.25 && spread <= 2.0,
        format!("exponent {slope:.2} (≤ 3.25), ratio spread {spread:.2} (≤ 2); {}", shown.join(", ")),
    )
}

fn c9_states(ledger: &Ledger) -> Outcome {
    let worst = ledger
        .crit6_states
        .iter()
        .map(|&(log, s)| s as f64 / (log as f64).powi(3))
        .fold(0.0, f64::max);
    let max = ledger.crit6_states.iter().map(|s| s.1).max().unwrap_or(0);
    Outcome::new(
        !ledger.crit6_states.is_empty() && worst <= K9,
        format!("max distinct states {max}, max ratio {worst:.2}·LOG³ (K9 = {K9})"),
    )
}

fn c10_skew(ledger: &Ledger) -> Outcome {
    let calm: Vec<_> = ledger.probes.iter().filter(|p| p.1).collect();
    let over: BTreeMap<u8, usize> = calm.iter().filter(|p| p.2.max_skew > 1).fold(BTreeMap::new(), |mut m, p| {
        *m.entry(p.0).or_default() += 1;
        m
    });
    let samples: u64 = calm.iter().map(|p| p.2.samples).sum();
    let sources: std::collections::BTreeSet<u8> = calm.iter().map(|p| p.0).collect();
    Outcome::new(
        over.is_empty() && !calm.is_empty(),
        format!(
            "{} no-anomaly runs from criteria {sources:?}, {samples} samples, runs with skew > 1: {over:?}",
            calm.len()
        ),
    )
}

/// First sample at which max - min load ≤ 2.
struct Settle {
    at: Option<u64>,
}

impl Observer<Load> for Settle {
    fn on_sample(&mut self, step: u64, config: &Configuration<Load>) {
        if self.at.is_none() && AveragingDrill::discrepancy(config) <= 2 {
            self.at = Some(step);
        }
    }

    fn should_stop(&self) -> bool {
        self.at.is_some()
    }
}

fn c11_averaging() -> Outcome {
    let n = 4096usize;
    let mut pass = true;
    let mut notes = Vec::new();
    for delta in [2i64, (n / 6) as i64] {
        let bound = K11 * ((delta as f64).log2() + (n as f64).log2());
        let times: Vec<Option<f64>> = (0..200u64)
            .into_par_iter()
            .map(|i| {
                let mut obs = Settle { at: None };
                simulate(&AveragingDrill, AveragingDrill::initial(n, delta), seed(11 + delta as u64, i), fast_budget(n, 12), false, &mut obs);
                obs.at.map(|s| s as f64 / n as f64)
            })
            .collect();
        let ok = times.iter().filter(|t| t.is_some_and(|t| t <= bound)).count();
        let worst = times.iter().map(|t| t.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
        let share = rate(ok, times.len());
        pass &= share >= 0.95;
        notes.push(format!("δ={delta}: {share:.3} within {bound:.1} (slowest {worst:.0})"));
    }
    Outcome::new(pass, notes.join("; "))
}

fn c12_audit() -> Outcome {
    let reports = audit_rules(&DEFAULT_AUDIT_MODULI);
    let overlaps: usize = reports.iter().map(|r| r.overlaps.len()).sum();
    let mismatches: usize = reports.iter().map(|r| r.mismatches.len()).sum();
    let patterns: u64 = reports.iter().map(|r| r.patterns).sum();
    for r in reports.iter().filter(|r| !r.is_clean()) {
        eprintln!("{r}\n{:#?}\n{:#?}", r.overlaps, r.mismatches);
    }
    Outcome::new(
        overlaps == 0 && mismatches == 0,
        format!("{} tables, {patterns} patterns, {overlaps} overlaps, {mismatches} mismatches", reports.len()),
    )
}

fn main() -> ExitCode {
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |k: u8| only.is_empty() || only.contains(&k);
    let mut ledger = Ledger::default();
    let mut failed = 0;
    let mut report = |k: u8, name: &str, f: &mut dyn FnMut(&mut Ledger) -> Outcome, ledger: &mut Ledger| {
        let t0 = Instant::now();
        let o = f(ledger);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {k:>2} {name}: {} [{:.1}s]", o.detail, t0.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    };
    type Crit<'a> = (u8, &'a str, Box<dyn FnMut(&mut Ledger) -> Outcome>);
    let crits: Vec<Crit> = vec![
        (1, "slow parity exactness", Box::new(|_| c1_slow_parity())),
        (2, "slow congruence exactness", Box::new(|_| c2_slow_congruence())),
        (3, "leader election", Box::new(c3_leader_election)),
        (4, "majority exactness and rates", Box::new(c4_majority)),
        (5, "weights", Box::new(c5_weights)),
        (6, "parity stack stability", Box::new(c6_parity)),
        (7, "congruence stack stability", Box::new(c7_congruence)),
        (8, "scaling shape", Box::new(|_| c8_scaling())),
        (9, "state audit", Box::new(|l: &mut Ledger| c9_states(l))),
        (10, "clock skew", Box::new(|l: &mut Ledger| c10_skew(l))),
        (11, "load balancing", Box::new(|_| c11_averaging())),
        (12, "rule audit", Box::new(|_| c12_audit())),
    ];
    for (k, name, mut f) in crits {
        // Criteria 9 and 10 read the runs of 3 to 7, which must run first.
        let needs = match k {
            9 => wanted(6),
            10 => (3..=7).any(wanted),
            _ => true,
        };
        if wanted(k) && needs {
            report(k, name, &mut *f, &mut ledger);
        } else if wanted(k) {
            println!("[SKIP] {k:>2} {name}: select the criteria whose runs it reads");
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}

//! Sequential portfolio: stage plans, per-stage budgets with hard
//! enforcement, and verdict aggregation.

mod witness;

use std::fmt;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use witness::schedule_from_states;

use crate::bounded::{bmc, imc, kinduction, BoundedVerdict, ImcConfig};
use crate::budget::Budget;
use crate::cegar::{cegar_solve, CegarConfig, CegarVerdict, Domain, RefinementStrategy};
use crate::cfa::{concrete_run, forward_transform, Cfa, CfaError, PredVarMap, Schedule};
use crate::chc::{ChcSystem, Theory};
use crate::model::{invariant_from_arg, invariant_from_sts, parse_model, project_to_model, validate_model, ChcModel, Validation};
use crate::smt::{ItpCapability, SmtContext, SolverConfig};
use crate::sts::{encode, Sts};

/// Unrolling depth cap for the bounded engines; the budget ends them first.
pub const MAX_DEPTH: usize = 1 << 20;
/// How long a stage may overrun its budget before it is abandoned.
pub const GRACE: Duration = Duration::from_millis(900);
pub const MIN_SLICE: Duration = Duration::from_secs(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StageName {
    Bmc,
    Kind,
    Imc,
    Bool,
    Cart,
    Expl,
}

impl StageName {
    pub const ALL: [StageName; 6] = [StageName::Bmc, StageName::Kind, StageName::Imc, StageName::Bool, StageName::Cart, StageName::Expl];

    /// Whether a safe verdict from this stage comes with a model.
    pub fn produces_model(self) -> bool {
        !matches!(self, StageName::Bmc | StageName::Kind)
    }
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageName::Bmc => "BMC",
            StageName::Kind => "KIND",
            StageName::Imc => "IMC",
            StageName::Bool => "BOOL",
            StageName::Cart => "CART",
            StageName::Expl => "EXPL",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown stage `{0}`; expected one of BMC, KIND, IMC, BOOL, CART, EXPL")]
pub struct UnknownStage(pub String);

impl FromStr for StageName {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageName::ALL.into_iter().find(|n| n.to_string().eq_ignore_ascii_case(s)).ok_or_else(|| UnknownStage(s.to_string()))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StageOverrides {
    pub maxenum: Option<usize>,
    pub refinement: Option<RefinementStrategy>,
    pub max_k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub name: StageName,
    /// Planned slice. The last stage of a plan gets whatever time is left.
    pub budget: Duration,
    pub overrides: StageOverrides,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Isolation {
    /// Each stage runs on a worker thread that is abandoned if it overruns.
    InProcess,
    /// Each stage runs as `program --config STAGE …` and is killed if it overruns.
    Subprocess { program: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortfolioPlan {
    pub stages: Vec<Stage>,
    pub total: Duration,
    /// Keep going after a model-less safe verdict until some stage yields a model.
    pub require_model: bool,
    /// Treat an inconclusive model validation as a stage failure.
    pub strict_validation: bool,
    pub isolation: Isolation,
}

/// Default stage order for the system's theory, with `total / (2 · n)` per
/// stage and the remainder for the last one.
pub fn plan_for(sys: &ChcSystem, total: Duration, itp: ItpCapability) -> PortfolioPlan {
    use StageName::*;
    let names = match sys.theory() {
        Theory::Lia | Theory::Lra => vec![Bmc, Kind, Imc, Bool, Cart, Expl],
        Theory::Bv if itp == ItpCapability::GetInterpolant => vec![Kind, Bmc, Imc, Bool, Cart, Expl],
        Theory::Bv => vec![Kind, Bmc, Bool, Cart, Expl],
        Theory::Arrays => vec![Bmc, Kind, Bool, Cart, Expl],
    };
    plan_of(&names, total)
}

/// A plan running the given stages in order with the default budget split.
pub fn plan_of(names: &[StageName], total: Duration) -> PortfolioPlan {
    let n = names.len().max(1) as u32;
    let slice = (total / (2 * n)).max(MIN_SLICE);
    let stages = names
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let budget = if i + 1 == names.len() { total.saturating_sub(slice * (n - 1)).max(MIN_SLICE) } else { slice };
            Stage { name, budget, overrides: StageOverrides::default() }
        })
        .collect();
    PortfolioPlan { stages, total, require_model: false, strict_validation: false, isolation: Isolation::InProcess }
}

/// A system together with its CFA and transition-system encodings.
#[derive(Clone, Debug)]
pub struct Task {
    pub sys: ChcSystem,
    pub cfa: Cfa,
    pub map: PredVarMap,
    pub sts: Sts,
}

impl Task {
    pub fn new(sys: ChcSystem) -> Result<Task, CfaError> {
        let (cfa, map) = forward_transform(&sys)?;
        let sts = encode(&cfa);
        Ok(Task { sys, cfa, map, sts })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StageOutcome {
    /// Safe. A model, when present, passed validation.
    Sat(Option<ChcModel>),
    /// Unsafe. The schedule, when present, replays to the error location.
    Unsat(Option<Schedule>),
    Unknown(String),
    /// Backend failure, invalid model, or failed replay.
    Failed(String),
    Timeout,
}

impl StageOutcome {
    fn log_word(&self) -> &'static str {
        match self {
            StageOutcome::Sat(Some(_)) => "sat-model",
            StageOutcome::Sat(None) => "sat",
            StageOutcome::Unsat(_) => "unsat",
            StageOutcome::Unknown(_) => "unknown",
            StageOutcome::Failed(_) => "failed",
            StageOutcome::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageLog {
    pub name: StageName,
    pub outcome: StageOutcome,
    pub wall: Duration,
    pub solver_calls: u64,
}

impl StageLog {
    /// `name\tverdict\twall_ms\tsolver_calls`
    pub fn tsv(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.name, self.outcome.log_word(), self.wall.as_millis(), self.solver_calls)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FinalVerdict {
    Sat(Option<ChcModel>),
    Unsat(Option<Schedule>),
    Unknown,
}

impl FinalVerdict {
    pub fn word(&self) -> &'static str {
        match self {
            FinalVerdict::Sat(_) => "sat",
            FinalVerdict::Unsat(_) => "unsat",
            FinalVerdict::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PortfolioResult {
    pub verdict: FinalVerdict,
    /// The stage that decided the verdict.
    pub winner: Option<StageName>,
    pub log: Vec<StageLog>,
}

impl PortfolioResult {
    pub fn log_tsv(&self) -> String {
        self.log.iter().map(|l| l.tsv() + "\n").collect()
    }
}

/// Runs one stage to an outcome under `ctx`'s budget, including model
/// validation and witness replay.
pub fn run_stage(task: &Task, stage: &Stage, strict_validation: bool, ctx: &SmtContext) -> StageOutcome {
    let max_k = stage.overrides.max_k.unwrap_or(MAX_DEPTH);
    match stage.name {
        StageName::Bmc => bounded_outcome(task, bmc(&task.sts, max_k, ctx), strict_validation, ctx),
        StageName::Kind => bounded_outcome(task, kinduction(&task.sts, max_k, ctx), strict_validation, ctx),
        StageName::Imc => {
            let config = ImcConfig { max_k: stage.overrides.max_k.unwrap_or(ImcConfig::default().max_k), ..ImcConfig::default() };
            bounded_outcome(task, imc(&task.sts, config, ctx), strict_validation, ctx)
        }
        StageName::Bool | StageName::Cart | StageName::Expl => {
            let mut config = match stage.name {
                StageName::Bool => CegarConfig::boolean(),
                StageName::Cart => CegarConfig::cartesian(),
                _ => CegarConfig::explicit(),
            };
            if let (Some(m), Domain::Explicit { .. }) = (stage.overrides.maxenum, config.domain) {
                config.domain = Domain::Explicit { maxenum: m };
            }
            if let Some(r) = stage.overrides.refinement {
                config.refinement = r;
            }
            match cegar_solve(&task.cfa, &config, ctx) {
                CegarVerdict::Safe { arg, .. } => match invariant_from_arg(&arg, &task.cfa) {
                    Ok(invs) => checked_model(task, project_to_model(&invs, &task.map, &task.cfa), strict_validation, ctx),
                    Err(e) => StageOutcome::Failed(e.to_string()),
                },
                CegarVerdict::Unsafe { schedule, .. } => replayed(task, schedule),
                CegarVerdict::Unknown(r) => StageOutcome::Unknown(r.to_string()),
            }
        }
    }
}

fn bounded_outcome(task: &Task, v: BoundedVerdict, strict: bool, ctx: &SmtContext) -> StageOutcome {
    match v {
        BoundedVerdict::Unsafe { states, .. } => {
            let schedule = ctx.session().map_err(|e| e.to_string()).and_then(|mut s| schedule_from_states(&task.cfa, &states, &mut s));
            match schedule {
                Ok(s) => replayed(task, s),
                Err(e) => StageOutcome::Failed(format!("counterexample replay: {e}")),
            }
        }
        BoundedVerdict::SafeBmcExhausted(_) | BoundedVerdict::SafeKInduction(_) => StageOutcome::Sat(None),
        BoundedVerdict::SafeImc(inv) => {
            let m = project_to_model(&invariant_from_sts(&inv, &task.cfa), &task.map, &task.cfa);
            checked_model(task, m, strict, ctx)
        }
        BoundedVerdict::Unknown(r) => StageOutcome::Unknown(r),
    }
}

fn replayed(task: &Task, schedule: Schedule) -> StageOutcome {
    match concrete_run(&task.cfa, &schedule) {
        Ok(run) if run.reaches_error(&task.cfa) => StageOutcome::Unsat(Some(schedule)),
        _ => StageOutcome::Failed("counterexample does not replay".into()),
    }
}

fn checked_model(task: &Task, m: ChcModel, strict: bool, ctx: &SmtContext) -> StageOutcome {
    let v = ctx.session().map_err(|e| e.to_string()).and_then(|mut s| validate_model(&task.sys, &m, &mut s).map_err(|e| e.to_string()));
    match v {
        Ok(Validation::Valid) => StageOutcome::Sat(Some(m)),
        Ok(Validation::Invalid { clause, .. }) => StageOutcome::Failed(format!("model violates clause {clause}")),
        Ok(Validation::Inconclusive { reason, .. }) | Err(reason) if strict => {
            StageOutcome::Unknown(format!("model validation inconclusive: {reason}"))
        }
        Ok(Validation::Inconclusive { .. }) | Err(_) => StageOutcome::Sat(None),
    }
}

/// Runs the plan's stages in order until one gives a definitive verdict.
pub fn run_portfolio(task: &Arc<Task>, plan: &PortfolioPlan, solver: &SolverConfig) -> PortfolioResult {
    let start = Instant::now();
    let mut log = vec![];
    let mut known_sat: Option<StageName> = None;
    for (i, stage) in plan.stages.iter().enumerate() {
        if known_sat.is_some() && !stage.name.produces_model() {
            continue;
        }
        let remaining = plan.total.saturating_sub(start.elapsed());
        if remaining.is_zero() {
            break;
        }
        let slice = if i + 1 == plan.stages.len() { remaining } else { stage.budget.min(remaining) }.max(MIN_SLICE);
        let t0 = Instant::now();
        let (outcome, calls) = match &plan.isolation {
            Isolation::InProcess => run_in_process(task, stage, slice, plan.strict_validation, solver),
            Isolation::Subprocess { program } => run_subprocess(program, task, stage, slice, plan, solver),
        };
        match &outcome {
            StageOutcome::Unknown(r) | StageOutcome::Failed(r) => log::info!("stage {} {}: {r}", stage.name, outcome.log_word()),
            o => log::info!("stage {} {}", stage.name, o.log_word()),
        }
        log.push(StageLog { name: stage.name, outcome: outcome.clone(), wall: t0.elapsed(), solver_calls: calls });
        match outcome {
            StageOutcome::Sat(Some(m)) => return PortfolioResult { verdict: FinalVerdict::Sat(Some(m)), winner: Some(stage.name), log },
            StageOutcome::Sat(None) if !plan.require_model => {
                return PortfolioResult { verdict: FinalVerdict::Sat(None), winner: Some(stage.name), log }
            }
            StageOutcome::Sat(None) => known_sat = known_sat.or(Some(stage.name)),
            StageOutcome::Unsat(w) => return PortfolioResult { verdict: FinalVerdict::Unsat(w), winner: Some(stage.name), log },
            StageOutcome::Unknown(_) | StageOutcome::Failed(_) | StageOutcome::Timeout => {}
        }
    }
    match known_sat {
        Some(name) => PortfolioResult { verdict: FinalVerdict::Sat(None), winner: Some(name), log },
        None => PortfolioResult { verdict: FinalVerdict::Unknown, winner: None, log },
    }
}

fn run_in_process(task: &Arc<Task>, stage: &Stage, slice: Duration, strict: bool, solver: &SolverConfig) -> (StageOutcome, u64) {
    let ctx = SmtContext::new(solver.clone(), Budget::with_timeout(slice));
    let (tx, rx) = mpsc::channel();
    let (t, s, c) = (task.clone(), stage.clone(), ctx.clone());
    let spawned = std::thread::Builder::new().name(format!("stage-{}", stage.name)).spawn(move || {
        let _ = tx.send(run_stage(&t, &s, strict, &c));
    });
    if let Err(e) = spawned {
        return (StageOutcome::Failed(format!("cannot start stage thread: {e}")), 0);
    }
    let outcome = match rx.recv_timeout(slice) {
        Ok(o) => o,
        Err(mpsc::RecvTimeoutError::Timeout) => {
            ctx.budget.cancel();
            match rx.recv_timeout(GRACE) {
                // A definitive answer that raced the deadline still counts.
                Ok(o @ (StageOutcome::Sat(_) | StageOutcome::Unsat(_))) => o,
                // Otherwise the worker is abandoned; it holds no shared state.
                _ => StageOutcome::Timeout,
            }
        }
        Err(mpsc::RecvTimeoutError::Disconnected) => StageOutcome::Failed("stage panicked".into()),
    };
    let outcome = match outcome {
        StageOutcome::Unknown(r) if r.contains("timeout") || r.contains("cancelled") => StageOutcome::Timeout,
        o => o,
    };
    (outcome, ctx.solver_calls())
}

/// Command-line arguments for running one stage as a child process.
pub fn subprocess_args(stage: &Stage, slice: Duration, plan: &PortfolioPlan, solver: &SolverConfig, log: &std::path::Path) -> Vec<String> {
    let mut a = vec![
        "--config".to_string(),
        stage.name.to_string(),
        "--timeout".into(),
        format!("{:.3}", slice.as_secs_f64()),
        "--print-model".into(),
        "--smt-solver".into(),
        format!("main={}", solver.path.display()),
        "--log".into(),
        log.display().to_string(),
    ];
    if let Some(p) = &solver.itp_path {
        a.extend(["--smt-solver".into(), format!("itp={}", p.display())]);
    }
    if let Some(seed) = solver.seed {
        a.extend(["--seed".into(), seed.to_string()]);
    }
    if plan.strict_validation {
        a.push("--strict-validation".into());
    }
    a.push("-".into());
    a
}

fn run_subprocess(
    program: &std::path::Path,
    task: &Task,
    stage: &Stage,
    slice: Duration,
    plan: &PortfolioPlan,
    solver: &SolverConfig,
) -> (StageOutcome, u64) {
    let log_file = match tempfile::NamedTempFile::new() {
        Ok(f) => f,
        Err(e) => return (StageOutcome::Failed(format!("temporary log: {e}")), 0),
    };
    let args = subprocess_args(stage, slice, plan, solver, log_file.path());
    let child = Command::new(program).args(&args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::null()).spawn();
    let mut child = match child {
        Ok(c) => c,
        Err(e) => return (StageOutcome::Failed(format!("cannot start `{}`: {e}", program.display())), 0),
    };
    let input = task.sys.to_smtlib();
    if let Some(mut stdin) = child.stdin.take() {
        let _ = stdin.write_all(input.as_bytes());
    }
    let mut stdout = child.stdout.take().unwrap();
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = std::io::Read::read_to_string(&mut stdout, &mut s);
        s
    });
    let deadline = Instant::now() + slice + GRACE;
    let status = loop {
        match child.try_wait() {
            Ok(Some(st)) => break Some(st),
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(10)),
            Err(_) => break None,
        }
    };
    let out = reader.join().unwrap_or_default();
    let calls = std::fs::read_to_string(log_file.path())
        .ok()
        .and_then(|l| l.lines().next().and_then(|line| line.split('\t').nth(3)).and_then(|c| c.parse().ok()))
        .unwrap_or(0);
    if status.is_none() {
        return (StageOutcome::Timeout, calls);
    }
    let mut lines = out.splitn(2, '\n');
    let outcome = match lines.next().map(str::trim) {
        Some("sat") => match lines.next().map(str::trim).filter(|m| !m.is_empty()) {
            Some(text) => match parse_model(&task.sys, text) {
                Ok(m) => StageOutcome::Sat(Some(m)),
                Err(e) => StageOutcome::Failed(format!("unreadable model from child: {e}")),
            },
            None => StageOutcome::Sat(None),
        },
        Some("unsat") => StageOutcome::Unsat(None),
        Some("unknown") => StageOutcome::Unknown("child reported unknown".into()),
        _ => StageOutcome::Failed("child produced no verdict".into()),
    };
    (outcome, calls)
}

#[cfg(test)]
mod tests;

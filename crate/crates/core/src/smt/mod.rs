//! SMT-LIB v2 solver sessions over a child process.
//!
//! One session owns one solver process. Replies are read by a helper thread so
//! every wait can be bounded by the caller's [`Budget`]; when the budget runs
//! out the process is killed, even if the solver ignores its own timeout.

mod itp;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::budget::{Budget, Interrupted};
use crate::smtlib::{parse_sexps, parse_value, Sexp, Signature, TermParser};
use crate::term::{Term, Valuation, Var};

pub use itp::{Interpolator, ItpDirection, ItpError};

/// Environment variable overriding the default solver executable.
pub const SOLVER_ENV: &str = "CHC_SMT_SOLVER";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SmtError {
    #[error("cannot start solver `{0}`: {1}")]
    Spawn(String, String),
    #[error("solver process died: {0}")]
    BackendCrash(String),
    #[error("unexpected solver reply: {0}")]
    Protocol(String),
    #[error("solver session is unusable after an earlier failure")]
    Poisoned,
    #[error(transparent)]
    Interrupted(#[from] Interrupted),
}

/// Which interpolation command the backend understands, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ItpCapability {
    #[default]
    None,
    /// `(get-interpolant A B)` as implemented by Z3.
    GetInterpolant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    /// Per-query limit on top of the session budget.
    pub query_timeout: Option<Duration>,
    pub interpolation: ItpCapability,
    /// Executable for interpolation sessions, when it differs from `path`.
    pub itp_path: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let path = std::env::var_os(SOLVER_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("z3"));
        SolverConfig {
            path,
            args: vec!["-in".into(), "-smt2".into()],
            seed: Some(0),
            query_timeout: None,
            interpolation: ItpCapability::None,
            itp_path: None,
        }
    }
}

/// Shared context for one engine run: solver configuration, budget, and a
/// counter of solver queries for the run log.
#[derive(Clone, Debug)]
pub struct SmtContext {
    pub config: SolverConfig,
    pub budget: Budget,
    pub calls: Arc<AtomicU64>,
}

impl SmtContext {
    pub fn new(config: SolverConfig, budget: Budget) -> Self {
        SmtContext { config, budget, calls: Arc::new(AtomicU64::new(0)) }
    }

    pub fn session(&self) -> Result<SolverSession, SmtError> {
        SolverSession::start(&self.config, self.budget.clone(), self.calls.clone())
    }

    /// A session on the interpolation backend.
    pub fn itp_session(&self) -> Result<SolverSession, SmtError> {
        match &self.config.itp_path {
            Some(p) => {
                let config = SolverConfig { path: p.clone(), ..self.config.clone() };
                SolverSession::start(&config, self.budget.clone(), self.calls.clone())
            }
            None => self.session(),
        }
    }

    pub fn solver_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    Unknown(String),
}

/// Outcome of a one-shot [`check_sat`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckResult {
    Sat(Valuation),
    /// Indices of an unsat core over the given assertions.
    Unsat(Option<Vec<usize>>),
    Unknown(String),
}

pub struct SolverSession {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<String>,
    budget: Budget,
    calls: Arc<AtomicU64>,
    query_timeout: Option<Duration>,
    /// Declared variables per assertion level (index 0 is the base level).
    declared: Vec<BTreeSet<Var>>,
    /// Names of `:named` assertions per level.
    named: Vec<usize>,
    next_name: usize,
    poisoned: bool,
    pub(crate) itp: ItpCapability,
}

impl SolverSession {
    pub fn start(config: &SolverConfig, budget: Budget, calls: Arc<AtomicU64>) -> Result<SolverSession, SmtError> {
        budget.check()?;
        let path = config.path.display().to_string();
        let mut child = Command::new(&config.path)
            .args(&config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::Spawn(path, e.to_string()))?;
        let stdin = child.stdin.take().unwrap();
        let stdout = child.stdout.take().unwrap();
        let (tx, replies) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut s = SolverSession {
            child,
            stdin,
            replies,
            budget,
            calls,
            query_timeout: config.query_timeout,
            declared: vec![BTreeSet::new()],
            named: vec![0],
            next_name: 0,
            poisoned: false,
            itp: config.interpolation,
        };
        s.send("(set-option :print-success false)")?;
        s.send("(set-option :produce-models true)")?;
        s.send("(set-option :produce-unsat-cores true)")?;
        if let Some(seed) = config.seed {
            s.send(&format!("(set-option :random-seed {seed})"))?;
        }
        Ok(s)
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn depth(&self) -> usize {
        self.declared.len() - 1
    }

    fn poison<T>(&mut self, e: SmtError) -> Result<T, SmtError> {
        self.poisoned = true;
        let _ = self.child.kill();
        Err(e)
    }

    fn send(&mut self, cmd: &str) -> Result<(), SmtError> {
        if self.poisoned {
            return Err(SmtError::Poisoned);
        }
        log::trace!("smt> {cmd}");
        if let Err(e) = writeln!(self.stdin, "{cmd}").and_then(|_| self.stdin.flush()) {
            return self.poison(SmtError::BackendCrash(e.to_string()));
        }
        Ok(())
    }

    /// Reads one complete s-expression reply, waiting at most until `deadline`.
    fn read_reply(&mut self, deadline: Option<Instant>) -> Result<String, SmtError> {
        let mut buf = String::new();
        let mut depth: i64 = 0;
        loop {
            if self.budget.is_cancelled() {
                return self.poison(SmtError::Interrupted(Interrupted::Cancelled));
            }
            let wait = match deadline {
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return self.poison(SmtError::Interrupted(Interrupted::Timeout));
                    }
                    (d - now).min(Duration::from_millis(50))
                }
                None => Duration::from_millis(50),
            };
            match self.replies.recv_timeout(wait) {
                Ok(line) => {
                    log::trace!("smt< {line}");
                    depth += paren_balance(&line);
                    if !buf.is_empty() {
                        buf.push('\n');
                    }
                    buf.push_str(&line);
                    if depth <= 0 && !buf.trim().is_empty() {
                        if buf.trim_start().starts_with("(error") {
                            return self.poison(SmtError::Protocol(buf));
                        }
                        return Ok(buf);
                    }
                }
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => {
                    let status = self.child.try_wait().ok().flatten().map(|s| s.to_string()).unwrap_or_default();
                    return self.poison(SmtError::BackendCrash(format!("output closed {status}")));
                }
            }
        }
    }

    fn query_deadline(&self) -> Option<Instant> {
        let q = self.query_timeout.map(|t| Instant::now() + t);
        match (self.budget.deadline(), q) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn declare_free(&mut self, t: &Term) -> Result<(), SmtError> {
        let mut cmds = String::new();
        for v in t.free_vars() {
            if self.declared.iter().any(|d| d.contains(&v)) {
                continue;
            }
            let _ = writeln!(cmds, "(declare-fun {} () {})", v.term(), v.sort());
            self.declared.last_mut().unwrap().insert(v);
        }
        if !cmds.is_empty() {
            self.send(cmds.trim_end())?;
        }
        Ok(())
    }

    pub fn assert(&mut self, t: &Term) -> Result<(), SmtError> {
        self.declare_free(t)?;
        self.send(&format!("(assert {t})"))
    }

    /// Asserts a named formula; the returned id appears in unsat cores.
    pub fn assert_named(&mut self, t: &Term) -> Result<usize, SmtError> {
        self.declare_free(t)?;
        let id = self.next_name;
        self.next_name += 1;
        *self.named.last_mut().unwrap() += 1;
        self.send(&format!("(assert (! {t} :named a!{id}))"))?;
        Ok(id)
    }

    pub fn push(&mut self) -> Result<(), SmtError> {
        self.send("(push 1)")?;
        self.declared.push(BTreeSet::new());
        self.named.push(0);
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), SmtError> {
        if self.declared.len() == 1 {
            return Err(SmtError::Protocol("pop without matching push".into()));
        }
        self.send("(pop 1)")?;
        self.declared.pop();
        self.named.pop();
        Ok(())
    }

    pub fn reset(&mut self) -> Result<(), SmtError> {
        self.send("(reset)")?;
        self.send("(set-option :print-success false)")?;
        self.send("(set-option :produce-models true)")?;
        self.send("(set-option :produce-unsat-cores true)")?;
        self.declared = vec![BTreeSet::new()];
        self.named = vec![0];
        Ok(())
    }

    pub fn check(&mut self) -> Result<SatResult, SmtError> {
        self.budget.check().or_else(|e| self.poison(e.into()))?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        let deadline = self.query_deadline();
        if let Some(d) = deadline {
            let ms = d.saturating_duration_since(Instant::now()).as_millis().max(1);
            self.send(&format!("(set-option :timeout {ms})"))?;
        }
        self.send("(check-sat)")?;
        // Slack for the solver to notice its own timeout before the hard kill.
        let hard = deadline.map(|d| d + Duration::from_millis(200));
        let r = self.read_reply(hard)?;
        match r.trim() {
            "sat" => Ok(SatResult::Sat),
            "unsat" => Ok(SatResult::Unsat),
            "unknown" => {
                self.send("(get-info :reason-unknown)")?;
                let why = self.read_reply(hard.map(|h| h + Duration::from_millis(500))).unwrap_or_default();
                Ok(SatResult::Unknown(why))
            }
            other => self.poison(SmtError::Protocol(other.to_string())),
        }
    }

    /// `check` under extra assertions that are retracted afterwards.
    pub fn check_with(&mut self, extra: &[Term]) -> Result<SatResult, SmtError> {
        self.push()?;
        let r = extra.iter().try_for_each(|t| self.assert(t)).and_then(|_| self.check());
        let p = self.pop();
        let r = r?;
        p?;
        Ok(r)
    }

    /// Values of `vars` in the current model; variables the solver does not
    /// know or whose value cannot be read back are left out.
    pub fn get_values(&mut self, vars: &[Var]) -> Result<Valuation, SmtError> {
        let known: Vec<&Var> = vars.iter().filter(|v| self.declared.iter().any(|d| d.contains(*v))).collect();
        let mut out = Valuation::new();
        if known.is_empty() {
            return Ok(out);
        }
        let names: Vec<String> = known.iter().map(|v| v.term().to_string()).collect();
        self.send(&format!("(get-value ({}))", names.join(" ")))?;
        let deadline = self.budget.deadline().map(|d| d + Duration::from_millis(500));
        let r = self.read_reply(deadline)?;
        let parsed = match parse_sexps(&r) {
            Ok(mut e) if e.len() == 1 => e.pop().unwrap(),
            _ => return self.poison(SmtError::Protocol(r)),
        };
        let Some(pairs) = parsed.list() else {
            return self.poison(SmtError::Protocol(r));
        };
        for (v, pair) in known.iter().zip(pairs) {
            match pair.list() {
                Some([_, val]) => match parse_value(val, v.sort()) {
                    Ok(x) => out.insert((*v).clone(), x),
                    Err(e) => log::debug!("cannot read value of {v}: {e}"),
                },
                _ => return self.poison(SmtError::Protocol(r.clone())),
            }
        }
        Ok(out)
    }

    /// Ids of named assertions in the last unsat core.
    pub fn unsat_core(&mut self) -> Result<Vec<usize>, SmtError> {
        self.send("(get-unsat-core)")?;
        let r = self.read_reply(self.budget.deadline().map(|d| d + Duration::from_millis(500)))?;
        let parsed = parse_sexps(&r).map_err(|e| SmtError::Protocol(e.to_string()))?;
        let mut ids = Vec::new();
        for e in parsed.iter().flat_map(|e| e.list().unwrap_or(&[])) {
            if let Some(id) = e.symbol().and_then(|s| s.strip_prefix("a!")).and_then(|s| s.parse().ok()) {
                ids.push(id);
            }
        }
        ids.sort_unstable();
        Ok(ids)
    }

    /// Eliminates quantifiers from `t` using the solver's `qe` tactic.
    /// Returns `None` when the result still contains quantifiers or cannot
    /// be read back.
    pub fn eliminate_quantifiers(&mut self, t: &Term) -> Result<Option<Term>, SmtError> {
        self.budget.check().or_else(|e| self.poison(e.into()))?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        let free: Vec<Var> = t.free_vars().into_iter().collect();
        // The tactic works on every assertion in scope, so run it in a fresh
        // frame of an otherwise empty session.
        if self.named.iter().any(|n| *n > 0) {
            return Err(SmtError::Protocol("quantifier elimination needs an empty assertion stack".into()));
        }
        self.push()?;
        let res = (|| {
            self.assert(t)?;
            self.send("(apply (then qe simplify))")?;
            self.read_reply(self.query_deadline().map(|d| d + Duration::from_millis(200)))
        })();
        let p = self.pop();
        let reply = res?;
        p?;
        Ok(parse_goals(&reply, &free))
    }

    /// Backend interpolation, when the capability flag allows it.
    pub fn get_interpolant(&mut self, a: &Term, b: &Term) -> Result<Option<Term>, SmtError> {
        if self.itp != ItpCapability::GetInterpolant {
            return Ok(None);
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let free: Vec<Var> = a.free_vars().union(&b.free_vars()).cloned().collect();
        self.push()?;
        let res = (|| {
            self.declare_free(a)?;
            self.declare_free(b)?;
            self.send(&format!("(get-interpolant {a} {b})"))?;
            self.read_reply(self.query_deadline().map(|d| d + Duration::from_millis(200)))
        })();
        let p = self.pop();
        let reply = res?;
        p?;
        let sig = Signature::default();
        let parsed = parse_sexps(&reply).ok().and_then(|mut e| e.pop());
        Ok(parsed.and_then(|e| TermParser::with_vars(&sig, &free).parse(&e).ok()).filter(Term::is_quantifier_free))
    }
}

impl Drop for SolverSession {
    fn drop(&mut self) {
        if !self.poisoned {
            let _ = writeln!(self.stdin, "(exit)");
            let _ = self.stdin.flush();
        }
        // Give a well-behaved solver a moment, then make sure it is gone.
        for _ in 0..20 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            std::thread::sleep(Duration::from_millis(1));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn paren_balance(line: &str) -> i64 {
    let mut d = 0;
    let mut in_bar = false;
    let mut in_str = false;
    for c in line.chars() {
        match c {
            '|' if !in_str => in_bar = !in_bar,
            '"' if !in_bar => in_str = !in_str,
            '(' if !in_bar && !in_str => d += 1,
            ')' if !in_bar && !in_str => d -= 1,
            _ => {}
        }
    }
    d
}

/// Reads `(goals (goal f1 … :precision … :depth …))` into a conjunction.
fn parse_goals(reply: &str, free: &[Var]) -> Option<Term> {
    let e = parse_sexps(reply).ok()?.pop()?;
    let items = e.list()?;
    if items.first()?.symbol()? != "goals" {
        return None;
    }
    let sig = Signature::default();
    let mut disj = Vec::new();
    for g in &items[1..] {
        let gl = g.list()?;
        if gl.first()?.symbol()? != "goal" {
            return None;
        }
        let mut conj = Vec::new();
        let mut it = gl[1..].iter();
        while let Some(x) = it.next() {
            if let Sexp::Atom(crate::smtlib::Atom::Keyword(_), _) = x {
                it.next();
                continue;
            }
            let t = TermParser::with_vars(&sig, free).parse(x).ok()?;
            if !t.is_quantifier_free() {
                return None;
            }
            conj.push(t);
        }
        disj.push(Term::and(conj));
    }
    Some(Term::or(disj))
}

/// Checks a set of assertions in a fresh session. On `Sat`, returns values
/// for every free variable; on `Unsat`, an unsat core over assertion indices.
pub fn check_sat(ctx: &SmtContext, assertions: &[Term]) -> Result<CheckResult, SmtError> {
    let mut s = ctx.session()?;
    let mut ids = Vec::new();
    for a in assertions {
        ids.push(s.assert_named(a)?);
    }
    match s.check()? {
        SatResult::Sat => {
            let vars: Vec<Var> = assertions.iter().flat_map(|a| a.free_vars()).collect::<BTreeSet<_>>().into_iter().collect();
            Ok(CheckResult::Sat(s.get_values(&vars)?))
        }
        SatResult::Unsat => {
            let core = s.unsat_core().ok().map(|c| c.into_iter().filter_map(|id| ids.iter().position(|x| *x == id)).collect());
            Ok(CheckResult::Unsat(core))
        }
        SatResult::Unknown(r) => Ok(CheckResult::Unknown(r)),
    }
}

/// Whether `a ⊨ b`, decided by checking `a ∧ ¬b` in the session.
pub fn entails(s: &mut SolverSession, a: &Term, b: &Term) -> Result<Option<bool>, SmtError> {
    Ok(match s.check_with(&[a.clone(), Term::not(b.clone())])? {
        SatResult::Unsat => Some(true),
        SatResult::Sat => Some(false),
        SatResult::Unknown(_) => None,
    })
}

/// True when a solver binary can be started with the given configuration.
pub fn solver_available(config: &SolverConfig) -> bool {
    let ctx = SmtContext::new(config.clone(), Budget::with_timeout(Duration::from_secs(10)));
    matches!(check_sat(&ctx, &[Term::tt()]), Ok(CheckResult::Sat(_)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Op, Sort, Value};

    fn ctx() -> SmtContext {
        SmtContext::new(SolverConfig::default(), Budget::with_timeout(Duration::from_secs(20)))
    }

    fn x() -> Var {
        Var::new("x", Sort::Int)
    }

    #[test]
    fn contradictory_bounds_give_core() {
        let a = Term::binary(Op::Gt, x().term(), Term::int(0));
        let b = Term::binary(Op::Lt, x().term(), Term::int(0));
        let c = Term::binary(Op::Lt, x().term(), Term::int(100));
        match check_sat(&ctx(), &[a, c, b]).unwrap() {
            CheckResult::Unsat(Some(core)) => assert_eq!(core, vec![0, 2]),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn model_is_read_back() {
        match check_sat(&ctx(), &[Term::eq(x().term(), Term::int(1))]).unwrap() {
            CheckResult::Sat(m) => assert_eq!(m.get(&x()), Some(&Value::int(1))),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn push_pop_restores() {
        let c = ctx();
        let mut s = c.session().unwrap();
        s.assert(&Term::binary(Op::Gt, x().term(), Term::int(0))).unwrap();
        assert_eq!(s.check().unwrap(), SatResult::Sat);
        s.push().unwrap();
        s.assert(&Term::ff()).unwrap();
        assert_eq!(s.check().unwrap(), SatResult::Unsat);
        s.pop().unwrap();
        assert_eq!(s.check().unwrap(), SatResult::Sat);
        assert!(c.solver_calls() >= 3);
    }

    #[test]
    fn tiny_budget_yields_unknown_or_timeout() {
        let cfg = SolverConfig { query_timeout: Some(Duration::from_millis(1)), ..SolverConfig::default() };
        let c = SmtContext::new(cfg, Budget::with_timeout(Duration::from_secs(10)));
        let w = Sort::BitVec(64);
        let (a, b) = (Var::new("a", w.clone()), Var::new("b", w.clone()));
        let prod = Term::binary(Op::BvMul, a.term(), b.term());
        let f = Term::and([
            Term::eq(prod, Term::bv(64, 0x1234_5678_9abc_def1)),
            Term::binary(Op::BvUgt, a.term(), Term::bv(64, 1)),
            Term::binary(Op::BvUgt, b.term(), Term::bv(64, 1)),
        ]);
        match check_sat(&c, &[f]) {
            Ok(CheckResult::Unknown(_)) | Err(SmtError::Interrupted(_)) => {}
            // A fast machine may still finish; only the handling is under test.
            Ok(_) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn missing_binary_is_spawn_error() {
        let cfg = SolverConfig { path: "/nonexistent/solver".into(), ..SolverConfig::default() };
        let c = SmtContext::new(cfg, Budget::unlimited());
        assert!(matches!(c.session(), Err(SmtError::Spawn(..))));
    }

    #[test]
    fn quantifier_elimination() {
        let c = ctx();
        let mut s = c.session().unwrap();
        let y = Var::new("y", Sort::Int);
        let t = Term::exists(
            vec![y.clone()],
            Term::and([Term::eq(x().term(), Term::binary(Op::Add, y.term(), Term::int(1))), Term::binary(Op::Ge, y.term(), Term::int(0))]),
        );
        let r = s.eliminate_quantifiers(&t).unwrap().unwrap();
        assert!(r.is_quantifier_free());
        assert_eq!(r.free_vars().into_iter().collect::<Vec<_>>(), vec![x()]);
        // x >= 1 exactly.
        let neg = Term::not(Term::binary(Op::Ge, x().term(), Term::int(1)));
        assert_eq!(s.check_with(&[r.clone(), neg]).unwrap(), SatResult::Unsat);
        assert_eq!(s.check_with(&[Term::not(r), Term::binary(Op::Ge, x().term(), Term::int(1))]).unwrap(), SatResult::Unsat);
    }
}

//! Brute-force least-model computation over a bounded universe.
//!
//! Deliberately independent of any solver: clauses are evaluated with
//! [`crate::term::evaluate`] only, so it can cross-check every engine.

use std::collections::{BTreeSet, HashMap};

use super::{ChcError, ChcSystem, Clause, Head};
use crate::term::{eval::eval_with, Sort, Term, Value, Var};

/// Default limit on the number of predicate tuples in the universe.
pub const DEFAULT_CELL_BUDGET: u128 = 1 << 22;

/// Finite ranges used to close infinite sorts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// Inclusive interval for `Int` variables.
    pub int_range: Option<(i64, i64)>,
    pub cell_budget: u128,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { int_range: None, cell_budget: DEFAULT_CELL_BUDGET }
    }
}

impl Bounds {
    pub fn ints(lo: i64, hi: i64) -> Bounds {
        Bounds { int_range: Some((lo, hi)), ..Bounds::default() }
    }

    /// Every value of `sort` inside the bounds, in ascending order.
    pub fn domain(&self, sort: &Sort) -> Result<Vec<Value>, ChcError> {
        match sort {
            Sort::Int => match self.int_range {
                Some((lo, hi)) => Ok((lo..=hi).map(Value::int).collect()),
                None => Err(ChcError::Unbounded(Sort::Int)),
            },
            s => Value::enumerate(s).ok_or_else(|| ChcError::Unbounded(s.clone())),
        }
    }

    fn size(&self, sort: &Sort) -> Result<u128, ChcError> {
        match sort {
            Sort::Int => match self.int_range {
                Some((lo, hi)) => Ok((hi - lo + 1).max(0) as u128),
                None => Err(ChcError::Unbounded(Sort::Int)),
            },
            s => s.cardinality().ok_or_else(|| ChcError::Unbounded(s.clone())),
        }
    }
}

/// Verdict of the oracle. `Sat` carries the least model as explicit tuple sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Sat(Vec<BTreeSet<Vec<Value>>>),
    Unsat,
}

impl OracleVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, OracleVerdict::Sat(_))
    }
}

/// Computes the least model by Kleene iteration of the immediate-consequence
/// operator, stopping as soon as a query clause fires.
pub fn ground_truth_oracle(sys: &ChcSystem, bounds: &Bounds) -> Result<OracleVerdict, ChcError> {
    let mut cells: u128 = 0;
    for p in sys.predicates() {
        let mut n: u128 = 1;
        for s in &p.arg_sorts {
            n = n.saturating_mul(bounds.size(s)?);
        }
        cells = cells.saturating_add(n);
    }
    if cells > bounds.cell_budget {
        return Err(ChcError::BoundsTooLarge { cells, budget: bounds.cell_budget });
    }
    let plans = sys.clauses().iter().map(|c| ClausePlan::new(c, bounds)).collect::<Result<Vec<_>, _>>()?;
    let mut ext: Vec<BTreeSet<Vec<Value>>> = vec![BTreeSet::new(); sys.predicates().len()];
    loop {
        let mut fresh: Vec<(usize, Vec<Value>)> = Vec::new();
        for (c, plan) in sys.clauses().iter().zip(&plans) {
            let mut fired = false;
            plan.consequences(c, &ext, &mut |tuple| match &c.head {
                Head::False => {
                    fired = true;
                    false
                }
                Head::Atom(a) => {
                    if !ext[a.pred].contains(&tuple) {
                        fresh.push((a.pred, tuple));
                    }
                    true
                }
            });
            if fired {
                return Ok(OracleVerdict::Unsat);
            }
        }
        let mut grew = false;
        for (p, t) in fresh {
            grew |= ext[p].insert(t);
        }
        if !grew {
            return Ok(OracleVerdict::Sat(ext));
        }
    }
}

/// Runs the oracle on many systems, in parallel when the `parallel` feature is
/// on. Each individual oracle call stays single-threaded.
pub fn oracle_batch(systems: &[ChcSystem], bounds: &Bounds) -> Vec<Result<OracleVerdict, ChcError>> {
    crate::par::map(systems, |s| ground_truth_oracle(s, bounds))
}

/// How to bind one clause variable during the search.
#[derive(Clone, Debug)]
enum Step {
    /// Enumerate the whole bounded domain.
    Enumerate(Var, Vec<Value>),
    /// Compute from an equation whose other side is already bound.
    Define(Var, Term, Vec<Value>),
}

/// Search order for a clause: body atoms bind their arguments, then the
/// remaining variables are defined or enumerated, with each constraint
/// conjunct checked as soon as its variables are bound.
struct ClausePlan {
    steps: Vec<Step>,
    /// `checks[i]` holds the conjuncts decided once step `i` (or, for index 0,
    /// the atom bindings) completes.
    checks: Vec<Vec<Term>>,
}

impl ClausePlan {
    fn new(c: &Clause, bounds: &Bounds) -> Result<ClausePlan, ChcError> {
        let mut bound: BTreeSet<Var> = c.body.iter().flat_map(|a| a.args.iter().cloned()).collect();
        let conj = c.constraint.conjuncts();
        let mut pending: Vec<Term> = conj.clone();
        let mut checks = vec![take_decided(&mut pending, &bound)];
        let mut steps = Vec::new();
        let mut todo: Vec<Var> = c.vars.iter().filter(|v| !bound.contains(*v)).cloned().collect();
        // Variables not mentioned anywhere still range over their domain, but
        // only if they matter; unused ones are dropped from the search.
        let mentioned: BTreeSet<Var> =
            c.constraint.free_vars().into_iter().chain(c.head_atom().into_iter().flat_map(|a| a.args.iter().cloned())).collect();
        todo.retain(|v| mentioned.contains(v));
        while !todo.is_empty() {
            let def = todo.iter().enumerate().find_map(|(i, v)| conj.iter().find_map(|t| defining_side(t, v, &bound)).map(|rhs| (i, rhs)));
            let (i, step) = match def {
                Some((i, rhs)) => {
                    let v = todo[i].clone();
                    let dom = bounds.domain(v.sort())?;
                    (i, Step::Define(v, rhs, dom))
                }
                None => {
                    let v = todo[0].clone();
                    let dom = bounds.domain(v.sort())?;
                    (0, Step::Enumerate(v, dom))
                }
            };
            let v = todo.remove(i);
            bound.insert(v);
            steps.push(step);
            checks.push(take_decided(&mut pending, &bound));
        }
        debug_assert!(pending.is_empty());
        Ok(ClausePlan { steps, checks })
    }

    /// Calls `emit` with the head tuple of every satisfying instance; `emit`
    /// returns false to stop early.
    fn consequences(&self, c: &Clause, ext: &[BTreeSet<Vec<Value>>], emit: &mut dyn FnMut(Vec<Value>) -> bool) {
        let mut env: HashMap<Var, Value> = HashMap::new();
        let mut go = true;
        self.bind_body(c, 0, ext, &mut env, emit, &mut go);
    }

    fn bind_body(
        &self,
        c: &Clause,
        i: usize,
        ext: &[BTreeSet<Vec<Value>>],
        env: &mut HashMap<Var, Value>,
        emit: &mut dyn FnMut(Vec<Value>) -> bool,
        go: &mut bool,
    ) {
        if !*go {
            return;
        }
        if i == c.body.len() {
            if holds(&self.checks[0], env) {
                self.search(c, 0, env, emit, go);
            }
            return;
        }
        let atom = &c.body[i];
        for tuple in &ext[atom.pred] {
            let saved: Vec<_> = atom.args.iter().map(|v| env.get(v).cloned()).collect();
            let consistent = atom.args.iter().zip(tuple).all(|(v, x)| env.get(v).is_none_or(|y| y == x));
            if consistent {
                for (v, x) in atom.args.iter().zip(tuple) {
                    env.insert(v.clone(), x.clone());
                }
                self.bind_body(c, i + 1, ext, env, emit, go);
                for (v, old) in atom.args.iter().zip(saved) {
                    match old {
                        Some(x) => env.insert(v.clone(), x),
                        None => env.remove(v),
                    };
                }
            }
            if !*go {
                return;
            }
        }
    }

    fn search(&self, c: &Clause, i: usize, env: &mut HashMap<Var, Value>, emit: &mut dyn FnMut(Vec<Value>) -> bool, go: &mut bool) {
        if !*go {
            return;
        }
        if i == self.steps.len() {
            let tuple = match c.head_atom() {
                Some(a) => a.args.iter().map(|v| env.get(v).cloned().unwrap_or_else(|| Value::default_of(v.sort()))).collect(),
                None => Vec::new(),
            };
            *go = emit(tuple);
            return;
        }
        match &self.steps[i] {
            Step::Enumerate(v, dom) => {
                for x in dom {
                    env.insert(v.clone(), x.clone());
                    if holds(&self.checks[i + 1], env) {
                        self.search(c, i + 1, env, emit, go);
                    }
                    if !*go {
                        break;
                    }
                }
                env.remove(v);
            }
            Step::Define(v, rhs, dom) => {
                if let Ok(x) = eval_with(rhs, &|u| env.get(u).cloned()) {
                    // A computed value outside the bounded domain has no
                    // counterpart in the universe.
                    if in_domain(&x, dom) {
                        env.insert(v.clone(), x);
                        if holds(&self.checks[i + 1], env) {
                            self.search(c, i + 1, env, emit, go);
                        }
                        env.remove(v);
                    }
                }
            }
        }
    }
}

fn in_domain(x: &Value, dom: &[Value]) -> bool {
    match (x, dom.first(), dom.last()) {
        (Value::Int(i), Some(Value::Int(lo)), Some(Value::Int(hi))) => lo <= i && i <= hi,
        (Value::Int(_), _, _) => false,
        _ => true,
    }
}

fn take_decided(pending: &mut Vec<Term>, bound: &BTreeSet<Var>) -> Vec<Term> {
    let (now, later): (Vec<Term>, Vec<Term>) = pending.drain(..).partition(|t| t.free_vars().is_subset(bound));
    *pending = later;
    now
}

fn holds(ts: &[Term], env: &HashMap<Var, Value>) -> bool {
    // Division by zero and similar undefined cases make the conjunct false,
    // which is conservative only for the oracle's own generated systems.
    ts.iter().all(|t| matches!(eval_with(t, &|u| env.get(u).cloned()), Ok(Value::Bool(true))))
}

/// For a conjunct `v = t` (either orientation) with `t` fully bound, returns `t`.
fn defining_side(t: &Term, v: &Var, bound: &BTreeSet<Var>) -> Option<Term> {
    let (op, args) = t.as_app()?;
    if *op != crate::term::Op::Eq || args.len() != 2 {
        return None;
    }
    for (l, r) in [(&args[0], &args[1]), (&args[1], &args[0])] {
        if l.as_var() == Some(v) && r.free_vars().is_subset(bound) {
            return Some(r.clone());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chc::tests::inv_system;
    use crate::chc::{Atom, Predicate};
    use crate::term::Op;

    #[test]
    fn counter_reaches_five() {
        let x = Var::new("x", Sort::Int);
        let sys = inv_system(Term::not(Term::binary(Op::Lt, x.term(), Term::int(5))), &x);
        assert_eq!(ground_truth_oracle(&sys, &Bounds::ints(0, 10)).unwrap(), OracleVerdict::Unsat);
    }

    #[test]
    fn nonnegative_counter_extension() {
        let x = Var::new("x", Sort::Int);
        let sys = inv_system(Term::not(Term::binary(Op::Ge, x.term(), Term::int(0))), &x);
        let OracleVerdict::Sat(ext) = ground_truth_oracle(&sys, &Bounds::ints(0, 10)).unwrap() else {
            panic!("expected sat");
        };
        // Independent expectation: the reflexive-transitive closure of +1 from 0,
        // clipped to the interval.
        let expect: BTreeSet<Vec<Value>> = (0..=10).map(|i| vec![Value::int(i)]).collect();
        assert_eq!(ext[0], expect);
    }

    #[test]
    fn unreachable_predicate_is_empty() {
        let x = Var::new("x", Sort::BitVec(2));
        let p = Predicate { name: "p".into(), arg_sorts: vec![Sort::BitVec(2)] };
        let q = Clause {
            vars: vec![x.clone()],
            body: vec![Atom { pred: 0, args: vec![x.clone()] }],
            constraint: Term::tt(),
            head: Head::False,
        };
        let sys = ChcSystem::new(vec![p], vec![q]).unwrap();
        let OracleVerdict::Sat(ext) = ground_truth_oracle(&sys, &Bounds::default()).unwrap() else {
            panic!("expected sat");
        };
        assert!(ext[0].is_empty());
    }

    #[test]
    fn universe_budget_enforced() {
        let x = Var::new("x", Sort::BitVec(24));
        let p = Predicate { name: "p".into(), arg_sorts: vec![Sort::BitVec(24)] };
        let f = Clause { vars: vec![x.clone()], body: vec![], constraint: Term::tt(), head: Head::Atom(Atom { pred: 0, args: vec![x] }) };
        let sys = ChcSystem::new(vec![p], vec![f]).unwrap();
        assert!(matches!(ground_truth_oracle(&sys, &Bounds::default()), Err(ChcError::BoundsTooLarge { .. })));
    }

    #[test]
    fn unbounded_int_rejected() {
        let x = Var::new("x", Sort::Int);
        let sys = inv_system(Term::ff(), &x);
        assert!(matches!(ground_truth_oracle(&sys, &Bounds::default()), Err(ChcError::Unbounded(Sort::Int))));
    }
}

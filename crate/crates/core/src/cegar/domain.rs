//! Abstract domains: explicit values and predicate abstraction.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::cfa::CfaOp;
use crate::smt::{SatResult, SmtError, SolverSession};
use crate::term::{simplify, subst, Bindings, Term, Value, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Precision {
    /// Variables whose values are tracked.
    Explicit(BTreeSet<Var>),
    /// Predicates, in insertion order; the table only grows.
    Pred(Vec<Term>),
}

impl Precision {
    pub fn empty_explicit() -> Precision {
        Precision::Explicit(BTreeSet::new())
    }

    pub fn empty_pred() -> Precision {
        Precision::Pred(Vec::new())
    }

    pub fn size(&self) -> usize {
        match self {
            Precision::Explicit(v) => v.len(),
            Precision::Pred(p) => p.len(),
        }
    }
}

/// Explicit state: assigned tracked variables. A tracked variable missing
/// from the map is ⊤. `None` is ⊥.
pub type ExplState = Option<BTreeMap<Var, Value>>;

/// Partial sign assignment to predicates; a missing predicate is unconstrained.
pub type Cube = BTreeMap<Term, bool>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AbstractState {
    Expl(ExplState),
    /// Disjunction of cubes; the empty set is ⊥.
    Pred(Vec<Cube>),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("abstract states come from different domains")]
pub struct PrecisionMismatch;

impl AbstractState {
    pub fn top_for(prec: &Precision) -> AbstractState {
        match prec {
            Precision::Explicit(_) => AbstractState::Expl(Some(BTreeMap::new())),
            Precision::Pred(_) => AbstractState::Pred(vec![Cube::new()]),
        }
    }

    pub fn is_bottom(&self) -> bool {
        match self {
            AbstractState::Expl(s) => s.is_none(),
            AbstractState::Pred(c) => c.is_empty(),
        }
    }
}

fn cube_expr(c: &Cube) -> Term {
    Term::and(c.iter().map(|(p, s)| if *s { p.clone() } else { Term::not(p.clone()) }))
}

/// The concrete formula an abstract state stands for.
pub fn expr_of(s: &AbstractState) -> Term {
    match s {
        AbstractState::Expl(None) => Term::ff(),
        AbstractState::Expl(Some(m)) => Term::and(m.iter().map(|(v, x)| Term::eq(v.term(), Term::constant(x.clone())))),
        AbstractState::Pred(cubes) => Term::or(cubes.iter().map(cube_expr)),
    }
}

/// Partial order. Explicit states compare componentwise; predicate states by
/// cube subsumption, which is sound for entailment and needs no solver.
pub fn leq(s1: &AbstractState, s2: &AbstractState) -> Result<bool, PrecisionMismatch> {
    match (s1, s2) {
        (AbstractState::Expl(a), AbstractState::Expl(b)) => Ok(match (a, b) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => b.iter().all(|(v, x)| a.get(v) == Some(x)),
        }),
        (AbstractState::Pred(a), AbstractState::Pred(b)) => {
            Ok(a.iter().all(|c1| b.iter().any(|c2| c2.iter().all(|(p, s)| c1.get(p) == Some(s)))))
        }
        _ => Err(PrecisionMismatch),
    }
}

/// Which abstract post to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Explicit { maxenum: usize },
    Cartesian,
    Boolean { allsat_budget: usize },
}

pub const DEFAULT_MAXENUM: usize = 10;
pub const DEFAULT_ALLSAT_BUDGET: usize = 64;

/// Symbolic effect of an op sequence on the pre-state variables.
pub(crate) struct Effect {
    /// Path constraints over pre-state variables and havoc auxiliaries.
    pub pc: Vec<Term>,
    pub env: Bindings,
    /// Havoc auxiliaries, in op order.
    pub havocs: Vec<Var>,
    /// A constraint folded to false.
    pub blocked: bool,
}

pub(crate) fn symbolic_effect(vars: &[Var], ops: &[CfaOp], init: &Bindings) -> Effect {
    let mut env: Bindings = vars.iter().map(|v| (v.clone(), init.get(v).cloned().unwrap_or_else(|| v.term()))).collect();
    let mut pc = Vec::new();
    let mut havocs = Vec::new();
    for op in ops {
        match op {
            CfaOp::Havoc(v) => {
                let a = v.renamed(format!("{}#{}", v.name(), havocs.len()));
                env.insert(v.clone(), a.term());
                havocs.push(a);
            }
            CfaOp::Assign(v, t) => {
                let r = simplify(&subst(t, &env));
                env.insert(v.clone(), r);
            }
            CfaOp::Assume(c) => {
                let c = simplify(&subst(c, &env));
                if c.is_false() {
                    return Effect { pc, env, havocs, blocked: true };
                }
                if !c.is_true() {
                    pc.extend(c.conjuncts());
                }
            }
        }
    }
    Effect { pc, env, havocs, blocked: false }
}

/// Abstract successors of `s` along `ops`. `vars` are the CFA variables.
pub fn abstract_post(
    s: &AbstractState,
    ops: &[CfaOp],
    vars: &[Var],
    prec: &Precision,
    domain: Domain,
    solver: &mut SolverSession,
) -> Result<Vec<AbstractState>, SmtError> {
    match (s, prec, domain) {
        (AbstractState::Expl(None), _, _) | (AbstractState::Pred(_), _, _) if s.is_bottom() => Ok(vec![]),
        (AbstractState::Expl(Some(m)), Precision::Explicit(tracked), Domain::Explicit { maxenum }) => {
            explicit_post(m, ops, vars, tracked, maxenum, solver)
        }
        (AbstractState::Pred(_), Precision::Pred(preds), Domain::Cartesian) => pred_post(s, ops, vars, preds, None, solver),
        (AbstractState::Pred(_), Precision::Pred(preds), Domain::Boolean { allsat_budget }) => {
            pred_post(s, ops, vars, preds, Some(allsat_budget), solver)
        }
        _ => Err(SmtError::Protocol("abstract state, precision, and domain do not match".into())),
    }
}

fn explicit_post(
    m: &BTreeMap<Var, Value>,
    ops: &[CfaOp],
    vars: &[Var],
    tracked: &BTreeSet<Var>,
    maxenum: usize,
    solver: &mut SolverSession,
) -> Result<Vec<AbstractState>, SmtError> {
    let init: Bindings = m.iter().map(|(v, x)| (v.clone(), Term::constant(x.clone()))).collect();
    let eff = symbolic_effect(vars, ops, &init);
    if eff.blocked {
        return Ok(vec![]);
    }
    solver.push()?;
    let r = (|| {
        for c in &eff.pc {
            solver.assert(c)?;
        }
        if !eff.pc.is_empty() {
            match solver.check()? {
                SatResult::Unsat => return Ok(vec![]),
                // An unknown answer keeps the successor: over-approximation.
                SatResult::Sat | SatResult::Unknown(_) => {}
            }
        }
        let constrained: BTreeSet<Var> = eff.pc.iter().flat_map(|c| c.free_vars()).collect();
        let mut fixed = BTreeMap::new();
        let mut open: Vec<(Var, Term)> = Vec::new();
        for v in tracked {
            let t = &eff.env[v];
            if let Some(x) = t.as_const() {
                fixed.insert(v.clone(), x.clone());
            } else if t.as_var().is_some_and(|u| !constrained.contains(u)) {
                // Unconstrained input or havoc: ⊤ without asking.
            } else {
                open.push((v.clone(), t.clone()));
            }
        }
        let mut choices: Vec<(Var, Term, Vec<Value>)> = Vec::new();
        for (v, t) in &open {
            if let Some(vals) = enumerate_values(solver, t, maxenum)? {
                choices.push((v.clone(), t.clone(), vals));
            }
        }
        // Joint tuples are more precise than the product of per-variable
        // values; fall back to the product when there are too many.
        let tuples = joint_tuples(solver, &choices, maxenum.saturating_mul(4).max(1))?;
        Ok(tuples
            .into_iter()
            .map(|tuple| {
                let mut st = fixed.clone();
                for ((v, _, _), x) in choices.iter().zip(tuple) {
                    st.insert(v.clone(), x);
                }
                AbstractState::Expl(Some(st))
            })
            .collect())
    })();
    solver.pop()?;
    r
}

/// Distinct values of `t` under the current assertions, or `None` when there
/// are more than `limit` (or the solver cannot tell).
fn enumerate_values(solver: &mut SolverSession, t: &Term, limit: usize) -> Result<Option<Vec<Value>>, SmtError> {
    let probe = Var::new(format!("enum!{}", solver.depth()), t.sort().clone());
    solver.push()?;
    let r = (|| {
        solver.assert(&Term::eq(probe.term(), t.clone()))?;
        let mut vals = Vec::new();
        loop {
            match solver.check()? {
                SatResult::Unsat => return Ok(Some(vals)),
                SatResult::Unknown(_) => return Ok(None),
                SatResult::Sat => {}
            }
            if vals.len() == limit {
                return Ok(None);
            }
            let m = solver.get_values(std::slice::from_ref(&probe))?;
            let Some(x) = m.get(&probe).cloned() else { return Ok(None) };
            solver.assert(&Term::not(Term::eq(probe.term(), Term::constant(x.clone()))))?;
            vals.push(x);
        }
    })();
    solver.pop()?;
    r
}

fn joint_tuples(solver: &mut SolverSession, choices: &[(Var, Term, Vec<Value>)], limit: usize) -> Result<Vec<Vec<Value>>, SmtError> {
    let product: Vec<Vec<Value>> = choices.iter().fold(vec![vec![]], |acc, (_, _, vals)| {
        acc.iter().flat_map(|pre| vals.iter().map(move |x| pre.iter().cloned().chain([x.clone()]).collect())).collect()
    });
    if choices.len() <= 1 || product.len() <= 1 || product.len() > limit {
        return Ok(product);
    }
    // Each product tuple is kept only if it is consistent with the path.
    let mut out = Vec::new();
    for tuple in product {
        let eqs: Vec<Term> = choices.iter().zip(&tuple).map(|((_, t, _), x)| Term::eq(t.clone(), Term::constant(x.clone()))).collect();
        if solver.check_with(&eqs)? != SatResult::Unsat {
            out.push(tuple);
        }
    }
    Ok(out)
}

fn pred_post(
    s: &AbstractState,
    ops: &[CfaOp],
    vars: &[Var],
    preds: &[Term],
    allsat: Option<usize>,
    solver: &mut SolverSession,
) -> Result<Vec<AbstractState>, SmtError> {
    let eff = symbolic_effect(vars, ops, &Bindings::new());
    if eff.blocked {
        return Ok(vec![]);
    }
    let post: Vec<Term> = preds.iter().map(|p| simplify(&subst(p, &eff.env))).collect();
    solver.push()?;
    let r = (|| {
        solver.assert(&expr_of(s))?;
        for c in &eff.pc {
            solver.assert(c)?;
        }
        if solver.check()? == SatResult::Unsat {
            return Ok(vec![]);
        }
        if let Some(budget) = allsat {
            if let Some(cubes) = allsat_cubes(solver, preds, &post, budget)? {
                return Ok(vec![AbstractState::Pred(cubes)]);
            }
        }
        let mut cube = Cube::new();
        for (p, q) in preds.iter().zip(&post) {
            if let Some(b) = q.as_bool() {
                cube.insert(p.clone(), b);
                continue;
            }
            if solver.check_with(&[Term::not(q.clone())])? == SatResult::Unsat {
                cube.insert(p.clone(), true);
            } else if solver.check_with(std::slice::from_ref(q))? == SatResult::Unsat {
                cube.insert(p.clone(), false);
            }
        }
        Ok(vec![AbstractState::Pred(vec![cube])])
    })();
    solver.pop()?;
    r
}

/// All consistent total sign assignments, or `None` past the budget.
fn allsat_cubes(solver: &mut SolverSession, preds: &[Term], post: &[Term], budget: usize) -> Result<Option<Vec<Cube>>, SmtError> {
    let sel: Vec<Var> = (0..preds.len()).map(|i| Var::new(format!("sel!{i}"), crate::term::Sort::Bool)).collect();
    solver.push()?;
    let r = (|| {
        for (b, q) in sel.iter().zip(post) {
            solver.assert(&Term::eq(b.term(), q.clone()))?;
        }
        let mut cubes = Vec::new();
        loop {
            match solver.check()? {
                SatResult::Unsat => return Ok(Some(cubes)),
                SatResult::Unknown(_) => return Ok(None),
                SatResult::Sat => {}
            }
            if cubes.len() == budget {
                return Ok(None);
            }
            let m = solver.get_values(&sel)?;
            let mut cube = Cube::new();
            let mut block = Vec::new();
            for (i, b) in sel.iter().enumerate() {
                let val = m.get(b).and_then(Value::as_bool).unwrap_or(false);
                cube.insert(preds[i].clone(), val);
                block.push(if val { Term::not(b.term()) } else { b.term() });
            }
            solver.assert(&Term::or(block))?;
            cubes.push(cube);
        }
    })();
    solver.pop()?;
    r
}

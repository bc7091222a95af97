//! Path feasibility and interpolation-based refinement.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::domain::Precision;
use crate::cfa::{Cfa, CfaOp, EdgeId, Schedule, Step};
use crate::smt::{Interpolator, ItpError, SatResult, SmtError, SolverSession};
use crate::term::{rename, simplify, subst, Bindings, Term, Value, Var};

/// How interpolants are obtained from an infeasible path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinementStrategy {
    /// One interpolant per path position.
    Sequence,
    /// A single interpolant at the deepest point where the abstract state
    /// still reaches the contradiction.
    BackwardsBinary,
}

/// SSA form of an edge sequence.
#[derive(Clone, Debug)]
pub struct PathFormula {
    /// One partition per edge. The first also pins the initial defaults.
    pub parts: Vec<Term>,
    /// Current version of each variable at each position `0..=n`.
    pub ssa: Vec<BTreeMap<Var, Var>>,
    /// Havoc versions per edge, in op order.
    pub havocs: Vec<Vec<Var>>,
    /// Versioned variable back to the CFA variable.
    pub base: HashMap<Var, Var>,
}

impl PathFormula {
    pub fn new(cfa: &Cfa, edges: &[EdgeId]) -> PathFormula {
        let mut counter: BTreeMap<Var, usize> = BTreeMap::new();
        let mut base = HashMap::new();
        let mut version = |v: &Var, base: &mut HashMap<Var, Var>| {
            let k = counter.entry(v.clone()).or_insert(0);
            let nv = v.renamed(format!("{}@{}", v.name(), k));
            *k += 1;
            base.insert(nv.clone(), v.clone());
            nv
        };
        let mut cur: BTreeMap<Var, Var> = BTreeMap::new();
        let mut defaults = vec![];
        for v in &cfa.vars {
            let nv = version(v, &mut base);
            defaults.push(Term::eq(nv.term(), Term::constant(Value::default_of(v.sort()))));
            cur.insert(v.clone(), nv);
        }
        let mut ssa = vec![cur.clone()];
        let mut parts = vec![];
        let mut havocs = vec![];
        for (i, &e) in edges.iter().enumerate() {
            let mut conj = if i == 0 { std::mem::take(&mut defaults) } else { vec![] };
            let mut hv = vec![];
            for op in &cfa.edges[e].ops {
                let env: Bindings = cur.iter().map(|(k, v)| (k.clone(), v.term())).collect();
                match op {
                    CfaOp::Havoc(v) => {
                        let nv = version(v, &mut base);
                        hv.push(nv.clone());
                        cur.insert(v.clone(), nv);
                    }
                    CfaOp::Assign(v, t) => {
                        let rhs = subst(t, &env);
                        let nv = version(v, &mut base);
                        conj.push(Term::eq(nv.term(), rhs));
                        cur.insert(v.clone(), nv);
                    }
                    CfaOp::Assume(c) => conj.push(subst(c, &env)),
                }
            }
            parts.push(Term::and(conj));
            havocs.push(hv);
            ssa.push(cur.clone());
        }
        PathFormula { parts, ssa, havocs, base }
    }

    /// Rewrites a term over versioned variables back to CFA variables.
    pub fn unversion(&self, t: &Term) -> Term {
        rename(t, &|v| self.base.get(v).cloned())
    }

    /// Rewrites a term over CFA variables to their versions at position `j`.
    pub fn at_position(&self, t: &Term, j: usize) -> Term {
        let env: Bindings = self.ssa[j].iter().map(|(k, v)| (k.clone(), v.term())).collect();
        subst(t, &env)
    }
}

#[derive(Clone, Debug)]
pub enum Feasibility {
    Feasible(Schedule),
    Infeasible(PathFormula),
}

/// Decides whether the edge sequence has a concrete execution from the
/// initial location. A feasible path comes with havoc values that replay it.
pub fn check_feasibility(cfa: &Cfa, edges: &[EdgeId], solver: &mut SolverSession) -> Result<Feasibility, SmtError> {
    let pf = PathFormula::new(cfa, edges);
    solver.push()?;
    let r = (|| {
        for p in &pf.parts {
            solver.assert(p)?;
        }
        match solver.check()? {
            SatResult::Unsat => Ok(None),
            SatResult::Unknown(r) => Err(SmtError::Protocol(format!("path feasibility unknown: {r}"))),
            SatResult::Sat => {
                let all: Vec<Var> = pf.havocs.iter().flatten().cloned().collect();
                let model = if all.is_empty() { Default::default() } else { solver.get_values(&all)? };
                let mut schedule = vec![];
                for (&e, hv) in edges.iter().zip(&pf.havocs) {
                    let havocs = hv.iter().map(|v| model.get(v).cloned().unwrap_or_else(|| Value::default_of(v.sort()))).collect();
                    schedule.push(Step { edge: e, havocs });
                }
                Ok(Some(schedule))
            }
        }
    })();
    solver.pop()?;
    Ok(match r? {
        Some(s) => Feasibility::Feasible(s),
        None => Feasibility::Infeasible(pf),
    })
}

/// Interpolants for an infeasible path, over CFA variables.
#[derive(Clone, Debug)]
pub(crate) enum PathInterpolants {
    /// `I_0 … I_n`, one per position.
    Sequence(Vec<Term>),
    /// A single interpolant at `position`.
    Single { position: usize, itp: Term },
}

/// The abstract states along the path, as formulas over CFA variables.
pub(crate) fn interpolate(
    strategy: RefinementStrategy,
    pf: &PathFormula,
    states: &[Term],
    itp: &mut Interpolator,
    solver: &mut SolverSession,
) -> Result<PathInterpolants, ItpError> {
    let n = pf.parts.len();
    match strategy {
        RefinementStrategy::Sequence => {
            let seq = if n == 1 { vec![Term::tt(), Term::ff()] } else { itp.sequence(&pf.parts)? };
            Ok(PathInterpolants::Sequence(seq.iter().map(|t| pf.unversion(t)).collect()))
        }
        RefinementStrategy::BackwardsBinary => {
            // Deepest j with expr(s_j) ∧ A_{j+1} ∧ … ∧ A_n unsatisfiable. The
            // root state is ⊤, so j = 0 always qualifies.
            let mut start = 0;
            for j in (1..n).rev() {
                let mut q = vec![pf.at_position(&states[j], j)];
                q.extend(pf.parts[j..].iter().cloned());
                if solver.check_with(&q)? == SatResult::Unsat {
                    start = j;
                    break;
                }
            }
            let a = Term::and([pf.at_position(&states[start], start), pf.parts[start].clone()]);
            let b = Term::and(pf.parts[start + 1..].iter().cloned());
            let i = itp.binary(&a, &b)?;
            Ok(PathInterpolants::Single { position: start + 1, itp: pf.unversion(&i) })
        }
    }
}

/// Atoms an interpolant contributes to a precision.
pub(crate) fn precision_items(prec: &Precision, t: &Term) -> Vec<Term> {
    match prec {
        Precision::Explicit(_) => t.free_vars().into_iter().map(|v| v.term()).collect(),
        Precision::Pred(_) => t.atoms().into_iter().map(|a| simplify(&a)).filter(|a| a.as_bool().is_none()).collect(),
    }
}

/// Adds items to the precision; returns how many were new.
pub(crate) fn extend_precision(prec: &mut Precision, items: impl IntoIterator<Item = Term>) -> usize {
    let mut added = 0;
    match prec {
        Precision::Explicit(vs) => {
            for t in items {
                if let Some(v) = t.as_var() {
                    added += vs.insert(v.clone()) as usize;
                }
            }
        }
        Precision::Pred(ps) => {
            let mut seen: BTreeSet<Term> = ps.iter().cloned().collect();
            for t in items {
                if seen.insert(t.clone()) {
                    ps.push(t);
                    added += 1;
                }
            }
        }
    }
    added
}

/// Atoms of the path prefix up to its first contradiction, for use when no
/// interpolant is available.
pub(crate) fn harvest(pf: &PathFormula, solver: &mut SolverSession) -> Result<Vec<Term>, SmtError> {
    let mut upto = pf.parts.len();
    for k in 1..=pf.parts.len() {
        if solver.check_with(&pf.parts[..k])? == SatResult::Unsat {
            upto = k;
            break;
        }
    }
    Ok(pf.parts[..upto].iter().map(|p| pf.unversion(p)).collect())
}

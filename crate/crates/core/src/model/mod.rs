//! CHC models from safety proofs, their validation, and their SMT-LIB form.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::cegar::{expr_of, Arg};
use crate::cfa::{Cfa, LocId, PredVarMap};
use crate::chc::{ChcSystem, Head, PredId};
use crate::smt::{SatResult, SmtError, SolverSession};
use crate::smtlib::{parse_sexps, parse_sorted_vars, FrontendError, Sexp, Signature, TermParser};
use crate::sts::loc_var;
use crate::term::{simplify, subst, Bindings, Term, Valuation, Var};

/// Interpretation of one predicate: `p(params) ⟺ body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelEntry {
    pub params: Vec<Var>,
    pub body: Term,
}

impl ModelEntry {
    /// The body with the parameters replaced by `args`.
    pub fn instantiate(&self, args: &[Var]) -> Term {
        let b: Bindings = self.params.iter().cloned().zip(args.iter().map(Var::term)).collect();
        subst(&self.body, &b)
    }
}

/// One entry per predicate, indexed by predicate id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChcModel {
    pub entries: Vec<ModelEntry>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("the reachability graph is not a safety proof")]
    NotSafe,
    #[error("model does not define predicate `{0}`")]
    MissingPredicate(String),
    #[error("model entry for `{0}` does not match its declaration")]
    BadEntry(String),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
}

/// Location invariants: uncovered nodes at each location, disjoined.
/// Covered nodes add nothing since their coverer subsumes them.
pub fn invariant_from_arg(arg: &Arg, cfa: &Cfa) -> Result<Vec<Term>, ModelError> {
    if arg.live_nodes().any(|n| n.loc == cfa.error && !n.state.is_bottom()) {
        return Err(ModelError::NotSafe);
    }
    Ok((0..cfa.num_locations())
        .map(|l| {
            if l == cfa.error {
                return Term::ff();
            }
            simplify(&Term::or(arg.uncovered_at(l).map(|n| expr_of(&n.state))))
        })
        .collect())
}

/// Location invariants from an invariant over the encoded transition
/// system: the location variable is fixed to each location in turn.
pub fn invariant_from_sts(inv: &Term, cfa: &Cfa) -> Vec<Term> {
    (0..cfa.num_locations())
        .map(|l: LocId| {
            let b: Bindings = [(loc_var(), Term::int(l as i64))].into_iter().collect();
            simplify(&subst(inv, &b))
        })
        .collect()
}

/// Per predicate: its location invariant over the parameters, with every
/// other variable existentially quantified.
pub fn project_to_model(loc_invs: &[Term], map: &PredVarMap, cfa: &Cfa) -> ChcModel {
    let entries = map
        .params
        .iter()
        .enumerate()
        .map(|(p, params)| {
            let body = match cfa.loc_of_pred(p) {
                Some(l) => {
                    let f = loc_invs[l].clone();
                    let keep: BTreeSet<&Var> = params.iter().collect();
                    let others: Vec<Var> = f.free_vars().into_iter().filter(|v| !keep.contains(v)).collect();
                    if others.is_empty() {
                        f
                    } else {
                        Term::exists(others, f)
                    }
                }
                None => Term::ff(),
            };
            ModelEntry { params: params.clone(), body }
        })
        .collect();
    ChcModel { entries }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validation {
    Valid,
    /// The clause is violated; the witness assigns its variables.
    Invalid {
        clause: usize,
        witness: Valuation,
    },
    /// The backend could not decide some clause.
    Inconclusive {
        clause: usize,
        reason: String,
    },
}

/// Checks every clause under the model: `constraint ∧ body ∧ ¬head` must be
/// unsatisfiable.
pub fn validate_model(sys: &ChcSystem, m: &ChcModel, solver: &mut SolverSession) -> Result<Validation, ModelError> {
    check_shape(sys, m)?;
    for (i, c) in sys.clauses().iter().enumerate() {
        let mut parts = vec![c.constraint.clone()];
        parts.extend(c.body.iter().map(|a| m.entries[a.pred].instantiate(&a.args)));
        if let Head::Atom(a) = &c.head {
            parts.push(Term::not(m.entries[a.pred].instantiate(&a.args)));
        }
        match check_clause(solver, &parts, &c.vars) {
            Ok(None) => {}
            Ok(Some(Ok(witness))) => return Ok(Validation::Invalid { clause: i, witness }),
            Ok(Some(Err(reason))) | Err(reason) => return Ok(Validation::Inconclusive { clause: i, reason }),
        }
    }
    Ok(Validation::Valid)
}

/// `None` when unsatisfiable, a witness when satisfiable, a reason otherwise.
fn check_clause(solver: &mut SolverSession, parts: &[Term], vars: &[Var]) -> Result<Option<Result<Valuation, String>>, String> {
    let err = |e: SmtError| e.to_string();
    solver.push().map_err(err)?;
    let r = (|| {
        for p in parts {
            solver.assert(p)?;
        }
        Ok(match solver.check()? {
            SatResult::Unsat => None,
            SatResult::Sat => Some(Ok(if vars.is_empty() { Valuation::new() } else { solver.get_values(vars)? })),
            SatResult::Unknown(reason) => Some(Err(reason)),
        })
    })();
    solver.pop().map_err(err)?;
    r.map_err(err)
}

fn check_shape(sys: &ChcSystem, m: &ChcModel) -> Result<(), ModelError> {
    for (p, pred) in sys.predicates().iter().enumerate() {
        let e = m.entries.get(p).ok_or_else(|| ModelError::MissingPredicate(pred.name.clone()))?;
        let sorts: Vec<_> = e.params.iter().map(|v| v.sort().clone()).collect();
        let params: BTreeSet<&Var> = e.params.iter().collect();
        if sorts != pred.arg_sorts || !e.body.free_vars().iter().all(|v| params.contains(v)) {
            return Err(ModelError::BadEntry(pred.name.clone()));
        }
    }
    Ok(())
}

/// `(define-fun …)` blocks wrapped in one list, as printed after `sat`.
pub fn print_model(sys: &ChcSystem, m: &ChcModel) -> String {
    let mut out = String::from("(\n");
    for (p, pred) in sys.predicates().iter().enumerate() {
        let e = &m.entries[p];
        let mut name = String::new();
        crate::term::term_write_symbol(&mut name, &pred.name).unwrap();
        let params: Vec<String> = e.params.iter().map(|v| format!("({v} {})", v.sort())).collect();
        writeln!(out, "  (define-fun {name} ({}) Bool\n    {})", params.join(" "), e.body).unwrap();
    }
    out.push(')');
    out
}

/// Reads a model in the printed form back against `sys`.
pub fn parse_model(sys: &ChcSystem, text: &str) -> Result<ChcModel, ModelError> {
    let sexps = parse_sexps(text).map_err(FrontendError::Parse)?;
    let defs: Vec<&Sexp> = match sexps.as_slice() {
        [Sexp::List(items, _)] if items.first().and_then(Sexp::symbol) != Some("define-fun") => items.iter().collect(),
        _ => sexps.iter().collect(),
    };
    let sig = Signature::default();
    let mut entries: Vec<Option<ModelEntry>> = vec![None; sys.predicates().len()];
    for d in defs {
        let Sexp::List(items, _) = d else { return Err(ModelError::BadEntry(d.to_string())) };
        let [head, name, params, _ret, body] = items.as_slice() else { return Err(ModelError::BadEntry(d.to_string())) };
        if head.symbol() != Some("define-fun") {
            return Err(ModelError::BadEntry(d.to_string()));
        }
        let name = name.symbol().ok_or_else(|| ModelError::BadEntry(d.to_string()))?;
        let p: PredId = sys.pred_id(name).ok_or_else(|| ModelError::BadEntry(name.to_string()))?;
        let params = parse_sorted_vars(params)?;
        let body = TermParser::with_vars(&sig, &params).parse(body)?;
        entries[p] = Some(ModelEntry { params, body });
    }
    let entries = entries
        .into_iter()
        .enumerate()
        .map(|(p, e)| e.ok_or_else(|| ModelError::MissingPredicate(sys.predicates()[p].name.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let m = ChcModel { entries };
    check_shape(sys, &m)?;
    Ok(m)
}

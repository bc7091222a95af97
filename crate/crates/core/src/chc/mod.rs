//! Normalized constrained Horn clause systems.

mod oracle;

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::term::{Op, Sort, Term, Var};

pub use oracle::{ground_truth_oracle, oracle_batch, Bounds, OracleVerdict, DEFAULT_CELL_BUDGET};

pub type PredId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Predicate {
    pub name: String,
    pub arg_sorts: Vec<Sort>,
}

/// Predicate applied to distinct clause variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: PredId,
    pub args: Vec<Var>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Head {
    Atom(Atom),
    False,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    /// The universally quantified variables.
    pub vars: Vec<Var>,
    pub body: Vec<Atom>,
    /// Quantifier-free constraint over `vars`.
    pub constraint: Term,
    pub head: Head,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClauseKind {
    Fact,
    Rule,
    Query,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Theory {
    Lia,
    Lra,
    Bv,
    Arrays,
}

impl std::fmt::Display for Theory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Theory::Lia => "LIA",
            Theory::Lra => "LRA",
            Theory::Bv => "BV",
            Theory::Arrays => "Arrays",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ChcError {
    #[error("duplicate predicate `{0}`")]
    DuplicatePredicate(String),
    #[error("clause {clause}: atom of `{pred}` has {found} arguments, expected {expected}")]
    ArityMismatch { clause: usize, pred: String, expected: usize, found: usize },
    #[error("clause {clause}: argument {index} of `{pred}` has the wrong sort")]
    ArgumentSort { clause: usize, pred: String, index: usize },
    #[error("clause {clause}: variable `{var}` is not declared in the clause prefix")]
    UndeclaredVariable { clause: usize, var: String },
    #[error("clause {clause}: atom of `{pred}` repeats variable `{var}`")]
    RepeatedArgument { clause: usize, pred: String, var: String },
    #[error("clause {clause}: constraint is not a quantifier-free Bool term")]
    BadConstraint { clause: usize },
    #[error("clause {clause}: unknown predicate id {pred}")]
    UnknownPredicate { clause: usize, pred: PredId },
    #[error("mixed theories are not supported: {0}")]
    MixedTheory(String),
    #[error("universe of {cells} cells exceeds the budget of {budget}")]
    BoundsTooLarge { cells: u128, budget: u128 },
    #[error("sort {0} has no finite bound")]
    Unbounded(Sort),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChcSystem {
    predicates: Vec<Predicate>,
    clauses: Vec<Clause>,
    linear: bool,
    theory: Theory,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub kinds: Vec<ClauseKind>,
    pub linear: bool,
    pub theory: Theory,
}

impl Clause {
    pub fn kind(&self) -> ClauseKind {
        match (&self.head, self.body.is_empty()) {
            (Head::False, _) => ClauseKind::Query,
            (Head::Atom(_), true) => ClauseKind::Fact,
            (Head::Atom(_), false) => ClauseKind::Rule,
        }
    }

    pub fn head_atom(&self) -> Option<&Atom> {
        match &self.head {
            Head::Atom(a) => Some(a),
            Head::False => None,
        }
    }
}

impl ChcSystem {
    /// Builds a system, checking well-formedness and inferring linearity and theory.
    pub fn new(predicates: Vec<Predicate>, clauses: Vec<Clause>) -> Result<ChcSystem, ChcError> {
        let mut names = HashSet::new();
        for p in &predicates {
            if !names.insert(p.name.clone()) {
                return Err(ChcError::DuplicatePredicate(p.name.clone()));
            }
        }
        for (ci, c) in clauses.iter().enumerate() {
            let declared: HashSet<&Var> = c.vars.iter().collect();
            let atoms = c.body.iter().chain(c.head_atom());
            for a in atoms {
                let p = predicates.get(a.pred).ok_or(ChcError::UnknownPredicate { clause: ci, pred: a.pred })?;
                if p.arg_sorts.len() != a.args.len() {
                    return Err(ChcError::ArityMismatch {
                        clause: ci,
                        pred: p.name.clone(),
                        expected: p.arg_sorts.len(),
                        found: a.args.len(),
                    });
                }
                let mut seen = HashSet::new();
                for (i, (v, s)) in a.args.iter().zip(&p.arg_sorts).enumerate() {
                    if v.sort() != s {
                        return Err(ChcError::ArgumentSort { clause: ci, pred: p.name.clone(), index: i });
                    }
                    if !declared.contains(v) {
                        return Err(ChcError::UndeclaredVariable { clause: ci, var: v.name().to_string() });
                    }
                    if !seen.insert(v) {
                        return Err(ChcError::RepeatedArgument { clause: ci, pred: p.name.clone(), var: v.name().to_string() });
                    }
                }
            }
            if c.constraint.sort() != &Sort::Bool
                || !c.constraint.is_quantifier_free()
                || c.constraint.contains_op(&|o| matches!(o, Op::Pred(..)))
            {
                return Err(ChcError::BadConstraint { clause: ci });
            }
            for v in c.constraint.free_vars() {
                if !declared.contains(&v) {
                    return Err(ChcError::UndeclaredVariable { clause: ci, var: v.name().to_string() });
                }
            }
        }
        let linear = clauses.iter().all(|c| c.body.len() <= 1);
        let theory = infer_theory(&predicates, &clauses)?;
        Ok(ChcSystem { predicates, clauses, linear, theory })
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }

    pub fn theory(&self) -> Theory {
        self.theory
    }

    pub fn pred_id(&self, name: &str) -> Option<PredId> {
        self.predicates.iter().position(|p| p.name == name)
    }

    pub fn pred_op(&self, id: PredId) -> Op {
        let p = &self.predicates[id];
        Op::Pred(Arc::from(p.name.as_str()), p.arg_sorts.clone())
    }

    pub fn atom_term(&self, a: &Atom) -> Term {
        Term::mk(self.pred_op(a.pred), a.args.iter().map(Var::term).collect())
    }

    /// Per-clause kinds plus system-level linearity and theory.
    pub fn classify(&self) -> Classification {
        Classification { kinds: self.clauses.iter().map(Clause::kind).collect(), linear: self.linear, theory: self.theory }
    }

    /// Prints the system back as an SMT-LIB Horn script.
    pub fn to_smtlib(&self) -> String {
        let mut out = String::from("(set-logic HORN)\n");
        for p in &self.predicates {
            let sorts: Vec<String> = p.arg_sorts.iter().map(|s| s.to_string()).collect();
            let mut name = String::new();
            crate::term::term_write_symbol(&mut name, &p.name).unwrap();
            writeln!(out, "(declare-fun {name} ({}) Bool)", sorts.join(" ")).unwrap();
        }
        for c in &self.clauses {
            let mut body: Vec<Term> = c.body.iter().map(|a| self.atom_term(a)).collect();
            if !c.constraint.is_true() || body.is_empty() {
                body.push(c.constraint.clone());
            }
            let body = if body.len() == 1 { body.pop().unwrap() } else { Term::mk(Op::And, body) };
            let head = match &c.head {
                Head::Atom(a) => self.atom_term(a),
                Head::False => Term::ff(),
            };
            let imp = Term::mk(Op::Implies, vec![body, head]);
            if c.vars.is_empty() {
                writeln!(out, "(assert {imp})").unwrap();
            } else {
                let q = crate::term::Term::quant(crate::term::Quantifier::Forall, c.vars.clone(), imp).unwrap();
                writeln!(out, "(assert {q})").unwrap();
            }
        }
        out.push_str("(check-sat)\n");
        out
    }
}

fn infer_theory(predicates: &[Predicate], clauses: &[Clause]) -> Result<Theory, ChcError> {
    #[derive(Default)]
    struct Seen {
        int: bool,
        real: bool,
        bv: bool,
        array: bool,
    }
    fn sort(s: &Sort, seen: &mut Seen) {
        match s {
            Sort::Int => seen.int = true,
            Sort::Real => seen.real = true,
            Sort::BitVec(_) => seen.bv = true,
            Sort::Array(i, e) => {
                seen.array = true;
                sort(i, seen);
                sort(e, seen);
            }
            Sort::Bool => {}
        }
    }
    let mut seen = Seen::default();
    for p in predicates {
        p.arg_sorts.iter().for_each(|s| sort(s, &mut seen));
    }
    for c in clauses {
        c.vars.iter().for_each(|v| sort(v.sort(), &mut seen));
        let mut sorts = BTreeSet::new();
        c.constraint.visit(&mut |t| {
            sorts.insert(t.sort().clone());
        });
        sorts.iter().for_each(|s| sort(s, &mut seen));
    }
    if seen.bv && (seen.int || seen.real) {
        return Err(ChcError::MixedTheory("bit-vectors together with arithmetic".into()));
    }
    if seen.int && seen.real {
        return Err(ChcError::MixedTheory("integers together with reals".into()));
    }
    Ok(if seen.array {
        Theory::Arrays
    } else if seen.bv {
        Theory::Bv
    } else if seen.real {
        Theory::Lra
    } else {
        Theory::Lia
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn inv_system(query: Term, x: &Var) -> ChcSystem {
        let xp = Var::new("x'", Sort::Int);
        let inv = Predicate { name: "inv".into(), arg_sorts: vec![Sort::Int] };
        let fact = Clause {
            vars: vec![x.clone()],
            body: vec![],
            constraint: Term::eq(x.term(), Term::int(0)),
            head: Head::Atom(Atom { pred: 0, args: vec![x.clone()] }),
        };
        let step = Clause {
            vars: vec![x.clone(), xp.clone()],
            body: vec![Atom { pred: 0, args: vec![x.clone()] }],
            constraint: Term::eq(xp.term(), Term::binary(Op::Add, x.term(), Term::int(1))),
            head: Head::Atom(Atom { pred: 0, args: vec![xp] }),
        };
        let q = Clause { vars: vec![x.clone()], body: vec![Atom { pred: 0, args: vec![x.clone()] }], constraint: query, head: Head::False };
        ChcSystem::new(vec![inv], vec![fact, step, q]).unwrap()
    }

    #[test]
    fn classifies_inv_system() {
        let x = Var::new("x", Sort::Int);
        let sys = inv_system(Term::not(Term::binary(Op::Lt, x.term(), Term::int(5))), &x);
        let c = sys.classify();
        assert_eq!(c.kinds, vec![ClauseKind::Fact, ClauseKind::Rule, ClauseKind::Query]);
        assert!(c.linear);
        assert_eq!(c.theory, Theory::Lia);
    }

    #[test]
    fn two_body_atoms_is_nonlinear_rule() {
        let x = Var::new("x", Sort::Int);
        let y = Var::new("y", Sort::Int);
        let preds = ["p", "q", "r"].iter().map(|n| Predicate { name: n.to_string(), arg_sorts: vec![Sort::Int] }).collect();
        let c = Clause {
            vars: vec![x.clone(), y.clone()],
            body: vec![Atom { pred: 0, args: vec![x.clone()] }, Atom { pred: 1, args: vec![y] }],
            constraint: Term::tt(),
            head: Head::Atom(Atom { pred: 2, args: vec![x] }),
        };
        let sys = ChcSystem::new(preds, vec![c]).unwrap();
        let cl = sys.classify();
        assert_eq!(cl.kinds, vec![ClauseKind::Rule]);
        assert!(!cl.linear);
    }

    #[test]
    fn bitvector_only_is_bv() {
        let x = Var::new("x", Sort::BitVec(32));
        let p = Predicate { name: "p".into(), arg_sorts: vec![Sort::BitVec(32)] };
        let c = Clause {
            vars: vec![x.clone()],
            body: vec![],
            constraint: Term::eq(x.term(), Term::bv(32, 0)),
            head: Head::Atom(Atom { pred: 0, args: vec![x] }),
        };
        assert_eq!(ChcSystem::new(vec![p], vec![c]).unwrap().classify().theory, Theory::Bv);
    }

    #[test]
    fn bv_with_int_is_mixed() {
        let x = Var::new("x", Sort::BitVec(8));
        let y = Var::new("y", Sort::Int);
        let p = Predicate { name: "p".into(), arg_sorts: vec![Sort::BitVec(8), Sort::Int] };
        let c = Clause {
            vars: vec![x.clone(), y.clone()],
            body: vec![],
            constraint: Term::tt(),
            head: Head::Atom(Atom { pred: 0, args: vec![x, y] }),
        };
        assert!(matches!(ChcSystem::new(vec![p], vec![c]), Err(ChcError::MixedTheory(_))));
    }

    #[test]
    fn repeated_atom_argument_rejected() {
        let x = Var::new("x", Sort::Int);
        let p = Predicate { name: "p".into(), arg_sorts: vec![Sort::Int, Sort::Int] };
        let c = Clause {
            vars: vec![x.clone()],
            body: vec![],
            constraint: Term::tt(),
            head: Head::Atom(Atom { pred: 0, args: vec![x.clone(), x] }),
        };
        assert!(matches!(ChcSystem::new(vec![p], vec![c]), Err(ChcError::RepeatedArgument { .. })));
    }
}

//! Normalization of asserted formulas into Horn clauses.

use std::collections::{BTreeSet, HashMap};

use super::script::ChcScript;
use super::FrontendError;
use crate::chc::{Atom, ChcSystem, Clause, Head, Predicate};
use crate::term::{rename, Op, Quantifier, Term, TermKind, Var};

/// Converts every assert of a script into exactly one clause.
pub fn extract_chc_system(s: &ChcScript) -> Result<ChcSystem, FrontendError> {
    let preds: Vec<Predicate> = s.declarations.iter().map(|(n, a)| Predicate { name: n.clone(), arg_sorts: a.clone() }).collect();
    let ids: HashMap<&str, usize> = preds.iter().enumerate().map(|(i, p)| (p.name.as_str(), i)).collect();
    let mut clauses = Vec::with_capacity(s.asserts.len());
    for (index, a) in s.asserts.iter().enumerate() {
        let c = Normalizer::new(a, &ids).run(a).map_err(|reason| FrontendError::NotHorn { index, reason })?;
        clauses.push(c);
    }
    ChcSystem::new(preds, clauses).map_err(FrontendError::Chc)
}

struct Normalizer<'a> {
    ids: &'a HashMap<&'a str, usize>,
    vars: Vec<Var>,
    taken: BTreeSet<String>,
    atoms: Vec<Term>,
    constraint: Vec<Term>,
}

fn is_pred_app(t: &Term) -> bool {
    matches!(t.as_app(), Some((Op::Pred(..), _)))
}

fn has_pred(t: &Term) -> bool {
    t.contains_op(&|o| matches!(o, Op::Pred(..)))
}

impl<'a> Normalizer<'a> {
    fn new(a: &Term, ids: &'a HashMap<&'a str, usize>) -> Self {
        let mut taken = BTreeSet::new();
        a.visit(&mut |t| match t.kind() {
            TermKind::Var(v) => {
                taken.insert(v.name().to_string());
            }
            TermKind::Quant(_, bs, _) => taken.extend(bs.iter().map(|v| v.name().to_string())),
            _ => {}
        });
        Normalizer { ids, vars: Vec::new(), taken, atoms: Vec::new(), constraint: Vec::new() }
    }

    fn fresh(&mut self, v: &Var) -> Var {
        let name = crate::term::subst::fresh_name(v.name(), &self.taken);
        self.taken.insert(name.clone());
        v.renamed(name)
    }

    fn run(mut self, a: &Term) -> Result<Clause, String> {
        let mut f = a.clone();
        // Strip the universal prefix, including `(not (exists ..))`.
        loop {
            match f.kind() {
                TermKind::Quant(Quantifier::Forall, bs, body) => {
                    self.vars.extend(bs.iter().cloned());
                    f = body.clone();
                }
                TermKind::App(Op::Not, args) => match args[0].kind() {
                    TermKind::Quant(Quantifier::Exists, bs, body) => {
                        self.vars.extend(bs.iter().cloned());
                        f = Term::not(body.clone());
                    }
                    _ => break,
                },
                _ => break,
            }
        }
        if self.vars.iter().map(|v| v.name()).collect::<BTreeSet<_>>().len() != self.vars.len() {
            // Nested prefixes rebinding a name: rename the inner binding.
            return Err("universal prefix rebinds a variable".into());
        }
        let head = self.split(&f)?;
        let head_atom = match head {
            Some(h) => Some(self.atom(&h, true)?),
            None => None,
        };
        let body = std::mem::take(&mut self.atoms);
        let mut body_atoms = Vec::with_capacity(body.len());
        for b in &body {
            body_atoms.push(self.atom(b, false)?);
        }
        let constraint = Term::and(std::mem::take(&mut self.constraint));
        if constraint.free_vars().iter().any(|v| !self.vars.contains(v)) || !constraint.is_quantifier_free() {
            return Err("constraint is not closed under the universal prefix".into());
        }
        let mut used: BTreeSet<Var> = constraint.free_vars();
        for a in body_atoms.iter().chain(head_atom.iter()) {
            used.extend(a.args.iter().cloned());
        }
        let vars = self.vars.into_iter().filter(|v| used.contains(v)).collect();
        Ok(Clause { vars, body: body_atoms, constraint, head: head_atom.map_or(Head::False, Head::Atom) })
    }

    /// Splits the matrix into body literals (collected in `self`) and returns
    /// the head atom, or `None` for a `false` head.
    fn split(&mut self, f: &Term) -> Result<Option<Term>, String> {
        if is_pred_app(f) {
            return Ok(Some(f.clone()));
        }
        if !has_pred(f) {
            if !f.is_false() {
                self.body(&Term::not(f.clone()))?;
            }
            return Ok(None);
        }
        match f.kind() {
            TermKind::App(Op::Implies, args) => {
                // (=> a b c) is (=> a (=> b c)).
                let (last, prem) = args.split_last().unwrap();
                for p in prem {
                    self.body(p)?;
                }
                self.split(last)
            }
            TermKind::App(Op::Not, args) => {
                self.body(&args[0])?;
                Ok(None)
            }
            TermKind::App(Op::Or, args) => {
                let mut head = None;
                for d in args {
                    if is_pred_app(d) {
                        if head.is_some() {
                            return Err("two positive predicate occurrences".into());
                        }
                        head = Some(d.clone());
                    } else if has_pred(d) {
                        match d.as_app() {
                            Some((Op::Not, inner)) => self.body(&inner[0])?,
                            _ => return Err(format!("predicate in unsupported position: {d}")),
                        }
                    } else {
                        self.body(&Term::not(d.clone()))?;
                    }
                }
                Ok(head)
            }
            _ => Err(format!("cannot normalize head {f}")),
        }
    }

    fn body(&mut self, b: &Term) -> Result<(), String> {
        if !has_pred(b) && b.is_quantifier_free() {
            self.constraint.push(b.clone());
            return Ok(());
        }
        if is_pred_app(b) {
            self.atoms.push(b.clone());
            return Ok(());
        }
        match b.kind() {
            TermKind::App(Op::And, args) => args.iter().try_for_each(|a| self.body(a)),
            TermKind::Quant(Quantifier::Exists, bs, inner) => {
                let mut map = HashMap::new();
                for v in bs {
                    let nv = self.fresh(v);
                    self.vars.push(nv.clone());
                    map.insert(v.clone(), nv);
                }
                let inner = rename(inner, &|v| map.get(v).cloned());
                self.body(&inner)
            }
            TermKind::App(Op::Not, args) if matches!(args[0].as_app(), Some((Op::Or, _))) => {
                let TermKind::App(_, ds) = args[0].kind() else { unreachable!() };
                ds.iter().try_for_each(|d| self.body(&Term::not(d.clone())))
            }
            TermKind::App(Op::Or, _) => Err("predicate under disjunction".into()),
            TermKind::App(Op::Not, _) => Err("negated predicate in body".into()),
            TermKind::Quant(Quantifier::Forall, ..) => Err("universal quantifier in body".into()),
            _ => Err(format!("predicate in unsupported position: {b}")),
        }
    }

    /// Turns a predicate application into an atom over distinct variables,
    /// adding `fresh = arg` constraints for non-variable or repeated arguments.
    fn atom(&mut self, t: &Term, _head: bool) -> Result<Atom, String> {
        let Some((Op::Pred(name, _), args)) = t.as_app() else { unreachable!() };
        let pred = *self.ids.get(name.as_ref()).ok_or_else(|| format!("undeclared predicate {name}"))?;
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            if has_pred(a) {
                return Err("predicate nested inside an argument".into());
            }
            match a.as_var() {
                Some(v) if self.vars.contains(v) && !seen.contains(v) => {
                    seen.insert(v.clone());
                    out.push(v.clone());
                }
                _ => {
                    let base = Var::new(format!("{name}_{}", out.len()), a.sort().clone());
                    let nv = self.fresh(&base);
                    self.vars.push(nv.clone());
                    self.constraint.push(Term::eq(nv.term(), a.clone()));
                    seen.insert(nv.clone());
                    out.push(nv);
                }
            }
        }
        Ok(Atom { pred, args: out })
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_script;
    use super::*;
    use crate::chc::{ClauseKind, Theory};

    fn sys(src: &str) -> Result<ChcSystem, FrontendError> {
        extract_chc_system(&parse_script(src)?)
    }

    const INV: &str = "(set-logic HORN)(declare-fun inv (Int) Bool)
        (assert (forall ((x Int)) (=> (= x 0) (inv x))))
        (assert (forall ((x Int) (x1 Int)) (=> (and (inv x) (= x1 (+ x 1))) (inv x1))))
        (assert (forall ((x Int)) (=> (and (inv x) (not (< x 5))) false)))
        (check-sat)";

    #[test]
    fn inv_system() {
        let s = sys(INV).unwrap();
        assert_eq!(s.predicates().len(), 1);
        assert_eq!(s.clauses().len(), 3);
        assert!(s.is_linear());
        assert_eq!(s.theory(), Theory::Lia);
        assert_eq!(s.classify().kinds, vec![ClauseKind::Fact, ClauseKind::Rule, ClauseKind::Query]);
    }

    #[test]
    fn two_body_atoms_nonlinear() {
        let s = sys("(declare-fun p (Int) Bool)(declare-fun q (Int) Bool)(declare-fun r (Int) Bool)
            (assert (forall ((x Int)) (=> (and (p x) (q x)) (r x))))")
        .unwrap();
        assert!(!s.is_linear());
    }

    #[test]
    fn disjunctive_body_not_horn() {
        let e = sys("(declare-fun p (Int) Bool)(assert (forall ((x Int)) (=> (or (p x) (> x 0)) false)))").unwrap_err();
        assert!(matches!(e, FrontendError::NotHorn { index: 0, .. }));
    }

    #[test]
    fn top_level_negation_is_query() {
        let s = sys("(declare-fun p (Int) Bool)(assert (forall ((x Int)) (not (p x))))").unwrap();
        assert_eq!(s.clauses()[0].kind(), ClauseKind::Query);
        assert_eq!(s.clauses()[0].body.len(), 1);
    }

    #[test]
    fn implication_chain_flattened() {
        let s = sys("(declare-fun p (Int) Bool)(assert (forall ((x Int)) (=> (p x) (=> (> x 0) (p x)))))").unwrap();
        let c = &s.clauses()[0];
        assert_eq!(c.kind(), ClauseKind::Rule);
        assert_eq!(c.constraint.to_string(), "(> x 0)");
    }

    #[test]
    fn disjunctive_clause_form() {
        let s = sys("(declare-fun p (Int) Bool)(declare-fun q (Int) Bool)
            (assert (forall ((x Int)) (or (not (p x)) (<= x 0) (q x))))")
        .unwrap();
        let c = &s.clauses()[0];
        assert_eq!(c.body.len(), 1);
        assert!(matches!(c.head, Head::Atom(Atom { pred: 1, .. })));
        assert_eq!(c.constraint.to_string(), "(not (<= x 0))");
    }

    #[test]
    fn non_variable_arguments_get_fresh_vars() {
        let s = sys("(declare-fun p (Int Int) Bool)(assert (forall ((x Int)) (=> (p x x) (p (+ x 1) 0))))").unwrap();
        let c = &s.clauses()[0];
        let body = &c.body[0].args;
        let head = c.head_atom().unwrap();
        assert_ne!(body[0], body[1]);
        assert!(head.args.iter().all(|v| v.name() != "x"));
        assert_eq!(c.constraint.conjuncts().len(), 3);
    }

    #[test]
    fn body_exists_hoisted() {
        let s =
            sys("(declare-fun p (Int) Bool)(assert (forall ((x Int)) (=> (exists ((y Int)) (and (p y) (= x (+ y 1)))) (p x))))").unwrap();
        let c = &s.clauses()[0];
        assert_eq!(c.vars.len(), 2);
        assert_eq!(c.body.len(), 1);
    }

    #[test]
    fn constraint_only_head() {
        let s = sys("(declare-fun p (Int) Bool)(assert (forall ((x Int)) (=> (p x) (>= x 0))))").unwrap();
        let c = &s.clauses()[0];
        assert_eq!(c.kind(), ClauseKind::Query);
        assert_eq!(c.constraint.to_string(), "(not (>= x 0))");
    }

    #[test]
    fn round_trip_is_alpha_equivalent() {
        let s = sys(INV).unwrap();
        let again = extract_chc_system(&parse_script(&s.to_smtlib()).unwrap()).unwrap();
        assert_eq!(s, again);
    }
}

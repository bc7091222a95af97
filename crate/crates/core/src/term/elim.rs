//! Variable elimination by equality substitution.

use std::collections::BTreeSet;

use super::op::Op;
use super::simplify::simplify;
use super::subst::{subst, Bindings};
use super::{Sort, Term, Var};

#[derive(Debug, Clone)]
pub struct Elimination {
    /// Remaining conjuncts after substitution (simplified; `[false]` if inconsistent).
    pub conjuncts: Vec<Term>,
    /// Solved variables in elimination order; right-hand sides mention no
    /// eliminated variable.
    pub definitions: Vec<(Var, Term)>,
    /// Variables from the elimination set that still occur in `conjuncts`.
    pub remaining: BTreeSet<Var>,
}

impl Elimination {
    pub fn formula(&self) -> Term {
        Term::and(self.conjuncts.iter().cloned())
    }
}

/// Eliminates as many of `elim` as possible from a conjunction by repeatedly
/// picking an equality that defines one of them.
pub fn eliminate(conjuncts: Vec<Term>, elim: &BTreeSet<Var>) -> Elimination {
    let mut cs: Vec<Term> = conjuncts.iter().flat_map(|c| simplify(c).conjuncts()).collect();
    let mut defs: Vec<(Var, Term)> = Vec::new();
    loop {
        if cs.iter().any(Term::is_false) {
            cs = vec![Term::ff()];
            break;
        }
        let found = cs.iter().enumerate().find_map(|(i, c)| solve_for_any(c, elim).map(|(v, r)| (i, v, r)));
        let Some((i, v, rhs)) = found else { break };
        cs.remove(i);
        let b: Bindings = [(v.clone(), rhs.clone())].into_iter().collect();
        cs = cs.iter().flat_map(|c| simplify(&subst(c, &b)).conjuncts()).collect();
        for d in defs.iter_mut() {
            d.1 = simplify(&subst(&d.1, &b));
        }
        defs.push((v, rhs));
    }
    let remaining = cs.iter().flat_map(|c| c.free_vars()).filter(|v| elim.contains(v)).collect();
    Elimination { conjuncts: cs, definitions: defs, remaining }
}

fn solve_for_any(c: &Term, elim: &BTreeSet<Var>) -> Option<(Var, Term)> {
    if let Some(v) = c.as_var() {
        if elim.contains(v) && v.sort() == &Sort::Bool {
            return Some((v.clone(), Term::tt()));
        }
    }
    let (op, args) = c.as_app()?;
    match op {
        Op::Not => {
            let v = args[0].as_var()?;
            (elim.contains(v) && v.sort() == &Sort::Bool).then(|| (v.clone(), Term::ff()))
        }
        Op::Eq if args.len() == 2 => {
            for (l, r) in [(&args[0], &args[1]), (&args[1], &args[0])] {
                for v in l.free_vars() {
                    if !elim.contains(&v) || r.free_vars().contains(&v) {
                        continue;
                    }
                    if let Some(rhs) = isolate(l, r, &v) {
                        return Some((v, simplify(&rhs)));
                    }
                }
            }
            None
        }
        _ => None,
    }
}

/// Solves `lhs = rhs` for `v`, where `v` does not occur in `rhs`.
fn isolate(lhs: &Term, rhs: &Term, v: &Var) -> Option<Term> {
    if lhs.as_var() == Some(v) {
        return Some(rhs.clone());
    }
    let (op, args) = lhs.as_app()?;
    let occurs = |t: &Term| t.free_vars().contains(v);
    match op {
        Op::Add | Op::BvAdd => {
            let idx: Vec<usize> = (0..args.len()).filter(|&i| occurs(&args[i])).collect();
            if idx.len() != 1 {
                return None;
            }
            let i = idx[0];
            let others: Vec<Term> = args.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, a)| a.clone()).collect();
            let sub = if matches!(op, Op::Add) { Op::Sub } else { Op::BvSub };
            let rest = if others.len() == 1 { others[0].clone() } else { Term::mk(op.clone(), others) };
            isolate(&args[i], &Term::mk(sub, vec![rhs.clone(), rest]), v)
        }
        Op::Sub | Op::BvSub if args.len() == 2 => {
            let add = if matches!(op, Op::Sub) { Op::Add } else { Op::BvAdd };
            match (occurs(&args[0]), occurs(&args[1])) {
                (true, false) => isolate(&args[0], &Term::mk(add, vec![rhs.clone(), args[1].clone()]), v),
                (false, true) => isolate(&args[1], &Term::mk(op.clone(), vec![args[0].clone(), rhs.clone()]), v),
                _ => None,
            }
        }
        Op::Neg | Op::BvNeg => isolate(&args[0], &Term::mk(op.clone(), vec![rhs.clone()]), v),
        Op::BvXor if args.len() == 2 => match (occurs(&args[0]), occurs(&args[1])) {
            (true, false) => isolate(&args[0], &Term::mk(Op::BvXor, vec![rhs.clone(), args[1].clone()]), v),
            (false, true) => isolate(&args[1], &Term::mk(Op::BvXor, vec![rhs.clone(), args[0].clone()]), v),
            _ => None,
        },
        Op::BvNot => isolate(&args[0], &Term::mk(Op::BvNot, vec![rhs.clone()]), v),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_of_equalities() {
        let x = Var::new("x", Sort::Int);
        let y = Var::new("y", Sort::Int);
        let a = Var::new("a", Sort::Int);
        // x = 0, y = x + 1, a = y  eliminating {x, y}
        let cs = vec![
            Term::eq(x.term(), Term::int(0)),
            Term::eq(y.term(), Term::binary(Op::Add, x.term(), Term::int(1))),
            Term::eq(a.term(), y.term()),
        ];
        let elim: BTreeSet<Var> = [x, y].into_iter().collect();
        let r = eliminate(cs, &elim);
        assert!(r.remaining.is_empty());
        assert_eq!(r.formula().to_string(), "(= a 1)");
    }

    #[test]
    fn isolates_summand() {
        let x = Var::new("x", Sort::Int);
        let a = Var::new("a", Sort::Int);
        let cs = vec![Term::eq(Term::binary(Op::Add, x.term(), Term::int(2)), a.term()), Term::binary(Op::Lt, x.term(), Term::int(0))];
        let r = eliminate(cs, &[x].into_iter().collect());
        assert!(r.remaining.is_empty());
        assert_eq!(r.formula().to_string(), "(< (- a 2) 0)");
    }

    #[test]
    fn reports_leftovers() {
        let x = Var::new("x", Sort::Int);
        let cs = vec![Term::binary(Op::Lt, x.term(), Term::int(0))];
        let r = eliminate(cs, &[x.clone()].into_iter().collect());
        assert!(r.remaining.contains(&x));
    }
}

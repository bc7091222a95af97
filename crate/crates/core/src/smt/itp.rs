//! Craig interpolation.
//!
//! The default route needs no interpolation support from the backend: it
//! computes the weakest interpolant by projecting the B side onto the shared
//! vocabulary (equality substitution first, then the solver's quantifier
//! elimination for what is left) and negating. A backend interpolation
//! command is used instead when the capability flag allows it.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{SatResult, SmtContext, SmtError, SolverSession};
use crate::term::elim::eliminate;
use crate::term::{simplify, Term, Var};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ItpError {
    #[error("partitions are satisfiable")]
    NotUnsat,
    #[error("interpolation incomplete: {0}")]
    FallbackIncomplete(String),
    #[error(transparent)]
    Smt(#[from] SmtError),
}

/// Which side is projected: `Backward` yields the weakest interpolants
/// (negated projection of the suffix), `Forward` the strongest (projection
/// of the prefix).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ItpDirection {
    #[default]
    Backward,
    Forward,
}

pub struct Interpolator {
    session: SolverSession,
    pub direction: ItpDirection,
}

fn vars_of(ts: &[Term]) -> BTreeSet<Var> {
    ts.iter().flat_map(|t| t.free_vars()).collect()
}

impl Interpolator {
    pub fn new(ctx: &SmtContext) -> Result<Interpolator, SmtError> {
        Ok(Interpolator { session: ctx.itp_session()?, direction: ItpDirection::default() })
    }

    pub fn with_direction(mut self, d: ItpDirection) -> Self {
        self.direction = d;
        self
    }

    fn ensure_unsat(&mut self, parts: &[Term]) -> Result<(), ItpError> {
        match self.session.check_with(parts)? {
            SatResult::Unsat => Ok(()),
            SatResult::Sat => Err(ItpError::NotUnsat),
            SatResult::Unknown(r) => Err(ItpError::FallbackIncomplete(format!("unsatisfiability unknown: {r}"))),
        }
    }

    /// `∃ elim. ⋀ parts`, quantifier-free.
    pub fn project(&mut self, parts: &[Term], keep: &BTreeSet<Var>) -> Result<Term, ItpError> {
        let conj: Vec<Term> = parts.iter().flat_map(|p| p.conjuncts()).collect();
        let elim: BTreeSet<Var> = vars_of(&conj).into_iter().filter(|v| !keep.contains(v)).collect();
        if elim.is_empty() {
            return Ok(simplify(&Term::and(conj)));
        }
        let el = eliminate(conj, &elim);
        let f = simplify(&el.formula());
        let left: Vec<Var> = f.free_vars().into_iter().filter(|v| elim.contains(v)).collect();
        if left.is_empty() {
            return Ok(f);
        }
        let q = Term::exists(left, f);
        match self.session.eliminate_quantifiers(&q)? {
            Some(t) => Ok(simplify(&t)),
            None => Err(ItpError::FallbackIncomplete("quantifier elimination left quantifiers".into())),
        }
    }

    /// Binary interpolant of `a` and `b`.
    pub fn binary(&mut self, a: &Term, b: &Term) -> Result<Term, ItpError> {
        if a.is_false() {
            return Ok(Term::ff());
        }
        if b.is_false() {
            return Ok(Term::tt());
        }
        self.ensure_unsat(&[a.clone(), b.clone()])?;
        if let Some(i) = self.session.get_interpolant(a, b)? {
            return Ok(i);
        }
        let shared: BTreeSet<Var> = a.free_vars().intersection(&b.free_vars()).cloned().collect();
        match self.direction {
            ItpDirection::Backward => Ok(simplify(&Term::not(self.project(std::slice::from_ref(b), &shared)?))),
            ItpDirection::Forward => self.project(std::slice::from_ref(a), &shared),
        }
    }

    /// Sequence interpolants `I_0 … I_n` for partitions `A_1 … A_n`.
    pub fn sequence(&mut self, parts: &[Term]) -> Result<Vec<Term>, ItpError> {
        let n = parts.len();
        if n < 2 {
            return Err(ItpError::FallbackIncomplete("need at least two partitions".into()));
        }
        self.ensure_unsat(parts)?;
        let mut out = vec![Term::tt()];
        if self.session.itp == super::ItpCapability::GetInterpolant {
            // Chain binary interpolants: I_{i+1} = itp(I_i ∧ A_{i+1}, A_{i+2..n}).
            for i in 1..n {
                let a = Term::and([out[i - 1].clone(), parts[i - 1].clone()]);
                let b = Term::and(parts[i..].iter().cloned());
                match self.session.get_interpolant(&a, &b)? {
                    Some(t) => out.push(t),
                    None => return Err(ItpError::FallbackIncomplete("backend interpolation failed".into())),
                }
            }
            out.push(Term::ff());
            return Ok(out);
        }
        for i in 1..n {
            let (pre, suf) = parts.split_at(i);
            let shared: BTreeSet<Var> = vars_of(pre).intersection(&vars_of(suf)).cloned().collect();
            let t = match self.direction {
                ItpDirection::Backward => simplify(&Term::not(self.project(suf, &shared)?)),
                ItpDirection::Forward => self.project(pre, &shared)?,
            };
            out.push(t);
        }
        out.push(Term::ff());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;
    use crate::budget::Budget;
    use crate::smt::{entails, SolverConfig};
    use crate::term::{Op, Sort};

    fn ctx() -> SmtContext {
        SmtContext::new(SolverConfig::default(), Budget::with_timeout(Duration::from_secs(30)))
    }

    fn int(n: &str) -> Var {
        Var::new(n, Sort::Int)
    }

    /// Independent check of the binary Craig conditions.
    fn craig(c: &SmtContext, a: &Term, b: &Term, i: &Term) {
        let mut s = c.session().unwrap();
        assert_eq!(entails(&mut s, a, i).unwrap(), Some(true), "a does not entail {i}");
        assert_eq!(s.check_with(&[i.clone(), b.clone()]).unwrap(), SatResult::Unsat, "{i} consistent with b");
        let shared: BTreeSet<Var> = a.free_vars().intersection(&b.free_vars()).cloned().collect();
        assert!(i.free_vars().is_subset(&shared));
    }

    #[test]
    fn binary_contract_both_directions() {
        let c = ctx();
        let (x, y) = (int("x"), int("y"));
        let a = Term::and([Term::eq(x.term(), Term::int(0)), Term::eq(y.term(), x.term())]);
        let b = Term::binary(Op::Gt, y.term(), Term::int(0));
        for d in [ItpDirection::Backward, ItpDirection::Forward] {
            let mut it = Interpolator::new(&c).unwrap().with_direction(d);
            let i = it.binary(&a, &b).unwrap();
            craig(&c, &a, &b, &i);
        }
    }

    #[test]
    fn degenerate_cases() {
        let c = ctx();
        let mut it = Interpolator::new(&c).unwrap();
        assert!(it.binary(&Term::ff(), &Term::tt()).unwrap().is_false());
        let p = Var::new("p", Sort::Bool);
        assert_eq!(it.binary(&p.term(), &Term::not(p.term())).unwrap(), p.term());
        let x = int("x");
        let sat = [Term::binary(Op::Gt, x.term(), Term::int(0)), Term::binary(Op::Lt, x.term(), Term::int(5))];
        assert_eq!(it.sequence(&sat), Err(ItpError::NotUnsat));
    }

    #[test]
    fn sequence_contract_on_counter() {
        let c = ctx();
        let (x, x1) = (int("x"), int("x1"));
        let a1 = Term::eq(x.term(), Term::int(0));
        let a2 =
            Term::and([Term::eq(x1.term(), Term::binary(Op::Add, x.term(), Term::int(1))), Term::binary(Op::Ge, x1.term(), Term::int(5))]);
        let mut it = Interpolator::new(&c).unwrap();
        let seq = it.sequence(&[a1.clone(), a2.clone()]).unwrap();
        assert!(seq[0].is_true() && seq[2].is_false());
        craig(&c, &a1, &a2, &seq[1]);
    }
}

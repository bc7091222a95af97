//! Bounded model checking, k-induction, and interpolation-based model
//! checking over a symbolic transition system.

use std::collections::BTreeSet;

use crate::budget::Interrupted;
use crate::smt::{Interpolator, ItpError, SatResult, SmtContext, SmtError, SolverSession};
use crate::sts::{at_step, Sts};
use crate::term::{rename, simplify, Sort, Term, Valuation, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundedVerdict {
    /// A path of `k` transitions ending in a property violation. `states[i]`
    /// holds the state variables at step `i`; `aux` holds the indexed
    /// auxiliary variables of the unrolling.
    Unsafe {
        k: usize,
        states: Vec<Valuation>,
        aux: Valuation,
    },
    SafeBmcExhausted(usize),
    SafeKInduction(usize),
    /// An inductive invariant over the state variables that entails `P`.
    SafeImc(Term),
    Unknown(String),
}

impl BoundedVerdict {
    pub fn is_safe(&self) -> bool {
        matches!(self, BoundedVerdict::SafeBmcExhausted(_) | BoundedVerdict::SafeKInduction(_) | BoundedVerdict::SafeImc(_))
    }

    pub fn is_unsafe(&self) -> bool {
        matches!(self, BoundedVerdict::Unsafe { .. })
    }
}

fn unknown_from(e: SmtError) -> BoundedVerdict {
    match e {
        SmtError::Interrupted(Interrupted::Timeout) => BoundedVerdict::Unknown("budget exhausted".into()),
        SmtError::Interrupted(Interrupted::Cancelled) => BoundedVerdict::Unknown("cancelled".into()),
        e => BoundedVerdict::Unknown(e.to_string()),
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(x) => x,
            Err(e) => return unknown_from(e.into()),
        }
    };
}

fn witness(s: &mut SolverSession, sts: &Sts, k: usize) -> Result<(Vec<Valuation>, Valuation), SmtError> {
    let mut all: Vec<Var> = (0..=k).flat_map(|i| sts.vars_at(i)).collect();
    let aux_vars = sts.aux_vars_upto(k);
    all.extend(aux_vars.iter().cloned());
    let vals = s.get_values(&all)?;
    let states =
        (0..=k).map(|i| sts.vars.iter().filter_map(|v| vals.get(&at_step(v, i)).map(|x| (v.clone(), x.clone()))).collect()).collect();
    let aux = aux_vars.iter().filter_map(|a| vals.get(a).map(|x| (a.clone(), x.clone()))).collect();
    Ok((states, aux))
}

/// Incremental unrolling shared by BMC and the base case of k-induction.
struct BaseCase<'a> {
    sts: &'a Sts,
    s: SolverSession,
    k: usize,
}

enum BaseStep {
    Bug(BoundedVerdict),
    Exhausted,
    Open,
}

impl<'a> BaseCase<'a> {
    fn new(sts: &'a Sts, ctx: &SmtContext) -> Result<Self, SmtError> {
        let mut s = ctx.session()?;
        s.assert(&sts.init_at0())?;
        Ok(BaseCase { sts, s, k: 0 })
    }

    /// Extends the unrolling to `k` (if needed) and runs the bug and loop-free checks.
    fn check(&mut self, k: usize) -> Result<BaseStep, SmtError> {
        while self.k < k {
            self.s.assert(&self.sts.trans_at(self.k))?;
            self.k += 1;
            // A shortest counterexample is a simple path, so earlier states
            // may be required distinct from the new one.
            for i in 0..self.k {
                self.s.assert(&self.sts.distinct(i, self.k))?;
            }
        }
        match self.s.check_with(&[Term::not(self.sts.prop_at(k))])? {
            SatResult::Sat => {
                // check_with popped the frame; re-establish it for the model.
                self.s.push()?;
                self.s.assert(&Term::not(self.sts.prop_at(k)))?;
                let r = self.s.check()?;
                let w = if r == SatResult::Sat { Some(witness(&mut self.s, self.sts, k)?) } else { None };
                self.s.pop()?;
                return Ok(match w {
                    Some((states, aux)) => BaseStep::Bug(BoundedVerdict::Unsafe { k, states, aux }),
                    None => BaseStep::Bug(BoundedVerdict::Unknown("unstable model".into())),
                });
            }
            SatResult::Unknown(r) => return Ok(BaseStep::Bug(BoundedVerdict::Unknown(r))),
            SatResult::Unsat => {}
        }
        Ok(match self.s.check()? {
            SatResult::Unsat => BaseStep::Exhausted,
            SatResult::Sat => BaseStep::Open,
            SatResult::Unknown(r) => BaseStep::Bug(BoundedVerdict::Unknown(r)),
        })
    }
}

/// Bounded model checking with the loop-free check.
pub fn bmc(sts: &Sts, max_k: usize, ctx: &SmtContext) -> BoundedVerdict {
    let mut base = tri!(BaseCase::new(sts, ctx));
    for k in 0..=max_k {
        tri!(ctx.budget.check());
        match tri!(base.check(k)) {
            BaseStep::Bug(v) => return v,
            BaseStep::Exhausted => return BoundedVerdict::SafeBmcExhausted(k),
            BaseStep::Open => {}
        }
    }
    BoundedVerdict::Unknown(format!("bound {max_k} reached"))
}

/// k-induction with simple-path strengthening. The base case is the BMC step,
/// including its loop-free check.
pub fn kinduction(sts: &Sts, max_k: usize, ctx: &SmtContext) -> BoundedVerdict {
    let mut base = tri!(BaseCase::new(sts, ctx));
    let mut step = tri!(ctx.session());
    for k in 0..=max_k {
        tri!(ctx.budget.check());
        match tri!(base.check(k)) {
            BaseStep::Bug(v) => return v,
            BaseStep::Exhausted => return BoundedVerdict::SafeBmcExhausted(k),
            BaseStep::Open => {}
        }
        if k > 0 {
            tri!(step.assert(&sts.prop_at(k - 1)));
            tri!(step.assert(&sts.trans_at(k - 1)));
            for i in 0..k {
                tri!(step.assert(&sts.distinct(i, k)));
            }
        }
        match tri!(step.check_with(&[Term::not(sts.prop_at(k))])) {
            SatResult::Unsat => return BoundedVerdict::SafeKInduction(k),
            SatResult::Sat => {}
            SatResult::Unknown(r) => return BoundedVerdict::Unknown(r),
        }
    }
    BoundedVerdict::Unknown(format!("bound {max_k} reached"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImcConfig {
    pub max_k: usize,
    /// Refuse bit-vector systems unless the backend interpolates natively.
    pub bv_needs_backend: bool,
}

impl Default for ImcConfig {
    fn default() -> Self {
        ImcConfig { max_k: 50, bv_needs_backend: true }
    }
}

/// Interpolation-based model checking.
pub fn imc(sts: &Sts, config: ImcConfig, ctx: &SmtContext) -> BoundedVerdict {
    let has_bv = sts.vars.iter().any(|v| matches!(v.sort(), Sort::BitVec(_)));
    if has_bv && config.bv_needs_backend && ctx.config.interpolation == crate::smt::ItpCapability::None {
        return BoundedVerdict::Unknown("no interpolating backend for bit-vectors".into());
    }
    let mut itp = tri!(Interpolator::new(ctx));
    let mut s = tri!(ctx.session());
    let state: BTreeSet<Var> = sts.vars.iter().cloned().collect();
    let v0: BTreeSet<Var> = sts.vars_at(0).into_iter().collect();

    // Initial states over V_0 without auxiliaries.
    let init0 = match project_init(&mut itp, sts, &v0) {
        Ok(t) => t,
        Err(e) => return itp_unknown(e),
    };
    match tri!(s.check_with(&[init0.clone(), Term::not(sts.prop_at(0))])) {
        SatResult::Sat => return bmc(sts, 0, ctx),
        SatResult::Unknown(r) => return BoundedVerdict::Unknown(r),
        SatResult::Unsat => {}
    }
    let to0 = |t: &Term, from: usize| -> Term {
        let map: std::collections::HashMap<Var, Var> = sts.vars.iter().map(|v| (at_step(v, from), at_step(v, 0))).collect();
        rename(t, &|v| map.get(v).cloned())
    };
    for k in 1..=config.max_k {
        tri!(ctx.budget.check());
        let b = Term::and((1..k).map(|i| sts.trans_at(i)).chain([Term::or((1..=k).map(|i| Term::not(sts.prop_at(i))))]));
        let mut r = init0.clone();
        let mut first = true;
        loop {
            tri!(ctx.budget.check());
            let a = Term::and([r.clone(), sts.trans_at(0)]);
            match tri!(s.check_with(&[a.clone(), b.clone()])) {
                SatResult::Sat if first => return bmc(sts, k, ctx),
                SatResult::Sat => break,
                SatResult::Unknown(why) => return BoundedVerdict::Unknown(why),
                SatResult::Unsat => {}
            }
            first = false;
            let j = match itp.binary(&a, &b) {
                Ok(j) => simplify(&to0(&j, 1)),
                Err(e) => return itp_unknown(e),
            };
            match tri!(s.check_with(&[j.clone(), Term::not(r.clone())])) {
                SatResult::Unsat => {
                    let inv =
                        rename(&r, &|v| v.name().rsplit_once('@').and_then(|(base, _)| state.iter().find(|s| s.name() == base).cloned()));
                    return BoundedVerdict::SafeImc(simplify(&inv));
                }
                SatResult::Sat => r = Term::or([r, j]),
                SatResult::Unknown(why) => return BoundedVerdict::Unknown(why),
            }
        }
    }
    BoundedVerdict::Unknown(format!("bound {} reached", config.max_k))
}

fn itp_unknown(e: ItpError) -> BoundedVerdict {
    match e {
        ItpError::Smt(e) => unknown_from(e),
        e => BoundedVerdict::Unknown(format!("interpolation failed: {e}")),
    }
}

fn project_init(itp: &mut Interpolator, sts: &Sts, v0: &BTreeSet<Var>) -> Result<Term, ItpError> {
    let i = sts.init_at0();
    if sts.init_aux.is_empty() {
        return Ok(i);
    }
    itp.project(&[i], v0)
}

#[cfg(test)]
mod tests;

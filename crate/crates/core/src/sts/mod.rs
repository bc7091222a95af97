//! Symbolic transition systems and the CFA-to-STS encoding.
//!
//! The location is a data variable `loc: Int`. Havocs become auxiliary
//! variables that stay existential: they are renamed per unrolling step.

use std::collections::{BTreeSet, HashMap};

use crate::cfa::{Cfa, CfaOp, Edge, LocId};
use crate::term::elim::eliminate;
use crate::term::{rename, simplify, subst, Bindings, Sort, Term, Value, Var};

/// Knobs of the encoding. The defaults fold the first and last edge of every
/// path into `I` and `P`, which removes the artificial init and error steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Replace `loc = #init` by the disjunction of the init edges' effects.
    pub fold_init: bool,
    /// Move error edges whose guard is free of auxiliaries into `P`.
    pub fold_error: bool,
    /// Reset variables that are dead at the target location to their default.
    pub normalize_dead: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions { fold_init: true, fold_error: true, normalize_dead: true }
    }
}

impl EncodeOptions {
    /// The literal encoding: `I = (loc = #init)`, `P = (loc ≠ #error)`.
    pub fn plain() -> Self {
        EncodeOptions { fold_init: false, fold_error: false, normalize_dead: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sts {
    /// State variables; the first one is `loc`.
    pub vars: Vec<Var>,
    pub init: Term,
    pub trans: Term,
    pub prop: Term,
    /// Auxiliary variables of `init`, existential at step 0.
    pub init_aux: Vec<Var>,
    /// Auxiliary variables of `trans`, existential per step.
    pub trans_aux: Vec<Var>,
    /// Variables dead on entry to each location (reset by the encoding when
    /// dead-variable normalization is on).
    pub dead: Vec<BTreeSet<Var>>,
    pub options: EncodeOptions,
}

pub fn loc_var() -> Var {
    Var::new("loc", Sort::Int)
}

pub fn primed(v: &Var) -> Var {
    v.renamed(format!("{}'", v.name()))
}

/// Name of `v` at unrolling step `i`.
pub fn at_step(v: &Var, i: usize) -> Var {
    v.renamed(format!("{}@{i}", v.name()))
}

fn loc_is(l: LocId) -> Term {
    Term::eq(loc_var().term(), Term::int(l as i64))
}

fn loc_is_primed(l: LocId) -> Term {
    Term::eq(primed(&loc_var()).term(), Term::int(l as i64))
}

/// Result of threading an edge's ops over SSA copies.
struct EdgeEffect {
    constraints: Vec<Term>,
    /// Final value of every CFA variable.
    values: HashMap<Var, Term>,
    aux: Vec<Var>,
}

fn charfn(cfa: &Cfa, e: &Edge, start: &dyn Fn(&Var) -> Term, aux_tag: &str) -> EdgeEffect {
    let mut env: Bindings = cfa.vars.iter().map(|v| (v.clone(), start(v))).collect();
    let mut constraints = Vec::new();
    let mut aux = Vec::new();
    for op in &e.ops {
        match op {
            CfaOp::Havoc(v) => {
                let a = v.renamed(format!("{}!{aux_tag}_{}", v.name(), aux.len()));
                env.insert(v.clone(), a.term());
                aux.push(a);
            }
            CfaOp::Assign(v, t) => {
                let rhs = subst(t, &env);
                env.insert(v.clone(), rhs);
            }
            CfaOp::Assume(c) => constraints.push(subst(c, &env)),
        }
    }
    EdgeEffect { constraints, values: env.into_iter().collect(), aux }
}

/// Builds `conjuncts`, eliminating auxiliaries by equality substitution where
/// possible, and returns the remaining auxiliaries.
fn close(conjuncts: Vec<Term>, aux: Vec<Var>) -> (Term, Vec<Var>) {
    let set: BTreeSet<Var> = aux.iter().cloned().collect();
    let el = eliminate(conjuncts, &set);
    let f = simplify(&el.formula());
    let fv = f.free_vars();
    (f, aux.into_iter().filter(|a| fv.contains(a)).collect())
}

pub fn encode(cfa: &Cfa) -> Sts {
    encode_with(cfa, EncodeOptions::default())
}

pub fn encode_with(cfa: &Cfa, options: EncodeOptions) -> Sts {
    let live = cfa.live_vars();
    let dead: Vec<BTreeSet<Var>> = live.iter().map(|l| cfa.vars.iter().filter(|v| !l.contains(*v)).cloned().collect()).collect();
    let post_value = |dst: LocId, v: &Var, val: &Term| -> Term {
        if options.normalize_dead && dead[dst].contains(v) {
            Term::constant(Value::default_of(v.sort()))
        } else {
            val.clone()
        }
    };
    let mut vars = vec![loc_var()];
    vars.extend(cfa.vars.iter().cloned());

    let mut init_parts = Vec::new();
    let mut init_aux = Vec::new();
    let mut trans_parts = Vec::new();
    let mut trans_aux = Vec::new();
    let mut prop_parts = vec![Term::not(loc_is(cfa.error))];

    for (eid, e) in cfa.edges.iter().enumerate() {
        if options.fold_init && e.src == cfa.init {
            let eff = charfn(cfa, e, &|v| Term::constant(Value::default_of(v.sort())), &format!("i{eid}"));
            let mut c = eff.constraints;
            c.push(loc_is(e.dst));
            for v in &cfa.vars {
                c.push(Term::eq(v.term(), post_value(e.dst, v, &eff.values[v])));
            }
            let (f, aux) = close(c, eff.aux);
            init_parts.push(f);
            init_aux.extend(aux);
            continue;
        }
        let eff = charfn(cfa, e, &|v| v.term(), &format!("h{eid}"));
        if options.fold_error && e.dst == cfa.error {
            let (guard, aux) = close(eff.constraints.clone(), eff.aux.clone());
            if aux.is_empty() {
                prop_parts.push(Term::not(Term::and([loc_is(e.src), guard])));
                continue;
            }
        }
        let mut c = vec![loc_is(e.src)];
        c.extend(eff.constraints);
        for v in &cfa.vars {
            c.push(Term::eq(primed(v).term(), post_value(e.dst, v, &eff.values[v])));
        }
        c.push(loc_is_primed(e.dst));
        let (f, aux) = close(c, eff.aux);
        trans_parts.push(f);
        trans_aux.extend(aux);
    }

    let init = if options.fold_init {
        Term::or(init_parts)
    } else {
        let mut c = vec![loc_is(cfa.init)];
        if options.normalize_dead {
            c.extend(dead[cfa.init].iter().map(|v| Term::eq(v.term(), Term::constant(Value::default_of(v.sort())))));
        }
        Term::and(c)
    };
    Sts { vars, init, trans: Term::or(trans_parts), prop: Term::and(prop_parts), init_aux, trans_aux, dead, options }
}

impl Sts {
    /// A system given directly by its formulas, without auxiliaries.
    pub fn from_formulas(vars: Vec<Var>, init: Term, trans: Term, prop: Term) -> Sts {
        Sts { vars, init, trans, prop, init_aux: vec![], trans_aux: vec![], dead: vec![], options: EncodeOptions::plain() }
    }

    pub fn loc(&self) -> &Var {
        &self.vars[0]
    }

    pub fn vars_at(&self, i: usize) -> Vec<Var> {
        self.vars.iter().map(|v| at_step(v, i)).collect()
    }

    /// A state formula over `vars` shifted to step `i`.
    pub fn state_at(&self, t: &Term, i: usize) -> Term {
        let vars: BTreeSet<&Var> = self.vars.iter().collect();
        rename(t, &|v| vars.contains(v).then(|| at_step(v, i)))
    }

    pub fn init_at0(&self) -> Term {
        let vars: BTreeSet<&Var> = self.vars.iter().chain(&self.init_aux).collect();
        rename(&self.init, &|v| vars.contains(v).then(|| at_step(v, 0)))
    }

    pub fn prop_at(&self, i: usize) -> Term {
        self.state_at(&self.prop, i)
    }

    /// `T(V_i, V_{i+1})` with the step's own auxiliaries.
    pub fn trans_at(&self, i: usize) -> Term {
        let mut map: HashMap<Var, Var> = HashMap::new();
        for v in &self.vars {
            map.insert(v.clone(), at_step(v, i));
            map.insert(primed(v), at_step(v, i + 1));
        }
        for a in &self.trans_aux {
            map.insert(a.clone(), at_step(a, i));
        }
        rename(&self.trans, &|v| map.get(v).cloned())
    }

    /// Shifts a two-state formula over `vars ∪ vars'` to steps `i, i+1`.
    pub fn pair_at(&self, t: &Term, i: usize) -> Term {
        let mut map: HashMap<Var, Var> = HashMap::new();
        for v in &self.vars {
            map.insert(v.clone(), at_step(v, i));
            map.insert(primed(v), at_step(v, i + 1));
        }
        rename(t, &|v| map.get(v).cloned())
    }

    /// `V_i ≠ V_j` over all state variables.
    pub fn distinct(&self, i: usize, j: usize) -> Term {
        Term::or(self.vars.iter().map(|v| Term::not(Term::eq(at_step(v, i).term(), at_step(v, j).term()))))
    }

    /// Auxiliary variables introduced by `unroll(k)`.
    pub fn aux_vars_upto(&self, k: usize) -> Vec<Var> {
        let mut out: Vec<Var> = self.init_aux.iter().map(|a| at_step(a, 0)).collect();
        for i in 0..k {
            out.extend(self.trans_aux.iter().map(|a| at_step(a, i)));
        }
        out
    }

    /// Whether a term mentions auxiliaries at all (used by IMC's fixpoint test).
    pub fn has_aux(&self) -> bool {
        !self.init_aux.is_empty() || !self.trans_aux.is_empty()
    }
}

/// `I(V_0) ∧ T(V_0,V_1) ∧ … ∧ T(V_{k-1},V_k)`.
pub fn unroll(sts: &Sts, k: usize) -> Term {
    let mut parts = vec![sts.init_at0()];
    parts.extend((0..k).map(|i| sts.trans_at(i)));
    Term::and(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfa::forward_transform;
    use crate::smtlib::parse_chc;

    fn inv_cfa() -> Cfa {
        forward_transform(&parse_chc(crate::fixtures::INV).unwrap()).unwrap().0
    }

    #[test]
    fn plain_encoding_shape() {
        let sts = encode_with(&inv_cfa(), EncodeOptions::plain());
        assert_eq!(sts.init.to_string(), "(= loc 0)");
        assert_eq!(sts.prop.to_string(), "(not (= loc 2))");
        assert_eq!(sts.trans.disjuncts().len(), 3);
    }

    #[test]
    fn folded_encoding_matches_counter() {
        let sts = encode(&inv_cfa());
        assert_eq!(sts.init.to_string(), "(and (= loc 1) (= inv_arg_0 0) (= tmp_i_0 0))");
        assert_eq!(sts.trans.disjuncts().len(), 1);
        assert!(sts.init_aux.is_empty() && sts.trans_aux.is_empty());
        assert!(sts.prop.to_string().contains("(< inv_arg_0 5)"));
    }

    #[test]
    fn no_edges_means_false_transition() {
        let sys = parse_chc("(declare-fun p (Int) Bool)").unwrap();
        let (cfa, _) = forward_transform(&sys).unwrap();
        assert!(encode(&cfa).trans.is_false());
    }

    #[test]
    fn havoc_leaves_primed_unconstrained() {
        let sys = parse_chc("(declare-fun p (Int) Bool)(assert (forall ((x Int) (y Int)) (=> (p x) (p y))))(assert (forall ((x Int)) (=> (and (p x) (> x 0)) false)))").unwrap();
        let (cfa, _) = forward_transform(&sys).unwrap();
        let sts = encode_with(&cfa, EncodeOptions { fold_init: false, fold_error: false, normalize_dead: true });
        let d = &sts.trans.disjuncts()[0];
        // y is a havoc: after elimination, p_arg_0' is not tied to p_arg_0.
        assert!(!d.to_string().contains("p_arg_0'| p_arg_0)"));
        assert!(!d.to_string().contains("p_arg_0'| 0)"));
        assert!(d.to_string().contains("(= |loc'| 1)"));
    }

    #[test]
    fn unroll_families_disjoint() {
        let sts = encode(&inv_cfa());
        let u = unroll(&sts, 3);
        assert_eq!(unroll(&sts, 0), sts.init_at0());
        let names: BTreeSet<String> = u.free_vars().iter().map(|v| v.name().to_string()).collect();
        assert!(names.contains("inv_arg_0@3") && names.contains("loc@0"));
        assert!(names.iter().all(|n| n.contains('@')));
    }
}

//! Forward ("bottom-up") transformation: one location per predicate, one edge per clause.

use std::collections::{BTreeSet, HashMap};

use super::{Cfa, CfaError, CfaOp, Edge};
use crate::chc::{ChcSystem, Head};
use crate::term::{subst, Bindings, Sort, Term, Var};

/// Parameter variables of each predicate: `p_arg_0 … p_arg_{n-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredVarMap {
    pub params: Vec<Vec<Var>>,
}

/// Hands out unique variable names and pooled scratch variables.
struct NameSupply {
    taken: BTreeSet<String>,
    pool: HashMap<(Sort, usize), Var>,
    order: Vec<Var>,
}

impl NameSupply {
    fn fresh(&mut self, base: &str, sort: Sort) -> Var {
        let name = if self.taken.contains(base) { crate::term::subst::fresh_name(base, &self.taken) } else { base.to_string() };
        self.taken.insert(name.clone());
        let v = Var::new(name, sort);
        self.order.push(v.clone());
        v
    }

    /// The `k`-th scratch variable of a sort; shared across clauses.
    fn scratch(&mut self, sort: &Sort, k: usize) -> Var {
        if let Some(v) = self.pool.get(&(sort.clone(), k)) {
            return v.clone();
        }
        let v = self.fresh(&format!("tmp_{}_{k}", sort.tag()), sort.clone());
        self.pool.insert((sort.clone(), k), v.clone());
        v
    }
}

pub fn forward_transform(sys: &ChcSystem) -> Result<(Cfa, PredVarMap), CfaError> {
    if !sys.is_linear() {
        return Err(CfaError::NonLinearUnsupported);
    }
    let n = sys.predicates().len();
    let init = 0;
    let error = n + 1;
    let mut names = NameSupply { taken: BTreeSet::new(), pool: HashMap::new(), order: Vec::new() };
    let params: Vec<Vec<Var>> = sys
        .predicates()
        .iter()
        .map(|p| p.arg_sorts.iter().enumerate().map(|(i, s)| names.fresh(&format!("{}_arg_{i}", p.name), s.clone())).collect())
        .collect();

    let mut edges = Vec::with_capacity(sys.clauses().len());
    for (ci, c) in sys.clauses().iter().enumerate() {
        let mut sigma = Bindings::new();
        let src = match c.body.first() {
            Some(b) => {
                for (v, p) in b.args.iter().zip(&params[b.pred]) {
                    sigma.insert(v.clone(), p.term());
                }
                b.pred + 1
            }
            None => init,
        };
        let mut ops = Vec::new();
        let mut per_sort: HashMap<Sort, usize> = HashMap::new();
        let locals: Vec<Var> = c.vars.iter().filter(|v| !sigma.contains_key(*v)).cloned().collect();
        for v in &locals {
            let k = per_sort.entry(v.sort().clone()).or_insert(0);
            let s = names.scratch(v.sort(), *k);
            *k += 1;
            ops.push(CfaOp::Havoc(s.clone()));
            sigma.insert(v.clone(), s.term());
        }
        let cond = subst(&c.constraint, &sigma);
        if !cond.is_true() {
            ops.push(CfaOp::Assume(cond));
        }
        let dst = match &c.head {
            Head::False => error,
            Head::Atom(h) => {
                let targets = &params[h.pred];
                let rhs: Vec<Term> = h.args.iter().map(|a| subst(&a.term(), &sigma)).collect();
                let pending: Vec<(Var, Term)> = targets.iter().cloned().zip(rhs).filter(|(p, t)| t.as_var() != Some(p)).collect();
                let assigned: BTreeSet<&Var> = pending.iter().map(|(p, _)| p).collect();
                let clash = pending.iter().any(|(_, t)| t.free_vars().iter().any(|v| assigned.contains(v)));
                if clash {
                    // Simultaneous assignment: copy every right-hand side first.
                    let mut temps = Vec::new();
                    for (p, t) in &pending {
                        let k = per_sort.entry(p.sort().clone()).or_insert(0);
                        let s = names.scratch(p.sort(), *k);
                        *k += 1;
                        ops.push(CfaOp::Assign(s.clone(), t.clone()));
                        temps.push((p.clone(), s.term()));
                    }
                    ops.extend(temps.into_iter().map(|(p, s)| CfaOp::Assign(p, s)));
                } else {
                    ops.extend(pending.into_iter().map(|(p, t)| CfaOp::Assign(p, t)));
                }
                h.pred + 1
            }
        };
        edges.push(Edge { src, ops, dst, clause: ci });
    }

    let mut loc_names = vec!["init".to_string()];
    loc_names.extend(sys.predicates().iter().map(|p| p.name.clone()));
    loc_names.push("error".to_string());
    let mut loc_to_pred = vec![None];
    loc_to_pred.extend((0..n).map(Some));
    loc_to_pred.push(None);
    let cfa = Cfa { vars: names.order, loc_names, init, error, edges, loc_to_pred };
    Ok((cfa, PredVarMap { params }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smtlib::parse_chc;

    use crate::fixtures::INV;

    #[test]
    fn inv_cfa_shape() {
        let sys = parse_chc(INV).unwrap();
        let (cfa, map) = forward_transform(&sys).unwrap();
        assert_eq!(cfa.num_locations(), 3);
        assert_eq!(cfa.edges.len(), 3);
        assert_eq!(map.params[0][0].name(), "inv_arg_0");
        let text: Vec<String> = cfa.edges.iter().map(|e| e.ops.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("; ")).collect();
        assert_eq!(text[0], "havoc tmp_i_0; assume (= tmp_i_0 0); inv_arg_0 := tmp_i_0");
        assert_eq!(text[1], "havoc tmp_i_0; assume (= tmp_i_0 (+ inv_arg_0 1)); inv_arg_0 := tmp_i_0");
        assert_eq!(text[2], "assume (not (< inv_arg_0 5))");
        assert_eq!((cfa.edges[1].src, cfa.edges[1].dst, cfa.edges[2].dst), (1, 1, cfa.error));
    }

    #[test]
    fn swapped_arguments_use_temporaries() {
        let sys = parse_chc("(declare-fun p (Int Int) Bool)(assert (forall ((a Int) (b Int)) (=> (p a b) (p b a))))").unwrap();
        let (cfa, _) = forward_transform(&sys).unwrap();
        let ops = &cfa.edges[0].ops;
        assert_eq!(ops.len(), 4);
        assert!(ops.iter().all(|o| matches!(o, CfaOp::Assign(..))));
    }

    #[test]
    fn nonlinear_rejected() {
        let sys = parse_chc("(declare-fun p (Int) Bool)(assert (forall ((x Int)) (=> (and (p x) (p x)) false)))").unwrap();
        assert_eq!(forward_transform(&sys).unwrap_err(), CfaError::NonLinearUnsupported);
    }

    #[test]
    fn liveness() {
        let sys = parse_chc(INV).unwrap();
        let (cfa, map) = forward_transform(&sys).unwrap();
        let live = cfa.live_vars();
        assert!(live[0].is_empty());
        assert_eq!(live[1].iter().collect::<Vec<_>>(), vec![&map.params[0][0]]);
        assert!(live[cfa.error].is_empty());
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use super::*;
use crate::budget::Budget;
use crate::cfa::{forward_transform, CfaOp};
use crate::smt::SolverConfig;
use crate::smtlib::parse_chc;
use crate::term::{Op, Sort, Value, Var};

fn ctx() -> SmtContext {
    SmtContext::new(SolverConfig::default(), Budget::with_timeout(Duration::from_secs(60)))
}

fn cfa_of(src: &str) -> Cfa {
    forward_transform(&parse_chc(src).unwrap()).unwrap().0
}

fn int(n: &str) -> Var {
    Var::new(n, Sort::Int)
}

fn expl(pairs: &[(&Var, i64)]) -> AbstractState {
    AbstractState::Expl(Some(pairs.iter().map(|(v, x)| ((*v).clone(), Value::int(*x))).collect()))
}

fn edge(cfa: &Cfa, src: usize, dst: usize) -> EdgeId {
    cfa.edges.iter().position(|e| e.src == src && e.dst == dst).unwrap()
}

/// init → inv, `loops` self-loops, inv → error.
fn inv_trace(cfa: &Cfa, loops: usize) -> Vec<EdgeId> {
    let inv = cfa.loc_names.iter().position(|n| n == "inv").unwrap();
    let mut t = vec![edge(cfa, cfa.init, inv)];
    t.extend(std::iter::repeat_n(edge(cfa, inv, inv), loops));
    t.push(edge(cfa, inv, cfa.error));
    t
}

#[test]
fn expr_of_explicit_and_bottom() {
    // b is tracked but ⊤, so it is absent from the map.
    let a = int("a");
    let s = expl(&[(&a, 2)]);
    assert_eq!(expr_of(&s), Term::eq(a.term(), Term::int(2)));
    assert_eq!(expr_of(&AbstractState::Expl(None)), Term::ff());
    assert_eq!(expr_of(&AbstractState::Expl(Some(BTreeMap::new()))), Term::tt());
    assert_eq!(expr_of(&AbstractState::Pred(vec![])), Term::ff());
}

#[test]
fn expr_of_predicate_cube() {
    let x = int("x");
    let p = Term::binary(Op::Lt, x.term(), Term::int(5));
    let s = AbstractState::Pred(vec![[(p.clone(), true)].into_iter().collect()]);
    assert_eq!(expr_of(&s), p);
}

#[test]
fn leq_examples() {
    let (a, b) = (int("a"), int("b"));
    assert_eq!(leq(&expl(&[(&a, 2), (&b, 3)]), &expl(&[(&a, 2)])), Ok(true));
    assert_eq!(leq(&expl(&[(&a, 2)]), &expl(&[(&a, 3)])), Ok(false));
    assert_eq!(leq(&expl(&[(&a, 2)]), &expl(&[(&a, 2), (&b, 3)])), Ok(false));
    assert_eq!(leq(&AbstractState::Expl(None), &expl(&[(&a, 3)])), Ok(true));
    let p = Term::binary(Op::Lt, a.term(), Term::int(0));
    let q = Term::binary(Op::Lt, b.term(), Term::int(0));
    let cube = |sp: bool, sq: bool| -> Cube { [(p.clone(), sp), (q.clone(), sq)].into_iter().collect() };
    let s1 = AbstractState::Pred(vec![cube(true, false)]);
    let s2 = AbstractState::Pred(vec![cube(true, false), cube(true, true)]);
    assert_eq!(leq(&s1, &s2), Ok(true));
    assert_eq!(leq(&s2, &s1), Ok(false));
    assert_eq!(leq(&s1, &expl(&[])), Err(PrecisionMismatch));
}

fn havoc_post(constraint: Term) -> Vec<AbstractState> {
    let x = int("x");
    let ops = vec![CfaOp::Havoc(x.clone()), CfaOp::Assume(constraint)];
    let prec = Precision::Explicit([x.clone()].into_iter().collect());
    let mut s = ctx().session().unwrap();
    abstract_post(&AbstractState::top_for(&prec), &ops, &[x], &prec, Domain::Explicit { maxenum: 4 }, &mut s).unwrap()
}

#[test]
fn havoc_enumerates_below_maxenum() {
    let x = int("x");
    let c = Term::and([Term::binary(Op::Ge, x.term(), Term::int(0)), Term::binary(Op::Le, x.term(), Term::int(1))]);
    let mut got = havoc_post(c);
    got.sort_by_key(|s| format!("{s:?}"));
    assert_eq!(got, vec![expl(&[(&x, 0)]), expl(&[(&x, 1)])]);
}

#[test]
fn havoc_widens_past_maxenum() {
    let x = int("x");
    let got = havoc_post(Term::binary(Op::Ge, x.term(), Term::int(0)));
    assert_eq!(got, vec![expl(&[])]);
}

#[test]
fn explicit_post_over_approximates_assume_then_assign() {
    let (x, y) = (int("x"), int("y"));
    let ops =
        vec![CfaOp::Assume(Term::eq(x.term(), Term::int(0))), CfaOp::Assign(y.clone(), Term::binary(Op::Add, x.term(), Term::int(1)))];
    let prec = Precision::Explicit([x.clone(), y.clone()].into_iter().collect());
    let mut s = ctx().session().unwrap();
    let vars = [x.clone(), y.clone()];
    let got = abstract_post(&AbstractState::top_for(&prec), &ops, &vars, &prec, Domain::Explicit { maxenum: 10 }, &mut s).unwrap();
    // The only concrete successor has x = 0, y = 1; it must be covered.
    let concrete = expl(&[(&x, 0), (&y, 1)]);
    assert!(got.iter().any(|g| leq(&concrete, g).unwrap()));
}

#[test]
fn feasibility_of_counter_traces() {
    let cfa = cfa_of(crate::fixtures::INV);
    let mut s = ctx().session().unwrap();
    let five = inv_trace(&cfa, 5);
    match check_feasibility(&cfa, &five, &mut s).unwrap() {
        Feasibility::Feasible(schedule) => {
            let run = concrete_run(&cfa, &schedule).unwrap();
            assert!(run.reaches_error(&cfa));
            assert_eq!(run.state.get_by_name("inv_arg_0"), Some(&Value::int(5)));
        }
        f => panic!("{f:?}"),
    }
    assert!(matches!(check_feasibility(&cfa, &inv_trace(&cfa, 2), &mut s).unwrap(), Feasibility::Infeasible(_)));
}

#[test]
fn sequence_refinement_refutes_the_trace() {
    let cfa = cfa_of(crate::fixtures::INV);
    let trace = inv_trace(&cfa, 2);
    let pf = PathFormula::new(&cfa, &trace);
    let c = ctx();
    let mut s = c.session().unwrap();
    let mut itp = Interpolator::new(&c).unwrap();
    let states = vec![Term::tt(); trace.len() + 1];
    let PathInterpolants::Sequence(seq) = interpolate(RefinementStrategy::Sequence, &pf, &states, &mut itp, &mut s).unwrap() else {
        panic!()
    };
    let mut prec = Precision::empty_pred();
    let items: Vec<Term> = seq.iter().flat_map(|t| precision_items(&prec, t)).collect();
    assert!(extend_precision(&mut prec, items) > 0);
    let Precision::Pred(preds) = &prec else { panic!() };
    assert!(preds.iter().all(|p| p.free_vars().iter().all(|v| cfa.vars.contains(v))));
    // Cartesian abstraction along the trace under the new precision reaches ⊥.
    let mut st = AbstractState::top_for(&prec);
    for &e in &trace {
        let succ = abstract_post(&st, &cfa.edges[e].ops, &cfa.vars, &prec, Domain::Cartesian, &mut s).unwrap();
        match succ.into_iter().next() {
            Some(n) => st = n,
            None => return,
        }
    }
    panic!("trace still abstractly feasible: {st:?}");
}

fn check_unsafe(cfa: &Cfa, v: &CegarVerdict, loops: usize) {
    let CegarVerdict::Unsafe { trace, schedule } = v else { panic!("{v:?}") };
    assert_eq!(trace, &inv_trace(cfa, loops));
    assert!(concrete_run(cfa, schedule).unwrap().reaches_error(cfa));
}

#[test]
fn all_configs_find_the_counter_bug() {
    let cfa = cfa_of(crate::fixtures::INV);
    for config in [CegarConfig::boolean(), CegarConfig::cartesian(), CegarConfig::explicit()] {
        check_unsafe(&cfa, &cegar_solve(&cfa, &config, &ctx()), 5);
    }
}

#[test]
fn predicate_configs_prove_counter_nonnegative() {
    let cfa = cfa_of(crate::fixtures::INV_SAFE);
    for config in [CegarConfig::boolean(), CegarConfig::cartesian()] {
        let v = cegar_solve(&cfa, &config, &ctx());
        let CegarVerdict::Safe { arg, .. } = &v else { panic!("{config:?}: {v:?}") };
        assert!(arg.live_nodes().all(|n| n.loc != cfa.error));
        // Every uncovered node is fully expanded; every coverer is uncovered.
        for n in arg.live_nodes() {
            match n.covered_by {
                Some(m) => {
                    assert!(arg.node(m).covered_by.is_none() && !arg.node(m).removed);
                    assert!(n.children.is_empty());
                }
                None => assert_eq!(n.expanded.len(), cfa.out_edges(n.loc).count()),
            }
        }
    }
}

#[test]
fn explicit_proves_bounded_loop() {
    let src = "(set-logic HORN)(declare-fun inv (Int) Bool)
        (assert (forall ((x Int)) (=> (= x 0) (inv x))))
        (assert (forall ((x Int) (x1 Int)) (=> (and (inv x) (< x 3) (= x1 (+ x 1))) (inv x1))))
        (assert (forall ((x Int)) (=> (and (inv x) (> x 3)) false)))";
    let cfa = cfa_of(src);
    assert!(cegar_solve(&cfa, &CegarConfig::explicit(), &ctx()).is_safe());
}

#[test]
fn explicit_stops_on_relational_havoc() {
    let src = "(set-logic HORN)(declare-fun inv ((_ BitVec 32) (_ BitVec 32)) Bool)
        (assert (forall ((x (_ BitVec 32)) (y (_ BitVec 32))) (=> (= y x) (inv x y))))
        (assert (forall ((x (_ BitVec 32)) (y (_ BitVec 32))) (=> (and (inv x y) (not (= x y))) false)))";
    let cfa = cfa_of(src);
    let v = cegar_solve(&cfa, &CegarConfig::explicit(), &ctx());
    assert!(matches!(v, CegarVerdict::Unknown(UnknownReason::NoProgress)), "{v:?}");
    // The same task is within reach of predicates.
    assert!(cegar_solve(&cfa, &CegarConfig::cartesian(), &ctx()).is_safe());
}

#[test]
fn zero_budget_is_unknown() {
    let cfa = cfa_of(crate::fixtures::INV_SAFE);
    let c = SmtContext::new(SolverConfig::default(), Budget::with_timeout(Duration::ZERO));
    assert!(matches!(cegar_solve(&cfa, &CegarConfig::boolean(), &c), CegarVerdict::Unknown(UnknownReason::Timeout)));
}

#[test]
fn refinement_limit_is_reported() {
    let cfa = cfa_of(crate::fixtures::INV_SAFE);
    let config = CegarConfig { max_refinements: Some(0), ..CegarConfig::boolean() };
    assert!(matches!(cegar_solve(&cfa, &config, &ctx()), CegarVerdict::Unknown(UnknownReason::RefinementLimit)));
}

#[test]
fn pruning_clears_dangling_covers() {
    let prec = Precision::empty_explicit();
    let mut arg = Arg::with_root(0, AbstractState::top_for(&prec));
    let a = arg.add(1, expl(&[]), Some((0, 0)), 0);
    let b = arg.add(1, expl(&[]), Some((a, 1)), 0);
    arg.node_mut(b).covered_by = Some(a);
    let (removed, uncovered) = arg.remove_subtree(a);
    assert_eq!(removed.iter().copied().collect::<BTreeSet<_>>(), [a, b].into_iter().collect());
    assert!(uncovered.is_empty());
    assert!(arg.live_nodes().all(|n| n.covered_by.is_none_or(|m| !arg.node(m).removed)));
    assert!(!arg.node(0).expanded.contains(&0));
}

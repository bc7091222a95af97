use std::time::Duration;

use super::*;
use crate::budget::Budget;
use crate::cfa::forward_transform;
use crate::smt::{entails, SolverConfig};
use crate::smtlib::parse_chc;
use crate::sts::unroll;
use crate::sts::{encode, primed};
use crate::term::{evaluate, Op, Value};

fn ctx() -> SmtContext {
    SmtContext::new(SolverConfig::default(), Budget::with_timeout(Duration::from_secs(60)))
}

fn sts_of(src: &str) -> Sts {
    encode(&forward_transform(&parse_chc(src).unwrap()).unwrap().0)
}

fn counter(prop: Term, x: &Var) -> Sts {
    let xp = primed(x);
    Sts::from_formulas(
        vec![x.clone()],
        Term::eq(x.term(), Term::int(0)),
        Term::eq(xp.term(), Term::binary(Op::Add, x.term(), Term::int(1))),
        prop,
    )
}

/// The witness must satisfy the unrolling and violate P at the last step.
fn replay(sts: &Sts, k: usize, states: &[Valuation], aux: &Valuation) {
    let mut env = aux.clone();
    for (i, st) in states.iter().enumerate() {
        for (v, x) in st.iter() {
            env.insert(at_step(v, i), x.clone());
        }
    }
    let f = Term::and([unroll(sts, k), Term::not(sts.prop_at(k))]);
    assert_eq!(evaluate(&f, &env), Ok(Value::Bool(true)));
}

#[test]
fn bmc_finds_counter_bug_at_five() {
    let sts = sts_of(crate::fixtures::INV);
    match bmc(&sts, 20, &ctx()) {
        BoundedVerdict::Unsafe { k, states, aux } => {
            assert_eq!(k, 5);
            let xs: Vec<Value> = states.iter().map(|s| s.get_by_name("inv_arg_0").unwrap().clone()).collect();
            assert_eq!(xs, (0..=5).map(Value::int).collect::<Vec<_>>());
            replay(&sts, k, &states, &aux);
        }
        v => panic!("{v:?}"),
    }
}

#[test]
fn bmc_exhausts_small_counter() {
    let x = Var::new("x", Sort::BitVec(2));
    let sts = Sts::from_formulas(
        vec![x.clone()],
        Term::eq(x.term(), Term::bv(2, 0)),
        Term::eq(primed(&x).term(), Term::binary(Op::BvAdd, x.term(), Term::bv(2, 1))),
        Term::tt(),
    );
    // Independent count of reachable states by iterating the successor function.
    let mut seen = std::collections::BTreeSet::new();
    let mut cur = 0u128;
    while seen.insert(cur) {
        cur = (cur + 1) % 4;
    }
    assert_eq!(bmc(&sts, 10, &ctx()), BoundedVerdict::SafeBmcExhausted(seen.len()));
}

#[test]
fn bmc_unknown_on_unbounded_counter() {
    let x = Var::new("x", Sort::Int);
    let sts = counter(Term::binary(Op::Ge, x.term(), Term::int(0)), &x);
    assert!(matches!(bmc(&sts, 4, &ctx()), BoundedVerdict::Unknown(_)));
}

#[test]
fn kinduction_proves_inductive_properties() {
    let x = Var::new("x", Sort::Int);
    let sts = counter(Term::binary(Op::Ge, x.term(), Term::int(0)), &x);
    assert_eq!(kinduction(&sts, 10, &ctx()), BoundedVerdict::SafeKInduction(1));

    let y = Var::new("y", Sort::Int);
    let two = Sts::from_formulas(
        vec![x.clone(), y.clone()],
        Term::and([Term::eq(x.term(), Term::int(0)), Term::eq(y.term(), Term::int(0))]),
        Term::and([
            Term::eq(primed(&x).term(), Term::binary(Op::Add, x.term(), Term::int(1))),
            Term::eq(primed(&y).term(), Term::binary(Op::Add, y.term(), Term::int(1))),
        ]),
        Term::eq(x.term(), y.term()),
    );
    assert_eq!(kinduction(&two, 10, &ctx()), BoundedVerdict::SafeKInduction(1));
}

#[test]
fn kinduction_base_case_precedence() {
    let sts = sts_of(crate::fixtures::INV);
    assert!(matches!(kinduction(&sts, 20, &ctx()), BoundedVerdict::Unsafe { k: 5, .. }));
}

#[test]
fn kinduction_on_encoded_safe_counter() {
    let sts = sts_of(crate::fixtures::INV_SAFE);
    assert_eq!(kinduction(&sts, 10, &ctx()), BoundedVerdict::SafeKInduction(1));
}

fn check_invariant(sts: &Sts, inv: &Term) {
    let c = ctx();
    let mut s = c.session().unwrap();
    assert_eq!(entails(&mut s, &sts.init, inv).unwrap(), Some(true), "I does not entail {inv}");
    let next = crate::term::rename(inv, &|v| sts.vars.contains(v).then(|| primed(v)));
    assert_eq!(entails(&mut s, &Term::and([inv.clone(), sts.trans.clone()]), &next).unwrap(), Some(true), "{inv} not inductive");
    assert_eq!(entails(&mut s, inv, &sts.prop).unwrap(), Some(true), "{inv} does not entail P");
}

#[test]
fn imc_invariant_contract() {
    let x = Var::new("x", Sort::Int);
    let sts = counter(Term::binary(Op::Ge, x.term(), Term::int(0)), &x);
    match imc(&sts, ImcConfig::default(), &ctx()) {
        BoundedVerdict::SafeImc(inv) => check_invariant(&sts, &inv),
        v => panic!("{v:?}"),
    }
    let enc = sts_of(crate::fixtures::INV_SAFE);
    match imc(&enc, ImcConfig::default(), &ctx()) {
        BoundedVerdict::SafeImc(inv) => check_invariant(&enc, &inv),
        v => panic!("{v:?}"),
    }
}

#[test]
fn imc_confirms_bug_with_bmc() {
    let sts = sts_of(crate::fixtures::INV);
    assert!(matches!(imc(&sts, ImcConfig::default(), &ctx()), BoundedVerdict::Unsafe { k: 5, .. }));
}

#[test]
fn imc_gated_on_bitvectors() {
    let x = Var::new("x", Sort::BitVec(4));
    let sts = Sts::from_formulas(vec![x.clone()], Term::eq(x.term(), Term::bv(4, 0)), Term::tt(), Term::tt());
    assert!(matches!(imc(&sts, ImcConfig::default(), &ctx()), BoundedVerdict::Unknown(_)));
}

#[test]
fn zero_budget_is_unknown() {
    let c = SmtContext::new(SolverConfig::default(), Budget::with_timeout(Duration::ZERO));
    let sts = sts_of(crate::fixtures::INV);
    assert!(matches!(bmc(&sts, 10, &c), BoundedVerdict::Unknown(_)));
}

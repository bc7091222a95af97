//! Local rewriting: constant folding, unit propagation in connectives and
//! light arithmetic normalisation. Never changes the meaning of a term.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::eval::apply;
use super::op::Op;
use super::{Sort, Term, Value};

pub fn simplify(t: &Term) -> Term {
    t.map_apps(&mut |op, args| rewrite(op, args))
}

fn is_zero(t: &Term) -> bool {
    match t.as_const() {
        Some(Value::Int(i)) => i.is_zero(),
        Some(Value::Real(r)) => r.is_zero(),
        Some(Value::BitVec(b)) => b.bits() == 0,
        _ => false,
    }
}

fn is_one(t: &Term) -> bool {
    match t.as_const() {
        Some(Value::Int(i)) => i.is_one(),
        Some(Value::Real(r)) => r.is_one(),
        Some(Value::BitVec(b)) => b.bits() == 1,
        _ => false,
    }
}

fn rewrite(op: &Op, args: Vec<Term>) -> Term {
    if args.iter().all(|a| a.as_const().is_some()) && !matches!(op, Op::ConstArray(_) | Op::Pred(..)) {
        let vals: Vec<Value> = args.iter().map(|a| a.as_const().unwrap().clone()).collect();
        if let Ok(v) = apply(op, &vals) {
            return Term::constant(v);
        }
    }
    match op {
        Op::Not => Term::not(args.into_iter().next().unwrap()),
        Op::And => {
            let t = Term::and(args);
            dedupe(t, true)
        }
        Op::Or => {
            let t = Term::or(args);
            dedupe(t, false)
        }
        Op::Implies => {
            let mut it = args.into_iter().rev();
            let mut acc = it.next().unwrap();
            for a in it {
                acc = Term::implies(a, acc);
            }
            acc
        }
        Op::Ite => {
            let mut it = args.into_iter();
            let (c, t, e) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
            if t.sort() == &Sort::Bool {
                match (t.as_bool(), e.as_bool()) {
                    (Some(true), Some(false)) => return c,
                    (Some(false), Some(true)) => return Term::not(c),
                    _ => {}
                }
            }
            Term::ite(c, t, e)
        }
        Op::Eq if args.len() == 2 => {
            let (a, b) = (args[0].clone(), args[1].clone());
            if a.sort() == &Sort::Bool {
                match (a.as_bool(), b.as_bool()) {
                    (Some(true), _) => return b,
                    (Some(false), _) => return Term::not(b),
                    (_, Some(true)) => return a,
                    (_, Some(false)) => return Term::not(a),
                    _ => {}
                }
            }
            Term::eq(a, b)
        }
        Op::Distinct if args.len() == 2 && args[0] == args[1] => Term::ff(),
        Op::Add | Op::BvAdd => {
            let mut flat = Vec::new();
            for a in args {
                match a.as_app() {
                    Some((o, inner)) if o == op => flat.extend(inner.iter().cloned()),
                    _ => flat.push(a),
                }
            }
            let (consts, mut rest): (Vec<Term>, Vec<Term>) = flat.into_iter().partition(|a| a.as_const().is_some());
            if !consts.is_empty() {
                let vals: Vec<Value> = consts.iter().map(|c| c.as_const().unwrap().clone()).collect();
                let folded = if vals.len() == 1 { vals[0].clone() } else { apply(op, &vals).expect("total") };
                let c = Term::constant(folded);
                if !is_zero(&c) {
                    rest.push(c);
                }
            }
            match rest.len() {
                0 => zero_like(op, &consts),
                1 => rest.pop().unwrap(),
                _ => Term::mk(op.clone(), rest),
            }
        }
        Op::Mul | Op::BvMul => {
            if args.iter().any(is_zero) {
                let z = args.iter().find(|a| is_zero(a)).unwrap().clone();
                return z;
            }
            let rest: Vec<Term> = args.iter().filter(|a| !is_one(a)).cloned().collect();
            match rest.len() {
                0 => args[0].clone(),
                1 => rest[0].clone(),
                _ => Term::mk(op.clone(), rest),
            }
        }
        Op::Sub | Op::BvSub if args.len() == 2 && is_zero(&args[1]) => args[0].clone(),
        Op::Sub | Op::BvSub if args.len() == 2 && args[0] == args[1] => Term::constant(Value::default_of(args[0].sort())),
        Op::Le | Op::Ge if args.len() == 2 && args[0] == args[1] => Term::tt(),
        Op::Lt | Op::Gt if args.len() == 2 && args[0] == args[1] => Term::ff(),
        Op::BvUle | Op::BvUge | Op::BvSle | Op::BvSge if args[0] == args[1] => Term::tt(),
        Op::BvUlt | Op::BvUgt | Op::BvSlt | Op::BvSgt if args[0] == args[1] => Term::ff(),
        _ => Term::mk(op.clone(), args),
    }
}

fn zero_like(op: &Op, consts: &[Term]) -> Term {
    match consts.first() {
        Some(c) => Term::constant(Value::default_of(c.sort())),
        None => match op {
            Op::Add => Term::big_int(BigInt::zero()),
            _ => unreachable!("empty sum"),
        },
    }
}

/// Removes duplicate operands and detects complementary literals.
fn dedupe(t: Term, conj: bool) -> Term {
    let (op, args) = match t.as_app() {
        Some((op @ (Op::And | Op::Or), args)) => (op.clone(), args.to_vec()),
        _ => return t,
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in args {
        if seen.insert(a.clone()) {
            out.push(a);
        }
    }
    for a in &out {
        if seen.contains(&Term::not(a.clone())) {
            return Term::bool(!conj);
        }
    }
    if out.len() == 1 {
        return out.pop().unwrap();
    }
    Term::mk(op, out)
}

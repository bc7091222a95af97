//! Seeded random generators for property tests and acceptance suites.

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfa::CfaOp;
use crate::chc::{Atom, ChcSystem, Clause, Head, Predicate};
use crate::term::{Op, Sort, Term, Var};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug)]
pub struct BvSystemShape {
    pub widths: (u32, u32),
    pub max_arity: usize,
    pub max_preds: usize,
}

impl Default for BvSystemShape {
    fn default() -> Self {
        BvSystemShape { widths: (2, 4), max_arity: 3, max_preds: 4 }
    }
}

fn bv_const(rng: &mut dyn RngCore, w: u32) -> Term {
    Term::bv(w, rng.random_range(0..(1u128 << w)))
}

/// A random bit-vector term over `xs`.
fn bv_term(rng: &mut dyn RngCore, xs: &[Var], w: u32) -> Term {
    let x = xs.choose(rng).unwrap().term();
    match rng.random_range(0..6) {
        0 => x,
        1 => bv_const(rng, w),
        2 => Term::binary(Op::BvAdd, x, bv_const(rng, w)),
        3 => Term::binary(Op::BvSub, x, xs.choose(rng).unwrap().term()),
        4 => Term::binary(Op::BvAnd, x, bv_const(rng, w)),
        _ => Term::binary(Op::BvMul, x, bv_const(rng, w)),
    }
}

/// A random bit-vector comparison over `xs`.
fn bv_guard(rng: &mut dyn RngCore, xs: &[Var], w: u32) -> Term {
    let a = xs.choose(rng).unwrap().term();
    let b = if rng.random_bool(0.5) { bv_const(rng, w) } else { xs.choose(rng).unwrap().term() };
    match rng.random_range(0..4) {
        0 => Term::binary(Op::BvUlt, a, b),
        1 => Term::binary(Op::BvUle, a, b),
        2 => Term::eq(a, b),
        _ => Term::not(Term::eq(a, b)),
    }
}

/// A random linear CHC system over bit-vectors of one width. Every head
/// argument of a rule is either defined from the body or left free, with at
/// most one free argument per clause, which keeps brute-force checking cheap.
pub fn random_bv_system(rng: &mut dyn RngCore, shape: BvSystemShape) -> ChcSystem {
    let w = rng.random_range(shape.widths.0..=shape.widths.1);
    let sort = Sort::BitVec(w);
    let n = rng.random_range(1..=shape.max_preds);
    let preds: Vec<Predicate> =
        (0..n).map(|i| Predicate { name: format!("p{i}"), arg_sorts: vec![sort.clone(); rng.random_range(1..=shape.max_arity)] }).collect();
    let vars = |prefix: &str, k: usize| -> Vec<Var> { (0..k).map(|i| Var::new(format!("{prefix}{i}"), sort.clone())).collect() };
    let mut clauses = vec![];
    let head_of = |rng: &mut dyn RngCore, p: usize, body: &[Var], cs: &mut Vec<Term>| -> Vec<Var> {
        let ys = vars("y", preds[p].arg_sorts.len());
        let free = if rng.random_bool(0.3) { Some(rng.random_range(0..ys.len())) } else { None };
        for (i, y) in ys.iter().enumerate() {
            if Some(i) == free {
                continue;
            }
            let t = if body.is_empty() { bv_const(rng, w) } else { bv_term(rng, body, w) };
            cs.push(Term::eq(y.term(), t));
        }
        ys
    };
    for _ in 0..rng.random_range(1..=2) {
        let p = rng.random_range(0..n);
        let mut cs = vec![];
        let ys = head_of(rng, p, &[], &mut cs);
        if rng.random_bool(0.3) {
            cs.push(bv_guard(rng, &ys, w));
        }
        clauses.push(Clause { vars: ys.clone(), body: vec![], constraint: Term::and(cs), head: Head::Atom(Atom { pred: p, args: ys }) });
    }
    for _ in 0..rng.random_range(1..=4) {
        let (p, q) = (rng.random_range(0..n), rng.random_range(0..n));
        let xs = vars("x", preds[p].arg_sorts.len());
        let mut cs = vec![];
        if rng.random_bool(0.5) {
            cs.push(bv_guard(rng, &xs, w));
        }
        let ys = head_of(rng, q, &xs, &mut cs);
        clauses.push(Clause {
            vars: xs.iter().chain(&ys).cloned().collect(),
            body: vec![Atom { pred: p, args: xs }],
            constraint: Term::and(cs),
            head: Head::Atom(Atom { pred: q, args: ys }),
        });
    }
    for _ in 0..rng.random_range(1..=2) {
        let p = rng.random_range(0..n);
        let xs = vars("x", preds[p].arg_sorts.len());
        let g = Term::and((0..rng.random_range(1..=2)).map(|_| bv_guard(rng, &xs, w)));
        clauses.push(Clause { vars: xs.clone(), body: vec![Atom { pred: p, args: xs }], constraint: g, head: Head::False });
    }
    ChcSystem::new(preds, clauses).expect("generator builds well-formed systems")
}

/// Candidate path partitions over integer SSA copies `x@i`, `y@i`. Each part
/// updates or constrains the current copies; callers keep the infeasible ones.
pub fn random_trace_parts(rng: &mut dyn RngCore, len: usize) -> Vec<Term> {
    let v = |name: &str, i: usize| Var::new(format!("{name}@{i}"), Sort::Int).term();
    let mut parts = vec![];
    let (mut ix, mut iy) = (0usize, 0usize);
    for step in 0..len {
        let c = Term::int(rng.random_range(-3..=3));
        let part = match rng.random_range(0..5) {
            0 => {
                ix += 1;
                Term::eq(v("x", ix), Term::binary(Op::Add, v("x", ix - 1), c))
            }
            1 => {
                iy += 1;
                Term::eq(v("y", iy), Term::binary(Op::Add, v("x", ix), c))
            }
            2 => {
                ix += 1;
                Term::eq(v("x", ix), Term::binary(Op::Add, v("x", ix - 1), v("y", iy)))
            }
            3 => Term::binary(Op::Le, v("x", ix), c),
            _ => Term::binary(Op::Ge, v("y", iy), c),
        };
        let part = if step == 0 { Term::and([Term::eq(v("x", 0), Term::int(0)), Term::eq(v("y", 0), Term::int(0)), part]) } else { part };
        parts.push(part);
    }
    parts
}

/// A random op sequence over the given bit-vector variables.
pub fn random_bv_ops(rng: &mut dyn RngCore, vars: &[Var], len: usize) -> Vec<CfaOp> {
    let w = vars[0].sort().bv_width().expect("bit-vector variables");
    (0..len)
        .map(|_| match rng.random_range(0..3) {
            0 => CfaOp::Havoc(vars.choose(rng).unwrap().clone()),
            1 => CfaOp::Assign(vars.choose(rng).unwrap().clone(), bv_term(rng, vars, w)),
            _ => CfaOp::Assume(bv_guard(rng, vars, w)),
        })
        .collect()
}

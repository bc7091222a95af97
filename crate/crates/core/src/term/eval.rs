use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Euclid, Signed, Zero};
use thiserror::Error;

use super::op::Op;
use super::term::TermKind;
use super::value::BitVecValue;
use super::{Term, Value, Var};

/// Assignment of ground values to variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation(BTreeMap<Var, Value>);

impl Valuation {
    pub fn new() -> Self {
        Valuation(BTreeMap::new())
    }

    pub fn insert(&mut self, v: Var, val: Value) {
        debug_assert_eq!(v.sort(), &val.sort(), "value sort mismatch for {v}");
        self.0.insert(v, val);
    }

    pub fn get(&self, v: &Var) -> Option<&Value> {
        self.0.get(v)
    }

    pub fn remove(&mut self, v: &Var) -> Option<Value> {
        self.0.remove(v)
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.0.contains_key(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Value)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get_by_name(&self, name: &str) -> Option<&Value> {
        self.0.iter().find(|(k, _)| k.name() == name).map(|(_, v)| v)
    }
}

impl FromIterator<(Var, Value)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (Var, Value)>>(iter: I) -> Self {
        let mut v = Valuation::new();
        for (k, x) in iter {
            v.insert(k, x);
        }
        v
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable `{0}` is unassigned")]
    Unassigned(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot evaluate quantified term")]
    Quantified,
    #[error("cannot evaluate uninterpreted predicate `{0}`")]
    Uninterpreted(String),
}

/// Evaluates a quantifier-free term under a valuation.
pub fn evaluate(t: &Term, v: &Valuation) -> Result<Value, EvalError> {
    eval_with(t, &|x| v.get(x).cloned())
}

/// Partial evaluation: `None` stands for Unknown (unassigned variable or
/// undefined division).
pub fn evaluate_partial(t: &Term, v: &Valuation) -> Option<Value> {
    evaluate(t, v).ok()
}

/// Evaluation against an arbitrary variable lookup.
pub fn eval_with(t: &Term, lookup: &dyn Fn(&Var) -> Option<Value>) -> Result<Value, EvalError> {
    match t.kind() {
        TermKind::Var(x) => lookup(x).ok_or_else(|| EvalError::Unassigned(x.name().to_string())),
        TermKind::Const(c) => Ok(c.clone()),
        TermKind::Quant(..) => Err(EvalError::Quantified),
        TermKind::App(op, args) => eval_app(op, args, lookup),
    }
}

fn eval_app(op: &Op, args: &[Term], lookup: &dyn Fn(&Var) -> Option<Value>) -> Result<Value, EvalError> {
    let ev = |t: &Term| eval_with(t, lookup);
    // Short-circuiting connectives first: unknown operands do not matter
    // once the result is forced.
    match op {
        Op::And | Op::Or => {
            let absorbing = matches!(op, Op::Or);
            let mut err = None;
            for a in args {
                match ev(a) {
                    Ok(Value::Bool(b)) if b == absorbing => return Ok(Value::Bool(absorbing)),
                    Ok(_) => {}
                    Err(e) => err = Some(e),
                }
            }
            return match err {
                Some(e) => Err(e),
                None => Ok(Value::Bool(!absorbing)),
            };
        }
        Op::Implies => {
            // right-associative: a => b => c  ==  a => (b => c)
            let (last, prem) = args.split_last().unwrap();
            let mut err = None;
            for a in prem {
                match ev(a) {
                    Ok(Value::Bool(false)) => return Ok(Value::Bool(true)),
                    Ok(_) => {}
                    Err(e) => err = Some(e),
                }
            }
            match ev(last) {
                Ok(Value::Bool(true)) => return Ok(Value::Bool(true)),
                Ok(v) => {
                    return match err {
                        Some(e) => Err(e),
                        None => Ok(v),
                    }
                }
                Err(e) => return Err(err.unwrap_or(e)),
            }
        }
        Op::Ite => {
            let c = ev(&args[0])?;
            return if c.as_bool().unwrap() { ev(&args[1]) } else { ev(&args[2]) };
        }
        Op::Pred(name, _) => return Err(EvalError::Uninterpreted(name.to_string())),
        _ => {}
    }
    let vals: Vec<Value> = args.iter().map(ev).collect::<Result<_, _>>()?;
    apply(op, &vals)
}

fn int(v: &Value) -> &BigInt {
    match v {
        Value::Int(i) => i,
        _ => unreachable!("sort-checked Int operand"),
    }
}

fn real(v: &Value) -> &BigRational {
    match v {
        Value::Real(r) => r,
        _ => unreachable!("sort-checked Real operand"),
    }
}

fn bv(v: &Value) -> BitVecValue {
    v.as_bv().expect("sort-checked BitVec operand")
}

fn b(v: &Value) -> bool {
    v.as_bool().expect("sort-checked Bool operand")
}

fn cmp_chain(vals: &[Value], f: impl Fn(std::cmp::Ordering) -> bool) -> Value {
    let ok = vals.windows(2).all(|w| {
        let o = match (&w[0], &w[1]) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.cmp(b),
            _ => unreachable!("numeric comparison"),
        };
        f(o)
    });
    Value::Bool(ok)
}

/// Applies an operator to ground arguments.
pub(crate) fn apply(op: &Op, vals: &[Value]) -> Result<Value, EvalError> {
    use Op::*;
    let w = || bv(&vals[0]).width();
    let mk_bv = |bits: u128| Value::BitVec(BitVecValue::new(w(), bits));
    Ok(match op {
        Not => Value::Bool(!b(&vals[0])),
        And => Value::Bool(vals.iter().all(b)),
        Or => Value::Bool(vals.iter().any(b)),
        Xor => Value::Bool(vals.iter().fold(false, |acc, v| acc ^ b(v))),
        Implies => {
            let (last, prem) = vals.split_last().unwrap();
            Value::Bool(!prem.iter().all(b) || b(last))
        }
        Ite => {
            if b(&vals[0]) {
                vals[1].clone()
            } else {
                vals[2].clone()
            }
        }
        Eq => Value::Bool(vals.windows(2).all(|w| w[0] == w[1])),
        Distinct => {
            let mut ok = true;
            for i in 0..vals.len() {
                for j in i + 1..vals.len() {
                    ok &= vals[i] != vals[j];
                }
            }
            Value::Bool(ok)
        }
        Add => match &vals[0] {
            Value::Int(_) => Value::Int(vals.iter().map(int).sum()),
            _ => Value::Real(vals.iter().map(real).fold(BigRational::zero(), |a, x| a + x)),
        },
        Mul => match &vals[0] {
            Value::Int(_) => Value::Int(vals.iter().map(int).product()),
            _ => Value::Real(vals.iter().map(real).fold(BigRational::from_integer(1.into()), |a, x| a * x)),
        },
        Sub => match &vals[0] {
            Value::Int(first) => Value::Int(vals[1..].iter().map(int).fold(first.clone(), |a, x| a - x)),
            Value::Real(first) => Value::Real(vals[1..].iter().map(real).fold(first.clone(), |a, x| a - x)),
            _ => unreachable!(),
        },
        Neg => match &vals[0] {
            Value::Int(i) => Value::Int(-i),
            Value::Real(r) => Value::Real(-r),
            _ => unreachable!(),
        },
        Abs => match &vals[0] {
            Value::Int(i) => Value::Int(i.abs()),
            Value::Real(r) => Value::Real(r.abs()),
            _ => unreachable!(),
        },
        IntDiv | Mod => {
            let (a, d) = (int(&vals[0]), int(&vals[1]));
            if d.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            if matches!(op, IntDiv) {
                Value::Int(a.div_euclid(d))
            } else {
                Value::Int(a.rem_euclid(d))
            }
        }
        RealDiv => {
            let mut acc = real(&vals[0]).clone();
            for d in &vals[1..] {
                let d = real(d);
                if d.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                acc /= d;
            }
            Value::Real(acc)
        }
        Le => cmp_chain(vals, |o| o.is_le()),
        Lt => cmp_chain(vals, |o| o.is_lt()),
        Ge => cmp_chain(vals, |o| o.is_ge()),
        Gt => cmp_chain(vals, |o| o.is_gt()),
        ToReal => Value::Real(BigRational::from_integer(int(&vals[0]).clone())),
        ToInt => Value::Int(real(&vals[0]).floor().to_integer()),
        BvAdd => mk_bv(vals.iter().fold(0u128, |a, v| a.wrapping_add(bv(v).bits()))),
        BvMul => mk_bv(vals.iter().fold(1u128, |a, v| a.wrapping_mul(bv(v).bits()))),
        BvSub => mk_bv(bv(&vals[0]).bits().wrapping_sub(bv(&vals[1]).bits())),
        BvNeg => mk_bv(0u128.wrapping_sub(bv(&vals[0]).bits())),
        BvNot => mk_bv(!bv(&vals[0]).bits()),
        BvAnd => mk_bv(vals.iter().fold(u128::MAX, |a, v| a & bv(v).bits())),
        BvOr => mk_bv(vals.iter().fold(0, |a, v| a | bv(v).bits())),
        BvXor => mk_bv(vals.iter().fold(0, |a, v| a ^ bv(v).bits())),
        BvUdiv => {
            let (x, y) = (bv(&vals[0]).bits(), bv(&vals[1]).bits());
            // SMT-LIB fixes division by zero to the all-ones vector.
            mk_bv(x.checked_div(y).unwrap_or(u128::MAX))
        }
        BvUrem => {
            let (x, y) = (bv(&vals[0]).bits(), bv(&vals[1]).bits());
            mk_bv(if y == 0 { x } else { x % y })
        }
        BvSdiv | BvSrem | BvSmod => {
            let (x, y) = (bv(&vals[0]), bv(&vals[1]));
            Value::BitVec(signed_div(op, x, y))
        }
        BvShl | BvLshr | BvAshr => {
            let (x, s) = (bv(&vals[0]), bv(&vals[1]).bits());
            let width = x.width() as u128;
            let r = match op {
                BvShl => {
                    if s >= width {
                        0
                    } else {
                        x.bits() << s
                    }
                }
                BvLshr => {
                    if s >= width {
                        0
                    } else {
                        x.bits() >> s
                    }
                }
                _ => {
                    let sv = x.signed();
                    if s >= width {
                        if sv < 0 {
                            u128::MAX
                        } else {
                            0
                        }
                    } else {
                        (sv >> s) as u128
                    }
                }
            };
            mk_bv(r)
        }
        BvUlt => Value::Bool(bv(&vals[0]).bits() < bv(&vals[1]).bits()),
        BvUle => Value::Bool(bv(&vals[0]).bits() <= bv(&vals[1]).bits()),
        BvUgt => Value::Bool(bv(&vals[0]).bits() > bv(&vals[1]).bits()),
        BvUge => Value::Bool(bv(&vals[0]).bits() >= bv(&vals[1]).bits()),
        BvSlt => Value::Bool(bv(&vals[0]).signed() < bv(&vals[1]).signed()),
        BvSle => Value::Bool(bv(&vals[0]).signed() <= bv(&vals[1]).signed()),
        BvSgt => Value::Bool(bv(&vals[0]).signed() > bv(&vals[1]).signed()),
        BvSge => Value::Bool(bv(&vals[0]).signed() >= bv(&vals[1]).signed()),
        Concat => {
            let mut bits = 0u128;
            let mut width = 0u32;
            for v in vals {
                let x = bv(v);
                bits = if x.width() >= 128 { 0 } else { bits << x.width() } | x.bits();
                width += x.width();
            }
            Value::BitVec(BitVecValue::new(width, bits))
        }
        Extract(hi, lo) => {
            let x = bv(&vals[0]);
            Value::BitVec(BitVecValue::new(hi - lo + 1, x.bits() >> lo))
        }
        ZeroExtend(k) => {
            let x = bv(&vals[0]);
            Value::BitVec(BitVecValue::new(x.width() + k, x.bits()))
        }
        SignExtend(k) => {
            let x = bv(&vals[0]);
            Value::BitVec(BitVecValue::from_signed(x.width() + k, x.signed()))
        }
        Select => match &vals[0] {
            Value::Array(a) => a.select(&vals[1]),
            _ => unreachable!(),
        },
        Store => match &vals[0] {
            Value::Array(a) => Value::Array(a.store(vals[1].clone(), vals[2].clone())),
            _ => unreachable!(),
        },
        Pred(name, _) => return Err(EvalError::Uninterpreted(name.to_string())),
        ConstArray(s) => match s {
            super::Sort::Array(i, _) => Value::Array(super::value::ArrayValue::constant((**i).clone(), vals[0].clone())),
            _ => unreachable!(),
        },
    })
}

/// Signed division family, defined through unsigned division of magnitudes
/// exactly as in the SMT-LIB bit-vector theory.
fn signed_div(op: &Op, x: BitVecValue, y: BitVecValue) -> BitVecValue {
    let w = x.width();
    let msb = |v: BitVecValue| v.signed() < 0;
    let neg = |v: u128| BitVecValue::new(w, 0u128.wrapping_sub(v));
    let abs = |v: BitVecValue| if msb(v) { neg(v.bits()).bits() } else { v.bits() };
    let udiv = |a: u128, b: u128| a.checked_div(b).unwrap_or(BitVecValue::mask(w));
    let urem = |a: u128, b: u128| if b == 0 { a } else { a % b };
    let (ax, ay) = (abs(x), abs(y));
    match op {
        Op::BvSdiv => {
            let q = BitVecValue::new(w, udiv(ax, ay));
            if msb(x) != msb(y) {
                neg(q.bits())
            } else {
                q
            }
        }
        Op::BvSrem => {
            let r = BitVecValue::new(w, urem(ax, ay));
            if msb(x) {
                neg(r.bits())
            } else {
                r
            }
        }
        _ => {
            let u = BitVecValue::new(w, urem(ax, ay));
            if u.bits() == 0 {
                return u;
            }
            match (msb(x), msb(y)) {
                (false, false) => u,
                (true, false) => BitVecValue::new(w, y.bits().wrapping_sub(u.bits())),
                (false, true) => BitVecValue::new(w, u.bits().wrapping_add(y.bits())),
                (true, true) => neg(u.bits()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Sort;

    #[test]
    fn comparison_under_valuation() {
        let x = Var::new("x", Sort::Int);
        let t = Term::binary(Op::Lt, x.term(), Term::int(5));
        let v: Valuation = [(x, Value::int(4))].into_iter().collect();
        assert_eq!(evaluate(&t, &v), Ok(Value::Bool(true)));
    }

    #[test]
    fn bv_add_wraps() {
        let t = Term::binary(Op::BvAdd, Term::bv(4, 0xF), Term::bv(4, 1));
        assert_eq!(evaluate(&t, &Valuation::new()), Ok(Value::bv(4, 0)));
        assert_eq!(evaluate(&t, &Valuation::new()).unwrap().to_string(), "#x0");
    }

    #[test]
    fn partial_unassigned_is_unknown() {
        let x = Var::new("x", Sort::Int);
        let y = Var::new("y", Sort::Int);
        let t = Term::binary(Op::Add, x.term(), y.term());
        let v: Valuation = [(x, Value::int(2))].into_iter().collect();
        assert_eq!(evaluate_partial(&t, &v), None);
    }

    #[test]
    fn euclidean_div_mod() {
        let cases = [(7, 2, 3, 1), (-7, 2, -4, 1), (7, -2, -3, 1), (-7, -2, 4, 1)];
        for (a, d, q, r) in cases {
            let tq = Term::binary(Op::IntDiv, Term::int(a), Term::int(d));
            let tr = Term::binary(Op::Mod, Term::int(a), Term::int(d));
            assert_eq!(evaluate(&tq, &Valuation::new()), Ok(Value::int(q)), "{a} div {d}");
            assert_eq!(evaluate(&tr, &Valuation::new()), Ok(Value::int(r)), "{a} mod {d}");
        }
    }

    #[test]
    fn division_by_zero_is_unknown() {
        let t = Term::binary(Op::IntDiv, Term::int(1), Term::int(0));
        assert_eq!(evaluate(&t, &Valuation::new()), Err(EvalError::DivisionByZero));
        assert_eq!(evaluate_partial(&t, &Valuation::new()), None);
    }

    #[test]
    fn and_short_circuits_over_unknown() {
        let y = Var::new("y", Sort::Bool);
        let t = Term::mk(Op::And, vec![Term::ff(), y.term()]);
        assert_eq!(evaluate_partial(&t, &Valuation::new()), Some(Value::Bool(false)));
    }

    #[test]
    fn signed_bv_division_matches_definition() {
        // exhaustive on width 3 against integer semantics
        for x in 0..8u128 {
            for y in 0..8u128 {
                let (xv, yv) = (BitVecValue::new(3, x), BitVecValue::new(3, y));
                let (sx, sy) = (xv.signed(), yv.signed());
                let q = signed_div(&Op::BvSdiv, xv, yv).signed();
                let r = signed_div(&Op::BvSrem, xv, yv).signed();
                if sy != 0 && !(sx == -4 && sy == -1) {
                    assert_eq!(q, sx / sy, "{sx} sdiv {sy}");
                    assert_eq!(r, sx % sy, "{sx} srem {sy}");
                    let m = signed_div(&Op::BvSmod, xv, yv).signed();
                    let expect = ((sx % sy) + sy) % sy;
                    assert_eq!(m, expect, "{sx} smod {sy}");
                }
            }
        }
    }

    #[test]
    fn extract_concat_extend() {
        let x = Term::bv(4, 0b1011);
        let e = Term::mk(Op::Extract(2, 1), vec![x.clone()]);
        assert_eq!(evaluate(&e, &Valuation::new()), Ok(Value::bv(2, 0b01)));
        let c = Term::mk(Op::Concat, vec![Term::bv(2, 0b10), Term::bv(3, 0b011)]);
        assert_eq!(evaluate(&c, &Valuation::new()), Ok(Value::bv(5, 0b10011)));
        let s = Term::mk(Op::SignExtend(2), vec![x]);
        assert_eq!(evaluate(&s, &Valuation::new()), Ok(Value::bv(6, 0b111011)));
    }
}

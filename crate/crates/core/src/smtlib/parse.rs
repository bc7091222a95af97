//! Sorts, terms, and values from s-expressions.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Num;

use super::lexer::{Atom, Pos, Sexp};
use super::FrontendError;
use crate::term::{evaluate, Op, Quantifier, Sort, Term, Valuation, Value, Var, MAX_BV_WIDTH};

fn err(pos: Pos, msg: impl Into<String>) -> FrontendError {
    FrontendError::parse(pos, msg)
}

fn numeral(e: &Sexp) -> Result<u32, FrontendError> {
    match e {
        Sexp::Atom(Atom::Numeral(n), p) => n.parse().map_err(|_| err(*p, "index out of range")),
        _ => Err(err(e.pos(), "expected a numeral index")),
    }
}

pub fn parse_sort(e: &Sexp) -> Result<Sort, FrontendError> {
    match e {
        Sexp::Atom(Atom::Symbol(s), p) => match s.as_str() {
            "Bool" => Ok(Sort::Bool),
            "Int" => Ok(Sort::Int),
            "Real" => Ok(Sort::Real),
            other => Err(FrontendError::Unsupported { pos: *p, what: format!("sort `{other}`") }),
        },
        Sexp::List(items, p) => match items.first().and_then(Sexp::symbol) {
            Some("_") if items.len() == 3 && items[1].symbol() == Some("BitVec") => {
                let w = numeral(&items[2])?;
                if w == 0 || w > MAX_BV_WIDTH {
                    return Err(err(*p, format!("bit-vector width {w} outside 1..={MAX_BV_WIDTH}")));
                }
                Ok(Sort::BitVec(w))
            }
            Some("Array") if items.len() == 3 => Ok(Sort::array(parse_sort(&items[1])?, parse_sort(&items[2])?)),
            _ => Err(FrontendError::Unsupported { pos: *p, what: format!("sort `{e}`") }),
        },
        _ => Err(err(e.pos(), "expected a sort")),
    }
}

/// Symbols visible while parsing terms.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    /// Uninterpreted predicates (Bool-valued functions).
    pub preds: HashMap<String, Vec<Sort>>,
}

pub struct TermParser<'a> {
    sig: &'a Signature,
    scopes: Vec<HashMap<String, Term>>,
}

impl<'a> TermParser<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        TermParser { sig, scopes: Vec::new() }
    }

    /// Makes `vars` visible as free variables, as if bound by an enclosing quantifier.
    pub fn with_vars(sig: &'a Signature, vars: &[Var]) -> Self {
        let scope = vars.iter().map(|v| (v.name().to_string(), v.term())).collect();
        TermParser { sig, scopes: vec![scope] }
    }

    fn lookup(&self, name: &str) -> Option<Term> {
        self.scopes.iter().rev().find_map(|s| s.get(name).cloned())
    }

    pub fn parse(&mut self, e: &Sexp) -> Result<Term, FrontendError> {
        match e {
            Sexp::Atom(a, p) => self.atom(a, *p),
            Sexp::List(items, p) => self.list(items, *p),
        }
    }

    fn atom(&self, a: &Atom, p: Pos) -> Result<Term, FrontendError> {
        match a {
            Atom::Numeral(n) => Ok(Term::big_int(n.parse::<BigInt>().map_err(|_| err(p, "bad numeral"))?)),
            Atom::Decimal(d) => Ok(Term::constant(Value::Real(parse_decimal(d).ok_or_else(|| err(p, "bad decimal"))?))),
            Atom::Hex(h) => {
                let w = 4 * h.len() as u32;
                if w > MAX_BV_WIDTH {
                    return Err(err(p, "bit-vector literal too wide"));
                }
                Ok(Term::bv(w, u128::from_str_radix(h, 16).unwrap()))
            }
            Atom::Binary(b) => {
                let w = b.len() as u32;
                if w > MAX_BV_WIDTH {
                    return Err(err(p, "bit-vector literal too wide"));
                }
                Ok(Term::bv(w, u128::from_str_radix(b, 2).unwrap()))
            }
            Atom::Symbol(s) => {
                if let Some(t) = self.lookup(s) {
                    return Ok(t);
                }
                match s.as_str() {
                    "true" => return Ok(Term::tt()),
                    "false" => return Ok(Term::ff()),
                    _ => {}
                }
                if let Some(args) = self.sig.preds.get(s) {
                    if args.is_empty() {
                        return Ok(Term::mk(Op::Pred(Arc::from(s.as_str()), vec![]), vec![]));
                    }
                }
                Err(err(p, format!("unknown symbol `{s}`")))
            }
            Atom::Keyword(k) => Err(err(p, format!("unexpected keyword `{k}`"))),
            Atom::Str(_) => Err(err(p, "string literals are not supported in terms")),
        }
    }

    fn list(&mut self, items: &[Sexp], p: Pos) -> Result<Term, FrontendError> {
        let Some(head) = items.first() else {
            return Err(err(p, "empty application"));
        };
        if let Some(h) = head.symbol() {
            match h {
                "let" => return self.let_(items, p),
                "forall" | "exists" => return self.quant(h, items, p),
                "!" => {
                    if items.len() < 2 {
                        return Err(err(p, "empty annotation"));
                    }
                    return self.parse(&items[1]);
                }
                "_" => return self.indexed_const(items, p),
                _ => {}
            }
        }
        let (op, arg_exprs) = match head {
            Sexp::Atom(Atom::Symbol(name), hp) => {
                if let Some(sorts) = self.sig.preds.get(name) {
                    (Op::Pred(Arc::from(name.as_str()), sorts.clone()), &items[1..])
                } else {
                    let op = Op::from_name(name, items.len() - 1).ok_or_else(|| err(*hp, format!("unknown function `{name}`")))?;
                    (op, &items[1..])
                }
            }
            Sexp::List(h, hp) => (self.indexed_op(h, *hp)?, &items[1..]),
            _ => return Err(err(head.pos(), "expected a function symbol")),
        };
        let mut args = arg_exprs.iter().map(|a| self.parse(a)).collect::<Result<Vec<_>, _>>()?;
        coerce_int_literals(&op, &mut args);
        if op == Op::Neg && args.len() == 1 {
            match args[0].as_const() {
                Some(Value::Int(i)) => return Ok(Term::big_int(-i)),
                Some(Value::Real(r)) => return Ok(Term::constant(Value::Real(-r))),
                _ => {}
            }
        }
        Term::app(op, args).map_err(|e| FrontendError::Sort { pos: p, message: e.to_string() })
    }

    fn indexed_op(&self, h: &[Sexp], p: Pos) -> Result<Op, FrontendError> {
        match h.first().and_then(Sexp::symbol) {
            Some("_") if h.len() >= 2 => match h[1].symbol() {
                Some("extract") if h.len() == 4 => Ok(Op::Extract(numeral(&h[2])?, numeral(&h[3])?)),
                Some("zero_extend") if h.len() == 3 => Ok(Op::ZeroExtend(numeral(&h[2])?)),
                Some("sign_extend") if h.len() == 3 => Ok(Op::SignExtend(numeral(&h[2])?)),
                _ => Err(FrontendError::Unsupported { pos: p, what: format!("indexed operator `{}`", Sexp::List(h.to_vec(), p)) }),
            },
            Some("as") if h.len() == 3 && h[1].symbol() == Some("const") => Ok(Op::ConstArray(parse_sort(&h[2])?)),
            _ => Err(err(p, "expected an indexed operator")),
        }
    }

    fn indexed_const(&self, items: &[Sexp], p: Pos) -> Result<Term, FrontendError> {
        // (_ bvN w)
        if items.len() == 3 {
            if let Some(name) = items[1].symbol() {
                if let Some(digits) = name.strip_prefix("bv") {
                    let w = numeral(&items[2])?;
                    let n = digits.parse::<BigInt>().map_err(|_| err(p, "bad bit-vector literal"))?;
                    if w == 0 || w > MAX_BV_WIDTH {
                        return Err(err(p, "bad bit-vector width"));
                    }
                    let m = BigInt::from(1u8) << w;
                    let r: BigInt = ((n % &m) + &m) % &m;
                    let bits = u128::from_str_radix(&r.to_str_radix(16), 16).unwrap();
                    return Ok(Term::bv(w, bits));
                }
            }
        }
        Err(err(p, "unsupported indexed constant"))
    }

    fn let_(&mut self, items: &[Sexp], p: Pos) -> Result<Term, FrontendError> {
        let [_, binds, body] = items else {
            return Err(err(p, "malformed let"));
        };
        let binds = binds.list().ok_or_else(|| err(binds.pos(), "expected let bindings"))?;
        let mut scope = HashMap::new();
        for b in binds {
            match b.list() {
                Some([name, val]) => {
                    let n = name.symbol().ok_or_else(|| err(name.pos(), "expected a symbol"))?;
                    let t = self.parse(val)?;
                    scope.insert(n.to_string(), t);
                }
                _ => return Err(err(b.pos(), "malformed let binding")),
            }
        }
        self.scopes.push(scope);
        let r = self.parse(body);
        self.scopes.pop();
        r
    }

    fn quant(&mut self, q: &str, items: &[Sexp], p: Pos) -> Result<Term, FrontendError> {
        let [_, binds, body] = items else {
            return Err(err(p, format!("malformed {q}")));
        };
        let vars = parse_sorted_vars(binds)?;
        if vars.is_empty() {
            return Err(err(p, "quantifier without variables"));
        }
        self.scopes.push(vars.iter().map(|v| (v.name().to_string(), v.term())).collect());
        let r = self.parse(body);
        self.scopes.pop();
        let body = r?;
        let kind = if q == "forall" { Quantifier::Forall } else { Quantifier::Exists };
        Term::quant(kind, vars, body).map_err(|e| FrontendError::Sort { pos: p, message: e.to_string() })
    }
}

pub fn parse_sorted_vars(binds: &Sexp) -> Result<Vec<Var>, FrontendError> {
    let l = binds.list().ok_or_else(|| err(binds.pos(), "expected sorted variables"))?;
    l.iter()
        .map(|b| match b.list() {
            Some([name, sort]) => {
                let n = name.symbol().ok_or_else(|| err(name.pos(), "expected a symbol"))?;
                Ok(Var::new(n, parse_sort(sort)?))
            }
            _ => Err(err(b.pos(), "malformed sorted variable")),
        })
        .collect()
}

/// In Real contexts, integer literals are read as reals (`(+ x 1)` with `x: Real`).
fn coerce_int_literals(op: &Op, args: &mut [Term]) {
    let coercible = op.is_arith() || matches!(op, Op::Eq | Op::Distinct | Op::Ite);
    if !coercible || (*op != Op::RealDiv && !args.iter().any(|a| a.sort() == &Sort::Real)) {
        return;
    }
    for a in args.iter_mut() {
        if let Some(Value::Int(i)) = a.as_const() {
            *a = Term::constant(Value::Real(BigRational::from_integer(i.clone())));
        }
    }
}

fn parse_decimal(d: &str) -> Option<BigRational> {
    let (int, frac) = d.split_once('.').unwrap_or((d, ""));
    let num = BigInt::from_str_radix(&format!("{int}{frac}"), 10).ok()?;
    let den = BigInt::from(10u8).pow(frac.len() as u32);
    Some(BigRational::new(num, den))
}

/// Reads a ground value such as `(- 3)`, `(/ 1.0 3.0)`, `#x05`, or a
/// `store` chain over a constant array, checking it against `sort`.
pub fn parse_value(e: &Sexp, sort: &Sort) -> Result<Value, FrontendError> {
    let sig = Signature::default();
    let t = TermParser::new(&sig).parse(e)?;
    let v = evaluate(&t, &Valuation::new()).map_err(|x| err(e.pos(), format!("not a ground value: {x}")))?;
    match (&v, sort) {
        (Value::Int(i), Sort::Real) => Ok(Value::Real(BigRational::from_integer(i.clone()))),
        _ if &v.sort() == sort => Ok(v),
        _ => Err(err(e.pos(), format!("value `{e}` does not have sort {sort}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::super::lexer::parse_sexps;
    use super::*;

    fn term(src: &str, sig: &Signature) -> Result<Term, FrontendError> {
        let e = parse_sexps(src).unwrap().pop().unwrap();
        TermParser::new(sig).parse(&e)
    }

    #[test]
    fn let_and_quantifiers() {
        let sig = Signature::default();
        let t = term("(forall ((x Int)) (let ((y (+ x 1))) (> y x)))", &sig).unwrap();
        assert_eq!(t.to_string(), "(forall ((x Int)) (> (+ x 1) x))");
    }

    #[test]
    fn indexed_and_annotated() {
        let sig = Signature::default();
        let t = term("(! ((_ extract 3 0) (_ bv300 16)) :named foo)", &sig).unwrap();
        assert_eq!(evaluate(&t, &Valuation::new()).unwrap(), Value::bv(4, 300 & 0xf));
        let a = term("(select ((as const (Array Int Int)) 7) 3)", &sig).unwrap();
        assert_eq!(evaluate(&a, &Valuation::new()).unwrap(), Value::int(7));
    }

    #[test]
    fn real_context_coerces_literals() {
        let sig = Signature::default();
        let t = term("(exists ((r Real)) (< r 1))", &sig).unwrap();
        assert!(t.to_string().contains("1.0"));
    }

    #[test]
    fn ill_sorted_rejected() {
        let sig = Signature::default();
        assert!(matches!(term("(exists ((x Bool)) (and x 3))", &sig), Err(FrontendError::Sort { .. })));
    }

    #[test]
    fn values() {
        let v = |s: &str, sort: Sort| parse_value(&parse_sexps(s).unwrap()[0], &sort).unwrap();
        assert_eq!(v("(- 3)", Sort::Int), Value::int(-3));
        assert_eq!(v("(/ 1.0 3.0)", Sort::Real), Value::real(1, 3));
        assert_eq!(v("(- (/ 1 2))", Sort::Real), Value::real(-1, 2));
        assert_eq!(v("#b101", Sort::BitVec(3)), Value::bv(3, 5));
        let arr = v("(store ((as const (Array Int Int)) 5) 1 2)", Sort::array(Sort::Int, Sort::Int));
        assert_eq!(arr.to_string(), "(store ((as const (Array Int Int)) 5) 1 2)");
    }
}

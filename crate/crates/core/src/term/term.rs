use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use thiserror::Error;

use super::op::Op;
use super::{Sort, Value};

/// A sorted variable. Two variables are the same iff name and sort agree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    name: Arc<str>,
    sort: Sort,
}

impl Var {
    pub fn new(name: impl AsRef<str>, sort: Sort) -> Var {
        Var { name: Arc::from(name.as_ref()), sort }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sort(&self) -> &Sort {
        &self.sort
    }

    pub fn term(&self) -> Term {
        Term::var(self.clone())
    }

    pub fn renamed(&self, name: impl AsRef<str>) -> Var {
        Var::new(name, self.sort.clone())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbol(f, &self.name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    Exists,
    Forall,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Var(Var),
    Const(Value),
    App(Op, Vec<Term>),
    Quant(Quantifier, Vec<Var>, Term),
}

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Node {
    kind: TermKind,
    sort: Sort,
}

/// Immutable, structurally compared expression. Cloning is cheap.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(Arc<Node>);

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("sort error at `{offending}`: {message}")]
pub struct SortError {
    /// The offending subterm (or the whole application for arity errors), printed.
    pub offending: String,
    pub message: String,
}

impl Term {
    pub fn var(v: Var) -> Term {
        let sort = v.sort.clone();
        Term(Arc::new(Node { kind: TermKind::Var(v), sort }))
    }

    pub fn constant(v: Value) -> Term {
        let sort = v.sort();
        Term(Arc::new(Node { kind: TermKind::Const(v), sort }))
    }

    pub fn bool(b: bool) -> Term {
        Term::constant(Value::Bool(b))
    }

    pub fn tt() -> Term {
        Term::bool(true)
    }

    pub fn ff() -> Term {
        Term::bool(false)
    }

    pub fn int(i: i64) -> Term {
        Term::constant(Value::int(i))
    }

    pub fn big_int(i: BigInt) -> Term {
        Term::constant(Value::Int(i))
    }

    pub fn bv(width: u32, bits: u128) -> Term {
        Term::constant(Value::bv(width, bits))
    }

    /// Sort-checked application.
    pub fn app(op: Op, args: Vec<Term>) -> Result<Term, SortError> {
        let sorts: Vec<Sort> = args.iter().map(|a| a.sort().clone()).collect();
        match op.result_sort(&sorts) {
            Ok(sort) => Ok(Term(Arc::new(Node { kind: TermKind::App(op, args), sort }))),
            Err(m) => {
                let offending = match m.arg {
                    Some(i) => args[i].to_string(),
                    None => {
                        let parts: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                        format!("({} {})", op.name(), parts.join(" "))
                    }
                };
                Err(SortError { offending, message: m.msg })
            }
        }
    }

    /// Application that must be well sorted by construction; panics otherwise.
    pub fn mk(op: Op, args: Vec<Term>) -> Term {
        match Term::app(op, args) {
            Ok(t) => t,
            Err(e) => panic!("ill-sorted internal term construction: {e}"),
        }
    }

    pub fn quant(q: Quantifier, bound: Vec<Var>, body: Term) -> Result<Term, SortError> {
        if body.sort() != &Sort::Bool {
            return Err(SortError { offending: body.to_string(), message: "quantifier body must be Bool".into() });
        }
        if bound.is_empty() {
            return Ok(body);
        }
        Ok(Term(Arc::new(Node { kind: TermKind::Quant(q, bound, body), sort: Sort::Bool })))
    }

    /// Existential closure over the given variables, dropping those that do not occur free.
    pub fn exists(bound: Vec<Var>, body: Term) -> Term {
        let free = body.free_vars();
        let bound: Vec<Var> = bound.into_iter().filter(|v| free.contains(v)).collect();
        Term::quant(Quantifier::Exists, bound, body).expect("Bool body")
    }

    pub fn forall(bound: Vec<Var>, body: Term) -> Term {
        let free = body.free_vars();
        let bound: Vec<Var> = bound.into_iter().filter(|v| free.contains(v)).collect();
        Term::quant(Quantifier::Forall, bound, body).expect("Bool body")
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn sort(&self) -> &Sort {
        &self.0.sort
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self.kind() {
            TermKind::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_const(&self) -> Option<&Value> {
        match self.kind() {
            TermKind::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        self.as_const().and_then(Value::as_bool)
    }

    pub fn is_true(&self) -> bool {
        self.as_bool() == Some(true)
    }

    pub fn is_false(&self) -> bool {
        self.as_bool() == Some(false)
    }

    pub fn as_app(&self) -> Option<(&Op, &[Term])> {
        match self.kind() {
            TermKind::App(op, args) => Some((op, args)),
            _ => None,
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self.kind() {
            TermKind::Var(_) | TermKind::Const(_) => true,
            TermKind::App(_, args) => args.iter().all(Term::is_quantifier_free),
            TermKind::Quant(..) => false,
        }
    }

    // ---- convenience builders (well-sortedness is the caller's invariant) ----

    #[allow(clippy::should_implement_trait)]
    pub fn not(t: Term) -> Term {
        if let Some(b) = t.as_bool() {
            return Term::bool(!b);
        }
        if let Some((Op::Not, args)) = t.as_app() {
            return args[0].clone();
        }
        Term::mk(Op::Not, vec![t])
    }

    /// Conjunction with flattening and unit handling.
    pub fn and(parts: impl IntoIterator<Item = Term>) -> Term {
        let mut out = Vec::new();
        for p in parts {
            if p.is_true() {
                continue;
            }
            if p.is_false() {
                return Term::ff();
            }
            match p.as_app() {
                Some((Op::And, args)) => out.extend(args.iter().cloned()),
                _ => out.push(p),
            }
        }
        match out.len() {
            0 => Term::tt(),
            1 => out.pop().unwrap(),
            _ => Term::mk(Op::And, out),
        }
    }

    /// Disjunction with flattening and unit handling.
    pub fn or(parts: impl IntoIterator<Item = Term>) -> Term {
        let mut out = Vec::new();
        for p in parts {
            if p.is_false() {
                continue;
            }
            if p.is_true() {
                return Term::tt();
            }
            match p.as_app() {
                Some((Op::Or, args)) => out.extend(args.iter().cloned()),
                _ => out.push(p),
            }
        }
        match out.len() {
            0 => Term::ff(),
            1 => out.pop().unwrap(),
            _ => Term::mk(Op::Or, out),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        if a.is_true() {
            return b;
        }
        if a.is_false() || b.is_true() {
            return Term::tt();
        }
        Term::mk(Op::Implies, vec![a, b])
    }

    pub fn eq(a: Term, b: Term) -> Term {
        if a == b {
            return Term::tt();
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return Term::bool(x == y);
        }
        Term::mk(Op::Eq, vec![a, b])
    }

    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        match c.as_bool() {
            Some(true) => t,
            Some(false) => e,
            None if t == e => t,
            None => Term::mk(Op::Ite, vec![c, t, e]),
        }
    }

    pub fn binary(op: Op, a: Term, b: Term) -> Term {
        Term::mk(op, vec![a, b])
    }

    /// Top-level conjuncts (a non-conjunction is its own single conjunct).
    pub fn conjuncts(&self) -> Vec<Term> {
        match self.as_app() {
            Some((Op::And, args)) => args.iter().flat_map(|a| a.conjuncts()).collect(),
            _ if self.is_true() => vec![],
            _ => vec![self.clone()],
        }
    }

    pub fn disjuncts(&self) -> Vec<Term> {
        match self.as_app() {
            Some((Op::Or, args)) => args.iter().flat_map(|a| a.disjuncts()).collect(),
            _ if self.is_false() => vec![],
            _ => vec![self.clone()],
        }
    }

    /// Free variables in deterministic order.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        match self.kind() {
            TermKind::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            TermKind::Const(_) => {}
            TermKind::App(_, args) => {
                for a in args {
                    a.collect_free(bound, out);
                }
            }
            TermKind::Quant(_, vs, body) => {
                let n = bound.len();
                bound.extend(vs.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// Boolean atoms: maximal Bool-sorted subterms that are not built from
    /// propositional connectives. Quantified subterms are returned whole.
    pub fn atoms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Term>) {
        if self.as_bool().is_some() {
            return;
        }
        match self.kind() {
            TermKind::App(op, args) if op.is_connective() => {
                for a in args {
                    a.collect_atoms(out);
                }
            }
            TermKind::App(Op::Ite, args) if self.sort() == &Sort::Bool => {
                for a in args {
                    a.collect_atoms(out);
                }
            }
            TermKind::App(Op::Eq, args) if args[0].sort() == &Sort::Bool => {
                for a in args {
                    a.collect_atoms(out);
                }
            }
            _ if self.sort() == &Sort::Bool => {
                out.insert(self.clone());
            }
            _ => {}
        }
    }

    /// Number of nodes in the tree (shared subterms counted repeatedly).
    pub fn size(&self) -> usize {
        match self.kind() {
            TermKind::Var(_) | TermKind::Const(_) => 1,
            TermKind::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            TermKind::Quant(_, _, b) => 1 + b.size(),
        }
    }

    /// Applies `f` bottom-up to every application node, rebuilding the term.
    pub fn map_apps(&self, f: &mut impl FnMut(&Op, Vec<Term>) -> Term) -> Term {
        match self.kind() {
            TermKind::Var(_) | TermKind::Const(_) => self.clone(),
            TermKind::App(op, args) => {
                let new_args: Vec<Term> = args.iter().map(|a| a.map_apps(f)).collect();
                f(op, new_args)
            }
            TermKind::Quant(q, vs, body) => Term::quant(*q, vs.clone(), body.map_apps(f)).expect("Bool body"),
        }
    }

    pub fn contains_op(&self, pred: &impl Fn(&Op) -> bool) -> bool {
        match self.kind() {
            TermKind::Var(_) | TermKind::Const(_) => false,
            TermKind::App(op, args) => pred(op) || args.iter().any(|a| a.contains_op(pred)),
            TermKind::Quant(_, _, b) => b.contains_op(pred),
        }
    }

    /// Visits every subterm in pre-order.
    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        match self.kind() {
            TermKind::App(_, args) => args.iter().for_each(|a| a.visit(f)),
            TermKind::Quant(_, _, b) => b.visit(f),
            _ => {}
        }
    }
}

/// Returns the sort of a term. Terms can only be built through sort-checking
/// constructors, so this never fails for a constructed term; the `Result`
/// keeps the signature usable by callers that treat sorting as fallible.
pub fn sort_of(t: &Term) -> Result<Sort, SortError> {
    Ok(t.sort().clone())
}

fn is_simple_symbol(s: &str) -> bool {
    const EXTRA: &str = "~!@$%^&*_-+=<>.?/";
    let mut chars = s.chars();
    match chars.next() {
        None => false,
        Some(c) if c.is_ascii_digit() => false,
        Some(c) => (c.is_ascii_alphanumeric() || EXTRA.contains(c)) && chars.all(|c| c.is_ascii_alphanumeric() || EXTRA.contains(c)),
    }
}

pub(crate) fn write_symbol(f: &mut impl fmt::Write, name: &str) -> fmt::Result {
    if is_simple_symbol(name) {
        write!(f, "{name}")
    } else {
        write!(f, "|{name}|")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            TermKind::Var(v) => write!(f, "{v}"),
            TermKind::Const(c) => write!(f, "{c}"),
            TermKind::App(op, args) => {
                if let Op::ConstArray(_) = op {
                    return write!(f, "({} {})", op.name(), args[0]);
                }
                if args.is_empty() {
                    return write!(f, "{}", op.name());
                }
                write!(f, "({}", op.name())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            TermKind::Quant(q, vs, body) => {
                let kw = match q {
                    Quantifier::Exists => "exists",
                    Quantifier::Forall => "forall",
                };
                write!(f, "({kw} (")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "({v} {})", v.sort())?;
                }
                write!(f, ") {body})")
            }
        }
    }
}

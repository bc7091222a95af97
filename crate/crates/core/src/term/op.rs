use std::fmt;
use std::sync::Arc;

use super::Sort;

/// Interpreted function symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    // core
    Not,
    And,
    Or,
    Xor,
    Implies,
    Ite,
    Eq,
    Distinct,
    // arithmetic
    Add,
    Sub,
    Neg,
    Mul,
    IntDiv,
    Mod,
    Abs,
    RealDiv,
    Le,
    Lt,
    Ge,
    Gt,
    ToReal,
    ToInt,
    // bit-vectors
    BvAdd,
    BvSub,
    BvNeg,
    BvMul,
    BvUdiv,
    BvUrem,
    BvSdiv,
    BvSrem,
    BvSmod,
    BvAnd,
    BvOr,
    BvXor,
    BvNot,
    BvShl,
    BvLshr,
    BvAshr,
    BvUlt,
    BvUle,
    BvUgt,
    BvUge,
    BvSlt,
    BvSle,
    BvSgt,
    BvSge,
    Concat,
    Extract(u32, u32),
    ZeroExtend(u32),
    SignExtend(u32),
    // arrays
    Select,
    Store,
    /// `((as const (Array I E)) v)`; carries the array sort.
    ConstArray(Sort),
    /// Uninterpreted predicate application; only appears in frontend input
    /// and in model-substituted clause checks before substitution.
    Pred(Arc<str>, Vec<Sort>),
}

/// Why an application is ill-sorted: the offending argument (if any) and a message.
#[derive(Debug, Clone)]
pub(crate) struct Mismatch {
    pub arg: Option<usize>,
    pub msg: String,
}

fn bad(arg: usize, msg: impl Into<String>) -> Mismatch {
    Mismatch { arg: Some(arg), msg: msg.into() }
}

fn arity(msg: impl Into<String>) -> Mismatch {
    Mismatch { arg: None, msg: msg.into() }
}

impl Op {
    pub fn name(&self) -> String {
        use Op::*;
        match self {
            Not => "not".into(),
            And => "and".into(),
            Or => "or".into(),
            Xor => "xor".into(),
            Implies => "=>".into(),
            Ite => "ite".into(),
            Eq => "=".into(),
            Distinct => "distinct".into(),
            Add => "+".into(),
            Sub | Neg => "-".into(),
            Mul => "*".into(),
            IntDiv => "div".into(),
            Mod => "mod".into(),
            Abs => "abs".into(),
            RealDiv => "/".into(),
            Le => "<=".into(),
            Lt => "<".into(),
            Ge => ">=".into(),
            Gt => ">".into(),
            ToReal => "to_real".into(),
            ToInt => "to_int".into(),
            BvAdd => "bvadd".into(),
            BvSub => "bvsub".into(),
            BvNeg => "bvneg".into(),
            BvMul => "bvmul".into(),
            BvUdiv => "bvudiv".into(),
            BvUrem => "bvurem".into(),
            BvSdiv => "bvsdiv".into(),
            BvSrem => "bvsrem".into(),
            BvSmod => "bvsmod".into(),
            BvAnd => "bvand".into(),
            BvOr => "bvor".into(),
            BvXor => "bvxor".into(),
            BvNot => "bvnot".into(),
            BvShl => "bvshl".into(),
            BvLshr => "bvlshr".into(),
            BvAshr => "bvashr".into(),
            BvUlt => "bvult".into(),
            BvUle => "bvule".into(),
            BvUgt => "bvugt".into(),
            BvUge => "bvuge".into(),
            BvSlt => "bvslt".into(),
            BvSle => "bvsle".into(),
            BvSgt => "bvsgt".into(),
            BvSge => "bvsge".into(),
            Concat => "concat".into(),
            Extract(h, l) => format!("(_ extract {h} {l})"),
            ZeroExtend(n) => format!("(_ zero_extend {n})"),
            SignExtend(n) => format!("(_ sign_extend {n})"),
            Select => "select".into(),
            Store => "store".into(),
            ConstArray(s) => format!("(as const {s})"),
            Pred(name, _) => {
                let mut out = String::new();
                super::term::write_symbol(&mut out, name).expect("string write");
                out
            }
        }
    }

    /// Looks up a plain (non-indexed) operator by its SMT-LIB name.
    pub fn from_name(name: &str, nargs: usize) -> Option<Op> {
        use Op::*;
        Some(match name {
            "not" => Not,
            "and" => And,
            "or" => Or,
            "xor" => Xor,
            "=>" => Implies,
            "ite" => Ite,
            "=" => Eq,
            "distinct" => Distinct,
            "+" => Add,
            "-" if nargs == 1 => Neg,
            "-" => Sub,
            "*" => Mul,
            "div" => IntDiv,
            "mod" => Mod,
            "abs" => Abs,
            "/" => RealDiv,
            "<=" => Le,
            "<" => Lt,
            ">=" => Ge,
            ">" => Gt,
            "to_real" => ToReal,
            "to_int" => ToInt,
            "bvadd" => BvAdd,
            "bvsub" => BvSub,
            "bvneg" => BvNeg,
            "bvmul" => BvMul,
            "bvudiv" => BvUdiv,
            "bvurem" => BvUrem,
            "bvsdiv" => BvSdiv,
            "bvsrem" => BvSrem,
            "bvsmod" => BvSmod,
            "bvand" => BvAnd,
            "bvor" => BvOr,
            "bvxor" => BvXor,
            "bvnot" => BvNot,
            "bvshl" => BvShl,
            "bvlshr" => BvLshr,
            "bvashr" => BvAshr,
            "bvult" => BvUlt,
            "bvule" => BvUle,
            "bvugt" => BvUgt,
            "bvuge" => BvUge,
            "bvslt" => BvSlt,
            "bvsle" => BvSle,
            "bvsgt" => BvSgt,
            "bvsge" => BvSge,
            "concat" => Concat,
            "select" => Select,
            "store" => Store,
            _ => return None,
        })
    }

    pub fn is_bv(&self) -> bool {
        use Op::*;
        matches!(
            self,
            BvAdd
                | BvSub
                | BvNeg
                | BvMul
                | BvUdiv
                | BvUrem
                | BvSdiv
                | BvSrem
                | BvSmod
                | BvAnd
                | BvOr
                | BvXor
                | BvNot
                | BvShl
                | BvLshr
                | BvAshr
                | BvUlt
                | BvUle
                | BvUgt
                | BvUge
                | BvSlt
                | BvSle
                | BvSgt
                | BvSge
                | Concat
                | Extract(..)
                | ZeroExtend(_)
                | SignExtend(_)
        )
    }

    pub fn is_arith(&self) -> bool {
        use Op::*;
        matches!(self, Add | Sub | Neg | Mul | IntDiv | Mod | Abs | RealDiv | Le | Lt | Ge | Gt | ToReal | ToInt)
    }

    pub fn is_array(&self) -> bool {
        matches!(self, Op::Select | Op::Store | Op::ConstArray(_))
    }

    /// Propositional connectives (and `=`/`distinct` over Bool are not included).
    pub fn is_connective(&self) -> bool {
        matches!(self, Op::Not | Op::And | Op::Or | Op::Xor | Op::Implies)
    }

    /// Result sort of applying the operator to arguments of the given sorts.
    pub(crate) fn result_sort(&self, args: &[Sort]) -> Result<Sort, Mismatch> {
        use Op::*;
        let n = args.len();
        let all = |s: &Sort| -> Result<(), Mismatch> {
            for (i, a) in args.iter().enumerate() {
                if a != s {
                    return Err(bad(i, format!("expected {s}, found {a}")));
                }
            }
            Ok(())
        };
        let same = || -> Result<Sort, Mismatch> {
            let first = args.first().ok_or_else(|| arity("missing arguments"))?;
            all(first)?;
            Ok(first.clone())
        };
        let numeric = || -> Result<Sort, Mismatch> {
            let s = same()?;
            if !s.is_numeric() {
                return Err(bad(0, format!("expected Int or Real, found {s}")));
            }
            Ok(s)
        };
        let bv = || -> Result<u32, Mismatch> {
            let s = same()?;
            s.bv_width().ok_or_else(|| bad(0, format!("expected a bit-vector, found {s}")))
        };
        match self {
            Not => {
                if n != 1 {
                    return Err(arity("not takes one argument"));
                }
                all(&Sort::Bool)?;
                Ok(Sort::Bool)
            }
            And | Or | Xor => {
                all(&Sort::Bool)?;
                Ok(Sort::Bool)
            }
            Implies => {
                if n < 2 {
                    return Err(arity("=> takes at least two arguments"));
                }
                all(&Sort::Bool)?;
                Ok(Sort::Bool)
            }
            Ite => {
                if n != 3 {
                    return Err(arity("ite takes three arguments"));
                }
                if args[0] != Sort::Bool {
                    return Err(bad(0, format!("expected Bool, found {}", args[0])));
                }
                if args[1] != args[2] {
                    return Err(bad(2, format!("expected {}, found {}", args[1], args[2])));
                }
                Ok(args[1].clone())
            }
            Eq | Distinct => {
                if n < 2 {
                    return Err(arity("equality takes at least two arguments"));
                }
                same()?;
                Ok(Sort::Bool)
            }
            Add | Mul => {
                if n < 1 {
                    return Err(arity("missing arguments"));
                }
                numeric()
            }
            Sub => {
                if n < 2 {
                    return Err(arity("- takes at least two arguments"));
                }
                numeric()
            }
            Neg | Abs => {
                if n != 1 {
                    return Err(arity("unary operator"));
                }
                numeric()
            }
            IntDiv | Mod => {
                if n != 2 {
                    return Err(arity("div/mod take two arguments"));
                }
                all(&Sort::Int)?;
                Ok(Sort::Int)
            }
            RealDiv => {
                if n < 2 {
                    return Err(arity("/ takes at least two arguments"));
                }
                all(&Sort::Real)?;
                Ok(Sort::Real)
            }
            Le | Lt | Ge | Gt => {
                if n < 2 {
                    return Err(arity("comparison takes at least two arguments"));
                }
                numeric()?;
                Ok(Sort::Bool)
            }
            ToReal => {
                if n != 1 {
                    return Err(arity("to_real takes one argument"));
                }
                all(&Sort::Int)?;
                Ok(Sort::Real)
            }
            ToInt => {
                if n != 1 {
                    return Err(arity("to_int takes one argument"));
                }
                all(&Sort::Real)?;
                Ok(Sort::Int)
            }
            BvNeg | BvNot => {
                if n != 1 {
                    return Err(arity("unary bit-vector operator"));
                }
                Ok(Sort::BitVec(bv()?))
            }
            BvAdd | BvMul | BvAnd | BvOr | BvXor => {
                if n < 2 {
                    return Err(arity("bit-vector operator takes at least two arguments"));
                }
                Ok(Sort::BitVec(bv()?))
            }
            BvSub | BvUdiv | BvUrem | BvSdiv | BvSrem | BvSmod | BvShl | BvLshr | BvAshr => {
                if n != 2 {
                    return Err(arity("binary bit-vector operator"));
                }
                Ok(Sort::BitVec(bv()?))
            }
            BvUlt | BvUle | BvUgt | BvUge | BvSlt | BvSle | BvSgt | BvSge => {
                if n != 2 {
                    return Err(arity("bit-vector comparison takes two arguments"));
                }
                bv()?;
                Ok(Sort::Bool)
            }
            Concat => {
                if n < 2 {
                    return Err(arity("concat takes at least two arguments"));
                }
                let mut w = 0;
                for (i, a) in args.iter().enumerate() {
                    w += a.bv_width().ok_or_else(|| bad(i, format!("expected a bit-vector, found {a}")))?;
                }
                if w > super::sort::MAX_BV_WIDTH {
                    return Err(arity("concatenation exceeds the supported width"));
                }
                Ok(Sort::BitVec(w))
            }
            Extract(hi, lo) => {
                if n != 1 {
                    return Err(arity("extract takes one argument"));
                }
                let w = args[0].bv_width().ok_or_else(|| bad(0, format!("expected a bit-vector, found {}", args[0])))?;
                if lo > hi || *hi >= w {
                    return Err(bad(0, format!("extract {hi} {lo} out of range for width {w}")));
                }
                Ok(Sort::BitVec(hi - lo + 1))
            }
            ZeroExtend(k) | SignExtend(k) => {
                if n != 1 {
                    return Err(arity("extension takes one argument"));
                }
                let w = args[0].bv_width().ok_or_else(|| bad(0, format!("expected a bit-vector, found {}", args[0])))?;
                if w + k > super::sort::MAX_BV_WIDTH {
                    return Err(arity("extension exceeds the supported width"));
                }
                Ok(Sort::BitVec(w + k))
            }
            Select => {
                if n != 2 {
                    return Err(arity("select takes two arguments"));
                }
                match &args[0] {
                    Sort::Array(i, e) => {
                        if **i != args[1] {
                            return Err(bad(1, format!("expected {i}, found {}", args[1])));
                        }
                        Ok((**e).clone())
                    }
                    s => Err(bad(0, format!("expected an array, found {s}"))),
                }
            }
            Store => {
                if n != 3 {
                    return Err(arity("store takes three arguments"));
                }
                match &args[0] {
                    Sort::Array(i, e) => {
                        if **i != args[1] {
                            return Err(bad(1, format!("expected {i}, found {}", args[1])));
                        }
                        if **e != args[2] {
                            return Err(bad(2, format!("expected {e}, found {}", args[2])));
                        }
                        Ok(args[0].clone())
                    }
                    s => Err(bad(0, format!("expected an array, found {s}"))),
                }
            }
            Pred(name, sorts) => {
                if n != sorts.len() {
                    return Err(arity(format!("{name} expects {} arguments", sorts.len())));
                }
                for (i, (a, s)) in args.iter().zip(sorts).enumerate() {
                    if a != s {
                        return Err(bad(i, format!("expected {s}, found {a}")));
                    }
                }
                Ok(Sort::Bool)
            }
            ConstArray(s) => {
                if n != 1 {
                    return Err(arity("const array takes one argument"));
                }
                match s {
                    Sort::Array(_, e) if **e == args[0] => Ok(s.clone()),
                    Sort::Array(_, e) => Err(bad(0, format!("expected {e}, found {}", args[0]))),
                    _ => Err(arity(format!("{s} is not an array sort"))),
                }
            }
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

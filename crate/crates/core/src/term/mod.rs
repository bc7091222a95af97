//! Sorted first-order terms: the expression language shared by every layer.

pub mod elim;
pub mod eval;
mod op;
pub mod simplify;
mod sort;
pub mod subst;
#[allow(clippy::module_inception)]
mod term;
mod value;

pub use eval::{evaluate, evaluate_partial, EvalError, Valuation};
pub use op::Op;
pub use simplify::simplify;
pub use sort::{Sort, MAX_BV_WIDTH};
pub use subst::{rename, subst, substitute, Bindings};
pub(crate) use term::write_symbol as term_write_symbol;
pub use term::{sort_of, Quantifier, SortError, Term, TermKind, Var};
pub use value::{ArrayValue, BitVecValue, Value};

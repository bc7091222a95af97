use std::fmt;

/// Sort of a term. Bit-vector widths are limited to 128 bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Int,
    Real,
    BitVec(u32),
    Array(Box<Sort>, Box<Sort>),
}

pub const MAX_BV_WIDTH: u32 = 128;

impl Sort {
    pub fn array(index: Sort, elem: Sort) -> Sort {
        Sort::Array(Box::new(index), Box::new(elem))
    }

    pub fn is_well_formed(&self) -> bool {
        match self {
            Sort::BitVec(w) => (1..=MAX_BV_WIDTH).contains(w),
            Sort::Array(i, e) => i.is_well_formed() && e.is_well_formed(),
            _ => true,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Sort::Int | Sort::Real)
    }

    pub fn bv_width(&self) -> Option<u32> {
        match self {
            Sort::BitVec(w) => Some(*w),
            _ => None,
        }
    }

    /// Number of values of the sort when it is finite and small enough to count.
    pub fn cardinality(&self) -> Option<u128> {
        match self {
            Sort::Bool => Some(2),
            Sort::BitVec(w) if *w < 128 => Some(1u128 << w),
            _ => None,
        }
    }

    /// Short mnemonic used when generating variable names.
    pub(crate) fn tag(&self) -> String {
        match self {
            Sort::Bool => "b".into(),
            Sort::Int => "i".into(),
            Sort::Real => "r".into(),
            Sort::BitVec(w) => format!("bv{w}"),
            Sort::Array(i, e) => format!("a{}{}", i.tag(), e.tag()),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "Bool"),
            Sort::Int => write!(f, "Int"),
            Sort::Real => write!(f, "Real"),
            Sort::BitVec(w) => write!(f, "(_ BitVec {w})"),
            Sort::Array(i, e) => write!(f, "(Array {i} {e})"),
        }
    }
}

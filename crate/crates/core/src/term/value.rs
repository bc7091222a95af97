use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::Sort;

/// Fixed-width bit-vector constant. Bits above `width` are always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVecValue {
    width: u32,
    bits: u128,
}

impl BitVecValue {
    pub fn new(width: u32, bits: u128) -> Self {
        assert!((1..=super::sort::MAX_BV_WIDTH).contains(&width), "bit-vector width {width} out of range");
        BitVecValue { width, bits: bits & Self::mask(width) }
    }

    pub fn mask(width: u32) -> u128 {
        if width >= 128 {
            u128::MAX
        } else {
            (1u128 << width) - 1
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    /// Two's complement interpretation.
    pub fn signed(&self) -> i128 {
        if self.width >= 128 {
            return self.bits as i128;
        }
        let sign = 1u128 << (self.width - 1);
        if self.bits & sign != 0 {
            (self.bits as i128) - (1i128 << self.width)
        } else {
            self.bits as i128
        }
    }

    pub fn from_signed(width: u32, v: i128) -> Self {
        BitVecValue::new(width, v as u128)
    }
}

/// Finite array table: a default element plus explicit entries.
///
/// Entries equal to the default are dropped so that structural equality
/// coincides with extensional equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrayValue {
    index: Sort,
    elem: Sort,
    default: Box<Value>,
    entries: BTreeMap<Value, Value>,
}

impl ArrayValue {
    pub fn constant(index: Sort, default: Value) -> Self {
        ArrayValue { index, elem: default.sort(), default: Box::new(default), entries: BTreeMap::new() }
    }

    pub fn select(&self, i: &Value) -> Value {
        self.entries.get(i).cloned().unwrap_or_else(|| (*self.default).clone())
    }

    pub fn store(&self, i: Value, v: Value) -> Self {
        let mut out = self.clone();
        if v == *out.default {
            out.entries.remove(&i);
        } else {
            out.entries.insert(i, v);
        }
        out
    }

    pub fn default_value(&self) -> &Value {
        &self.default
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Value, &Value)> {
        self.entries.iter()
    }

    pub fn sort(&self) -> Sort {
        Sort::array(self.index.clone(), self.elem.clone())
    }
}

/// Ground literal value of any supported sort.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    BitVec(BitVecValue),
    Array(ArrayValue),
}

impl Value {
    pub fn int(v: i64) -> Value {
        Value::Int(BigInt::from(v))
    }

    pub fn real(num: i64, den: i64) -> Value {
        Value::Real(BigRational::new(num.into(), den.into()))
    }

    pub fn bv(width: u32, bits: u128) -> Value {
        Value::BitVec(BitVecValue::new(width, bits))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Int(_) => Sort::Int,
            Value::Real(_) => Sort::Real,
            Value::BitVec(b) => Sort::BitVec(b.width()),
            Value::Array(a) => a.sort(),
        }
    }

    /// The canonical "zero" of a sort: false, 0, 0.0, all-zero bits, or the
    /// constant array of the element default.
    pub fn default_of(sort: &Sort) -> Value {
        match sort {
            Sort::Bool => Value::Bool(false),
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Real => Value::Real(BigRational::zero()),
            Sort::BitVec(w) => Value::bv(*w, 0),
            Sort::Array(i, e) => Value::Array(ArrayValue::constant((**i).clone(), Value::default_of(e))),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_bv(&self) -> Option<BitVecValue> {
        match self {
            Value::BitVec(b) => Some(*b),
            _ => None,
        }
    }

    /// Enumerates every value of a finite sort in ascending order.
    pub fn enumerate(sort: &Sort) -> Option<Vec<Value>> {
        match sort {
            Sort::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
            Sort::BitVec(w) if *w <= 20 => Some((0..(1u128 << w)).map(|b| Value::bv(*w, b)).collect()),
            _ => None,
        }
    }
}

fn fmt_int(f: &mut fmt::Formatter<'_>, i: &BigInt) -> fmt::Result {
    if i.is_negative() {
        write!(f, "(- {})", i.abs())
    } else {
        write!(f, "{i}")
    }
}

fn fmt_real(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    let neg = r.is_negative();
    let a = r.abs();
    if neg {
        write!(f, "(- ")?;
    }
    if a.denom() == &BigInt::from(1) {
        write!(f, "{}.0", a.numer())?;
    } else {
        write!(f, "(/ {}.0 {}.0)", a.numer(), a.denom())?;
    }
    if neg {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Value {
    /// SMT-LIB v2 concrete syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => fmt_int(f, i),
            Value::Real(r) => fmt_real(f, r),
            Value::BitVec(b) => {
                if b.width() % 4 == 0 {
                    write!(f, "#x{:0w$x}", b.bits(), w = (b.width() / 4) as usize)
                } else {
                    write!(f, "#b{:0w$b}", b.bits(), w = b.width() as usize)
                }
            }
            Value::Array(a) => {
                let mut s = format!("((as const {}) {})", a.sort(), a.default_value());
                for (k, v) in a.entries() {
                    s = format!("(store {s} {k} {v})");
                }
                write!(f, "{s}")
            }
        }
    }
}

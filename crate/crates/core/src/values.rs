//! Typed value arrays shared by every column encoding.
//!
//! Integer arrays are stored at one of four signed widths so that bit-width
//! reduction shows up in real memory, not only in the size accounting.
//! Arithmetic always widens: integer results are `i64`, anything touching a
//! float is `f64`.

// Width-generic macro arms cast every variant, which is the identity on the widest ones.
#![allow(clippy::unnecessary_cast)]

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    I8,
    I16,
    I32,
    I64,
    F64,
}

impl DType {
    pub const fn width(self) -> usize {
        match self {
            DType::I8 => 1,
            DType::I16 => 2,
            DType::I32 => 4,
            DType::I64 | DType::F64 => 8,
        }
    }

    pub const fn is_float(self) -> bool {
        matches!(self, DType::F64)
    }

    /// Inclusive value range of an integer type.
    pub fn int_range(self) -> Option<(i64, i64)> {
        match self {
            DType::I8 => Some((i8::MIN as i64, i8::MAX as i64)),
            DType::I16 => Some((i16::MIN as i64, i16::MAX as i64)),
            DType::I32 => Some((i32::MIN as i64, i32::MAX as i64)),
            DType::I64 => Some((i64::MIN, i64::MAX)),
            DType::F64 => None,
        }
    }

    /// Smallest signed integer type holding every value of `lo..=hi`.
    pub fn narrowest_for(lo: i64, hi: i64) -> DType {
        [DType::I8, DType::I16, DType::I32]
            .into_iter()
            .find(|d| {
                let (min, max) = d.int_range().unwrap();
                lo >= min && hi <= max
            })
            .unwrap_or(DType::I64)
    }

    pub fn fits(self, v: i64) -> bool {
        match self.int_range() {
            Some((lo, hi)) => v >= lo && v <= hi,
            None => true,
        }
    }

    /// Common type for combining two arrays (concatenation, patching).
    pub fn promote(self, other: DType) -> DType {
        if self.is_float() || other.is_float() {
            DType::F64
        } else if self.width() >= other.width() {
            self
        } else {
            other
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Float(f64),
}

impl Scalar {
    pub fn as_f64(self) -> f64 {
        match self {
            Scalar::Int(v) => v as f64,
            Scalar::Float(v) => v,
        }
    }

    pub fn as_i64(self) -> Option<i64> {
        match self {
            Scalar::Int(v) => Some(v),
            Scalar::Float(_) => None,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, Scalar::Float(_))
    }

    /// Total order: integers exactly, floats via `total_cmp`, mixed as `f64`.
    pub fn total_cmp(&self, other: &Scalar) -> Ordering {
        match (*self, *other) {
            (Scalar::Int(a), Scalar::Int(b)) => a.cmp(&b),
            (a, b) => a.as_f64().total_cmp(&b.as_f64()),
        }
    }

    pub fn arith(self, rhs: Scalar, op: ArithOp) -> Result<Scalar> {
        match (self, rhs) {
            (Scalar::Int(a), Scalar::Int(b)) => int_arith(a, b, op).map(Scalar::Int),
            (a, b) => Ok(Scalar::Float(float_arith(a.as_f64(), b.as_f64(), op))),
        }
    }

    pub fn compare(self, rhs: Scalar, op: CmpOp) -> bool {
        match (self, rhs) {
            (Scalar::Int(a), Scalar::Int(b)) => op.eval(a, b),
            (a, b) => op.eval(a.as_f64(), b.as_f64()),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (*self, *other) {
            (Scalar::Int(a), Scalar::Int(b)) => a == b,
            (a, b) => a.as_f64() == b.as_f64(),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Float(v) => write!(f, "{v}"),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    #[inline]
    pub fn eval<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    /// The operator that gives the same answer with operands swapped.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            op => op,
        }
    }
}

#[inline]
fn int_arith(a: i64, b: i64, op: ArithOp) -> Result<i64> {
    match op {
        ArithOp::Add => a.checked_add(b).ok_or(Error::Overflow("add")),
        ArithOp::Sub => a.checked_sub(b).ok_or(Error::Overflow("sub")),
        ArithOp::Mul => a.checked_mul(b).ok_or(Error::Overflow("mul")),
        ArithOp::Div => {
            if b == 0 {
                Err(Error::DivisionByZero)
            } else {
                a.checked_div(b).ok_or(Error::Overflow("div"))
            }
        }
    }
}

#[inline]
fn float_arith(a: f64, b: f64, op: ArithOp) -> f64 {
    match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a / b,
    }
}

/// A contiguous array of same-typed numbers.
#[derive(Clone, Debug, PartialEq)]
pub enum Values {
    I8(Vec<i8>),
    I16(Vec<i16>),
    I32(Vec<i32>),
    I64(Vec<i64>),
    F64(Vec<f64>),
}

/// Runs `$body` with `$v` bound to the inner vector, whatever its type.
macro_rules! dispatch {
    ($self:expr, $v:ident => $body:expr) => {
        match $self {
            Values::I8($v) => $body,
            Values::I16($v) => $body,
            Values::I32($v) => $body,
            Values::I64($v) => $body,
            Values::F64($v) => $body,
        }
    };
}

/// Like `dispatch!` but rewraps the result in the same variant.
macro_rules! map_same {
    ($self:expr, $v:ident => $body:expr) => {
        match $self {
            Values::I8($v) => Values::I8($body),
            Values::I16($v) => Values::I16($body),
            Values::I32($v) => Values::I32($body),
            Values::I64($v) => Values::I64($body),
            Values::F64($v) => Values::F64($body),
        }
    };
}

/// Runs `$ibody` with `$v` bound to an integer vector, or `$fbody` for floats.
macro_rules! int_or_float {
    ($self:expr, $v:ident => int $ibody:expr, float $fbody:expr) => {
        match $self {
            Values::I8($v) => $ibody,
            Values::I16($v) => $ibody,
            Values::I32($v) => $ibody,
            Values::I64($v) => $ibody,
            Values::F64($v) => $fbody,
        }
    };
}

impl Values {
    pub fn empty(dtype: DType) -> Values {
        Values::zeros(dtype, 0)
    }

    pub fn zeros(dtype: DType, n: usize) -> Values {
        match dtype {
            DType::I8 => Values::I8(vec![0; n]),
            DType::I16 => Values::I16(vec![0; n]),
            DType::I32 => Values::I32(vec![0; n]),
            DType::I64 => Values::I64(vec![0; n]),
            DType::F64 => Values::F64(vec![0.0; n]),
        }
    }

    /// `n` copies of `value`, typed to hold it.
    pub fn filled(value: Scalar, n: usize) -> Values {
        match value {
            Scalar::Int(v) => Values::I64(vec![v; n]),
            Scalar::Float(v) => Values::F64(vec![v; n]),
        }
    }

    pub fn dtype(&self) -> DType {
        match self {
            Values::I8(_) => DType::I8,
            Values::I16(_) => DType::I16,
            Values::I32(_) => DType::I32,
            Values::I64(_) => DType::I64,
            Values::F64(_) => DType::F64,
        }
    }

    pub fn width(&self) -> usize {
        self.dtype().width()
    }

    pub fn len(&self) -> usize {
        dispatch!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_float(&self) -> bool {
        self.dtype().is_float()
    }

    pub fn byte_len(&self) -> usize {
        self.len() * self.width()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Scalar {
        int_or_float!(self, v => int Scalar::Int(v[i] as i64), float Scalar::Float(v[i]))
    }

    /// Elements at `index`; every index must be in range.
    pub fn gather(&self, index: &[usize]) -> Values {
        map_same!(self, v => index.iter().map(|&i| v[i]).collect())
    }

    /// Element `i` repeated `counts[i]` times, concatenated.
    pub fn repeat(&self, counts: &[usize]) -> Values {
        debug_assert_eq!(self.len(), counts.len());
        map_same!(self, v => crate::kernels::repeat_interleave(v, counts))
    }

    pub fn select(&self, keep: &[bool]) -> Values {
        debug_assert_eq!(self.len(), keep.len());
        map_same!(self, v => v.iter().zip(keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect())
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Values {
        map_same!(self, v => v[range].to_vec())
    }

    /// Concatenates arrays, promoting to a common type.
    pub fn concat(parts: &[&Values]) -> Values {
        let dtype = parts
            .iter()
            .map(|p| p.dtype())
            .reduce(DType::promote)
            .unwrap_or(DType::I64);
        let mut out = Values::zeros(dtype, 0);
        for p in parts {
            out.extend_from(p);
        }
        out
    }

    /// Appends `other`, which must convert losslessly into `self`'s type.
    pub fn reserve(&mut self, additional: usize) {
        dispatch!(self, v => v.reserve(additional))
    }

    pub fn extend_from(&mut self, other: &Values) {
        match self {
            Values::F64(dst) => dispatch!(other, v => dst.extend(v.iter().map(|&x| x as f64))),
            Values::I64(dst) => dispatch!(other, v => dst.extend(v.iter().map(|&x| x as i64))),
            Values::I32(dst) => dispatch!(other, v => dst.extend(v.iter().map(|&x| x as i32))),
            Values::I16(dst) => dispatch!(other, v => dst.extend(v.iter().map(|&x| x as i16))),
            Values::I8(dst) => dispatch!(other, v => dst.extend(v.iter().map(|&x| x as i8))),
        }
    }

    /// Integer elements widened to `i64`. Floats are truncated; callers check
    /// `is_float` first where that matters.
    pub fn iter_i64(&self) -> Box<dyn Iterator<Item = i64> + '_> {
        int_or_float!(self, v => int Box::new(v.iter().map(|&x| x as i64)),
            float Box::new(v.iter().map(|&x| x as i64)))
    }

    pub fn iter_f64(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        dispatch!(self, v => Box::new(v.iter().map(|&x| x as f64)))
    }

    pub fn to_i64_vec(&self) -> Option<Vec<i64>> {
        int_or_float!(self, v => int Some(v.iter().map(|&x| x as i64).collect()), float { let _ = v; None })
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        dispatch!(self, v => v.iter().map(|&x| x as f64).collect())
    }

    pub fn to_scalars(&self) -> Vec<Scalar> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    pub fn from_scalars(values: &[Scalar]) -> Values {
        if values.iter().any(|s| s.is_float()) {
            Values::F64(values.iter().map(|s| s.as_f64()).collect())
        } else {
            Values::I64(values.iter().map(|s| s.as_i64().unwrap()).collect())
        }
    }

    /// Converts to `dtype`, failing if an integer does not fit.
    pub fn cast(&self, dtype: DType) -> Result<Values> {
        if dtype == self.dtype() {
            return Ok(self.clone());
        }
        if dtype.is_float() {
            return Ok(Values::F64(self.to_f64_vec()));
        }
        if self.is_float() {
            return Err(Error::TypeMismatch("cannot cast floats to an integer type".into()));
        }
        let widening = dtype.width() >= self.dtype().width();
        if let Some((lo, hi)) = self.min_max_i64().filter(|_| !widening) {
            if !dtype.fits(lo) || !dtype.fits(hi) {
                return Err(Error::Overflow("narrowing cast"));
            }
        }
        let mut out = Values::zeros(dtype, 0);
        out.reserve(self.len());
        out.extend_from(self);
        Ok(out)
    }

    /// Integer array shifted by `offset` into `i64`.
    pub fn offset_i64(&self, offset: i64) -> Result<Values> {
        let shifted: Option<Vec<i64>> = int_or_float!(self, v => int v.iter().map(|&x| (x as i64).checked_add(offset)).collect(),
            float v.iter().map(|&x| (x as i64).checked_add(offset)).collect());
        shifted.map(Values::I64).ok_or(Error::Overflow("centering"))
    }

    pub fn min_max_i64(&self) -> Option<(i64, i64)> {
        int_or_float!(self, v => int {
            let first = *v.first()? as i64;
            Some(v.iter().fold((first, first), |(lo, hi), &x| (lo.min(x as i64), hi.max(x as i64))))
        }, float { let _ = v; None })
    }

    pub fn min_max(&self) -> Option<(Scalar, Scalar)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = self.get(0);
        let mut hi = lo;
        for i in 1..self.len() {
            let x = self.get(i);
            if x.total_cmp(&lo).is_lt() {
                lo = x;
            }
            if x.total_cmp(&hi).is_gt() {
                hi = x;
            }
        }
        Some((lo, hi))
    }

    /// Total order between two elements of this array.
    #[inline]
    pub fn cmp_at(&self, i: usize, j: usize) -> Ordering {
        int_or_float!(self, v => int v[i].cmp(&v[j]), float v[i].total_cmp(&v[j]))
    }

    #[inline]
    pub fn eq_at(&self, i: usize, j: usize) -> bool {
        self.cmp_at(i, j) == Ordering::Equal
    }

    /// 64-bit key for hashing; equal values give equal keys. `-0.0` and `0.0`
    /// share a key, as SQL equality requires.
    #[inline]
    pub fn key_at(&self, i: usize) -> u64 {
        int_or_float!(self, v => int v[i] as i64 as u64, float {
            let x = v[i];
            if x == 0.0 { 0 } else { x.to_bits() }
        })
    }

    /// Little-endian bytes of every element.
    pub fn write_le<W: Write>(&self, w: &mut W) -> io::Result<()> {
        dispatch!(self, v => {
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
            Ok(())
        })
    }

    pub fn read_le(dtype: DType, bytes: &[u8]) -> Result<Values> {
        if !bytes.len().is_multiple_of(dtype.width()) {
            return Err(Error::invalid("byte length is not a multiple of the element width"));
        }
        let chunks = bytes.chunks_exact(dtype.width());
        Ok(match dtype {
            DType::I8 => Values::I8(chunks.map(|c| i8::from_le_bytes([c[0]])).collect()),
            DType::I16 => Values::I16(chunks.map(|c| i16::from_le_bytes(c.try_into().unwrap())).collect()),
            DType::I32 => Values::I32(chunks.map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect()),
            DType::I64 => Values::I64(chunks.map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect()),
            DType::F64 => Values::F64(chunks.map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()),
        })
    }

    /// Element-wise `self op rhs`.
    pub fn arith(&self, rhs: &Values, op: ArithOp) -> Result<Values> {
        if self.len() != rhs.len() {
            return Err(Error::SizeMismatch { left: self.len(), right: rhs.len() });
        }
        if self.is_float() || rhs.is_float() {
            Ok(Values::F64(
                self.iter_f64().zip(rhs.iter_f64()).map(|(a, b)| float_arith(a, b, op)).collect(),
            ))
        } else {
            let out: Result<Vec<i64>> = self
                .iter_i64()
                .zip(rhs.iter_i64())
                .map(|(a, b)| int_arith(a, b, op))
                .collect();
            out.map(Values::I64)
        }
    }

    /// Element-wise `self op k`, or `k op self` when `scalar_left`.
    pub fn arith_scalar(&self, k: Scalar, op: ArithOp, scalar_left: bool) -> Result<Values> {
        match (self.is_float() || k.is_float(), k) {
            (false, Scalar::Int(k)) => {
                let out: Result<Vec<i64>> = self
                    .iter_i64()
                    .map(|x| if scalar_left { int_arith(k, x, op) } else { int_arith(x, k, op) })
                    .collect();
                out.map(Values::I64)
            }
            _ => {
                let k = k.as_f64();
                Ok(Values::F64(
                    self.iter_f64()
                        .map(|x| if scalar_left { float_arith(k, x, op) } else { float_arith(x, k, op) })
                        .collect(),
                ))
            }
        }
    }

    pub fn compare(&self, rhs: &Values, op: CmpOp) -> Result<Vec<bool>> {
        if self.len() != rhs.len() {
            return Err(Error::SizeMismatch { left: self.len(), right: rhs.len() });
        }
        Ok(if self.is_float() || rhs.is_float() {
            self.iter_f64().zip(rhs.iter_f64()).map(|(a, b)| op.eval(a, b)).collect()
        } else {
            self.iter_i64().zip(rhs.iter_i64()).map(|(a, b)| op.eval(a, b)).collect()
        })
    }

    /// Element-wise `self op k` without widening the stored array.
    pub fn compare_scalar(&self, k: Scalar, op: CmpOp) -> Vec<bool> {
        match (self, k) {
            (Values::F64(v), k) => v.iter().map(|&x| op.eval(x, k.as_f64())).collect(),
            (_, Scalar::Float(k)) => self.iter_f64().map(|x| op.eval(x, k)).collect(),
            (_, Scalar::Int(k)) => {
                int_or_float!(self, v => int v.iter().map(|&x| op.eval(x as i64, k)).collect(),
                    float { let _ = v; unreachable!() })
            }
        }
    }
}

impl From<Vec<i8>> for Values {
    fn from(v: Vec<i8>) -> Self {
        Values::I8(v)
    }
}
impl From<Vec<i16>> for Values {
    fn from(v: Vec<i16>) -> Self {
        Values::I16(v)
    }
}
impl From<Vec<i32>> for Values {
    fn from(v: Vec<i32>) -> Self {
        Values::I32(v)
    }
}
impl From<Vec<i64>> for Values {
    fn from(v: Vec<i64>) -> Self {
        Values::I64(v)
    }
}
impl From<Vec<f64>> for Values {
    fn from(v: Vec<f64>) -> Self {
        Values::F64(v)
    }
}

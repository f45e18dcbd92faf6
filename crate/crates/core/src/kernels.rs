//! Bulk primitives over flat arrays.
//!
//! Everything above this module is written as compositions of these
//! functions: binary-search bucketing, prefix sums, repetition, gathers,
//! scatters and sorting. None of them branch on individual element values
//! beyond what the operation itself defines, so each one maps onto a
//! data-parallel implementation.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::values::Values;

/// For each `x_i`, the number of boundaries below it (`right = false`) or at
/// or below it (`right = true`). `boundaries` must be sorted ascending.
pub fn bucketize<T: PartialOrd>(x: &[T], boundaries: &[T], right: bool) -> Vec<usize> {
    if right {
        x.iter().map(|v| boundaries.partition_point(|b| b <= v)).collect()
    } else {
        x.iter().map(|v| boundaries.partition_point(|b| b < v)).collect()
    }
}

/// Prefix sums of `x`. The exclusive form starts at zero and drops the last
/// total.
pub fn cumsum(x: &[usize], exclusive: bool) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0usize;
    for &v in x {
        if exclusive {
            out.push(acc);
        }
        acc = acc.checked_add(v).ok_or(Error::Overflow("cumsum"))?;
        if !exclusive {
            out.push(acc);
        }
    }
    Ok(out)
}

/// Signed prefix sums, overflow-checked.
pub fn cumsum_i64(x: &[i64], exclusive: bool) -> Result<Vec<i64>> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0i64;
    for &v in x {
        if exclusive {
            out.push(acc);
        }
        acc = acc.checked_add(v).ok_or(Error::Overflow("cumsum"))?;
        if !exclusive {
            out.push(acc);
        }
    }
    Ok(out)
}

pub fn repeat_interleave<T: Copy>(values: &[T], counts: &[usize]) -> Vec<T> {
    debug_assert_eq!(values.len(), counts.len());
    let total = counts.iter().sum();
    let mut out = Vec::with_capacity(total);
    for (&v, &c) in values.iter().zip(counts) {
        out.extend(std::iter::repeat_n(v, c));
    }
    out
}

pub fn arange(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Concatenation of `start_i, start_i + 1, .., start_i + length_i - 1`.
///
/// Built from whole-array steps: repeat each start by its length, add a
/// global counter and subtract each segment's offset in the output.
pub fn range_arange(start: &[usize], length: &[usize]) -> Vec<usize> {
    debug_assert_eq!(start.len(), length.len());
    let offsets = cumsum(length, true).expect("segment lengths overflow usize");
    let total: usize = length.iter().sum();
    let base = repeat_interleave(start, length);
    let seg = repeat_interleave(&offsets, length);
    base.into_iter()
        .zip(seg)
        .zip(0..total)
        .map(|((b, o), k)| b + (k - o))
        .collect()
}

pub fn gather<T: Copy>(values: &[T], index: &[usize]) -> Result<Vec<T>> {
    index
        .iter()
        .map(|&i| {
            values
                .get(i)
                .copied()
                .ok_or(Error::IndexOutOfRange { index: i, len: values.len() })
        })
        .collect()
}

/// `x[i] != x[i - 1]`, with the first element always marked.
pub fn adjacent_ne<T: PartialEq>(x: &[T]) -> Vec<bool> {
    let mut out = Vec::with_capacity(x.len());
    if !x.is_empty() {
        out.push(true);
    }
    out.extend(x.windows(2).map(|w| w[0] != w[1]));
    out
}

/// Indices where `mask` holds.
pub fn nonzero(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
}

pub fn select<T: Copy>(values: &[T], mask: &[bool]) -> Vec<T> {
    values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| *v).collect()
}

/// Stable sort returning the sorted copy and the source index of each slot.
pub fn sort_with_perm<T: Copy + PartialOrd>(x: &[T]) -> (Vec<T>, Vec<usize>) {
    let mut perm = arange(x.len());
    perm.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal));
    (perm.iter().map(|&i| x[i]).collect(), perm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduce {
    Sum,
    Min,
    Max,
    Count,
}

/// Element types `scatter_reduce` can fold.
pub trait Reducible: Copy {
    const ZERO: Self;
    const ONE: Self;
    /// Identity of `min`; the largest representable value.
    const MIN_IDENTITY: Self;
    const MAX_IDENTITY: Self;
    fn add(self, other: Self) -> Result<Self>;
    fn min_of(self, other: Self) -> Self;
    fn max_of(self, other: Self) -> Self;
}

impl Reducible for i64 {
    const ZERO: Self = 0;
    const ONE: Self = 1;
    const MIN_IDENTITY: Self = i64::MAX;
    const MAX_IDENTITY: Self = i64::MIN;
    fn add(self, other: Self) -> Result<Self> {
        self.checked_add(other).ok_or(Error::Overflow("scatter sum"))
    }
    fn min_of(self, other: Self) -> Self {
        self.min(other)
    }
    fn max_of(self, other: Self) -> Self {
        self.max(other)
    }
}

impl Reducible for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const MIN_IDENTITY: Self = f64::INFINITY;
    const MAX_IDENTITY: Self = f64::NEG_INFINITY;
    fn add(self, other: Self) -> Result<Self> {
        Ok(self + other)
    }
    fn min_of(self, other: Self) -> Self {
        self.min(other)
    }
    fn max_of(self, other: Self) -> Self {
        self.max(other)
    }
}

/// Folds `values` into `n_groups` slots keyed by `index`.
///
/// Each group is folded in ascending input order, so float sums are
/// reproducible. Empty groups hold the identity of the reduction.
pub fn scatter_reduce<T: Reducible>(
    values: &[T],
    index: &[usize],
    n_groups: usize,
    op: Reduce,
) -> Result<Vec<T>> {
    if values.len() != index.len() {
        return Err(Error::SizeMismatch { left: values.len(), right: index.len() });
    }
    let init = match op {
        Reduce::Sum | Reduce::Count => T::ZERO,
        Reduce::Min => T::MIN_IDENTITY,
        Reduce::Max => T::MAX_IDENTITY,
    };
    let mut out = vec![init; n_groups];
    for (&v, &g) in values.iter().zip(index) {
        let slot = out
            .get_mut(g)
            .ok_or(Error::IndexOutOfRange { index: g, len: n_groups })?;
        *slot = match op {
            Reduce::Sum => slot.add(v)?,
            Reduce::Count => slot.add(T::ONE)?,
            Reduce::Min => slot.min_of(v),
            Reduce::Max => slot.max_of(v),
        };
    }
    Ok(out)
}

/// Sorted distinct composite keys and, for every row, the slot of its key.
///
/// `keys` are columns of equal length compared lexicographically in order.
pub fn unique_with_inverse(keys: &[&Values]) -> Result<(Vec<Values>, Vec<usize>)> {
    let n = keys.first().map_or(0, |k| k.len());
    if let Some(bad) = keys.iter().find(|k| k.len() != n) {
        return Err(Error::SizeMismatch { left: n, right: bad.len() });
    }
    let cmp = |a: usize, b: usize| {
        keys.iter()
            .map(|k| k.cmp_at(a, b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    let mut perm = arange(n);
    perm.sort_by(|&a, &b| cmp(a, b));

    // A new group starts wherever the sorted key differs from its predecessor.
    let starts: Vec<bool> = (0..n)
        .map(|i| i == 0 || cmp(perm[i - 1], perm[i]).is_ne())
        .collect();
    let firsts: Vec<usize> = perm
        .iter()
        .zip(&starts)
        .filter(|(_, &s)| s)
        .map(|(&p, _)| p)
        .collect();
    let mut inverse = vec![0usize; n];
    let mut group = 0usize;
    for (i, &p) in perm.iter().enumerate() {
        if i > 0 && starts[i] {
            group += 1;
        }
        inverse[p] = group;
    }
    let unique = keys.iter().map(|k| k.gather(&firsts)).collect();
    Ok((unique, inverse))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucketize_examples() {
        assert_eq!(bucketize(&[2], &[3, 5, 8], false), vec![0]);
        assert_eq!(bucketize(&[7], &[1, 4, 6], true), vec![3]);
        assert_eq!(bucketize(&[2, 4, 7], &[0, 6], true), vec![1, 1, 2]);
    }

    #[test]
    fn cumsum_examples() {
        assert_eq!(cumsum(&[3], true).unwrap(), vec![0]);
        assert_eq!(cumsum(&[1, 2, 3], false).unwrap(), vec![1, 3, 6]);
        assert!(cumsum(&[], false).unwrap().is_empty());
        assert!(cumsum(&[usize::MAX, 1], false).is_err());
    }

    #[test]
    fn repeat_interleave_examples() {
        assert_eq!(repeat_interleave(&[0], &[3]), vec![0, 0, 0]);
        assert_eq!(repeat_interleave(&[5, 7], &[0, 2]), vec![7, 7]);
        assert!(repeat_interleave::<usize>(&[], &[]).is_empty());
    }

    #[test]
    fn range_arange_examples() {
        assert_eq!(range_arange(&[0], &[3]), vec![0, 1, 2]);
        assert_eq!(range_arange(&[4, 10], &[2, 3]), vec![4, 5, 10, 11, 12]);
        assert!(range_arange(&[7], &[0]).is_empty());
    }

    #[test]
    fn scatter_reduce_examples() {
        assert_eq!(scatter_reduce(&[6i64, 9, 12], &[0, 1, 0], 2, Reduce::Sum).unwrap(), vec![18, 9]);
        assert_eq!(scatter_reduce(&[5i64], &[0], 2, Reduce::Sum).unwrap(), vec![5, 0]);
        assert_eq!(
            scatter_reduce(&[3.0f64, 1.0, 2.0], &[1, 1, 1], 2, Reduce::Min).unwrap(),
            vec![f64::INFINITY, 1.0]
        );
        assert!(scatter_reduce(&[1i64], &[2], 2, Reduce::Sum).is_err());
    }

    #[test]
    fn unique_examples() {
        let (keys, inv) = unique_with_inverse(&[&Values::I32(vec![0, 1, 0])]).unwrap();
        assert_eq!(keys, vec![Values::I32(vec![0, 1])]);
        assert_eq!(inv, vec![0, 1, 0]);

        let (keys, inv) = unique_with_inverse(&[&Values::I32(vec![])]).unwrap();
        assert!(keys[0].is_empty() && inv.is_empty());

        let (keys, inv) = unique_with_inverse(&[&Values::I64(vec![3, 3, 3])]).unwrap();
        assert_eq!(keys, vec![Values::I64(vec![3])]);
        assert_eq!(inv, vec![0, 0, 0]);
    }

    #[test]
    fn unique_composite_keys_sort_lexicographically() {
        let a = Values::I32(vec![1, 0, 1, 0]);
        let b = Values::I32(vec![5, 9, 2, 9]);
        let (keys, inv) = unique_with_inverse(&[&a, &b]).unwrap();
        assert_eq!(keys[0], Values::I32(vec![0, 1, 1]));
        assert_eq!(keys[1], Values::I32(vec![9, 2, 5]));
        assert_eq!(inv, vec![2, 0, 1, 0]);
    }

    #[test]
    fn gather_sort_adjacent() {
        // D, E, F coded 0, 1, 2
        assert_eq!(gather(&[0, 1, 2], &[2, 0, 1, 0, 1]).unwrap(), vec![2, 0, 1, 0, 1]);
        assert!(gather(&[0, 1], &[2]).is_err());
        assert_eq!(sort_with_perm(&[2, 1]), (vec![1, 2], vec![1, 0]));
        assert_eq!(adjacent_ne(&['A', 'A', 'B']), vec![true, false, true]);
    }
}

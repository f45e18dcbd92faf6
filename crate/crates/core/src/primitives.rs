//! Interval and position-list algebra on encoded columns.
//!
//! Intersections keep track of which input entry produced each output piece
//! (`idx1`, `idx2`), so callers can gather values from either side without a
//! second search.

use crate::column::{
    IndexColumn, IndexMask, PlainColumn, PlainIndexColumn, PlainMask, RleColumn, RleIndexColumn, RleMask, Runs,
};
use crate::column::Column;
use crate::error::{Error, Result};
use crate::kernels::{self, bucketize, cumsum, range_arange, repeat_interleave};
use crate::values::{DType, Values};

/// Upper bound on the number of elements an expanding conversion may create.
pub const DEFAULT_BUDGET: usize = 1 << 32;

/// Minimum run length kept as a run by [`plain_to_rle_index`].
pub const DEFAULT_MIN_RUN: usize = 2;

/// Output pieces of an interval intersection, with the contributing entry of
/// each input.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Intersection {
    pub runs: Runs,
    pub idx1: Vec<usize>,
    pub idx2: Vec<usize>,
}

/// Pieces of `c1`'s runs that overlap `c2`, grouped by `c1` entry.
///
/// Only `c2` needs to be sorted; `c1` may hold runs in any order and may
/// overlap itself. The output follows `c1`'s entry order.
pub fn range_intersect_unsorted(c1: &Runs, c2: &Runs) -> Intersection {
    let bin_s = bucketize(&c1.starts, &c2.ends, false);
    let bin_e = bucketize(&c1.ends, &c2.starts, true);
    let cnt: Vec<usize> = bin_e.iter().zip(&bin_s).map(|(&e, &s)| e.saturating_sub(s)).collect();
    let idx1 = repeat_interleave(&kernels::arange(cnt.len()), &cnt);
    let idx2 = range_arange(&bin_s, &cnt);
    let starts = idx1.iter().zip(&idx2).map(|(&i, &j)| c1.starts[i].max(c2.starts[j])).collect();
    let ends = idx1.iter().zip(&idx2).map(|(&i, &j)| c1.ends[i].min(c2.ends[j])).collect();
    Intersection { runs: Runs::new(starts, ends), idx1, idx2 }
}

/// Intersection of two sorted run lists. The side with fewer runs is
/// bucketized; `idx1`/`idx2` always refer to `a`/`b`.
pub fn range_intersect(a: &Runs, b: &Runs) -> Intersection {
    if a.len() <= b.len() {
        range_intersect_unsorted(a, b)
    } else {
        let r = range_intersect_unsorted(b, a);
        Intersection { runs: r.runs, idx1: r.idx2, idx2: r.idx1 }
    }
}

/// Positions that fall inside some run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Hits {
    /// Surviving positions, in input order.
    pub positions: Vec<usize>,
    /// Index of each survivor in the input position list.
    pub entry: Vec<usize>,
    /// Containing run of each survivor.
    pub run_of: Vec<usize>,
}

/// Searches each position among the run starts. Positions may be unsorted;
/// runs must be sorted.
pub fn idx_in_rle(p: &[usize], runs: &Runs) -> Hits {
    let bin = bucketize(p, &runs.starts, true);
    let keep: Vec<bool> = p
        .iter()
        .zip(&bin)
        .map(|(&x, &b)| b > 0 && x <= runs.ends[b - 1])
        .collect();
    let entry = kernels::nonzero(&keep);
    Hits {
        positions: entry.iter().map(|&i| p[i]).collect(),
        run_of: entry.iter().map(|&i| bin[i] - 1).collect(),
        entry,
    }
}

/// Searches each run's bounds among the positions; same result as
/// [`idx_in_rle`] for sorted positions, cheaper when runs are few.
pub fn rle_contain_idx(p: &[usize], runs: &Runs) -> Hits {
    let bin_s = bucketize(&runs.starts, p, false);
    let bin_e = bucketize(&runs.ends, p, true);
    // Positions p[bin_s[i]..bin_e[i]] lie in run i.
    let cnt: Vec<usize> = bin_e.iter().zip(&bin_s).map(|(&e, &s)| e.saturating_sub(s)).collect();
    let entry = range_arange(&bin_s, &cnt);
    Hits {
        positions: entry.iter().map(|&i| p[i]).collect(),
        run_of: repeat_interleave(&kernels::arange(runs.len()), &cnt),
        entry,
    }
}

/// Picks the search direction by relative size.
pub fn positions_in_runs(p: &[usize], runs: &Runs) -> Hits {
    if runs.len() < p.len() {
        rle_contain_idx(p, runs)
    } else {
        idx_in_rle(p, runs)
    }
}

/// Matching positions of two strictly increasing lists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdxMatch {
    pub positions: Vec<usize>,
    pub idx1: Vec<usize>,
    pub idx2: Vec<usize>,
}

/// Intersection of two sorted position lists. The longer list is searched
/// into the shorter one.
pub fn idx_in_idx(a: &[usize], b: &[usize]) -> IdxMatch {
    let (x, y, swapped) = if a.len() >= b.len() { (a, b, false) } else { (b, a, true) };
    let bin = bucketize(x, y, true);
    let keep: Vec<bool> = x.iter().zip(&bin).map(|(&v, &k)| k > 0 && y[k - 1] == v).collect();
    let ix = kernels::nonzero(&keep);
    let iy: Vec<usize> = ix.iter().map(|&i| bin[i] - 1).collect();
    let positions = ix.iter().map(|&i| x[i]).collect();
    if swapped {
        IdxMatch { positions, idx1: iy, idx2: ix }
    } else {
        IdxMatch { positions, idx1: ix, idx2: iy }
    }
}

/// Canonical union of two sorted run lists; touching runs are merged.
pub fn range_union(a: &Runs, b: &Runs) -> Runs {
    let (starts, order) = merge_order(&a.starts, &b.starts);
    let ends: Vec<usize> = order
        .iter()
        .map(|&(side, i)| if side == 0 { a.ends[i] } else { b.ends[i] })
        .collect();
    merge_sorted_intervals(&starts, &ends)
}

/// Merges intervals sorted by start into canonical disjoint runs.
pub(crate) fn merge_sorted_intervals(starts: &[usize], ends: &[usize]) -> Runs {
    // A new run begins where the start exceeds every earlier end plus one.
    let mut reach: Vec<usize> = Vec::with_capacity(ends.len());
    let mut acc = 0usize;
    for (i, &e) in ends.iter().enumerate() {
        acc = if i == 0 { e } else { acc.max(e) };
        reach.push(acc);
    }
    let heads: Vec<bool> = (0..starts.len()).map(|i| i == 0 || starts[i] > reach[i - 1] + 1).collect();
    let head_idx = kernels::nonzero(&heads);
    let out_s = head_idx.iter().map(|&i| starts[i]).collect();
    let out_e = head_idx
        .iter()
        .enumerate()
        .map(|(k, _)| reach[head_idx.get(k + 1).map_or(starts.len(), |&n| n) - 1])
        .collect();
    Runs::new(out_s, out_e)
}

/// Stable merge of two sorted lists by output rank; `order` names the source
/// `(side, index)` of each output slot.
fn merge_order(a: &[usize], b: &[usize]) -> (Vec<usize>, Vec<(u8, usize)>) {
    let n = a.len() + b.len();
    let mut out = vec![0usize; n];
    let mut order = vec![(0u8, 0usize); n];
    for (i, r) in bucketize(a, b, false).into_iter().enumerate() {
        out[i + r] = a[i];
        order[i + r] = (0, i);
    }
    for (j, r) in bucketize(b, a, true).into_iter().enumerate() {
        out[j + r] = b[j];
        order[j + r] = (1, j);
    }
    (out, order)
}

/// Sorted, deduplicated union of two sorted position lists.
pub fn merge_sorted_idx(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut merged, _) = merge_order(a, b);
    merged.dedup();
    merged
}

/// Same result as [`merge_sorted_idx`] by concatenating and sorting.
pub fn concat_sort_idx(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut all = Vec::with_capacity(a.len() + b.len());
    all.extend_from_slice(a);
    all.extend_from_slice(b);
    all.sort_unstable();
    all.dedup();
    all
}

/// Gaps of `runs` within `0..total_size`.
pub fn complement_rle(runs: &Runs, total_size: usize) -> Runs {
    // Candidate gap i lies between run i-1 and run i.
    let n = runs.len();
    let mut starts = Vec::with_capacity(n + 1);
    let mut ends = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let s = if i == 0 { 0 } else { runs.ends[i - 1] + 1 };
        let e_excl = if i == n { total_size } else { runs.starts[i] };
        if s < e_excl {
            starts.push(s);
            ends.push(e_excl - 1);
        }
    }
    Runs::new(starts, ends)
}

/// Rows not listed in `p`, as runs.
pub fn complement_index(p: &[usize], total_size: usize) -> Runs {
    complement_rle(&Runs::new(p.to_vec(), p.to_vec()), total_size)
}

fn check_budget(requested: usize, budget: usize) -> Result<()> {
    if requested > budget {
        Err(Error::BudgetExceeded { requested, budget })
    } else {
        Ok(())
    }
}

pub fn rle_to_index(c: &RleColumn) -> Result<IndexColumn> {
    rle_to_index_within(c, DEFAULT_BUDGET)
}

pub fn rle_to_index_within(c: &RleColumn, budget: usize) -> Result<IndexColumn> {
    check_budget(c.runs.covered(), budget)?;
    let lengths = c.runs.lengths();
    Ok(IndexColumn {
        values: c.values.repeat(&lengths),
        positions: range_arange(&c.runs.starts, &lengths),
        total_size: c.total_size,
    })
}

pub fn rle_mask_to_index(m: &RleMask) -> Result<IndexMask> {
    check_budget(m.runs.covered(), DEFAULT_BUDGET)?;
    Ok(IndexMask::new(m.runs.positions(), m.total_size))
}

/// Expands runs to one value per row; rows outside every run take `fill`.
pub fn rle_to_plain(c: &RleColumn, fill: crate::values::Scalar) -> Result<PlainColumn> {
    rle_to_plain_within(c, fill, DEFAULT_BUDGET)
}

pub fn rle_to_plain_within(c: &RleColumn, fill: crate::values::Scalar, budget: usize) -> Result<PlainColumn> {
    check_budget(c.total_size, budget)?;
    if c.is_gapless() {
        return Ok(PlainColumn::new(c.values.repeat(&c.runs.lengths())));
    }
    Ok(PlainColumn::new(Column::Rle(c.clone()).decode_dense(fill)))
}

pub fn rle_mask_to_plain(m: &RleMask) -> Result<PlainMask> {
    check_budget(m.total_size, DEFAULT_BUDGET)?;
    let mut bits = vec![false; m.total_size];
    for (&s, &e) in m.runs.starts.iter().zip(&m.runs.ends) {
        bits[s..=e].fill(true);
    }
    Ok(PlainMask { bits })
}

/// Maximal runs of equal adjacent values.
pub fn plain_to_rle(c: &PlainColumn) -> RleColumn {
    plain_values_to_rle(&c.decoded())
}

pub(crate) fn plain_values_to_rle(values: &Values) -> RleColumn {
    let n = values.len();
    let heads: Vec<bool> = (0..n).map(|i| i == 0 || !values.eq_at(i - 1, i)).collect();
    let starts = kernels::nonzero(&heads);
    let ends = starts
        .iter()
        .skip(1)
        .map(|&s| s - 1)
        .chain(if n > 0 { Some(n - 1) } else { None })
        .collect();
    RleColumn { values: values.select(&heads), runs: Runs::new(starts, ends), total_size: n }
}

/// Maximal runs of true bits.
pub fn plain_mask_to_rle(m: &PlainMask) -> RleMask {
    let bits = &m.bits;
    let n = bits.len();
    let starts = (0..n).filter(|&i| bits[i] && (i == 0 || !bits[i - 1])).collect();
    let ends = (0..n).filter(|&i| bits[i] && (i + 1 == n || !bits[i + 1])).collect();
    RleMask::new(starts, ends, n)
}

/// Runs of at least `min_run` rows stay runs; everything else becomes points.
pub fn plain_to_rle_index(c: &PlainColumn, min_run: usize) -> Result<RleIndexColumn> {
    if min_run < 2 {
        return Err(Error::invalid("min_run must be at least 2"));
    }
    Ok(split_runs(&plain_to_rle(c), min_run))
}

/// Splits the runs of `c` by length into long runs and unit points.
pub(crate) fn split_runs(rle: &RleColumn, min_run: usize) -> RleIndexColumn {
    let lengths = rle.runs.lengths();
    let long: Vec<bool> = lengths.iter().map(|&l| l >= min_run).collect();
    let short: Vec<bool> = long.iter().map(|&b| !b).collect();
    let short_runs = rle.runs.select(&short);
    let short_len: Vec<usize> = kernels::select(&lengths, &short);
    RleIndexColumn {
        runs: RleColumn { values: rle.values.select(&long), runs: rle.runs.select(&long), total_size: rle.total_size },
        points: IndexColumn {
            values: rle.values.select(&short).repeat(&short_len),
            positions: range_arange(&short_runs.starts, &short_len),
            total_size: rle.total_size,
        },
    }
}

/// Stores the bulk of an integer column narrowly and the tails as outliers.
///
/// The kept range is read off the sorted values at ranks `floor(trim * n)`
/// and `n - 1 - floor(trim * n)`. The base type is the narrowest one holding
/// that range, centred on its midpoint when centring saves width. Every value
/// the base type can hold stays in the base.
pub fn plain_to_plain_index(c: &PlainColumn, trim_fraction: f64) -> Result<PlainIndexColumn> {
    if !(0.0..0.5).contains(&trim_fraction) {
        return Err(Error::invalid("trim fraction must lie in [0, 0.5)"));
    }
    let decoded = c.decoded();
    let Some(vals) = decoded.to_i64_vec() else {
        return Err(Error::TypeMismatch("plain+index requires integer values".into()));
    };
    let n = vals.len();
    let logical = decoded.dtype();
    if n == 0 {
        return Ok(PlainIndexColumn {
            base: PlainColumn::new(Values::empty(DType::I8)),
            outliers: IndexColumn::empty(logical, 0),
        });
    }
    let mut sorted = vals.clone();
    sorted.sort_unstable();
    let k = (trim_fraction * n as f64).floor() as usize;
    let (lo, hi) = (sorted[k], sorted[n - 1 - k]);
    let (width, center) = narrow_layout(lo, hi);
    let (min, max) = width.int_range().unwrap();
    let fits = |v: i64| v.checked_sub(center).is_some_and(|d| d >= min && d <= max);
    let outlier: Vec<bool> = vals.iter().map(|&v| !fits(v)).collect();
    let stored: Vec<i64> = vals.iter().zip(&outlier).map(|(&v, &o)| if o { 0 } else { v - center }).collect();
    let base_values = Values::I64(stored).cast(width)?;
    let base = if center == 0 {
        PlainColumn { values: base_values, center: None, logical }
    } else {
        PlainColumn::centered(base_values, center, logical)
    };
    let positions = kernels::nonzero(&outlier);
    let values = decoded.gather(&positions);
    let outlier_dtype = values.min_max_i64().map_or(DType::I8, |(a, b)| DType::narrowest_for(a, b));
    Ok(PlainIndexColumn {
        base,
        outliers: IndexColumn { values: values.cast(outlier_dtype)?, positions, total_size: n },
    })
}

/// Narrowest stored type for `[lo, hi]`, and the centre that achieves it.
pub(crate) fn narrow_layout(lo: i64, hi: i64) -> (DType, i64) {
    let raw = DType::narrowest_for(lo, hi);
    let center = lo / 2 + hi / 2 + (lo % 2 + hi % 2) / 2;
    match (lo.checked_sub(center), hi.checked_sub(center)) {
        (Some(a), Some(b)) if DType::narrowest_for(a, b).width() < raw.width() => (DType::narrowest_for(a, b), center),
        _ => (raw, 0),
    }
}

/// Renumbers covered rows densely, preserving order.
pub fn compact_rle(c: &RleColumn) -> RleColumn {
    let lengths = c.runs.lengths();
    let starts = cumsum(&lengths, true).expect("lengths fit usize");
    let ends = starts.iter().zip(&lengths).map(|(&s, &l)| s + l - 1).collect();
    RleColumn { values: c.values.clone(), runs: Runs::new(starts, ends), total_size: c.runs.covered() }
}

/// Renumbers covered rows of a run+point column densely.
pub fn compact_rle_index(c: &RleIndexColumn) -> Column {
    let lengths = c.runs.runs.lengths();
    let run_before = cumsum(&lengths, true).expect("lengths fit usize");
    let run_incl = cumsum(&lengths, false).expect("lengths fit usize");
    let pts = &c.points.positions;
    // Rows before run i: earlier run rows plus points left of its start.
    let starts: Vec<usize> = bucketize(&c.runs.runs.starts, pts, false)
        .into_iter()
        .zip(&run_before)
        .map(|(np, &r)| np + r)
        .collect();
    let ends = starts.iter().zip(&lengths).map(|(&s, &l)| s + l - 1).collect();
    let positions = bucketize(pts, &c.runs.runs.starts, true)
        .into_iter()
        .enumerate()
        .map(|(j, k)| j + if k == 0 { 0 } else { run_incl[k - 1] })
        .collect();
    let total = c.runs.runs.covered() + pts.len();
    Column::RleIndex(RleIndexColumn {
        runs: RleColumn { values: c.runs.values.clone(), runs: Runs::new(starts, ends), total_size: total },
        points: IndexColumn { values: c.points.values.clone(), positions, total_size: total },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::values::Scalar;

    fn runs(s: &[usize], e: &[usize]) -> Runs {
        Runs::new(s.to_vec(), e.to_vec())
    }

    #[test]
    fn intersect_fixture() {
        let r = range_intersect(&runs(&[2], &[7]), &runs(&[1, 4, 6], &[3, 5, 8]));
        assert_eq!(r.runs, runs(&[2, 4, 6], &[3, 5, 7]));
        assert_eq!(r.idx1, vec![0, 0, 0]);
        assert_eq!(r.idx2, vec![0, 1, 2]);
        let swapped = range_intersect(&runs(&[1, 4, 6], &[3, 5, 8]), &runs(&[2], &[7]));
        assert_eq!(swapped.runs, r.runs);
        assert_eq!(swapped.idx1, vec![0, 1, 2]);
        assert_eq!(swapped.idx2, vec![0, 0, 0]);
    }

    #[test]
    fn intersect_identity_and_disjoint() {
        let a = runs(&[0, 5, 9], &[2, 7, 9]);
        let r = range_intersect(&a, &a);
        assert_eq!(r.runs, a);
        assert_eq!(r.idx1, vec![0, 1, 2]);
        assert_eq!(r.idx2, vec![0, 1, 2]);
        assert!(range_intersect(&runs(&[0], &[1]), &runs(&[5], &[9])).runs.is_empty());
    }

    #[test]
    fn index_membership_fixture() {
        let r = runs(&[0, 6], &[2, 7]);
        let a = idx_in_rle(&[2, 4, 7], &r);
        let b = rle_contain_idx(&[2, 4, 7], &r);
        assert_eq!(a.positions, vec![2, 7]);
        assert_eq!(a, b);
        assert_eq!(a.run_of, vec![0, 1]);
        assert!(rle_contain_idx(&[1, 2], &Runs::default()).positions.is_empty());
    }

    #[test]
    fn index_intersection_and_union() {
        let m = idx_in_idx(&[1, 3, 5], &[3, 5, 7]);
        assert_eq!(m.positions, vec![3, 5]);
        assert_eq!(m.idx1, vec![1, 2]);
        assert_eq!(m.idx2, vec![0, 1]);
        assert_eq!(merge_sorted_idx(&[1, 4], &[2, 4]), vec![1, 2, 4]);
        assert_eq!(concat_sort_idx(&[1, 4], &[2, 4]), vec![1, 2, 4]);
    }

    #[test]
    fn union_merges_touching() {
        assert_eq!(range_union(&runs(&[0], &[2]), &runs(&[3], &[5])), runs(&[0], &[5]));
        let x = runs(&[1, 6], &[3, 8]);
        assert_eq!(range_union(&x, &x), x);
        assert_eq!(range_union(&x, &Runs::default()), x);
    }

    #[test]
    fn complements() {
        assert_eq!(complement_rle(&runs(&[0, 4], &[1, 6]), 8), runs(&[2, 7], &[3, 7]));
        assert_eq!(complement_index(&[2, 5], 8), runs(&[0, 3, 6], &[1, 4, 7]));
        assert_eq!(complement_rle(&Runs::default(), 5), runs(&[0], &[4]));
        assert!(complement_rle(&runs(&[0], &[4]), 5).is_empty());
    }

    #[test]
    fn conversions() {
        let rle = RleColumn::new(vec![1i32, 2], vec![0, 4], vec![1, 5], 8);
        assert_eq!(rle_to_index(&rle).unwrap().positions, vec![0, 1, 4, 5]);
        let mask = RleMask::new(vec![0, 4], vec![1, 6], 8);
        assert_eq!(
            rle_mask_to_plain(&mask).unwrap().bits,
            vec![true, true, false, false, true, true, true, false]
        );
        let plain = rle_to_plain(&rle, Scalar::Int(0)).unwrap();
        assert_eq!(plain.values, Values::I32(vec![1, 1, 0, 0, 2, 2, 0, 0]));
        assert!(matches!(rle_to_index_within(&rle, 3), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn plain_to_rle_fixture() {
        let rle = plain_to_rle(&PlainColumn::new(vec![0i32, 0, 0, 0, 1, 1, 1]));
        assert_eq!(rle.values, Values::I32(vec![0, 1]));
        assert_eq!(rle.runs, runs(&[0, 4], &[3, 6]));
    }

    #[test]
    fn plain_to_rle_index_fixture() {
        let c = plain_to_rle_index(&PlainColumn::new(vec![0i32, 0, 0, 0, 1, 2, 3]), 2).unwrap();
        assert_eq!(c.runs.values, Values::I32(vec![0]));
        assert_eq!(c.runs.runs, runs(&[0], &[3]));
        assert_eq!(c.points.values, Values::I32(vec![1, 2, 3]));
        assert_eq!(c.points.positions, vec![4, 5, 6]);
    }

    #[test]
    fn plain_index_fixture() {
        let big = 10_000_000_000i64;
        let c = plain_to_plain_index(&PlainColumn::new(vec![1i64, 2, 3, big, big]), 0.4).unwrap();
        assert_eq!(c.base.values, Values::I8(vec![1, 2, 3, 0, 0]));
        assert_eq!(c.outliers.positions, vec![3, 4]);
        assert_eq!(c.outliers.values, Values::I64(vec![big, big]));
        assert_eq!(c.decoded(), Values::I64(vec![1, 2, 3, big, big]));
    }

    #[test]
    fn plain_index_all_equal_centres() {
        let c = plain_to_plain_index(&PlainColumn::new(vec![70_000i32; 10]), 0.05).unwrap();
        assert_eq!(c.base.values.dtype(), DType::I8);
        assert!(c.outliers.is_empty());
    }

    #[test]
    fn compaction() {
        let c = compact_rle(&RleColumn::new(vec![7i32, 8], vec![2, 7], vec![3, 7], 9));
        assert_eq!(c.runs, runs(&[0, 2], &[1, 2]));
        assert_eq!(c.total_size, 3);
        let ri = RleIndexColumn {
            runs: RleColumn::new(vec![7i32], vec![4], vec![6], 10),
            points: IndexColumn::new(vec![1i32, 2, 3], vec![1, 2, 9], 10),
        };
        let Column::RleIndex(k) = compact_rle_index(&ri) else { panic!() };
        assert_eq!(k.runs.runs, runs(&[2], &[4]));
        assert_eq!(k.points.positions, vec![0, 1, 5]);
        assert_eq!(k.runs.total_size, 6);
    }
}

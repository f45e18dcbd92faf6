//! Encoded data columns and boolean mask columns.
//!
//! Every column lives in a logical row space `0..total_size`. Plain columns
//! map row `i` to slot `i` and so cannot have gaps. Run-length and index
//! columns name their rows explicitly, which lets them represent a column
//! after a filter without compacting it.
//!
//! Masks follow the same shapes, except that position-explicit masks only
//! record the rows that are true and carry no value array.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::kernels;
use crate::values::{DType, Scalar, Values};

/// Sorted, non-overlapping closed row intervals `[starts[i], ends[i]]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Runs {
    pub starts: Vec<usize>,
    pub ends: Vec<usize>,
}

impl Runs {
    pub fn new(starts: Vec<usize>, ends: Vec<usize>) -> Self {
        debug_assert_eq!(starts.len(), ends.len());
        Runs { starts, ends }
    }

    pub fn single(start: usize, end: usize) -> Self {
        Runs::new(vec![start], vec![end])
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// `e - s + 1` per run.
    pub fn lengths(&self) -> Vec<usize> {
        self.starts.iter().zip(&self.ends).map(|(s, e)| e - s + 1).collect()
    }

    /// Number of rows inside the runs.
    pub fn covered(&self) -> usize {
        self.starts.iter().zip(&self.ends).map(|(s, e)| e - s + 1).sum()
    }

    /// Every covered row, ascending.
    pub fn positions(&self) -> Vec<usize> {
        kernels::range_arange(&self.starts, &self.lengths())
    }

    pub fn select(&self, keep: &[bool]) -> Runs {
        Runs::new(kernels::select(&self.starts, keep), kernels::select(&self.ends, keep))
    }

    pub fn gather(&self, index: &[usize]) -> Runs {
        Runs::new(
            index.iter().map(|&i| self.starts[i]).collect(),
            index.iter().map(|&i| self.ends[i]).collect(),
        )
    }

    /// Merges runs that touch (`e_i + 1 == s_{i+1}`).
    pub fn merge_adjacent(&self) -> Runs {
        let keep = self.run_heads(|_, _| true);
        self.merge_where(&keep)
    }

    /// `heads[i]` is true when run `i` starts a new merged run. Runs touching
    /// their predecessor are folded into it when `same(i - 1, i)` holds.
    pub(crate) fn run_heads(&self, same: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        (0..self.len())
            .map(|i| i == 0 || self.ends[i - 1] + 1 != self.starts[i] || !same(i - 1, i))
            .collect()
    }

    pub(crate) fn merge_where(&self, heads: &[bool]) -> Runs {
        let head_idx = kernels::nonzero(heads);
        let starts = head_idx.iter().map(|&i| self.starts[i]).collect();
        let ends = head_idx
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let last = head_idx.get(k + 1).map_or(self.len(), |&n| n) - 1;
                self.ends[last]
            })
            .collect();
        Runs::new(starts, ends)
    }

    pub fn byte_len(&self, position_width: usize) -> usize {
        2 * self.len() * position_width
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Plain,
    Rle,
    Index,
    PlainIndex,
    RleIndex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskEncoding {
    Plain,
    Rle,
    Index,
    Composite,
}

/// One value per row; decoded value is `stored + center`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlainColumn {
    pub values: Values,
    pub center: Option<i64>,
    /// Type of the decoded values.
    pub logical: DType,
}

impl PlainColumn {
    pub fn new(values: impl Into<Values>) -> Self {
        let values = values.into();
        let logical = values.dtype();
        PlainColumn { values, center: None, logical }
    }

    pub fn centered(values: Values, center: i64, logical: DType) -> Self {
        PlainColumn { values, center: Some(center), logical }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn decoded(&self) -> Values {
        match self.center {
            None | Some(0) if self.values.dtype() == self.logical => self.values.clone(),
            None | Some(0) => self.values.cast(self.logical).unwrap_or_else(|_| self.values.clone()),
            Some(c) => {
                let wide = self.values.offset_i64(c).expect("centered values overflow i64");
                wide.cast(self.logical).unwrap_or(wide)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RleColumn {
    pub values: Values,
    pub runs: Runs,
    pub total_size: usize,
}

impl RleColumn {
    pub fn new(values: impl Into<Values>, starts: Vec<usize>, ends: Vec<usize>, total_size: usize) -> Self {
        RleColumn { values: values.into(), runs: Runs::new(starts, ends), total_size }
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Same rows and values, with touching equal-valued runs merged.
    pub fn canonical(&self) -> RleColumn {
        let heads = self.runs.run_heads(|a, b| self.values.eq_at(a, b));
        let runs = self.runs.merge_where(&heads);
        let values = self.values.select(&heads);
        RleColumn { values, runs, total_size: self.total_size }
    }

    pub fn is_gapless(&self) -> bool {
        self.runs.covered() == self.total_size
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexColumn {
    pub values: Values,
    pub positions: Vec<usize>,
    pub total_size: usize,
}

impl IndexColumn {
    pub fn new(values: impl Into<Values>, positions: Vec<usize>, total_size: usize) -> Self {
        IndexColumn { values: values.into(), positions, total_size }
    }

    pub fn empty(dtype: DType, total_size: usize) -> Self {
        IndexColumn { values: Values::empty(dtype), positions: Vec::new(), total_size }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Narrow base array with wide outliers kept aside. Base slots at outlier
/// rows hold a stored 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PlainIndexColumn {
    pub base: PlainColumn,
    pub outliers: IndexColumn,
}

impl PlainIndexColumn {
    pub fn total_size(&self) -> usize {
        self.base.len()
    }

    pub fn logical(&self) -> DType {
        self.base.logical.promote(self.outliers.values.dtype())
    }

    /// Dense decoded values with outliers patched in.
    pub fn decoded(&self) -> Values {
        let mut dense = self.base.decoded().cast(self.logical()).expect("promotion is lossless");
        patch(&mut dense, &self.outliers.positions, &self.outliers.values);
        dense
    }
}

/// Writes `values[k]` into `dense[positions[k]]`; `dense` must be wide enough.
pub(crate) fn patch(dense: &mut Values, positions: &[usize], values: &Values) {
    match dense {
        Values::F64(d) => positions.iter().zip(values.iter_f64()).for_each(|(&p, v)| d[p] = v),
        Values::I64(d) => positions.iter().zip(values.iter_i64()).for_each(|(&p, v)| d[p] = v),
        Values::I32(d) => positions.iter().zip(values.iter_i64()).for_each(|(&p, v)| d[p] = v as i32),
        Values::I16(d) => positions.iter().zip(values.iter_i64()).for_each(|(&p, v)| d[p] = v as i16),
        Values::I8(d) => positions.iter().zip(values.iter_i64()).for_each(|(&p, v)| d[p] = v as i8),
    }
}

/// Pure segments as runs, impure rows as points; the two never share a row.
#[derive(Clone, Debug, PartialEq)]
pub struct RleIndexColumn {
    pub runs: RleColumn,
    pub points: IndexColumn,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Plain(PlainColumn),
    Rle(RleColumn),
    Index(IndexColumn),
    PlainIndex(PlainIndexColumn),
    RleIndex(RleIndexColumn),
}

impl Column {
    pub fn plain(values: impl Into<Values>) -> Column {
        Column::Plain(PlainColumn::new(values))
    }

    pub fn encoding(&self) -> Encoding {
        match self {
            Column::Plain(_) => Encoding::Plain,
            Column::Rle(_) => Encoding::Rle,
            Column::Index(_) => Encoding::Index,
            Column::PlainIndex(_) => Encoding::PlainIndex,
            Column::RleIndex(_) => Encoding::RleIndex,
        }
    }

    pub fn total_size(&self) -> usize {
        match self {
            Column::Plain(c) => c.len(),
            Column::Rle(c) => c.total_size,
            Column::Index(c) => c.total_size,
            Column::PlainIndex(c) => c.total_size(),
            Column::RleIndex(c) => c.runs.total_size,
        }
    }

    /// Type of the decoded values.
    pub fn dtype(&self) -> DType {
        match self {
            Column::Plain(c) => c.logical,
            Column::Rle(c) => c.values.dtype(),
            Column::Index(c) => c.values.dtype(),
            Column::PlainIndex(c) => c.logical(),
            Column::RleIndex(c) => c.runs.values.dtype().promote(c.points.values.dtype()),
        }
    }

    /// Number of rows holding a value.
    pub fn covered(&self) -> usize {
        match self {
            Column::Plain(c) => c.len(),
            Column::Rle(c) => c.runs.covered(),
            Column::Index(c) => c.len(),
            Column::PlainIndex(c) => c.total_size(),
            Column::RleIndex(c) => c.runs.runs.covered() + c.points.len(),
        }
    }

    pub fn is_gapless(&self) -> bool {
        self.covered() == self.total_size()
    }

    /// Number of entries in the value arrays: rows, runs or points.
    pub fn entries(&self) -> usize {
        match self {
            Column::Plain(c) => c.len(),
            Column::Rle(c) => c.len(),
            Column::Index(c) => c.len(),
            Column::PlainIndex(c) => c.total_size(),
            Column::RleIndex(c) => c.runs.len() + c.points.len(),
        }
    }

    /// Covered rows in ascending order and the value at each.
    pub fn materialize(&self) -> (Vec<usize>, Values) {
        match self {
            Column::Plain(c) => (kernels::arange(c.len()), c.decoded()),
            Column::Rle(c) => (c.runs.positions(), c.values.repeat(&c.runs.lengths())),
            Column::Index(c) => (c.positions.clone(), c.values.clone()),
            Column::PlainIndex(c) => (kernels::arange(c.total_size()), c.decoded()),
            Column::RleIndex(c) => {
                let run_rows = c.runs.runs.positions();
                let run_vals = c.runs.values.repeat(&c.runs.runs.lengths());
                merge_disjoint(&run_rows, &run_vals, &c.points.positions, &c.points.values)
            }
        }
    }

    /// Dense values over `0..total_size`, with `fill` in the gaps.
    pub fn decode_dense(&self, fill: Scalar) -> Values {
        match self {
            Column::Plain(c) => c.decoded(),
            Column::PlainIndex(c) => c.decoded(),
            _ => {
                let (pos, vals) = self.materialize();
                let dtype = match fill {
                    Scalar::Float(_) => DType::F64,
                    Scalar::Int(f) => vals.dtype().promote(DType::narrowest_for(f, f)),
                };
                let mut dense = Values::filled(fill, self.total_size()).cast(dtype).expect("fill fits its promoted type");
                patch(&mut dense, &pos, &vals);
                dense
            }
        }
    }

    /// Decodes a gapless column to Plain.
    pub fn to_plain(&self) -> Result<PlainColumn> {
        if let Column::Plain(c) = self {
            if c.center.is_none() {
                return Ok(c.clone());
            }
        }
        Ok(PlainColumn::new(self.decoded()?))
    }

    /// One value per row of a gapless column, at the decoded type.
    pub fn decoded(&self) -> Result<Values> {
        if !self.is_gapless() {
            return Err(Error::invalid("column has gaps and cannot be decoded to Plain"));
        }
        Ok(match self {
            Column::Plain(c) => c.decoded(),
            Column::PlainIndex(c) => c.decoded(),
            // Gapless runs tile the rows in order.
            Column::Rle(c) => c.values.repeat(&c.runs.lengths()),
            Column::Index(c) => c.values.clone(),
            Column::RleIndex(_) => self.decode_dense(Scalar::Int(0)),
        })
    }

    /// Merges touching equal-valued runs where the encoding has any.
    pub fn canonical(&self) -> Column {
        match self {
            Column::Rle(c) => Column::Rle(c.canonical()),
            Column::RleIndex(c) => Column::RleIndex(RleIndexColumn {
                runs: c.runs.canonical(),
                points: c.points.clone(),
            }),
            other => other.clone(),
        }
    }
}

/// Merges two disjoint ascending (position, value) lists.
pub(crate) fn merge_disjoint(
    pa: &[usize],
    va: &Values,
    pb: &[usize],
    vb: &Values,
) -> (Vec<usize>, Values) {
    let n = pa.len() + pb.len();
    // Slot of each element in the merged output, from its rank in the other list.
    let slot_a: Vec<usize> = kernels::bucketize(pa, pb, false)
        .into_iter()
        .enumerate()
        .map(|(i, r)| i + r)
        .collect();
    let slot_b: Vec<usize> = kernels::bucketize(pb, pa, false)
        .into_iter()
        .enumerate()
        .map(|(j, r)| j + r)
        .collect();
    let mut order = vec![0usize; n];
    let mut positions = vec![0usize; n];
    for (i, &s) in slot_a.iter().enumerate() {
        order[s] = i;
        positions[s] = pa[i];
    }
    for (j, &s) in slot_b.iter().enumerate() {
        order[s] = pa.len() + j;
        positions[s] = pb[j];
    }
    let all = Values::concat(&[va, vb]);
    (positions, all.gather(&order))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainMask {
    pub bits: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RleMask {
    pub runs: Runs,
    pub total_size: usize,
}

impl RleMask {
    pub fn new(starts: Vec<usize>, ends: Vec<usize>, total_size: usize) -> Self {
        RleMask { runs: Runs::new(starts, ends), total_size }
    }

    pub fn empty(total_size: usize) -> Self {
        RleMask { runs: Runs::default(), total_size }
    }

    pub fn full(total_size: usize) -> Self {
        if total_size == 0 {
            RleMask::empty(0)
        } else {
            RleMask { runs: Runs::single(0, total_size - 1), total_size }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexMask {
    pub positions: Vec<usize>,
    pub total_size: usize,
}

impl IndexMask {
    pub fn new(positions: Vec<usize>, total_size: usize) -> Self {
        IndexMask { positions, total_size }
    }
}

/// True where either the runs or the points are; the two are disjoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositeMask {
    pub runs: RleMask,
    pub points: IndexMask,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaskColumn {
    Plain(PlainMask),
    Rle(RleMask),
    Index(IndexMask),
    Composite(CompositeMask),
}

impl MaskColumn {
    pub fn plain(bits: Vec<bool>) -> MaskColumn {
        MaskColumn::Plain(PlainMask { bits })
    }

    pub fn rle(starts: Vec<usize>, ends: Vec<usize>, total_size: usize) -> MaskColumn {
        MaskColumn::Rle(RleMask::new(starts, ends, total_size))
    }

    pub fn index(positions: Vec<usize>, total_size: usize) -> MaskColumn {
        MaskColumn::Index(IndexMask::new(positions, total_size))
    }

    pub fn composite(runs: RleMask, points: IndexMask) -> MaskColumn {
        MaskColumn::Composite(CompositeMask { runs, points })
    }

    pub fn full(total_size: usize) -> MaskColumn {
        MaskColumn::Rle(RleMask::full(total_size))
    }

    pub fn none(total_size: usize) -> MaskColumn {
        MaskColumn::Rle(RleMask::empty(total_size))
    }

    pub fn encoding(&self) -> MaskEncoding {
        match self {
            MaskColumn::Plain(_) => MaskEncoding::Plain,
            MaskColumn::Rle(_) => MaskEncoding::Rle,
            MaskColumn::Index(_) => MaskEncoding::Index,
            MaskColumn::Composite(_) => MaskEncoding::Composite,
        }
    }

    pub fn total_size(&self) -> usize {
        match self {
            MaskColumn::Plain(m) => m.bits.len(),
            MaskColumn::Rle(m) => m.total_size,
            MaskColumn::Index(m) => m.total_size,
            MaskColumn::Composite(m) => m.runs.total_size,
        }
    }

    pub fn count_true(&self) -> usize {
        match self {
            MaskColumn::Plain(m) => m.bits.iter().filter(|&&b| b).count(),
            MaskColumn::Rle(m) => m.runs.covered(),
            MaskColumn::Index(m) => m.positions.len(),
            MaskColumn::Composite(m) => m.runs.runs.covered() + m.points.positions.len(),
        }
    }

    /// True rows in ascending order.
    pub fn true_positions(&self) -> Vec<usize> {
        match self {
            MaskColumn::Plain(m) => kernels::nonzero(&m.bits),
            MaskColumn::Rle(m) => m.runs.positions(),
            MaskColumn::Index(m) => m.positions.clone(),
            MaskColumn::Composite(m) => {
                let mut all = m.runs.runs.positions();
                all.extend_from_slice(&m.points.positions);
                all.sort_unstable();
                all
            }
        }
    }

    pub fn to_bits(&self) -> Vec<bool> {
        if let MaskColumn::Plain(m) = self {
            return m.bits.clone();
        }
        let mut bits = vec![false; self.total_size()];
        for p in self.true_positions() {
            bits[p] = true;
        }
        bits
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Invariant {
    /// Parallel arrays differ in length.
    ArrayLengths,
    StartAfterEnd,
    /// A run or position does not come strictly after its predecessor.
    Overlap,
    NonStrictPosition,
    OutOfBounds,
    /// A composite point falls inside one of its runs.
    PointInRun,
    BaseLength,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub invariant: Invariant,
    pub index: usize,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} at i={}", self.invariant, self.index)
    }
}

/// Structural checks; an empty list means the value is well formed.
pub trait Validate {
    fn validate(&self) -> Vec<Violation>;
}

fn check_runs(runs: &Runs, total_size: usize, out: &mut Vec<Violation>) {
    if runs.starts.len() != runs.ends.len() {
        out.push(Violation { invariant: Invariant::ArrayLengths, index: 0 });
        return;
    }
    for i in 0..runs.len() {
        if runs.starts[i] > runs.ends[i] {
            out.push(Violation { invariant: Invariant::StartAfterEnd, index: i });
        }
        if i + 1 < runs.len() && runs.starts[i + 1] <= runs.ends[i] {
            out.push(Violation { invariant: Invariant::Overlap, index: i });
        }
    }
    if runs.ends.last().is_some_and(|&e| e >= total_size) {
        out.push(Violation { invariant: Invariant::OutOfBounds, index: runs.len() - 1 });
    }
}

fn check_positions(positions: &[usize], total_size: usize, out: &mut Vec<Violation>) {
    for i in 1..positions.len() {
        if positions[i] <= positions[i - 1] {
            out.push(Violation { invariant: Invariant::NonStrictPosition, index: i });
        }
    }
    if positions.last().is_some_and(|&p| p >= total_size) {
        out.push(Violation { invariant: Invariant::OutOfBounds, index: positions.len() - 1 });
    }
}

fn check_disjoint(runs: &Runs, positions: &[usize], out: &mut Vec<Violation>) {
    let bins = kernels::bucketize(positions, &runs.starts, true);
    for (i, (&p, &b)) in positions.iter().zip(&bins).enumerate() {
        if b > 0 && p <= runs.ends[b - 1] {
            out.push(Violation { invariant: Invariant::PointInRun, index: i });
        }
    }
}

impl Validate for Column {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            Column::Plain(_) => {}
            Column::Rle(c) => {
                if c.values.len() != c.runs.len() {
                    out.push(Violation { invariant: Invariant::ArrayLengths, index: 0 });
                }
                check_runs(&c.runs, c.total_size, &mut out);
            }
            Column::Index(c) => {
                if c.values.len() != c.positions.len() {
                    out.push(Violation { invariant: Invariant::ArrayLengths, index: 0 });
                }
                check_positions(&c.positions, c.total_size, &mut out);
            }
            Column::PlainIndex(c) => {
                if c.outliers.total_size != c.base.len() {
                    out.push(Violation { invariant: Invariant::BaseLength, index: 0 });
                }
                out.extend(Column::Index(c.outliers.clone()).validate());
            }
            Column::RleIndex(c) => {
                if c.runs.total_size != c.points.total_size {
                    out.push(Violation { invariant: Invariant::BaseLength, index: 0 });
                }
                out.extend(Column::Rle(c.runs.clone()).validate());
                out.extend(Column::Index(c.points.clone()).validate());
                check_disjoint(&c.runs.runs, &c.points.positions, &mut out);
            }
        }
        out
    }
}

impl Validate for MaskColumn {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            MaskColumn::Plain(_) => {}
            MaskColumn::Rle(m) => check_runs(&m.runs, m.total_size, &mut out),
            MaskColumn::Index(m) => check_positions(&m.positions, m.total_size, &mut out),
            MaskColumn::Composite(m) => {
                if m.runs.total_size != m.points.total_size {
                    out.push(Violation { invariant: Invariant::BaseLength, index: 0 });
                }
                check_runs(&m.runs.runs, m.runs.total_size, &mut out);
                check_positions(&m.points.positions, m.points.total_size, &mut out);
                check_disjoint(&m.runs.runs, &m.points.positions, &mut out);
            }
        }
        out
    }
}

pub const DEFAULT_POSITION_WIDTH: usize = 8;

/// Byte widths used for size accounting. `value: None` uses each array's
/// stored width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Widths {
    pub value: Option<usize>,
    pub position: usize,
}

impl Default for Widths {
    fn default() -> Self {
        Widths { value: None, position: DEFAULT_POSITION_WIDTH }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub encoding: Encoding,
    pub total_size: usize,
    pub n_runs: usize,
    pub avg_run_length: f64,
    pub encoded_bytes: usize,
    pub plain_bytes: usize,
    pub compression_ratio: f64,
}

pub fn stats(col: &Column) -> ColumnStats {
    stats_with(col, Widths::default())
}

/// Run counts and byte sizes. Plain columns report the runs a run-length
/// encoding of them would have.
pub fn stats_with(col: &Column, widths: Widths) -> ColumnStats {
    let vw = |v: &Values| widths.value.unwrap_or(v.width());
    let pw = widths.position;
    let (n_runs, encoded_bytes) = match col {
        Column::Plain(c) => (count_runs(&c.values), c.len() * vw(&c.values)),
        Column::Rle(c) => (c.len(), c.len() * (vw(&c.values) + 2 * pw)),
        Column::Index(c) => (c.len(), c.len() * (vw(&c.values) + pw)),
        Column::PlainIndex(c) => (
            count_runs(&c.decoded()),
            c.base.len() * vw(&c.base.values) + c.outliers.len() * (vw(&c.outliers.values) + pw),
        ),
        Column::RleIndex(c) => (
            c.runs.len() + c.points.len(),
            c.runs.len() * (vw(&c.runs.values) + 2 * pw) + c.points.len() * (vw(&c.points.values) + pw),
        ),
    };
    let plain_width = widths.value.unwrap_or(col.dtype().width());
    let plain_bytes = col.total_size() * plain_width;
    let covered = col.covered();
    ColumnStats {
        encoding: col.encoding(),
        total_size: col.total_size(),
        n_runs,
        avg_run_length: if n_runs == 0 { 0.0 } else { covered as f64 / n_runs as f64 },
        encoded_bytes,
        plain_bytes,
        compression_ratio: if encoded_bytes == 0 { 0.0 } else { plain_bytes as f64 / encoded_bytes as f64 },
    }
}

/// Number of maximal runs of equal adjacent values.
pub fn count_runs(values: &Values) -> usize {
    if values.is_empty() {
        return 0;
    }
    1 + (1..values.len()).filter(|&i| !values.eq_at(i - 1, i)).count()
}

/// Writes a one-line JSON header followed by the little-endian arrays.
///
/// Positions are written as `u64`, so the array bytes equal
/// `stats(col).encoded_bytes`.
pub fn write_dump<W: Write>(col: &Column, w: &mut W) -> Result<()> {
    let arrays = dump_arrays(col);
    let header = json!({
        "encoding": col.encoding(),
        "total_size": col.total_size(),
        "widths": {
            "value": arrays.iter().find_map(|a| match a.1 { DumpArray::Values(v) => Some(v.width()), _ => None }),
            "position": DEFAULT_POSITION_WIDTH,
        },
        "center": match col {
            Column::Plain(c) => c.center,
            Column::PlainIndex(c) => c.base.center,
            _ => None,
        },
        "logical": match col {
            Column::Plain(c) => Some(c.logical),
            Column::PlainIndex(c) => Some(c.base.logical),
            _ => None,
        },
        "arrays": arrays.iter().map(|(name, a)| match a {
            DumpArray::Values(v) => json!({"name": name, "dtype": v.dtype(), "len": v.len()}),
            DumpArray::Positions(p) => json!({"name": name, "dtype": "u64", "len": p.len()}),
        }).collect::<Vec<_>>(),
    });
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")?;
    for (_, a) in &arrays {
        match a {
            DumpArray::Values(v) => v.write_le(w)?,
            DumpArray::Positions(p) => {
                for &x in *p {
                    w.write_all(&(x as u64).to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

enum DumpArray<'a> {
    Values(&'a Values),
    Positions(&'a [usize]),
}

fn dump_arrays(col: &Column) -> Vec<(&'static str, DumpArray<'_>)> {
    use DumpArray::*;
    match col {
        Column::Plain(c) => vec![("v", Values(&c.values))],
        Column::Rle(c) => vec![
            ("v", Values(&c.values)),
            ("s", Positions(&c.runs.starts)),
            ("e", Positions(&c.runs.ends)),
        ],
        Column::Index(c) => vec![("v", Values(&c.values)), ("p", Positions(&c.positions))],
        Column::PlainIndex(c) => vec![
            ("base", Values(&c.base.values)),
            ("outlier_v", Values(&c.outliers.values)),
            ("outlier_p", Positions(&c.outliers.positions)),
        ],
        Column::RleIndex(c) => vec![
            ("run_v", Values(&c.runs.values)),
            ("run_s", Positions(&c.runs.runs.starts)),
            ("run_e", Positions(&c.runs.runs.ends)),
            ("point_v", Values(&c.points.values)),
            ("point_p", Positions(&c.points.positions)),
        ],
    }
}

#[derive(Deserialize)]
struct DumpHeader {
    encoding: Encoding,
    total_size: usize,
    center: Option<i64>,
    logical: Option<DType>,
    arrays: Vec<DumpArrayHeader>,
}

#[derive(Deserialize)]
struct DumpArrayHeader {
    dtype: String,
    len: usize,
}

/// Reads a column written by [`write_dump`].
pub fn read_dump<R: BufRead>(r: &mut R) -> Result<Column> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: DumpHeader = serde_json::from_str(line.trim_end())?;
    let mut arrays = Vec::new();
    for a in &header.arrays {
        if a.dtype == "u64" {
            let mut buf = vec![0u8; a.len * 8];
            r.read_exact(&mut buf)?;
            let pos: Vec<usize> = buf
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
                .collect();
            arrays.push(DumpArray2::Positions(pos));
        } else {
            let dtype: DType = serde_json::from_value(serde_json::Value::String(a.dtype.clone()))?;
            let mut buf = vec![0u8; a.len * dtype.width()];
            r.read_exact(&mut buf)?;
            arrays.push(DumpArray2::Values(Values::read_le(dtype, &buf)?));
        }
    }
    let mut it = arrays.into_iter();
    let mut vals = || match it.next() {
        Some(DumpArray2::Values(v)) => Ok(DumpArray2::Values(v)),
        Some(DumpArray2::Positions(p)) => Ok(DumpArray2::Positions(p)),
        None => Err(Error::invalid("dump is missing an array")),
    };
    let n = header.total_size;
    let plain = |values: Values| PlainColumn {
        logical: header.logical.unwrap_or(values.dtype()),
        values,
        center: header.center,
    };
    Ok(match header.encoding {
        Encoding::Plain => Column::Plain(plain(vals()?.values()?)),
        Encoding::Rle => {
            let v = vals()?.values()?;
            let s = vals()?.positions()?;
            let e = vals()?.positions()?;
            Column::Rle(RleColumn::new(v, s, e, n))
        }
        Encoding::Index => {
            let v = vals()?.values()?;
            let p = vals()?.positions()?;
            Column::Index(IndexColumn::new(v, p, n))
        }
        Encoding::PlainIndex => {
            let base = plain(vals()?.values()?);
            let v = vals()?.values()?;
            let p = vals()?.positions()?;
            Column::PlainIndex(PlainIndexColumn { base, outliers: IndexColumn::new(v, p, n) })
        }
        Encoding::RleIndex => {
            let rv = vals()?.values()?;
            let s = vals()?.positions()?;
            let e = vals()?.positions()?;
            let pv = vals()?.values()?;
            let p = vals()?.positions()?;
            Column::RleIndex(RleIndexColumn {
                runs: RleColumn::new(rv, s, e, n),
                points: IndexColumn::new(pv, p, n),
            })
        }
    })
}

enum DumpArray2 {
    Values(Values),
    Positions(Vec<usize>),
}

impl DumpArray2 {
    fn values(self) -> Result<Values> {
        match self {
            DumpArray2::Values(v) => Ok(v),
            DumpArray2::Positions(_) => Err(Error::invalid("expected a value array")),
        }
    }

    fn positions(self) -> Result<Vec<usize>> {
        match self {
            DumpArray2::Positions(p) => Ok(p),
            DumpArray2::Values(_) => Err(Error::invalid("expected a position array")),
        }
    }
}

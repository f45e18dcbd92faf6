//! Hash equi-joins on encoded columns.
//!
//! A join column is hashed entry by entry: one entry per row for Plain data,
//! per run for run-length data and per point for index data. Matching
//! entries then expand to row pairs. A pair of runs of lengths `a` and `b`
//! stands for `a * b` row pairs, which the join index records without
//! enumerating them.
//!
//! Pairs are listed left entry first, right entry ascending within each left
//! entry, then stably split so that pairs of two single rows come before
//! pairs that involve a longer run.

use crate::align::own_shape;
use crate::column::{Column, MaskColumn, RleColumn, Runs};
use crate::error::{Error, Result};
use crate::kernels::{self, bucketize, cumsum};
use crate::primitives::range_intersect_unsorted;
use crate::values::Values;

/// Row references into one join input, in join pairing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JoinIndex {
    /// One row per matched pair; may be unsorted and repeat rows.
    UnsortedIndex { rows: Vec<usize> },
    UnsortedRle(UnsortedRle),
}

/// Row ranges referenced by a join. Entry `k` expands to the rows
/// `s[k]..=e[k]`, each repeated `repeat[k]` times, and that sequence is
/// emitted `cycles[k]` times.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UnsortedRle {
    /// Source entry (run or point) each range came from.
    pub v: Vec<usize>,
    pub s: Vec<usize>,
    pub e: Vec<usize>,
    pub repeat: Vec<usize>,
    pub cycles: Vec<usize>,
}

impl UnsortedRle {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Output rows produced by each entry.
    pub fn output_lengths(&self) -> Vec<usize> {
        (0..self.len()).map(|k| (self.e[k] - self.s[k] + 1) * self.repeat[k] * self.cycles[k]).collect()
    }
}

impl JoinIndex {
    /// Number of output rows.
    pub fn cardinality(&self) -> usize {
        match self {
            JoinIndex::UnsortedIndex { rows } => rows.len(),
            JoinIndex::UnsortedRle(r) => r.output_lengths().iter().sum(),
        }
    }

    /// The referenced row for every output row.
    pub fn expand(&self) -> Vec<usize> {
        match self {
            JoinIndex::UnsortedIndex { rows } => rows.clone(),
            JoinIndex::UnsortedRle(r) => {
                let mut out = Vec::with_capacity(self.cardinality());
                for k in 0..r.len() {
                    for _ in 0..r.cycles[k] {
                        for row in r.s[k]..=r.e[k] {
                            out.extend(std::iter::repeat_n(row, r.repeat[k]));
                        }
                    }
                }
                out
            }
        }
    }

    pub fn is_rle(&self) -> bool {
        matches!(self, JoinIndex::UnsortedRle(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinResult {
    pub left_index: JoinIndex,
    pub right_index: JoinIndex,
    pub cardinality: usize,
}

/// Join entries of one column: value, first row and row count per entry.
struct Entries {
    values: Values,
    starts: Vec<usize>,
    lens: Vec<usize>,
    runs: bool,
}

fn entries(col: &Column) -> Entries {
    match col {
        Column::Plain(c) => Entries {
            values: c.decoded(),
            starts: kernels::arange(c.len()),
            lens: vec![1; c.len()],
            runs: false,
        },
        Column::PlainIndex(c) => Entries {
            values: c.decoded(),
            starts: kernels::arange(c.total_size()),
            lens: vec![1; c.total_size()],
            runs: false,
        },
        Column::Index(c) => Entries {
            values: c.values.clone(),
            starts: c.positions.clone(),
            lens: vec![1; c.len()],
            runs: false,
        },
        Column::Rle(c) => Entries {
            values: c.values.clone(),
            starts: c.runs.starts.clone(),
            lens: c.runs.lengths(),
            runs: true,
        },
        Column::RleIndex(c) => {
            let mut starts = c.runs.runs.starts.clone();
            starts.extend_from_slice(&c.points.positions);
            let mut lens = c.runs.runs.lengths();
            lens.resize(starts.len(), 1);
            Entries { values: Values::concat(&[&c.runs.values, &c.points.values]), starts, lens, runs: true }
        }
    }
}

/// Brings two key arrays to a common comparison domain.
fn join_keys(a: &Values, b: &Values) -> (Values, Values) {
    if a.is_float() != b.is_float() {
        (Values::F64(a.to_f64_vec()), Values::F64(b.to_f64_vec()))
    } else {
        (a.clone(), b.clone())
    }
}

#[inline]
fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Open-addressing table from key to the build rows holding it, in
/// ascending order.
pub struct HashTable {
    mask: usize,
    /// Group id plus one per slot; zero marks an empty slot.
    slots: Vec<u32>,
    group_keys: Vec<u64>,
    /// Build rows grouped by key: group `g` owns `rows[offsets[g]..offsets[g + 1]]`.
    offsets: Vec<usize>,
    rows: Vec<usize>,
}

impl HashTable {
    pub fn build(values: &Values) -> HashTable {
        let n = values.len();
        let cap = (2 * n).next_power_of_two().max(16);
        let mut t = HashTable { mask: cap - 1, slots: vec![0; cap], group_keys: Vec::new(), offsets: Vec::new(), rows: Vec::new() };
        let mut group_of = Vec::with_capacity(n);
        for i in 0..n {
            let key = values.key_at(i);
            let g = match t.find(key) {
                Ok(g) => g,
                Err(slot) => {
                    t.group_keys.push(key);
                    t.slots[slot] = t.group_keys.len() as u32;
                    t.group_keys.len() - 1
                }
            };
            group_of.push(g);
        }
        // Stable counting sort of rows by group keeps each chain ascending.
        let mut counts = vec![0usize; t.group_keys.len()];
        for &g in &group_of {
            counts[g] += 1;
        }
        let mut offsets = cumsum(&counts, true).expect("row counts fit usize");
        offsets.push(n);
        let mut next = offsets.clone();
        let mut rows = vec![0usize; n];
        for (i, &g) in group_of.iter().enumerate() {
            rows[next[g]] = i;
            next[g] += 1;
        }
        t.offsets = offsets;
        t.rows = rows;
        t
    }

    /// `Ok(group)` if present, else `Err(empty slot)`.
    fn find(&self, key: u64) -> std::result::Result<usize, usize> {
        let mut slot = mix(key) as usize & self.mask;
        loop {
            match self.slots[slot] {
                0 => return Err(slot),
                g if self.group_keys[g as usize - 1] == key => return Ok(g as usize - 1),
                _ => slot = (slot + 1) & self.mask,
            }
        }
    }

    /// Build rows equal to `key`, ascending.
    pub fn lookup(&self, key: u64) -> &[usize] {
        match self.find(key) {
            Ok(g) => &self.rows[self.offsets[g]..self.offsets[g + 1]],
            Err(_) => &[],
        }
    }
}

/// All `(build_pos, probe_pos)` pairs with equal values, probe rows in
/// order and build rows ascending within each.
pub fn hash_build_probe(build: &Values, probe: &Values) -> Vec<(usize, usize)> {
    let (build, probe) = join_keys(build, probe);
    let table = HashTable::build(&build);
    let mut out = Vec::new();
    for j in 0..probe.len() {
        for &i in table.lookup(probe.key_at(j)) {
            out.push((i, j));
        }
    }
    out
}

/// Matching entry pairs `(left, right)`, left-major with right ascending.
fn entry_pairs(l: &Entries, r: &Entries) -> Vec<(usize, usize)> {
    if r.values.len() <= l.values.len() && !r.values.is_empty() || l.values.is_empty() {
        // Build on the right and probe left entries in order.
        hash_build_probe(&r.values, &l.values).into_iter().map(|(ri, li)| (li, ri)).collect()
    } else {
        // Build on the left; probing yields right-major pairs, regrouped stably.
        let pairs = hash_build_probe(&l.values, &r.values);
        let mut counts = vec![0usize; l.values.len()];
        for &(li, _) in &pairs {
            counts[li] += 1;
        }
        let mut next = cumsum(&counts, true).expect("pair counts fit usize");
        let mut out = vec![(0, 0); pairs.len()];
        for (li, ri) in pairs {
            out[next[li]] = (li, ri);
            next[li] += 1;
        }
        out
    }
}

fn side_index(side: &Entries, other: &Entries, pairs: &[(usize, usize)], is_left: bool) -> JoinIndex {
    let pick = |p: &(usize, usize)| if is_left { (p.0, p.1) } else { (p.1, p.0) };
    if side.runs {
        let mut r = UnsortedRle::default();
        for p in pairs {
            let (mine, theirs) = pick(p);
            let (a, b) = (side.lens[mine], other.lens[theirs]);
            r.v.push(mine);
            r.s.push(side.starts[mine]);
            r.e.push(side.starts[mine] + a - 1);
            // Left rows repeat across the right range; the right range cycles.
            if is_left {
                r.repeat.push(b);
                r.cycles.push(1);
            } else {
                r.repeat.push(1);
                r.cycles.push(other.lens[theirs]);
            }
        }
        JoinIndex::UnsortedRle(r)
    } else {
        let mut rows = Vec::new();
        for p in pairs {
            let (mine, theirs) = pick(p);
            rows.extend(std::iter::repeat_n(side.starts[mine], other.lens[theirs]));
        }
        JoinIndex::UnsortedIndex { rows }
    }
}

/// Row pairs with equal join keys, as one join index per side.
///
/// A side holding runs gets a run-shaped index; every other side gets one
/// row reference per output row.
pub fn get_join_index(left: &Column, right: &Column) -> Result<JoinResult> {
    let l = entries(left);
    let r = entries(right);
    let pairs = entry_pairs(&l, &r);
    // Pairs of two single rows first, keeping relative order on both sides.
    let (unit, multi): (Vec<_>, Vec<_>) = pairs.into_iter().partition(|&(li, ri)| l.lens[li] == 1 && r.lens[ri] == 1);
    let ordered: Vec<(usize, usize)> = unit.into_iter().chain(multi).collect();
    let cardinality = ordered
        .iter()
        .map(|&(li, ri)| l.lens[li].checked_mul(r.lens[ri]).ok_or(Error::Overflow("join cardinality")))
        .try_fold(0usize, |acc, x| x.and_then(|x| acc.checked_add(x).ok_or(Error::Overflow("join cardinality"))))?;
    Ok(JoinResult {
        left_index: side_index(&l, &r, &ordered, true),
        right_index: side_index(&r, &l, &ordered, false),
        cardinality,
    })
}

/// Rows of `left` whose key occurs in `right`, laid out like `left`.
pub fn semi_join(left: &Column, right: &Column) -> Result<MaskColumn> {
    let (shape, vals) = own_shape(left);
    let r = entries(right);
    let (lv, rv) = join_keys(&vals[0], &r.values);
    let table = HashTable::build(&rv);
    let keep: Vec<bool> = (0..lv.len()).map(|i| !table.lookup(lv.key_at(i)).is_empty()).collect();
    Ok(shape.mask(&keep, left.total_size()))
}

/// The values of `col` at the referenced rows, in join order. The result
/// spans `0..cardinality`.
pub fn apply_join_index(col: &Column, jidx: &JoinIndex) -> Result<Column> {
    match (col, jidx) {
        (Column::Rle(c), JoinIndex::UnsortedIndex { rows }) if is_strictly_increasing(rows) => {
            // Sorted, duplicate-free references: search the runs once per run.
            let hits = crate::primitives::rle_contain_idx(rows, &c.runs);
            require_all(rows, &hits.entry)?;
            Ok(Column::plain(c.values.gather(&hits.run_of)))
        }
        _ => apply_join_index_general(col, jidx),
    }
}

/// [`apply_join_index`] without the sorted-reference shortcut.
pub fn apply_join_index_general(col: &Column, jidx: &JoinIndex) -> Result<Column> {
    match (col, jidx) {
        (Column::Rle(c), JoinIndex::UnsortedRle(r)) => apply_runs(c, r),
        (Column::Rle(c), JoinIndex::UnsortedIndex { rows }) => {
            let hits = crate::primitives::idx_in_rle(rows, &c.runs);
            require_all(rows, &hits.entry)?;
            Ok(Column::plain(c.values.gather(&hits.run_of)))
        }
        _ => Ok(Column::plain(gather_rows(col, &jidx.expand())?)),
    }
}

fn is_strictly_increasing(rows: &[usize]) -> bool {
    rows.windows(2).all(|w| w[0] < w[1])
}

/// Fails on the first reference that found no covering entry.
fn require_all(rows: &[usize], found: &[usize]) -> Result<()> {
    if found.len() == rows.len() {
        return Ok(());
    }
    let mut seen = vec![false; rows.len()];
    for &i in found {
        seen[i] = true;
    }
    let missing = seen.iter().position(|&s| !s).unwrap();
    Err(Error::UncoveredRow { row: rows[missing] })
}

/// Values of `col` at arbitrary rows.
pub fn gather_rows(col: &Column, rows: &[usize]) -> Result<Values> {
    let n = col.total_size();
    if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    match col {
        Column::Plain(c) => Ok(c.decoded().gather(rows)),
        Column::PlainIndex(c) => Ok(c.decoded().gather(rows)),
        Column::Rle(c) => {
            let hits = crate::primitives::idx_in_rle(rows, &c.runs);
            require_all(rows, &hits.entry)?;
            Ok(c.values.gather(&hits.run_of))
        }
        Column::Index(c) => Ok(c.values.gather(&lookup_points(&c.positions, rows)?)),
        Column::RleIndex(_) => {
            let (pos, vals) = col.materialize();
            Ok(vals.gather(&lookup_points(&pos, rows)?))
        }
    }
}

/// Entry of each row in a sorted position list.
fn lookup_points(positions: &[usize], rows: &[usize]) -> Result<Vec<usize>> {
    bucketize(rows, positions, true)
        .into_iter()
        .zip(rows)
        .map(|(k, &row)| {
            if k > 0 && positions[k - 1] == row {
                Ok(k - 1)
            } else {
                Err(Error::UncoveredRow { row })
            }
        })
        .collect()
}

/// Applies a run-shaped index to run-length data without expanding rows.
///
/// Each referenced range is cut by the data runs it overlaps. A piece keeps
/// its run value and maps to a contiguous block of output rows, once per
/// cycle.
fn apply_runs(c: &RleColumn, r: &UnsortedRle) -> Result<Column> {
    let refs = Runs::new(r.s.clone(), r.e.clone());
    let x = range_intersect_unsorted(&refs, &c.runs);
    let piece_len: Vec<usize> = x.runs.lengths();
    let mut covered = vec![0usize; r.len()];
    for (&k, &l) in x.idx1.iter().zip(&piece_len) {
        covered[k] += l;
    }
    if let Some(k) = (0..r.len()).find(|&k| covered[k] != r.e[k] - r.s[k] + 1) {
        let rows: Vec<usize> = (r.s[k]..=r.e[k]).collect();
        let hits = crate::primitives::idx_in_rle(&rows, &c.runs);
        require_all(&rows, &hits.entry)?;
    }
    let out_len = r.output_lengths();
    let offsets = cumsum(&out_len, true)?;
    let total: usize = out_len.iter().sum();
    // Pieces of entry k, each emitted once per cycle.
    let first_piece = bucketize(&kernels::arange(r.len()), &x.idx1, false);
    let mut starts = Vec::new();
    let mut ends = Vec::new();
    let mut src = Vec::new();
    for k in 0..r.len() {
        let lo = first_piece[k];
        let hi = first_piece.get(k + 1).copied().unwrap_or(x.idx1.len());
        let span = (r.e[k] - r.s[k] + 1) * r.repeat[k];
        for t in 0..r.cycles[k] {
            let base = offsets[k] + t * span;
            for (p, len) in piece_len.iter().enumerate().take(hi).skip(lo) {
                let rel = x.runs.starts[p] - r.s[k];
                starts.push(base + rel * r.repeat[k]);
                ends.push(base + (rel + len) * r.repeat[k] - 1);
                src.push(x.idx2[p]);
            }
        }
    }
    Ok(Column::Rle(RleColumn { values: c.values.gather(&src), runs: Runs::new(starts, ends), total_size: total }))
}

/// Row-level pairs for testing and for the plain executor.
pub fn expand_pairs(result: &JoinResult) -> Vec<(usize, usize)> {
    result.left_index.expand().into_iter().zip(result.right_index.expand()).collect()
}

/// Checks that two dictionary names agree before joining string codes.
pub fn check_dictionaries(left: Option<&str>, right: Option<&str>) -> Result<()> {
    match (left, right) {
        (Some(a), Some(b)) if a != b => Err(Error::DictionaryMismatch { left: a.into(), right: b.into() }),
        (Some(a), None) => Err(Error::DictionaryMismatch { left: a.into(), right: "none".into() }),
        (None, Some(b)) => Err(Error::DictionaryMismatch { left: "none".into(), right: b.into() }),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Letters as codes: A=0, B=1, D=3, E=4, F=5.
    #[test]
    fn plain_plain_fixture() {
        let r = Column::plain(vec![0i32, 1, 1]);
        let s = Column::plain(vec![1i32, 1, 0]);
        let j = get_join_index(&r, &s).unwrap();
        assert_eq!(j.left_index, JoinIndex::UnsortedIndex { rows: vec![0, 1, 1, 2, 2] });
        assert_eq!(j.right_index, JoinIndex::UnsortedIndex { rows: vec![2, 0, 1, 0, 1] });
        let sc = Column::plain(vec![3i32, 4, 5]);
        let out = apply_join_index(&sc, &j.right_index).unwrap();
        assert_eq!(out, Column::plain(vec![5i32, 3, 4, 3, 4]));
    }

    #[test]
    fn plain_rle_fixture() {
        let plain = Column::plain(vec![0i32, 1, 1]);
        let rle = Column::Rle(RleColumn::new(vec![0i32, 1], vec![0, 2], vec![1, 2], 3));
        let j = get_join_index(&plain, &rle).unwrap();
        assert_eq!(j.left_index, JoinIndex::UnsortedIndex { rows: vec![1, 2, 0, 0] });
        let JoinIndex::UnsortedRle(r) = &j.right_index else { panic!() };
        assert_eq!(r.v, vec![1, 1, 0]);
        assert_eq!(r.s, vec![2, 2, 0]);
        assert_eq!(r.e, vec![2, 2, 1]);
        assert_eq!(j.cardinality, 4);
    }

    #[test]
    fn build_probe() {
        let pairs = hash_build_probe(&Values::I32(vec![0, 1]), &Values::I32(vec![1, 1, 0]));
        assert_eq!(pairs, vec![(1, 0), (1, 1), (0, 2)]);
        assert!(hash_build_probe(&Values::I32(vec![0, 1]), &Values::I32(vec![])).is_empty());
        assert_eq!(hash_build_probe(&Values::I32(vec![7; 3]), &Values::I32(vec![7; 4])).len(), 12);
    }

    #[test]
    fn rle_rle_many_to_many() {
        let a = Column::Rle(RleColumn::new(vec![5i32, 6], vec![0, 2], vec![1, 4], 5));
        let b = Column::Rle(RleColumn::new(vec![6i32, 5], vec![0, 3], vec![2, 3], 4));
        let j = get_join_index(&a, &b).unwrap();
        let mut pairs = expand_pairs(&j);
        pairs.sort_unstable();
        let mut expect = Vec::new();
        let av = [5, 5, 6, 6, 6];
        let bv = [6, 6, 6, 5];
        for (i, x) in av.iter().enumerate() {
            for (k, y) in bv.iter().enumerate() {
                if x == y {
                    expect.push((i, k));
                }
            }
        }
        assert_eq!(pairs, expect);
        let data = Column::Rle(RleColumn::new(vec![10i32, 20, 30], vec![0, 1, 3], vec![0, 2, 4], 5));
        let applied = apply_join_index(&data, &j.left_index).unwrap();
        let direct = gather_rows(&data, &j.left_index.expand()).unwrap();
        assert_eq!(applied.decode_dense(crate::values::Scalar::Int(0)), direct);
        assert_eq!(applied.total_size(), j.cardinality);
    }

    #[test]
    fn uncovered_reference() {
        let data = Column::Rle(RleColumn::new(vec![1i32], vec![0], vec![1], 5));
        let j = JoinIndex::UnsortedIndex { rows: vec![0, 3] };
        assert!(matches!(apply_join_index(&data, &j), Err(Error::UncoveredRow { row: 3 })));
    }

    #[test]
    fn semi_join_marks_left_entries() {
        let l = Column::Rle(RleColumn::new(vec![1i32, 2, 3], vec![0, 2, 4], vec![1, 3, 5], 6));
        let r = Column::plain(vec![3i32, 1]);
        let m = semi_join(&l, &r).unwrap();
        assert_eq!(m, MaskColumn::rle(vec![0, 4], vec![1, 5], 6));
    }
}

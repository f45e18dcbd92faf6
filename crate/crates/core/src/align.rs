//! Positional alignment of two columns and the element-wise operators built
//! on it.
//!
//! Aligning two columns finds the rows both cover, expressed in the sparsest
//! shape the encodings allow, and gathers each column's value at every entry
//! of that shape. Binary operators then work on two conformal value arrays.
//! A run split by the other side's boundaries repeats its value in each
//! piece.

use crate::column::{
    Column, CompositeMask, IndexColumn, IndexMask, MaskColumn, PlainColumn, PlainIndexColumn, RleColumn,
    RleIndexColumn, RleMask, Runs,
};
use crate::error::{Error, Result};
use crate::kernels;
use crate::primitives::{idx_in_idx, positions_in_runs, range_intersect};
use crate::values::{ArithOp, CmpOp, Scalar, Values};

/// Rows shared by two aligned columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    /// Every row, one entry each.
    Dense(usize),
    Runs(Runs),
    Points(Vec<usize>),
    /// Run entries first, then point entries; runs and points are disjoint.
    Mixed { runs: Runs, points: Vec<usize> },
}

impl Shape {
    /// Number of value slots the shape carries.
    pub fn entries(&self) -> usize {
        match self {
            Shape::Dense(n) => *n,
            Shape::Runs(r) => r.len(),
            Shape::Points(p) => p.len(),
            Shape::Mixed { runs, points } => runs.len() + points.len(),
        }
    }

    /// Rows covered by each entry.
    pub fn weights(&self) -> Vec<usize> {
        match self {
            Shape::Dense(n) => vec![1; *n],
            Shape::Runs(r) => r.lengths(),
            Shape::Points(p) => vec![1; p.len()],
            Shape::Mixed { runs, points } => {
                let mut w = runs.lengths();
                w.resize(runs.len() + points.len(), 1);
                w
            }
        }
    }

    /// Builds a column with `values` laid over this shape.
    pub fn column(&self, values: Values, total_size: usize) -> Column {
        match self {
            Shape::Dense(_) => Column::Plain(PlainColumn::new(values)),
            Shape::Runs(r) => Column::Rle(RleColumn { values, runs: r.clone(), total_size }),
            Shape::Points(p) => Column::Index(IndexColumn { values, positions: p.clone(), total_size }),
            Shape::Mixed { runs, points } => {
                let k = runs.len();
                Column::RleIndex(RleIndexColumn {
                    runs: RleColumn { values: values.slice(0..k), runs: runs.clone(), total_size },
                    points: IndexColumn { values: values.slice(k..values.len()), positions: points.clone(), total_size },
                })
            }
        }
    }

    /// Mask of the entries where `keep` holds.
    pub fn mask(&self, keep: &[bool], total_size: usize) -> MaskColumn {
        match self {
            Shape::Dense(_) => MaskColumn::plain(keep.to_vec()),
            Shape::Runs(r) => MaskColumn::Rle(RleMask { runs: r.select(keep), total_size }),
            Shape::Points(p) => MaskColumn::index(kernels::select(p, keep), total_size),
            Shape::Mixed { runs, points } => {
                let k = runs.len();
                MaskColumn::Composite(CompositeMask {
                    runs: RleMask { runs: runs.select(&keep[..k]), total_size },
                    points: IndexMask::new(kernels::select(points, &keep[k..]), total_size),
                })
            }
        }
    }
}

/// Two value arrays conformal to a shared shape.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedPair {
    pub shape: Shape,
    pub total_size: usize,
    pub v1: Values,
    pub v2: Values,
}

/// One value per row, read from a Plain or Plain+Index column.
enum Dense<'a> {
    Plain(&'a PlainColumn),
    PlainIndex(&'a PlainIndexColumn),
}

impl Dense<'_> {
    fn of(col: &Column) -> Option<Dense<'_>> {
        match col {
            Column::Plain(c) => Some(Dense::Plain(c)),
            Column::PlainIndex(c) => Some(Dense::PlainIndex(c)),
            _ => None,
        }
    }

    fn all(&self) -> Values {
        match self {
            Dense::Plain(c) => c.decoded(),
            Dense::PlainIndex(c) => c.decoded(),
        }
    }

    fn gather(&self, positions: &[usize]) -> Values {
        match self {
            Dense::Plain(c) => gather_plain(c, positions),
            Dense::PlainIndex(c) => {
                // Base values first, then outliers at the positions they shadow.
                let mut out = gather_plain(&c.base, positions).cast(c.logical()).expect("promotion is lossless");
                let hits = idx_in_idx(positions, &c.outliers.positions);
                crate::column::patch(&mut out, &hits.idx1, &c.outliers.values.gather(&hits.idx2));
                out
            }
        }
    }
}

fn gather_plain(c: &PlainColumn, positions: &[usize]) -> Values {
    let stored = c.values.gather(positions);
    match c.center {
        None | Some(0) => stored.cast(c.logical).unwrap_or(stored),
        Some(k) => {
            let wide = stored.offset_i64(k).expect("centered values overflow i64");
            wide.cast(c.logical).unwrap_or(wide)
        }
    }
}

/// Position-explicit part of a column.
enum Part<'a> {
    Runs(&'a Runs, &'a Values),
    Points(&'a [usize], &'a Values),
}

fn parts(col: &Column) -> Vec<Part<'_>> {
    match col {
        Column::Rle(c) => vec![Part::Runs(&c.runs, &c.values)],
        Column::Index(c) => vec![Part::Points(&c.positions, &c.values)],
        Column::RleIndex(c) => vec![
            Part::Runs(&c.runs.runs, &c.runs.values),
            Part::Points(&c.points.positions, &c.points.values),
        ],
        Column::Plain(_) | Column::PlainIndex(_) => unreachable!("dense columns have no parts"),
    }
}

fn check_sizes(a: &Column, b: &Column) -> Result<usize> {
    let (l, r) = (a.total_size(), b.total_size());
    if l != r {
        return Err(Error::SizeMismatch { left: l, right: r });
    }
    Ok(l)
}

/// Rows covered by both columns, with each column's value per entry.
pub fn align(a: &Column, b: &Column) -> Result<AlignedPair> {
    let n = check_sizes(a, b)?;
    match (Dense::of(a), Dense::of(b)) {
        (Some(da), Some(db)) => Ok(AlignedPair { shape: Shape::Dense(n), total_size: n, v1: da.all(), v2: db.all() }),
        (Some(da), None) => Ok(dense_with(&da, b, n, false)),
        (None, Some(db)) => Ok(dense_with(&db, a, n, true)),
        (None, None) => Ok(align_parts(a, b, n)),
    }
}

/// Aligns a dense column with a position-explicit one. A gapless partner is
/// expanded to rows; otherwise the dense side is gathered at its positions.
fn dense_with(d: &Dense<'_>, other: &Column, n: usize, dense_is_second: bool) -> AlignedPair {
    let (shape, vd, vo) = if other.is_gapless() {
        (Shape::Dense(n), d.all(), other.decode_dense(Scalar::Int(0)))
    } else {
        let (pos, vals) = other.materialize();
        let vd = d.gather(&pos);
        (Shape::Points(pos), vd, vals)
    };
    let (v1, v2) = if dense_is_second { (vo, vd) } else { (vd, vo) };
    AlignedPair { shape, total_size: n, v1, v2 }
}

fn align_parts(a: &Column, b: &Column, n: usize) -> AlignedPair {
    let mut run_piece: Option<(Runs, Values, Values)> = None;
    let mut point_pieces: Vec<(Vec<usize>, Values, Values)> = Vec::new();
    for pa in parts(a) {
        for pb in parts(b) {
            match (&pa, &pb) {
                (Part::Runs(ra, va), Part::Runs(rb, vb)) => {
                    let x = range_intersect(ra, rb);
                    run_piece = Some((x.runs, va.gather(&x.idx1), vb.gather(&x.idx2)));
                }
                (Part::Runs(r, vr), Part::Points(p, vp)) => {
                    let h = positions_in_runs(p, r);
                    point_pieces.push((h.positions, vr.gather(&h.run_of), vp.gather(&h.entry)));
                }
                (Part::Points(p, vp), Part::Runs(r, vr)) => {
                    let h = positions_in_runs(p, r);
                    point_pieces.push((h.positions, vp.gather(&h.entry), vr.gather(&h.run_of)));
                }
                (Part::Points(p1, v1), Part::Points(p2, v2)) => {
                    let m = idx_in_idx(p1, p2);
                    point_pieces.push((m.positions, v1.gather(&m.idx1), v2.gather(&m.idx2)));
                }
            }
        }
    }
    let points = merge_point_pieces(point_pieces);
    match (run_piece, points) {
        (Some((runs, v1, v2)), None) => AlignedPair { shape: Shape::Runs(runs), total_size: n, v1, v2 },
        (None, Some((p, v1, v2))) => AlignedPair { shape: Shape::Points(p), total_size: n, v1, v2 },
        (Some((runs, rv1, rv2)), Some((points, pv1, pv2))) => AlignedPair {
            shape: Shape::Mixed { runs, points },
            total_size: n,
            v1: Values::concat(&[&rv1, &pv1]),
            v2: Values::concat(&[&rv2, &pv2]),
        },
        (None, None) => unreachable!("every pair of parts yields a piece"),
    }
}

/// Merges disjoint sorted point lists into one sorted list.
fn merge_point_pieces(mut pieces: Vec<(Vec<usize>, Values, Values)>) -> Option<(Vec<usize>, Values, Values)> {
    if pieces.len() <= 1 {
        return pieces.pop();
    }
    let mut pos = Vec::new();
    for (p, _, _) in &pieces {
        pos.extend_from_slice(p);
    }
    let v1 = Values::concat(&pieces.iter().map(|x| &x.1).collect::<Vec<_>>());
    let v2 = Values::concat(&pieces.iter().map(|x| &x.2).collect::<Vec<_>>());
    let (sorted, perm) = kernels::sort_with_perm(&pos);
    Some((sorted, v1.gather(&perm), v2.gather(&perm)))
}

/// Result of a binary or scalar operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Computed {
    Data(Column),
    Mask(MaskColumn),
}

impl Computed {
    pub fn into_data(self) -> Result<Column> {
        match self {
            Computed::Data(c) => Ok(c),
            Computed::Mask(_) => Err(Error::TypeMismatch("expected a data column, found a mask".into())),
        }
    }

    pub fn into_mask(self) -> Result<MaskColumn> {
        match self {
            Computed::Mask(m) => Ok(m),
            Computed::Data(_) => Err(Error::TypeMismatch("expected a mask, found a data column".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Arith(ArithOp),
    Cmp(CmpOp),
}

/// Element-wise operator over the rows both columns cover.
pub fn binary_op(a: &Column, b: &Column, op: BinaryOp) -> Result<Computed> {
    Ok(match op {
        BinaryOp::Arith(op) => Computed::Data(arith(a, b, op)?),
        BinaryOp::Cmp(op) => Computed::Mask(compare(a, b, op)?),
    })
}

pub fn arith(a: &Column, b: &Column, op: ArithOp) -> Result<Column> {
    let pair = align(a, b)?;
    let values = pair.v1.arith(&pair.v2, op)?;
    Ok(pair.shape.column(values, pair.total_size))
}

/// Mask of the shared rows where `a op b` holds.
pub fn compare(a: &Column, b: &Column, op: CmpOp) -> Result<MaskColumn> {
    let pair = align(a, b)?;
    let keep = pair.v1.compare(&pair.v2, op)?;
    Ok(pair.shape.mask(&keep, pair.total_size))
}

/// Applies `op` with a constant to every stored value, keeping the layout.
/// `scalar_left` computes `k op a` instead of `a op k`.
pub fn scalar_arith(a: &Column, k: Scalar, op: ArithOp, scalar_left: bool) -> Result<Column> {
    let f = |v: &Values| v.arith_scalar(k, op, scalar_left);
    Ok(match a {
        Column::Plain(c) => Column::Plain(PlainColumn::new(f(&c.decoded())?)),
        Column::PlainIndex(c) => Column::Plain(PlainColumn::new(f(&c.decoded())?)),
        Column::Rle(c) => Column::Rle(RleColumn { values: f(&c.values)?, runs: c.runs.clone(), total_size: c.total_size }),
        Column::Index(c) => Column::Index(IndexColumn {
            values: f(&c.values)?,
            positions: c.positions.clone(),
            total_size: c.total_size,
        }),
        Column::RleIndex(c) => Column::RleIndex(RleIndexColumn {
            runs: RleColumn { values: f(&c.runs.values)?, runs: c.runs.runs.clone(), total_size: c.runs.total_size },
            points: IndexColumn {
                values: f(&c.points.values)?,
                positions: c.points.positions.clone(),
                total_size: c.points.total_size,
            },
        }),
    })
}

/// Mask of rows where `a op k` holds (`k op a` when `scalar_left`).
///
/// Runs are compared once each. Centred Plain values are compared in stored
/// form against a shifted constant.
pub fn scalar_compare(a: &Column, k: Scalar, op: CmpOp, scalar_left: bool) -> Result<MaskColumn> {
    let op = if scalar_left { op.flip() } else { op };
    let n = a.total_size();
    Ok(match a {
        Column::Plain(c) => MaskColumn::plain(compare_plain(c, k, op)),
        Column::PlainIndex(c) => compare_plain_index(c, k, op),
        Column::Rle(c) => {
            let keep = c.values.compare_scalar(k, op);
            MaskColumn::Rle(RleMask { runs: c.runs.select(&keep), total_size: n })
        }
        Column::Index(c) => {
            let keep = c.values.compare_scalar(k, op);
            MaskColumn::index(kernels::select(&c.positions, &keep), n)
        }
        Column::RleIndex(c) => {
            let rk = c.runs.values.compare_scalar(k, op);
            let pk = c.points.values.compare_scalar(k, op);
            MaskColumn::Composite(CompositeMask {
                runs: RleMask { runs: c.runs.runs.select(&rk), total_size: n },
                points: IndexMask::new(kernels::select(&c.points.positions, &pk), n),
            })
        }
    })
}

fn compare_plain(c: &PlainColumn, k: Scalar, op: CmpOp) -> Vec<bool> {
    match (c.center, k) {
        (None, _) => c.values.compare_scalar(k, op),
        (Some(center), Scalar::Int(k)) => match k.checked_sub(center) {
            Some(shifted) => c.values.compare_scalar(Scalar::Int(shifted), op),
            None => c.decoded().compare_scalar(Scalar::Int(k), op),
        },
        (Some(_), k) => c.decoded().compare_scalar(k, op),
    }
}

/// Uses the stored base type's range to skip the base when the constant lies
/// outside it; only the outliers are then compared.
fn compare_plain_index(c: &PlainIndexColumn, k: Scalar, op: CmpOp) -> MaskColumn {
    let n = c.total_size();
    let out_keep = c.outliers.values.compare_scalar(k, op);
    if let Some(uniform) = base_uniform(&c.base, k, op) {
        let positions = &c.outliers.positions;
        return if uniform {
            let misses: Vec<bool> = out_keep.iter().map(|&x| !x).collect();
            crate::logic::not_mask(&MaskColumn::index(kernels::select(positions, &misses), n))
        } else {
            MaskColumn::index(kernels::select(positions, &out_keep), n)
        };
    }
    let mut bits = compare_plain(&c.base, k, op);
    for (&p, &keep) in c.outliers.positions.iter().zip(&out_keep) {
        bits[p] = keep;
    }
    MaskColumn::plain(bits)
}

/// `Some(answer)` when `v op k` has the same answer for every value the base
/// can store.
fn base_uniform(base: &PlainColumn, k: Scalar, op: CmpOp) -> Option<bool> {
    let (lo, hi) = base.values.dtype().int_range()?;
    let c = base.center.unwrap_or(0) as f64;
    let (lo, hi) = (lo as f64 + c, hi as f64 + c);
    let k = k.as_f64();
    if k.is_nan() {
        return Some(op == CmpOp::Ne);
    }
    let below = k < lo;
    let above = k > hi;
    if !below && !above {
        return None;
    }
    Some(match op {
        CmpOp::Eq => false,
        CmpOp::Ne => true,
        CmpOp::Lt | CmpOp::Le => above,
        CmpOp::Gt | CmpOp::Ge => below,
    })
}

pub fn scalar_op(a: &Column, k: Scalar, op: BinaryOp, scalar_left: bool) -> Result<Computed> {
    Ok(match op {
        BinaryOp::Arith(op) => Computed::Data(scalar_arith(a, k, op, scalar_left)?),
        BinaryOp::Cmp(op) => Computed::Mask(scalar_compare(a, k, op, scalar_left)?),
    })
}

/// The rows of `a` where `m` holds, without renumbering rows.
///
/// A full mask returns `a` as is. Otherwise Plain data yields an Index
/// column, runs meeting runs stay runs and runs meeting points yield points.
pub fn filter(a: &Column, m: &MaskColumn) -> Result<Column> {
    let n = a.total_size();
    if m.total_size() != n {
        return Err(Error::SizeMismatch { left: n, right: m.total_size() });
    }
    if m.count_true() == n {
        return Ok(a.clone());
    }
    let pair = align(a, &mask_column(m))?;
    Ok(pair.shape.column(pair.v1, n))
}

/// A mask as a column with placeholder values. Bits become positions.
fn mask_column(m: &MaskColumn) -> Column {
    let n = m.total_size();
    let zeros = |k: usize| Values::I8(vec![0; k]);
    match m {
        MaskColumn::Plain(p) => {
            let pos = kernels::nonzero(&p.bits);
            Column::Index(IndexColumn { values: zeros(pos.len()), positions: pos, total_size: n })
        }
        MaskColumn::Rle(r) => Column::Rle(RleColumn { values: zeros(r.runs.len()), runs: r.runs.clone(), total_size: n }),
        MaskColumn::Index(i) => {
            Column::Index(IndexColumn { values: zeros(i.positions.len()), positions: i.positions.clone(), total_size: n })
        }
        MaskColumn::Composite(c) => Column::RleIndex(RleIndexColumn {
            runs: RleColumn { values: zeros(c.runs.runs.len()), runs: c.runs.runs.clone(), total_size: n },
            points: IndexColumn {
                values: zeros(c.points.positions.len()),
                positions: c.points.positions.clone(),
                total_size: n,
            },
        }),
    }
}

/// Aligns any number of columns to the rows all of them cover.
///
/// Columns are folded left to right. Between steps the accumulated shape is
/// carried as a column of entry ids, so earlier value arrays can be gathered
/// into each new shape.
pub fn align_many(cols: &[&Column]) -> Result<(Shape, Vec<Values>)> {
    let Some(first) = cols.first() else {
        return Err(Error::invalid("align_many needs at least one column"));
    };
    let n = first.total_size();
    let (mut shape, mut values) = own_shape(first);
    for col in &cols[1..] {
        let ids = shape.column(Values::I64((0..shape.entries() as i64).collect()), n);
        let pair = align(&ids, col)?;
        let pick: Vec<usize> = pair.v1.iter_i64().map(|i| i as usize).collect();
        values = values.iter().map(|v| v.gather(&pick)).collect();
        values.push(pair.v2);
        shape = pair.shape;
    }
    Ok((shape, values))
}

/// A column's own layout as a shape and its per-entry values.
pub fn own_shape(col: &Column) -> (Shape, Vec<Values>) {
    match col {
        Column::Plain(c) => (Shape::Dense(c.len()), vec![c.decoded()]),
        Column::PlainIndex(c) => (Shape::Dense(c.total_size()), vec![c.decoded()]),
        Column::Rle(c) => (Shape::Runs(c.runs.clone()), vec![c.values.clone()]),
        Column::Index(c) => (Shape::Points(c.positions.clone()), vec![c.values.clone()]),
        Column::RleIndex(c) => (
            Shape::Mixed { runs: c.runs.runs.clone(), points: c.points.positions.clone() },
            vec![Values::concat(&[&c.runs.values, &c.points.values])],
        ),
    }
}

//! Random encoded inputs and row-by-row reference implementations.
//!
//! The references work on fully decoded rows: a data column is a vector of
//! `Option<Scalar>` with `None` for rows the column does not cover, and a
//! mask is a vector of booleans.

#![allow(dead_code)]

pub mod suite;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rlex::column::{
    Column, CompositeMask, Encoding, IndexColumn, IndexMask, MaskColumn, MaskEncoding, PlainColumn, PlainIndexColumn,
    RleColumn, RleIndexColumn, RleMask, Runs,
};
use rlex::primitives::plain_to_plain_index;
use rlex::values::{ArithOp, CmpOp, DType, Scalar, Values};

pub use rlex::synth::rng;

pub type Rows = Vec<Option<Scalar>>;

pub const ENCODINGS: [Encoding; 5] =
    [Encoding::Plain, Encoding::Rle, Encoding::Index, Encoding::PlainIndex, Encoding::RleIndex];

pub const MASK_ENCODINGS: [MaskEncoding; 4] =
    [MaskEncoding::Plain, MaskEncoding::Rle, MaskEncoding::Index, MaskEncoding::Composite];

/// Decodes a column row by row without any library decoding path.
pub fn rows_of(c: &Column) -> Rows {
    let n = c.total_size();
    let mut out = vec![None; n];
    match c {
        Column::Plain(p) => {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = Some(plain_at(p, i));
            }
        }
        Column::Rle(r) => put_runs(&mut out, r),
        Column::Index(ix) => put_points(&mut out, ix),
        Column::PlainIndex(pi) => {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = Some(plain_at(&pi.base, i));
            }
            put_points(&mut out, &pi.outliers);
        }
        Column::RleIndex(ri) => {
            put_runs(&mut out, &ri.runs);
            put_points(&mut out, &ri.points);
        }
    }
    out
}

fn plain_at(p: &PlainColumn, i: usize) -> Scalar {
    match (p.values.get(i), p.center) {
        (Scalar::Int(v), Some(c)) => Scalar::Int(v + c),
        (s, _) => s,
    }
}

fn put_runs(out: &mut Rows, r: &RleColumn) {
    for k in 0..r.runs.len() {
        for slot in &mut out[r.runs.starts[k]..=r.runs.ends[k]] {
            *slot = Some(r.values.get(k));
        }
    }
}

fn put_points(out: &mut Rows, ix: &IndexColumn) {
    for (k, &p) in ix.positions.iter().enumerate() {
        out[p] = Some(ix.values.get(k));
    }
}

pub fn bits_of(m: &MaskColumn) -> Vec<bool> {
    let n = m.total_size();
    let mut out = vec![false; n];
    let mut runs = |r: &RleMask| {
        for k in 0..r.runs.len() {
            for b in &mut out[r.runs.starts[k]..=r.runs.ends[k]] {
                *b = true;
            }
        }
    };
    match m {
        MaskColumn::Plain(p) => return p.bits.clone(),
        MaskColumn::Rle(r) => runs(r),
        MaskColumn::Index(ix) => {
            for &p in &ix.positions {
                out[p] = true;
            }
        }
        MaskColumn::Composite(c) => {
            runs(&c.runs);
            for &p in &c.points.positions {
                out[p] = true;
            }
        }
    }
    out
}

/// Value domain of generated data: small so that runs and matches occur.
#[derive(Clone, Copy, Debug)]
pub struct Domain {
    pub dtype: DType,
    pub distinct: i64,
}

impl Domain {
    pub fn pick(rng: &mut ChaCha8Rng) -> Domain {
        let dtype = *[DType::I8, DType::I16, DType::I32, DType::I64, DType::F64].choose(rng).unwrap();
        Domain { dtype, distinct: rng.gen_range(1..=12) }
    }

    pub fn value(&self, rng: &mut ChaCha8Rng) -> Scalar {
        let k = rng.gen_range(0..self.distinct) - self.distinct / 3;
        if self.dtype.is_float() {
            Scalar::Float(k as f64 * 0.5)
        } else {
            Scalar::Int(k)
        }
    }

    fn values(&self, v: Vec<Scalar>) -> Values {
        Values::from_scalars(&v).cast(self.dtype).unwrap_or_else(|_| Values::from_scalars(&v))
    }
}

/// Disjoint ascending runs over `0..n`; with `gaps`, uncovered rows may sit
/// between them.
pub fn random_runs(rng: &mut ChaCha8Rng, n: usize, gaps: bool, max_len: usize) -> Runs {
    let mut starts = Vec::new();
    let mut ends = Vec::new();
    let mut i = 0;
    while i < n {
        if gaps && rng.gen_bool(0.4) {
            i += rng.gen_range(1..=max_len.max(1));
            continue;
        }
        let len = rng.gen_range(1..=max_len.max(1)).min(n - i);
        starts.push(i);
        ends.push(i + len - 1);
        i += len;
    }
    Runs::new(starts, ends)
}

pub fn random_positions(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(density)).collect()
}

/// A random column of `n` rows in `enc`. Plain and Plain+Index columns are
/// gapless; the others have gaps when `gaps` holds.
pub fn random_column(rng: &mut ChaCha8Rng, n: usize, enc: Encoding, dom: Domain, gaps: bool) -> Column {
    match enc {
        Encoding::Plain => {
            let v: Vec<Scalar> = runny(rng, n, dom);
            let values = dom.values(v);
            if !values.is_float() && rng.gen_bool(0.3) {
                // Centred storage.
                let c = rng.gen_range(-3..=3);
                let stored = values.offset_i64(-c).unwrap();
                Column::Plain(PlainColumn::centered(stored, c, values.dtype().promote(DType::I64)))
            } else {
                Column::Plain(PlainColumn::new(values))
            }
        }
        Encoding::Rle => {
            let runs = random_runs(rng, n, gaps, 8);
            let v = (0..runs.len()).map(|_| dom.value(rng)).collect();
            Column::Rle(RleColumn { values: dom.values(v), runs, total_size: n })
        }
        Encoding::Index => {
            let p = if gaps { { let d = rng.gen_range(0.05..0.9); random_positions(rng, n, d) } } else { (0..n).collect() };
            let v = (0..p.len()).map(|_| dom.value(rng)).collect();
            Column::Index(IndexColumn { values: dom.values(v), positions: p, total_size: n })
        }
        Encoding::PlainIndex => {
            let int = Domain { dtype: if dom.dtype.is_float() { DType::I32 } else { dom.dtype.promote(DType::I32) }, ..dom };
            let mut v: Vec<Scalar> = runny(rng, n, int);
            for s in v.iter_mut() {
                if rng.gen_bool(0.03) {
                    *s = Scalar::Int(rng.gen_range(-100_000..100_000));
                }
            }
            let plain = PlainColumn::new(int.values(v));
            let pi: PlainIndexColumn = plain_to_plain_index(&plain, rng.gen_range(0.0..0.2)).unwrap();
            Column::PlainIndex(pi)
        }
        Encoding::RleIndex => {
            let runs = random_runs(rng, n, gaps, 8);
            let mut long = (Vec::new(), Vec::new(), Vec::new());
            let mut points = (Vec::new(), Vec::new());
            for k in 0..runs.len() {
                let (s, e) = (runs.starts[k], runs.ends[k]);
                if e > s && rng.gen_bool(0.6) {
                    long.0.push(dom.value(rng));
                    long.1.push(s);
                    long.2.push(e);
                } else {
                    for p in s..=e {
                        points.0.push(dom.value(rng));
                        points.1.push(p);
                    }
                }
            }
            Column::RleIndex(RleIndexColumn {
                runs: RleColumn { values: dom.values(long.0), runs: Runs::new(long.1, long.2), total_size: n },
                points: IndexColumn { values: dom.values(points.0), positions: points.1, total_size: n },
            })
        }
    }
}

/// Values with a tendency to repeat the previous one.
fn runny(rng: &mut ChaCha8Rng, n: usize, dom: Domain) -> Vec<Scalar> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && rng.gen_bool(0.6) {
            out.push(out[i - 1]);
        } else {
            out.push(dom.value(rng));
        }
    }
    out
}

pub fn random_mask(rng: &mut ChaCha8Rng, n: usize, enc: MaskEncoding) -> MaskColumn {
    match enc {
        MaskEncoding::Plain => {
            let p = rng.gen_range(0.0..1.0);
            MaskColumn::plain((0..n).map(|_| rng.gen_bool(p)).collect())
        }
        MaskEncoding::Rle => {
            let r = random_runs(rng, n, true, 10);
            MaskColumn::Rle(RleMask { runs: r, total_size: n })
        }
        MaskEncoding::Index => { let d = rng.gen_range(0.0..0.6); MaskColumn::index(random_positions(rng, n, d), n) },
        MaskEncoding::Composite => {
            let r = random_runs(rng, n, true, 10);
            let mut covered = vec![false; n];
            for k in 0..r.len() {
                for c in &mut covered[r.starts[k]..=r.ends[k]] {
                    *c = true;
                }
            }
            let pts: Vec<usize> = (0..n).filter(|&i| !covered[i] && rng.gen_bool(0.3)).collect();
            MaskColumn::Composite(CompositeMask { runs: RleMask { runs: r, total_size: n }, points: IndexMask::new(pts, n) })
        }
    }
}

/// Row-wise arithmetic with the engine's typing: integers in 64 bits,
/// anything with a float in f64.
pub fn ref_arith(a: Scalar, b: Scalar, op: ArithOp) -> Option<Scalar> {
    match (a, b) {
        (Scalar::Int(x), Scalar::Int(y)) => match op {
            ArithOp::Add => x.checked_add(y),
            ArithOp::Sub => x.checked_sub(y),
            ArithOp::Mul => x.checked_mul(y),
            ArithOp::Div => x.checked_div(y),
        }
        .map(Scalar::Int),
        _ => {
            let (x, y) = (a.as_f64(), b.as_f64());
            Some(Scalar::Float(match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => x / y,
            }))
        }
    }
}

pub fn ref_compare(a: Scalar, b: Scalar, op: CmpOp) -> bool {
    let ord = match (a, b) {
        (Scalar::Int(x), Scalar::Int(y)) => x.partial_cmp(&y),
        _ => a.as_f64().partial_cmp(&b.as_f64()),
    };
    use std::cmp::Ordering::*;
    match (op, ord) {
        (_, None) => op == CmpOp::Ne,
        (CmpOp::Lt, Some(o)) => o == Less,
        (CmpOp::Le, Some(o)) => o != Greater,
        (CmpOp::Eq, Some(o)) => o == Equal,
        (CmpOp::Ne, Some(o)) => o != Equal,
        (CmpOp::Ge, Some(o)) => o != Less,
        (CmpOp::Gt, Some(o)) => o == Greater,
    }
}

pub fn close(a: f64, b: f64) -> bool {
    if a.is_nan() || b.is_nan() {
        return a.is_nan() && b.is_nan();
    }
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Same value: integers exactly, floats within relative 1e-9.
pub fn same(a: Scalar, b: Scalar) -> bool {
    match (a, b) {
        (Scalar::Int(x), Scalar::Int(y)) => x == y,
        (Scalar::Float(x), Scalar::Float(y)) => close(x, y),
        _ => false,
    }
}

pub fn same_rows(a: &Rows, b: &Rows) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (x, y) {
            (None, None) => true,
            (Some(p), Some(q)) => same(*p, *q),
            _ => false,
        })
}

/// Groups rows where every key is present, keys in ascending order.
pub fn ref_groups(keys: &[Rows]) -> BTreeMap<Vec<OrdScalar>, Vec<usize>> {
    let n = keys[0].len();
    let mut g: BTreeMap<Vec<OrdScalar>, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let k: Option<Vec<OrdScalar>> = keys.iter().map(|c| c[i].map(OrdScalar)).collect();
        if let Some(k) = k {
            g.entry(k).or_default().push(i);
        }
    }
    g
}

/// Total order on scalars for use as map keys.
#[derive(Clone, Copy, Debug)]
pub struct OrdScalar(pub Scalar);

impl PartialEq for OrdScalar {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o).is_eq()
    }
}
impl Eq for OrdScalar {}
impl PartialOrd for OrdScalar {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for OrdScalar {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Equality as used by joins: numeric, with `-0.0 == 0.0`.
pub fn join_eq(a: Scalar, b: Scalar) -> bool {
    match (a, b) {
        (Scalar::Int(x), Scalar::Int(y)) => x == y,
        _ => a.as_f64() == b.as_f64(),
    }
}

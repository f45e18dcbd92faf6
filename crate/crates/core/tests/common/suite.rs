//! Randomized operator checks against the row-wise references.
//!
//! Every family draws at least [`INSTANCES`] inputs per encoding
//! combination, each over at most [`MAX_ROWS`] rows.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use rlex::align::{arith, compare, filter, scalar_arith, scalar_compare};
use rlex::column::{Column, Encoding, MaskEncoding, Validate};
use rlex::groupby::{aggregate, group, AggFunc};
use rlex::join::{apply_join_index, apply_join_index_general, get_join_index, semi_join};
use rlex::logic::{and_mask, not_mask, or_mask};
use rlex::values::{ArithOp, CmpOp, Scalar};

use super::*;

pub const INSTANCES: usize = 100;
pub const MAX_ROWS: usize = 4096;

#[derive(Debug, Default)]
pub struct Outcome {
    pub family: &'static str,
    pub instances: usize,
    pub failures: Vec<String>,
}

impl Outcome {
    fn new(family: &'static str) -> Self {
        Outcome { family, ..Default::default() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn size(rng: &mut ChaCha8Rng) -> usize {
    // Mostly small, sometimes near the limit.
    if rng.gen_bool(0.1) {
        rng.gen_range(1..=MAX_ROWS)
    } else {
        rng.gen_range(0..200)
    }
}

const ARITH: [ArithOp; 4] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div];
const CMP: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt];

/// Output layout of AND by operand layouts. Run masks meeting Plain bits
/// give points when the runs cover under 5% of the rows.
fn and_tag(a: &MaskColumn, b: &MaskColumn) -> MaskEncoding {
    use MaskEncoding::*;
    let sparse = |m: &MaskColumn| (m.count_true() as f64) < 0.05 * m.total_size() as f64;
    match (a.encoding(), b.encoding()) {
        (Composite, _) | (_, Composite) => Composite,
        (Rle, Rle) => Rle,
        (Plain, Plain) => Plain,
        (Rle, Plain) => if sparse(a) { Index } else { Plain },
        (Plain, Rle) => if sparse(b) { Index } else { Plain },
        _ => Index,
    }
}

fn or_tag(a: MaskEncoding, b: MaskEncoding) -> MaskEncoding {
    use MaskEncoding::*;
    match (a, b) {
        (Composite, _) | (_, Composite) | (Rle, Index) | (Index, Rle) => Composite,
        (Rle, Rle) => Rle,
        (Index, Index) => Index,
        _ => Plain,
    }
}

fn not_tag(a: MaskEncoding) -> MaskEncoding {
    if a == MaskEncoding::Plain { MaskEncoding::Plain } else { MaskEncoding::Rle }
}

pub fn mask_logic(seed: u64) -> Outcome {
    let mut out = Outcome::new("and/or/not");
    let mut rng = rng(seed);
    for &e1 in &MASK_ENCODINGS {
        for &e2 in &MASK_ENCODINGS {
            for i in 0..INSTANCES {
                let n = size(&mut rng);
                let (a, b) = (random_mask(&mut rng, n, e1), random_mask(&mut rng, n, e2));
                let (ba, bb) = (bits_of(&a), bits_of(&b));
                let and = and_mask(&a, &b).unwrap();
                let or = or_mask(&a, &b).unwrap();
                let want_and: Vec<bool> = ba.iter().zip(&bb).map(|(x, y)| *x && *y).collect();
                let want_or: Vec<bool> = ba.iter().zip(&bb).map(|(x, y)| *x || *y).collect();
                let and_ok = bits_of(&and) == want_and && and.validate().is_empty() && and.encoding() == and_tag(&a, &b);
                let or_ok = bits_of(&or) == want_or && or.validate().is_empty() && or.encoding() == or_tag(e1, e2);
                out.check(and_ok, || format!("AND {e1:?}x{e2:?} #{i} gave {:?}", and.encoding()));
                out.check(or_ok, || format!("OR {e1:?}x{e2:?} #{i} gave {:?}", or.encoding()));
                out.instances += 2;
            }
        }
        for i in 0..INSTANCES {
            let n = size(&mut rng);
            let a = random_mask(&mut rng, n, e1);
            let not = not_mask(&a);
            let want: Vec<bool> = bits_of(&a).iter().map(|b| !b).collect();
            let ok = bits_of(&not) == want && not.validate().is_empty() && not.encoding() == not_tag(e1);
            out.check(ok, || format!("NOT {e1:?} #{i} gave {:?}", not.encoding()));
            out.instances += 1;
        }
    }
    out
}

pub fn binary_ops(seed: u64) -> Outcome {
    let mut out = Outcome::new("binary ops");
    let mut rng = rng(seed);
    for &e1 in &ENCODINGS {
        for &e2 in &ENCODINGS {
            for i in 0..INSTANCES {
                let n = size(&mut rng);
                let (d1, d2) = (Domain::pick(&mut rng), Domain::pick(&mut rng));
                let gaps = rng.gen_bool(0.7);
                let a = random_column(&mut rng, n, e1, d1, gaps);
                let b = random_column(&mut rng, n, e2, d2, gaps);
                let (ra, rb) = (rows_of(&a), rows_of(&b));
                let op = *ARITH.choose(&mut rng).unwrap();
                // Integer division by zero on any shared row is an error.
                let want: Option<Rows> = ra
                    .iter()
                    .zip(&rb)
                    .map(|(x, y)| match (x, y) {
                        (Some(x), Some(y)) => ref_arith(*x, *y, op).map(Some),
                        _ => Some(None),
                    })
                    .collect();
                let ok = match (arith(&a, &b, op), want) {
                    (Ok(got), Some(want)) => same_rows(&rows_of(&got), &want) && got.validate().is_empty(),
                    (Err(_), None) => true,
                    _ => false,
                };
                out.check(ok, || format!("{op:?} {e1:?}x{e2:?} #{i}"));
                let cop = *CMP.choose(&mut rng).unwrap();
                let m = compare(&a, &b, cop).unwrap();
                let want: Vec<bool> = ra
                    .iter()
                    .zip(&rb)
                    .map(|(x, y)| matches!((x, y), (Some(x), Some(y)) if ref_compare(*x, *y, cop)))
                    .collect();
                out.check(bits_of(&m) == want && m.validate().is_empty(), || format!("{cop:?} {e1:?}x{e2:?} #{i}"));
                out.instances += 2;
            }
        }
        for i in 0..INSTANCES {
            let n = size(&mut rng);
            let dom = Domain::pick(&mut rng);
            let g_a = rng.gen_bool(0.7);
            let a = random_column(&mut rng, n, e1, dom, g_a);
            let ra = rows_of(&a);
            let k = if rng.gen_bool(0.3) {
                Scalar::Float(rng.gen_range(-3..6) as f64 * 0.5)
            } else if rng.gen_bool(0.1) {
                // Beyond any stored width.
                Scalar::Int(rng.gen_range(-1..=1) * 10_000_000_000)
            } else {
                Scalar::Int(rng.gen_range(-4..8))
            };
            let left = rng.gen_bool(0.5);
            let op = *ARITH.choose(&mut rng).unwrap();
            let want: Option<Rows> = ra
                .iter()
                .map(|x| match x {
                    Some(x) => if left { ref_arith(k, *x, op) } else { ref_arith(*x, k, op) }.map(Some),
                    None => Some(None),
                })
                .collect();
            let ok = match (scalar_arith(&a, k, op, left), want) {
                (Ok(got), Some(want)) => same_rows(&rows_of(&got), &want),
                (Err(_), None) => true,
                _ => false,
            };
            out.check(ok, || format!("scalar {op:?} {e1:?} k={k} left={left} #{i}"));
            let cop = *CMP.choose(&mut rng).unwrap();
            let m = scalar_compare(&a, k, cop, left).unwrap();
            let want: Vec<bool> = ra
                .iter()
                .map(|x| matches!(x, Some(x) if if left { ref_compare(k, *x, cop) } else { ref_compare(*x, k, cop) }))
                .collect();
            out.check(bits_of(&m) == want && m.validate().is_empty(), || format!("scalar {cop:?} {e1:?} k={k} #{i}"));
            out.instances += 2;
        }
    }
    out
}

pub fn filters(seed: u64) -> Outcome {
    let mut out = Outcome::new("filter");
    let mut rng = rng(seed);
    for &e in &ENCODINGS {
        for &me in &MASK_ENCODINGS {
            for i in 0..INSTANCES {
                let n = size(&mut rng);
                let dom = Domain::pick(&mut rng);
                let g_a = rng.gen_bool(0.7);
                let a = random_column(&mut rng, n, e, dom, g_a);
                let m = random_mask(&mut rng, n, me);
                let got = filter(&a, &m).unwrap();
                let bits = bits_of(&m);
                let want: Rows = rows_of(&a).into_iter().zip(&bits).map(|(x, &b)| if b { x } else { None }).collect();
                out.check(same_rows(&rows_of(&got), &want) && got.validate().is_empty(), || {
                    format!("filter {e:?} by {me:?} #{i}")
                });
                out.instances += 1;
            }
        }
    }
    out
}

const FUNCS: [AggFunc; 7] =
    [AggFunc::Sum, AggFunc::Count, AggFunc::Min, AggFunc::Max, AggFunc::Avg, AggFunc::Std, AggFunc::Var];

/// The aggregate of `vals` as the engine types it. Groups without data
/// hold the identity of the reduction; moments of no rows are NaN.
pub fn ref_aggregate(vals: &[Scalar], float: bool, f: AggFunc) -> Scalar {
    let fs: Vec<f64> = vals.iter().map(|v| v.as_f64()).collect();
    let is: Vec<i64> = vals.iter().filter_map(|v| v.as_i64()).collect();
    let n = vals.len() as f64;
    let mean = fs.iter().sum::<f64>() / n;
    let var = fs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    match (f, float) {
        (AggFunc::Count, _) => Scalar::Int(vals.len() as i64),
        (AggFunc::Sum, false) => Scalar::Int(is.iter().sum()),
        (AggFunc::Sum, true) => Scalar::Float(fs.iter().sum()),
        (AggFunc::Min, false) => Scalar::Int(is.iter().copied().min().unwrap_or(i64::MAX)),
        (AggFunc::Max, false) => Scalar::Int(is.iter().copied().max().unwrap_or(i64::MIN)),
        (AggFunc::Min, true) => Scalar::Float(fs.iter().copied().fold(f64::INFINITY, f64::min)),
        (AggFunc::Max, true) => Scalar::Float(fs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        (AggFunc::Avg, _) => Scalar::Float(mean),
        (AggFunc::Var, _) => Scalar::Float(var),
        (AggFunc::Std, _) => Scalar::Float(var.sqrt()),
    }
}

pub fn group_aggregates(seed: u64) -> Outcome {
    let mut out = Outcome::new("group-agg");
    let mut rng = rng(seed);
    for &ke in &ENCODINGS {
        for &de in &ENCODINGS {
            for i in 0..INSTANCES {
                let n = size(&mut rng);
                let kd = Domain { distinct: rng.gen_range(1..6), ..Domain::pick(&mut rng) };
                let gaps = rng.gen_bool(0.5);
                let mut keys = vec![random_column(&mut rng, n, ke, kd, gaps)];
                if rng.gen_bool(0.3) {
                    let e2 = *ENCODINGS.choose(&mut rng).unwrap();
                    keys.push(random_column(&mut rng, n, e2, Domain { distinct: 3, ..kd }, gaps));
                }
                let dom = Domain::pick(&mut rng);
                let data = random_column(&mut rng, n, de, dom, gaps);
                let key_rows: Vec<Rows> = keys.iter().map(rows_of).collect();
                let data_rows = rows_of(&data);
                let want = ref_groups(&key_rows);
                let refs: Vec<&Column> = keys.iter().collect();
                let g = group(&refs).unwrap();
                let got_keys: Vec<Vec<OrdScalar>> =
                    (0..g.n_groups).map(|j| g.keys.iter().map(|k| OrdScalar(k.get(j))).collect()).collect();
                let want_keys: Vec<Vec<OrdScalar>> = want.keys().cloned().collect();
                let keys_ok = got_keys.len() == want_keys.len()
                    && got_keys.iter().zip(&want_keys).all(|(a, b)| a.iter().zip(b).all(|(x, y)| same(x.0, y.0)));
                out.check(keys_ok, || format!("group keys {ke:?} #{i}"));
                let float = data.dtype().is_float();
                for f in FUNCS {
                    let got = aggregate(&data, &g, f).unwrap();
                    let ok = keys_ok
                        && want.values().enumerate().all(|(j, rows)| {
                            let vals: Vec<Scalar> = rows.iter().filter_map(|&r| data_rows[r]).collect();
                            same(got.get(j), ref_aggregate(&vals, float, f))
                        });
                    out.check(ok, || format!("{f:?} keys {ke:?} data {de:?} #{i}"));
                    out.instances += 1;
                }
            }
        }
    }
    out
}

/// Multiset of `(left payload, right payload)` over matching row pairs.
fn pair_payloads(l: &Rows, r: &Rows, lp: &Rows, rp: &Rows) -> Vec<(OrdScalar, OrdScalar)> {
    let mut out = Vec::new();
    for (i, a) in l.iter().enumerate() {
        let Some(a) = a else { continue };
        for (j, b) in r.iter().enumerate() {
            if matches!(b, Some(b) if join_eq(*a, *b)) {
                out.push((OrdScalar(lp[i].unwrap()), OrdScalar(rp[j].unwrap())));
            }
        }
    }
    out.sort();
    out
}

/// A payload laid out exactly like `key`, holding distinct values.
fn payload_like(key: &Column, base: i64) -> Column {
    let (shape, vals) = rlex::align::own_shape(key);
    let n = vals[0].len() as i64;
    shape.column(rlex::values::Values::I64((base..base + n).collect()), key.total_size())
}

pub fn joins(seed: u64) -> Outcome {
    let mut out = Outcome::new("join");
    let mut rng = rng(seed);
    for &le in &ENCODINGS {
        for &re in &ENCODINGS {
            for i in 0..INSTANCES {
                let (nl, nr) = (size(&mut rng).min(600), size(&mut rng).min(600));
                let dom = Domain { distinct: rng.gen_range(1..10), ..Domain::pick(&mut rng) };
                let dom_r = if rng.gen_bool(0.2) { Domain::pick(&mut rng) } else { dom };
                let lg = rng.gen_bool(0.6);
                let l = random_column(&mut rng, nl, le, dom, lg);
                let g_r = rng.gen_bool(0.6);
                let r = random_column(&mut rng, nr, re, dom_r, g_r);
                let (rl, rr) = (rows_of(&l), rows_of(&r));
                let j = get_join_index(&l, &r).unwrap();
                let lp = payload_like(&l, 0);
                let rp = payload_like(&r, 1_000_000);
                let la = apply_join_index(&lp, &j.left_index).unwrap();
                let ra = apply_join_index(&rp, &j.right_index).unwrap();
                let want = pair_payloads(&rl, &rr, &rows_of(&lp), &rows_of(&rp));
                let (gl, gr) = (rows_of(&la), rows_of(&ra));
                let mut got: Vec<(OrdScalar, OrdScalar)> = gl
                    .iter()
                    .zip(&gr)
                    .filter_map(|(a, b)| Some((OrdScalar((*a)?), OrdScalar((*b)?))))
                    .collect();
                got.sort();
                let dense = gl.iter().all(Option::is_some) && gr.iter().all(Option::is_some);
                let ok = j.cardinality == want.len() && la.total_size() == j.cardinality && dense && got == want;
                out.check(ok, || format!("join {le:?}x{re:?} #{i}"));
                // Keys carried through the join agree pairwise.
                let lk = rows_of(&apply_join_index(&l, &j.left_index).unwrap());
                let rk = rows_of(&apply_join_index(&r, &j.right_index).unwrap());
                let keys_ok = lk.iter().zip(&rk).all(|(a, b)| matches!((a, b), (Some(a), Some(b)) if join_eq(*a, *b)));
                out.check(keys_ok, || format!("join keys {le:?}x{re:?} #{i}"));
                let general = apply_join_index_general(&lp, &j.left_index).unwrap();
                out.check(rows_of(&general) == gl, || format!("fast path {le:?}x{re:?} #{i}"));
                let semi = semi_join(&l, &r).unwrap();
                let want_semi: Vec<bool> = rl
                    .iter()
                    .map(|a| matches!(a, Some(a) if rr.iter().any(|b| matches!(b, Some(b) if join_eq(*a, *b)))))
                    .collect();
                out.check(bits_of(&semi) == want_semi, || format!("semi {le:?}x{re:?} #{i}"));
                out.instances += 2;
            }
        }
    }
    out
}

/// Which encodings the join pairs cover, for reporting.
pub fn join_pairs() -> Vec<(Encoding, Encoding)> {
    ENCODINGS.iter().flat_map(|&a| ENCODINGS.iter().map(move |&b| (a, b))).collect()
}

pub fn mask_pairs() -> Vec<(MaskEncoding, MaskEncoding)> {
    MASK_ENCODINGS.iter().flat_map(|&a| MASK_ENCODINGS.iter().map(move |&b| (a, b))).collect()
}

//! The reference executor: decodes scanned columns and works row by row.

use std::borrow::Cow;
use std::collections::HashMap;
use std::time::Instant;

use super::plan::{resolve_literal, Expr, JoinKind, Literal, Plan};
use super::{agg_meta, check_compare, check_join_keys, join_output_name, literal_ctx, lookup, micros_since};
use super::{AggSpec, Catalog, ColMeta, ResultSet, Timing};
use crate::error::{Error, Result};
use crate::groupby::AggFunc;
use crate::values::{Scalar, Values};

struct Rel {
    meta: Vec<ColMeta>,
    cols: Vec<Values>,
    rows: usize,
}

pub(super) fn execute(catalog: &Catalog, plan: &Plan) -> Result<(ResultSet, Vec<Timing>)> {
    let mut timings = Vec::new();
    let rel = exec(catalog, plan, &mut timings)?;
    Ok((ResultSet { columns: rel.meta, values: rel.cols }, timings))
}

fn exec(catalog: &Catalog, plan: &Plan, timings: &mut Vec<Timing>) -> Result<Rel> {
    let (rel, t0) = match plan {
        Plan::Scan { table, columns } => {
            let t0 = Instant::now();
            let t = catalog.table(table)?;
            let names: Vec<String> = match columns {
                Some(c) => c.clone(),
                None => t.fields.iter().map(|f| f.name.clone()).collect(),
            };
            let mut meta = Vec::new();
            let mut cols = Vec::new();
            for n in &names {
                let i = t.position(n).ok_or_else(|| Error::Plan(format!("table {table} has no column {n}")))?;
                meta.push(ColMeta { name: n.clone(), kind: t.fields[i].kind, dictionary: t.dictionaries[i].clone() });
                cols.push(t.columns[i].decoded()?);
            }
            (Rel { meta, cols, rows: t.rows() }, t0)
        }
        Plan::Filter { input, predicate } => {
            let rel = exec(catalog, input, timings)?;
            let t0 = Instant::now();
            let keep = predicate_bits(predicate, &rel, catalog)?;
            let cols = rel.cols.iter().map(|c| c.select(&keep)).collect();
            let rows = keep.iter().filter(|&&b| b).count();
            (Rel { meta: rel.meta, cols, rows }, t0)
        }
        Plan::Project { input, columns } => {
            let rel = exec(catalog, input, timings)?;
            let t0 = Instant::now();
            let mut meta = Vec::new();
            let mut cols = Vec::new();
            for ne in columns {
                if let Expr::Column { name } = &ne.expr {
                    let i = lookup(&rel.meta, name)?;
                    meta.push(ColMeta { name: ne.name.clone(), ..rel.meta[i].clone() });
                    cols.push(rel.cols[i].clone());
                } else {
                    let v = values_of(&ne.expr, &rel)?;
                    meta.push(ColMeta::numeric(&ne.name, v.dtype()));
                    cols.push(v);
                }
            }
            (Rel { meta, cols, rows: rel.rows }, t0)
        }
        Plan::Join { left, right, on, kind } => {
            let l = exec(catalog, left, timings)?;
            let r = exec(catalog, right, timings)?;
            let t0 = Instant::now();
            let (li, ri) = (lookup(&l.meta, &on.left)?, lookup(&r.meta, &on.right)?);
            check_join_keys(&l.meta[li], &r.meta[ri])?;
            let (lk, rk) = (&l.cols[li], &r.cols[ri]);
            let float = lk.is_float() || rk.is_float();
            let mut table: HashMap<JoinKeyValue, Vec<usize>> = HashMap::new();
            for j in 0..r.rows {
                table.entry(join_key(rk, j, float)).or_default().push(j);
            }
            let out = match kind {
                JoinKind::Semi => {
                    let keep: Vec<bool> = (0..l.rows).map(|i| table.contains_key(&join_key(lk, i, float))).collect();
                    let rows = keep.iter().filter(|&&b| b).count();
                    Rel { cols: l.cols.iter().map(|c| c.select(&keep)).collect(), meta: l.meta, rows }
                }
                JoinKind::Inner => {
                    let mut lrows = Vec::new();
                    let mut rrows = Vec::new();
                    for i in 0..l.rows {
                        if let Some(m) = table.get(&join_key(lk, i, float)) {
                            for &j in m {
                                lrows.push(i);
                                rrows.push(j);
                            }
                        }
                    }
                    let mut meta = l.meta.clone();
                    let mut cols: Vec<Values> = l.cols.iter().map(|c| c.gather(&lrows)).collect();
                    for (m, c) in r.meta.iter().zip(&r.cols) {
                        meta.push(ColMeta { name: join_output_name(&meta, &m.name), ..m.clone() });
                        cols.push(c.gather(&rrows));
                    }
                    Rel { meta, cols, rows: lrows.len() }
                }
            };
            (out, t0)
        }
        Plan::GroupAgg { input, keys, aggs } => {
            let rel = exec(catalog, input, timings)?;
            let t0 = Instant::now();
            (group_agg(&rel, keys, aggs)?, t0)
        }
    };
    timings.push(Timing { node: plan.label().into(), micros: micros_since(t0) });
    Ok(rel)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum JoinKeyValue {
    Int(i64),
    Float(u64),
}

fn join_key(v: &Values, i: usize, float: bool) -> JoinKeyValue {
    match v.get(i) {
        Scalar::Int(x) if !float => JoinKeyValue::Int(x),
        s => {
            let f = s.as_f64();
            // 0.0 and -0.0 are equal keys.
            JoinKeyValue::Float(if f == 0.0 { 0 } else { f.to_bits() })
        }
    }
}

enum Operand<'r> {
    Vals(Cow<'r, Values>),
    Lit(Scalar),
}

fn no_context(v: &Literal) -> Result<Scalar> {
    resolve_literal(v, None)
}

fn operand<'r>(e: &Expr, rel: &'r Rel, lit: &dyn Fn(&Literal) -> Result<Scalar>) -> Result<Operand<'r>> {
    match e {
        Expr::Literal { value } => Ok(Operand::Lit(lit(value)?)),
        Expr::Column { name } => Ok(Operand::Vals(Cow::Borrowed(&rel.cols[lookup(&rel.meta, name)?]))),
        Expr::Binary { op, left, right } => {
            let a = operand(left, rel, &no_context)?;
            let b = operand(right, rel, &no_context)?;
            Ok(match (a, b) {
                (Operand::Vals(a), Operand::Vals(b)) => Operand::Vals(Cow::Owned(a.arith(&b, *op)?)),
                (Operand::Vals(a), Operand::Lit(k)) => Operand::Vals(Cow::Owned(a.arith_scalar(k, *op, false)?)),
                (Operand::Lit(k), Operand::Vals(b)) => Operand::Vals(Cow::Owned(b.arith_scalar(k, *op, true)?)),
                (Operand::Lit(x), Operand::Lit(y)) => Operand::Lit(x.arith(y, *op)?),
            })
        }
        _ => Err(Error::Plan("boolean expression used as a value".into())),
    }
}

/// One value per row; a constant expression is repeated on every row.
fn values_of(e: &Expr, rel: &Rel) -> Result<Values> {
    Ok(match operand(e, rel, &no_context)? {
        Operand::Vals(v) => v.into_owned(),
        Operand::Lit(k) => Values::filled(k, rel.rows),
    })
}

fn predicate_bits(e: &Expr, rel: &Rel, catalog: &Catalog) -> Result<Vec<bool>> {
    match e {
        Expr::Compare { op, left, right } => {
            check_compare(left, right, &rel.meta)?;
            let ctx = |other: &Expr| literal_ctx(other, &rel.meta, &catalog.dictionaries);
            let a = operand(left, rel, &|v| resolve_literal(v, ctx(right)))?;
            let b = operand(right, rel, &|v| resolve_literal(v, ctx(left)))?;
            match (a, b) {
                (Operand::Vals(a), Operand::Vals(b)) => a.compare(&b, *op),
                (Operand::Vals(a), Operand::Lit(k)) => Ok(a.compare_scalar(k, *op)),
                (Operand::Lit(k), Operand::Vals(b)) => Ok(b.compare_scalar(k, op.flip())),
                (Operand::Lit(x), Operand::Lit(y)) => Ok(vec![x.compare(y, *op); rel.rows]),
            }
        }
        Expr::And { args } => {
            let mut acc = vec![true; rel.rows];
            for a in args {
                for (x, y) in acc.iter_mut().zip(predicate_bits(a, rel, catalog)?) {
                    *x = *x && y;
                }
            }
            Ok(acc)
        }
        Expr::Or { args } => {
            let mut acc = vec![false; rel.rows];
            for a in args {
                for (x, y) in acc.iter_mut().zip(predicate_bits(a, rel, catalog)?) {
                    *x = *x || y;
                }
            }
            Ok(acc)
        }
        Expr::Not { arg } => Ok(predicate_bits(arg, rel, catalog)?.into_iter().map(|b| !b).collect()),
        _ => Err(Error::Plan("predicate must be a comparison or a boolean combination".into())),
    }
}

fn group_agg(rel: &Rel, keys: &[String], aggs: &[AggSpec]) -> Result<Rel> {
    let key_idx: Vec<usize> = keys.iter().map(|k| lookup(&rel.meta, k)).collect::<Result<_>>()?;
    // Group ids in order of first appearance, then renumbered by key order.
    let mut ids: HashMap<Vec<JoinKeyValue>, usize> = HashMap::new();
    let mut first_row = Vec::new();
    let mut gid = Vec::with_capacity(rel.rows);
    for i in 0..rel.rows {
        let k: Vec<JoinKeyValue> = key_idx.iter().map(|&c| exact_key(&rel.cols[c], i)).collect();
        let next = ids.len();
        let g = *ids.entry(k).or_insert_with(|| {
            first_row.push(i);
            next
        });
        gid.push(g);
    }
    let n = first_row.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        key_idx
            .iter()
            .map(|&c| rel.cols[c].get(first_row[a]).total_cmp(&rel.cols[c].get(first_row[b])))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut rank = vec![0; n];
    for (r, &g) in order.iter().enumerate() {
        rank[g] = r;
    }
    let gid: Vec<usize> = gid.into_iter().map(|g| rank[g]).collect();
    let reps: Vec<usize> = order.iter().map(|&g| first_row[g]).collect();

    let mut meta = Vec::new();
    let mut cols = Vec::new();
    for &c in &key_idx {
        meta.push(rel.meta[c].clone());
        cols.push(rel.cols[c].gather(&reps));
    }
    for spec in aggs {
        let (vals, source) = match &spec.column {
            Some(c) => {
                let i = lookup(&rel.meta, c)?;
                (Some(&rel.cols[i]), rel.meta[i].clone())
            }
            None if spec.func == AggFunc::Count => (None, ColMeta::numeric(&spec.name, crate::values::DType::I64)),
            None => return Err(Error::Plan(format!("aggregate {} needs a column", spec.name))),
        };
        let out = reduce(vals, &gid, n, spec.func)?;
        meta.push(agg_meta(spec, &source, &out));
        cols.push(out);
    }
    Ok(Rel { meta, cols, rows: n })
}

/// Bitwise identity of a value, so float keys group by exact value.
fn exact_key(v: &Values, i: usize) -> JoinKeyValue {
    match v.get(i) {
        Scalar::Int(x) => JoinKeyValue::Int(x),
        Scalar::Float(f) => JoinKeyValue::Float(f.to_bits()),
    }
}

fn reduce(vals: Option<&Values>, gid: &[usize], n: usize, func: AggFunc) -> Result<Values> {
    let Some(v) = vals else {
        let mut count = vec![0i64; n];
        for &g in gid {
            count[g] += 1;
        }
        return Ok(Values::I64(count));
    };
    let float = v.is_float();
    match func {
        AggFunc::Count => {
            let mut count = vec![0i64; n];
            for &g in gid {
                count[g] += 1;
            }
            Ok(Values::I64(count))
        }
        AggFunc::Sum | AggFunc::Min | AggFunc::Max if !float => {
            let mut acc: Vec<Option<i64>> = vec![None; n];
            for (i, &g) in gid.iter().enumerate() {
                let x = v.get(i).as_i64().unwrap();
                acc[g] = Some(match (acc[g], func) {
                    (None, _) => x,
                    (Some(a), AggFunc::Sum) => a.checked_add(x).ok_or(Error::Overflow("sum"))?,
                    (Some(a), AggFunc::Min) => a.min(x),
                    (Some(a), _) => a.max(x),
                });
            }
            Ok(Values::I64(acc.into_iter().map(|a| a.unwrap_or(0)).collect()))
        }
        AggFunc::Sum | AggFunc::Min | AggFunc::Max => {
            let mut acc: Vec<Option<f64>> = vec![None; n];
            for (i, &g) in gid.iter().enumerate() {
                let x = v.get(i).as_f64();
                acc[g] = Some(match (acc[g], func) {
                    (None, _) => x,
                    (Some(a), AggFunc::Sum) => a + x,
                    (Some(a), AggFunc::Min) => a.min(x),
                    (Some(a), _) => a.max(x),
                });
            }
            Ok(Values::F64(acc.into_iter().map(|a| a.unwrap_or(0.0)).collect()))
        }
        AggFunc::Avg | AggFunc::Var | AggFunc::Std => {
            // Two passes: mean, then mean squared deviation.
            let mut sum = vec![0f64; n];
            let mut cnt = vec![0f64; n];
            for (i, &g) in gid.iter().enumerate() {
                sum[g] += v.get(i).as_f64();
                cnt[g] += 1.0;
            }
            let mean: Vec<f64> = sum.iter().zip(&cnt).map(|(s, c)| s / c).collect();
            if func == AggFunc::Avg {
                return Ok(Values::F64(mean));
            }
            let mut ss = vec![0f64; n];
            for (i, &g) in gid.iter().enumerate() {
                let d = v.get(i).as_f64() - mean[g];
                ss[g] += d * d;
            }
            let var: Vec<f64> = ss.iter().zip(&cnt).map(|(s, c)| s / c).collect();
            Ok(Values::F64(if func == AggFunc::Var { var } else { var.into_iter().map(f64::sqrt).collect() }))
        }
    }
}

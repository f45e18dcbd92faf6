//! Plan execution on encoded columns.
//!
//! Rows keep their scan positions until a join or aggregation renumbers
//! them. A filter therefore leaves every column over the same position
//! space with gaps where rows were dropped, and `coverage` records which
//! rows are still present.

use std::borrow::Cow;
use std::time::Instant;

use super::plan::{resolve_literal, Expr, JoinKind, Plan};
use super::{agg_meta, check_compare, check_join_keys, join_output_name, literal_ctx, lookup, micros_since};
use super::{Catalog, ColMeta, ResultSet, Timing};
use crate::align::{arith, compare, filter, scalar_arith, scalar_compare};
use crate::column::{Column, MaskColumn, PlainColumn, RleColumn, Runs};
use crate::error::{Error, Result};
use crate::groupby::{aggregate, group, AggFunc};
use crate::join::{apply_join_index, get_join_index, semi_join};
use crate::logic::{and_mask, not_mask, or_mask};
use crate::values::{Scalar, Values};

struct Rel<'a> {
    meta: Vec<ColMeta>,
    cols: Vec<Cow<'a, Column>>,
    total: usize,
    /// Rows still present; `None` means all of `0..total`.
    coverage: Option<MaskColumn>,
}

impl Rel<'_> {
    fn col(&self, name: &str) -> Result<&Column> {
        Ok(&self.cols[lookup(&self.meta, name)?])
    }

    /// A column holding `k` on every present row.
    fn constant(&self, k: Scalar) -> Result<Column> {
        if self.total == 0 {
            return Ok(Column::plain(Values::filled(k, 0)));
        }
        let c = Column::Rle(RleColumn { values: Values::filled(k, 1), runs: Runs::single(0, self.total - 1), total_size: self.total });
        match &self.coverage {
            Some(m) => filter(&c, m),
            None => Ok(c),
        }
    }
}

enum Val<'r> {
    Col(Cow<'r, Column>),
    Lit(Scalar),
}

pub(super) fn execute(catalog: &Catalog, plan: &Plan) -> Result<(ResultSet, Vec<Timing>)> {
    let mut timings = Vec::new();
    let rel = exec(catalog, plan, &mut timings)?;
    let t = Instant::now();
    let result = materialize(&rel)?;
    timings.push(Timing { node: "materialize".into(), micros: micros_since(t) });
    Ok((result, timings))
}

fn exec<'a>(catalog: &'a Catalog, plan: &Plan, timings: &mut Vec<Timing>) -> Result<Rel<'a>> {
    let rel = match plan {
        Plan::Scan { table, columns } => {
            let t0 = Instant::now();
            let t = catalog.table(table)?;
            let idx: Vec<usize> = match columns {
                Some(cs) => cs
                    .iter()
                    .map(|c| t.position(c).ok_or_else(|| Error::Plan(format!("table {table} has no column {c}"))))
                    .collect::<Result<_>>()?,
                None => (0..t.columns.len()).collect(),
            };
            let rel = Rel {
                meta: idx
                    .iter()
                    .map(|&i| ColMeta {
                        name: t.fields[i].name.clone(),
                        kind: t.fields[i].kind,
                        dictionary: t.dictionaries[i].clone(),
                    })
                    .collect(),
                cols: idx.iter().map(|&i| Cow::Borrowed(&t.columns[i])).collect(),
                total: t.rows(),
                coverage: None,
            };
            timings.push(Timing { node: plan.label().into(), micros: micros_since(t0) });
            return Ok(rel);
        }
        _ => {
            let out = match plan {
                Plan::Filter { input, predicate } => {
                    let rel = exec(catalog, input, timings)?;
                    let t0 = Instant::now();
                    let m = eval_mask(predicate, &rel, catalog)?;
                    let out = apply_filter(rel, &m)?;
                    (out, t0)
                }
                Plan::Project { input, columns } => {
                    let rel = exec(catalog, input, timings)?;
                    let t0 = Instant::now();
                    let mut meta = Vec::new();
                    let mut cols = Vec::new();
                    for ne in columns {
                        let (m, c) = match &ne.expr {
                            Expr::Column { name } => {
                                let i = lookup(&rel.meta, name)?;
                                (ColMeta { name: ne.name.clone(), ..rel.meta[i].clone() }, rel.cols[i].clone())
                            }
                            e => {
                                let c = match eval_data(e, &rel)? {
                                    Val::Col(c) => c.into_owned(),
                                    Val::Lit(k) => rel.constant(k)?,
                                };
                                (ColMeta::numeric(&ne.name, c.dtype()), Cow::Owned(c))
                            }
                        };
                        meta.push(m);
                        cols.push(c);
                    }
                    (Rel { meta, cols, total: rel.total, coverage: rel.coverage }, t0)
                }
                Plan::Join { left, right, on, kind } => {
                    let l = exec(catalog, left, timings)?;
                    let r = exec(catalog, right, timings)?;
                    let t0 = Instant::now();
                    let (li, ri) = (lookup(&l.meta, &on.left)?, lookup(&r.meta, &on.right)?);
                    check_join_keys(&l.meta[li], &r.meta[ri])?;
                    let out = match kind {
                        JoinKind::Semi => {
                            let m = semi_join(&l.cols[li], &r.cols[ri])?;
                            apply_filter(l, &m)?
                        }
                        JoinKind::Inner => {
                            let j = get_join_index(&l.cols[li], &r.cols[ri])?;
                            let mut meta = l.meta.clone();
                            let mut cols = Vec::with_capacity(l.cols.len() + r.cols.len());
                            for c in &l.cols {
                                cols.push(Cow::Owned(apply_join_index(c, &j.left_index)?));
                            }
                            for (m, c) in r.meta.iter().zip(&r.cols) {
                                let name = join_output_name(&meta, &m.name);
                                meta.push(ColMeta { name, ..m.clone() });
                                cols.push(Cow::Owned(apply_join_index(c, &j.right_index)?));
                            }
                            Rel { meta, cols, total: j.cardinality, coverage: None }
                        }
                    };
                    (out, t0)
                }
                Plan::GroupAgg { input, keys, aggs } => {
                    let rel = exec(catalog, input, timings)?;
                    let t0 = Instant::now();
                    (group_agg(&rel, keys, aggs)?, t0)
                }
                Plan::Scan { .. } => unreachable!(),
            };
            let (rel, started) = out;
            timings.push(Timing { node: plan.label().into(), micros: micros_since(started) });
            rel
        }
    };
    Ok(rel)
}

fn apply_filter<'a>(rel: Rel<'a>, m: &MaskColumn) -> Result<Rel<'a>> {
    if m.count_true() == rel.total {
        return Ok(rel);
    }
    let cols = rel.cols.iter().map(|c| filter(c, m).map(Cow::Owned)).collect::<Result<_>>()?;
    let coverage = match &rel.coverage {
        Some(c) => and_mask(c, m)?,
        None => m.clone(),
    };
    Ok(Rel { meta: rel.meta, cols, total: rel.total, coverage: Some(coverage) })
}

fn group_agg<'a>(rel: &Rel<'_>, keys: &[String], aggs: &[super::AggSpec]) -> Result<Rel<'a>> {
    let constant;
    let key_cols: Vec<&Column> = if keys.is_empty() {
        constant = rel.constant(Scalar::Int(0))?;
        vec![&constant]
    } else {
        keys.iter().map(|k| rel.col(k)).collect::<Result<_>>()?
    };
    let g = group(&key_cols)?;
    let mut meta = Vec::new();
    let mut cols = Vec::new();
    if !keys.is_empty() {
        for (k, v) in keys.iter().zip(&g.keys) {
            meta.push(rel.meta[lookup(&rel.meta, k)?].clone());
            cols.push(Cow::Owned(Column::Plain(PlainColumn::new(v.clone()))));
        }
    }
    for spec in aggs {
        let (data, source) = match &spec.column {
            Some(c) => (rel.col(c)?, rel.meta[lookup(&rel.meta, c)?].clone()),
            None if spec.func == AggFunc::Count => (key_cols[0], ColMeta::numeric(&spec.name, crate::values::DType::I64)),
            None => return Err(Error::Plan(format!("aggregate {} needs a column", spec.name))),
        };
        let out = aggregate(data, &g, spec.func)?;
        meta.push(agg_meta(spec, &source, &out));
        cols.push(Cow::Owned(Column::Plain(PlainColumn::new(out))));
    }
    Ok(Rel { meta, cols, total: g.n_groups, coverage: None })
}

fn eval_data<'r>(e: &Expr, rel: &'r Rel<'_>) -> Result<Val<'r>> {
    match e {
        Expr::Column { name } => Ok(Val::Col(Cow::Borrowed(rel.col(name)?))),
        Expr::Literal { value } => Ok(Val::Lit(resolve_literal(value, None)?)),
        Expr::Binary { op, left, right } => {
            let (a, b) = (eval_data(left, rel)?, eval_data(right, rel)?);
            Ok(match (a, b) {
                (Val::Col(a), Val::Col(b)) => Val::Col(Cow::Owned(arith(&a, &b, *op)?)),
                (Val::Col(a), Val::Lit(k)) => Val::Col(Cow::Owned(scalar_arith(&a, k, *op, false)?)),
                (Val::Lit(k), Val::Col(b)) => Val::Col(Cow::Owned(scalar_arith(&b, k, *op, true)?)),
                (Val::Lit(x), Val::Lit(y)) => Val::Lit(x.arith(y, *op)?),
            })
        }
        _ => Err(Error::Plan("boolean expression used as a value".into())),
    }
}

/// A comparison operand; a literal is read against the other side.
fn operand<'r>(e: &Expr, other: &Expr, rel: &'r Rel<'_>, catalog: &Catalog) -> Result<Val<'r>> {
    match e {
        Expr::Literal { value } => {
            Ok(Val::Lit(resolve_literal(value, literal_ctx(other, &rel.meta, &catalog.dictionaries))?))
        }
        _ => eval_data(e, rel),
    }
}

fn eval_mask(e: &Expr, rel: &Rel<'_>, catalog: &Catalog) -> Result<MaskColumn> {
    match e {
        Expr::Compare { op, left, right } => {
            check_compare(left, right, &rel.meta)?;
            let a = operand(left, right, rel, catalog)?;
            let b = operand(right, left, rel, catalog)?;
            match (a, b) {
                (Val::Lit(x), Val::Lit(y)) => {
                    Ok(if x.compare(y, *op) { MaskColumn::full(rel.total) } else { MaskColumn::none(rel.total) })
                }
                (Val::Lit(k), Val::Col(c)) => scalar_compare(&c, k, *op, true),
                (Val::Col(c), Val::Lit(k)) => scalar_compare(&c, k, *op, false),
                (Val::Col(a), Val::Col(b)) => compare(&a, &b, *op),
            }
        }
        Expr::And { args } => fold(args, rel, catalog, true),
        Expr::Or { args } => fold(args, rel, catalog, false),
        Expr::Not { arg } => Ok(not_mask(&eval_mask(arg, rel, catalog)?)),
        Expr::Literal { .. } | Expr::Column { .. } | Expr::Binary { .. } => {
            Err(Error::Plan("predicate must be a comparison or a boolean combination".into()))
        }
    }
}

fn fold(args: &[Expr], rel: &Rel<'_>, catalog: &Catalog, and: bool) -> Result<MaskColumn> {
    let mut it = args.iter();
    let Some(first) = it.next() else {
        return Ok(if and { MaskColumn::full(rel.total) } else { MaskColumn::none(rel.total) });
    };
    let mut acc = eval_mask(first, rel, catalog)?;
    for a in it {
        let m = eval_mask(a, rel, catalog)?;
        acc = if and { and_mask(&acc, &m)? } else { or_mask(&acc, &m)? };
    }
    Ok(acc)
}

/// Present rows in position order, decoded.
fn materialize(rel: &Rel<'_>) -> Result<ResultSet> {
    let present: Option<Vec<usize>> = rel.coverage.as_ref().map(|m| m.true_positions());
    let mut values = Vec::with_capacity(rel.cols.len());
    for c in &rel.cols {
        let (pos, v) = c.materialize();
        let v = match &present {
            Some(p) if &pos != p => {
                return Err(Error::invalid(format!(
                    "column covers {} rows where the relation has {}",
                    pos.len(),
                    p.len()
                )))
            }
            Some(_) => v,
            None if pos.len() == rel.total => v,
            None => return Err(Error::invalid("column has gaps in a relation without a filter")),
        };
        values.push(v);
    }
    Ok(ResultSet { columns: rel.meta.clone(), values })
}

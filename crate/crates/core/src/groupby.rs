//! Grouping and aggregation over encoded columns.
//!
//! Grouping aligns the key columns and assigns a group id to every entry of
//! the shared shape. For runs that is one id per run, never per row.
//! Aggregation aligns the ids with a data column and scatters, weighting
//! each entry by the number of rows it covers.

use serde::{Deserialize, Serialize};

use crate::align::{align, align_many, Shape};
use crate::column::Column;
use crate::error::{Error, Result};
use crate::kernels::{scatter_reduce, unique_with_inverse, Reduce};
use crate::values::Values;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupingResult {
    /// Shape shared by all key columns.
    pub shape: Shape,
    pub total_size: usize,
    /// Group id of each shape entry.
    pub inverse: Vec<usize>,
    pub n_groups: usize,
    /// Distinct keys in ascending order, one array per key column.
    pub keys: Vec<Values>,
}

impl GroupingResult {
    /// The group ids as a column over the key shape.
    pub fn id_column(&self) -> Column {
        let ids = Values::I64(self.inverse.iter().map(|&g| g as i64).collect());
        self.shape.column(ids, self.total_size)
    }
}

pub fn group(keys: &[&Column]) -> Result<GroupingResult> {
    if keys.is_empty() {
        return Err(Error::invalid("group needs at least one key column"));
    }
    let total_size = keys[0].total_size();
    let (shape, values) = align_many(keys)?;
    let refs: Vec<&Values> = values.iter().collect();
    let (keys, inverse) = unique_with_inverse(&refs)?;
    let n_groups = keys.first().map_or(0, |k| k.len());
    Ok(GroupingResult { shape, total_size, inverse, n_groups, keys })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFunc {
    Sum,
    Count,
    Min,
    Max,
    Avg,
    Std,
    Var,
}

/// One result per group. Integer SUM, COUNT, MIN and MAX are exact `i64`;
/// AVG, STD and VAR are `f64` and NaN for empty groups. Variance divides by
/// the row count.
pub fn aggregate(data: &Column, g: &GroupingResult, func: AggFunc) -> Result<Values> {
    let pair = align(&g.id_column(), data)?;
    let ids: Vec<usize> = pair.v1.iter_i64().map(|i| i as usize).collect();
    let weights = pair.shape.weights();
    aggregate_entries(&pair.v2, &weights, &ids, g.n_groups, func)
}

/// Aggregates entry values where entry `i` stands for `weights[i]` rows.
pub fn aggregate_entries(
    values: &Values,
    weights: &[usize],
    ids: &[usize],
    n_groups: usize,
    func: AggFunc,
) -> Result<Values> {
    let float = values.is_float();
    match func {
        AggFunc::Count => {
            let w: Vec<i64> = weights.iter().map(|&l| l as i64).collect();
            Ok(Values::I64(scatter_reduce(&w, ids, n_groups, Reduce::Sum)?))
        }
        AggFunc::Sum if !float => {
            let v = weighted_i64(values, weights)?;
            Ok(Values::I64(scatter_reduce(&v, ids, n_groups, Reduce::Sum)?))
        }
        AggFunc::Sum => {
            let v: Vec<f64> = values.iter_f64().zip(weights).map(|(x, &l)| x * l as f64).collect();
            Ok(Values::F64(scatter_reduce(&v, ids, n_groups, Reduce::Sum)?))
        }
        AggFunc::Min | AggFunc::Max => {
            let op = if func == AggFunc::Min { Reduce::Min } else { Reduce::Max };
            if float {
                Ok(Values::F64(scatter_reduce(&values.to_f64_vec(), ids, n_groups, op)?))
            } else {
                Ok(Values::I64(scatter_reduce(&values.to_i64_vec().unwrap(), ids, n_groups, op)?))
            }
        }
        AggFunc::Avg | AggFunc::Var | AggFunc::Std => moments(values, weights, ids, n_groups, func),
    }
}

fn weighted_i64(values: &Values, weights: &[usize]) -> Result<Vec<i64>> {
    values
        .iter_i64()
        .zip(weights)
        .map(|(x, &l)| x.checked_mul(l as i64).ok_or(Error::Overflow("weighted sum")))
        .collect()
}

/// Mean and population variance from shifted sums. Each group is shifted by
/// its first value so large offsets do not cancel catastrophically.
fn moments(values: &Values, weights: &[usize], ids: &[usize], n_groups: usize, func: AggFunc) -> Result<Values> {
    let v = values.to_f64_vec();
    let mut shift = vec![f64::NAN; n_groups];
    for (&x, &g) in v.iter().zip(ids) {
        let s = shift.get_mut(g).ok_or(Error::IndexOutOfRange { index: g, len: n_groups })?;
        if s.is_nan() {
            *s = x;
        }
    }
    let mut count = vec![0f64; n_groups];
    let mut sum = vec![0f64; n_groups];
    let mut sq = vec![0f64; n_groups];
    for ((&x, &l), &g) in v.iter().zip(weights).zip(ids) {
        let d = x - shift[g];
        let l = l as f64;
        count[g] += l;
        sum[g] += d * l;
        sq[g] += d * d * l;
    }
    let out = (0..n_groups)
        .map(|g| {
            let n = count[g];
            if n == 0.0 {
                return f64::NAN;
            }
            let mean_d = sum[g] / n;
            let var = (sq[g] / n - mean_d * mean_d).max(0.0);
            match func {
                AggFunc::Avg => shift[g] + mean_d,
                AggFunc::Var => var,
                _ => var.sqrt(),
            }
        })
        .collect();
    Ok(Values::F64(out))
}

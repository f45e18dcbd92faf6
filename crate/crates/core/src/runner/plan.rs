//! JSON query plans.
//!
//! A plan is a tree of nodes tagged by `"op"`; expressions are tagged by
//! `"kind"`. Example:
//!
//! ```json
//! {"op": "group_agg",
//!  "input": {"op": "scan", "table": "t", "columns": ["k", "v"]},
//!  "keys": ["k"],
//!  "aggs": [{"func": "sum", "column": "v", "name": "total"}]}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupby::AggFunc;
use crate::ingest::{Dictionary, FieldType};
use crate::values::{ArithOp, CmpOp, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Plan {
    /// All columns of `table`, or the listed ones in that order.
    Scan {
        table: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        columns: Option<Vec<String>>,
    },
    Filter { input: Box<Plan>, predicate: Expr },
    Project { input: Box<Plan>, columns: Vec<NamedExpr> },
    /// Equi-join on `on[i].left = on[i].right`; only single-key joins are
    /// supported. Inner joins output left columns then right columns.
    Join {
        left: Box<Plan>,
        right: Box<Plan>,
        on: JoinKey,
        #[serde(default)]
        kind: JoinKind,
    },
    /// Grouped aggregation; with no keys, one row over all input rows.
    GroupAgg {
        input: Box<Plan>,
        #[serde(default)]
        keys: Vec<String>,
        aggs: Vec<AggSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinKey {
    pub left: String,
    pub right: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JoinKind {
    #[default]
    Inner,
    /// Left rows with at least one match; outputs left columns only.
    Semi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedExpr {
    pub name: String,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggSpec {
    pub func: AggFunc,
    /// Aggregated column; COUNT may omit it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expr {
    Column { name: String },
    Literal { value: Literal },
    Binary { op: ArithOp, left: Box<Expr>, right: Box<Expr> },
    Compare { op: CmpOp, left: Box<Expr>, right: Box<Expr> },
    And { args: Vec<Expr> },
    Or { args: Vec<Expr> },
    Not { arg: Box<Expr> },
}

/// A constant. Strings are looked up in the dictionary of the column they
/// are compared with, or parsed as `YYYY-MM-DD` against date columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Str(String),
}

impl Expr {
    pub fn col(name: &str) -> Expr {
        Expr::Column { name: name.into() }
    }

    pub fn lit(v: impl Into<Scalar>) -> Expr {
        Expr::Literal {
            value: match v.into() {
                Scalar::Int(i) => Literal::Int(i),
                Scalar::Float(f) => Literal::Float(f),
            },
        }
    }

    pub fn cmp(op: CmpOp, left: Expr, right: Expr) -> Expr {
        Expr::Compare { op, left: Box::new(left), right: Box::new(right) }
    }

    pub fn bin(op: ArithOp, left: Expr, right: Expr) -> Expr {
        Expr::Binary { op, left: Box::new(left), right: Box::new(right) }
    }
}

impl Plan {
    pub fn scan(table: &str) -> Plan {
        Plan::Scan { table: table.into(), columns: None }
    }

    pub fn from_json(s: &str) -> Result<Plan> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans serialize")
    }

    /// Short label used in timing reports.
    pub fn label(&self) -> &'static str {
        match self {
            Plan::Scan { .. } => "scan",
            Plan::Filter { .. } => "filter",
            Plan::Project { .. } => "project",
            Plan::Join { kind: JoinKind::Inner, .. } => "join",
            Plan::Join { kind: JoinKind::Semi, .. } => "semi_join",
            Plan::GroupAgg { .. } => "group_agg",
        }
    }
}

/// What a column needs to know to read a string literal.
#[derive(Clone, Copy, Debug)]
pub struct LiteralContext<'a> {
    pub kind: FieldType,
    pub dictionary: Option<&'a Dictionary>,
}

/// A literal as a number, read against the column it meets.
///
/// A string absent from the dictionary becomes `-1`, a code no row holds.
pub fn resolve_literal(lit: &Literal, ctx: Option<LiteralContext<'_>>) -> Result<Scalar> {
    match lit {
        Literal::Int(i) => Ok(Scalar::Int(*i)),
        Literal::Float(f) => Ok(Scalar::Float(*f)),
        Literal::Str(s) => match ctx {
            Some(LiteralContext { kind: FieldType::String, dictionary }) => {
                Ok(Scalar::Int(dictionary.and_then(|d| d.code(s)).map_or(-1, i64::from)))
            }
            Some(LiteralContext { kind: FieldType::Date, .. }) => {
                let d = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
                    .map_err(|e| Error::Plan(format!("bad date literal {s:?}: {e}")))?;
                let epoch = chrono::NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
                Ok(Scalar::Int((d - epoch).num_days()))
            }
            _ => Err(Error::Plan(format!("string literal {s:?} must be compared with a string or date column"))),
        },
    }
}

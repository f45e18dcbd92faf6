//! Plan execution, differential checking and run reports.
//!
//! A plan runs in one of three modes. `Compressed` executes every operator
//! on the encoded columns. `Plain` decodes the scanned columns and runs
//! straightforward row-wise code; it shares no operator code with the
//! compressed path and serves as the oracle. `Diff` runs both and compares
//! the results as row multisets.

mod catalog;
mod compressed;
pub mod plan;
mod plain;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use catalog::{parse_sort_spec, Catalog};
pub use plan::{AggSpec, Expr, JoinKey, JoinKind, Literal, NamedExpr, Plan};

use crate::column::{stats, ColumnStats};
use crate::error::{Error, Result};
use crate::groupby::AggFunc;
use crate::ingest::{Dictionaries, FieldType, Table};
use crate::values::{DType, Scalar, Values};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Compressed,
    Plain,
    #[serde(alias = "differential")]
    Diff,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "compressed" => Ok(Mode::Compressed),
            "plain" => Ok(Mode::Plain),
            "diff" | "differential" => Ok(Mode::Diff),
            _ => Err(Error::invalid(format!("unknown mode {s:?}"))),
        }
    }
}

/// Name and interpretation of a relation column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColMeta {
    pub name: String,
    pub kind: FieldType,
    pub dictionary: Option<String>,
}

impl ColMeta {
    fn numeric(name: &str, dtype: DType) -> ColMeta {
        let kind = if dtype.is_float() { FieldType::Float } else { FieldType::Int };
        ColMeta { name: name.into(), kind, dictionary: None }
    }
}

/// A query result: one decoded value array per output column.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultSet {
    pub columns: Vec<ColMeta>,
    pub values: Vec<Values>,
}

impl ResultSet {
    pub fn rows(&self) -> usize {
        self.values.first().map_or(0, Values::len)
    }

    pub fn row(&self, i: usize) -> Vec<Scalar> {
        self.values.iter().map(|v| v.get(i)).collect()
    }

    /// Rows in ascending order of all columns, first column first.
    pub fn canonical_rows(&self) -> Vec<Vec<Scalar>> {
        let mut rows: Vec<Vec<Scalar>> = (0..self.rows()).map(|i| self.row(i)).collect();
        rows.sort_by(|a, b| {
            a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
        rows
    }

    /// Rows as JSON, with dictionary codes and dates shown as strings.
    pub fn json_rows(&self, dicts: &Dictionaries) -> Vec<Vec<serde_json::Value>> {
        (0..self.rows())
            .map(|i| self.columns.iter().zip(&self.values).map(|(m, v)| display_value(m, v.get(i), dicts)).collect())
            .collect()
    }
}

fn display_value(meta: &ColMeta, v: Scalar, dicts: &Dictionaries) -> serde_json::Value {
    match (meta.kind, v) {
        (FieldType::String, Scalar::Int(c)) => meta
            .dictionary
            .as_ref()
            .and_then(|d| dicts.get(d))
            .and_then(|d| d.decode(c))
            .map_or(serde_json::Value::from(c), serde_json::Value::from),
        (FieldType::Date, Scalar::Int(d)) => {
            let epoch = chrono::NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
            epoch
                .checked_add_signed(chrono::Duration::days(d))
                .map_or(serde_json::Value::from(d), |x| serde_json::Value::from(x.format("%Y-%m-%d").to_string()))
        }
        (_, Scalar::Int(i)) => serde_json::Value::from(i),
        (_, Scalar::Float(f)) => serde_json::Number::from_f64(f).map_or(serde_json::Value::Null, serde_json::Value::Number),
    }
}

/// Relative tolerance for float results.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

fn scalar_matches(a: Scalar, b: Scalar) -> bool {
    match (a, b) {
        (Scalar::Int(x), Scalar::Int(y)) => x == y,
        _ => {
            let (x, y) = (a.as_f64(), b.as_f64());
            if x.is_nan() || y.is_nan() {
                return x.is_nan() && y.is_nan();
            }
            x == y || (x - y).abs() <= FLOAT_TOLERANCE * x.abs().max(y.abs())
        }
    }
}

/// First difference between two results compared as row multisets.
pub fn compare_results(a: &ResultSet, b: &ResultSet) -> Option<String> {
    let names = |r: &ResultSet| r.columns.iter().map(|c| c.name.clone()).collect::<Vec<_>>();
    if names(a) != names(b) {
        return Some(format!("column names differ: {:?} vs {:?}", names(a), names(b)));
    }
    if a.rows() != b.rows() {
        return Some(format!("row counts differ: {} vs {}", a.rows(), b.rows()));
    }
    let (ra, rb) = (a.canonical_rows(), b.canonical_rows());
    for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
        if !x.iter().zip(y).all(|(&p, &q)| scalar_matches(p, q)) {
            let show = |r: &[Scalar]| r.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ");
            return Some(format!("row {i} differs: ({}) vs ({})", show(x), show(y)));
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub node: String,
    pub micros: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanStats {
    pub table: String,
    pub column: String,
    pub stats: ColumnStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffOutcome {
    pub matched: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_mismatch: Option<String>,
    pub plain_micros: u64,
    pub plain_peak_bytes: Option<usize>,
}

/// Result and measurements of one run.
///
/// In `Diff` mode the measurements are those of the compressed run, with
/// the plain run summarised under `differential`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<serde_json::Value>>,
    pub row_count: usize,
    /// Statistics of every scanned column.
    pub stats: Vec<ScanStats>,
    /// Sum of `encoded_bytes` over `stats`.
    pub input_bytes: usize,
    /// Sum of `plain_bytes` over `stats`.
    pub plain_input_bytes: usize,
    /// Per node, children before parents.
    pub timings: Vec<Timing>,
    pub total_micros: u64,
    /// Most bytes allocated and live at once during the run, beyond what
    /// was live when it started. Needs [`crate::alloc::TrackingAllocator`].
    pub peak_bytes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub differential: Option<DiffOutcome>,
    #[serde(skip)]
    pub result: Option<ResultSet>,
}

impl RunReport {
    pub fn matched(&self) -> bool {
        self.differential.as_ref().is_none_or(|d| d.matched)
    }
}

struct Executed {
    result: ResultSet,
    timings: Vec<Timing>,
    micros: u64,
    peak: Option<usize>,
}

fn execute(catalog: &Catalog, plan: &Plan, plain: bool) -> Result<Executed> {
    let start = Instant::now();
    let (out, peak) = crate::alloc::measure(|| {
        if plain {
            plain::execute(catalog, plan)
        } else {
            compressed::execute(catalog, plan)
        }
    });
    let micros = start.elapsed().as_micros() as u64;
    let (result, timings) = out?;
    Ok(Executed { result, timings, micros, peak })
}

/// Statistics of the columns a plan scans, each listed once.
pub fn scan_stats(catalog: &Catalog, plan: &Plan) -> Result<Vec<ScanStats>> {
    let mut out: Vec<ScanStats> = Vec::new();
    let mut visit = vec![plan];
    let mut scans = Vec::new();
    while let Some(p) = visit.pop() {
        match p {
            Plan::Scan { table, columns } => scans.push((table, columns)),
            Plan::Filter { input, .. } | Plan::Project { input, .. } | Plan::GroupAgg { input, .. } => visit.push(input),
            Plan::Join { left, right, .. } => {
                visit.push(right);
                visit.push(left);
            }
        }
    }
    for (table, columns) in scans {
        let t = catalog.table(table)?;
        let names: Vec<&str> = match columns {
            Some(c) => c.iter().map(String::as_str).collect(),
            None => t.fields.iter().map(|f| f.name.as_str()).collect(),
        };
        for name in names {
            if !out.iter().any(|s| s.table == *table && s.column == name) {
                out.push(ScanStats { table: table.clone(), column: name.into(), stats: stats(t.column(name)?) });
            }
        }
    }
    Ok(out)
}

/// Runs `plan` over `catalog` in `mode`.
pub fn run(catalog: &Catalog, plan: &Plan, mode: Mode) -> Result<RunReport> {
    let stats = scan_stats(catalog, plan)?;
    let main = execute(catalog, plan, mode == Mode::Plain)?;
    let differential = if mode == Mode::Diff {
        let oracle = execute(catalog, plan, true)?;
        let first_mismatch = compare_results(&main.result, &oracle.result);
        Some(DiffOutcome {
            matched: first_mismatch.is_none(),
            first_mismatch,
            plain_micros: oracle.micros,
            plain_peak_bytes: oracle.peak,
        })
    } else {
        None
    };
    Ok(RunReport {
        mode,
        columns: main.result.columns.iter().map(|c| c.name.clone()).collect(),
        rows: main.result.json_rows(&catalog.dictionaries),
        row_count: main.result.rows(),
        input_bytes: stats.iter().map(|s| s.stats.encoded_bytes).sum(),
        plain_input_bytes: stats.iter().map(|s| s.stats.plain_bytes).sum(),
        stats,
        timings: main.timings,
        total_micros: main.micros,
        peak_bytes: main.peak,
        differential,
        result: Some(main.result),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub mode: Mode,
    pub repetitions: usize,
    /// Time of the first run, which is not part of the summary.
    pub cold_micros: u64,
    pub warm_micros: Vec<u64>,
    pub median_micros: u64,
}

/// Runs the plan `repetitions + 1` times and summarises the warm runs.
pub fn bench(catalog: &Catalog, plan: &Plan, mode: Mode, repetitions: usize) -> Result<BenchSummary> {
    if repetitions == 0 {
        return Err(Error::invalid("bench needs at least one repetition"));
    }
    if mode == Mode::Diff {
        return Err(Error::invalid("bench runs a single mode"));
    }
    let plain = mode == Mode::Plain;
    let cold = execute(catalog, plan, plain)?.micros;
    let mut warm = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        warm.push(execute(catalog, plan, plain)?.micros);
    }
    let mut sorted = warm.clone();
    sorted.sort_unstable();
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2
    };
    Ok(BenchSummary { mode, repetitions, cold_micros: cold, warm_micros: warm, median_micros: median })
}

/// Statistics of every column of `table`, in column order.
pub fn report_stats(table: &Table) -> Vec<(String, ColumnStats)> {
    table.fields.iter().zip(&table.columns).map(|(f, c)| (f.name.clone(), stats(c))).collect()
}

/// Name for a right-side join column; clashing names get a `_right` suffix.
fn join_output_name(existing: &[ColMeta], name: &str) -> String {
    let mut n = name.to_owned();
    while existing.iter().any(|m| m.name == n) {
        n.push_str("_right");
    }
    n
}

/// How an aggregate's output is typed and shown.
fn agg_meta(spec: &AggSpec, source: &ColMeta, out: &Values) -> ColMeta {
    match spec.func {
        AggFunc::Min | AggFunc::Max if !out.is_float() => {
            ColMeta { name: spec.name.clone(), kind: source.kind, dictionary: source.dictionary.clone() }
        }
        _ => ColMeta::numeric(&spec.name, out.dtype()),
    }
}

fn lookup(meta: &[ColMeta], name: &str) -> Result<usize> {
    meta.iter().position(|m| m.name == name).ok_or_else(|| Error::Plan(format!("unknown column {name}")))
}

/// The two join keys must share a dictionary or both be numeric.
fn check_join_keys(l: &ColMeta, r: &ColMeta) -> Result<()> {
    crate::join::check_dictionaries(l.dictionary.as_deref(), r.dictionary.as_deref())
}

/// Literal context for an expression that is a bare column reference.
fn literal_ctx<'a>(e: &Expr, meta: &[ColMeta], dicts: &'a Dictionaries) -> Option<plan::LiteralContext<'a>> {
    match e {
        Expr::Column { name } => meta.iter().find(|m| &m.name == name).map(|m| plan::LiteralContext {
            kind: m.kind,
            dictionary: m.dictionary.as_ref().and_then(|d| dicts.get(d)),
        }),
        _ => None,
    }
}

/// String columns compared with each other must share a dictionary.
fn check_compare(l: &Expr, r: &Expr, meta: &[ColMeta]) -> Result<()> {
    if let (Expr::Column { name: a }, Expr::Column { name: b }) = (l, r) {
        let (a, b) = (&meta[lookup(meta, a)?], &meta[lookup(meta, b)?]);
        if a.kind == FieldType::String || b.kind == FieldType::String {
            return crate::join::check_dictionaries(a.dictionary.as_deref(), b.dictionary.as_deref());
        }
    }
    Ok(())
}

fn micros_since(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

//! Table loading, encoding selection and sort orders.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::column::{stats, Column, PlainColumn, DEFAULT_POSITION_WIDTH};
use crate::error::{Error, Result};
use crate::primitives::{narrow_layout, plain_to_plain_index, plain_to_rle, plain_to_rle_index, split_runs};
use crate::values::{DType, Scalar, Values};

/// Bijective string coding. Codes are dense from 0 in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dictionary {
    strings: Vec<String>,
    #[serde(skip)]
    codes: HashMap<String, i32>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_strings<S: Into<String>>(strings: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut d = Dictionary::new();
        for s in strings {
            let s = s.into();
            if d.code(&s).is_some() {
                return Err(Error::invalid(format!("duplicate dictionary entry {s:?}")));
            }
            d.encode(&s);
        }
        Ok(d)
    }

    /// Code of `s`, assigning the next free code to a new string.
    pub fn encode(&mut self, s: &str) -> i32 {
        if let Some(&c) = self.codes.get(s) {
            return c;
        }
        let c = self.strings.len() as i32;
        self.strings.push(s.to_owned());
        self.codes.insert(s.to_owned(), c);
        c
    }

    pub fn code(&self, s: &str) -> Option<i32> {
        self.codes.get(s).copied()
    }

    pub fn decode(&self, code: i64) -> Option<&str> {
        usize::try_from(code).ok().and_then(|c| self.strings.get(c)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn strings(&self) -> &[String] {
        &self.strings
    }

    /// Rebuilds the reverse map after deserializing.
    fn reindex(&mut self) {
        self.codes = self.strings.iter().enumerate().map(|(i, s)| (s.clone(), i as i32)).collect();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    Int,
    Float,
    String,
    /// `YYYY-MM-DD`, stored as days since 1970-01-01.
    Date,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: FieldType,
    /// Dictionary shared by string columns that compare or join with each
    /// other. Defaults to a dictionary private to the column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<String>,
}

impl Field {
    pub fn new(name: impl Into<String>, kind: FieldType) -> Self {
        Field { name: name.into(), kind, dictionary: None }
    }
}

pub type Schema = Vec<Field>;

/// Dictionaries by name.
pub type Dictionaries = BTreeMap<String, Dictionary>;

/// Reads a schema sidecar: a JSON list of `{name, type[, dictionary]}`.
pub fn read_schema(path: &Path) -> Result<Schema> {
    Ok(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub fields: Vec<Field>,
    pub columns: Vec<Column>,
    /// Dictionary name of each column; `None` for numeric columns.
    pub dictionaries: Vec<Option<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        Table { name: name.into(), fields: Vec::new(), columns: Vec::new(), dictionaries: Vec::new() }
    }

    pub fn push(&mut self, field: Field, column: Column, dictionary: Option<String>) -> Result<()> {
        if let Some(first) = self.columns.first() {
            if first.total_size() != column.total_size() {
                return Err(Error::SizeMismatch { left: first.total_size(), right: column.total_size() });
            }
        }
        self.fields.push(field);
        self.columns.push(column);
        self.dictionaries.push(dictionary);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Column::total_size)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.position(name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| Error::Plan(format!("table {} has no column {name}", self.name)))
    }

    /// Decoded values of every column.
    pub fn decoded(&self) -> Vec<Values> {
        self.columns.iter().map(|c| c.decode_dense(crate::values::Scalar::Int(0))).collect()
    }

    /// Replaces every column by the encoding `choose_encoding` picks for it.
    pub fn encode_auto(&self, params: &EncodingParams) -> Result<(Table, Vec<EncodingChoice>)> {
        let mut out = self.clone();
        let mut choices = Vec::with_capacity(self.columns.len());
        for (i, col) in self.columns.iter().enumerate() {
            let plain = col.to_plain()?;
            let choice = choose_encoding(&plain, params);
            out.columns[i] = encode(&plain, &choice)?;
            choices.push(choice);
        }
        Ok((out, choices))
    }

    /// Every column decoded to uncentered Plain.
    pub fn to_plain(&self) -> Result<Table> {
        let mut out = self.clone();
        for c in &mut out.columns {
            *c = Column::Plain(PlainColumn::new(c.decoded()?));
        }
        Ok(out)
    }
}

fn parse_error(row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { row, column, message: message.into() }
}

/// Loads a comma-separated file whose header names the schema fields in
/// order. Strings are coded with private dictionaries per column.
pub fn ingest_csv(path: &Path, schema: &Schema) -> Result<(Table, Dictionaries)> {
    let mut dicts = Dictionaries::new();
    let table = ingest_csv_with(path, schema, &mut dicts)?;
    Ok((table, dicts))
}

/// [`ingest_csv`] against shared dictionaries, extending them as needed.
///
/// Rows are numbered from 1 for the first data line; columns from 0.
pub fn ingest_csv_with(path: &Path, schema: &Schema, dicts: &mut Dictionaries) -> Result<Table> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_owned();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).quoting(false).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    let expected: Vec<&str> = schema.iter().map(|f| f.name.as_str()).collect();
    if header != expected {
        return Err(parse_error(0, 0, format!("header {header:?} does not match schema {expected:?}")));
    }
    let dict_names: Vec<Option<String>> = schema
        .iter()
        .map(|f| (f.kind == FieldType::String).then(|| f.dictionary.clone().unwrap_or_else(|| format!("{name}.{}", f.name))))
        .collect();
    let mut ints: Vec<Vec<i64>> = vec![Vec::new(); schema.len()];
    let mut floats: Vec<Vec<f64>> = vec![Vec::new(); schema.len()];
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record?;
        if record.len() != schema.len() {
            return Err(parse_error(row, record.len().min(schema.len()), format!("expected {} fields, found {}", schema.len(), record.len())));
        }
        for (c, (field, raw)) in schema.iter().zip(record.iter()).enumerate() {
            let tok = raw.trim();
            match field.kind {
                FieldType::Int => ints[c].push(tok.parse().map_err(|e| parse_error(row, c, format!("{tok:?}: {e}")))?),
                FieldType::Float => floats[c].push(tok.parse().map_err(|e| parse_error(row, c, format!("{tok:?}: {e}")))?),
                FieldType::Date => {
                    let d = NaiveDate::parse_from_str(tok, "%Y-%m-%d").map_err(|e| parse_error(row, c, format!("{tok:?}: {e}")))?;
                    ints[c].push((d - epoch).num_days());
                }
                FieldType::String => {
                    let dict = dicts.entry(dict_names[c].clone().unwrap()).or_default();
                    ints[c].push(dict.encode(tok) as i64);
                }
            }
        }
    }
    let mut table = Table::new(name);
    for (c, field) in schema.iter().enumerate() {
        let values = match field.kind {
            FieldType::Float => Values::F64(std::mem::take(&mut floats[c])),
            _ => int_values(std::mem::take(&mut ints[c])),
        };
        table.push(field.clone(), Column::plain(values), dict_names[c].clone())?;
    }
    Ok(table)
}

/// Writes `table` as a CSV readable by [`ingest_csv_with`], with strings
/// decoded through `dicts` and dates as `YYYY-MM-DD`.
pub fn write_csv(table: &Table, dicts: &Dictionaries, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Never).from_path(path)?;
    w.write_record(table.fields.iter().map(|f| f.name.as_str()))?;
    let cols = table.decoded();
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
    let mut record: Vec<String> = vec![String::new(); cols.len()];
    for i in 0..table.rows() {
        for (c, (field, v)) in table.fields.iter().zip(&cols).enumerate() {
            record[c] = match (field.kind, v.get(i)) {
                (FieldType::String, Scalar::Int(code)) => {
                    let dict = table.dictionaries[c].as_ref().and_then(|d| dicts.get(d));
                    dict.and_then(|d| d.decode(code))
                        .ok_or_else(|| Error::invalid(format!("column {} has no string for code {code}", field.name)))?
                        .to_owned()
                }
                (FieldType::Date, Scalar::Int(d)) => (epoch + chrono::Duration::days(d)).format("%Y-%m-%d").to_string(),
                (_, x) => x.to_string(),
            };
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the schema sidecar of `table`.
pub fn write_schema(table: &Table, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_vec_pretty(&table.fields)?)?;
    Ok(())
}

/// `i32` when every value fits, else `i64`.
fn int_values(v: Vec<i64>) -> Values {
    if v.iter().all(|&x| DType::I32.fits(x)) {
        Values::I32(v.into_iter().map(|x| x as i32).collect())
    } else {
        Values::I64(v)
    }
}

/// Writes dictionaries as `{name: [strings]}`.
pub fn write_dictionaries(path: &Path, dicts: &Dictionaries) -> Result<()> {
    let m: BTreeMap<&String, &[String]> = dicts.iter().map(|(k, d)| (k, d.strings())).collect();
    std::fs::write(path, serde_json::to_vec_pretty(&m)?)?;
    Ok(())
}

pub fn read_dictionaries(path: &Path) -> Result<Dictionaries> {
    let m: BTreeMap<String, Vec<String>> = serde_json::from_slice(&std::fs::read(path)?)?;
    m.into_iter()
        .map(|(k, v)| {
            let mut d = Dictionary { strings: v, codes: HashMap::new() };
            d.reindex();
            if d.codes.len() != d.strings.len() {
                return Err(Error::invalid(format!("dictionary {k} has duplicate strings")));
            }
            Ok((k, d))
        })
        .collect()
}

/// The thresholds of the encoding cascade.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingParams {
    /// Columns with fewer rows stay Plain.
    pub row_threshold: usize,
    /// Compression ratio a run encoding must exceed.
    pub ratio_threshold: f64,
    /// Fraction trimmed from each end before sizing the base of Plain+Index.
    pub trim: f64,
    /// Shortest run kept as a run in RLE+Index.
    pub min_run: usize,
}

impl Default for EncodingParams {
    fn default() -> Self {
        EncodingParams { row_threshold: 1_000_000, ratio_threshold: 20.0, trim: 0.05, min_run: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum EncodingChoice {
    /// Values stored as `value - center` in `width`.
    Plain { center: Option<i64>, width: DType },
    Rle,
    RleIndex { min_run: usize },
    PlainIndex { trim_fraction: f64 },
}

impl EncodingChoice {
    pub fn encoding(&self) -> crate::column::Encoding {
        use crate::column::Encoding;
        match self {
            EncodingChoice::Plain { .. } => Encoding::Plain,
            EncodingChoice::Rle => Encoding::Rle,
            EncodingChoice::RleIndex { .. } => Encoding::RleIndex,
            EncodingChoice::PlainIndex { .. } => Encoding::PlainIndex,
        }
    }
}

/// Bytes per run of a run encoding with values of `value_width` bytes.
fn run_bytes(value_width: usize) -> usize {
    value_width + 2 * DEFAULT_POSITION_WIDTH
}

/// Picks an encoding by the first matching rule:
///
/// 1. fewer than `row_threshold` rows: Plain as stored;
/// 2. run encoding beats `ratio_threshold`: RLE;
/// 3. over half the runs are single rows, and the longer runs alone
///    compress by more than `ratio_threshold`: RLE+Index;
/// 4. the trimmed value range needs a narrower integer type than the full
///    range: Plain+Index;
/// 5. otherwise Plain, centred and narrowed when that saves width.
///
/// Ratios divide plain bytes at the decoded type's width by encoded bytes.
pub fn choose_encoding(col: &PlainColumn, params: &EncodingParams) -> EncodingChoice {
    let n = col.len();
    let as_stored = EncodingChoice::Plain { center: col.center, width: col.values.dtype() };
    if n < params.row_threshold {
        return as_stored;
    }
    let rle = plain_to_rle(col);
    let rle_stats = stats(&Column::Rle(rle.clone()));
    if rle_stats.compression_ratio > params.ratio_threshold {
        return EncodingChoice::Rle;
    }
    let width = col.logical.width();
    let lengths = rle.runs.lengths();
    let unit = lengths.iter().filter(|&&l| l < params.min_run).count();
    if 2 * unit > lengths.len() {
        let split = split_runs(&rle, params.min_run);
        let long_rows = split.runs.runs.covered();
        let long_bytes = split.runs.len() * run_bytes(width);
        if long_bytes > 0 && (long_rows * width) as f64 / long_bytes as f64 > params.ratio_threshold {
            return EncodingChoice::RleIndex { min_run: params.min_run };
        }
    }
    let decoded = col.decoded();
    let Some(vals) = decoded.to_i64_vec() else {
        return as_stored;
    };
    let (min, max) = decoded.min_max_i64().expect("non-empty column");
    let (full_width, full_center) = narrow_layout(min, max);
    let mut sorted = vals;
    sorted.sort_unstable();
    let k = (params.trim * n as f64).floor() as usize;
    let (trim_width, _) = narrow_layout(sorted[k], sorted[n - 1 - k]);
    if trim_width.width() < full_width.width() {
        return EncodingChoice::PlainIndex { trim_fraction: params.trim };
    }
    EncodingChoice::Plain { center: (full_center != 0).then_some(full_center), width: full_width }
}

/// Encodes a column as `choice` describes.
pub fn encode(col: &PlainColumn, choice: &EncodingChoice) -> Result<Column> {
    Ok(match choice {
        EncodingChoice::Plain { center, width } => {
            let decoded = col.decoded();
            let c = center.unwrap_or(0);
            let stored = if c == 0 { decoded.cast(*width)? } else { decoded.offset_i64(-c)?.cast(*width)? };
            Column::Plain(PlainColumn { values: stored, center: *center, logical: decoded.dtype() })
        }
        EncodingChoice::Rle => Column::Rle(plain_to_rle(col)),
        EncodingChoice::RleIndex { min_run } => Column::RleIndex(plain_to_rle_index(col, *min_run)?),
        EncodingChoice::PlainIndex { trim_fraction } => Column::PlainIndex(plain_to_plain_index(col, *trim_fraction)?),
    })
}

/// Reorders all columns by one stable lexicographic sort on `by`.
pub fn sort_table(t: &Table, by: &[&str]) -> Result<Table> {
    let keys: Vec<Values> = by
        .iter()
        .map(|name| t.column(name)?.decoded())
        .collect::<Result<_>>()?;
    let mut perm: Vec<usize> = (0..t.rows()).collect();
    perm.sort_by(|&i, &j| {
        keys.iter()
            .map(|k| cmp_rows(k, i, j))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = t.clone();
    for c in &mut out.columns {
        *c = Column::Plain(PlainColumn::new(c.decoded()?.gather(&perm)));
    }
    Ok(out)
}

fn cmp_rows(v: &Values, i: usize, j: usize) -> std::cmp::Ordering {
    v.get(i).total_cmp(&v.get(j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn strings_coded_in_first_seen_order() {
        let f = csv_file("flag\nA\nB\nB\n");
        let (t, dicts) = ingest_csv(f.path(), &vec![Field::new("flag", FieldType::String)]).unwrap();
        assert_eq!(t.columns[0], Column::plain(vec![0i32, 1, 1]));
        let d = &dicts[t.dictionaries[0].as_ref().unwrap()];
        assert_eq!(d.code("A"), Some(0));
        assert_eq!(d.code("B"), Some(1));
        assert_eq!(d.decode(1), Some("B"));
    }

    #[test]
    fn header_only_file() {
        let f = csv_file("a,b\n");
        let schema = vec![Field::new("a", FieldType::Int), Field::new("b", FieldType::Float)];
        let (t, _) = ingest_csv(f.path(), &schema).unwrap();
        assert_eq!(t.rows(), 0);
        assert_eq!(t.columns.len(), 2);
    }

    #[test]
    fn bad_int_reports_position() {
        let f = csv_file("a,b\n1,2\n3,x\n");
        let schema = vec![Field::new("a", FieldType::Int), Field::new("b", FieldType::Int)];
        match ingest_csv(f.path(), &schema) {
            Err(Error::Parse { row: 2, column: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dates_are_days_since_epoch() {
        let f = csv_file("d\n1970-01-02\n1998-12-01\n");
        let (t, _) = ingest_csv(f.path(), &vec![Field::new("d", FieldType::Date)]).unwrap();
        assert_eq!(t.columns[0], Column::plain(vec![1i32, 10561]));
    }

    #[test]
    fn small_columns_stay_plain() {
        let c = PlainColumn::new(vec![5i32; 100]);
        assert_eq!(choose_encoding(&c, &EncodingParams::default()), EncodingChoice::Plain { center: None, width: DType::I32 });
    }

    #[test]
    fn constant_column_is_rle() {
        let c = PlainColumn::new(vec![5i32; 2_000_000]);
        assert_eq!(choose_encoding(&c, &EncodingParams::default()), EncodingChoice::Rle);
    }

    #[test]
    fn sort_reduces_runs() {
        let n = 1000;
        let mut t = Table::new("t");
        let v: Vec<i32> = (0..n).map(|i| (i % 2) as i32).collect();
        let w: Vec<i32> = (0..n as i32).collect();
        t.push(Field::new("k", FieldType::Int), Column::plain(v), None).unwrap();
        t.push(Field::new("w", FieldType::Int), Column::plain(w), None).unwrap();
        assert_eq!(crate::column::count_runs(&t.decoded()[0]), n);
        let s = sort_table(&t, &["k"]).unwrap();
        assert_eq!(crate::column::count_runs(&s.decoded()[0]), 2);
        // Stable: the even rows keep their order.
        assert_eq!(s.decoded()[1].slice(0..3), Values::I32(vec![0, 2, 4]));
        let again = sort_table(&s, &["k"]).unwrap();
        assert_eq!(again, s);
    }
}

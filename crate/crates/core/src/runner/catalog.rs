use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::column::{read_dump, write_dump};
use crate::error::{Error, Result};
use crate::ingest::{
    ingest_csv_with, read_dictionaries, read_schema, sort_table, write_dictionaries, Dictionaries, EncodingChoice,
    EncodingParams, Field, Table,
};

/// Tables by name plus the dictionaries their string columns use.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Catalog {
    pub tables: BTreeMap<String, Table>,
    pub dictionaries: Dictionaries,
}

const ENCODED_DIR: &str = "encoded";
const MANIFEST: &str = "manifest.json";
const DICTIONARIES: &str = "dictionaries.json";

#[derive(Serialize, Deserialize)]
struct ManifestTable {
    name: String,
    fields: Vec<Field>,
    dictionaries: Vec<Option<String>>,
    rows: usize,
    #[serde(default)]
    sorted_by: Vec<String>,
    #[serde(default)]
    choices: Vec<EncodingChoice>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    tables: Vec<ManifestTable>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, table: Table) {
        self.tables.insert(table.name.clone(), table);
    }

    pub fn table(&self, name: &str) -> Result<&Table> {
        self.tables.get(name).ok_or_else(|| Error::Plan(format!("unknown table {name}")))
    }

    /// Loads `dir/encoded` if present, else every `*.csv` in `dir` that has
    /// a `<stem>.schema.json` sidecar, as Plain columns.
    pub fn load_dir(dir: &Path) -> Result<Catalog> {
        if dir.join(ENCODED_DIR).join(MANIFEST).exists() {
            return Catalog::load_encoded(&dir.join(ENCODED_DIR));
        }
        Catalog::ingest_dir(dir)
    }

    /// Every `*.csv` with a schema sidecar, as Plain columns.
    pub fn ingest_dir(dir: &Path) -> Result<Catalog> {
        let mut catalog = Catalog::new();
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        for path in paths {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
            let schema_path = dir.join(format!("{stem}.schema.json"));
            if !schema_path.exists() {
                continue;
            }
            let schema = read_schema(&schema_path)?;
            let table = ingest_csv_with(&path, &schema, &mut catalog.dictionaries)?;
            catalog.insert(table);
        }
        Ok(catalog)
    }

    /// Sorts the named tables, then encodes every column by
    /// [`crate::ingest::choose_encoding`]. Returns the choices per table.
    pub fn encode(
        &mut self,
        params: &EncodingParams,
        sort_by: &BTreeMap<String, Vec<String>>,
    ) -> Result<BTreeMap<String, Vec<EncodingChoice>>> {
        for name in sort_by.keys() {
            self.table(name)?;
        }
        let mut out = BTreeMap::new();
        for (name, table) in self.tables.iter_mut() {
            let sorted = match sort_by.get(name) {
                Some(cols) => sort_table(table, &cols.iter().map(String::as_str).collect::<Vec<_>>())?,
                None => table.clone(),
            };
            let (encoded, choices) = sorted.encode_auto(params)?;
            *table = encoded;
            out.insert(name.clone(), choices);
        }
        Ok(out)
    }

    /// Writes every table as column dumps under `dir`, with a manifest and
    /// the dictionaries.
    pub fn save_encoded(
        &self,
        dir: &Path,
        sort_by: &BTreeMap<String, Vec<String>>,
        choices: &BTreeMap<String, Vec<EncodingChoice>>,
    ) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = Manifest { tables: Vec::new() };
        for (name, t) in &self.tables {
            let tdir = dir.join(name);
            fs::create_dir_all(&tdir)?;
            for (f, c) in t.fields.iter().zip(&t.columns) {
                let mut w = BufWriter::new(fs::File::create(tdir.join(format!("{}.col", f.name)))?);
                write_dump(c, &mut w)?;
            }
            manifest.tables.push(ManifestTable {
                name: name.clone(),
                fields: t.fields.clone(),
                dictionaries: t.dictionaries.clone(),
                rows: t.rows(),
                sorted_by: sort_by.get(name).cloned().unwrap_or_default(),
                choices: choices.get(name).cloned().unwrap_or_default(),
            });
        }
        fs::write(dir.join(MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
        write_dictionaries(&dir.join(DICTIONARIES), &self.dictionaries)?;
        Ok(())
    }

    pub fn load_encoded(dir: &Path) -> Result<Catalog> {
        let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST))?)?;
        let mut catalog = Catalog::new();
        let dict_path = dir.join(DICTIONARIES);
        if dict_path.exists() {
            catalog.dictionaries = read_dictionaries(&dict_path)?;
        }
        for mt in manifest.tables {
            let mut t = Table::new(mt.name.clone());
            for (f, d) in mt.fields.into_iter().zip(mt.dictionaries) {
                let mut r = BufReader::new(fs::File::open(dir.join(&mt.name).join(format!("{}.col", f.name)))?);
                let c = read_dump(&mut r)?;
                t.push(f, c, d)?;
            }
            if t.rows() != mt.rows && !t.columns.is_empty() {
                return Err(Error::invalid(format!("table {} has {} rows, manifest says {}", mt.name, t.rows(), mt.rows)));
            }
            catalog.insert(t);
        }
        Ok(catalog)
    }

    /// Every column decoded to Plain.
    pub fn to_plain(&self) -> Result<Catalog> {
        let mut out = self.clone();
        for t in out.tables.values_mut() {
            *t = t.to_plain()?;
        }
        Ok(out)
    }
}

/// Parses `t:c1,c2` into a table name and sort columns.
pub fn parse_sort_spec(s: &str) -> Result<(String, Vec<String>)> {
    let (t, cols) = s.split_once(':').ok_or_else(|| Error::invalid(format!("sort spec {s:?} is not table:col,...")))?;
    let cols: Vec<String> = cols.split(',').map(|c| c.trim().to_owned()).filter(|c| !c.is_empty()).collect();
    if t.is_empty() || cols.is_empty() {
        return Err(Error::invalid(format!("sort spec {s:?} is not table:col,...")));
    }
    Ok((t.to_owned(), cols))
}

//! Tabular output in CSV or JSON, with a run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // shortest round-trip digits, exponent form for very large or small values
            Cell::Float(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Result<Value> {
        Ok(match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => Value::from(
                serde_json::Number::from_f64(*v)
                    .ok_or_else(|| Error::numerical(format!("cannot encode non-finite value {v}")))?,
            ),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        })
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Command name, parameters, tool version and timestamp of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Map<String, Value>) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            parameters,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp()?,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(self.command.as_str()));
        m.insert("parameters".into(), Value::Object(self.parameters.clone()));
        m.insert("version".into(), Value::from(self.version.as_str()));
        m.insert("timestamp".into(), Value::from(self.timestamp));
        Value::Object(m)
    }
}

/// `SOURCE_DATE_EPOCH` when set, otherwise the current time.
fn timestamp() -> Result<u64> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("SOURCE_DATE_EPOCH must be an integer, got {v:?}"))),
        Err(_) => Ok(std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)),
    }
}

pub fn encode_csv(table: &Table) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::numerical(format!("csv encoding failed: {e}"));
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::to_csv)).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::numerical(format!("csv encoding failed: {e}")))
}

pub fn encode_json(table: &Table, manifest: &RunManifest) -> Result<Vec<u8>> {
    let mut rows = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let mut obj = Map::new();
        for (col, cell) in table.columns.iter().zip(row) {
            obj.insert((*col).to_string(), cell.to_json()?);
        }
        rows.push(Value::Object(obj));
    }
    let mut top = Map::new();
    top.insert("manifest".into(), manifest.to_json());
    top.insert("rows".into(), Value::Array(rows));
    let mut out = serde_json::to_vec_pretty(&Value::Object(top))
        .map_err(|e| Error::numerical(format!("json encoding failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Sidecar manifest path for CSV output: `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Emits a table to `output` (or stdout) in the requested format.
pub fn emit(table: &Table, manifest: &RunManifest, format: Format, output: Option<&Path>) -> Result<()> {
    let bytes = match format {
        Format::Csv => encode_csv(table)?,
        Format::Json => encode_json(table, manifest)?,
    };
    match output {
        Some(path) => {
            write_atomic(path, &bytes)?;
            if format == Format::Csv {
                let mut m = serde_json::to_vec_pretty(&manifest.to_json())
                    .map_err(|e| Error::numerical(format!("json encoding failed: {e}")))?;
                m.push(b'\n');
                write_atomic(&manifest_path(path), &m)?;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(vec!["index", "value", "label"]);
        t.push(vec![Cell::from(1usize), Cell::from(0.1 + 0.2), Cell::from("fake(0,1)")]);
        t.push(vec![Cell::from(2usize), Cell::from(-1e-300), Cell::Empty]);
        t
    }

    fn manifest() -> RunManifest {
        RunManifest {
            command: "test".into(),
            parameters: Map::new(),
            version: "0".into(),
            timestamp: 0,
        }
    }

    #[test]
    fn csv_round_trips_floats() {
        let text = String::from_utf8(encode_csv(&sample()).unwrap()).unwrap();
        assert!(!text.contains('\r'));
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rec: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert_eq!(rec[0][1].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(&rec[0][2], "fake(0,1)");
        assert_eq!(rec[1][1].parse::<f64>().unwrap(), -1e-300);
    }

    #[test]
    fn json_matches_csv() {
        let v: Value = serde_json::from_slice(&encode_json(&sample(), &manifest()).unwrap()).unwrap();
        assert_eq!(v["rows"][0]["value"].as_f64().unwrap(), 0.1 + 0.2);
        assert!(v["rows"][1]["label"].is_null());
        assert_eq!(v["manifest"]["command"], "test");
        let keys: Vec<&String> = v["rows"][0].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["index", "value", "label"]);
    }

    #[test]
    fn non_finite_rejected_in_json() {
        let mut t = Table::new(vec!["x"]);
        t.push(vec![Cell::from(f64::NAN)]);
        assert!(encode_json(&t, &manifest()).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert_eq!(manifest_path(&path), dir.path().join("out.csv.manifest.json"));
    }
}

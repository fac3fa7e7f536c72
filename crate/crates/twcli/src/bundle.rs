use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// Fixed-width float rendering: 17 significant digits, which round-trips every `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => fmt_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// CSV text: header row, comma separator, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }
}

/// Named pass/fail entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `residual <= threshold`.
    pub fn at_most(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self { name: name.into(), residual, threshold, passed: residual.is_finite() && residual <= threshold }
    }

    /// Boolean check; `residual` is carried for the record.
    pub fn flag(name: impl Into<String>, passed: bool, residual: f64) -> Self {
        Self { name: name.into(), residual, threshold: 0.0, passed }
    }
}

/// Everything one run produces.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ResultBundle {
    pub manifest: Value,
    pub tables: BTreeMap<String, Table>,
    pub records: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub converged: bool,
    pub errors: Vec<String>,
}

impl ResultBundle {
    pub fn new(manifest: Value) -> Self {
        Self { manifest, converged: true, ..Default::default() }
    }

    pub fn table(&mut self, name: impl Into<String>, table: Table) {
        self.tables.insert(name.into(), table);
    }

    pub fn record<T: Serialize>(&mut self, name: impl Into<String>, value: &T) {
        let v = serde_json::to_value(value).unwrap_or_else(|e| Value::String(format!("unserializable: {e}")));
        self.records.insert(name.into(), v);
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new(&["name", "residual", "threshold", "passed"]);
        for c in &self.checks {
            t.push(vec![c.name.clone().into(), c.residual.into(), c.threshold.into(), c.passed.into()]);
        }
        t
    }

    /// Writes `manifest.json`, `checks.csv`, one CSV per table and one JSON per record.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> std::io::Result<()> {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
            Ok(())
        };
        let mut manifest = self.manifest.clone();
        if let Value::Object(m) = &mut manifest {
            m.insert("converged".into(), Value::Bool(self.converged));
            m.insert("errors".into(), serde_json::to_value(&self.errors)?);
            m.insert("tables".into(), serde_json::to_value(self.tables.keys().collect::<Vec<_>>())?);
            m.insert("records".into(), serde_json::to_value(self.records.keys().collect::<Vec<_>>())?);
        }
        put("manifest.json".into(), json_text(&manifest)?)?;
        put("checks.csv".into(), self.checks_table().to_csv())?;
        for (name, t) in &self.tables {
            put(format!("{name}.csv"), t.to_csv())?;
        }
        for (name, r) in &self.records {
            put(format!("{name}.json"), json_text(r)?)?;
        }
        Ok(written)
    }
}

fn json_text(v: &Value) -> std::io::Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};
use tempfile::NamedTempFile;

use crate::CliError;

/// Seventeen significant digits, enough to round-trip any f64.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Numeric table rendered as CSV with a header row, or as a JSON object of columns.
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    /// Columns printed as integers, such as a time index.
    pub integer: Vec<bool>,
}

impl Table {
    pub fn new() -> Self {
        Table { header: Vec::new(), columns: Vec::new(), integer: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.header.push(name.into());
        self.columns.push(values);
        self.integer.push(false);
    }

    pub fn push_index(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.push(name, values);
        *self.integer.last_mut().unwrap() = true;
    }

    pub fn to_csv(&self) -> String {
        let rows = self.columns.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = self.header.join(",");
        out.push('\n');
        for i in 0..rows {
            let cells: Vec<String> = self
                .columns
                .iter()
                .zip(&self.integer)
                .map(|(c, &int)| match c.get(i) {
                    Some(v) if int => format!("{}", *v as i64),
                    Some(v) => num(*v),
                    None => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        for (name, col) in self.header.iter().zip(&self.columns) {
            obj.insert(name.clone(), Value::from(col.clone()));
        }
        Value::Object(obj)
    }
}

/// Nested JSON flattened to `key,value` rows with dotted keys.
pub fn json_to_csv(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, x)| walk(&join(k), x, out)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(&join(&i.to_string()), x, out)),
            Value::Number(n) => out.push((prefix.to_string(), n.as_f64().map_or_else(|| n.to_string(), num))),
            Value::String(s) => out.push((prefix.to_string(), csv_field(s))),
            Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
            Value::Null => out.push((prefix.to_string(), String::new())),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, x) in rows {
        out.push_str(&format!("{},{x}\n", csv_field(&k)));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Sends `contents` to `out` when given, otherwise to standard output.
pub fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

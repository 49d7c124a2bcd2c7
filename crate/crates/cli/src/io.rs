use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{Map, Value};
use ultrametric::{Dendrogram, ObservationMatrix};

use crate::error::{CliError, CliResult};

/// A CSV table with a header row and an optional leading id column.
#[derive(Debug, Clone)]
pub struct Table {
    /// Names of the value columns.
    pub columns: Vec<String>,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<String>>,
    source: String,
}

impl Table {
    pub fn read(path: &Path, id_column: bool) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::parse(&text, id_column, &path.display().to_string())
    }

    pub fn parse(text: &str, id_column: bool, source: &str) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let bad = |msg: String| CliError::Input(format!("{source}: {msg}"));
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        let skip = usize::from(id_column);
        if header.len() <= skip || header.iter().all(String::is_empty) {
            return Err(bad("a header row with at least one value column is required".into()));
        }
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record.map_err(|e| bad(format!("data row {}: {e}", r + 1)))?;
            let fields: Vec<String> = record.iter().map(str::to_owned).collect();
            labels.push(if id_column { fields[0].clone() } else { format!("x{}", r + 1) });
            rows.push(fields[skip..].to_vec());
        }
        if rows.is_empty() {
            return Err(bad("no data rows".into()));
        }
        Ok(Self {
            columns: header[skip..].to_vec(),
            labels,
            rows,
            source: source.to_owned(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    fn cell_error(&self, r: usize, c: usize, what: &str) -> CliError {
        CliError::Input(format!(
            "{}: data row {}, column {:?}: {:?} is not {what}",
            self.source,
            r + 1,
            self.columns[c],
            self.rows[r][c]
        ))
    }

    pub fn numbers(&self) -> CliResult<Vec<Vec<f64>>> {
        self.parse_cells(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()), "a finite number")
    }

    pub fn matrix(&self) -> CliResult<ObservationMatrix> {
        Ok(ObservationMatrix::from_rows(&self.numbers()?)?)
    }

    pub fn bits(&self) -> CliResult<Vec<Vec<u8>>> {
        self.parse_cells(
            |s| match s {
                "0" => Some(0),
                "1" => Some(1),
                _ => None,
            },
            "0 or 1",
        )
    }

    /// Signed code coefficients in {-1, 0, 1}.
    pub fn coefficients(&self) -> CliResult<Vec<Vec<i8>>> {
        self.parse_cells(
            |s| s.parse::<i8>().ok().filter(|v| (-1..=1).contains(v)),
            "one of -1, 0, 1",
        )
    }

    fn parse_cells<T, F: Fn(&str) -> Option<T>>(&self, f: F, what: &str) -> CliResult<Vec<Vec<T>>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(|(c, s)| f(s).ok_or_else(|| self.cell_error(r, c, what)))
                    .collect()
            })
            .collect()
    }

    /// Keeps only the named value columns, in the given order.
    pub fn select(&self, names: &[&str]) -> CliResult<Table> {
        let idx = names
            .iter()
            .map(|n| {
                self.columns.iter().position(|c| c == n).ok_or_else(|| {
                    CliError::Input(format!("{}: no column named {n:?}", self.source))
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Table {
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            labels: self.labels.clone(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect(),
            source: self.source.clone(),
        })
    }
}

/// Provenance recorded at the top of every output file.
#[derive(Debug, Clone)]
pub struct Metadata {
    pub command: String,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, Value>,
    pub timestamp: bool,
}

impl Metadata {
    pub fn new(command: &str, timestamp: bool) -> Self {
        Self {
            command: command.to_owned(),
            seed: None,
            parameters: BTreeMap::new(),
            timestamp,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_owned(), value.into());
        self
    }

    fn generated(&self) -> Option<u64> {
        self.timestamp
            .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("tool".into(), "ultra".into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        m.insert("command".into(), self.command.clone().into());
        if let Some(s) = self.seed {
            m.insert("seed".into(), s.into());
        }
        m.insert(
            "parameters".into(),
            Value::Object(self.parameters.iter().map(|(k, v)| (k.clone(), v.clone())).collect()),
        );
        if let Some(t) = self.generated() {
            m.insert("generated_unix".into(), t.into());
        }
        Value::Object(m)
    }

    /// `# key: value` lines for CSV outputs.
    pub fn csv_comments(&self) -> String {
        let mut out = format!("# tool: ultra {}\n# command: {}\n", env!("CARGO_PKG_VERSION"), self.command);
        if let Some(s) = self.seed {
            let _ = writeln!(out, "# seed: {s}");
        }
        for (k, v) in &self.parameters {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            let _ = writeln!(out, "# {k}: {v}");
        }
        if let Some(t) = self.generated() {
            let _ = writeln!(out, "# generated_unix: {t}");
        }
        out
    }
}

/// Formats a float with 17 significant digits, the shortest fixed width
/// that round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

/// Serializes with sorted keys, two-space indentation and 17-digit floats,
/// so equal values always give identical bytes.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize, out: &mut String| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => out.push_str(&u.to_string()),
            (None, Some(i), _) => out.push_str(&i.to_string()),
            (_, _, Some(f)) => out.push_str(&format_float(f)),
            _ => out.push_str("null"),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            // Arrays of scalars stay on one line.
            if items.iter().all(|i| !i.is_array() && !i.is_object()) {
                out.push('[');
                for (k, i) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(i, depth, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, i) in items.iter().enumerate() {
                pad(depth + 1, out);
                write_value(i, depth + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(depth, out);
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(depth + 1, out);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(&m[*key], depth + 1, out);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(depth, out);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// A JSON document: metadata plus the given top-level fields.
pub fn json_document(meta: &Metadata, body: Value) -> String {
    let mut m = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    m.insert("metadata".into(), meta.to_json());
    canonical_json(&Value::Object(m))
}

/// A CSV document: metadata comments, then the header and rows.
pub fn csv_document(meta: &Metadata, header: &[String], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(header).map_err(to_err)?;
    for r in rows {
        w.write_record(r).map_err(to_err)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(meta.csv_comments() + &String::from_utf8_lossy(&body))
}

/// Writes to `path`, or to standard output when no path is given.
pub fn emit(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| CliError::io(p.display(), e)),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(content.as_bytes())
                .map_err(|e| CliError::io("standard output", e))
        }
    }
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads a dendrogram written by `cluster` or `padic decode`; extra
/// top-level keys such as `metadata` are ignored.
pub fn read_tree(path: &Path) -> CliResult<Dendrogram> {
    let mut v = read_json(path)?;
    if let Value::Object(m) = &mut v {
        m.remove("metadata");
        m.remove("newick");
    }
    serde_json::from_value(v).map_err(|e| CliError::Input(format!("{}: not a dendrogram: {e}", path.display())))
}

pub fn tree_json(tree: &Dendrogram) -> CliResult<Value> {
    let mut v = serde_json::to_value(tree).map_err(|e| CliError::Input(e.to_string()))?;
    if let Value::Object(m) = &mut v {
        m.insert("newick".into(), tree.to_newick().into());
    }
    Ok(v)
}

/// Replaces the terminal labels of `tree`.
pub fn relabel(tree: &Dendrogram, labels: Vec<String>) -> CliResult<Dendrogram> {
    Ok(Dendrogram::new_allowing_inversions(labels, tree.nodes().to_vec())?)
}

/// Shortest round-trip form, used for CSV cells.
pub fn num(v: f64) -> String {
    format!("{v}")
}

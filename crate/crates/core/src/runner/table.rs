//! Result tables and their CSV form.
//!
//! A file starts with `# key: value` metadata lines, followed by a
//! `t,<columns...>` header and one row per grid node. Numbers carry 12
//! significant digits; lines end in LF.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub metadata: Vec<(String, String)>,
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    /// Column-major values, each `times.len()` long.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl ResultTable {
    pub fn new(times: Vec<f64>) -> Self {
        Self {
            times,
            ..Self::default()
        }
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(
            values.len(),
            self.times.len(),
            "column length must match the time axis"
        );
        self.columns.push(name.into());
        self.values.push(values);
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(&self.values[i])
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            writeln!(out, "# {key}: {value}").unwrap();
        }
        out.push('t');
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        if self.columns.is_empty() {
            return out;
        }
        for (row, t) in self.times.iter().enumerate() {
            write!(out, "{t:.11e}").unwrap();
            for col in &self.values {
                write!(out, ",{:.11e}", col[row]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, TableError> {
        let mut table = Self::default();
        let mut lines = text.split('\n').enumerate().peekable();
        while let Some((_, line)) = lines.peek() {
            let Some(rest) = line.strip_prefix("# ") else {
                break;
            };
            let (key, value) = rest.split_once(": ").unwrap_or((rest, ""));
            table.metadata.push((key.to_string(), value.to_string()));
            lines.next();
        }
        let (header_line, header) = lines.next().ok_or(TableError::Parse {
            line: 1,
            reason: "missing header".into(),
        })?;
        let mut names = header.split(',');
        if names.next() != Some("t") {
            return Err(TableError::Parse {
                line: header_line + 1,
                reason: "header must start with t".into(),
            });
        }
        table.columns = names.map(str::to_string).collect();
        table.values = vec![Vec::new(); table.columns.len()];
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| TableError::Parse {
                line: i + 1,
                reason,
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != table.columns.len() + 1 {
                return Err(bad(format!("expected {} fields", table.columns.len() + 1)));
            }
            let mut parsed = fields
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| bad(e.to_string())));
            table.times.push(parsed.next().unwrap()?);
            for (col, v) in table.values.iter_mut().zip(parsed) {
                col.push(v?);
            }
        }
        Ok(table)
    }
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<(), TableError> {
    fs::write(path, table.to_csv()).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<ResultTable, TableError> {
    let text = fs::read_to_string(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ResultTable::parse_csv(&text)
}

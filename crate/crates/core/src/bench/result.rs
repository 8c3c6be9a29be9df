use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metadata keys starting with this prefix hold timings and are the only
/// part of an output allowed to differ between identical runs.
pub const WALL_CLOCK_PREFIX: &str = "wall_clock";

/// Numeric table produced by one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl ExperimentResult {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidArgument(format!(
                "row of length {} in a table with {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta(key).and_then(|v| v.parse().ok())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Rows whose `column` equals `value`.
    pub fn rows_where(&self, column: &str, value: f64) -> Vec<&Vec<f64>> {
        match self.column_index(column) {
            Some(j) => self.rows.iter().filter(|r| r[j] == value).collect(),
            None => Vec::new(),
        }
    }

    /// `# name=…` and `# key=value` lines, the header, then one line per row
    /// with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# name={}\n", self.name);
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut name = String::new();
        let mut metadata = BTreeMap::new();
        let mut lines = text.lines();
        let header = loop {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidArgument("CSV has no header".into()))?;
            let Some(comment) = line.strip_prefix('#') else {
                break line;
            };
            let (k, v) = comment
                .trim_start()
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("bad metadata line `{line}`")))?;
            if k == "name" {
                name = v.to_string();
            } else {
                metadata.insert(k.to_string(), v.to_string());
            }
        };
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut result = Self {
            name,
            columns,
            rows: Vec::new(),
            metadata,
        };
        for line in lines.filter(|l| !l.is_empty()) {
            let row = line
                .split(',')
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad number `{f}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            result.push_row(row)?;
        }
        Ok(result)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serialises") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if let Some(row) = r.rows.iter().find(|row| row.len() != r.columns.len()) {
            return Err(Error::InvalidArgument(format!("row of length {} in JSON table", row.len())));
        }
        Ok(r)
    }
}

/// Output with the wall-clock metadata lines removed, for byte comparisons.
pub fn strip_wall_clock(csv: &str) -> String {
    let prefix = format!("# {WALL_CLOCK_PREFIX}");
    csv.lines()
        .filter(|l| !l.starts_with(&prefix) && !l.trim_start().starts_with(&format!("\"{WALL_CLOCK_PREFIX}")))
        .map(|l| format!("{l}\n"))
        .collect()
}

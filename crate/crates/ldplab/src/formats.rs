//! On-disk formats: the path document, and JSON/CSV writers that embed the
//! resolved configuration in every file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ldp_core::{CadlagPath, SegmentMode};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeDoc {
    Constant,
    Linear,
}

/// `{dim, T, breakpoints, values, left_values, modes}`; `left_values[0]`
/// repeats `values[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDoc {
    pub dim: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub breakpoints: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub left_values: Vec<Vec<f64>>,
    pub modes: Vec<ModeDoc>,
}

impl PathDoc {
    pub fn from_path(path: &CadlagPath) -> Self {
        let k = path.num_breakpoints();
        Self {
            dim: path.dim(),
            horizon: path.horizon(),
            breakpoints: path.breakpoints().to_vec(),
            values: (0..k).map(|i| path.value(i).to_vec()).collect(),
            left_values: (0..k).map(|i| path.left_value(i).to_vec()).collect(),
            modes: path
                .modes()
                .iter()
                .map(|m| match m {
                    SegmentMode::Constant => ModeDoc::Constant,
                    SegmentMode::Linear => ModeDoc::Linear,
                })
                .collect(),
        }
    }

    pub fn to_path(&self) -> LabResult<CadlagPath> {
        let bad = |msg: &str| LabError::Config(format!("path document: {msg}"));
        if self.breakpoints.last() != Some(&self.horizon) {
            return Err(bad("last breakpoint must equal T"));
        }
        let k = self.breakpoints.len();
        if self.values.len() != k || self.left_values.len() != k {
            return Err(bad("need one value and one left value per breakpoint"));
        }
        let rows = self.values.iter().chain(&self.left_values);
        if rows.clone().any(|r| r.len() != self.dim) {
            return Err(bad("every value must have length dim"));
        }
        let flat = |v: &[Vec<f64>]| v.iter().flatten().copied().collect::<Vec<f64>>();
        let modes = self
            .modes
            .iter()
            .map(|m| match m {
                ModeDoc::Constant => SegmentMode::Constant,
                ModeDoc::Linear => SegmentMode::Linear,
            })
            .collect();
        CadlagPath::new(
            self.dim,
            self.breakpoints.clone(),
            flat(&self.values),
            flat(&self.left_values),
            modes,
        )
        .map_err(|e| bad(&e.to_string()))
    }
}

/// Renders a float for CSV; non-finite values and absent entries are empty.
pub fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        Some(x) if x > 0.0 => "inf".into(),
        Some(x) if x < 0.0 => "-inf".into(),
        _ => String::new(),
    }
}

/// A CSV table with documented columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Self {
            columns: columns.iter().map(|(n, d)| (n.to_string(), d.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, config: &Value) -> String {
        let mut out = format!("# config: {config}\n# columns:\n");
        for (name, doc) in &self.columns {
            out.push_str(&format!("#   {name}: {doc}\n"));
        }
        let header: Vec<&str> = self.columns.iter().map(|c| c.0.as_str()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Output directory writer. Every file carries the resolved config.
#[derive(Debug, Clone)]
pub struct OutputDir {
    dir: PathBuf,
    config: Value,
}

impl OutputDir {
    pub fn create(dir: &Path, config: Value) -> LabResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            config,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&self, name: &str, body: &str) -> LabResult<PathBuf> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path)?;
        f.write_all(body.as_bytes())?;
        Ok(path)
    }

    /// Writes `{"config": ..., "result": ...}`.
    pub fn json<T: Serialize>(&self, name: &str, result: &T) -> LabResult<PathBuf> {
        let result = serde_json::to_value(result).map_err(|e| LabError::Config(e.to_string()))?;
        let doc = serde_json::json!({ "config": self.config, "result": result });
        let mut body = serde_json::to_string_pretty(&doc).map_err(|e| LabError::Config(e.to_string()))?;
        body.push('\n');
        self.write(name, &body)
    }

    pub fn csv(&self, name: &str, table: &Table) -> LabResult<PathBuf> {
        self.write(name, &table.render(&self.config))
    }
}

/// Uniform samples of a path as a table `t, x_0, ..., x_{d-1}`.
pub fn path_table(path: &CadlagPath, points: usize) -> Table {
    let d = path.dim();
    let names: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    let mut cols: Vec<(&str, &str)> = vec![("t", "sample time")];
    cols.extend(names.iter().map(|n| (n.as_str(), "path coordinate at t")));
    let mut table = Table::new(&cols);
    let (times, values) = path.uniform_samples(points);
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![cell(Some(*t))];
        row.extend(values[i * d..(i + 1) * d].iter().map(|v| cell(Some(*v))));
        table.push(row);
    }
    table
}

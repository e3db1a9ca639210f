//! Matrix CSV files and the JSON instance sidecar.
//!
//! The matrix file holds one row per line, comma separated, no header. Values
//! are written with Rust's shortest round-trip formatting, so a write/read
//! cycle reproduces every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::SeparableInstance;
use crate::matrix::NonnegMatrix;

pub const SIDECAR_FORMAT: &str = "qdca-instance/1";

/// Metadata stored next to a generated matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub format: String,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub seed: u64,
    pub noise_level: f64,
    /// 0-based row indexes.
    pub true_anchors: Vec<usize>,
}

impl InstanceMeta {
    pub fn of(instance: &SeparableInstance) -> Self {
        Self {
            format: SIDECAR_FORMAT.to_string(),
            n: instance.data.rows(),
            m: instance.data.cols(),
            r: instance.rank(),
            seed: instance.seed,
            noise_level: instance.noise_level,
            true_anchors: instance.true_anchors.clone(),
        }
    }
}

/// `(matrix.csv, sidecar.json)` paths for an instance prefix. A trailing
/// `.csv` or `.json` extension on the prefix is ignored.
pub fn instance_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let base = match prefix.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => prefix.with_extension(""),
        _ => prefix.to_path_buf(),
    };
    let mut csv = base.clone().into_os_string();
    csv.push(".csv");
    let mut json = base.into_os_string();
    json.push(".json");
    (csv.into(), json.into())
}

pub fn matrix_to_csv(x: &NonnegMatrix) -> String {
    let mut out = String::new();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", x.get(i, j)).expect("write to String");
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<NonnegMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", lineno + 1),
            })?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    message: format!(
                        "line {}: expected {} columns, found {}",
                        lineno + 1,
                        first.len(),
                        row.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: "empty matrix".into(),
        });
    }
    let (n, m) = (rows.len(), rows[0].len());
    NonnegMatrix::new(DMatrix::from_fn(n, m, |i, j| rows[i][j])).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_matrix_csv(path: &Path, x: &NonnegMatrix) -> Result<()> {
    fs::write(path, matrix_to_csv(x)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<NonnegMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text, path)
}

/// Writes `<prefix>.csv` and `<prefix>.json`.
pub fn write_instance(prefix: &Path, instance: &SeparableInstance) -> Result<(PathBuf, PathBuf)> {
    let (csv, json) = instance_paths(prefix);
    write_matrix_csv(&csv, &instance.data)?;
    let mut text = serde_json::to_string_pretty(&InstanceMeta::of(instance)).expect("serializable");
    text.push('\n');
    fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    Ok((csv, json))
}

/// Reads the matrix and, when present, its sidecar.
pub fn read_instance(prefix: &Path) -> Result<(NonnegMatrix, Option<InstanceMeta>)> {
    let (csv, json) = instance_paths(prefix);
    let x = read_matrix_csv(&csv)?;
    if !json.exists() {
        return Ok((x, None));
    }
    let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let meta: InstanceMeta = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: json.clone(),
        message: e.to_string(),
    })?;
    if meta.n != x.rows() || meta.m != x.cols() {
        return Err(Error::Parse {
            path: json,
            message: format!(
                "sidecar says {}x{}, matrix is {}x{}",
                meta.n,
                meta.m,
                x.rows(),
                x.cols()
            ),
        });
    }
    Ok((x, Some(meta)))
}

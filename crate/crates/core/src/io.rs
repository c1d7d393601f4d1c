//! Artifact files: labelled float tables (TSV), JSON documents, the model
//! checkpoint and the analysis CSVs.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a
//! file back yields bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analyze::{QuantileReport, ShiftMatrix};
use crate::graphembed::SageModel;
use crate::{Error, Result};

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Labelled rows of floats: `label\tv0\tv1…`, preceded by a header line.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelledTable {
    pub columns: Vec<String>,
    pub labels: Vec<String>,
    pub values: Array2<f64>,
}

impl LabelledTable {
    pub fn new(columns: Vec<String>, labels: Vec<String>, values: Array2<f64>) -> Self {
        assert_eq!(columns.len(), values.ncols() + 1);
        assert_eq!(labels.len(), values.nrows());
        LabelledTable {
            columns,
            labels,
            values,
        }
    }

    /// Columns named `{prefix}0`, `{prefix}1`, … after the label column.
    pub fn numbered(label: &str, prefix: &str, labels: Vec<String>, values: Array2<f64>) -> Self {
        let mut columns = vec![label.to_string()];
        columns.extend((0..values.ncols()).map(|j| format!("{prefix}{j}")));
        Self::new(columns, labels, values)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for (label, row) in self.labels.iter().zip(self.values.rows()) {
            out.push_str(label);
            for v in row {
                write!(out, "\t{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_tsv())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines();
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| err(1, "missing header".into()))?
            .split('\t')
            .map(String::from)
            .collect();
        let width = columns.len() - 1;
        let mut labels = Vec::new();
        let mut data = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            labels.push(fields.next().unwrap().to_string());
            let before = data.len();
            for f in fields {
                data.push(f.parse::<f64>().map_err(|e| err(i + 2, format!("{f:?}: {e}")))?);
            }
            if data.len() - before != width {
                return Err(err(
                    i + 2,
                    format!("expected {width} values, found {}", data.len() - before),
                ));
            }
        }
        let values = Array2::from_shape_vec((labels.len(), width), data).expect("row widths checked");
        Ok(LabelledTable {
            columns,
            labels,
            values,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Matrix {
    rows: usize,
    cols: usize,
    /// Row-major.
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    layers: Vec<Matrix>,
}

const CHECKPOINT_FORMAT: &str = "graphsage-mean-v1";

/// Writes the layer matrices `W^k` as JSON with explicit shapes.
pub fn write_model(path: &Path, model: &SageModel) -> Result<()> {
    let layers = model
        .layers
        .iter()
        .map(|w| Matrix {
            rows: w.nrows(),
            cols: w.ncols(),
            data: w.iter().copied().collect(),
        })
        .collect();
    write_json(
        path,
        &Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            layers,
        },
    )
}

pub fn read_model(path: &Path) -> Result<SageModel> {
    let ck: Checkpoint = read_json(path)?;
    if ck.format != CHECKPOINT_FORMAT {
        return Err(Error::Invalid(format!("unsupported checkpoint format {:?}", ck.format)));
    }
    let layers = ck
        .layers
        .into_iter()
        .map(|m| {
            Array2::from_shape_vec((m.rows, m.cols), m.data)
                .map_err(|e| Error::Invalid(format!("checkpoint layer: {e}")))
        })
        .collect::<Result<_>>()?;
    Ok(SageModel { layers })
}

/// `decile,d_min,d_max,count,mean_rate`.
pub fn deciles_csv(report: &QuantileReport) -> String {
    let mut out = String::from("decile,d_min,d_max,count,mean_rate\n");
    for g in &report.groups {
        writeln!(out, "{},{},{},{},{}", g.decile, g.d_min, g.d_max, g.count, g.mean_rate).unwrap();
    }
    out
}

/// One row per NBER subcategory, one column per distance bin.
pub fn shift_csv(shift: &ShiftMatrix) -> String {
    let mut out = String::from("subcategory,category");
    for b in 0..shift.bins.len() {
        write!(out, ",bin{}", b + 1).unwrap();
    }
    out.push('\n');
    for (sub, row) in shift.subcategories.iter().zip(&shift.values) {
        write!(out, "{},{}", sub.code(), sub.category().label()).unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

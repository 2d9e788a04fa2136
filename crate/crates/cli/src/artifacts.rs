//! CSV and JSON sidecar files. Every file is written relative to an output
//! root and recorded so the manifest can list it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinladder::kernel::Kernel;
use spinladder::spectral::Histogram;
use spinladder::TimeSeries;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Series,
    Prediction,
    Kernel,
    Histogram,
    Matrix,
    Fit,
    Feasibility,
    Plot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: ArtifactKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Rung index for single-rung series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rung: Option<usize>,
}

pub struct Writer {
    root: PathBuf,
    written: Vec<Artifact>,
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Header and rows of a numeric CSV file.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::format(path, format!("row {}: {e}", line + 2)))?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let (_, rows) = read_csv(path)?;
    if rows.len() < 2 {
        return Err(CliError::format(path, "need at least two samples"));
    }
    let dt = rows[1][0] - rows[0][0];
    TimeSeries::new(dt, rows.iter().map(|r| r[1]).collect()).map_err(|e| CliError::format(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

impl Writer {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            written: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn into_artifacts(self) -> Vec<Artifact> {
        self.written
    }

    fn record(
        &mut self,
        rel: &str,
        kind: ArtifactKind,
        lambda: Option<f64>,
        rung: Option<usize>,
    ) -> PathBuf {
        self.written.push(Artifact {
            path: rel.to_owned(),
            kind,
            lambda,
            rung,
        });
        self.root.join(rel)
    }

    pub fn series(
        &mut self,
        rel: &str,
        kind: ArtifactKind,
        lambda: Option<f64>,
        rung: Option<usize>,
        s: &TimeSeries,
    ) -> Result<()> {
        let path = self.record(rel, kind, lambda, rung);
        write_csv(
            &path,
            &["t", "value"],
            s.times().zip(&s.samples).map(|(t, &x)| vec![t, x]),
        )
    }

    pub fn kernel(&mut self, rel: &str, lambda: f64, k: &Kernel) -> Result<()> {
        let path = self.record(rel, ArtifactKind::Kernel, Some(lambda), None);
        write_csv(
            &path,
            &["tau", "K"],
            k.samples
                .iter()
                .enumerate()
                .map(|(n, &x)| vec![n as f64 * k.dt, x]),
        )
    }

    pub fn histogram(&mut self, rel: &str, lambda: Option<f64>, h: &Histogram) -> Result<()> {
        let path = self.record(rel, ArtifactKind::Histogram, lambda, None);
        write_csv(
            &path,
            &["bin_center", "value"],
            h.values
                .iter()
                .enumerate()
                .map(|(i, &v)| vec![h.center(i), v]),
        )
    }

    /// Real matrix entries as `row,col,re,im`.
    pub fn matrix(&mut self, rel: &str, entries: &[(usize, usize, f64)]) -> Result<()> {
        let path = self.record(rel, ArtifactKind::Matrix, None, None);
        write_csv(
            &path,
            &["row", "col", "re", "im"],
            entries
                .iter()
                .map(|&(r, c, v)| vec![r as f64, c as f64, v, 0.0]),
        )
    }

    pub fn json<T: Serialize>(
        &mut self,
        rel: &str,
        kind: ArtifactKind,
        lambda: Option<f64>,
        value: &T,
    ) -> Result<()> {
        let path = self.record(rel, kind, lambda, None);
        write_json(&path, value)
    }

    pub fn table(&mut self, rel: &str, header: &[&str], rows: Vec<Vec<f64>>) -> Result<()> {
        let path = self.record(rel, ArtifactKind::Plot, None, None);
        write_csv(&path, header, rows.into_iter())
    }
}

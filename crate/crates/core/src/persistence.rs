//! On-disk formats.
//!
//! A dataset is a CSV file (`gamma1,beta1_1,beta1_2,...` header, one row per
//! run, 17 significant digits) plus a `<stem>.manifest.json` sidecar that
//! carries the provenance and the SHA-256 of the CSV bytes. Analysis tables
//! are small CSVs with a label column followed by one column per component or
//! perplexity; missing cells are written as `n/a`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::MaxCutProblem;
use crate::linalg::Matrix;
use crate::optimizer::{DatasetMetadata, ExperimentDataset, ShcrrConfig};
use crate::qaoa::{ParameterVector, QaoaConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_SUFFIX: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub problem: MaxCutProblem,
    pub qaoa: QaoaConfig,
    pub shcrr: ShcrrConfig,
    pub runs: usize,
    pub master_seed: u64,
    pub run_seeds: Vec<u64>,
    pub best_values: Vec<f64>,
    pub restart_indices: Vec<usize>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub created_unix: u64,
    pub dataset_file: String,
    pub dataset_sha256: String,
}

impl ExperimentManifest {
    pub fn metadata(&self) -> DatasetMetadata {
        DatasetMetadata {
            problem: self.problem.clone(),
            qaoa: self.qaoa,
            shcrr: self.shcrr,
            runs: self.runs,
            master_seed: self.master_seed,
            run_seeds: self.run_seeds.clone(),
            best_values: self.best_values.clone(),
            restart_indices: self.restart_indices.clone(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `runs/foo.csv` -> `runs/foo.manifest.json`.
pub fn manifest_path(dataset_path: &Path) -> PathBuf {
    let stem = dataset_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    dataset_path.with_file_name(format!("{stem}.{MANIFEST_SUFFIX}"))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty output path"),
        ));
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn creation_time() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        return epoch;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn format_exact(x: f64) -> String {
    format!("{x:.16e}")
}

fn dataset_csv(dataset: &ExperimentDataset) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_io = |e: csv::Error| Error::Numeric(format!("csv encoding failed: {e}"));
    w.write_record(dataset.column_names()).map_err(to_io)?;
    for row in dataset.matrix.iter_rows() {
        w.write_record(row.iter().map(|&v| format_exact(v)))
            .map_err(to_io)?;
    }
    w.into_inner()
        .map_err(|e| Error::Numeric(format!("csv encoding failed: {e}")))
}

/// Writes the dataset CSV at `path` and its manifest next to it.
pub fn save_dataset(dataset: &ExperimentDataset, path: &Path) -> Result<ExperimentManifest> {
    let bytes = dataset_csv(dataset)?;
    let meta = &dataset.metadata;
    let manifest = ExperimentManifest {
        schema_version: SCHEMA_VERSION,
        problem: meta.problem.clone(),
        qaoa: meta.qaoa,
        shcrr: meta.shcrr,
        runs: meta.runs,
        master_seed: meta.master_seed,
        run_seeds: meta.run_seeds.clone(),
        best_values: meta.best_values.clone(),
        restart_indices: meta.restart_indices.clone(),
        created_unix: creation_time(),
        dataset_file: path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        dataset_sha256: sha256_hex(&bytes),
    };
    write_atomic(path, &bytes)?;
    let mut json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Numeric(format!("manifest encoding failed: {e}")))?;
    json.push(b'\n');
    write_atomic(&manifest_path(path), &json)?;
    Ok(manifest)
}

pub fn load_manifest(dataset_path: &Path) -> Result<ExperimentManifest> {
    let mpath = manifest_path(dataset_path);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;

    #[derive(Deserialize)]
    struct Version {
        schema_version: u32,
    }
    let parse_err = |e: serde_json::Error| Error::Parse {
        path: mpath.clone(),
        line: e.line() as u64,
        message: e.to_string(),
    };
    let version: Version = serde_json::from_str(&text).map_err(parse_err)?;
    if version.schema_version != SCHEMA_VERSION {
        return Err(Error::UnsupportedSchema {
            path: mpath,
            found: version.schema_version,
            supported: SCHEMA_VERSION,
        });
    }
    serde_json::from_str(&text).map_err(parse_err)
}

fn parse_dataset_csv(path: &Path, bytes: &[u8], manifest: &ExperimentManifest) -> Result<Matrix> {
    let parse = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);

    let header = reader
        .headers()
        .map_err(|e| parse(1, e.to_string()))?
        .clone();
    let expected = ParameterVector::column_names(manifest.qaoa.depth);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse(
            1,
            format!(
                "header {:?} does not match expected columns {expected:?}",
                header.iter().collect::<Vec<_>>()
            ),
        ));
    }

    let dims = expected.len();
    let mut data = Vec::with_capacity(manifest.runs * dims);
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse(line, format!("invalid number {field:?}")))?;
            data.push(v);
        }
        rows += 1;
    }
    if rows != manifest.runs {
        return Err(parse(
            rows as u64 + 1,
            format!("expected {} data rows, found {rows}", manifest.runs),
        ));
    }
    Matrix::from_vec(rows, dims, data)
}

/// Loads a dataset saved by [`save_dataset`], verifying schema and hash.
pub fn load_dataset(path: &Path) -> Result<ExperimentDataset> {
    let manifest = load_manifest(path)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let matrix = parse_dataset_csv(path, &bytes, &manifest)?;
    let actual = sha256_hex(&bytes);
    if actual != manifest.dataset_sha256 {
        return Err(Error::Corrupt {
            path: path.to_path_buf(),
            expected: manifest.dataset_sha256,
            actual,
        });
    }
    Ok(ExperimentDataset {
        matrix,
        metadata: manifest.metadata(),
    })
}

/// A label-by-column table of numbers, the layout used for explained
/// variance and KL divergence summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub corner: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

pub const MISSING_CELL: &str = "n/a";

impl SummaryTable {
    pub fn new(corner: impl Into<String>, columns: Vec<String>) -> Self {
        Self {
            corner: corner.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, label: impl Into<String>, cells: Vec<Option<f64>>) -> Result<()> {
        if cells.len() != self.columns.len() {
            return Err(Error::dim(self.columns.len(), cells.len()));
        }
        self.rows.push((label.into(), cells));
        Ok(())
    }

    /// Cells use eight decimals, the precision of the published tables.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header =
            std::iter::once(self.corner.as_str()).chain(self.columns.iter().map(String::as_str));
        w.write_record(header).expect("in-memory write");
        for (label, cells) in &self.rows {
            let cells = cells
                .iter()
                .map(|c| c.map_or_else(|| MISSING_CELL.to_string(), |v| format!("{v:.8}")));
            w.write_record(std::iter::once(label.clone()).chain(cells))
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }

    pub fn from_csv(path: &Path, bytes: &[u8]) -> Result<Self> {
        let parse = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut reader = csv::ReaderBuilder::new().from_reader(bytes);
        let header = reader
            .headers()
            .map_err(|e| parse(1, e.to_string()))?
            .clone();
        let mut fields = header.iter();
        let corner = fields.next().unwrap_or_default().to_string();
        let mut table = SummaryTable::new(corner, fields.map(str::to_string).collect());
        for record in reader.records() {
            let record =
                record.map_err(|e| parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let mut it = record.iter();
            let label = it.next().unwrap_or_default().to_string();
            let cells = it
                .map(|c| {
                    if c == MISSING_CELL {
                        Ok(None)
                    } else {
                        c.parse()
                            .map(Some)
                            .map_err(|_| parse(line, format!("invalid number {c:?}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            table
                .push_row(label, cells)
                .map_err(|e| parse(line, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "| {} | {} |\n",
            self.corner,
            self.columns.join(" | ")
        ));
        out.push_str(&format!("|{}\n", "---|".repeat(self.columns.len() + 1)));
        for (label, cells) in &self.rows {
            let cells: Vec<String> = cells
                .iter()
                .map(|c| c.map_or_else(|| MISSING_CELL.to_string(), |v| format!("{v:.8}")))
                .collect();
            out.push_str(&format!("| {} | {} |\n", label, cells.join(" | ")));
        }
        out
    }
}

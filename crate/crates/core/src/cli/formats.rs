//! On-disk formats.
//!
//! Binary matrices are raw little-endian `f64` in column-major order, with
//! their shape recorded in the referencing JSON. Text output uses 17
//! significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::ErrorGrid;
use crate::loewner::ParametricRealization;
use crate::models::{Dims, ParametricModel, Snapshot, SnapshotSet};
use crate::numkit::MatR;

pub const REALIZATION_FILE: &str = "realization.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const GRID_HEADER: &str = "omega,p,delta,formula,cond_estimate";

/// Writes `m` as little-endian `f64`, column by column.
pub fn write_matrix_bin(path: &Path, m: &MatR) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * m.nrows() * m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            bytes.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_matrix_bin(path: &Path, rows: usize, cols: usize) -> Result<MatR> {
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * rows * cols {
        return Err(Error::Dimension(format!(
            "{}: {} bytes, expected {} for a {rows}x{cols} matrix",
            path.display(),
            bytes.len(),
            8 * rows * cols
        )));
    }
    let value = |i: usize, j: usize| {
        let k = 8 * (j * rows + i);
        f64::from_le_bytes(bytes[k..k + 8].try_into().expect("8-byte chunk"))
    };
    Ok(Mat::from_fn(rows, cols, value))
}

/// Parses a dense matrix from text. Rows are separated by newlines or `;`,
/// entries by commas or whitespace. Lines starting with `#` are skipped.
pub fn parse_csv_matrix(text: &str) -> Result<MatR> {
    let rows: Vec<Vec<f64>> = text
        .split(['\n', ';'])
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            line.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("`{t}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Dimension(format!(
            "row {bad} has {} entries, row 0 has {cols}",
            rows[bad].len()
        )));
    }
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Where a matrix lives, relative to the JSON file that names it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRef {
    Binary { file: String, rows: usize, cols: usize },
    CsvFile { csv_file: String },
    Inline { csv: String },
}

impl MatrixRef {
    pub fn load(&self, base: &Path) -> Result<MatR> {
        match self {
            MatrixRef::Binary { file, rows, cols } => read_matrix_bin(&base.join(file), *rows, *cols),
            MatrixRef::CsvFile { csv_file } => parse_csv_matrix(&fs::read_to_string(base.join(csv_file))?),
            MatrixRef::Inline { csv } => parse_csv_matrix(csv),
        }
    }
}

/// Polynomial-coefficient model file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub n_i: usize,
    pub n_o: usize,
    #[serde(default)]
    pub degree: Option<usize>,
    pub gamma: Vec<MatrixRef>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub p: f64,
    pub g: MatrixRef,
}

/// Snapshot-only input: realization matrices at sampled parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub n: usize,
    pub n_i: usize,
    pub n_o: usize,
    pub snapshots: Vec<SnapshotEntry>,
}

/// Contents of an input file.
pub enum Source {
    Model(ParametricModel),
    Snapshots(SnapshotSet),
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Reads a model or snapshot file, telling them apart by the `gamma` and
/// `snapshots` keys.
pub fn load_source(path: &Path) -> Result<Source> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let base = base_dir(path);
    if value.get("gamma").is_some() {
        let file: ModelFile = serde_json::from_value(value)?;
        let gamma = file.gamma.iter().map(|g| g.load(&base)).collect::<Result<Vec<_>>>()?;
        if let Some(d) = file.degree {
            if d + 1 != gamma.len() {
                return Err(Error::InvalidInput(format!(
                    "degree {d} needs {} coefficients, file lists {}",
                    d + 1,
                    gamma.len()
                )));
            }
        }
        Ok(Source::Model(ParametricModel::new(Dims::new(file.n, file.n_i, file.n_o), gamma)?))
    } else if value.get("snapshots").is_some() {
        let file: SnapshotFile = serde_json::from_value(value)?;
        let snaps = file
            .snapshots
            .iter()
            .map(|s| Ok(Snapshot { p: s.p, g: s.g.load(&base)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Source::Snapshots(SnapshotSet::new(Dims::new(file.n, file.n_i, file.n_o), snaps)?))
    } else {
        Err(Error::InvalidInput(format!(
            "{}: expected a `gamma` (model) or `snapshots` key",
            path.display()
        )))
    }
}

/// Writes a model file with binary coefficients next to it.
pub fn save_model(path: &Path, model: &ParametricModel) -> Result<()> {
    let base = base_dir(path);
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let mut gamma = Vec::new();
    for (k, g) in model.gamma().iter().enumerate() {
        let file = format!("{stem}_gamma{k}.bin");
        write_matrix_bin(&base.join(&file), g)?;
        gamma.push(MatrixRef::Binary {
            file,
            rows: g.nrows(),
            cols: g.ncols(),
        });
    }
    let d = model.dims();
    let file = ModelFile {
        n: d.n,
        n_i: d.n_i,
        n_o: d.n_o,
        degree: Some(model.degree()),
        gamma,
    };
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BinFile {
    pub file: String,
    pub rows: usize,
    pub cols: usize,
}

/// Metadata of a saved realization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealizationMeta {
    pub r: usize,
    pub n: usize,
    pub n_i: usize,
    pub n_o: usize,
    pub storage: String,
    pub files: BTreeMap<String, BinFile>,
}

fn realization_parts(real: &ParametricRealization) -> [(&'static str, &MatR); 6] {
    [
        ("E", real.e()),
        ("A", real.a()),
        ("B", real.b()),
        ("C", real.c()),
        ("X", real.x()),
        ("Y", real.y()),
    ]
}

pub fn save_realization(dir: &Path, real: &ParametricRealization) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = BTreeMap::new();
    for (name, m) in realization_parts(real) {
        let file = format!("{name}.bin");
        write_matrix_bin(&dir.join(&file), m)?;
        files.insert(
            name.to_string(),
            BinFile {
                file,
                rows: m.nrows(),
                cols: m.ncols(),
            },
        );
    }
    let d = real.dims();
    let meta = RealizationMeta {
        r: real.rank(),
        n: d.n,
        n_i: d.n_i,
        n_o: d.n_o,
        storage: "f64 little-endian, column-major".into(),
        files,
    };
    fs::write(dir.join(REALIZATION_FILE), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn load_realization(dir: &Path) -> Result<ParametricRealization> {
    let meta: RealizationMeta = serde_json::from_str(&fs::read_to_string(dir.join(REALIZATION_FILE))?)?;
    let get = |name: &str| -> Result<MatR> {
        let f = meta
            .files
            .get(name)
            .ok_or_else(|| Error::InvalidInput(format!("{REALIZATION_FILE} lists no `{name}` matrix")))?;
        read_matrix_bin(&dir.join(&f.file), f.rows, f.cols)
    };
    let real = ParametricRealization::new(
        Dims::new(meta.n, meta.n_i, meta.n_o),
        get("E")?,
        get("A")?,
        get("B")?,
        get("C")?,
        get("X")?,
        get("Y")?,
    )?;
    if real.rank() != meta.r {
        return Err(Error::Dimension(format!(
            "{REALIZATION_FILE} says r = {}, matrices have r = {}",
            meta.r,
            real.rank()
        )));
    }
    Ok(real)
}

/// Record of an `interpolate` run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub source: String,
    pub n: usize,
    pub n_i: usize,
    pub n_o: usize,
    pub params: Vec<f64>,
    pub partition: PartitionRecord,
    /// `(rows, cols)` of `𝕃` and `𝕃ₛ`.
    pub pencil_shape: (usize, usize),
    pub eps: f64,
    pub truncation_rule: String,
    pub r: usize,
    pub r_column: usize,
    pub r_literal: usize,
    pub rank_override: Option<usize>,
    /// Singular values of `[𝕃 𝕃ₛ]`.
    pub singular_values_row: Vec<f64>,
    /// Singular values of `[𝕃; 𝕃ₛ]`.
    pub singular_values_col: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub left_indices: Vec<usize>,
    pub right_indices: Vec<usize>,
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
}

/// `{:.16e}`, i.e. 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with one row per cell, frequency as the outer index. Failed cells
/// carry `NaN` and an empty formula.
pub fn write_grid_csv<W: Write>(mut w: W, grid: &ErrorGrid) -> Result<()> {
    writeln!(w, "{GRID_HEADER}")?;
    for (omega, p, cell) in grid.iter() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(omega),
            fmt_f64(p),
            fmt_f64(cell.delta),
            cell.formula.map_or("", |f| f.as_str()),
            fmt_f64(cell.cond_estimate)
        )?;
    }
    Ok(())
}

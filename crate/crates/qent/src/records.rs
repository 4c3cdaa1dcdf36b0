//! JSONL record stream: a header line, per-state records, and a marker after
//! each completed cell.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qent_core::complexity::Chi0Recipe;
use qent_core::entangle::LogBase;
use qent_core::models::Model;
use qent_core::spectral::OmegaNormalization;

use crate::config::Config;
use crate::error::{Error, Result};

pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub tool: String,
    pub tool_version: String,
    pub config: Config,
}

impl Header {
    pub fn new(config: &Config) -> Self {
        Self {
            version: RECORD_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
        }
    }
}

/// One eigenstate of one realization in one sweep cell.
///
/// `delta_e`, `ipr_paper` and `omega_e` are the cell-level values that enter
/// `lambda`; `ipr_std` is the state's own participation ratio. Entropies are
/// in `log_base`; `Q` is in its square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub cell: usize,
    #[serde(flatten)]
    pub model: Model,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub gamma: f64,
    #[serde(rename = "E_target")]
    pub e_target: f64,
    pub realization_index: u64,
    pub state_index: usize,
    pub energy: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub renyi2: f64,
    pub log_base: LogBase,
    pub delta_e: f64,
    pub ipr_paper: f64,
    pub ipr_std: f64,
    pub omega_e: f64,
    pub estimator_name: String,
    pub omega_normalization: OmegaNormalization,
    pub y_minus_y0: f64,
    pub y_prefactor: String,
    pub lambda: f64,
    pub n_lambda: f64,
    pub lambda_e: f64,
    pub chi0_recipe: Chi0Recipe,
    pub recipe_mismatch: bool,
    pub seed_used: u64,
}

impl ExperimentRecord {
    /// Swept parameter: `b` for the QREM, `h` for the RFHM.
    pub fn param(&self) -> f64 {
        match self.model {
            Model::Qrem { b } => b,
            Model::Rfhm { h, .. } => h,
            Model::GenericGaussian { .. } => f64::NAN,
        }
    }

    /// Curve label: model and size, then the target energy for the QREM or
    /// `D` for the RFHM.
    pub fn label(&self) -> String {
        match self.model {
            Model::Rfhm { d, .. } => format!("RFHM L={} D={}", self.l, d),
            _ => format!("{} L={} E={}", self.model.name(), self.l, self.e_target),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDone {
    pub cell: usize,
    pub records: usize,
    pub realizations: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Line {
    Header(Header),
    Record(ExperimentRecord),
    CellDone(CellDone),
}

/// Contents of a record file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordFile {
    pub header: Option<Header>,
    pub records: Vec<ExperimentRecord>,
    pub done: Vec<CellDone>,
    /// Byte length of the prefix ending with the last `cell_done` line (or
    /// the header when no cell finished).
    pub complete_len: u64,
}

impl RecordFile {
    /// Records of completed cells only.
    pub fn completed_records(&self) -> Vec<ExperimentRecord> {
        let done: std::collections::BTreeSet<usize> = self.done.iter().map(|d| d.cell).collect();
        self.records
            .iter()
            .filter(|r| done.contains(&r.cell))
            .cloned()
            .collect()
    }
}

pub fn read(path: &Path) -> Result<RecordFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut out = RecordFile::default();
    let mut offset = 0u64;
    let mut line_no = 0;
    let mut buf = String::new();
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        offset += n as u64;
        if !buf.ends_with('\n') {
            // Torn final line from an interrupted run.
            break;
        }
        let text = buf.trim();
        if text.is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: line_no,
            source,
        })?;
        match line {
            Line::Header(h) => {
                if out.header.is_some() {
                    return Err(format_error(path, format!("second header at line {line_no}")));
                }
                if h.version != RECORD_VERSION {
                    return Err(format_error(path, format!("unsupported record version {}", h.version)));
                }
                out.header = Some(h);
                out.complete_len = offset;
            }
            Line::Record(r) => out.records.push(r),
            Line::CellDone(d) => {
                out.done.push(d);
                out.complete_len = offset;
            }
        }
    }
    if out.header.is_none() && line_no > 0 {
        return Err(format_error(path, "missing header line".into()));
    }
    Ok(out)
}

fn format_error(path: &Path, reason: String) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason,
    }
}

/// Appending JSONL writer.
pub struct Writer {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl Writer {
    /// Starts a new file with `header`, replacing any existing one.
    pub fn create(path: &Path, header: &Header) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Self {
            path: path.to_path_buf(),
            inner: BufWriter::new(file),
        };
        w.write(&Line::Header(header.clone()))?;
        w.flush()?;
        Ok(w)
    }

    /// Reopens `path`, dropping everything after byte `keep`.
    pub fn resume(path: &Path, keep: u64) -> Result<Self> {
        let mut file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        file.set_len(keep).map_err(|e| Error::io(path, e))?;
        file.seek(SeekFrom::End(0)).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner: BufWriter::new(file),
        })
    }

    pub fn write(&mut self, line: &Line) -> Result<()> {
        serde_json::to_writer(&mut self.inner, line).map_err(|source| Error::Json {
            path: self.path.clone(),
            line: 0,
            source,
        })?;
        self.inner.write_all(b"\n").map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

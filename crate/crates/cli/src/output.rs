//! CSV writers, the run manifest and file digests.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV writer with a mandatory header and `\n` line endings.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(path: PathBuf, header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).map_err(|e| csv_error(&path, e))?;
        Ok(Self { path, writer })
    }

    pub fn row<I, S>(&mut self, cells: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(cells).map_err(|e| csv_error(&self.path, e))
    }

    pub fn finish(self) -> CliResult<PathBuf> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| CliError::input(&self.path, e.to_string()))?;
        write_bytes(&self.path, &bytes)?;
        Ok(self.path)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::input(path, e.to_string())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serialises");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Long-format rows `t, xi, re, im`.
pub fn field_rows(table: &mut Table, t: f64, xi: &[f64], values: &[C64]) -> CliResult<()> {
    let ts = num(t);
    for (x, z) in xi.iter().zip(values) {
        table.row([ts.as_str(), &num(*x), &num(z.re), &num(z.im)])?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> CliResult<FileDigest> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileDigest {
        name: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Digests of every regular file in `dir` except the manifest, by name.
pub fn inventory(dir: &Path) -> CliResult<Vec<FileDigest>> {
    let mut paths = vec![];
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && path.file_name().is_some_and(|n| n != MANIFEST) {
            paths.push(path);
        }
    }
    paths.sort();
    paths.iter().map(|p| digest_file(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub base_state: serde_json::Value,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(
        command: &str,
        config: serde_json::Value,
        base_state: serde_json::Value,
        wall_clock_seconds: f64,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            base_state,
            wall_clock_seconds,
            files: vec![],
        }
    }

    /// Take the inventory of `dir` and write the manifest into it.
    pub fn write(mut self, dir: &Path) -> CliResult<Self> {
        self.files = inventory(dir)?;
        write_json(&dir.join(MANIFEST), &self)?;
        Ok(self)
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::input(&path, e.to_string()))
    }

    /// Names of files whose digest no longer matches, or that disappeared.
    pub fn stale_files(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| digest_file(&dir.join(&f.name)).map(|d| d != **f).unwrap_or(true))
            .map(|f| f.name.clone())
            .collect()
    }
}

/// A complex number as `{re, im}` in JSON reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Long-format field file, grouped by time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub times: Vec<f64>,
    pub xi: Vec<f64>,
    /// `values[time][node]`
    pub values: Vec<Vec<C64>>,
}

impl FieldTable {
    pub fn read(path: &Path) -> CliResult<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if header.iter().collect::<Vec<_>>() != ["t", "xi", "re", "im"] {
            return Err(CliError::input(path, "expected columns t, xi, re, im"));
        }
        let mut times: Vec<f64> = vec![];
        let mut xi: Vec<f64> = vec![];
        let mut values: Vec<Vec<C64>> = vec![];
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let cell = |k: usize| -> CliResult<f64> {
                record[k]
                    .trim()
                    .parse()
                    .map_err(|_| CliError::input(path, format!("row {}: `{}` is not a number", line + 2, &record[k])))
            };
            let (t, x, re, im) = (cell(0)?, cell(1)?, cell(2)?, cell(3)?);
            if times.last() != Some(&t) {
                if times.last().is_some_and(|&last| t < last) {
                    return Err(CliError::input(
                        path,
                        format!("row {}: times are not ascending", line + 2),
                    ));
                }
                times.push(t);
                values.push(vec![]);
            }
            let row = values.last_mut().expect("time pushed");
            if times.len() == 1 {
                xi.push(x);
            } else if xi.get(row.len()) != Some(&x) {
                return Err(CliError::input(
                    path,
                    format!("row {}: nodes differ between times", line + 2),
                ));
            }
            row.push(C64::new(re, im));
        }
        if times.is_empty() {
            return Err(CliError::input(path, "no data rows"));
        }
        if values.iter().any(|r| r.len() != xi.len()) {
            return Err(CliError::input(path, "incomplete time slice"));
        }
        Ok(Self { times, xi, values })
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let mut best = 0;
        for (j, node) in self.xi.iter().enumerate() {
            if (node - x).abs() < (self.xi[best] - x).abs() {
                best = j;
            }
        }
        best
    }

    pub fn series(&self, j: usize) -> Vec<(f64, C64)> {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, row)| (t, row[j]))
            .collect()
    }
}
